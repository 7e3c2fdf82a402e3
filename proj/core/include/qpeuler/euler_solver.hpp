#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpeuler/qp_diffeo.hpp"
#include "qpeuler/qp_field.hpp"
#include "qpeuler/qp_operators.hpp"

namespace qpeuler {

struct EulerianState {
  double t = 0.0;
  QPVectorField u;
};

struct LagrangianState {
  double t = 0.0;
  QPVectorField v;  // Lagrangian velocity, v = u o phi
  QPDiffeo phi;     // flow map
};

/// Lagrangian inversion cadence. strict inverts phi at every RK4 stage;
/// per_step inverts once per accepted step and reuses the inverse across the
/// stages, trading an O(dt) consistency error inside the stages for a 4x cut
/// in inversion work (the converged step is still 4th order in the strict
/// sense only for `strict`).
enum class InversionPolicy { strict, per_step };

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double div_tol = 1e-10;
  /// Diagnostics cadence in steps (first and last rows always recorded).
  int energy_report_every = 1;
  /// Reported smoothness norm ||u||_{l,s}; an s at or below the Banach
  /// threshold M/2 (including the default 0) is bumped to M/2 + 0.5 at run
  /// start.
  NormParams norm{1, 0.0};

  /// Lagrangian / flow-map machinery. points_per_dim = 0 picks
  /// TorusGrid::for_mode_set.
  int grid_points_per_dim = 0;
  InversionPolicy inversion = InversionPolicy::strict;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double aliasing_threshold = kDefaultAliasingThreshold;
};

inline constexpr unsigned kFlagCflWarning = 1u;
inline constexpr unsigned kFlagAliasingWarning = 2u;

struct DiagnosticsRow {
  double t = 0.0;
  double energy = 0.0;
  double div_norm = 0.0;  // plain coefficient l2 of divergence(u)
  double norm_ls = 0.0;
  Eigen::VectorXcd momentum;  // the m = 0 coefficient vector
  unsigned flags = 0;
};

struct Diagnostics {
  std::vector<DiagnosticsRow> rows;
};

enum class RunStatus {
  ok,
  divergence_breach,
  nonfinite,
  margin_loss,
  newton_failure,
};

const char* to_string(RunStatus s);

struct EulerianRun {
  RunStatus status = RunStatus::ok;
  EulerianState state;  // final state, or the offending snapshot on abort
  Diagnostics diagnostics;
  std::string message;
};

struct LagrangianRun {
  RunStatus status = RunStatus::ok;
  LagrangianState state;
  Diagnostics diagnostics;  // evaluated on u = v o phi^{-1} at cadence
  double max_aliasing_residual = 0.0;
  std::string message;
};

/// Advective step-size guideline 0.5 / (max_m |Lambda_m| * sum_j ||u_j||_l1);
/// the l1 coefficient norm bounds sup |u|. Infinite for the zero field.
/// Exceeding it sets kFlagCflWarning on diagnostics rows, nothing more.
double cfl_guideline(const QPVectorField& u);

/// du/dt = -(u . grad)u - grad p: advection plus the closed-form pressure
/// gradient. Divergence-free input gives divergence-free output within the
/// truncation (the grad-div projector absorbs the advective divergence).
QPVectorField rhs_eulerian(const QPVectorField& u);

/// One classical four-stage explicit Runge-Kutta step.
EulerianState step_rk4(const EulerianState& state, double dt);

/// Fixed-step RK4 from state.t to t_end; the step count is rounded so the
/// final time lands exactly. Per step the state must stay finite and keep
/// ||div u||_0 <= div_tol; a violation stops the run with the offending
/// snapshot retained for post-mortem.
EulerianRun integrate(EulerianState state, const SolverConfig& config);

/// dv/dt = (pressure_gradient(v o phi^{-1})) o phi, evaluated literally:
/// inverts phi on the grid, conjugates, composes back. Accuracy is limited by
/// the composition aliasing residual.
QPVectorField rhs_lagrangian(const QPVectorField& v, const QPDiffeo& phi, const TorusGrid& grid);

/// RK4 on the coefficient pair (f, v), phi = id + f: df/dt = v exactly
/// (coefficient identity) and dv/dt as in rhs_lagrangian. Stage diffeos are
/// margin-certified; margin loss or Newton failure stops the run.
LagrangianRun integrate_lagrangian(LagrangianState state, const SolverConfig& config);

struct FlowMapRun {
  RunStatus status = RunStatus::ok;
  std::vector<double> times;
  std::vector<QPDiffeo> maps;  // maps[k] at times[k]; maps[0] = identity
  double max_aliasing_residual = 0.0;
  std::string message;
};

/// d(phi)/dt = u(t) o phi from phi(0) = id: RK4 on the displacement
/// coefficients, each stage composing through the current stage map.
/// u_at(t) supplies the velocity field on the same ModeSet.
FlowMapRun flow_map(const std::function<QPVectorField(double)>& u_at, ModeSetPtr ms,
                    const SolverConfig& config);

struct TrajectoryRun {
  RunStatus status = RunStatus::ok;
  std::vector<double> times;
  /// polylines[seed][step] is the n-vector position at times[step].
  std::vector<std::vector<Eigen::VectorXd>> polylines;
  std::string message;
};

/// Per-seed RK4 on dx/dt = u(t, x) by direct evaluation; pointwise in R^n, so
/// independent of flow_map's truncation of phi.
TrajectoryRun trajectories(const std::function<QPVectorField(double)>& u_at,
                           const std::vector<Eigen::VectorXd>& seeds, const SolverConfig& config);

struct LagrangianCoeff {
  Eigen::VectorXcd value;  // per-component coefficient of u = v o phi^{-1} at m
  /// sup-norm bound on the dropped exponential-series tail,
  /// sum_{r > order} ||(Lambda_m, f)||_l1^r / r!.
  double tail_bound = 0.0;
};

/// Coefficient of u = v o phi^{-1} at mode m without inverting phi: the
/// Besicovitch pairing of v e^{-i(Lambda_m, f)} against e^{i(Lambda_m, .)},
/// read as the mode-m coefficient of the product field. The exponential is a
/// truncated power series of the scalar (Lambda_m, f); powers are re-projected
/// to the box each multiplication. Throws ToleranceBreach when the series
/// tail bound exceeds tail_tol.
LagrangianCoeff fourier_coeff_lagrangian(const QPVectorField& v, const QPDiffeo& phi,
                                         const ModeIndex& m, int series_order = 12,
                                         double tail_tol = 1e-9);

}  // namespace qpeuler
