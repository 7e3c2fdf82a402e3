#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qpeuler/qp_field.hpp"

namespace qpeuler {

/// Uniform grid on the M-torus with nodes (j_1,...,j_M)/G, enumerated
/// lexicographically with the last index fastest (row-major).
class TorusGrid {
public:
  /// Throws ConfigError for G < 2 or node count above the budget (2^24).
  TorusGrid(int dim, int points_per_dim);

  /// Default composition grid for a box: G = next power of two >= 2(2K+1),
  /// which resolves every stored torus frequency with >= 2x oversampling.
  static TorusGrid for_mode_set(const ModeSet& ms);

  int dim() const { return dim_; }
  int points_per_dim() const { return points_; }
  std::int64_t node_count() const { return count_; }
  /// Writes the dim() coordinates of node `index` into theta.
  void node(std::int64_t index, double* theta) const;

private:
  int dim_;
  int points_;
  std::int64_t count_;
};

/// phi = id + f with quasi-periodic displacement f and certified Jacobian
/// margin: a sampled lower bound for det(Id + [df]) that must be positive.
class QPDiffeo {
public:
  /// Placeholder with no mode set (like QPScalar()); assign a made diffeo
  /// before use.
  QPDiffeo() = default;

  static QPDiffeo identity(ModeSetPtr ms);

  /// Certifies margin = jacobian_margin(displacement, grid); SolverAbort when
  /// the margin is not positive (the map left the represented class).
  /// Displacement must be real-valued.
  static QPDiffeo make(QPVectorField displacement, const TorusGrid& grid);

  const QPVectorField& displacement() const { return f_; }
  double margin() const { return margin_; }
  const ModeSetPtr& mode_set() const { return f_.mode_set(); }

  /// phi(x) = x + f(x).
  Eigen::VectorXd apply(std::span<const double> x) const;

private:
  QPDiffeo(QPVectorField f, double margin) : f_(std::move(f)), margin_(margin) {}

  QPVectorField f_;
  double margin_ = 0.0;
};

/// Minimum over grid nodes of det(I_n + [dF](theta) Omega), the Jacobian
/// determinant of id + f expressed through the torus-side Jacobian [dF].
/// May be <= 0 (that is the report, not an error). As a self-check the
/// Sylvester identity det(I_M + Omega [dF]) = det(I_n + [dF] Omega) is
/// verified at 8 fixed-seed random nodes to 1e-11.
double jacobian_margin(const QPVectorField& displacement, const TorusGrid& grid);

/// Galerkin re-projection of a composition is not exact; every composition
/// reports the max-norm residual between the resampled result and the raw
/// samples it was built from. Callers compare against their threshold
/// (default 1e-6) and treat breaches as warnings.
inline constexpr double kDefaultAliasingThreshold = 1e-6;

struct ComposedScalar {
  QPScalar field;
  double aliasing_residual = 0.0;
};
struct ComposedField {
  QPVectorField field;
  double aliasing_residual = 0.0;
};

/// g o phi: samples g's torus lift at the displaced nodes Phi(theta_j) by
/// direct summation, then recovers box coefficients by the grid DFT.
ComposedScalar compose_field(const QPScalar& g, const QPDiffeo& phi, const TorusGrid& grid);
ComposedField compose_field(const QPVectorField& g, const QPDiffeo& phi, const TorusGrid& grid);

struct ComposedDiffeo {
  QPDiffeo diffeo;
  double aliasing_residual = 0.0;
};

/// psi o phi = id + (f + g o phi); margin recomputed on the grid.
ComposedDiffeo compose_diffeo(const QPDiffeo& psi, const QPDiffeo& phi, const TorusGrid& grid);

struct InvertedDiffeo {
  QPDiffeo inverse;
  /// max |phi(phi^{-1}(x)) - x|_inf over 100 fixed-seed random points.
  double round_trip_residual = 0.0;
  double aliasing_residual = 0.0;
  int max_newton_iterations = 0;
};

/// phi^{-1} = id + g with g(theta) = -F(sigma(theta)) where sigma solves
/// sigma + Omega F(sigma) = theta (mod 1) per grid node by damped Newton
/// (initial guess theta - Omega F(theta), up to 8 step halvings).
/// SolverAbort on Newton failure at any node or non-positive inverse margin.
InvertedDiffeo invert(const QPDiffeo& phi, const TorusGrid& grid,
                      double newton_tol = 1e-12, int max_iter = 50);

/// The lift Phi(theta) = theta + Omega F(theta) materialized on a grid;
/// stores the displacement samples (Omega F(theta_j)) mod 1.
class TorusDiffeo {
public:
  TorusDiffeo(QPDiffeo source, const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  const QPDiffeo& source() const { return source_; }
  /// Row-major per node: dim() = M reals each, in [0, 1).
  const std::vector<double>& displacement_samples() const { return samples_; }

  /// Phi(theta) mod 1, computed from the source coefficients (any theta).
  Eigen::VectorXd apply(const Eigen::VectorXd& theta) const;

private:
  QPDiffeo source_;
  TorusGrid grid_;
  std::vector<double> samples_;
};

TorusDiffeo lift(const QPDiffeo& phi, const TorusGrid& grid);

/// Max over grid nodes of the torus distance between the lift of psi o phi
/// and the node-wise composition of the two lifts.
double homomorphism_check(const QPDiffeo& psi, const QPDiffeo& phi, const TorusGrid& grid);

}  // namespace qpeuler
