#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qpeuler/freq_lattice.hpp"

namespace qpeuler {

using Complex = std::complex<double>;
using ModeSetPtr = std::shared_ptr<const ModeSet>;

/// Weights of the coefficient norm: sum |f_m|^2 <Lambda_m>^{2l} <m>^{2s} with
/// <m> = sqrt(1+|m|^2), <Lambda_m> = sqrt(1+|Lambda_m|^2). Requires l >= 0 and
/// s > M/2 (strict; the Banach-algebra threshold), checked where M is known.
struct NormParams {
  int l = 0;
  double s = 0.0;
};

void validate_norm_params(const NormParams& p, int M);

/// Coefficients below this modulus are dropped after every operation.
inline constexpr double kPruneThreshold = 1e-15;
/// Allowed Hermitian asymmetry |f_m - conj(f_{-m})| in checked construction.
inline constexpr double kRealityTol = 1e-14;

/// Truncated Fourier series f(x) = sum_m f_m e^{i(Lambda_m, x)} over one
/// ModeSet box. Immutable; support stored sparse in ascending ordinal order.
/// real_valued() fields keep f_{-m} = conj(f_m); complex-mode fields (internal
/// intermediates such as e^{-i(Lambda_m, f)}) do not.
class QPScalar {
public:
  QPScalar() = default;

  static QPScalar zero(ModeSetPtr ms, bool real_valued = true);
  static QPScalar constant(ModeSetPtr ms, double value);

  /// Checked construction of a real-valued field: support must be closed
  /// under negation with conj-symmetric values within kRealityTol (else
  /// ConfigError); pairs are symmetrized (f_m + conj(f_{-m}))/2 and pruned.
  static QPScalar from_modes(ModeSetPtr ms,
                             const std::vector<std::pair<ModeIndex, Complex>>& entries);
  /// Complex-mode construction: no symmetry demanded, pruning only.
  static QPScalar from_modes_complex(ModeSetPtr ms,
                                     const std::vector<std::pair<ModeIndex, Complex>>& entries);
  /// Trusted path for operation outputs: ordinals strictly ascending and
  /// in-range; prunes, sets the flag, no symmetry check.
  static QPScalar from_sorted(ModeSetPtr ms, std::vector<std::int64_t> ordinals,
                              std::vector<Complex> coeffs, bool real_valued);

  const ModeSetPtr& mode_set() const { return ms_; }
  bool real_valued() const { return real_valued_; }
  std::int64_t support_size() const { return static_cast<std::int64_t>(idx_.size()); }
  std::span<const std::int64_t> ordinals() const { return idx_; }
  std::span<const Complex> coeffs() const { return c_; }

  /// Coefficient at m (0 if absent or outside the box).
  Complex coeff(const ModeIndex& m) const;
  Complex coeff_at(std::int64_t ordinal) const;  // binary search
  /// Sum of coefficient moduli (an upper bound for sup |f|).
  double coeff_l1() const;

private:
  QPScalar(ModeSetPtr ms, std::vector<std::int64_t> idx, std::vector<Complex> c,
           bool real_valued)
      : ms_(std::move(ms)), idx_(std::move(idx)), c_(std::move(c)), real_valued_(real_valued) {}

  ModeSetPtr ms_;
  std::vector<std::int64_t> idx_;  // ascending ordinals
  std::vector<Complex> c_;
  bool real_valued_ = true;
};

QPScalar add(const QPScalar& f, const QPScalar& g);
QPScalar sub(const QPScalar& f, const QPScalar& g);
QPScalar scale(const QPScalar& f, double a);
QPScalar scale(const QPScalar& f, Complex a);
/// f + a*g in one pass (the RK4 update primitive).
QPScalar axpy(const QPScalar& f, double a, const QPScalar& g);

/// Exact convolution (fg)_m = sum_{m'+m''=m} f_{m'} g_{m''} over the stored
/// supports, Galerkin-restricted to the box (pair sums outside are dropped),
/// pruned at kPruneThreshold. The outer summation runs over f's support in
/// ascending mode order, so every output coefficient accumulates its terms in
/// ascending-m' order; the validation convolution in the oracle module mirrors
/// that order to compare bit-for-bit.
QPScalar multiply(const QPScalar& f, const QPScalar& g);

/// Coefficient-wise (i Lambda_m)^beta, beta a multi-index over directions.
QPScalar partial_derivative(const QPScalar& f, const std::vector<int>& beta);
QPScalar partial_derivative(const QPScalar& f, int direction);

/// Direct summation sum f_m e^{i(Lambda_m,x)}; for real-valued f the
/// imaginary residue must stay below 1e-12 * sum|f_m| and is discarded.
double evaluate(const QPScalar& f, std::span<const double> x);
Complex evaluate_complex(const QPScalar& f, std::span<const double> x);

/// Weighted l2 norm (sum |f_m|^2 <Lambda_m>^{2l} <m>^{2s})^{1/2}.
double norm(const QPScalar& f, const NormParams& p);

/// Besicovitch pairing (f,g)_0 = sum f_m conj(g_m); equals the large-box
/// average of f*conj(g). Real output (the imaginary residue of real-valued
/// inputs is discarded).
double besicovitch_inner(const QPScalar& f, const QPScalar& g);
/// Complex bilinear pairing <f,g>_0 = sum_m f_m g_{-m}.
Complex bilinear_pairing(const QPScalar& f, const QPScalar& g);

struct BoxAverageResult {
  Complex value{0.0, 0.0};
  /// True when some direction resolves the fastest oscillation with fewer
  /// than 8 quadrature points per period (warning-level; value still valid).
  bool under_resolved = false;
  double min_points_per_period = 0.0;
};

/// Numerical box average (2T)^{-n} integral_{[-T,T]^n} f(x) e^{-i(Lambda_m,x)} dx
/// by composite Simpson with quad_points subintervals per direction
/// (rounded up to even). Converges to the stored coefficient at O(1/T) for
/// non-resonant Omega. Cost O(quad_points^n * support).
BoxAverageResult box_average_coefficient(const QPScalar& f, const ModeIndex& m,
                                         double T, std::int64_t quad_points);

/// Velocity-type field with n = ModeSet::n() components over one ModeSet.
class QPVectorField {
public:
  QPVectorField() = default;
  static QPVectorField zero(ModeSetPtr ms, bool real_valued = true);
  explicit QPVectorField(std::vector<QPScalar> components);

  const ModeSetPtr& mode_set() const { return comps_.front().mode_set(); }
  int dim() const { return static_cast<int>(comps_.size()); }
  const QPScalar& operator[](int j) const { return comps_[static_cast<std::size_t>(j)]; }
  const std::vector<QPScalar>& components() const { return comps_; }
  bool real_valued() const;

private:
  std::vector<QPScalar> comps_;
};

QPVectorField add(const QPVectorField& u, const QPVectorField& v);
QPVectorField sub(const QPVectorField& u, const QPVectorField& v);
QPVectorField scale(const QPVectorField& u, double a);
QPVectorField axpy(const QPVectorField& u, double a, const QPVectorField& v);

QPScalar divergence(const QPVectorField& u);
QPVectorField gradient(const QPScalar& f);
/// jacobian(u)[i][j] = d u_i / d x_j.
std::vector<std::vector<QPScalar>> jacobian(const QPVectorField& u);

Eigen::VectorXd evaluate(const QPVectorField& u, std::span<const double> x);
double norm(const QPVectorField& u, const NormParams& p);
/// E(u) = (1/2) sum_m |u_m|^2 (vector modulus).
double averaged_energy(const QPVectorField& u);
/// The m = 0 coefficient vector (conserved momentum).
Eigen::VectorXcd momentum(const QPVectorField& u);
double besicovitch_inner(const QPVectorField& u, const QPVectorField& v);
/// max_j max_m |u_{j,m}| (coefficient sup).
double max_abs_coeff(const QPVectorField& u);
/// sum_j sum_m |u_{j,m}| (an upper bound for sup_x |u|_inf).
double coeff_l1(const QPVectorField& u);

}  // namespace qpeuler
