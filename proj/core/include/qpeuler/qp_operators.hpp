#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "qpeuler/qp_field.hpp"

namespace qpeuler {

/// Below this |Lambda_m| a nonzero mode counts as resonant and every operator
/// that divides by |Lambda_m|^2 refuses to run.
inline constexpr double kResonanceGuard = 1e-12;

/// Per-ModeSet multiplier data shared by the operators below; built lazily,
/// one instance per ModeSet (weak registry keyed by ModeSet::id()).
class MultiplierTable {
public:
  static std::shared_ptr<const MultiplierTable> get(const ModeSetPtr& ms);

  const ModeSetPtr& mode_set() const { return ms_; }

  /// 1/|Lambda_m|^2; 0 at m = 0 and at near-resonant modes. On the infinity
  /// block |Lambda_m| > 1, so entries there are < 1.
  double inv_lambda_sq(std::int64_t ordinal) const {
    return inv_lsq_[static_cast<std::size_t>(ordinal)];
  }
  const std::vector<double>& inv_lambda_sq_array() const { return inv_lsq_; }

  /// First ordinal other than the zero mode with |Lambda_m| < kResonanceGuard,
  /// or -1 when the box has none.
  std::int64_t near_zero_ordinal() const { return near_zero_; }

private:
  explicit MultiplierTable(ModeSetPtr ms);

  ModeSetPtr ms_;
  std::vector<double> inv_lsq_;
  std::int64_t near_zero_ = -1;
};

/// Coefficient masking onto {|Lambda_m| <= 1} and its complement;
/// project_bullet(f) + project_infty(f) = f coefficient-exact.
QPScalar project_bullet(const QPScalar& f);
QPScalar project_infty(const QPScalar& f);
QPVectorField project_bullet(const QPVectorField& w);
QPVectorField project_infty(const QPVectorField& w);

/// Inverse Laplacian on the infinity block: coefficients -f_m/|Lambda_m|^2.
/// Input must be infinity-supported; a bullet-class coefficient with modulus
/// > 1e-14 is a ConfigError (smaller ones are dropped as noise).
QPScalar inv_laplace_infty(const QPScalar& f);
QPVectorField inv_laplace_infty(const QPVectorField& w);

/// The bounded multiplier family Delta^{-1} grad div: component j receives
/// sum_k (Lambda_j Lambda_k / |Lambda|^2) w_k at m != 0 and 0 at m = 0.
/// Acts as the identity on gradient fields and annihilates divergence-free
/// ones. Errors (ResonanceError) when the box contains a near-resonant mode.
QPVectorField inv_laplace_grad_div(const QPVectorField& w);

/// D(w) = w . grad w, component j = sum_k multiply(w_k, d_k w_j).
QPVectorField advect(const QPVectorField& w);

/// Q(w) = tr([dw]^2) = sum_{j,k} multiply(d_j w_k, d_k w_j).
QPScalar quadratic(const QPVectorField& w);

/// Both nonlinearities from one fused pass over convolution pairs; values
/// equal advect(w)/quadratic(w) up to fp reassociation (tested at 1e-13).
/// The solver hot path uses this; the two literal operators stay the contract.
struct AdvectQuadratic {
  QPVectorField advect;
  QPScalar quadratic;
};
AdvectQuadratic advect_and_quadratic(const QPVectorField& w);

/// Pressure-gradient operator: inv_laplace_infty(project_infty(gradient(Q)))
/// + inv_laplace_grad_div(project_bullet(D)). Every component has exact zero
/// mean. pressure_gradient_from lets callers reuse precomputed D(w), Q(w).
QPVectorField pressure_gradient(const QPVectorField& w);
QPVectorField pressure_gradient_from(const QPVectorField& advect_w,
                                     const QPScalar& quadratic_w);

/// Mean-zero pressure of a divergence-free velocity: coefficients
/// -sum_{j,k} (Lambda_j Lambda_k / |Lambda|^2) (u_k u_j)_m at m != 0, so that
/// gradient(pressure_recover(u)) = -pressure_gradient(u) when div u = 0.
QPScalar pressure_recover(const QPVectorField& u);

/// w - inv_laplace_grad_div(w): divergence-free part of w; idempotent.
QPVectorField leray_project(const QPVectorField& w);

}  // namespace qpeuler
