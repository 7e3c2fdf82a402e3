#pragma once

// Internal dense-coefficient kernels shared by qp_field.cpp and
// qp_operators.cpp. Not installed.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "qpeuler/freq_lattice.hpp"
#include "qpeuler/qp_field.hpp"

namespace qpeuler::detail {

/// Split-complex dense image of a scalar over the whole mode box.
struct DenseScalar {
  std::vector<double> re, im;
  void reset(std::int64_t count) {
    re.assign(static_cast<std::size_t>(count), 0.0);
    im.assign(static_cast<std::size_t>(count), 0.0);
  }
};

inline bool keep_coeff(double re, double im) {
  return std::abs(Complex(re, im)) >= kPruneThreshold;
}

void densify(const QPScalar& f, DenseScalar& out);
QPScalar sparsify(const ModeSetPtr& ms, const DenseScalar& d, bool real_valued);

/// acc += conv(f, g) restricted to the box. f sparse (ascending ordinals),
/// g dense. Every output coefficient accumulates its terms in ascending
/// f-mode order -- the property the bit-for-bit validation convolution relies
/// on.
void convolve_accumulate(const ModeSet& ms, std::span<const std::int64_t> f_idx,
                         std::span<const Complex> f_c, const DenseScalar& g,
                         DenseScalar& acc);

/// One fused pass over convolution pairs (m', m'') of w's union support,
/// accumulating both nonlinearities of the Euler right-hand side:
///   advect_j(m) += i (w(m') . Lambda(m'')) w_j(m'')
///   q(m)       += -(w(m') . Lambda(m'')) (Lambda(m') . w(m''))
/// Values equal advect()/quadratic() up to fp reassociation (tested).
void advect_quadratic_fused(const ModeSet& ms,
                            std::span<const std::int64_t> union_idx,
                            const std::vector<DenseScalar>& w,
                            std::vector<DenseScalar>& advect_acc, DenseScalar& q_acc);

/// Ascending union of the component supports.
std::vector<std::int64_t> union_support(const QPVectorField& u);

}  // namespace qpeuler::detail
