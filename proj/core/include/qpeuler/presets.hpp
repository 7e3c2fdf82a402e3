#pragma once

#include <cstdint>
#include <vector>

#include "qpeuler/qp_field.hpp"

namespace qpeuler {

/// One-directional shear u = (g(x_2), 0, ...) with
/// g(x_2) = sum_t amps[t-1] cos(Lambda_{t e_2} . x). A steady Euler state:
/// both the advection and the pressure gradient vanish coefficient-exact.
/// Requires n >= 2 and a frequency matrix whose e_2 modes have no
/// first-coordinate frequency (canonical matrices qualify).
QPVectorField shear(ModeSetPtr ms, const std::vector<double>& cosine_amps);

/// The four-mode cellular field u = (sin L x_1 cos L x_2, -cos L x_1 sin L x_2)
/// placed on modes (+-1, +-1, 0, ...); with omega the 2x2 identity this is the
/// classical steady periodic vortex array (L = 2 pi). Requires n >= 2, K >= 1.
QPVectorField taylor_green(ModeSetPtr ms);

struct RandomDivfreeResult {
  QPVectorField u;
  /// max coefficient change made by the Leray projection of the raw draw.
  double projection_delta = 0.0;
};

/// Reproducible fuzz source: draws complex coefficients uniformly from the
/// unit square for every mode pair in the sub-box |m|_inf <= sub_box_K
/// (mean mode excluded), Hermitian by construction, Leray-projects, then
/// rescales so ||u||_{0,s} = target_norm. Identical (ms, sub_box_K, seed)
/// give bit-identical draws on one platform.
RandomDivfreeResult random_divfree(ModeSetPtr ms, int sub_box_K, std::uint64_t seed,
                                   double target_norm, double s);

}  // namespace qpeuler
