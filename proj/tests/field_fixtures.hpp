#pragma once

// Shared test fixtures: small mode sets, seeded random real fields, and the
// steady cellular flow u = (sin(2 pi x1) cos(2 pi x2), -cos(2 pi x1) sin(2 pi x2))
// whose nonlinearity closes at four modes and is integrable by hand.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <qpeuler/freq_lattice.hpp>
#include <qpeuler/qp_field.hpp>
#include <qpeuler/qp_operators.hpp>

namespace qpeuler::testing {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kGolden = 1.6180339887498948482;

/// Omega = I_2: the periodic limit, coefficients live on e^{2 pi i m.x}.
inline ModeSetPtr unit_box(int K) {
  return ModeSet::build(FrequencyMatrix(Eigen::MatrixXd::Identity(2, 2)), K);
}

/// n = 1, M = 2 line lattice: Lambda_m = 2 pi (m1 + phi m2) / sqrt(1 + phi^2).
/// Small denominators appear at the Fibonacci convergents.
inline ModeSetPtr golden_line(int K) {
  Eigen::MatrixXd om(2, 1);
  om << 1.0, kGolden;
  om /= om.norm();
  return ModeSet::build(FrequencyMatrix(om), K);
}

/// n = 2, M = 3 canonical lattice with the golden direction.
inline ModeSetPtr canonical_golden(int K) {
  Eigen::VectorXd w(2);
  w << 1.0, kGolden;
  w /= w.norm();
  return ModeSet::build(FrequencyMatrix::canonical(2, w), K);
}

/// cos(Lambda_m0 . x): coefficients 1/2 at +-m0.
inline QPScalar cosine(const ModeSetPtr& ms, const ModeIndex& m0) {
  ModeIndex neg = m0;
  for (auto& d : neg) d = -d;
  return QPScalar::from_modes(ms, {{m0, {0.5, 0.0}}, {neg, {0.5, 0.0}}});
}

/// Seeded real scalar with Bernoulli-thinned support over the whole box.
inline QPScalar random_real_scalar(const ModeSetPtr& ms, std::uint64_t seed,
                                   double density = 0.4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  std::vector<std::pair<ModeIndex, Complex>> entries;
  for (std::int64_t o = 0; o < ms->size(); ++o) {
    const std::int64_t neg = ms->negated(o);
    if (o > neg) continue;
    if (!keep(rng)) continue;
    if (o == neg) {
      entries.emplace_back(ms->mode(o), Complex(unif(rng), 0.0));
    } else {
      const Complex c(unif(rng), unif(rng));
      entries.emplace_back(ms->mode(o), c);
      entries.emplace_back(ms->mode(neg), std::conj(c));
    }
  }
  return QPScalar::from_modes(ms, entries);
}

/// Random real vector field, one seeded scalar per component.
inline QPVectorField random_vector(const ModeSetPtr& ms, std::uint64_t seed,
                                   double density = 0.4) {
  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(ms->n()));
  for (int k = 0; k < ms->n(); ++k) {
    comps.push_back(random_real_scalar(ms, seed + 7919u * static_cast<std::uint64_t>(k + 1), density));
  }
  return QPVectorField(std::move(comps));
}

/// Random divergence-free field: Leray projection of random_vector.
inline QPVectorField random_solenoidal(const ModeSetPtr& ms, std::uint64_t seed,
                                       double density = 0.4) {
  return leray_project(random_vector(ms, seed, density));
}

/// Divergence-free field supported on |m|_inf <= band, leaving spectral
/// headroom in the box for products and compositions.
inline QPVectorField low_mode_solenoidal(const ModeSetPtr& ms, std::uint64_t seed, int band) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<QPScalar> comps;
  for (int k = 0; k < ms->n(); ++k) {
    std::vector<std::pair<ModeIndex, Complex>> entries;
    for (std::int64_t o = 0; o < ms->size(); ++o) {
      const std::int64_t neg = ms->negated(o);
      if (o >= neg) continue;  // strict: also skips the mean mode
      const ModeIndex m = ms->mode(o);
      bool in_band = true;
      for (int d : m) in_band = in_band && std::abs(d) <= band;
      if (!in_band) continue;
      const Complex c(unif(rng), unif(rng));
      entries.emplace_back(m, c);
      entries.emplace_back(ms->mode(neg), std::conj(c));
    }
    comps.push_back(QPScalar::from_modes(ms, entries));
  }
  return leray_project(QPVectorField(std::move(comps)));
}

/// The steady cellular flow on the unit 2-torus, built from raw coefficients:
/// u1 = sin(2 pi x1) cos(2 pi x2) -> -i/4 at (1,+-1), +i/4 at (-1,+-1);
/// u2 = -cos(2 pi x1) sin(2 pi x2) -> +i/4 at (+-1,1), -i/4 at (+-1,-1).
inline QPVectorField cell_flow(const ModeSetPtr& ms) {
  const Complex mi(0.0, -0.25);
  const Complex pi(0.0, 0.25);
  QPScalar u1 = QPScalar::from_modes(ms, {{ModeIndex{1, 1}, mi},
                                          {ModeIndex{1, -1}, mi},
                                          {ModeIndex{-1, 1}, pi},
                                          {ModeIndex{-1, -1}, pi}});
  QPScalar u2 = QPScalar::from_modes(ms, {{ModeIndex{1, 1}, pi},
                                          {ModeIndex{1, -1}, mi},
                                          {ModeIndex{-1, 1}, pi},
                                          {ModeIndex{-1, -1}, mi}});
  return QPVectorField(std::vector<QPScalar>{std::move(u1), std::move(u2)});
}

inline double max_coeff_delta(const QPScalar& a, const QPScalar& b) {
  double worst = 0.0;
  const QPScalar d = sub(a, b);
  for (const Complex& c : d.coeffs()) worst = std::max(worst, std::abs(c));
  return worst;
}

inline double max_coeff_delta(const QPVectorField& a, const QPVectorField& b) {
  return max_abs_coeff(sub(a, b));
}

}  // namespace qpeuler::testing
