#include "qpeuler/presets.hpp"

#include <cmath>
#include <random>
#include <utility>

#include "qpeuler/errors.hpp"
#include "qpeuler/qp_operators.hpp"

namespace qpeuler {

namespace {

ModeIndex unit_mode(int M, int dim, int value) {
  ModeIndex m(static_cast<std::size_t>(M), 0);
  m[static_cast<std::size_t>(dim)] = static_cast<std::int32_t>(value);
  return m;
}

}  // namespace

QPVectorField shear(ModeSetPtr ms, const std::vector<double>& cosine_amps) {
  if (ms->n() < 2) throw ConfigError("shear preset needs n >= 2");
  if (static_cast<int>(cosine_amps.size()) > ms->K()) {
    throw ConfigError("shear profile has more modes than the box (K = " +
                      std::to_string(ms->K()) + ")");
  }
  std::vector<std::pair<ModeIndex, Complex>> entries;
  for (std::size_t t = 1; t <= cosine_amps.size(); ++t) {
    const ModeIndex m = unit_mode(ms->M(), 1, static_cast<int>(t));
    const Eigen::VectorXd lam = ms->omega().lambda(m);
    if (std::abs(lam(0)) > 1e-12 * lam.norm()) {
      throw ConfigError("shear preset needs e_2 modes with zero first frequency component");
    }
    // cos = half weight on each of +-m; from_modes symmetrizes the mirror
    entries.emplace_back(m, Complex(0.5 * cosine_amps[t - 1], 0.0));
    entries.emplace_back(unit_mode(ms->M(), 1, -static_cast<int>(t)),
                         Complex(0.5 * cosine_amps[t - 1], 0.0));
  }
  std::vector<QPScalar> comps;
  comps.push_back(QPScalar::from_modes(ms, entries));
  for (int j = 1; j < ms->n(); ++j) comps.push_back(QPScalar::zero(ms));
  return QPVectorField(std::move(comps));
}

QPVectorField taylor_green(ModeSetPtr ms) {
  if (ms->n() < 2) throw ConfigError("taylor_green preset needs n >= 2");
  if (ms->K() < 1) throw ConfigError("taylor_green preset needs K >= 1");
  const int M = ms->M();
  const auto mode = [&](int a, int b) {
    ModeIndex m(static_cast<std::size_t>(M), 0);
    m[0] = static_cast<std::int32_t>(a);
    m[1] = static_cast<std::int32_t>(b);
    return m;
  };
  const Complex I(0.0, 1.0);
  std::vector<std::pair<ModeIndex, Complex>> e1{
      {mode(1, 1), -0.25 * I},
      {mode(1, -1), -0.25 * I},
      {mode(-1, 1), 0.25 * I},
      {mode(-1, -1), 0.25 * I},
  };
  std::vector<std::pair<ModeIndex, Complex>> e2{
      {mode(1, 1), 0.25 * I},
      {mode(1, -1), -0.25 * I},
      {mode(-1, 1), 0.25 * I},
      {mode(-1, -1), -0.25 * I},
  };
  std::vector<QPScalar> comps;
  comps.push_back(QPScalar::from_modes(ms, e1));
  comps.push_back(QPScalar::from_modes(ms, e2));
  for (int j = 2; j < ms->n(); ++j) comps.push_back(QPScalar::zero(ms));
  return QPVectorField(std::move(comps));
}

RandomDivfreeResult random_divfree(ModeSetPtr ms, int sub_box_K, std::uint64_t seed,
                                   double target_norm, double s) {
  if (sub_box_K < 1 || sub_box_K > ms->K()) {
    throw ConfigError("sub-box bound must lie in [1, K]");
  }
  if (!(target_norm > 0.0)) throw ConfigError("target norm must be positive");
  const NormParams np{0, s};
  validate_norm_params(np, ms->M());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Fill the first half of each Hermitian pair in ascending ordinal order,
  // component-major inside a mode, so the draw is order-deterministic.
  const int n = ms->n();
  std::vector<std::vector<std::int64_t>> idx(static_cast<std::size_t>(n));
  std::vector<std::vector<Complex>> coeffs(static_cast<std::size_t>(n));
  for (std::int64_t o = 0; o < ms->size(); ++o) {
    const std::int64_t neg = ms->negated(o);
    if (o >= neg) continue;
    const ModeIndex m = ms->mode(o);
    bool inside = true;
    for (const std::int32_t d : m) inside = inside && std::abs(d) <= sub_box_K;
    if (!inside) continue;
    for (int k = 0; k < n; ++k) {
      const double re = unit(rng);
      const double im = unit(rng);
      idx[static_cast<std::size_t>(k)].push_back(o);
      coeffs[static_cast<std::size_t>(k)].push_back(Complex(re, im));
    }
  }
  std::vector<QPScalar> comps;
  for (int k = 0; k < n; ++k) {
    auto& oid = idx[static_cast<std::size_t>(k)];
    auto& c = coeffs[static_cast<std::size_t>(k)];
    std::vector<std::int64_t> full;
    std::vector<Complex> fullc;
    full.reserve(2 * oid.size());
    for (std::size_t i = 0; i < oid.size(); ++i) {
      full.push_back(oid[i]);
      fullc.push_back(c[i]);
    }
    for (std::size_t i = oid.size(); i-- > 0;) {
      full.push_back(ms->negated(oid[i]));
      fullc.push_back(std::conj(c[i]));
    }
    comps.push_back(QPScalar::from_sorted(ms, std::move(full), std::move(fullc), true));
  }
  QPVectorField raw(std::move(comps));

  RandomDivfreeResult out{leray_project(raw), 0.0};
  out.projection_delta = max_abs_coeff(sub(raw, out.u));
  const double got = norm(out.u, np);
  if (!(got > 0.0)) throw ConfigError("random draw projected to zero; enlarge the sub-box");
  out.u = scale(out.u, target_norm / got);
  return out;
}

}  // namespace qpeuler
