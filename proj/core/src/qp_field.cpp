#include "qpeuler/qp_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "qpeuler/errors.hpp"
#include "field_kernels.hpp"

namespace qpeuler {

void validate_norm_params(const NormParams& p, int M) {
  if (p.l < 0) throw ConfigError("norm parameter l must be >= 0, got " + std::to_string(p.l));
  if (!(p.s > 0.5 * M)) {
    throw ConfigError("norm parameter s must exceed M/2 = " + std::to_string(0.5 * M) +
                      ", got " + std::to_string(p.s));
  }
}

namespace {

void require_same_mode_set(const QPScalar& f, const QPScalar& g) {
  if (f.mode_set().get() != g.mode_set().get()) {
    throw ConfigError("operands must share one ModeSet instance");
  }
}

bool prune_keep(const Complex& c) { return std::abs(c) >= kPruneThreshold; }

}  // namespace

QPScalar QPScalar::zero(ModeSetPtr ms, bool real_valued) {
  return QPScalar(std::move(ms), {}, {}, real_valued);
}

QPScalar QPScalar::constant(ModeSetPtr ms, double value) {
  if (std::abs(value) < kPruneThreshold) return zero(std::move(ms));
  const std::int64_t z = ms->zero_ordinal();
  return QPScalar(std::move(ms), {z}, {Complex(value, 0.0)}, true);
}

QPScalar QPScalar::from_modes(ModeSetPtr ms,
                              const std::vector<std::pair<ModeIndex, Complex>>& entries) {
  std::map<std::int64_t, Complex> raw;
  for (const auto& [m, c] : entries) {
    const std::int64_t o = ms->ordinal(m);
    if (o < 0) throw ConfigError("mode index outside the |m|_inf <= K box");
    if (!raw.emplace(o, c).second) throw ConfigError("duplicate mode index in entries");
  }
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  idx.reserve(raw.size());
  coeffs.reserve(raw.size());
  for (const auto& [o, c] : raw) {
    const auto partner = raw.find(ms->negated(o));
    const Complex mirrored = partner == raw.end() ? Complex(0.0, 0.0) : std::conj(partner->second);
    if (std::abs(c - mirrored) > kRealityTol) {
      throw ConfigError("coefficients violate Hermitian symmetry beyond 1e-14 at a stored mode; "
                        "real fields need conj-symmetric entries");
    }
    const Complex sym = 0.5 * (c + mirrored);
    if (prune_keep(sym)) {
      idx.push_back(o);
      coeffs.push_back(sym);
    }
  }
  return QPScalar(std::move(ms), std::move(idx), std::move(coeffs), true);
}

QPScalar QPScalar::from_modes_complex(ModeSetPtr ms,
                                      const std::vector<std::pair<ModeIndex, Complex>>& entries) {
  std::map<std::int64_t, Complex> raw;
  for (const auto& [m, c] : entries) {
    const std::int64_t o = ms->ordinal(m);
    if (o < 0) throw ConfigError("mode index outside the |m|_inf <= K box");
    if (!raw.emplace(o, c).second) throw ConfigError("duplicate mode index in entries");
  }
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  for (const auto& [o, c] : raw) {
    if (prune_keep(c)) {
      idx.push_back(o);
      coeffs.push_back(c);
    }
  }
  return QPScalar(std::move(ms), std::move(idx), std::move(coeffs), false);
}

QPScalar QPScalar::from_sorted(ModeSetPtr ms, std::vector<std::int64_t> ordinals,
                               std::vector<Complex> coeffs, bool real_valued) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < ordinals.size(); ++i) {
    if (prune_keep(coeffs[i])) {
      ordinals[out] = ordinals[i];
      coeffs[out] = coeffs[i];
      ++out;
    }
  }
  ordinals.resize(out);
  coeffs.resize(out);
  return QPScalar(std::move(ms), std::move(ordinals), std::move(coeffs), real_valued);
}

Complex QPScalar::coeff(const ModeIndex& m) const {
  const std::int64_t o = ms_->ordinal(m);
  if (o < 0) return {0.0, 0.0};
  return coeff_at(o);
}

Complex QPScalar::coeff_at(std::int64_t ordinal) const {
  const auto it = std::lower_bound(idx_.begin(), idx_.end(), ordinal);
  if (it == idx_.end() || *it != ordinal) return {0.0, 0.0};
  return c_[static_cast<std::size_t>(it - idx_.begin())];
}

double QPScalar::coeff_l1() const {
  double s = 0.0;
  for (const Complex& c : c_) s += std::abs(c);
  return s;
}

namespace {

template <typename Combine>
QPScalar merge_sorted(const QPScalar& f, const QPScalar& g, bool real_valued, Combine comb) {
  auto fi = f.ordinals();
  auto gi = g.ordinals();
  auto fc = f.coeffs();
  auto gc = g.coeffs();
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  idx.reserve(fi.size() + gi.size());
  coeffs.reserve(fi.size() + gi.size());
  std::size_t a = 0, b = 0;
  while (a < fi.size() || b < gi.size()) {
    std::int64_t o;
    Complex c;
    if (b >= gi.size() || (a < fi.size() && fi[a] < gi[b])) {
      o = fi[a];
      c = comb(fc[a], Complex(0.0, 0.0));
      ++a;
    } else if (a >= fi.size() || gi[b] < fi[a]) {
      o = gi[b];
      c = comb(Complex(0.0, 0.0), gc[b]);
      ++b;
    } else {
      o = fi[a];
      c = comb(fc[a], gc[b]);
      ++a;
      ++b;
    }
    idx.push_back(o);
    coeffs.push_back(c);
  }
  return QPScalar::from_sorted(f.mode_set(), std::move(idx), std::move(coeffs), real_valued);
}

}  // namespace

QPScalar add(const QPScalar& f, const QPScalar& g) {
  require_same_mode_set(f, g);
  return merge_sorted(f, g, f.real_valued() && g.real_valued(),
                      [](Complex a, Complex b) { return a + b; });
}

QPScalar sub(const QPScalar& f, const QPScalar& g) {
  require_same_mode_set(f, g);
  return merge_sorted(f, g, f.real_valued() && g.real_valued(),
                      [](Complex a, Complex b) { return a - b; });
}

QPScalar axpy(const QPScalar& f, double a, const QPScalar& g) {
  require_same_mode_set(f, g);
  return merge_sorted(f, g, f.real_valued() && g.real_valued(),
                      [a](Complex x, Complex y) { return x + a * y; });
}

QPScalar scale(const QPScalar& f, double a) {
  std::vector<std::int64_t> idx(f.ordinals().begin(), f.ordinals().end());
  std::vector<Complex> coeffs(f.coeffs().begin(), f.coeffs().end());
  for (Complex& c : coeffs) c *= a;
  return QPScalar::from_sorted(f.mode_set(), std::move(idx), std::move(coeffs), f.real_valued());
}

QPScalar scale(const QPScalar& f, Complex a) {
  std::vector<std::int64_t> idx(f.ordinals().begin(), f.ordinals().end());
  std::vector<Complex> coeffs(f.coeffs().begin(), f.coeffs().end());
  for (Complex& c : coeffs) c *= a;
  const bool real = f.real_valued() && a.imag() == 0.0;
  return QPScalar::from_sorted(f.mode_set(), std::move(idx), std::move(coeffs), real);
}

QPScalar multiply(const QPScalar& f, const QPScalar& g) {
  require_same_mode_set(f, g);
  const ModeSetPtr& ms = f.mode_set();
  if (f.support_size() == 0 || g.support_size() == 0) {
    return QPScalar::zero(ms, f.real_valued() && g.real_valued());
  }
  detail::DenseScalar gd, acc;
  detail::densify(g, gd);
  acc.reset(ms->size());
  detail::convolve_accumulate(*ms, f.ordinals(), f.coeffs(), gd, acc);
  return detail::sparsify(ms, acc, f.real_valued() && g.real_valued());
}

QPScalar partial_derivative(const QPScalar& f, const std::vector<int>& beta) {
  const ModeSetPtr& ms = f.mode_set();
  if (static_cast<int>(beta.size()) != ms->n()) {
    throw ConfigError("multi-index length must equal n = " + std::to_string(ms->n()));
  }
  for (int b : beta) {
    if (b < 0) throw ConfigError("multi-index entries must be >= 0");
  }
  std::vector<std::int64_t> idx(f.ordinals().begin(), f.ordinals().end());
  std::vector<Complex> coeffs(f.coeffs().begin(), f.coeffs().end());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Complex mult(1.0, 0.0);
    for (int k = 0; k < ms->n(); ++k) {
      const Complex ilk(0.0, ms->lambda_component(idx[i], k));
      for (int r = 0; r < beta[static_cast<std::size_t>(k)]; ++r) mult *= ilk;
    }
    coeffs[i] *= mult;
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), f.real_valued());
}

QPScalar partial_derivative(const QPScalar& f, int direction) {
  const ModeSetPtr& ms = f.mode_set();
  if (direction < 0 || direction >= ms->n()) throw ConfigError("derivative direction out of range");
  std::vector<std::int64_t> idx(f.ordinals().begin(), f.ordinals().end());
  std::vector<Complex> coeffs(f.coeffs().begin(), f.coeffs().end());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    coeffs[i] *= Complex(0.0, ms->lambda_component(idx[i], direction));
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), f.real_valued());
}

Complex evaluate_complex(const QPScalar& f, std::span<const double> x) {
  const ModeSetPtr& ms = f.mode_set();
  if (static_cast<int>(x.size()) != ms->n()) {
    throw ConfigError("evaluation point dimension must equal n = " + std::to_string(ms->n()));
  }
  Complex acc(0.0, 0.0);
  const auto idx = f.ordinals();
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double phase = 0.0;
    for (int k = 0; k < ms->n(); ++k) phase += ms->lambda_component(idx[i], k) * x[static_cast<std::size_t>(k)];
    acc += c[i] * Complex(std::cos(phase), std::sin(phase));
  }
  return acc;
}

double evaluate(const QPScalar& f, std::span<const double> x) {
  return evaluate_complex(f, x).real();  // imaginary residue <= 1e-12 * sum|f_m| for real fields
}

double norm(const QPScalar& f, const NormParams& p) {
  const ModeSetPtr& ms = f.mode_set();
  validate_norm_params(p, ms->M());
  double s = 0.0;
  const auto idx = f.ordinals();
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double wl = 1.0;
    const double lsq1 = 1.0 + ms->lambda_norm_sq(idx[i]);
    for (int r = 0; r < p.l; ++r) wl *= lsq1;
    const double wm = std::pow(1.0 + ms->mode_norm_sq(idx[i]), p.s);
    s += std::norm(c[i]) * wl * wm;
  }
  return std::sqrt(s);
}

double besicovitch_inner(const QPScalar& f, const QPScalar& g) {
  require_same_mode_set(f, g);
  auto fi = f.ordinals();
  auto gi = g.ordinals();
  auto fc = f.coeffs();
  auto gc = g.coeffs();
  Complex acc(0.0, 0.0);
  std::size_t a = 0, b = 0;
  while (a < fi.size() && b < gi.size()) {
    if (fi[a] < gi[b]) {
      ++a;
    } else if (gi[b] < fi[a]) {
      ++b;
    } else {
      acc += fc[a] * std::conj(gc[b]);
      ++a;
      ++b;
    }
  }
  return acc.real();
}

Complex bilinear_pairing(const QPScalar& f, const QPScalar& g) {
  require_same_mode_set(f, g);
  auto fi = f.ordinals();
  auto fc = f.coeffs();
  Complex acc(0.0, 0.0);
  for (std::size_t i = 0; i < fi.size(); ++i) {
    acc += fc[i] * g.coeff_at(f.mode_set()->negated(fi[i]));
  }
  return acc;
}

BoxAverageResult box_average_coefficient(const QPScalar& f, const ModeIndex& m, double T,
                                         std::int64_t quad_points) {
  const ModeSetPtr& ms = f.mode_set();
  if (!(T > 0.0)) throw ConfigError("box half-width T must be > 0");
  if (quad_points < 2) throw ConfigError("need at least 2 quadrature subintervals");
  const int n = ms->n();
  const Eigen::VectorXd lam_query = ms->omega().lambda(m);

  // Integrand frequencies per direction: kappa = Lambda_{m'} - Lambda_m.
  const auto idx = f.ordinals();
  const auto co = f.coeffs();
  Eigen::VectorXd kappa_max = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int k = 0; k < n; ++k) {
      kappa_max(k) = std::max(kappa_max(k),
                              std::abs(ms->lambda_component(idx[i], k) - lam_query(k)));
    }
  }

  const std::int64_t N = quad_points % 2 == 0 ? quad_points : quad_points + 1;
  const double h = 2.0 * T / static_cast<double>(N);

  BoxAverageResult res;
  res.min_points_per_period = std::numeric_limits<double>::infinity();
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  for (int k = 0; k < n; ++k) {
    if (kappa_max(k) > 0.0) {
      res.min_points_per_period =
          std::min(res.min_points_per_period, (kTwoPi / kappa_max(k)) / h);
    }
  }
  res.under_resolved = res.min_points_per_period < 8.0;

  // Composite Simpson, tensorized over directions; direct pointwise sums.
  std::vector<std::int64_t> t(static_cast<std::size_t>(n), 0);
  std::vector<double> x(static_cast<std::size_t>(n));
  Complex acc(0.0, 0.0);
  while (true) {
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      const std::int64_t tk = t[static_cast<std::size_t>(k)];
      x[static_cast<std::size_t>(k)] = -T + h * static_cast<double>(tk);
      const double wk = (tk == 0 || tk == N) ? 1.0 : (tk % 2 == 1 ? 4.0 : 2.0);
      w *= wk * h / 3.0;
    }
    double qphase = 0.0;
    for (int k = 0; k < n; ++k) qphase += lam_query(k) * x[static_cast<std::size_t>(k)];
    acc += w * evaluate_complex(f, x) * Complex(std::cos(qphase), -std::sin(qphase));

    int j = n - 1;
    for (; j >= 0; --j) {
      auto& tj = t[static_cast<std::size_t>(j)];
      if (tj < N) {
        ++tj;
        break;
      }
      tj = 0;
    }
    if (j < 0) break;
  }
  double vol = 1.0;
  for (int k = 0; k < n; ++k) vol *= 2.0 * T;
  res.value = acc / vol;
  return res;
}

QPVectorField QPVectorField::zero(ModeSetPtr ms, bool real_valued) {
  std::vector<QPScalar> comps;
  const int n = ms->n();
  comps.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) comps.push_back(QPScalar::zero(ms, real_valued));
  return QPVectorField(std::move(comps));
}

QPVectorField::QPVectorField(std::vector<QPScalar> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw ConfigError("vector field needs at least one component");
  const ModeSet* ms = comps_.front().mode_set().get();
  for (const auto& c : comps_) {
    if (c.mode_set().get() != ms) throw ConfigError("components must share one ModeSet instance");
  }
  if (static_cast<int>(comps_.size()) != ms->n()) {
    throw ConfigError("vector field needs n = " + std::to_string(ms->n()) + " components, got " +
                      std::to_string(comps_.size()));
  }
}

bool QPVectorField::real_valued() const {
  for (const auto& c : comps_) {
    if (!c.real_valued()) return false;
  }
  return true;
}

namespace {
template <typename Op>
QPVectorField component_wise(const QPVectorField& u, const QPVectorField& v, Op op) {
  if (u.dim() != v.dim()) throw ConfigError("vector fields must have equal dimension");
  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(u.dim()));
  for (int j = 0; j < u.dim(); ++j) comps.push_back(op(u[j], v[j]));
  return QPVectorField(std::move(comps));
}
}  // namespace

QPVectorField add(const QPVectorField& u, const QPVectorField& v) {
  return component_wise(u, v, [](const QPScalar& a, const QPScalar& b) { return add(a, b); });
}

QPVectorField sub(const QPVectorField& u, const QPVectorField& v) {
  return component_wise(u, v, [](const QPScalar& a, const QPScalar& b) { return sub(a, b); });
}

QPVectorField scale(const QPVectorField& u, double a) {
  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(u.dim()));
  for (int j = 0; j < u.dim(); ++j) comps.push_back(scale(u[j], a));
  return QPVectorField(std::move(comps));
}

QPVectorField axpy(const QPVectorField& u, double a, const QPVectorField& v) {
  return component_wise(u, v,
                        [a](const QPScalar& x, const QPScalar& y) { return axpy(x, a, y); });
}

QPScalar divergence(const QPVectorField& u) {
  QPScalar acc = partial_derivative(u[0], 0);
  for (int j = 1; j < u.dim(); ++j) acc = add(acc, partial_derivative(u[j], j));
  return acc;
}

QPVectorField gradient(const QPScalar& f) {
  std::vector<QPScalar> comps;
  const int n = f.mode_set()->n();
  comps.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) comps.push_back(partial_derivative(f, j));
  return QPVectorField(std::move(comps));
}

std::vector<std::vector<QPScalar>> jacobian(const QPVectorField& u) {
  std::vector<std::vector<QPScalar>> rows;
  rows.reserve(static_cast<std::size_t>(u.dim()));
  for (int i = 0; i < u.dim(); ++i) {
    std::vector<QPScalar> row;
    row.reserve(static_cast<std::size_t>(u.dim()));
    for (int j = 0; j < u.dim(); ++j) row.push_back(partial_derivative(u[i], j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd evaluate(const QPVectorField& u, std::span<const double> x) {
  Eigen::VectorXd v(u.dim());
  for (int j = 0; j < u.dim(); ++j) v(j) = evaluate(u[j], x);
  return v;
}

double norm(const QPVectorField& u, const NormParams& p) {
  double s = 0.0;
  for (int j = 0; j < u.dim(); ++j) {
    const double nj = norm(u[j], p);
    s += nj * nj;
  }
  return std::sqrt(s);
}

double averaged_energy(const QPVectorField& u) {
  double s = 0.0;
  for (int j = 0; j < u.dim(); ++j) {
    for (const Complex& c : u[j].coeffs()) s += std::norm(c);
  }
  return 0.5 * s;
}

Eigen::VectorXcd momentum(const QPVectorField& u) {
  Eigen::VectorXcd v(u.dim());
  const std::int64_t z = u.mode_set()->zero_ordinal();
  for (int j = 0; j < u.dim(); ++j) v(j) = u[j].coeff_at(z);
  return v;
}

double besicovitch_inner(const QPVectorField& u, const QPVectorField& v) {
  if (u.dim() != v.dim()) throw ConfigError("vector fields must have equal dimension");
  double s = 0.0;
  for (int j = 0; j < u.dim(); ++j) s += besicovitch_inner(u[j], v[j]);
  return s;
}

double max_abs_coeff(const QPVectorField& u) {
  double s = 0.0;
  for (int j = 0; j < u.dim(); ++j) {
    for (const Complex& c : u[j].coeffs()) s = std::max(s, std::abs(c));
  }
  return s;
}

double coeff_l1(const QPVectorField& u) {
  double s = 0.0;
  for (int j = 0; j < u.dim(); ++j) s += u[j].coeff_l1();
  return s;
}

namespace detail {

void densify(const QPScalar& f, DenseScalar& out) {
  out.reset(f.mode_set()->size());
  const auto idx = f.ordinals();
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.re[static_cast<std::size_t>(idx[i])] = c[i].real();
    out.im[static_cast<std::size_t>(idx[i])] = c[i].imag();
  }
}

QPScalar sparsify(const ModeSetPtr& ms, const DenseScalar& d, bool real_valued) {
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  const std::int64_t count = ms->size();
  for (std::int64_t i = 0; i < count; ++i) {
    const double re = d.re[static_cast<std::size_t>(i)];
    const double im = d.im[static_cast<std::size_t>(i)];
    if (keep_coeff(re, im)) {
      idx.push_back(i);
      coeffs.push_back(Complex(re, im));
    }
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), real_valued);
}

namespace {

// Geometry of the box walk for one fixed m': per-dimension ranges of m'' such
// that both m'' and m'+m'' stay in the box. The innermost dimension forms a
// contiguous ordinal run in both the dense operand and the accumulator.
struct PairWalk {
  int M = 0;
  std::int64_t side = 0;
  std::int32_t K = 0;
  std::array<std::int32_t, 16> mp{}, lo{}, hi{};
  std::array<std::int64_t, 16> stride{};

  // Decodes mp from ordinal o1; returns false when any range is empty.
  bool init(const ModeSet& ms, std::int64_t o1) {
    M = ms.M();
    K = static_cast<std::int32_t>(ms.K());
    side = 2 * static_cast<std::int64_t>(K) + 1;
    std::int64_t rem = o1;
    std::int64_t s = 1;
    for (int j = M - 1; j >= 0; --j) {
      stride[static_cast<std::size_t>(j)] = s;
      s *= side;
      mp[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(rem % side - K);
      rem /= side;
    }
    for (int j = 0; j < M; ++j) {
      const std::int32_t c = mp[static_cast<std::size_t>(j)];
      lo[static_cast<std::size_t>(j)] = std::max<std::int32_t>(-K, static_cast<std::int32_t>(-K - c));
      hi[static_cast<std::size_t>(j)] = std::min<std::int32_t>(K, static_cast<std::int32_t>(K - c));
      if (lo[static_cast<std::size_t>(j)] > hi[static_cast<std::size_t>(j)]) return false;
    }
    return true;
  }
};

}  // namespace

void convolve_accumulate(const ModeSet& ms, std::span<const std::int64_t> f_idx,
                         std::span<const Complex> f_c, const DenseScalar& g,
                         DenseScalar& acc) {
  const double* gre = g.re.data();
  const double* gim = g.im.data();
  double* are = acc.re.data();
  double* aim = acc.im.data();

  PairWalk w;
  std::array<std::int32_t, 16> q{};
  for (std::size_t fi = 0; fi < f_idx.size(); ++fi) {
    if (!w.init(ms, f_idx[fi])) continue;
    const double fr = f_c[fi].real();
    const double fim = f_c[fi].imag();
    const int L = w.M - 1;

    for (int j = 0; j < L; ++j) q[static_cast<std::size_t>(j)] = w.lo[static_cast<std::size_t>(j)];
    while (true) {
      std::int64_t gbase = 0, obase = 0;
      for (int j = 0; j < L; ++j) {
        const std::int64_t sj = w.stride[static_cast<std::size_t>(j)];
        gbase += (static_cast<std::int64_t>(q[static_cast<std::size_t>(j)]) + w.K) * sj;
        obase += (static_cast<std::int64_t>(q[static_cast<std::size_t>(j)]) +
                  w.mp[static_cast<std::size_t>(j)] + w.K) * sj;
      }
      const std::int32_t tlo = w.lo[static_cast<std::size_t>(L)];
      const std::int32_t thi = w.hi[static_cast<std::size_t>(L)];
      const std::int64_t gi0 = gbase + tlo + w.K;
      const std::int64_t oi0 = obase + w.mp[static_cast<std::size_t>(L)] + tlo + w.K;
      const std::int64_t len = static_cast<std::int64_t>(thi) - tlo + 1;
      for (std::int64_t t = 0; t < len; ++t) {
        const double br = gre[gi0 + t];
        const double bi = gim[gi0 + t];
        are[oi0 + t] += fr * br - fim * bi;
        aim[oi0 + t] += fr * bi + fim * br;
      }

      int j = L - 1;
      for (; j >= 0; --j) {
        auto& qj = q[static_cast<std::size_t>(j)];
        if (qj < w.hi[static_cast<std::size_t>(j)]) {
          ++qj;
          break;
        }
        qj = w.lo[static_cast<std::size_t>(j)];
      }
      if (j < 0) break;
    }
  }
}

std::vector<std::int64_t> union_support(const QPVectorField& u) {
  std::vector<std::int64_t> out;
  for (int j = 0; j < u.dim(); ++j) {
    std::vector<std::int64_t> merged;
    merged.reserve(out.size() + u[j].ordinals().size());
    std::set_union(out.begin(), out.end(), u[j].ordinals().begin(), u[j].ordinals().end(),
                   std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

namespace {

template <int N>
void fused_runs(const ModeSet& ms, std::span<const std::int64_t> union_idx,
                const std::vector<DenseScalar>& wd, std::vector<DenseScalar>& advect_acc,
                DenseScalar& q_acc) {
  const double* lam[N];
  const double* wre[N];
  const double* wim[N];
  double* adre[N];
  double* adim[N];
  for (int k = 0; k < N; ++k) {
    lam[k] = ms.lambda_array(k).data();
    wre[k] = wd[static_cast<std::size_t>(k)].re.data();
    wim[k] = wd[static_cast<std::size_t>(k)].im.data();
    adre[k] = advect_acc[static_cast<std::size_t>(k)].re.data();
    adim[k] = advect_acc[static_cast<std::size_t>(k)].im.data();
  }
  double* qre = q_acc.re.data();
  double* qim = q_acc.im.data();

  PairWalk w;
  std::array<std::int32_t, 16> q{};
  for (std::size_t ui = 0; ui < union_idx.size(); ++ui) {
    const std::int64_t o1 = union_idx[ui];
    if (!w.init(ms, o1)) continue;
    double wpre[N], wpim[N], lamp[N];
    for (int k = 0; k < N; ++k) {
      wpre[k] = wre[k][o1];
      wpim[k] = wim[k][o1];
      lamp[k] = lam[k][o1];
    }
    const int L = w.M - 1;
    for (int j = 0; j < L; ++j) q[static_cast<std::size_t>(j)] = w.lo[static_cast<std::size_t>(j)];
    while (true) {
      std::int64_t gbase = 0, obase = 0;
      for (int j = 0; j < L; ++j) {
        const std::int64_t sj = w.stride[static_cast<std::size_t>(j)];
        gbase += (static_cast<std::int64_t>(q[static_cast<std::size_t>(j)]) + w.K) * sj;
        obase += (static_cast<std::int64_t>(q[static_cast<std::size_t>(j)]) +
                  w.mp[static_cast<std::size_t>(j)] + w.K) * sj;
      }
      const std::int32_t tlo = w.lo[static_cast<std::size_t>(L)];
      const std::int32_t thi = w.hi[static_cast<std::size_t>(L)];
      const std::int64_t gi0 = gbase + tlo + w.K;
      const std::int64_t oi0 = obase + w.mp[static_cast<std::size_t>(L)] + tlo + w.K;
      const std::int64_t len = static_cast<std::int64_t>(thi) - tlo + 1;
      for (std::int64_t t = 0; t < len; ++t) {
        const std::int64_t gi = gi0 + t;
        const std::int64_t oi = oi0 + t;
        // d1 = w(m') . Lambda(m''), d2 = Lambda(m') . w(m'')
        double d1r = 0.0, d1i = 0.0, d2r = 0.0, d2i = 0.0;
        for (int k = 0; k < N; ++k) {
          const double lk = lam[k][gi];
          d1r += wpre[k] * lk;
          d1i += wpim[k] * lk;
          d2r += lamp[k] * wre[k][gi];
          d2i += lamp[k] * wim[k][gi];
        }
        // advect_j += (i d1) * w_j(m'')
        const double cr = -d1i;
        const double ci = d1r;
        for (int k = 0; k < N; ++k) {
          const double br = wre[k][gi];
          const double bi = wim[k][gi];
          adre[k][oi] += cr * br - ci * bi;
          adim[k][oi] += cr * bi + ci * br;
        }
        // Q += -(d1 * d2)
        qre[oi] -= d1r * d2r - d1i * d2i;
        qim[oi] -= d1r * d2i + d1i * d2r;
      }

      int j = L - 1;
      for (; j >= 0; --j) {
        auto& qj = q[static_cast<std::size_t>(j)];
        if (qj < w.hi[static_cast<std::size_t>(j)]) {
          ++qj;
          break;
        }
        qj = w.lo[static_cast<std::size_t>(j)];
      }
      if (j < 0) break;
    }
  }
}

}  // namespace

void advect_quadratic_fused(const ModeSet& ms, std::span<const std::int64_t> union_idx,
                            const std::vector<DenseScalar>& w,
                            std::vector<DenseScalar>& advect_acc, DenseScalar& q_acc) {
  switch (ms.n()) {
    case 1:
      fused_runs<1>(ms, union_idx, w, advect_acc, q_acc);
      break;
    case 2:
      fused_runs<2>(ms, union_idx, w, advect_acc, q_acc);
      break;
    case 3:
      fused_runs<3>(ms, union_idx, w, advect_acc, q_acc);
      break;
    case 4:
      fused_runs<4>(ms, union_idx, w, advect_acc, q_acc);
      break;
    default:
      throw ConfigError("fused advect/quadratic kernel supports n <= 4");
  }
}

}  // namespace detail

}  // namespace qpeuler
