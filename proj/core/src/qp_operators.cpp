#include "qpeuler/qp_operators.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "qpeuler/errors.hpp"
#include "field_kernels.hpp"

namespace qpeuler {

namespace {

std::string format_mode(const ModeSet& ms, std::int64_t ordinal) {
  const ModeIndex m = ms.mode(ordinal);
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < m.size(); ++j) os << (j ? "," : "") << m[j];
  os << ")";
  return os.str();
}

void require_no_resonance(const MultiplierTable& t) {
  if (t.near_zero_ordinal() >= 0) {
    throw ResonanceError("mode " + format_mode(*t.mode_set(), t.near_zero_ordinal()) +
                         " has |Lambda| < 1e-12; the frequency matrix is resonant "
                         "on this box");
  }
}

}  // namespace

MultiplierTable::MultiplierTable(ModeSetPtr ms) : ms_(std::move(ms)) {
  const std::int64_t count = ms_->size();
  const std::int64_t zero = ms_->zero_ordinal();
  inv_lsq_.assign(static_cast<std::size_t>(count), 0.0);
  const double guard_sq = kResonanceGuard * kResonanceGuard;
  for (std::int64_t o = 0; o < count; ++o) {
    const double lsq = ms_->lambda_norm_sq(o);
    if (o == zero) continue;
    if (lsq < guard_sq) {
      if (near_zero_ < 0) near_zero_ = o;
      continue;
    }
    inv_lsq_[static_cast<std::size_t>(o)] = 1.0 / lsq;
  }
}

std::shared_ptr<const MultiplierTable> MultiplierTable::get(const ModeSetPtr& ms) {
  static std::mutex mu;
  static std::unordered_map<std::uint64_t, std::weak_ptr<const MultiplierTable>> registry;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = registry[ms->id()];
  if (auto hit = slot.lock()) return hit;
  std::shared_ptr<const MultiplierTable> fresh(new MultiplierTable(ms));
  slot = fresh;
  return fresh;
}

namespace {

QPScalar mask_by_bullet(const QPScalar& f, bool keep_bullet) {
  const ModeSetPtr& ms = f.mode_set();
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  const auto in_idx = f.ordinals();
  const auto in_c = f.coeffs();
  for (std::size_t i = 0; i < in_idx.size(); ++i) {
    if (ms->bullet(in_idx[i]) == keep_bullet) {
      idx.push_back(in_idx[i]);
      coeffs.push_back(in_c[i]);
    }
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), f.real_valued());
}

template <typename Op>
QPVectorField component_map(const QPVectorField& w, Op op) {
  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(w.dim()));
  for (int j = 0; j < w.dim(); ++j) comps.push_back(op(w[j]));
  return QPVectorField(std::move(comps));
}

}  // namespace

QPScalar project_bullet(const QPScalar& f) { return mask_by_bullet(f, true); }
QPScalar project_infty(const QPScalar& f) { return mask_by_bullet(f, false); }

QPVectorField project_bullet(const QPVectorField& w) {
  return component_map(w, [](const QPScalar& f) { return project_bullet(f); });
}
QPVectorField project_infty(const QPVectorField& w) {
  return component_map(w, [](const QPScalar& f) { return project_infty(f); });
}

QPScalar inv_laplace_infty(const QPScalar& f) {
  const ModeSetPtr& ms = f.mode_set();
  const auto table = MultiplierTable::get(ms);
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  const auto in_idx = f.ordinals();
  const auto in_c = f.coeffs();
  for (std::size_t i = 0; i < in_idx.size(); ++i) {
    if (ms->bullet(in_idx[i])) {
      if (std::abs(in_c[i]) > 1e-14) {
        throw ConfigError("inv_laplace_infty input carries a bullet-block coefficient at mode " +
                          format_mode(*ms, in_idx[i]));
      }
      continue;
    }
    idx.push_back(in_idx[i]);
    coeffs.push_back(-in_c[i] * table->inv_lambda_sq(in_idx[i]));
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), f.real_valued());
}

QPVectorField inv_laplace_infty(const QPVectorField& w) {
  return component_map(w, [](const QPScalar& f) { return inv_laplace_infty(f); });
}

QPVectorField inv_laplace_grad_div(const QPVectorField& w) {
  const ModeSetPtr& ms = w.mode_set();
  const auto table = MultiplierTable::get(ms);
  require_no_resonance(*table);
  const int n = w.dim();
  const std::vector<std::int64_t> support = detail::union_support(w);

  std::vector<std::size_t> ptr(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<std::int64_t>> out_idx(static_cast<std::size_t>(n));
  std::vector<std::vector<Complex>> out_c(static_cast<std::size_t>(n));
  for (std::int64_t o : support) {
    // dot = sum_k Lambda_k w_k at this mode (components walked in lockstep).
    Complex dot(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      auto& pk = ptr[static_cast<std::size_t>(k)];
      const auto ord = w[k].ordinals();
      if (pk < ord.size() && ord[pk] == o) {
        dot += ms->lambda_component(o, k) * w[k].coeffs()[pk];
        ++pk;
      }
    }
    const double inv = table->inv_lambda_sq(o);
    if (inv == 0.0 || dot == Complex(0.0, 0.0)) continue;
    for (int j = 0; j < n; ++j) {
      const Complex v = ms->lambda_component(o, j) * inv * dot;
      out_idx[static_cast<std::size_t>(j)].push_back(o);
      out_c[static_cast<std::size_t>(j)].push_back(v);
    }
  }
  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    comps.push_back(QPScalar::from_sorted(ms, std::move(out_idx[static_cast<std::size_t>(j)]),
                                          std::move(out_c[static_cast<std::size_t>(j)]),
                                          w.real_valued()));
  }
  return QPVectorField(std::move(comps));
}

QPVectorField advect(const QPVectorField& w) {
  const int n = w.dim();
  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    QPScalar acc = QPScalar::zero(w.mode_set(), w.real_valued());
    for (int k = 0; k < n; ++k) {
      acc = add(acc, multiply(w[k], partial_derivative(w[j], k)));
    }
    comps.push_back(std::move(acc));
  }
  return QPVectorField(std::move(comps));
}

QPScalar quadratic(const QPVectorField& w) {
  const int n = w.dim();
  QPScalar acc = QPScalar::zero(w.mode_set(), w.real_valued());
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      acc = add(acc, multiply(partial_derivative(w[k], j), partial_derivative(w[j], k)));
    }
  }
  return acc;
}

AdvectQuadratic advect_and_quadratic(const QPVectorField& w) {
  const ModeSetPtr& ms = w.mode_set();
  const int n = w.dim();
  const bool real = w.real_valued();

  std::vector<detail::DenseScalar> wd(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) detail::densify(w[k], wd[static_cast<std::size_t>(k)]);
  std::vector<detail::DenseScalar> adv(static_cast<std::size_t>(n));
  for (auto& a : adv) a.reset(ms->size());
  detail::DenseScalar q;
  q.reset(ms->size());

  const std::vector<std::int64_t> support = detail::union_support(w);
  detail::advect_quadratic_fused(*ms, support, wd, adv, q);

  std::vector<QPScalar> comps;
  comps.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    comps.push_back(detail::sparsify(ms, adv[static_cast<std::size_t>(k)], real));
  }
  return AdvectQuadratic{QPVectorField(std::move(comps)), detail::sparsify(ms, q, real)};
}

QPVectorField pressure_gradient_from(const QPVectorField& advect_w,
                                     const QPScalar& quadratic_w) {
  const QPVectorField smooth_part =
      inv_laplace_infty(project_infty(gradient(quadratic_w)));
  const QPVectorField bullet_part = inv_laplace_grad_div(project_bullet(advect_w));
  return add(smooth_part, bullet_part);
}

QPVectorField pressure_gradient(const QPVectorField& w) {
  return pressure_gradient_from(advect(w), quadratic(w));
}

QPScalar pressure_recover(const QPVectorField& u) {
  const ModeSetPtr& ms = u.mode_set();
  const auto table = MultiplierTable::get(ms);
  require_no_resonance(*table);
  const int n = u.dim();

  detail::DenseScalar acc;
  acc.reset(ms->size());
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      const QPScalar prod = multiply(u[k], u[j]);
      const double weight = (j == k) ? 1.0 : 2.0;
      const auto idx = prod.ordinals();
      const auto c = prod.coeffs();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const double sym =
            weight * ms->lambda_component(idx[i], j) * ms->lambda_component(idx[i], k);
        acc.re[static_cast<std::size_t>(idx[i])] += sym * c[i].real();
        acc.im[static_cast<std::size_t>(idx[i])] += sym * c[i].imag();
      }
    }
  }

  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  const std::int64_t count = ms->size();
  for (std::int64_t o = 0; o < count; ++o) {
    const double inv = table->inv_lambda_sq(o);
    if (inv == 0.0) continue;
    const double re = -acc.re[static_cast<std::size_t>(o)] * inv;
    const double im = -acc.im[static_cast<std::size_t>(o)] * inv;
    if (detail::keep_coeff(re, im)) {
      idx.push_back(o);
      coeffs.push_back(Complex(re, im));
    }
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), u.real_valued());
}

QPVectorField leray_project(const QPVectorField& w) {
  return sub(w, inv_laplace_grad_div(w));
}

}  // namespace qpeuler
