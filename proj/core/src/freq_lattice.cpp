#include "qpeuler/freq_lattice.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "qpeuler/errors.hpp"

namespace qpeuler {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t next_mode_set_id() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace

FrequencyMatrix::FrequencyMatrix(Eigen::MatrixXd omega) : omega_(std::move(omega)) {
  const int M = static_cast<int>(omega_.rows());
  const int n = static_cast<int>(omega_.cols());
  if (n < 1 || M < n) {
    throw ConfigError("omega must be M x n with M >= n >= 1, got " +
                      std::to_string(M) + " x " + std::to_string(n));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(omega_);
  const auto& sv = svd.singularValues();
  if (sv(n - 1) <= 1e-12 * sv(0)) {
    throw ConfigError("omega is rank-deficient: singular values " +
                      std::to_string(sv(0)) + " .. " + std::to_string(sv(n - 1)));
  }
}

FrequencyMatrix FrequencyMatrix::canonical(int n, const Eigen::VectorXd& omega_unit) {
  if (n < 1 || omega_unit.size() != n) {
    throw ConfigError("canonical omega: need |omega_vec| = n = " + std::to_string(n));
  }
  if (std::abs(omega_unit.norm() - 1.0) > 1e-12) {
    throw ConfigError("canonical omega: omega_vec must have unit norm, got |w| = " +
                      std::to_string(omega_unit.norm()));
  }
  Eigen::MatrixXd m(n + 1, n);
  m.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  m.row(n) = omega_unit.transpose();
  return FrequencyMatrix(std::move(m));
}

Eigen::VectorXd FrequencyMatrix::lambda(const ModeIndex& m) const {
  if (static_cast<int>(m.size()) != M()) {
    throw ConfigError("mode index length " + std::to_string(m.size()) +
                      " does not match M = " + std::to_string(M()));
  }
  Eigen::VectorXd mv(M());
  for (int j = 0; j < M(); ++j) mv(j) = static_cast<double>(m[static_cast<std::size_t>(j)]);
  return kTwoPi * (omega_.transpose() * mv);
}

bool FrequencyMatrix::lattice_translation(const Eigen::VectorXd& gamma, double tol) const {
  if (gamma.size() != n()) return false;
  const Eigen::VectorXd v = omega_ * gamma;
  for (int j = 0; j < M(); ++j) {
    if (std::abs(v(j) - std::round(v(j))) > tol) return false;
  }
  return true;
}

ModeSet::ModeSet(FrequencyMatrix omega, int K)
    : omega_(std::move(omega)), K_(K), id_(next_mode_set_id()) {
  const int M = omega_.M();
  const int n = omega_.n();
  const std::int64_t side = 2 * static_cast<std::int64_t>(K_) + 1;

  strides_.assign(static_cast<std::size_t>(M), 1);
  for (int j = M - 2; j >= 0; --j) {
    strides_[static_cast<std::size_t>(j)] = strides_[static_cast<std::size_t>(j + 1)] * side;
  }
  size_ = strides_[0] * side;

  lambda_soa_.assign(static_cast<std::size_t>(n),
                     std::vector<double>(static_cast<std::size_t>(size_)));
  lambda_sq_.resize(static_cast<std::size_t>(size_));
  bullet_.resize(static_cast<std::size_t>(size_));

  // Odometer walk in lexicographic (= ordinal) order; Lambda updated per mode.
  std::vector<std::int32_t> m(static_cast<std::size_t>(M), static_cast<std::int32_t>(-K_));
  const Eigen::MatrixXd& om = omega_.matrix();
  for (std::int64_t i = 0; i < size_; ++i) {
    double lsq = 0.0;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < M; ++j) acc += om(j, k) * static_cast<double>(m[static_cast<std::size_t>(j)]);
      const double lk = kTwoPi * acc;
      lambda_soa_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = lk;
      lsq += lk * lk;
    }
    lambda_sq_[static_cast<std::size_t>(i)] = lsq;
    const bool bullet = lsq <= 1.0;  // inclusive; ties to I_bullet
    bullet_[static_cast<std::size_t>(i)] = bullet ? 1 : 0;
    if (bullet) ++bullet_count_;
    if (lsq > max_lambda_norm_) max_lambda_norm_ = lsq;

    for (int j = M - 1; j >= 0; --j) {
      auto& digit = m[static_cast<std::size_t>(j)];
      if (digit < K_) {
        ++digit;
        break;
      }
      digit = static_cast<std::int32_t>(-K_);
    }
  }
  max_lambda_norm_ = std::sqrt(max_lambda_norm_);
}

std::shared_ptr<const ModeSet> ModeSet::build(FrequencyMatrix omega, int K,
                                              std::int64_t budget) {
  if (K < 0) throw ConfigError("K must be >= 0, got " + std::to_string(K));
  const std::int64_t side = 2 * static_cast<std::int64_t>(K) + 1;
  std::int64_t count = 1;
  for (int j = 0; j < omega.M(); ++j) {
    if (count > budget / side + 1) {
      throw ConfigError("mode budget exceeded: (2K+1)^M = " + std::to_string(side) +
                        "^" + std::to_string(omega.M()) + " > " + std::to_string(budget));
    }
    count *= side;
  }
  if (count > budget) {
    throw ConfigError("mode budget exceeded: (2K+1)^M = " + std::to_string(count) +
                      " > " + std::to_string(budget));
  }
  return std::shared_ptr<const ModeSet>(new ModeSet(std::move(omega), K));
}

std::int64_t ModeSet::ordinal(const ModeIndex& m) const {
  if (static_cast<int>(m.size()) != M()) return -1;
  std::int64_t o = 0;
  for (int j = 0; j < M(); ++j) {
    const std::int32_t c = m[static_cast<std::size_t>(j)];
    if (c < -K_ || c > K_) return -1;
    o += (static_cast<std::int64_t>(c) + K_) * strides_[static_cast<std::size_t>(j)];
  }
  return o;
}

ModeIndex ModeSet::mode(std::int64_t ordinal) const {
  ModeIndex m(static_cast<std::size_t>(M()));
  const std::int64_t side = 2 * static_cast<std::int64_t>(K_) + 1;
  for (int j = M() - 1; j >= 0; --j) {
    m[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(ordinal % side - K_);
    ordinal /= side;
  }
  return m;
}

Eigen::VectorXd ModeSet::lambda(std::int64_t ordinal) const {
  Eigen::VectorXd v(n());
  for (int k = 0; k < n(); ++k) v(k) = lambda_component(ordinal, k);
  return v;
}

double ModeSet::mode_norm_sq(std::int64_t ordinal) const {
  const std::int64_t side = 2 * static_cast<std::int64_t>(K_) + 1;
  double s = 0.0;
  for (int j = M() - 1; j >= 0; --j) {
    const double c = static_cast<double>(ordinal % side - K_);
    ordinal /= side;
    s += c * c;
  }
  return s;
}

NonresonanceReport check_nonresonance(const ModeSet& ms, double tol) {
  if (tol <= 0.0) throw ConfigError("non-resonance tol must be > 0");
  NonresonanceReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();

  const int M = ms.M();
  const int K = ms.K();
  const Eigen::MatrixXd& om = ms.omega().matrix();
  const int n = ms.n();

  // Differences of distinct box modes range over |d|_inf <= 2K, d != 0; d and
  // -d give the same separation, so scan the lexicographically positive half.
  std::vector<std::int32_t> d(static_cast<std::size_t>(M), 0);
  const std::int32_t D = static_cast<std::int32_t>(2 * K);
  while (true) {
    // advance to next d (odometer over [-2K, 2K]^M starting after 0)
    int j = M - 1;
    for (; j >= 0; --j) {
      auto& c = d[static_cast<std::size_t>(j)];
      if (c < D) {
        ++c;
        break;
      }
      c = -D;
    }
    if (j < 0) break;  // wrapped: done
    // keep only the half where the first nonzero component is positive
    std::int32_t first = 0;
    for (int q = 0; q < M; ++q) {
      if (d[static_cast<std::size_t>(q)] != 0) {
        first = d[static_cast<std::size_t>(q)];
        break;
      }
    }
    if (first <= 0) continue;

    double lsq = 0.0;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int q = 0; q < M; ++q) acc += om(q, k) * static_cast<double>(d[static_cast<std::size_t>(q)]);
      const double lk = kTwoPi * acc;
      lsq += lk * lk;
    }
    const double sep = std::sqrt(lsq);
    if (sep < rep.min_separation) {
      rep.min_separation = sep;
      // witnessing pair inside the box: a_j = clamp(d_j, -K, K), b = a - d
      ModeIndex a(static_cast<std::size_t>(M)), b(static_cast<std::size_t>(M));
      for (int q = 0; q < M; ++q) {
        const std::int32_t dq = d[static_cast<std::size_t>(q)];
        const std::int32_t aq = std::min<std::int32_t>(K, std::max<std::int32_t>(-K, dq));
        a[static_cast<std::size_t>(q)] = aq;
        b[static_cast<std::size_t>(q)] = static_cast<std::int32_t>(aq - dq);
      }
      rep.worst_a = std::move(a);
      rep.worst_b = std::move(b);
    }
  }

  rep.ok = !(rep.min_separation < tol);
  return rep;
}

}  // namespace qpeuler
