#include "qpeuler/qp_diffeo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>

#include <fftw3.h>

#include "qpeuler/errors.hpp"
#include "field_kernels.hpp"

namespace qpeuler {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::int64_t kGridBudget = std::int64_t(1) << 24;

double wrap_half(double x) { return x - std::floor(x + 0.5); }
double wrap_unit(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

void require_grid_fits(const ModeSet& ms, const TorusGrid& grid) {
  if (grid.dim() != ms.M()) {
    throw ConfigError("grid dimension " + std::to_string(grid.dim()) +
                      " does not match the lattice dimension " + std::to_string(ms.M()));
  }
  const int need = 2 * (2 * ms.K() + 1);
  if (grid.points_per_dim() < need) {
    throw ConfigError("grid must oversample the box: need G >= " + std::to_string(need) +
                      ", got " + std::to_string(grid.points_per_dim()));
  }
}

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

/// In-place c2c transform over the grid, row-major with the last torus
/// index fastest (the node enumeration order of TorusGrid).
class GridTransform {
public:
  explicit GridTransform(const TorusGrid& grid)
      : count_(grid.node_count()), buf_(static_cast<std::size_t>(grid.node_count())) {
    std::vector<int> dims(static_cast<std::size_t>(grid.dim()), grid.points_per_dim());
    auto* raw = reinterpret_cast<fftw_complex*>(buf_.data());
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd_ = fftw_plan_dft(grid.dim(), dims.data(), raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(grid.dim(), dims.data(), raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (fwd_ == nullptr || bwd_ == nullptr) throw std::runtime_error("fftw plan creation failed");
  }
  ~GridTransform() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  GridTransform(const GridTransform&) = delete;
  GridTransform& operator=(const GridTransform&) = delete;

  std::int64_t count() const { return count_; }
  Complex* data() { return buf_.data(); }
  void zero() { std::fill(buf_.begin(), buf_.end(), Complex(0.0, 0.0)); }
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }

private:
  std::int64_t count_;
  std::vector<Complex> buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

void decode_mode(const ModeSet& ms, std::int64_t ordinal, std::int32_t* digits) {
  const std::int64_t side = 2 * static_cast<std::int64_t>(ms.K()) + 1;
  for (int j = ms.M() - 1; j >= 0; --j) {
    digits[j] = static_cast<std::int32_t>(ordinal % side - ms.K());
    ordinal /= side;
  }
}

std::int64_t bin_of_mode(const std::int32_t* digits, int M, int G) {
  std::int64_t bin = 0;
  for (int j = 0; j < M; ++j) {
    const int r = ((digits[j] % G) + G) % G;
    bin = bin * G + r;
  }
  return bin;
}

/// Places f's coefficients (optionally scaled per mode) into the DFT bins
/// (m mod G); with G >= 2(2K+1) distinct box modes land in distinct bins.
template <typename Scale>
void fill_bins(const QPScalar& f, const TorusGrid& grid, GridTransform& t, Scale scale) {
  t.zero();
  const ModeSet& ms = *f.mode_set();
  const auto idx = f.ordinals();
  const auto c = f.coeffs();
  std::array<std::int32_t, 16> digits{};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    decode_mode(ms, idx[i], digits.data());
    const std::int64_t bin = bin_of_mode(digits.data(), ms.M(), grid.points_per_dim());
    t.data()[bin] = scale(digits.data(), c[i]);
  }
}

void fill_bins_plain(const QPScalar& f, const TorusGrid& grid, GridTransform& t) {
  fill_bins(f, grid, t, [](const std::int32_t*, Complex c) { return c; });
}

/// Reads box coefficients back from forward-transformed bins (divides by the
/// node count); force_real symmetrizes pairs (cheap guard against fp drift
/// accumulating over repeated compositions).
QPScalar box_coeffs_from_bins(const ModeSetPtr& ms, const TorusGrid& grid, GridTransform& t,
                              bool force_real) {
  const double inv_count = 1.0 / static_cast<double>(t.count());
  const std::int64_t size = ms->size();
  std::vector<Complex> dense(static_cast<std::size_t>(size));
  std::array<std::int32_t, 16> digits{};
  for (std::int64_t o = 0; o < size; ++o) {
    decode_mode(*ms, o, digits.data());
    const std::int64_t bin = bin_of_mode(digits.data(), ms->M(), grid.points_per_dim());
    dense[static_cast<std::size_t>(o)] = t.data()[bin] * inv_count;
  }
  if (force_real) {
    for (std::int64_t o = 0; o < size; ++o) {
      const std::int64_t neg = ms->negated(o);
      if (o > neg) continue;
      if (o == neg) {
        dense[static_cast<std::size_t>(o)] = Complex(dense[static_cast<std::size_t>(o)].real(), 0.0);
        continue;
      }
      const Complex avg =
          0.5 * (dense[static_cast<std::size_t>(o)] + std::conj(dense[static_cast<std::size_t>(neg)]));
      dense[static_cast<std::size_t>(o)] = avg;
      dense[static_cast<std::size_t>(neg)] = std::conj(avg);
    }
  }
  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  for (std::int64_t o = 0; o < size; ++o) {
    idx.push_back(o);
    coeffs.push_back(dense[static_cast<std::size_t>(o)]);
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs), force_real);
}

/// Real samples of one component's torus lift at all grid nodes.
std::vector<double> sample_real_lift(const QPScalar& f, const TorusGrid& grid, GridTransform& t) {
  fill_bins_plain(f, grid, t);
  t.backward();
  std::vector<double> out(static_cast<std::size_t>(t.count()));
  for (std::int64_t j = 0; j < t.count(); ++j) {
    out[static_cast<std::size_t>(j)] = t.data()[j].real();
  }
  return out;
}

/// Direct summation of component lifts at arbitrary torus points, with the
/// per-dimension power tables e^{2 pi i t theta_mu}, t in [-K, K].
class PointEvaluator {
public:
  explicit PointEvaluator(std::vector<QPScalar> comps) : comps_(std::move(comps)) {
    const ModeSet& ms = *comps_.front().mode_set();
    M_ = ms.M();
    K_ = ms.K();
    for (const auto& c : comps_) {
      std::vector<std::int64_t> merged;
      std::set_union(union_.begin(), union_.end(), c.ordinals().begin(), c.ordinals().end(),
                     std::back_inserter(merged));
      union_ = std::move(merged);
    }
    digits_.resize(union_.size() * static_cast<std::size_t>(M_));
    for (std::size_t i = 0; i < union_.size(); ++i) {
      decode_mode(ms, union_[i], digits_.data() + i * static_cast<std::size_t>(M_));
    }
    aligned_.assign(comps_.size(), std::vector<Complex>(union_.size(), Complex(0.0, 0.0)));
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      const auto ord = comps_[k].ordinals();
      const auto c = comps_[k].coeffs();
      std::size_t p = 0;
      for (std::size_t i = 0; i < union_.size() && p < ord.size(); ++i) {
        if (union_[i] == ord[p]) aligned_[k][i] = c[p++];
      }
    }
    pow_.resize(static_cast<std::size_t>(M_) * static_cast<std::size_t>(2 * K_ + 1));
  }

  int components() const { return static_cast<int>(comps_.size()); }

  /// values[k] = sum_m c_{k,m} e^{2 pi i (m, theta)}.
  void eval_complex(const double* theta, Complex* values) const {
    build_tables(theta);
    for (std::size_t k = 0; k < comps_.size(); ++k) values[k] = Complex(0.0, 0.0);
    const int side = 2 * K_ + 1;
    for (std::size_t i = 0; i < union_.size(); ++i) {
      const std::int32_t* d = digits_.data() + i * static_cast<std::size_t>(M_);
      Complex factor = pow_[static_cast<std::size_t>(d[0] + K_)];
      for (int mu = 1; mu < M_; ++mu) {
        factor *= pow_[static_cast<std::size_t>(mu * side + d[mu] + K_)];
      }
      for (std::size_t k = 0; k < comps_.size(); ++k) {
        values[k] += aligned_[k][i] * factor;
      }
    }
  }

  /// Real lift values F_k(theta) and, when dF != nullptr, the torus-side
  /// Jacobian dF[k*M + mu] = dF_k/dtheta_mu. Components must be real-valued.
  void eval_real(const double* theta, double* F, double* dF) const {
    build_tables(theta);
    const std::size_t n = comps_.size();
    for (std::size_t k = 0; k < n; ++k) F[k] = 0.0;
    if (dF != nullptr) {
      for (std::size_t k = 0; k < n * static_cast<std::size_t>(M_); ++k) dF[k] = 0.0;
    }
    const int side = 2 * K_ + 1;
    for (std::size_t i = 0; i < union_.size(); ++i) {
      const std::int32_t* d = digits_.data() + i * static_cast<std::size_t>(M_);
      Complex factor = pow_[static_cast<std::size_t>(d[0] + K_)];
      for (int mu = 1; mu < M_; ++mu) {
        factor *= pow_[static_cast<std::size_t>(mu * side + d[mu] + K_)];
      }
      for (std::size_t k = 0; k < n; ++k) {
        const Complex z = aligned_[k][i] * factor;
        F[k] += z.real();
        if (dF != nullptr) {
          // d/dtheta_mu brings 2 pi i m_mu; real part is -2 pi m_mu Im(z)
          for (int mu = 0; mu < M_; ++mu) {
            dF[k * static_cast<std::size_t>(M_) + static_cast<std::size_t>(mu)] -=
                kTwoPi * static_cast<double>(d[mu]) * z.imag();
          }
        }
      }
    }
  }

private:
  void build_tables(const double* theta) const {
    const int side = 2 * K_ + 1;
    for (int mu = 0; mu < M_; ++mu) {
      Complex* p = pow_.data() + static_cast<std::size_t>(mu) * static_cast<std::size_t>(side);
      const double a = kTwoPi * theta[mu];
      const Complex e(std::cos(a), std::sin(a));
      p[K_] = Complex(1.0, 0.0);
      for (int t = 1; t <= K_; ++t) {
        p[K_ + t] = p[K_ + t - 1] * e;
        p[K_ - t] = std::conj(p[K_ + t]);
      }
    }
  }

  std::vector<QPScalar> comps_;
  int M_ = 0;
  int K_ = 0;
  std::vector<std::int64_t> union_;
  std::vector<std::int32_t> digits_;
  std::vector<std::vector<Complex>> aligned_;
  mutable std::vector<Complex> pow_;
};

/// theta'_j = theta_j + Omega F(theta_j) for every grid node (not wrapped;
/// the exponentials downstream are 1-periodic).
std::vector<double> displaced_nodes(const QPDiffeo& phi, const TorusGrid& grid) {
  const ModeSetPtr& ms = phi.mode_set();
  const int M = grid.dim();
  const int n = ms->n();
  const Eigen::MatrixXd& omega = ms->omega().matrix();
  const std::int64_t count = grid.node_count();

  std::vector<std::vector<double>> F(static_cast<std::size_t>(n));
  {
    GridTransform t(grid);
    for (int k = 0; k < n; ++k) {
      F[static_cast<std::size_t>(k)] = sample_real_lift(phi.displacement()[k], grid, t);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(count) * static_cast<std::size_t>(M));
  std::vector<double> theta(static_cast<std::size_t>(M));
  for (std::int64_t j = 0; j < count; ++j) {
    grid.node(j, theta.data());
    for (int mu = 0; mu < M; ++mu) {
      double d = 0.0;
      for (int k = 0; k < n; ++k) {
        d += omega(mu, k) * F[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(j) * static_cast<std::size_t>(M) + static_cast<std::size_t>(mu)] =
          theta[static_cast<std::size_t>(mu)] + d;
    }
  }
  return out;
}

struct ComposeParts {
  std::vector<QPScalar> fields;
  double aliasing_residual = 0.0;
};

ComposeParts compose_scalars(const std::vector<QPScalar>& comps, const QPDiffeo& phi,
                             const TorusGrid& grid) {
  const ModeSetPtr& ms = comps.front().mode_set();
  require_grid_fits(*ms, grid);
  if (ms.get() != phi.mode_set().get()) {
    throw ConfigError("composition operands must share one ModeSet instance");
  }
  const std::int64_t count = grid.node_count();
  const int M = grid.dim();
  const std::size_t nc = comps.size();

  const std::vector<double> displaced = displaced_nodes(phi, grid);
  PointEvaluator ev(comps);

  std::vector<std::vector<Complex>> vals(nc,
                                         std::vector<Complex>(static_cast<std::size_t>(count)));
  std::vector<Complex> point(nc);
  for (std::int64_t j = 0; j < count; ++j) {
    ev.eval_complex(displaced.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(M),
                    point.data());
    for (std::size_t k = 0; k < nc; ++k) vals[k][static_cast<std::size_t>(j)] = point[k];
  }

  ComposeParts out;
  GridTransform t(grid);
  for (std::size_t k = 0; k < nc; ++k) {
    std::copy(vals[k].begin(), vals[k].end(), t.data());
    t.forward();
    out.fields.push_back(box_coeffs_from_bins(ms, grid, t, comps[k].real_valued()));
    // residual between the box-restricted field resampled on the grid and the
    // raw samples: the energy in the dropped bins
    fill_bins_plain(out.fields.back(), grid, t);
    t.backward();
    double r = 0.0;
    for (std::int64_t j = 0; j < count; ++j) {
      r = std::max(r, std::abs(t.data()[j] - vals[k][static_cast<std::size_t>(j)]));
    }
    out.aliasing_residual = std::max(out.aliasing_residual, r);
  }
  return out;
}

}  // namespace

TorusGrid::TorusGrid(int dim, int points_per_dim) : dim_(dim), points_(points_per_dim) {
  if (dim < 1 || dim > 16) throw ConfigError("torus grid dimension must be in [1, 16]");
  if (points_per_dim < 2) throw ConfigError("torus grid needs at least 2 points per dimension");
  count_ = 1;
  for (int j = 0; j < dim; ++j) {
    count_ *= points_;
    if (count_ > kGridBudget) {
      throw ConfigError("torus grid node count exceeds the budget of 2^24");
    }
  }
}

TorusGrid TorusGrid::for_mode_set(const ModeSet& ms) {
  const int need = 2 * (2 * ms.K() + 1);
  int g = 2;
  while (g < need) g *= 2;
  return TorusGrid(ms.M(), g);
}

void TorusGrid::node(std::int64_t index, double* theta) const {
  for (int j = dim_ - 1; j >= 0; --j) {
    theta[j] = static_cast<double>(index % points_) / static_cast<double>(points_);
    index /= points_;
  }
}

QPDiffeo QPDiffeo::identity(ModeSetPtr ms) {
  return QPDiffeo(QPVectorField::zero(std::move(ms)), 1.0);
}

QPDiffeo QPDiffeo::make(QPVectorField displacement, const TorusGrid& grid) {
  if (!displacement.real_valued()) {
    throw ConfigError("diffeomorphism displacement must be real-valued");
  }
  const double margin = jacobian_margin(displacement, grid);
  if (!(margin > 0.0)) {
    throw SolverAbort("jacobian margin " + std::to_string(margin) +
                      " is not positive; the map is not a diffeomorphism at this truncation");
  }
  return QPDiffeo(std::move(displacement), margin);
}

Eigen::VectorXd QPDiffeo::apply(std::span<const double> x) const {
  Eigen::VectorXd y = evaluate(f_, x);
  for (int j = 0; j < y.size(); ++j) y(j) += x[static_cast<std::size_t>(j)];
  return y;
}

double jacobian_margin(const QPVectorField& displacement, const TorusGrid& grid) {
  const ModeSetPtr& ms = displacement.mode_set();
  require_grid_fits(*ms, grid);
  const int n = ms->n();
  const int M = ms->M();
  const Eigen::MatrixXd& omega = ms->omega().matrix();
  const std::int64_t count = grid.node_count();

  // Torus-side Jacobian samples dF_k/dtheta_mu on the whole grid.
  std::vector<std::vector<double>> dF(static_cast<std::size_t>(n) * static_cast<std::size_t>(M));
  {
    GridTransform t(grid);
    for (int k = 0; k < n; ++k) {
      for (int mu = 0; mu < M; ++mu) {
        fill_bins(displacement[k], grid, t, [mu](const std::int32_t* d, Complex c) {
          return c * Complex(0.0, kTwoPi * static_cast<double>(d[mu]));
        });
        t.backward();
        auto& slot = dF[static_cast<std::size_t>(k) * static_cast<std::size_t>(M) +
                        static_cast<std::size_t>(mu)];
        slot.resize(static_cast<std::size_t>(count));
        for (std::int64_t j = 0; j < count; ++j) slot[static_cast<std::size_t>(j)] = t.data()[j].real();
      }
    }
  }

  std::mt19937_64 rng(0x53C1A5u);
  std::uniform_int_distribution<std::int64_t> pick(0, count - 1);
  std::array<std::int64_t, 8> check_nodes{};
  for (auto& c : check_nodes) c = pick(rng);
  std::sort(check_nodes.begin(), check_nodes.end());

  double margin = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd J(n, M);
  std::size_t check_pos = 0;
  for (std::int64_t j = 0; j < count; ++j) {
    for (int k = 0; k < n; ++k) {
      for (int mu = 0; mu < M; ++mu) {
        J(k, mu) = dF[static_cast<std::size_t>(k) * static_cast<std::size_t>(M) +
                      static_cast<std::size_t>(mu)][static_cast<std::size_t>(j)];
      }
    }
    const double det_small =
        (Eigen::MatrixXd::Identity(n, n) + J * omega).determinant();
    margin = std::min(margin, det_small);
    while (check_pos < check_nodes.size() && check_nodes[check_pos] == j) {
      const double det_big = (Eigen::MatrixXd::Identity(M, M) + omega * J).determinant();
      if (std::abs(det_big - det_small) > 1e-11 * std::max(1.0, std::abs(det_small))) {
        throw std::runtime_error("determinant identity violated between torus and base Jacobians");
      }
      ++check_pos;
    }
  }
  return margin;
}

ComposedScalar compose_field(const QPScalar& g, const QPDiffeo& phi, const TorusGrid& grid) {
  ComposeParts parts = compose_scalars({g}, phi, grid);
  return ComposedScalar{std::move(parts.fields.front()), parts.aliasing_residual};
}

ComposedField compose_field(const QPVectorField& g, const QPDiffeo& phi, const TorusGrid& grid) {
  ComposeParts parts = compose_scalars(g.components(), phi, grid);
  return ComposedField{QPVectorField(std::move(parts.fields)), parts.aliasing_residual};
}

ComposedDiffeo compose_diffeo(const QPDiffeo& psi, const QPDiffeo& phi, const TorusGrid& grid) {
  ComposedField inner = compose_field(psi.displacement(), phi, grid);
  QPVectorField disp = add(phi.displacement(), inner.field);
  return ComposedDiffeo{QPDiffeo::make(std::move(disp), grid), inner.aliasing_residual};
}

InvertedDiffeo invert(const QPDiffeo& phi, const TorusGrid& grid, double newton_tol,
                      int max_iter) {
  const ModeSetPtr& ms = phi.mode_set();
  require_grid_fits(*ms, grid);
  if (!(newton_tol > 0.0) || max_iter < 1) throw ConfigError("invalid Newton parameters");
  const int n = ms->n();
  const int M = ms->M();
  const Eigen::MatrixXd& omega = ms->omega().matrix();
  const std::int64_t count = grid.node_count();

  PointEvaluator ev(phi.displacement().components());
  const std::vector<double> displaced = displaced_nodes(phi, grid);

  std::vector<std::vector<Complex>> G_samples(
      static_cast<std::size_t>(n), std::vector<Complex>(static_cast<std::size_t>(count)));

  Eigen::VectorXd theta(M), sigma(M), resid(M), trial(M), trial_resid(M);
  Eigen::VectorXd F(n), Ftrial(n);
  Eigen::MatrixXd dF(n, M), J(M, M);
  int worst_iters = 0;

  // residual r(sigma) = wrap(sigma + Omega F(sigma) - theta), F evaluated on
  // the side; returns |r|_inf
  const auto residual_at = [&](const Eigen::VectorXd& s, Eigen::VectorXd& r, Eigen::VectorXd& Fout,
                               Eigen::MatrixXd* dFout) {
    ev.eval_real(s.data(), Fout.data(), dFout != nullptr ? dFout->data() : nullptr);
    double worst = 0.0;
    for (int mu = 0; mu < M; ++mu) {
      double acc = s(mu) - theta(mu);
      for (int k = 0; k < n; ++k) acc += omega(mu, k) * Fout(k);
      r(mu) = wrap_half(acc);
      worst = std::max(worst, std::abs(r(mu)));
    }
    return worst;
  };

  // Eigen stores matrices column-major; eval_real fills dF row-major as
  // dF[k*M + mu], so hand it a row-major view.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dF_rm(n, M);

  for (std::int64_t jn = 0; jn < count; ++jn) {
    grid.node(jn, theta.data());
    // initial guess theta - Omega F(theta); Omega F(theta) is the displaced
    // node minus theta, already computed
    for (int mu = 0; mu < M; ++mu) {
      sigma(mu) = 2.0 * theta(mu) -
                  displaced[static_cast<std::size_t>(jn) * static_cast<std::size_t>(M) +
                            static_cast<std::size_t>(mu)];
    }

    ev.eval_real(sigma.data(), F.data(), dF_rm.data());
    double rnorm = 0.0;
    for (int mu = 0; mu < M; ++mu) {
      double acc = sigma(mu) - theta(mu);
      for (int k = 0; k < n; ++k) acc += omega(mu, k) * F(k);
      resid(mu) = wrap_half(acc);
      rnorm = std::max(rnorm, std::abs(resid(mu)));
    }

    int iter = 0;
    while (rnorm > newton_tol) {
      if (++iter > max_iter) {
        throw SolverAbort("Newton inversion failed to converge at grid node " +
                          std::to_string(jn) + " (residual " + std::to_string(rnorm) + ")");
      }
      J = Eigen::MatrixXd::Identity(M, M) + omega * dF_rm;
      const Eigen::VectorXd delta = J.partialPivLu().solve(resid);
      double step = 1.0;
      bool accepted = false;
      for (int halving = 0; halving <= 8; ++halving) {
        trial = sigma - step * delta;
        const double tnorm = residual_at(trial, trial_resid, Ftrial, nullptr);
        if (tnorm < rnorm || tnorm <= newton_tol) {
          sigma = trial;
          resid = trial_resid;
          F = Ftrial;
          rnorm = tnorm;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        throw SolverAbort("Newton inversion stalled at grid node " + std::to_string(jn) +
                          " (residual " + std::to_string(rnorm) + ")");
      }
      if (rnorm > newton_tol) ev.eval_real(sigma.data(), F.data(), dF_rm.data());
    }
    worst_iters = std::max(worst_iters, iter);

    for (int k = 0; k < n; ++k) {
      G_samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(jn)] = Complex(-F(k), 0.0);
    }
  }

  // Recover inverse displacement coefficients and the resampling residual.
  std::vector<QPScalar> comps;
  double aliasing = 0.0;
  {
    GridTransform t(grid);
    for (int k = 0; k < n; ++k) {
      std::copy(G_samples[static_cast<std::size_t>(k)].begin(),
                G_samples[static_cast<std::size_t>(k)].end(), t.data());
      t.forward();
      comps.push_back(box_coeffs_from_bins(ms, grid, t, true));
      fill_bins_plain(comps.back(), grid, t);
      t.backward();
      for (std::int64_t j = 0; j < count; ++j) {
        aliasing = std::max(
            aliasing, std::abs(t.data()[j] - G_samples[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]));
      }
    }
  }

  InvertedDiffeo out{QPDiffeo::make(QPVectorField(std::move(comps)), grid), 0.0, aliasing,
                     worst_iters};

  std::mt19937_64 rng(0x1DFFE0u);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int trial_pt = 0; trial_pt < 100; ++trial_pt) {
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = coord(rng);
    const Eigen::VectorXd y = out.inverse.apply(x);
    const Eigen::VectorXd z = phi.apply(std::span<const double>(y.data(), y.size()));
    for (int k = 0; k < n; ++k) {
      out.round_trip_residual =
          std::max(out.round_trip_residual, std::abs(z(k) - x[static_cast<std::size_t>(k)]));
    }
  }
  return out;
}

TorusDiffeo::TorusDiffeo(QPDiffeo source, const TorusGrid& grid)
    : source_(std::move(source)), grid_(grid) {
  require_grid_fits(*source_.mode_set(), grid_);
  const int M = grid_.dim();
  const std::int64_t count = grid_.node_count();
  const std::vector<double> displaced = displaced_nodes(source_, grid_);
  samples_.resize(static_cast<std::size_t>(count) * static_cast<std::size_t>(M));
  std::vector<double> theta(static_cast<std::size_t>(M));
  for (std::int64_t j = 0; j < count; ++j) {
    grid_.node(j, theta.data());
    for (int mu = 0; mu < M; ++mu) {
      const std::size_t at =
          static_cast<std::size_t>(j) * static_cast<std::size_t>(M) + static_cast<std::size_t>(mu);
      samples_[at] = wrap_unit(displaced[at] - theta[static_cast<std::size_t>(mu)]);
    }
  }
}

Eigen::VectorXd TorusDiffeo::apply(const Eigen::VectorXd& theta) const {
  const ModeSetPtr& ms = source_.mode_set();
  const int M = ms->M();
  const int n = ms->n();
  const Eigen::MatrixXd& omega = ms->omega().matrix();
  PointEvaluator ev(source_.displacement().components());
  Eigen::VectorXd F(n);
  ev.eval_real(theta.data(), F.data(), nullptr);
  Eigen::VectorXd out(M);
  for (int mu = 0; mu < M; ++mu) {
    double acc = theta(mu);
    for (int k = 0; k < n; ++k) acc += omega(mu, k) * F(k);
    out(mu) = wrap_unit(acc);
  }
  return out;
}

TorusDiffeo lift(const QPDiffeo& phi, const TorusGrid& grid) { return TorusDiffeo(phi, grid); }

double homomorphism_check(const QPDiffeo& psi, const QPDiffeo& phi, const TorusGrid& grid) {
  const ModeSetPtr& ms = phi.mode_set();
  require_grid_fits(*ms, grid);
  if (ms.get() != psi.mode_set().get()) {
    throw ConfigError("homomorphism check needs both maps on one ModeSet instance");
  }
  const int M = grid.dim();
  const int n = ms->n();
  const Eigen::MatrixXd& omega = ms->omega().matrix();
  const std::int64_t count = grid.node_count();

  const ComposedDiffeo comp = compose_diffeo(psi, phi, grid);
  const std::vector<double> through_composed = displaced_nodes(comp.diffeo, grid);
  const std::vector<double> through_phi = displaced_nodes(phi, grid);

  PointEvaluator ev_psi(psi.displacement().components());
  Eigen::VectorXd G(n);
  double worst = 0.0;
  for (std::int64_t j = 0; j < count; ++j) {
    const double* t1 = through_phi.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(M);
    ev_psi.eval_real(t1, G.data(), nullptr);
    for (int mu = 0; mu < M; ++mu) {
      double b = t1[mu];
      for (int k = 0; k < n; ++k) b += omega(mu, k) * G(k);
      const double a =
          through_composed[static_cast<std::size_t>(j) * static_cast<std::size_t>(M) +
                           static_cast<std::size_t>(mu)];
      worst = std::max(worst, std::abs(wrap_half(a - b)));
    }
  }
  return worst;
}

}  // namespace qpeuler
