#include "qpeuler/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "qpeuler/errors.hpp"
#include "field_kernels.hpp"

namespace qpeuler::oracle {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

/// Fixed-size N x N c2c workspace. Forward normalizes by 1/N^2 so spectra use
/// the analysis convention matching Spectrum2D.
class Fft2D {
public:
  explicit Fft2D(int N) : N_(N), buf_(static_cast<std::size_t>(N) * N) {
    auto* raw = reinterpret_cast<fftw_complex*>(buf_.data());
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_2d(N, N, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(N, N, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (fwd_ == nullptr || bwd_ == nullptr) throw std::runtime_error("fftw plan creation failed");
  }
  ~Fft2D() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  std::vector<Complex>& buf() { return buf_; }
  void to_grid(const Spectrum2D& s) {
    std::copy(s.c.begin(), s.c.end(), buf_.begin());
    fftw_execute(bwd_);
  }
  void to_spectrum(Spectrum2D& s) {
    fftw_execute(fwd_);
    const double inv = 1.0 / (static_cast<double>(N_) * static_cast<double>(N_));
    for (std::size_t i = 0; i < buf_.size(); ++i) s.c[i] = buf_[i] * inv;
  }

private:
  int N_;
  std::vector<Complex> buf_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Signed mode of bin index a in [0, N): a for a < N/2, a - N otherwise.
int signed_mode(int a, int N) { return a < N / 2 ? a : a - N; }

void dealias(Spectrum2D& s) {
  const int cut = s.N / 3;
  for (int a = 0; a < s.N; ++a) {
    const int m1 = signed_mode(a, s.N);
    for (int b = 0; b < s.N; ++b) {
      const int m2 = signed_mode(b, s.N);
      if (std::abs(m1) > cut || std::abs(m2) > cut) {
        s.c[static_cast<std::size_t>(a) * static_cast<std::size_t>(s.N) +
            static_cast<std::size_t>(b)] = Complex(0, 0);
      }
    }
  }
}

/// rhs = -dealias(u . grad w), all products on the collocation grid.
Spectrum2D vorticity_rhs(const Spectrum2D& w, Fft2D& fft) {
  const int N = w.N;
  Spectrum2D u1(N), u2(N), wx(N), wy(N);
  velocity_from_vorticity(w, u1, u2);
  for (int a = 0; a < N; ++a) {
    const double k1 = kTwoPi * signed_mode(a, N);
    for (int b = 0; b < N; ++b) {
      const double k2 = kTwoPi * signed_mode(b, N);
      const std::size_t i =
          static_cast<std::size_t>(a) * static_cast<std::size_t>(N) + static_cast<std::size_t>(b);
      wx.c[i] = Complex(0.0, k1) * w.c[i];
      wy.c[i] = Complex(0.0, k2) * w.c[i];
    }
  }
  std::vector<Complex> g_u1, g_u2, g_wx;
  fft.to_grid(u1);
  g_u1 = fft.buf();
  fft.to_grid(u2);
  g_u2 = fft.buf();
  fft.to_grid(wx);
  g_wx = fft.buf();
  fft.to_grid(wy);
  for (std::size_t i = 0; i < fft.buf().size(); ++i) {
    // real product of real fields; the imaginary parts are fp residue
    fft.buf()[i] = -(g_u1[i].real() * g_wx[i].real() + g_u2[i].real() * fft.buf()[i].real());
  }
  Spectrum2D rhs(N);
  fft.to_spectrum(rhs);
  dealias(rhs);
  return rhs;
}

void axpy_spectrum(Spectrum2D& y, double a, const Spectrum2D& x) {
  for (std::size_t i = 0; i < y.c.size(); ++i) y.c[i] += a * x.c[i];
}

double enstrophy(const Spectrum2D& w) {
  double s = 0.0;
  for (const Complex c : w.c) s += std::norm(c);
  return 0.5 * s;
}

}  // namespace

void velocity_from_vorticity(const Spectrum2D& w, Spectrum2D& u1, Spectrum2D& u2) {
  const int N = w.N;
  for (int a = 0; a < N; ++a) {
    const double k1 = kTwoPi * signed_mode(a, N);
    for (int b = 0; b < N; ++b) {
      const double k2 = kTwoPi * signed_mode(b, N);
      const std::size_t i =
          static_cast<std::size_t>(a) * static_cast<std::size_t>(N) + static_cast<std::size_t>(b);
      const double ksq = k1 * k1 + k2 * k2;
      if (ksq == 0.0) {
        u1.c[i] = u2.c[i] = Complex(0, 0);
        continue;
      }
      u1.c[i] = Complex(0.0, k2 / ksq) * w.c[i];
      u2.c[i] = Complex(0.0, -k1 / ksq) * w.c[i];
    }
  }
}

Spectrum2D vorticity_from_velocity(const Spectrum2D& u1, const Spectrum2D& u2) {
  const int N = u1.N;
  Spectrum2D w(N);
  for (int a = 0; a < N; ++a) {
    const double k1 = kTwoPi * signed_mode(a, N);
    for (int b = 0; b < N; ++b) {
      const double k2 = kTwoPi * signed_mode(b, N);
      const std::size_t i =
          static_cast<std::size_t>(a) * static_cast<std::size_t>(N) + static_cast<std::size_t>(b);
      w.c[i] = Complex(0.0, k1) * u2.c[i] - Complex(0.0, k2) * u1.c[i];
    }
  }
  return w;
}

double spectrum_energy(const Spectrum2D& u1, const Spectrum2D& u2) {
  double s = 0.0;
  for (const Complex c : u1.c) s += std::norm(c);
  for (const Complex c : u2.c) s += std::norm(c);
  return 0.5 * s;
}

OracleRun periodic_euler_2d(const Spectrum2D& w0, double dt, double t_end) {
  const int N = w0.N;
  if (!power_of_two(N) || N < 8) throw ConfigError("oracle grid size must be a power of two >= 8");
  if (!(dt > 0.0) || t_end < 0.0) throw ConfigError("oracle needs dt > 0 and t_end >= 0");

  Fft2D fft(N);
  Spectrum2D w = w0;
  dealias(w);

  Spectrum2D ue1(N), ue2(N);
  velocity_from_vorticity(w, ue1, ue2);
  const double energy0 = spectrum_energy(ue1, ue2);
  const double enstrophy0 = enstrophy(w);

  const std::int64_t nsteps =
      t_end > 0.0 ? std::max<std::int64_t>(1, std::llround(t_end / dt)) : 0;
  const double h = nsteps > 0 ? t_end / static_cast<double>(nsteps) : 0.0;
  for (std::int64_t step = 0; step < nsteps; ++step) {
    const Spectrum2D k1 = vorticity_rhs(w, fft);
    Spectrum2D s = w;
    axpy_spectrum(s, 0.5 * h, k1);
    const Spectrum2D k2 = vorticity_rhs(s, fft);
    s = w;
    axpy_spectrum(s, 0.5 * h, k2);
    const Spectrum2D k3 = vorticity_rhs(s, fft);
    s = w;
    axpy_spectrum(s, h, k3);
    const Spectrum2D k4 = vorticity_rhs(s, fft);
    axpy_spectrum(w, h / 6.0, k1);
    axpy_spectrum(w, h / 3.0, k2);
    axpy_spectrum(w, h / 3.0, k3);
    axpy_spectrum(w, h / 6.0, k4);
    double mx = 0.0;
    for (const Complex c : w.c) mx = std::max(mx, std::abs(c));
    if (!std::isfinite(mx)) {
      throw ToleranceBreach("oracle vorticity went nonfinite at step " + std::to_string(step));
    }
  }

  OracleRun run{w, Spectrum2D(N), Spectrum2D(N), 0.0, 0.0};
  velocity_from_vorticity(run.vorticity, run.u1, run.u2);
  const double energy1 = spectrum_energy(run.u1, run.u2);
  const double enstrophy1 = enstrophy(run.vorticity);
  run.energy_drift = std::abs(energy1 - energy0) / std::max(1e-300, energy0);
  run.enstrophy_drift = std::abs(enstrophy1 - enstrophy0) / std::max(1e-300, enstrophy0);
  return run;
}

Spectrum2D spectrum_from_qp(const QPScalar& f, int N) {
  const ModeSetPtr& ms = f.mode_set();
  if (ms->M() != 2) throw ConfigError("oracle bridge needs a 2-frequency lattice");
  if (2 * ms->K() + 1 > N) throw ConfigError("oracle grid too small for the box");
  Spectrum2D s(N);
  const auto idx = f.ordinals();
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const ModeIndex m = ms->mode(idx[i]);
    s.at(m[0], m[1]) = c[i];
  }
  return s;
}

QPScalar brute_force_convolution(const QPScalar& f, const QPScalar& g) {
  const ModeSetPtr& ms = f.mode_set();
  if (ms.get() != g.mode_set().get()) {
    throw ConfigError("operands must share one ModeSet instance");
  }
  const int M = ms->M();
  const auto f_idx = f.ordinals();
  const auto f_c = f.coeffs();

  std::vector<std::int64_t> idx;
  std::vector<Complex> coeffs;
  ModeIndex diff(static_cast<std::size_t>(M));
  for (std::int64_t o = 0; o < ms->size(); ++o) {
    const ModeIndex mo = ms->mode(o);
    double acc_re = 0.0, acc_im = 0.0;
    // ascending m' over f's support, exactly the production accumulation
    // order, with the accumulation statements shaped like the production
    // kernel's so the compiler cannot contract the two sites differently
    for (std::size_t i = 0; i < f_idx.size(); ++i) {
      const ModeIndex mi = ms->mode(f_idx[i]);
      for (int j = 0; j < M; ++j) {
        diff[static_cast<std::size_t>(j)] =
            mo[static_cast<std::size_t>(j)] - mi[static_cast<std::size_t>(j)];
      }
      const std::int64_t og = ms->ordinal(diff);
      if (og < 0) continue;
      const Complex gc = g.coeff_at(og);
      if (gc == Complex(0.0, 0.0)) continue;
      const double fr = f_c[i].real();
      const double fim = f_c[i].imag();
      const double br = gc.real();
      const double bi = gc.imag();
      acc_re += fr * br - fim * bi;
      acc_im += fr * bi + fim * br;
    }
    if (std::abs(Complex(acc_re, acc_im)) >= kPruneThreshold) {
      idx.push_back(o);
      coeffs.push_back(Complex(acc_re, acc_im));
    }
  }
  return QPScalar::from_sorted(ms, std::move(idx), std::move(coeffs),
                               f.real_valued() && g.real_valued());
}

double finite_difference_check(const QPScalar& f, int direction, std::span<const double> x,
                               double h) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  xp[static_cast<std::size_t>(direction)] += h;
  xm[static_cast<std::size_t>(direction)] -= h;
  const double fd = (evaluate(f, xp) - evaluate(f, xm)) / (2.0 * h);
  const double exact = evaluate(partial_derivative(f, direction), x);
  return std::abs(fd - exact) / std::max(1.0, std::abs(exact));
}

}  // namespace qpeuler::oracle
