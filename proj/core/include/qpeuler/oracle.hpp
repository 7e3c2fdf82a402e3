#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qpeuler/qp_field.hpp"

// Independent implementations used only to judge the main solver: a
// conventional periodic pseudo-spectral 2D Euler solver in vorticity form, a
// brute-force convolution, and central-difference derivative checks. The
// discretizations deliberately differ from the main code path (vorticity vs
// velocity unknowns, grid products vs direct convolution) so agreement is
// evidence rather than tautology.
namespace qpeuler::oracle {

/// Spectrum on the unit 2-torus: value(x) = sum_m c_m e^{2 pi i (m . x)},
/// coefficient of mode (m1, m2) stored at bin (m mod N) of an N x N
/// row-major array. Real fields keep a Hermitian spectrum.
struct Spectrum2D {
  int N = 0;
  std::vector<Complex> c;

  explicit Spectrum2D(int N_) : N(N_), c(static_cast<std::size_t>(N_) * N_, Complex(0, 0)) {}
  std::size_t bin(int m1, int m2) const {
    const int a = ((m1 % N) + N) % N;
    const int b = ((m2 % N) + N) % N;
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(N) + static_cast<std::size_t>(b);
  }
  Complex& at(int m1, int m2) { return c[bin(m1, m2)]; }
  Complex at(int m1, int m2) const { return c[bin(m1, m2)]; }
};

struct OracleRun {
  Spectrum2D vorticity;
  Spectrum2D u1, u2;
  /// Self-check drifts over the run (relative where the start is nonzero);
  /// the oracle may only judge anything if these are at RK4 level.
  double energy_drift = 0.0;
  double enstrophy_drift = 0.0;
};

/// Vorticity-form pseudo-spectral solve of 2D incompressible Euler:
/// w_t + u . grad w = 0 with u recovered through the streamfunction
/// (u1 = i k2 w / |k|^2, u2 = -i k1 w / |k|^2, k = 2 pi m), RK4 in time,
/// products on the collocation grid with the 2/3-rule dealiasing mask
/// |m_i| <= N/3. N must be a power of two >= 8. Throws ToleranceBreach on
/// nonfinite values.
OracleRun periodic_euler_2d(const Spectrum2D& w0, double dt, double t_end);

void velocity_from_vorticity(const Spectrum2D& w, Spectrum2D& u1, Spectrum2D& u2);
Spectrum2D vorticity_from_velocity(const Spectrum2D& u1, const Spectrum2D& u2);

/// Places a 2-frequency QP scalar (M = 2; meant for the periodic limit
/// Omega = I_2) onto the oracle's spectrum. Modes must satisfy |m|_inf < N/2.
Spectrum2D spectrum_from_qp(const QPScalar& f, int N);

/// Besicovitch energy of the pair of velocity spectra, (1/2) sum |u_m|^2.
double spectrum_energy(const Spectrum2D& u1, const Spectrum2D& u2);

/// Reference convolution: per output mode, accumulates f_{m'} g_{m - m'} over
/// f's stored support in ascending ordinal order and prunes exactly like the
/// production path, so the result must match multiply() bit-for-bit.
QPScalar brute_force_convolution(const QPScalar& f, const QPScalar& g);

/// |central difference of f at x - evaluate(partial_derivative(f, j), x)|
/// relative to max(1, |derivative|). O(h^2) in exact arithmetic.
double finite_difference_check(const QPScalar& f, int direction, std::span<const double> x,
                               double h);

}  // namespace qpeuler::oracle
