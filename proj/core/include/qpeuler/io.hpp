#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qpeuler/euler_solver.hpp"
#include "qpeuler/qp_diffeo.hpp"
#include "qpeuler/qp_field.hpp"

namespace qpeuler::io {

inline constexpr const char* kVersion = "0.1.0";

/// %.17g, enough digits to round-trip a double.
std::string g17(double x);

/// Coefficient dump, one line per mode in lexicographic (ordinal) order over
/// the union of the component supports:
///   m_1 ... m_M  Lambda_1 ... Lambda_n  re_1 im_1 ... re_n im_n
void write_field(std::ostream& os, const QPVectorField& u);

struct Snapshot {
  double t = 0.0;
  NormParams norm;
  QPVectorField u;
};

/// Header (t, omega, K, norm params) + coefficient dump.
void write_snapshot(const std::string& path, double t, const NormParams& norm,
                    const QPVectorField& u);

/// Rebuilds the ModeSet from the header; the stored Lambda columns are
/// redundant and ignored. Reality is re-detected from the coefficients.
Snapshot read_snapshot(const std::string& path);

/// CSV: t,E,div_norm,norm_ls,p1_re,p1_im,...,pn_re,pn_im,flags.
void write_diagnostics_csv(const std::string& path, const Diagnostics& d, int ncomp);

/// CSV: t,seed,x_1,...,x_n (one row per time sample per seed).
void write_trajectories_csv(const std::string& path, const TrajectoryRun& run);

struct GridWindow {
  std::vector<double> lo, hi;   // corners in R^n
  std::vector<int> resolution;  // samples per axis (>= 1; endpoints inclusive)
};

/// Evaluates u on the rectangular window (not periodic; windows may be
/// arbitrarily large) and writes header + row-major values, one point per
/// line, all components. Throws ConfigError past the point budget.
void export_grid(const std::string& path, const QPVectorField& u, const GridWindow& window,
                 std::int64_t point_budget = 10'000'000);

/// Torus lift samples: header (M, G), then node_count lines of M reals.
void write_torus_samples(const std::string& path, const TorusDiffeo& phi);

}  // namespace qpeuler::io
