#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpeuler/euler_solver.hpp"
#include "qpeuler/freq_lattice.hpp"

namespace qpeuler {

struct InitialModeEntry {
  ModeIndex m;
  std::vector<Complex> coeff;  // one complex per component
};

/// Parsed run configuration. See README for the JSON schema. `raw` keeps the
/// exact input text so the manifest can echo it byte-identically.
struct RunConfig {
  bool canonical = false;
  Eigen::MatrixXd omega;       // M x n, when canonical is false
  Eigen::VectorXd omega_unit;  // length n, when canonical is true
  int K = 0;

  NormParams norm;

  std::string preset;  // "", "shear", "taylor_green", "random_divfree"
  std::vector<double> shear_amps;
  int random_sub_box = 1;
  std::uint64_t seed = 0;
  double random_norm = 0.1;
  std::vector<InitialModeEntry> modes;
  bool leray_project_initial = false;

  std::string mode = "eulerian";  // or "lagrangian"
  double dt = 1e-3;
  double t_end = 1.0;
  int grid_points = 0;               // 0: derived from the box
  std::string inversion = "strict";  // or "per_step"
  int snapshot_every = 0;            // in steps; 0: initial and final only
  int diagnostics_every = 1;

  std::vector<Eigen::VectorXd> trajectory_seeds;

  double div_tol = 1e-10;
  double newton_tol = 1e-12;
  double aliasing_threshold = 1e-6;
  double nonresonance_tol = 1e-9;
  bool allow_resonant = false;

  std::string out_dir = "out";

  std::string raw;
};

/// Throws ConfigError naming the offending field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// The solver-facing slice of a run configuration.
SolverConfig solver_config(const RunConfig& rc);

}  // namespace qpeuler
