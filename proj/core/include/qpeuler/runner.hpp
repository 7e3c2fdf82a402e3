#pragma once

#include <iosfwd>
#include <string>

#include "qpeuler/config.hpp"
#include "qpeuler/io.hpp"

namespace qpeuler {

/// Exit codes shared by every command: 0 ok, 2 configuration error,
/// 3 solver abort (margin loss, Newton failure, nonfinite state, resonance
/// hit mid-run), 4 tolerance breach (divergence bound, non-resonance check).
struct RunOutcome {
  int exit_code = 0;
  std::string message;
};

/// Full run: writes manifest.json, diagnostics.csv, state snapshots, optional
/// trajectories.csv and result.json into rc.out_dir. Partial artifacts are
/// kept when the run aborts.
RunOutcome run_from_config(const RunConfig& rc, std::ostream& log);

/// Evaluates the snapshot's field over a window in R^n into a dense value
/// file.
RunOutcome export_grid_command(const std::string& snapshot_path, const io::GridWindow& window,
                               const std::string& out_path, std::ostream& log);

/// Standalone diffeomorphism exercise: treats the snapshot's field as a
/// displacement, certifies the Jacobian margin, inverts on the grid
/// (grid_points = 0 derives the grid from the box), writes the inverse
/// displacement snapshot and, when samples_path is nonempty, the lift samples
/// of the inverse.
RunOutcome invert_diffeo_command(const std::string& snapshot_path, int grid_points,
                                 double newton_tol, const std::string& out_path,
                                 const std::string& samples_path, std::ostream& log);

struct OmegaSpec {
  bool canonical = false;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd unit;
};

/// Prints the box summary and the truncated non-resonance report; exit 4 when
/// the box fails the separation tolerance.
RunOutcome check_omega_command(const OmegaSpec& spec, int K, double tol, std::ostream& log);

}  // namespace qpeuler
