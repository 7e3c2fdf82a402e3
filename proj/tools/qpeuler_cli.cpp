// Command-line front end: run / export-grid / invert-diffeo / check-omega.
// Exit codes: 0 ok, 1 unexpected error, 2 bad configuration or arguments,
// 3 solver abort, 4 tolerance breach.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "qpeuler/config.hpp"
#include "qpeuler/errors.hpp"
#include "qpeuler/io.hpp"
#include "qpeuler/runner.hpp"

namespace {

using qpeuler::ConfigError;

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(cell, &pos));
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
      if (pos != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError(what + ": bad number '" + cell + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

Eigen::MatrixXd parse_matrix_arg(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    rows.push_back(parse_number_list(row, "--matrix row " + std::to_string(rows.size())));
    if (rows.back().size() != rows.front().size()) {
      throw ConfigError("--matrix: rows differ in length");
    }
  }
  if (rows.empty()) throw ConfigError("--matrix: empty");
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    }
  }
  return m;
}

struct RunOverrides {
  std::optional<double> dt, t_end;
  std::optional<int> K, snapshot_every, diagnostics_every;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool allow_resonant = false;
};

void apply_overrides(qpeuler::RunConfig& rc, const RunOverrides& ov, const std::string& config_path,
                     bool several) {
  if (ov.dt) rc.dt = *ov.dt;
  if (ov.t_end) rc.t_end = *ov.t_end;
  if (ov.K) rc.K = *ov.K;
  if (ov.seed) rc.seed = *ov.seed;
  if (ov.snapshot_every) rc.snapshot_every = *ov.snapshot_every;
  if (ov.diagnostics_every) rc.diagnostics_every = *ov.diagnostics_every;
  if (ov.allow_resonant) rc.allow_resonant = true;
  if (ov.out_dir) {
    if (several) {
      // several configs share one --out-dir: treat it as a parent directory
      const std::string stem = std::filesystem::path(config_path).stem().string();
      rc.out_dir = (std::filesystem::path(*ov.out_dir) / stem).string();
    } else {
      rc.out_dir = *ov.out_dir;
    }
  }
}

int exit_code_of(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const qpeuler::ToleranceBreach*>(&e)) return 4;
  if (dynamic_cast<const qpeuler::SolverAbort*>(&e)) return 3;
  if (dynamic_cast<const qpeuler::ResonanceError*>(&e)) return 3;
  return 1;
}

int run_command(const std::vector<std::string>& config_paths, int jobs, const RunOverrides& ov) {
  struct Slot {
    qpeuler::RunOutcome outcome{1, "did not run"};
    std::string log;
  };
  std::vector<Slot> slots(config_paths.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config_paths.size()) return;
      std::ostringstream log;
      try {
        qpeuler::RunConfig rc = qpeuler::load_config(config_paths[i]);
        apply_overrides(rc, ov, config_paths[i], config_paths.size() > 1);
        slots[i].outcome = qpeuler::run_from_config(rc, log);
      } catch (const std::exception& e) {
        slots[i].outcome = {exit_code_of(e), e.what()};
      }
      slots[i].log = log.str();
    }
  };

  const std::size_t nworkers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), config_paths.size());
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  int worst = 0;
  for (std::size_t i = 0; i < config_paths.size(); ++i) {
    if (config_paths.size() > 1) std::cout << "== " << config_paths[i] << " ==\n";
    std::cout << slots[i].log;
    if (slots[i].outcome.exit_code != 0) {
      std::cout << "error (exit " << slots[i].outcome.exit_code << "): " << slots[i].outcome.message
                << '\n';
    }
    worst = std::max(worst, slots[i].outcome.exit_code);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-periodic incompressible Euler toolbox"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "integrate one or more configured runs");
  std::vector<std::string> config_paths;
  run_cmd->add_option("configs", config_paths, "JSON run configuration file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  int jobs = 1;
  run_cmd->add_option("--jobs", jobs, "worker threads across configs")->check(CLI::Range(1, 256));
  RunOverrides ov;
  run_cmd->add_option("--dt", ov.dt, "override solver.dt");
  run_cmd->add_option("--t-end", ov.t_end, "override solver.t_end");
  run_cmd->add_option("--K", ov.K, "override the mode box radius");
  run_cmd->add_option("--seed", ov.seed, "override the RNG seed");
  run_cmd->add_option("--out-dir", ov.out_dir,
                      "override output_dir (a parent directory when several configs are given)");
  run_cmd->add_option("--snapshot-every", ov.snapshot_every, "override solver.snapshot_every");
  run_cmd->add_option("--diagnostics-every", ov.diagnostics_every,
                      "override solver.diagnostics_every");
  run_cmd->add_flag("--allow-resonant", ov.allow_resonant,
                    "proceed despite a failed non-resonance check");

  // export-grid
  auto* eg_cmd = app.add_subcommand("export-grid", "evaluate a snapshot on a rectangular window");
  std::string eg_snapshot;
  eg_cmd->add_option("snapshot", eg_snapshot, "snapshot file")
      ->required()
      ->check(CLI::ExistingFile);
  std::string eg_lo, eg_hi, eg_res;
  eg_cmd->add_option("--lo", eg_lo, "window lower corner, comma separated")->required();
  eg_cmd->add_option("--hi", eg_hi, "window upper corner, comma separated")->required();
  eg_cmd->add_option("--res", eg_res, "samples per axis, comma separated")->required();
  std::string eg_out = "grid.txt";
  eg_cmd->add_option("--out", eg_out, "output file");

  // invert-diffeo
  auto* inv_cmd =
      app.add_subcommand("invert-diffeo", "invert the diffeomorphism id + Omega^T F from a "
                                          "displacement snapshot");
  std::string inv_snapshot;
  inv_cmd->add_option("snapshot", inv_snapshot, "displacement snapshot file")
      ->required()
      ->check(CLI::ExistingFile);
  int inv_grid = 0;
  inv_cmd->add_option("--grid", inv_grid, "torus grid points per dimension (0: derived)")
      ->check(CLI::NonNegativeNumber);
  double inv_newton_tol = 1e-12;
  inv_cmd->add_option("--newton-tol", inv_newton_tol, "Newton convergence tolerance");
  std::string inv_out = "inverse.txt";
  inv_cmd->add_option("--out", inv_out, "inverse displacement output file");
  std::string inv_samples;
  inv_cmd->add_option("--samples", inv_samples, "also write the inverse torus lift samples here");

  // check-omega
  auto* co_cmd = app.add_subcommand("check-omega", "non-resonance diagnostics for a frequency "
                                                   "matrix on a mode box");
  std::string co_unit, co_matrix;
  co_cmd->add_option("--unit", co_unit,
                     "canonical matrix [I; w^T] from this direction (normalized), comma separated");
  co_cmd->add_option("--matrix", co_matrix,
                     "full M x n matrix; rows ';'-separated, entries ','-separated");
  int co_K = 4;
  co_cmd->add_option("--K", co_K, "mode box radius")->check(CLI::PositiveNumber);
  double co_tol = 1e-9;
  co_cmd->add_option("--tol", co_tol, "minimum exponent separation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return run_command(config_paths, jobs, ov);
    }
    if (eg_cmd->parsed()) {
      qpeuler::io::GridWindow window;
      window.lo = parse_number_list(eg_lo, "--lo");
      window.hi = parse_number_list(eg_hi, "--hi");
      for (const double r : parse_number_list(eg_res, "--res")) {
        if (r < 1 || r != std::floor(r)) throw ConfigError("--res: entries must be integers >= 1");
        window.resolution.push_back(static_cast<int>(r));
      }
      return qpeuler::export_grid_command(eg_snapshot, window, eg_out, std::cout).exit_code;
    }
    if (inv_cmd->parsed()) {
      return qpeuler::invert_diffeo_command(inv_snapshot, inv_grid, inv_newton_tol, inv_out,
                                            inv_samples, std::cout)
          .exit_code;
    }
    if (co_cmd->parsed()) {
      if (co_unit.empty() == co_matrix.empty()) {
        throw ConfigError("check-omega: give exactly one of --unit or --matrix");
      }
      qpeuler::OmegaSpec spec;
      if (!co_unit.empty()) {
        const std::vector<double> w = parse_number_list(co_unit, "--unit");
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
        const double vn = v.norm();
        if (!(vn > 0.0)) throw ConfigError("--unit: needs a nonzero norm");
        spec.canonical = true;
        spec.unit = v / vn;
      } else {
        spec.canonical = false;
        spec.matrix = parse_matrix_arg(co_matrix);
      }
      return qpeuler::check_omega_command(spec, co_K, co_tol, std::cout).exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_of(e);
  }
  return 1;
}
