#include "qpeuler/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "qpeuler/errors.hpp"
#include "qpeuler/presets.hpp"
#include "qpeuler/qp_operators.hpp"

namespace qpeuler {

namespace {

using nlohmann::json;

std::string snapshot_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%06lld.txt", static_cast<long long>(step));
  return buf;
}

QPVectorField build_initial(const RunConfig& rc, const ModeSetPtr& ms, double* projection_delta) {
  *projection_delta = 0.0;
  if (rc.preset == "shear") return shear(ms, rc.shear_amps);
  if (rc.preset == "taylor_green") return taylor_green(ms);
  if (rc.preset == "random_divfree") {
    NormParams np{0, rc.norm.s};
    if (!(np.s > ms->M() / 2.0)) np.s = ms->M() / 2.0 + 0.5;
    RandomDivfreeResult r =
        random_divfree(ms, rc.random_sub_box, rc.seed, rc.random_norm, np.s);
    *projection_delta = r.projection_delta;
    return std::move(r.u);
  }
  // explicit mode list, one complex vector per mode; symmetrized by from_modes
  const int n = ms->n();
  std::vector<std::vector<std::pair<ModeIndex, Complex>>> per_comp(static_cast<std::size_t>(n));
  for (const InitialModeEntry& e : rc.modes) {
    if (static_cast<int>(e.coeff.size()) != n) {
      throw ConfigError("initial mode entry needs " + std::to_string(n) + " components");
    }
    for (int k = 0; k < n; ++k) {
      per_comp[static_cast<std::size_t>(k)].emplace_back(e.m, e.coeff[static_cast<std::size_t>(k)]);
    }
  }
  std::vector<QPScalar> comps;
  for (int k = 0; k < n; ++k) {
    comps.push_back(QPScalar::from_modes(ms, per_comp[static_cast<std::size_t>(k)]));
  }
  QPVectorField u(std::move(comps));
  if (rc.leray_project_initial) {
    QPVectorField projected = leray_project(u);
    *projection_delta = max_abs_coeff(sub(u, projected));
    return projected;
  }
  return u;
}

json mode_set_summary(const ModeSet& ms) {
  return json{{"n", ms.n()},
              {"M", ms.M()},
              {"K", ms.K()},
              {"modes", ms.size()},
              {"low_frequency_modes", ms.bullet_count()},
              {"max_lambda", ms.max_lambda_norm()}};
}

json nonresonance_summary(const NonresonanceReport& nc, double tol) {
  json j{{"ok", nc.ok}, {"min_separation", nc.min_separation}, {"tolerance", tol}};
  j["worst_pair"] = json::array({nc.worst_a, nc.worst_b});
  return j;
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& rc, const ModeSet& ms,
                    const NonresonanceReport& nc, double projection_delta) {
  json j;
  j["tool"] = "qpeuler";
  j["version"] = io::kVersion;
  j["config"] = rc.raw;
  j["resolved"] = json{{"K", rc.K},
                       {"dt", rc.dt},
                       {"t_end", rc.t_end},
                       {"mode", rc.mode},
                       {"grid", rc.grid_points},
                       {"inversion", rc.inversion},
                       {"norm_l", rc.norm.l},
                       {"norm_s", rc.norm.s},
                       {"div_tol", rc.div_tol},
                       {"newton_tol", rc.newton_tol},
                       {"aliasing_threshold", rc.aliasing_threshold},
                       {"nonresonance_tol", rc.nonresonance_tol},
                       {"allow_resonant", rc.allow_resonant},
                       {"seed", rc.seed},
                       {"snapshot_every", rc.snapshot_every},
                       {"diagnostics_every", rc.diagnostics_every},
                       {"output_dir", rc.out_dir}};
  j["mode_set"] = mode_set_summary(ms);
  j["nonresonance"] = nonresonance_summary(nc, rc.nonresonance_tol);
  j["initial"] = json{{"preset", rc.preset.empty() ? "modes" : rc.preset},
                      {"leray_projected", rc.leray_project_initial || rc.preset == "random_divfree"},
                      {"projection_delta", projection_delta}};
  std::ofstream os(dir / "manifest.json");
  if (!os) throw ConfigError("cannot write manifest in '" + dir.string() + "'");
  os << j.dump(2) << '\n';
}

void write_result(const std::filesystem::path& dir, RunStatus status, const std::string& message,
                  double t_final, double max_aliasing) {
  json j{{"status", to_string(status)},
         {"message", message},
         {"t_final", t_final},
         {"max_aliasing_residual", max_aliasing}};
  std::ofstream os(dir / "result.json");
  os << j.dump(2) << '\n';
}

int exit_code_for(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return 0;
    case RunStatus::divergence_breach: return 4;
    case RunStatus::nonfinite:
    case RunStatus::margin_loss:
    case RunStatus::newton_failure: return 3;
  }
  return 1;
}

struct CoupledRuns {
  EulerianRun run;
  TrajectoryRun traj;
};

/// Eulerian integration with particle seeds advanced inside the same RK4
/// stages, so the trajectories stay 4th order against the evolving field.
CoupledRuns integrate_with_seeds(EulerianState state, const SolverConfig& cfg,
                                 const std::vector<Eigen::VectorXd>& seeds) {
  CoupledRuns out;
  const std::int64_t nsteps = std::max<std::int64_t>(
      cfg.t_end > state.t ? 1 : 0, std::llround((cfg.t_end - state.t) / cfg.dt));
  const double dt = nsteps > 0 ? (cfg.t_end - state.t) / static_cast<double>(nsteps) : 0.0;

  out.traj.times.push_back(state.t);
  out.traj.polylines.assign(seeds.size(), {});
  for (std::size_t s = 0; s < seeds.size(); ++s) out.traj.polylines[s].push_back(seeds[s]);

  // run integrate() for the field alone to reuse its checks and diagnostics;
  // the coupled loop below re-advances the field only to expose stage values
  // to the particle ODE, so both see the identical trajectory of u.
  const auto eval_at = [](const QPVectorField& u, const Eigen::VectorXd& x) {
    return evaluate(u, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  };

  out.run = integrate(state, cfg);

  QPVectorField u = state.u;
  const std::int64_t completed =
      nsteps == 0 ? 0
      : out.run.status == RunStatus::ok
          ? nsteps
          : std::max<std::int64_t>(0, std::llround((out.run.state.t - state.t) / dt));
  double t = state.t;
  for (std::int64_t k = 1; k <= completed; ++k) {
    const QPVectorField k1 = rhs_eulerian(u);
    const QPVectorField u2 = axpy(u, 0.5 * dt, k1);
    const QPVectorField k2 = rhs_eulerian(u2);
    const QPVectorField u3 = axpy(u, 0.5 * dt, k2);
    const QPVectorField k3 = rhs_eulerian(u3);
    const QPVectorField u4 = axpy(u, dt, k3);
    const QPVectorField k4 = rhs_eulerian(u4);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const Eigen::VectorXd& x = out.traj.polylines[s].back();
      const Eigen::VectorXd kx1 = eval_at(u, x);
      const Eigen::VectorXd kx2 = eval_at(u2, x + 0.5 * dt * kx1);
      const Eigen::VectorXd kx3 = eval_at(u3, x + 0.5 * dt * kx2);
      const Eigen::VectorXd kx4 = eval_at(u4, x + dt * kx3);
      out.traj.polylines[s].push_back(x + (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4));
    }
    QPVectorField un = axpy(u, dt / 6.0, k1);
    un = axpy(un, dt / 3.0, k2);
    un = axpy(un, dt / 3.0, k3);
    u = axpy(un, dt / 6.0, k4);
    t += dt;
    out.traj.times.push_back(t);
  }
  if (out.run.status != RunStatus::ok) {
    out.traj.status = out.run.status;
    out.traj.message = "field run aborted: " + out.run.message;
  }
  return out;
}

}  // namespace

RunOutcome run_from_config(const RunConfig& rc, std::ostream& log) {
  const FrequencyMatrix omega =
      rc.canonical ? FrequencyMatrix::canonical(static_cast<int>(rc.omega_unit.size()),
                                                rc.omega_unit)
                   : FrequencyMatrix(rc.omega);
  const ModeSetPtr ms = ModeSet::build(omega, rc.K);
  const NonresonanceReport nc = check_nonresonance(*ms, rc.nonresonance_tol);
  if (!nc.ok && !rc.allow_resonant) {
    throw ConfigError(
        "the frequency matrix is resonant on this box (min exponent separation " +
        io::g17(nc.min_separation) + " < " + io::g17(rc.nonresonance_tol) +
        "); pass --allow-resonant to proceed anyway");
  }

  double projection_delta = 0.0;
  QPVectorField u0 = build_initial(rc, ms, &projection_delta);

  const std::filesystem::path dir(rc.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + rc.out_dir + "'");
  write_manifest(dir, rc, *ms, nc, projection_delta);

  const SolverConfig sc = solver_config(rc);
  const int ncomp = ms->n();

  if (rc.mode == "lagrangian") {
    LagrangianState st{0.0, u0, QPDiffeo::identity(ms)};
    io::write_snapshot((dir / snapshot_name(0)).string(), 0.0, rc.norm, u0);
    LagrangianRun run = integrate_lagrangian(std::move(st), sc);
    io::write_diagnostics_csv((dir / "diagnostics.csv").string(), run.diagnostics, ncomp);
    io::write_snapshot((dir / "final_velocity_lagrangian.txt").string(), run.state.t, rc.norm,
                       run.state.v);
    io::write_snapshot((dir / "final_displacement.txt").string(), run.state.t, rc.norm,
                       run.state.phi.displacement());
    write_result(dir, run.status, run.message, run.state.t, run.max_aliasing_residual);
    log << "lagrangian run: status " << to_string(run.status) << ", t = " << run.state.t
        << ", max aliasing residual " << run.max_aliasing_residual << '\n';
    if (run.max_aliasing_residual > rc.aliasing_threshold) {
      log << "warning: aliasing residual exceeded " << rc.aliasing_threshold << '\n';
    }
    return {exit_code_for(run.status), run.message};
  }

  EulerianState st{0.0, u0};
  io::write_snapshot((dir / snapshot_name(0)).string(), 0.0, rc.norm, u0);

  EulerianRun run;
  if (!rc.trajectory_seeds.empty()) {
    CoupledRuns cr = integrate_with_seeds(st, sc, rc.trajectory_seeds);
    run = std::move(cr.run);
    io::write_trajectories_csv((dir / "trajectories.csv").string(), cr.traj);
  } else if (rc.snapshot_every > 0) {
    run = integrate(st, sc);
    // re-walk in legs for the intermediate snapshots only when the run
    // survived; an aborted run keeps its final snapshot below
    const std::int64_t nsteps =
        std::max<std::int64_t>(rc.t_end > 0 ? 1 : 0, std::llround(rc.t_end / rc.dt));
    if (run.status == RunStatus::ok && nsteps > 0) {
      EulerianState walk = st;
      SolverConfig chunk = sc;
      chunk.dt = rc.t_end / static_cast<double>(nsteps);
      for (std::int64_t k = rc.snapshot_every; k < nsteps; k += rc.snapshot_every) {
        chunk.t_end = rc.t_end * static_cast<double>(k) / static_cast<double>(nsteps);
        EulerianRun leg = integrate(walk, chunk);
        walk = leg.state;
        io::write_snapshot((dir / snapshot_name(k)).string(), walk.t, rc.norm, walk.u);
      }
    }
  } else {
    run = integrate(st, sc);
  }

  io::write_diagnostics_csv((dir / "diagnostics.csv").string(), run.diagnostics, ncomp);
  io::write_snapshot((dir / "state_final.txt").string(), run.state.t, rc.norm, run.state.u);
  write_result(dir, run.status, run.message, run.state.t, 0.0);
  log << "eulerian run: status " << to_string(run.status) << ", t = " << run.state.t << ", E = "
      << averaged_energy(run.state.u) << '\n';
  return {exit_code_for(run.status), run.message};
}

RunOutcome export_grid_command(const std::string& snapshot_path, const io::GridWindow& window,
                               const std::string& out_path, std::ostream& log) {
  const io::Snapshot snap = io::read_snapshot(snapshot_path);
  io::export_grid(out_path, snap.u, window);
  std::int64_t count = 1;
  for (const int r : window.resolution) count *= r;
  log << "wrote " << count << " points (" << snap.u.dim() << " components) to " << out_path
      << '\n';
  return {0, ""};
}

RunOutcome invert_diffeo_command(const std::string& snapshot_path, int grid_points,
                                 double newton_tol, const std::string& out_path,
                                 const std::string& samples_path, std::ostream& log) {
  const io::Snapshot snap = io::read_snapshot(snapshot_path);
  const ModeSetPtr& ms = snap.u.mode_set();
  const TorusGrid grid =
      grid_points == 0 ? TorusGrid::for_mode_set(*ms) : TorusGrid(ms->M(), grid_points);
  const QPDiffeo phi = QPDiffeo::make(snap.u, grid);
  log << "forward margin " << phi.margin() << " on G = " << grid.points_per_dim() << '\n';
  const InvertedDiffeo inv = invert(phi, grid, newton_tol);
  log << "inverse margin " << inv.inverse.margin() << ", round-trip residual "
      << inv.round_trip_residual << ", aliasing residual " << inv.aliasing_residual
      << ", Newton iterations <= " << inv.max_newton_iterations << '\n';
  if (!out_path.empty()) {
    io::write_snapshot(out_path, snap.t, snap.norm, inv.inverse.displacement());
    log << "wrote inverse displacement to " << out_path << '\n';
  }
  if (!samples_path.empty()) {
    io::write_torus_samples(samples_path, lift(inv.inverse, grid));
    log << "wrote inverse lift samples to " << samples_path << '\n';
  }
  return {0, ""};
}

RunOutcome check_omega_command(const OmegaSpec& spec, int K, double tol, std::ostream& log) {
  const FrequencyMatrix omega =
      spec.canonical
          ? FrequencyMatrix::canonical(static_cast<int>(spec.unit.size()), spec.unit)
          : FrequencyMatrix(spec.matrix);
  const ModeSetPtr ms = ModeSet::build(omega, K);
  const NonresonanceReport nc = check_nonresonance(*ms, tol);
  log << "n " << ms->n() << ", M " << ms->M() << ", K " << K << ", modes " << ms->size() << '\n';
  log << "min exponent separation " << io::g17(nc.min_separation);
  if (!nc.worst_a.empty()) {
    log << " between modes (";
    for (std::size_t j = 0; j < nc.worst_a.size(); ++j) {
      log << (j ? "," : "") << nc.worst_a[j];
    }
    log << ") and (";
    for (std::size_t j = 0; j < nc.worst_b.size(); ++j) {
      log << (j ? "," : "") << nc.worst_b[j];
    }
    log << ")";
  }
  log << "\ntolerance " << io::g17(tol) << '\n';
  if (nc.ok) {
    log << "verdict: non-resonant at this truncation\n";
    return {0, ""};
  }
  log << "verdict: RESONANT at this truncation\n";
  return {4, "frequency matrix fails the non-resonance separation tolerance"};
}

}  // namespace qpeuler
