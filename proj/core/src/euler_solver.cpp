#include "qpeuler/euler_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>
#include <utility>

#include "qpeuler/errors.hpp"

namespace qpeuler {

namespace {

double coeff_l2(const QPScalar& f) {
  double s = 0.0;
  for (const Complex c : f.coeffs()) s += std::norm(c);
  return std::sqrt(s);
}

bool finite_field(const QPVectorField& u) { return std::isfinite(max_abs_coeff(u)); }

NormParams resolve_norm(NormParams p, int M) {
  if (p.l < 0) p.l = 0;
  if (!(p.s > M / 2.0)) p.s = M / 2.0 + 0.5;
  return p;
}

TorusGrid resolve_grid(const SolverConfig& cfg, const ModeSet& ms) {
  if (cfg.grid_points_per_dim == 0) return TorusGrid::for_mode_set(ms);
  return TorusGrid(ms.M(), cfg.grid_points_per_dim);
}

struct StepPlan {
  std::int64_t nsteps = 0;
  double dt = 0.0;
};

// Rounds the step count so the run lands on t_end exactly.
StepPlan plan_steps(double t0, const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  const double span = cfg.t_end - t0;
  if (span < 0.0) throw ConfigError("t_end precedes the initial time");
  if (span == 0.0) return {0, 0.0};
  const std::int64_t n = std::max<std::int64_t>(1, std::llround(span / cfg.dt));
  return {n, span / static_cast<double>(n)};
}

DiagnosticsRow make_row(double t, const QPVectorField& u, const NormParams& np, double dt,
                        unsigned extra_flags) {
  DiagnosticsRow row;
  row.t = t;
  row.energy = averaged_energy(u);
  row.div_norm = coeff_l2(divergence(u));
  row.norm_ls = norm(u, np);
  row.momentum = momentum(u);
  row.flags = extra_flags;
  if (dt > cfl_guideline(u)) row.flags |= kFlagCflWarning;
  return row;
}

RunStatus classify_abort(const SolverAbort& e) {
  return std::string_view(e.what()).find("Newton") != std::string_view::npos
             ? RunStatus::newton_failure
             : RunStatus::margin_loss;
}

struct LagrangianRhs {
  QPVectorField kv;
  double aliasing = 0.0;
};

LagrangianRhs lagrangian_rhs_with(const QPVectorField& v, const QPDiffeo& phi,
                                  const QPDiffeo& phi_inverse, const TorusGrid& grid) {
  ComposedField u = compose_field(v, phi_inverse, grid);
  QPVectorField accel = pressure_gradient(u.field);
  ComposedField back = compose_field(accel, phi, grid);
  return {std::move(back.field), std::max(u.aliasing_residual, back.aliasing_residual)};
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::divergence_breach: return "divergence_breach";
    case RunStatus::nonfinite: return "nonfinite";
    case RunStatus::margin_loss: return "margin_loss";
    case RunStatus::newton_failure: return "newton_failure";
  }
  return "unknown";
}

double cfl_guideline(const QPVectorField& u) {
  const double lam = u.mode_set()->max_lambda_norm();
  const double amp = coeff_l1(u);
  if (lam <= 0.0 || amp <= 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 / (lam * amp);
}

QPVectorField rhs_eulerian(const QPVectorField& u) {
  AdvectQuadratic aq = advect_and_quadratic(u);
  return sub(pressure_gradient_from(aq.advect, aq.quadratic), aq.advect);
}

EulerianState step_rk4(const EulerianState& state, double dt) {
  const QPVectorField& u = state.u;
  const QPVectorField k1 = rhs_eulerian(u);
  const QPVectorField k2 = rhs_eulerian(axpy(u, 0.5 * dt, k1));
  const QPVectorField k3 = rhs_eulerian(axpy(u, 0.5 * dt, k2));
  const QPVectorField k4 = rhs_eulerian(axpy(u, dt, k3));
  QPVectorField next = axpy(u, dt / 6.0, k1);
  next = axpy(next, dt / 3.0, k2);
  next = axpy(next, dt / 3.0, k3);
  next = axpy(next, dt / 6.0, k4);
  return {state.t + dt, std::move(next)};
}

EulerianRun integrate(EulerianState state, const SolverConfig& config) {
  EulerianRun run;
  const StepPlan plan = plan_steps(state.t, config);
  const NormParams np = resolve_norm(config.norm, state.u.mode_set()->M());
  const int cadence = std::max(1, config.energy_report_every);

  if (!finite_field(state.u)) {
    run.status = RunStatus::nonfinite;
    run.message = "initial state has nonfinite coefficients";
    run.state = std::move(state);
    return run;
  }
  {
    DiagnosticsRow row = make_row(state.t, state.u, np, plan.dt, 0);
    if (row.div_norm > config.div_tol) {
      run.status = RunStatus::divergence_breach;
      run.message = "initial divergence norm " + std::to_string(row.div_norm) +
                    " exceeds div_tol " + std::to_string(config.div_tol);
    }
    run.diagnostics.rows.push_back(std::move(row));
    if (run.status != RunStatus::ok) {
      run.state = std::move(state);
      return run;
    }
  }

  for (std::int64_t k = 1; k <= plan.nsteps; ++k) {
    state = step_rk4(state, plan.dt);
    state.t = (k == plan.nsteps) ? config.t_end : state.t;
    if (!finite_field(state.u)) {
      run.status = RunStatus::nonfinite;
      run.message = "nonfinite coefficients after step " + std::to_string(k);
      break;
    }
    const double div = coeff_l2(divergence(state.u));
    if (div > config.div_tol) {
      run.status = RunStatus::divergence_breach;
      run.message = "divergence norm " + std::to_string(div) + " exceeds div_tol after step " +
                    std::to_string(k);
      run.diagnostics.rows.push_back(make_row(state.t, state.u, np, plan.dt, 0));
      break;
    }
    if (k % cadence == 0 || k == plan.nsteps) {
      run.diagnostics.rows.push_back(make_row(state.t, state.u, np, plan.dt, 0));
    }
  }
  run.state = std::move(state);
  return run;
}

QPVectorField rhs_lagrangian(const QPVectorField& v, const QPDiffeo& phi, const TorusGrid& grid) {
  const InvertedDiffeo inv = invert(phi, grid);
  return lagrangian_rhs_with(v, phi, inv.inverse, grid).kv;
}

LagrangianRun integrate_lagrangian(LagrangianState state, const SolverConfig& config) {
  LagrangianRun run;
  const ModeSetPtr ms = state.v.mode_set();
  const TorusGrid grid = resolve_grid(config, *ms);
  const StepPlan plan = plan_steps(state.t, config);
  const NormParams np = resolve_norm(config.norm, ms->M());
  const int cadence = std::max(1, config.energy_report_every);

  const auto note_aliasing = [&run](double r) {
    run.max_aliasing_residual = std::max(run.max_aliasing_residual, r);
  };

  // Diagnostics live on u = v o phi^{-1}; inversion at cadence only.
  const auto record = [&](double t) -> bool {
    try {
      const InvertedDiffeo inv = invert(state.phi, grid, config.newton_tol,
                                        config.newton_max_iter);
      ComposedField u = compose_field(state.v, inv.inverse, grid);
      note_aliasing(std::max(u.aliasing_residual, inv.aliasing_residual));
      unsigned flags = 0;
      if (run.max_aliasing_residual > config.aliasing_threshold) flags |= kFlagAliasingWarning;
      run.diagnostics.rows.push_back(make_row(t, u.field, np, plan.dt, flags));
      return true;
    } catch (const SolverAbort& e) {
      run.status = classify_abort(e);
      run.message = e.what();
      return false;
    }
  };

  if (!record(state.t)) {
    run.state = std::move(state);
    return run;
  }

  for (std::int64_t k = 1; k <= plan.nsteps; ++k) {
    QPVectorField f = state.phi.displacement();
    const QPVectorField& v = state.v;
    const double dt = plan.dt;
    try {
      // Stage maps must stay diffeomorphisms; each make() certifies a margin.
      const QPDiffeo phi1 = state.phi;
      QPDiffeo inv_shared = QPDiffeo::identity(ms);
      const bool shared = config.inversion == InversionPolicy::per_step;
      if (shared) {
        inv_shared = invert(phi1, grid, config.newton_tol, config.newton_max_iter).inverse;
      }
      const auto stage_kv = [&](const QPVectorField& v_stage, const QPDiffeo& phi_stage) {
        const QPDiffeo inv_stage =
            shared ? inv_shared
                   : invert(phi_stage, grid, config.newton_tol, config.newton_max_iter).inverse;
        LagrangianRhs r = lagrangian_rhs_with(v_stage, phi_stage, inv_stage, grid);
        note_aliasing(r.aliasing);
        return std::move(r.kv);
      };

      const QPVectorField& k1f = v;
      const QPVectorField k1v = stage_kv(v, phi1);

      const QPVectorField v2 = axpy(v, 0.5 * dt, k1v);
      const QPDiffeo phi2 = QPDiffeo::make(axpy(f, 0.5 * dt, k1f), grid);
      const QPVectorField& k2f = v2;
      const QPVectorField k2v = stage_kv(v2, phi2);

      const QPVectorField v3 = axpy(v, 0.5 * dt, k2v);
      const QPDiffeo phi3 = QPDiffeo::make(axpy(f, 0.5 * dt, k2f), grid);
      const QPVectorField& k3f = v3;
      const QPVectorField k3v = stage_kv(v3, phi3);

      const QPVectorField v4 = axpy(v, dt, k3v);
      const QPDiffeo phi4 = QPDiffeo::make(axpy(f, dt, k3f), grid);
      const QPVectorField& k4f = v4;
      const QPVectorField k4v = stage_kv(v4, phi4);

      QPVectorField fn = axpy(f, dt / 6.0, k1f);
      fn = axpy(fn, dt / 3.0, k2f);
      fn = axpy(fn, dt / 3.0, k3f);
      fn = axpy(fn, dt / 6.0, k4f);

      QPVectorField vn = axpy(v, dt / 6.0, k1v);
      vn = axpy(vn, dt / 3.0, k2v);
      vn = axpy(vn, dt / 3.0, k3v);
      vn = axpy(vn, dt / 6.0, k4v);

      state.phi = QPDiffeo::make(std::move(fn), grid);
      state.v = std::move(vn);
      state.t = (k == plan.nsteps) ? config.t_end : state.t + dt;
    } catch (const SolverAbort& e) {
      run.status = classify_abort(e);
      run.message = e.what() + std::string(" (step ") + std::to_string(k) + ")";
      break;
    }
    if (!finite_field(state.v) || !finite_field(state.phi.displacement())) {
      run.status = RunStatus::nonfinite;
      run.message = "nonfinite coefficients after step " + std::to_string(k);
      break;
    }
    if (k % cadence == 0 || k == plan.nsteps) {
      if (!record(state.t)) break;
    }
  }
  run.state = std::move(state);
  return run;
}

FlowMapRun flow_map(const std::function<QPVectorField(double)>& u_at, ModeSetPtr ms,
                    const SolverConfig& config) {
  FlowMapRun run;
  const TorusGrid grid = resolve_grid(config, *ms);
  const StepPlan plan = plan_steps(0.0, config);

  QPVectorField f = QPVectorField::zero(ms);
  run.times.push_back(0.0);
  run.maps.push_back(QPDiffeo::identity(ms));

  const auto note = [&run](double r) {
    run.max_aliasing_residual = std::max(run.max_aliasing_residual, r);
  };

  double t = 0.0;
  for (std::int64_t k = 1; k <= plan.nsteps; ++k) {
    const double dt = plan.dt;
    try {
      const auto stage = [&](double ts, const QPVectorField& f_stage) {
        const QPDiffeo phi = QPDiffeo::make(f_stage, grid);
        ComposedField c = compose_field(u_at(ts), phi, grid);
        note(c.aliasing_residual);
        return std::move(c.field);
      };
      const QPVectorField k1 = stage(t, f);
      const QPVectorField k2 = stage(t + 0.5 * dt, axpy(f, 0.5 * dt, k1));
      const QPVectorField k3 = stage(t + 0.5 * dt, axpy(f, 0.5 * dt, k2));
      const QPVectorField k4 = stage(t + dt, axpy(f, dt, k3));
      QPVectorField fn = axpy(f, dt / 6.0, k1);
      fn = axpy(fn, dt / 3.0, k2);
      fn = axpy(fn, dt / 3.0, k3);
      fn = axpy(fn, dt / 6.0, k4);
      f = std::move(fn);
      t = (k == plan.nsteps) ? config.t_end : t + dt;
      run.maps.push_back(QPDiffeo::make(f, grid));
      run.times.push_back(t);
    } catch (const SolverAbort& e) {
      run.status = classify_abort(e);
      run.message = e.what() + std::string(" (step ") + std::to_string(k) + ")";
      break;
    }
    if (!finite_field(f)) {
      run.status = RunStatus::nonfinite;
      run.message = "nonfinite displacement after step " + std::to_string(k);
      break;
    }
  }
  return run;
}

TrajectoryRun trajectories(const std::function<QPVectorField(double)>& u_at,
                           const std::vector<Eigen::VectorXd>& seeds,
                           const SolverConfig& config) {
  TrajectoryRun run;
  const StepPlan plan = plan_steps(0.0, config);
  run.times.push_back(0.0);
  run.polylines.assign(seeds.size(), {});
  for (std::size_t s = 0; s < seeds.size(); ++s) run.polylines[s].push_back(seeds[s]);

  const auto eval_at = [](const QPVectorField& u, const Eigen::VectorXd& x) {
    return evaluate(u, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  };

  double t = 0.0;
  for (std::int64_t k = 1; k <= plan.nsteps; ++k) {
    const double dt = plan.dt;
    const QPVectorField u1 = u_at(t);
    const QPVectorField u2 = u_at(t + 0.5 * dt);
    const QPVectorField u4 = u_at(t + dt);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const Eigen::VectorXd& x = run.polylines[s].back();
      const Eigen::VectorXd k1 = eval_at(u1, x);
      const Eigen::VectorXd k2 = eval_at(u2, x + 0.5 * dt * k1);
      const Eigen::VectorXd k3 = eval_at(u2, x + 0.5 * dt * k2);
      const Eigen::VectorXd k4 = eval_at(u4, x + dt * k3);
      Eigen::VectorXd xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!xn.allFinite()) {
        run.status = RunStatus::nonfinite;
        run.message = "nonfinite trajectory for seed " + std::to_string(s) + " after step " +
                      std::to_string(k);
        // keep all polylines aligned with times: drop this step's partial points
        for (std::size_t s2 = 0; s2 < s; ++s2) run.polylines[s2].pop_back();
        return run;
      }
      run.polylines[s].push_back(std::move(xn));
    }
    t = (k == plan.nsteps) ? config.t_end : t + dt;
    run.times.push_back(t);
  }
  return run;
}

LagrangianCoeff fourier_coeff_lagrangian(const QPVectorField& v, const QPDiffeo& phi,
                                         const ModeIndex& m, int series_order, double tail_tol) {
  const ModeSetPtr& ms = v.mode_set();
  if (ms.get() != phi.mode_set().get()) {
    throw ConfigError("velocity and flow map must share one ModeSet instance");
  }
  const std::int64_t o = ms->ordinal(m);
  if (o < 0) throw ConfigError("requested mode lies outside the box");
  if (series_order < 1) throw ConfigError("series order must be >= 1");

  // h = (Lambda_m, f)
  QPScalar h = QPScalar::zero(ms);
  const QPVectorField& f = phi.displacement();
  for (int k = 0; k < ms->n(); ++k) {
    h = axpy(h, ms->lambda_component(o, k), f[k]);
  }

  // E = sum_{r<=order} (-i h)^r / r!, each power re-projected to the box.
  QPScalar E = QPScalar::constant(ms, 1.0);
  QPScalar p = QPScalar::constant(ms, 1.0);
  Complex factor(1.0, 0.0);
  for (int r = 1; r <= series_order; ++r) {
    p = multiply(p, h);
    factor *= Complex(0.0, -1.0) / static_cast<double>(r);
    E = add(E, scale(p, factor));
  }

  LagrangianCoeff out;
  const double H = h.coeff_l1();
  double term = 1.0;
  for (int r = 1; r <= series_order; ++r) term *= H / static_cast<double>(r);
  for (int r = series_order + 1; r <= series_order + 400; ++r) {
    term *= H / static_cast<double>(r);
    out.tail_bound += term;
    if (term < 1e-300 || term < out.tail_bound * 1e-18) break;
  }
  if (out.tail_bound > tail_tol) {
    throw ToleranceBreach("exponential series tail bound " + std::to_string(out.tail_bound) +
                          " exceeds " + std::to_string(tail_tol) +
                          "; raise the order or shrink the displacement");
  }

  out.value.resize(ms->n());
  for (int j = 0; j < ms->n(); ++j) {
    out.value(j) = multiply(v[j], E).coeff(m);
  }
  return out;
}

}  // namespace qpeuler
