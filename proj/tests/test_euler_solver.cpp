#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>
#include "field_fixtures.hpp"
#include <qpeuler/errors.hpp>
#include <qpeuler/euler_solver.hpp>
#include <qpeuler/presets.hpp>

using namespace qpeuler;
using namespace qpeuler::testing;

namespace {

/// Shear displacement (a sin(2 pi x2), 0): strictly triangular Jacobian, so
/// det(I + df) = 1 identically and composition formulas are aliasing-clean.
QPVectorField triangular_shear(const ModeSetPtr& ms, double a) {
  QPScalar f1 = QPScalar::from_modes(ms, {{ModeIndex{0, 1}, {0.0, -a / 2}},
                                          {ModeIndex{0, -1}, {0.0, a / 2}}});
  return QPVectorField(std::vector<QPScalar>{std::move(f1), QPScalar::zero(ms)});
}

double momentum_drift(const Diagnostics& d) {
  return (d.rows.back().momentum - d.rows.front().momentum).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("the cell flow is a numerical steady state") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u = cell_flow(ms);
  CHECK(max_abs_coeff(rhs_eulerian(u)) < 1e-13);

  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.05;
  EulerianRun run = integrate(EulerianState{0.0, u}, cfg);
  REQUIRE(run.status == RunStatus::ok);
  CHECK(max_coeff_delta(run.state.u, u) < 5e-12);
  CHECK(run.diagnostics.rows.front().energy == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(run.diagnostics.rows.back().energy == doctest::Approx(0.25).epsilon(1e-13));
  for (const auto& row : run.diagnostics.rows) CHECK(row.div_norm < 1e-13);
}

TEST_CASE("integration conserves the quadratic invariants") {
  ModeSetPtr ms = unit_box(3);
  QPVectorField u0 = random_solenoidal(ms, 314, 0.5);
  u0 = scale(u0, 0.3 / max_abs_coeff(u0));

  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.02;
  EulerianRun run = integrate(EulerianState{0.0, u0}, cfg);
  REQUIRE(run.status == RunStatus::ok);

  const double e0 = run.diagnostics.rows.front().energy;
  const double eT = run.diagnostics.rows.back().energy;
  CHECK(std::abs(eT - e0) < 1e-9 * e0);
  CHECK(momentum_drift(run.diagnostics) < 1e-14);
  for (const auto& row : run.diagnostics.rows) CHECK(row.div_norm < 1e-10);
}

TEST_CASE("RK4 order measured by Richardson halving") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u0 = random_solenoidal(ms, 2718, 0.6);
  u0 = scale(u0, 0.3 / max_abs_coeff(u0));

  auto run_dt = [&](double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 0.05;
    cfg.energy_report_every = 1 << 20;
    EulerianRun r = integrate(EulerianState{0.0, u0}, cfg);
    REQUIRE(r.status == RunStatus::ok);
    return r.state.u;
  };
  QPVectorField a = run_dt(5e-3);
  QPVectorField b = run_dt(2.5e-3);
  QPVectorField c = run_dt(1.25e-3);

  const double d1 = max_coeff_delta(a, b);
  const double d2 = max_coeff_delta(b, c);
  REQUIRE(d2 > 1e-14);  // above the fp floor, so the ratio is meaningful
  const double order = std::log2(d1 / d2);
  CHECK(order > 3.5);
  CHECK(order < 4.5);
}

TEST_CASE("a divergence breach at entry stops the run with a post-mortem") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField w = random_vector(ms, 27);  // not projected: div = O(1)
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  EulerianRun run = integrate(EulerianState{0.0, w}, cfg);
  CHECK(run.status == RunStatus::divergence_breach);
  CHECK(run.state.t == 0.0);
  CHECK(run.diagnostics.rows.size() == 1);
  CHECK(!run.message.empty());
}

TEST_CASE("step plan lands on t_end exactly and validates its inputs") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u = scale(cell_flow(ms), 0.1);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.00737;  // 7.37 steps; dt is adjusted, not the horizon
  EulerianRun run = integrate(EulerianState{0.0, u}, cfg);
  REQUIRE(run.status == RunStatus::ok);
  CHECK(run.state.t == 0.00737);
  CHECK(run.diagnostics.rows.back().t == 0.00737);

  cfg.dt = -1.0;
  CHECK_THROWS_AS(integrate(EulerianState{0.0, u}, cfg), ConfigError);
  cfg.dt = 1e-3;
  cfg.t_end = -1.0;
  CHECK_THROWS_AS(integrate(EulerianState{0.0, u}, cfg), ConfigError);
}

TEST_CASE("advective step guideline") {
  ModeSetPtr ms = unit_box(2);
  CHECK(std::isinf(cfl_guideline(QPVectorField::zero(ms))));
  // max |Lambda| = 2 pi 2 sqrt(2) at the box corner; sum of l1 norms = 2
  const double expected = 0.5 / (kTwoPi * 2 * std::sqrt(2.0) * 2.0);
  CHECK(cfl_guideline(cell_flow(ms)) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("one RK4 step follows the classical tableau") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u = scale(random_solenoidal(ms, 41), 0.2);
  const double dt = 2e-3;

  QPVectorField k1 = rhs_eulerian(u);
  QPVectorField k2 = rhs_eulerian(axpy(u, dt / 2, k1));
  QPVectorField k3 = rhs_eulerian(axpy(u, dt / 2, k2));
  QPVectorField k4 = rhs_eulerian(axpy(u, dt, k3));
  QPVectorField manual = axpy(u, dt / 6, add(add(k1, k4), scale(add(k2, k3), 2.0)));

  EulerianState next = step_rk4(EulerianState{0.0, u}, dt);
  CHECK(next.t == dt);
  CHECK(max_coeff_delta(next.u, manual) < 1e-14);
}

TEST_CASE("Lagrangian right-hand side reduces to the pressure term at the identity") {
  ModeSetPtr ms = unit_box(2);
  TorusGrid grid = TorusGrid::for_mode_set(*ms);
  QPVectorField v = scale(random_solenoidal(ms, 53), 0.2);
  QPVectorField r = rhs_lagrangian(v, QPDiffeo::identity(ms), grid);
  CHECK(max_coeff_delta(r, pressure_gradient(v)) < 1e-10);
}

TEST_CASE("Eulerian and Lagrangian runs agree for small data") {
  // |m|_inf <= 1 data in a K = 4 box: the Lagrangian side composes the
  // box-filling pressure term through the flow map, so the box must leave
  // room for that spectrum to shift by the displacement's low modes before
  // the aliasing report means anything
  ModeSetPtr ms = unit_box(4);
  QPVectorField u0 = low_mode_solenoidal(ms, 99, 1);
  u0 = scale(u0, 0.02 / max_abs_coeff(u0));

  SolverConfig cfg;
  cfg.dt = 2.5e-3;
  cfg.t_end = 0.01;
  EulerianRun eul = integrate(EulerianState{0.0, u0}, cfg);
  REQUIRE(eul.status == RunStatus::ok);

  LagrangianRun lag = integrate_lagrangian(
      LagrangianState{0.0, u0, QPDiffeo::identity(ms)}, cfg);
  REQUIRE(lag.status == RunStatus::ok);
  CHECK(lag.max_aliasing_residual < 1e-6);

  // recover u = v o phi^{-1} and compare in coefficients
  TorusGrid grid = TorusGrid::for_mode_set(*ms);
  InvertedDiffeo inv = invert(lag.state.phi, grid);
  ComposedField u_lag = compose_field(lag.state.v, inv.inverse, grid);
  CHECK(max_coeff_delta(u_lag.field, eul.state.u) < 1e-7);
}

TEST_CASE("flow map transport matches pointwise trajectories") {
  // K = 4 box for the same reason as above: u o phi spreads the four
  // cell-flow modes by the displacement's band each composition order
  ModeSetPtr ms = unit_box(4);
  QPVectorField u = scale(cell_flow(ms), 0.05);
  auto u_at = [&](double) { return u; };

  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 0.2;
  FlowMapRun fm = flow_map(u_at, ms, cfg);
  REQUIRE(fm.status == RunStatus::ok);
  REQUIRE(fm.times.size() == fm.maps.size());
  CHECK(max_abs_coeff(fm.maps.front().displacement()) == 0.0);
  CHECK(fm.max_aliasing_residual < 1e-6);

  Eigen::VectorXd x0(2);
  x0 << 0.3, 0.4;
  TrajectoryRun tr = trajectories(u_at, {x0}, cfg);
  REQUIRE(tr.status == RunStatus::ok);
  REQUIRE(tr.polylines.size() == 1);
  REQUIRE(tr.polylines[0].size() == tr.times.size());

  Eigen::VectorXd via_map = fm.maps.back().apply(std::span<const double>(x0.data(), 2));
  Eigen::VectorXd via_ode = tr.polylines[0].back();
  CHECK((via_map - via_ode).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("Lagrangian coefficient extraction without inversion") {
  ModeSetPtr ms = unit_box(6);
  QPVectorField v = scale(random_solenoidal(ms, 77), 0.3);

  // identity map: the extraction is literally the coefficient of v
  LagrangianCoeff at_id = fourier_coeff_lagrangian(v, QPDiffeo::identity(ms), ModeIndex{2, 1});
  CHECK(at_id.tail_bound == 0.0);
  CHECK(std::abs(at_id.value(0) - v[0].coeff(ModeIndex{2, 1})) < 1e-15);
  CHECK(std::abs(at_id.value(1) - v[1].coeff(ModeIndex{2, 1})) < 1e-15);

  // volume-preserving shear: compare against invert-and-compose. Low-mode v
  // keeps the phase-modulation sidebands inside the box.
  QPVectorField v_low(std::vector<QPScalar>{
      QPScalar::from_modes(ms, {{ModeIndex{1, 1}, {0.1, 0.05}}, {ModeIndex{-1, -1}, {0.1, -0.05}},
                                {ModeIndex{2, 0}, {0.0, 0.07}}, {ModeIndex{-2, 0}, {0.0, -0.07}}}),
      QPScalar::from_modes(ms, {{ModeIndex{0, 2}, {0.08, 0.0}}, {ModeIndex{0, -2}, {0.08, 0.0}}})});
  TorusGrid grid = TorusGrid::for_mode_set(*ms);
  QPDiffeo phi = QPDiffeo::make(triangular_shear(ms, 0.005), grid);

  InvertedDiffeo inv = invert(phi, grid);
  ComposedField u = compose_field(v_low, inv.inverse, grid);
  for (const ModeIndex& m : {ModeIndex{1, 1}, ModeIndex{2, 0}, ModeIndex{0, 2}}) {
    LagrangianCoeff lc = fourier_coeff_lagrangian(v_low, phi, m);
    CHECK(lc.tail_bound < 1e-9);
    CHECK(std::abs(lc.value(0) - u.field[0].coeff(m)) < 1e-7);
    CHECK(std::abs(lc.value(1) - u.field[1].coeff(m)) < 1e-7);
  }
}

TEST_CASE("initial-data presets have their advertised invariants") {
  // one-directional shear on an irrational lattice: steady, coefficient-exact
  ModeSetPtr gms = canonical_golden(3);
  QPVectorField sh = shear(gms, {0.3, 0.1});
  CHECK(std::abs(sh[0].coeff(ModeIndex{0, 1, 0}) - Complex(0.15, 0.0)) < 1e-16);
  CHECK(std::abs(sh[0].coeff(ModeIndex{0, 2, 0}) - Complex(0.05, 0.0)) < 1e-16);
  CHECK(sh[1].support_size() == 0);
  CHECK(max_abs_coeff(rhs_eulerian(sh)) < 1e-14);
  CHECK(pressure_recover(sh).coeff_l1() < 1e-14);

  // the cellular preset is the hand-built fixture
  ModeSetPtr ms = unit_box(2);
  CHECK(max_coeff_delta(taylor_green(ms), cell_flow(ms)) < 1e-15);

  // random draws: solenoidal, normalized, mean-free, reproducible
  RandomDivfreeResult r1 = random_divfree(ms, 2, 12345, 0.05, 1.5);
  RandomDivfreeResult r2 = random_divfree(ms, 2, 12345, 0.05, 1.5);
  CHECK(max_coeff_delta(r1.u, r2.u) == 0.0);
  CHECK(divergence(r1.u).coeff_l1() < 1e-13);
  CHECK(norm(r1.u, NormParams{0, 1.5}) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(momentum(r1.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r1.projection_delta > 0.0);
}

TEST_CASE("losing the jacobian margin is a reported status, not a crash") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField v0 = scale(cell_flow(ms), 2.0);  // displacement grows ~ 2 t

  SolverConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 0.5;
  LagrangianRun lag = integrate_lagrangian(LagrangianState{0.0, v0, QPDiffeo::identity(ms)}, cfg);
  CHECK((lag.status == RunStatus::margin_loss || lag.status == RunStatus::newton_failure));
  CHECK(lag.state.t < 0.5);
  CHECK(!lag.message.empty());
}
