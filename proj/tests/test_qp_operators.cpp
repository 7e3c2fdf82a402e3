#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include "field_fixtures.hpp"
#include <qpeuler/errors.hpp>
#include <qpeuler/qp_operators.hpp>

using namespace qpeuler;
using namespace qpeuler::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// M = 2, n = 1 lattice with omega = (1, 1)^T: Lambda_(1,-1) = 0, so the box
/// is resonant for any K >= 1.
ModeSetPtr ones_lattice(int K) {
  Eigen::MatrixXd om(2, 1);
  om << 1.0, 1.0;
  return ModeSet::build(FrequencyMatrix(om), K);
}

}  // namespace

TEST_CASE("bullet and infinity masks partition every field exactly") {
  ModeSetPtr ms = golden_line(8);
  QPScalar f = random_real_scalar(ms, 42);
  QPScalar fb = project_bullet(f);
  QPScalar fi = project_infty(f);

  for (std::int64_t o : fb.ordinals()) CHECK(ms->bullet(o));
  for (std::int64_t o : fi.ordinals()) CHECK_FALSE(ms->bullet(o));

  // reassembly is coefficient-exact, not approximate
  QPScalar sum = add(fb, fi);
  REQUIRE(sum.support_size() == f.support_size());
  for (std::int64_t o : f.ordinals()) CHECK(sum.coeff_at(o) == f.coeff_at(o));

  QPVectorField w = random_vector(unit_box(2), 7);
  QPVectorField wb = project_bullet(w);
  QPVectorField wi = project_infty(w);
  CHECK(max_coeff_delta(add(wb, wi), w) == 0.0);
}

TEST_CASE("multiplier table is shared per mode set and flags resonance") {
  ModeSetPtr ms = golden_line(4);
  auto t1 = MultiplierTable::get(ms);
  auto t2 = MultiplierTable::get(ms);
  CHECK(t1 == t2);

  CHECK(t1->inv_lambda_sq(ms->zero_ordinal()) == 0.0);
  CHECK(t1->near_zero_ordinal() == -1);
  for (std::int64_t o = 0; o < ms->size(); ++o) {
    if (o == ms->zero_ordinal()) continue;
    CHECK(t1->inv_lambda_sq(o) * ms->lambda_norm_sq(o) == doctest::Approx(1.0).epsilon(1e-14));
  }

  auto res = MultiplierTable::get(ones_lattice(1));
  CHECK(res->near_zero_ordinal() >= 0);
}

TEST_CASE("inverse Laplacian inverts the Laplacian on the infinity block") {
  ModeSetPtr ms = golden_line(6);
  QPScalar f = project_infty(random_real_scalar(ms, 99, 0.7));
  REQUIRE(f.support_size() > 0);
  QPScalar g = inv_laplace_infty(f);

  for (std::int64_t o : g.ordinals()) {
    const Complex expected = -f.coeff_at(o) / ms->lambda_norm_sq(o);
    CHECK(std::abs(g.coeff_at(o) - expected) <= 1e-15 * std::abs(expected));
  }

  // n = 1: Laplacian is the plain second derivative
  QPScalar lap = partial_derivative(g, std::vector<int>{2});
  CHECK(max_coeff_delta(lap, f) < 1e-13);
}

TEST_CASE("inverse Laplacian refuses bullet-class input") {
  ModeSetPtr ms = golden_line(4);
  // (-3, 2) sits inside the unit ball of Lambda
  QPScalar bad = QPScalar::from_modes(ms, {{ModeIndex{-3, 2}, {1e-10, 0.0}},
                                           {ModeIndex{3, -2}, {1e-10, 0.0}}});
  CHECK_THROWS_AS(inv_laplace_infty(bad), ConfigError);

  // below the noise floor the same mode is silently dropped
  QPScalar noise = QPScalar::from_modes(ms, {{ModeIndex{-3, 2}, {5e-15, 0.0}},
                                             {ModeIndex{3, -2}, {5e-15, 0.0}},
                                             {ModeIndex{1, 0}, {0.5, 0.0}},
                                             {ModeIndex{-1, 0}, {0.5, 0.0}}});
  QPScalar out = inv_laplace_infty(noise);
  CHECK(out.coeff(ModeIndex{-3, 2}) == Complex(0.0, 0.0));
  CHECK(out.support_size() == 2);
}

TEST_CASE("grad-div solver: identity on gradients, zero on solenoidal fields") {
  ModeSetPtr ms = unit_box(3);
  QPScalar h = random_real_scalar(ms, 17);
  QPVectorField gh = gradient(h);
  CHECK(max_coeff_delta(inv_laplace_grad_div(gh), gh) < 1e-13 * max_abs_coeff(gh));

  QPVectorField v = random_solenoidal(ms, 23);
  CHECK(max_abs_coeff(inv_laplace_grad_div(v)) < 1e-13 * max_abs_coeff(v));

  QPVectorField w = random_vector(ms, 31);
  QPVectorField once = inv_laplace_grad_div(w);
  CHECK(max_coeff_delta(inv_laplace_grad_div(once), once) < 1e-13 * max_abs_coeff(w));

  // leray_project is literally w minus the grad-div part
  CHECK(max_coeff_delta(add(leray_project(w), once), w) < 1e-14 * max_abs_coeff(w));
}

TEST_CASE("small-denominator operators refuse a resonant box") {
  ModeSetPtr ms = ones_lattice(1);
  QPScalar f = cosine(ms, ModeIndex{1, 0});
  QPVectorField w(std::vector<QPScalar>{f});
  CHECK_THROWS_AS(inv_laplace_grad_div(w), ResonanceError);
  CHECK_THROWS_AS(pressure_gradient(w), ResonanceError);
}

TEST_CASE("advection and quadratic trace reproduce the cell-flow values") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u = cell_flow(ms);

  // u . grad u = (pi sin(4 pi x1), pi sin(4 pi x2))
  QPVectorField d = advect(u);
  CHECK(std::abs(d[0].coeff(ModeIndex{2, 0}) - Complex(0.0, -kPi / 2)) < 1e-13);
  CHECK(std::abs(d[0].coeff(ModeIndex{-2, 0}) - Complex(0.0, kPi / 2)) < 1e-13);
  CHECK(std::abs(d[1].coeff(ModeIndex{0, 2}) - Complex(0.0, -kPi / 2)) < 1e-13);
  CHECK(std::abs(d[1].coeff(ModeIndex{0, -2}) - Complex(0.0, kPi / 2)) < 1e-13);
  // the (2,+-2) sidebands of the two advection products cancel
  CHECK(std::abs(d[0].coeff(ModeIndex{2, 2})) <= 1e-15);
  CHECK(std::abs(d[0].coeff(ModeIndex{0, 2})) <= 1e-15);

  // tr([du]^2) = 4 pi^2 (cos(4 pi x1) + cos(4 pi x2))
  QPScalar q = quadratic(u);
  CHECK(std::abs(q.coeff(ModeIndex{2, 0}) - Complex(2 * kPi * kPi, 0.0)) < 1e-11);
  CHECK(std::abs(q.coeff(ModeIndex{0, -2}) - Complex(2 * kPi * kPi, 0.0)) < 1e-11);
  CHECK(std::abs(q.coeff(ModeIndex{0, 0})) <= 1e-14);
}

TEST_CASE("fused nonlinearity pass matches the literal operators") {
  ModeSetPtr ms = unit_box(4);
  QPVectorField u = random_solenoidal(ms, 55, 0.5);
  AdvectQuadratic aq = advect_and_quadratic(u);
  // both entries carry one derivative per factor pair, so reassociation
  // noise scales with |Lambda| (advect) and |Lambda|^2 (quadratic)
  const double s = std::max(1.0, max_abs_coeff(u));
  const double lam = ms->max_lambda_norm();
  CHECK(max_coeff_delta(aq.advect, advect(u)) < 1e-14 * lam * s * s);
  CHECK(max_coeff_delta(aq.quadratic, quadratic(u)) < 1e-14 * lam * lam * s * s);
}

TEST_CASE("divergence of advection equals the quadratic trace when div u = 0") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ModeSetPtr ms = unit_box(3);
    QPVectorField u = random_solenoidal(ms, seed);
    QPScalar lhs = divergence(advect(u));
    QPScalar rhs = quadratic(u);
    const double s = std::max(1.0, coeff_l1(u));
    CHECK(max_coeff_delta(lhs, rhs) < 1e-12 * s * s);
  }
  // same identity on an irrational lattice
  QPVectorField u = random_solenoidal(canonical_golden(2), 404, 0.6);
  CHECK(max_coeff_delta(divergence(advect(u)), quadratic(u)) < 1e-12);
}

TEST_CASE("pressure gradient balances the steady cell flow") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u = cell_flow(ms);
  QPVectorField d = advect(u);
  QPVectorField p = pressure_gradient(u);

  // steady state: the pressure term cancels advection component-wise
  CHECK(max_coeff_delta(p, d) < 1e-12);

  // exact zero mean, not approximately zero
  CHECK(p[0].coeff_at(ms->zero_ordinal()) == Complex(0.0, 0.0));
  CHECK(p[1].coeff_at(ms->zero_ordinal()) == Complex(0.0, 0.0));

  QPVectorField p2 = pressure_gradient_from(d, quadratic(u));
  CHECK(max_coeff_delta(p2, p) < 1e-13);
}

TEST_CASE("recovered pressure integrates to minus the pressure gradient") {
  ModeSetPtr ms = unit_box(2);
  QPVectorField u = cell_flow(ms);
  QPScalar p = pressure_recover(u);

  // p = (cos(4 pi x1) + cos(4 pi x2)) / 4
  CHECK(std::abs(p.coeff(ModeIndex{2, 0}) - Complex(0.125, 0.0)) < 1e-13);
  CHECK(std::abs(p.coeff(ModeIndex{0, 2}) - Complex(0.125, 0.0)) < 1e-13);
  CHECK(p.coeff_at(ms->zero_ordinal()) == Complex(0.0, 0.0));
  CHECK(max_coeff_delta(gradient(p), scale(pressure_gradient(u), -1.0)) < 1e-12);

  // and on generic solenoidal data
  QPVectorField v = random_solenoidal(unit_box(3), 88);
  const double s = std::max(1.0, max_abs_coeff(v));
  CHECK(max_coeff_delta(gradient(pressure_recover(v)), scale(pressure_gradient(v), -1.0)) <
        1e-12 * s * s);
}

TEST_CASE("Leray projection is idempotent and solenoidal") {
  ModeSetPtr ms = unit_box(3);
  QPVectorField w = random_vector(ms, 61);
  QPVectorField pw = leray_project(w);
  const double s = std::max(1.0, max_abs_coeff(w));

  CHECK(divergence(pw).coeff_l1() < 1e-12 * s);
  CHECK(max_coeff_delta(leray_project(pw), pw) < 1e-14 * s);

  QPScalar h = random_real_scalar(ms, 62);
  CHECK(max_abs_coeff(leray_project(gradient(h))) < 1e-13 * std::max(1.0, h.coeff_l1()));
}
