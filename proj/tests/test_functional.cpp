#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "toda/error.hpp"
#include "toda/functional.hpp"

using namespace toda;
using namespace testing_util;

TEST_SUITE("functional") {
TEST_CASE("trivial state") {
  auto p = make_problem(cartan(3), {1.0, 2.0, 3.0}, 32, {constant(1), constant(1), constant(1)});
  const auto r = evaluate_j(p, Fields(3, Field(32, 0.0)));
  CHECK(std::abs(r.j_value) < 1e-14);
  for (double m : r.masses) CHECK(m == doctest::Approx(1.0));
  CHECK(std::abs(evaluate_j_k(p, Fields(3, Field(32, 0.0)), 1)) < 1e-14);
}

TEST_CASE("single cosine mode against quadrature") {
  auto p = make_problem(cartan(1), {2 * kPi}, 64, {constant(1)});
  const Fields u{sample(64, [](double x, double) { return std::cos(2 * kPi * x); })};
  const auto r = evaluate_j(p, u);
  // 1/2 * a^{11} * int |grad u|^2 = 1/2 * 1/2 * 4 pi^2 * 1/2 = pi^2 / 2.
  const double i0 = oracle::simpson([](double x) { return std::exp(std::cos(2 * kPi * x)); }, 0, 1);
  CHECK(r.dirichlet == doctest::Approx(kPi * kPi / 2).epsilon(1e-12));
  CHECK(r.j_value == doctest::Approx(kPi * kPi / 2 - 2 * kPi * std::log(i0)).epsilon(1e-12));
  CHECK(r.j_value == doctest::Approx(r.dirichlet + r.linear[0] - r.log_terms[0]).epsilon(1e-14));
}

TEST_CASE("gauge invariance") {
  auto p = make_problem(cartan(2), {2 * kPi, 3.0}, 64, {cos_x(1.0, 0.5), constant(2.0)},
                        {cos_x(2 * kPi, 0.7), constant(3.0)});
  const Fields u = random_fields(2, 64, 3);
  const double j0 = evaluate_j(p, u).j_value;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-5, 5);
  for (int t = 0; t < 20; ++t) {
    Fields v = u;
    for (auto& f : v) f += c(rng);
    CHECK(std::abs(evaluate_j(p, v).j_value - j0) < 1e-10 * (1 + std::abs(j0)));
  }
  Fields v = u;
  v[0] += 3.0;
  v[1] += -1.0;
  CHECK(std::abs(evaluate_j(p, v).j_value - j0) < 1e-10 * (1 + std::abs(j0)));
}

TEST_CASE("critical decomposition identity") {
  auto p = make_problem(cartan(3), {2.0, 4 * kPi, 3.0}, 64, {constant(1), cos_x(1.0, 0.2), constant(1)});
  for (unsigned s = 0; s < 5; ++s) {
    const Fields u = random_fields(3, 64, 40 + s);
    const double j = evaluate_j(p, u).j_value;
    const double jk = evaluate_j_k(p, u, 1);
    const double bracket = 0.25 * grad_dot(u[1], u[1]) + integrate(p.q[1] * u[1]) -
                           4 * kPi * log_h_mass(p.h[1], u[1], 1);
    CHECK(std::abs(j - jk - bracket) < 1e-10);
  }
  // u_k = cos(2 pi x), the rest zero: the bracket is pi^2/2 - 4 pi ln I0(1).
  Fields u(3, Field(64, 0.0));
  u[1] = sample(64, [](double x, double) { return std::cos(2 * kPi * x); });
  auto q = make_problem(cartan(3), {2.0, 4 * kPi, 3.0}, 64, {constant(1), constant(1), constant(1)});
  const double i0 = oracle::bessel_i0_one();
  const double jk = evaluate_j_k(q, u, 1);
  CHECK(evaluate_j(q, u).j_value - jk == doctest::Approx(kPi * kPi / 2 - 4 * kPi * std::log(i0)).epsilon(1e-11));
  CHECK_THROWS_AS(evaluate_j_k(q, u, 3), Error);
}

TEST_CASE("moser-trudinger expression") {
  const auto a2 = cartan(2);
  CHECK(std::abs(moser_trudinger_lhs(Fields(2, Field(32, 0.0)), a2)) < 1e-14);
  const Fields u = random_fields(2, 64, 9);
  Fields v = u;
  v[0] += 4.0;
  v[1] += -7.5;
  CHECK(std::abs(moser_trudinger_lhs(u, a2) - moser_trudinger_lhs(v, a2)) < 1e-10);
}

TEST_CASE("moser-trudinger scan is bounded below") {
  // N=1, u = t cos(2 pi x): value t^2 pi^2 / 2 - 4 pi ln I0(t).
  const auto a1 = cartan(1);
  double inf = 1e300;
  double last = 0.0;
  for (int s = 0; s <= 80; ++s) {
    const double t = 0.5 * s;
    const Fields u{sample(256, [t](double x, double) { return t * std::cos(2 * kPi * x); })};
    const double v = moser_trudinger_lhs(u, a1);
    const double i0 = oracle::simpson([t](double x) { return std::exp(t * std::cos(2 * kPi * x)); }, 0, 1);
    CHECK(v == doctest::Approx(t * t * kPi * kPi / 2 - 4 * kPi * std::log(i0)).epsilon(1e-9));
    inf = std::min(inf, v);
    last = v;
  }
  CHECK(std::isfinite(inf));
  CHECK(inf > -10.0);
  CHECK(last > 1000.0);  // the quadratic term dominates: the infimum is attained at small t
}

TEST_CASE("decay quantities") {
  auto p = make_problem(cartan(1), {2 * kPi}, 64, {constant(1)});
  const Fields zero(1, Field(64, 0.0));
  const auto d0 = decay_quantities(p, random_fields(1, 64, 2), zero);
  CHECK(d0.weighted[0] == 0.0);
  CHECK(d0.gradient == 0.0);
  const Fields ud{sample(64, [](double x, double) { return std::cos(2 * kPi * x); })};
  const auto d = decay_quantities(p, zero, ud);
  CHECK(d.weighted[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(d.gradient == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
}

TEST_CASE("capital U") {
  const Field f = random_field(32, 4);
  const Fields u1 = u_cap({f}, cartan(1));
  CHECK((u1[0] - 0.5 * f).max_abs() < 1e-15);
  const Fields u2 = u_cap({f, Field(32, 0.0)}, cartan(2));
  CHECK((u2[0] - (2.0 / 3.0) * f).max_abs() < 1e-14);
  CHECK((u2[1] - (1.0 / 3.0) * f).max_abs() < 1e-14);
  const Fields u = random_fields(4, 32, 6);
  const auto a4 = cartan(4);
  CHECK(max_diff(apply_coupling(u_cap(u, a4), a4.a()), u) < 1e-12);
}

TEST_CASE("jensen bound and mass errors") {
  for (unsigned s = 0; s < 10; ++s) {
    const Field f = random_field(64, 70 + s, 2.0);
    CHECK(integrate(f) <= std::log(integrate(exp(f))) + 1e-14);
  }
  auto p = make_problem(cartan(1), {2 * kPi}, 32, {cos_x(-0.5, 1.0)});
  CHECK_THROWS_AS(evaluate_j(p, Fields(1, Field(32, 0.0))), NonpositiveHMassError);
  try {
    evaluate_j(p, Fields(1, Field(32, 0.0)));
  } catch (const NonpositiveHMassError& e) {
    CHECK(e.index() == 0);
    CHECK(e.kind() == ErrorKind::NonpositiveHMass);
  }
}

TEST_CASE("overflow guard") {
  auto p = make_problem(cartan(1), {2 * kPi}, 32, {constant(1)});
  Fields u{random_field(32, 8)};
  const double j0 = evaluate_j(p, u).j_value;
  u[0] += 800.0;
  const auto r = evaluate_j(p, u);
  CHECK(std::isfinite(r.j_value));
  CHECK(std::abs(r.j_value - j0) < 1e-8);
}
}
