#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "toda/error.hpp"
#include "toda/functional.hpp"
#include "toda/testfn.hpp"

using namespace toda;
using namespace testing_util;

namespace {
TodaProblem symmetric(int n) {
  return make_problem(cartan(2), {4 * kPi, 2 * kPi}, n, {constant(1), constant(1)});
}

const SingularSolution& symmetric_solution() {
  static const SingularSolution sol = solve_singular_system(symmetric(64), 0, {0, 0});
  return sol;
}
}  // namespace

TEST_SUITE("testfn") {
TEST_CASE("radius rules and cutoffs") {
  TestFamilyConfig cfg;
  CHECK(ball_radius(cfg, 0.04) == doctest::Approx(0.1));
  cfg.rule = RadiusRule::InverseLog;
  cfg.rule_constant = 1.0;
  CHECK(ball_radius(cfg, 0.01) == doctest::Approx(1.0 / std::log(100.0)));
  for (Cutoff c : {Cutoff::Quintic, Cutoff::Smooth}) {
    CHECK(cutoff_value(c, 0.5) == 1.0);
    CHECK(cutoff_value(c, 1.0) == 1.0);
    CHECK(cutoff_value(c, 2.0) == 0.0);
    CHECK(cutoff_value(c, 3.0) == 0.0);
    double prev = 1.0;
    for (int i = 0; i <= 100; ++i) {
      const double v = cutoff_value(c, 1.0 + i / 100.0);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("test functions are continuous and admissible") {
  const auto p = symmetric(256);
  const auto sol = refine(symmetric_solution(), 256);
  for (double eps : {0.04, 0.02, 0.01}) {
    const TestFunction tf = build_test_function(p, sol, eps);
    CHECK(tf.interface_jump < 1e-8);
    CHECK(tf.radius == doctest::Approx(0.5 * std::sqrt(eps)));
    for (int i = 0; i < 2; ++i) {
      CHECK(tf.u[i].all_finite());
      CHECK(integrate(p.h[i] * exp(tf.u[i])) > 0.0);
    }
    // u = A U.
    CHECK((tf.u[0] - (2.0 * tf.big_u[0] - tf.big_u[1])).max_abs() < 1e-12);
    // U_i = H_i away from k.
    CHECK((tf.big_u[1] - sol.h_fields[1]).max_abs() < 1e-12);
  }
}

TEST_CASE("mean of the glued component") {
  const auto p = symmetric(256);
  const auto sol = refine(symmetric_solution(), 256);
  // The remainder is O((L eps)^4): err / r^4 must stay bounded and settle.
  std::vector<double> ratio;
  for (double eps : {0.04, 0.02, 0.01}) {
    const TestFunction tf = build_test_function(p, sol, eps);
    const double l = tf.radius / eps;
    const double expect = -sol.a_val - std::log((l * l + 1) / (l * l)) - kPi * eps * eps * std::log(l * l + 1);
    CHECK(tf.beta == doctest::Approx(-sol.a_val - std::log((l * l + 1) / (l * l))));
    const double err = std::abs(integrate(tf.big_u[0]) - expect);
    ratio.push_back(err / std::pow(tf.radius, 4));
    CHECK(err < 1e-2);
  }
  for (double r : ratio) CHECK(r < 100.0);
  CHECK(std::abs(ratio.back() - ratio[1]) < 0.1 * ratio.back());
}

TEST_CASE("resolution guards") {
  const auto p = symmetric(64);
  const auto& sol = symmetric_solution();
  CHECK_THROWS_AS(build_test_function(p, sol, 0.04), Error);
  try {
    build_test_function(p, sol, 0.04);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InterfaceMismatch);
  }
  try {
    build_test_function(p, sol, 0.3);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("JLW condition field") {
  const Field c = jlw_condition_field(symmetric(32), 0);
  CHECK(c.max() == doctest::Approx(6 * kPi).epsilon(1e-12));
  CHECK(c.min() == doctest::Approx(6 * kPi).epsilon(1e-12));
  auto q = make_problem(cartan(2), {4 * kPi, 2 * kPi}, 64, {cos_x(1.0, 0.5), constant(1)});
  const Field d = jlw_condition_field(q, 0);
  for (int ix = 0; ix < 64; ix += 5) {
    const double x = ix / 64.0;
    const double h = 1 + 0.5 * std::cos(2 * kPi * x), h1 = -kPi * std::sin(2 * kPi * x),
                 h2 = -2 * kPi * kPi * std::cos(2 * kPi * x);
    CHECK(d(ix, 9) == doctest::Approx((h2 * h - h1 * h1) / (h * h) + 6 * kPi).epsilon(1e-9));
  }
  auto s = make_problem(cartan(1), {4 * kPi}, 32, {cos_x(0.0, 1.0)});
  const Field m = jlw_condition_field(s, 0);
  CHECK(std::isnan(m(16, 0)));
  CHECK(std::isfinite(m(0, 0)));
}

TEST_CASE("energy expansion in the symmetric case") {
  const auto p = symmetric(64);
  const FitReport r = expansion_check(p, symmetric_solution());
  const double theory = -kPi * (8 * kPi - 2 * kPi);
  CHECK(r.c1_theory == doctest::Approx(theory).epsilon(1e-6));
  CHECK(r.c1 / theory >= 0.9);
  CHECK(r.c1 / theory <= 1.1);
  CHECK(std::abs(r.c0 - r.f_value) < 1e-2 * std::abs(r.f_value));
  CHECK(r.all_below_f);
  for (std::size_t i = 1; i < r.j_values.size(); ++i) CHECK(r.j_values[i] > r.j_values[i - 1]);
  for (int n : r.n_used) CHECK(n >= 256);
  const auto j = to_json(r);
  CHECK(j.contains("c1_theory"));
  CHECK(j.at("epsilons").size() == 5);
}

TEST_CASE("fit guards") {
  const auto p = symmetric(64);
  TestFamilyConfig cfg;
  cfg.epsilons = {0.02, 0.01};
  CHECK_THROWS_AS(expansion_check(p, symmetric_solution(), cfg), Error);
  cfg.epsilons = {0.02, 0.02, 0.02};
  try {
    expansion_check(p, symmetric_solution(), cfg);
    FAIL("expected an ill-conditioned fit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IllConditionedFit);
  }
}
}
