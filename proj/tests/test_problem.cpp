#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "toda/elliptic.hpp"
#include "toda/error.hpp"
#include "toda/expr.hpp"
#include "toda/problem.hpp"

using namespace toda;
using oracle::kPi;

namespace {
Expression constant(double c) {
  return [c](double, double) { return c; };
}
}  // namespace

TEST_SUITE("problem") {
TEST_CASE("expression parser") {
  CHECK(parse_constant("2*pi") == doctest::Approx(2 * kPi));
  CHECK(parse_constant("-2^2") == doctest::Approx(-4.0));
  CHECK(parse_constant("2^3^2") == doctest::Approx(512.0));
  CHECK(parse_expression("1 + 0.3*cos(2*pi*x)")(0.0, 0.4) == doctest::Approx(1.3));
  CHECK(parse_expression("exp(y) - e")(0.0, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(parse_expression("1 + "), Error);
  CHECK_THROWS_AS(parse_expression("cosh(x)"), Error);
  CHECK_THROWS_AS(parse_constant("x + 1"), Error);
}

TEST_CASE("validation") {
  auto ok = make_problem(cartan(2), {2 * kPi, 2 * kPi}, 32, {constant(1), constant(1)});
  CHECK(validate(ok).empty());
  auto bad_q = make_problem(cartan(1), {2 * kPi}, 32, {constant(1)}, {constant(2 * kPi + 0.1)});
  const auto v = validate(bad_q);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message.find("mass mismatch i=1, defect 0.1") != std::string::npos);
  CHECK(v[0].defect == doctest::Approx(0.1));
  auto bad_h = make_problem(cartan(1), {2 * kPi}, 32, {constant(-1)});
  const auto w = validate(bad_h);
  REQUIRE(w.size() == 1);
  CHECK(w[0].message == "h_1 has no positive part");
  CHECK_THROWS_AS(require_valid(bad_h), Error);
  // Sign-changing h is allowed.
  auto sc = make_problem(cartan(1), {2 * kPi}, 32, {parse_expression("cos(2*pi*x)")});
  CHECK(validate(sc).empty());
}

TEST_CASE("background phi solves its defining system") {
  auto p = make_problem(cartan(1), {2 * kPi}, 64, {constant(1)},
                        {parse_expression("2*pi + cos(2*pi*y)")});
  const Fields phi = background_phi(p);
  // -a^{11} lap phi = rho - Q
  const Field res = -0.5 * laplacian(phi[0]) - (Field(64, 2 * kPi) - p.q[0]);
  CHECK(res.max_abs() < 1e-10);
  CHECK(std::abs(integrate(phi[0])) < 1e-12);
  auto q0 = make_problem(cartan(2), {1.0, 2.0}, 32, {constant(1), constant(1)});
  for (const auto& f : background_phi(q0)) CHECK(f.max_abs() == 0.0);
}

TEST_CASE("background phi for a coupled system") {
  auto p = make_problem(cartan(2), {2 * kPi, 3.0}, 64, {constant(1), constant(1)},
                        {parse_expression("2*pi + 0.5*cos(2*pi*x)*sin(2*pi*y)"),
                         parse_expression("3 + sin(4*pi*x)")});
  const Fields phi = background_phi(p);
  for (int i = 0; i < 2; ++i) {
    Field r(64, p.rho[i]);
    r -= p.q[i];
    for (int j = 0; j < 2; ++j) r += p.coupling.inv(i, j) * laplacian(phi[j]);
    CHECK(r.max_abs() < 1e-9);
    CHECK(std::abs(integrate(phi[i])) < 1e-12);
  }
}

TEST_CASE("normalization to constant Q") {
  // N=1, Q = rho + cos(2 pi x): lap v = -cos(2 pi x), v = cos(2 pi x)/(4 pi^2).
  // The weight that makes u - phi solve the normalized system is h e^{phi}
  // with phi = -2v (see the notes on the normalization convention).
  auto p = make_problem(cartan(1), {2 * kPi}, 64, {constant(1)}, {parse_expression("2*pi + cos(2*pi*x)")});
  const TodaProblem np = normalize_constant_q(p);
  for (int iy = 0; iy < 64; iy += 7)
    for (int ix = 0; ix < 64; ix += 5) {
      const double v = std::cos(2 * kPi * ix / 64.0) / (4 * kPi * kPi);
      CHECK(np.h[0](ix, iy) == doctest::Approx(std::exp(-2.0 * v)).epsilon(1e-12));
      CHECK(np.q[0](ix, iy) == doctest::Approx(2 * kPi));
    }
  // Idempotence.
  const TodaProblem np2 = normalize_constant_q(np);
  CHECK((np2.h[0] - np.h[0]).max_abs() < 1e-10);
  // Constant Q is a fixed point.
  auto c = make_problem(cartan(1), {2 * kPi}, 32, {parse_expression("1 + 0.2*sin(2*pi*y)")});
  CHECK((normalize_constant_q(c).h[0] - c.h[0]).max_abs() < 1e-14);
}

TEST_CASE("normalization carries solutions to solutions") {
  auto p = make_problem(cartan(2), {2 * kPi, 2 * kPi}, 64,
                        {parse_expression("1 + 0.3*cos(2*pi*x)"), constant(1)},
                        {parse_expression("2*pi + 0.4*cos(2*pi*y)"), parse_expression("2*pi - 0.2*sin(2*pi*x)")});
  NewtonOptions opts;
  opts.tol = 1e-11;
  const auto sol = solve(p, Fields(2, Field(64, 0.0)), opts);
  const TodaProblem np = normalize_constant_q(p);
  const Fields phi = background_phi(p);
  Fields moved = sol.u;
  for (int i = 0; i < 2; ++i) moved[i] -= phi[i];
  CHECK(max_norm(residual(np, moved)) < 1e-8);
}

TEST_CASE("problem documents") {
  const auto doc = nlohmann::json::parse(R"js({
    "N": 2, "n": 32, "coupling": "cartan", "rho": ["2*pi", 3.0],
    "h": ["1 + 0.3*cos(2*pi*x)", 1], "q": ["2*pi", "3 + cos(2*pi*y)"]})js");
  const TodaProblem p = problem_from_json(doc);
  CHECK(p.n == 32);
  CHECK(p.rho[0] == doctest::Approx(2 * kPi));
  CHECK(p.q[0](3, 3) == doctest::Approx(2 * kPi));
  CHECK(p.h[0](0, 0) == doctest::Approx(1.3));
  CHECK_THROWS_AS(problem_from_json(nlohmann::json::parse(R"js({"N": 2, "rho": [1], "h": [1, 1]})js")), Error);
  CHECK_THROWS_AS(problem_from_json(nlohmann::json::parse(R"js({"N": 1, "rho": [1], "h": [{"file": "missing.bin"}]})js")), Error);
}
}
