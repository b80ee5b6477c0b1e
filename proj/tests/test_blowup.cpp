#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "toda/blowup.hpp"
#include "toda/elliptic.hpp"
#include "toda/error.hpp"

using namespace toda;
using namespace testing_util;

namespace {
// Exact bubble of height m and shape l centred at grid point (px, py).
Field planted(int n, double m, double l, double px, double py) {
  return sample(n, [=](double x, double y) {
    double dx = x - px, dy = y - py;
    dx -= std::round(dx);
    dy -= std::round(dy);
    return m - 2 * std::log1p(l * std::exp(m) * (dx * dx + dy * dy));
  });
}
}  // namespace

TEST_SUITE("blowup") {
TEST_CASE("planted bubble profile") {
  const double l = 0.5;
  const Field u = planted(512, 8.0, l, 100.0 / 512, 77.0 / 512);
  const RadialProfile pr = rescaled_profile(u);
  CHECK(pr.m == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(pr.x == doctest::Approx(100.0 / 512).epsilon(1e-6));
  CHECK(pr.l_fit == doctest::Approx(l).epsilon(0.01));
  CHECK(pr.rms < 1e-3);
  CHECK(pr.radii.size() == 201);
  CHECK(pr.values.front() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("planted concentration is detected") {
  const int n = 128;
  const Field u = planted(n, 10.0, 1.0, 37.0 / n, 90.0 / n);
  auto p = make_problem(cartan(2), {4 * kPi, 2 * kPi}, n, {constant(1), constant(1)});
  const auto rep = detect_concentration(p, 0.0, {u, Field(n, 0.0)});
  REQUIRE(rep.candidates.size() == 2);
  REQUIRE(rep.candidates[0].size() == 1);
  CHECK(rep.candidates[1].empty());
  const auto& c = rep.candidates[0][0];
  CHECK(std::abs(c.ix - 37) <= 1);
  CHECK(std::abs(c.iy - 90) <= 1);
  CHECK(c.masses.size() == 3);
  for (double m : c.masses) CHECK(m <= rep.global_masses[0] + 1e-12);
  // Masses grow with the ball.
  CHECK(c.masses[0] <= c.masses[1]);
  CHECK(c.masses[1] <= c.masses[2]);
  const auto j = to_json(rep);
  CHECK(j.at("candidates").size() == 2);
}

TEST_CASE("ball masses") {
  const Field zero(64, 0.0);
  const Field bm = ball_masses(zero, 0.125);
  // Discrete disc area approximates pi delta^2.
  CHECK(bm(5, 9) == doctest::Approx(kPi / 64).epsilon(0.05));
  CHECK((bm + (-bm(0, 0))).max_abs() < 1e-14);
  CHECK_THROWS_AS(ball_masses(zero, 0.6), Error);
}

TEST_CASE("no concentration without blowup") {
  const auto p = subcritical(32);
  RunOptions opts;
  opts.t_max = 0.05;
  opts.snapshot_every = 0.025;
  const auto [traj, ev] = run(p, Fields(2, Field(32, 0.0)), opts);
  const auto reps = detect_concentration(p, traj);
  REQUIRE(!reps.empty());
  for (const auto& r : reps)
    for (const auto& c : r.candidates) CHECK(c.empty());
  std::ostringstream os;
  write_jsonl(os, reps);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(reps.size()));
  const auto sol = solve(p, Fields(2, Field(32, 0.0)));
  CHECK_THROWS_AS(rescaled_profile(sol.u[0]), Error);
  try {
    rescaled_profile(sol.u[0]);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientSeparation);
  }
}

TEST_CASE("indicators") {
  const Indicators z = blowup_indicators(Fields(2, Field(32, 0.0)));
  CHECK(z.sum_max == 0.0);
  CHECK(z.grad_norm == 0.0);
  CHECK(z.sum_mean == 0.0);
  const Fields u{sample(32, [](double x, double) { return std::cos(2 * kPi * x); }), Field(32, -1.0)};
  const Indicators i = blowup_indicators(u);
  CHECK(i.sum_max == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(i.grad_norm == doctest::Approx(std::sqrt(2.0) * kPi).epsilon(1e-12));
  CHECK(i.sum_mean == doctest::Approx(-1.0).epsilon(1e-12));
}
}
