#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "toda/elliptic.hpp"
#include "toda/error.hpp"
#include "toda/flow.hpp"
#include "toda/functional.hpp"

using namespace toda;
using namespace testing_util;

TEST_SUITE("flow") {
TEST_CASE("rhs examples") {
  auto p = make_problem(cartan(2), {2 * kPi, 2 * kPi}, 32, {constant(1), constant(1)});
  CHECK(max_norm(rhs(p, Fields(2, Field(32, 0.0)))) < 1e-13);
  const double delta = 0.3;
  auto q = make_problem(cartan(1), {2 * kPi}, 32, {constant(1)}, {cos_x(2 * kPi, delta)});
  const Fields r = rhs(q, Fields(1, Field(32, 0.0)));
  CHECK((r[0] + delta * sample(32, [](double x, double) { return std::cos(2 * kPi * x); })).max_abs() < 1e-13);
  // Direct formula at a constant state u = c: e^{-c} (rho - Q).
  const Fields rc = rhs(q, Fields(1, Field(32, 1.5)));
  CHECK((rc[0] - std::exp(-1.5) * r[0]).max_abs() < 1e-13);
}

TEST_CASE("rhs vanishes at the Newton solution") {
  const auto p = subcritical(32);
  NewtonOptions opts;
  opts.tol = 1e-11;
  const auto sol = solve(p, Fields(2, Field(32, 0.0)), opts);
  CHECK(max_norm(rhs(p, sol.u)) < 10 * opts.tol * std::exp(-std::min(sol.u[0].min(), sol.u[1].min())));
}

TEST_CASE("stability cap") {
  const auto p = subcritical(32);
  const Fields u{Field(32, -1.0), Field(32, 0.5)};
  const double expect = 0.2 * (1.0 / (32.0 * 32.0)) * std::exp(-1.0) / cartan(2).lambda_max_inv();
  CHECK(stability_cap(p, u, 0.2) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(cartan(2).lambda_max_inv() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("steady state is preserved") {
  auto p = make_problem(cartan(2), {2 * kPi, 2 * kPi}, 32, {constant(1), constant(1)});
  const FlowState s0 = initial_state(p, Fields(2, Field(32, 0.0)));
  FlowState s = s0;
  for (int i = 0; i < 5; ++i) s = step(p, s);
  CHECK(s.t > 0.0);
  CHECK(s.step == 5);
  CHECK(max_diff(s.u, s0.u) < 1e-14);
}

TEST_CASE("short subcritical run keeps its invariants") {
  const auto p = subcritical(32);
  RunOptions opts;
  opts.t_max = 0.1;
  opts.snapshot_every = 0.05;
  const auto [traj, ev] = run(p, Fields(2, Field(32, 0.0)), opts);
  CHECK(ev.kind == EventKind::MaxTimeReached);
  const auto& h = traj.final_state.history;
  REQUIRE(h.size() > 10);
  CHECK(h.back().j < h.front().j);
  for (std::size_t i = 1; i < h.size(); ++i) {
    CHECK(h[i].j <= h[i - 1].j + 1e-10 * (1 + std::abs(h[i - 1].j)));
    for (int c = 0; c < 2; ++c) {
      CHECK(std::abs(h[i].masses[c] - h[0].masses[c]) / h[0].masses[c] < 1e-6 * h[i].t + 1e-12);
      CHECK(h[i].h_masses[c] > 0.0);
    }
  }
  CHECK(traj.snapshots.size() >= 2);
  CHECK(traj.final_state.t == doctest::Approx(0.1));
}

TEST_CASE("residual decays near the oracle solution") {
  const auto p = subcritical(32);
  const auto sol = solve(p, Fields(2, Field(32, 0.0)));
  Fields u0 = sol.u;
  u0[0] += 0.05 * sample(32, [](double x, double y) { return std::cos(2 * kPi * y) * std::sin(2 * kPi * x); });
  RunOptions opts;
  opts.t_max = 0.3;
  const auto [traj, ev] = run(p, u0, opts);
  const auto& h = traj.final_state.history;
  // Sampled every ~10% of the run, the residual decreases monotonically.
  std::vector<double> samples;
  for (std::size_t i = 0; i < h.size(); i += std::max<std::size_t>(1, h.size() / 10)) samples.push_back(h[i].residual);
  for (std::size_t i = 1; i < samples.size(); ++i) CHECK(samples[i] < samples[i - 1]);
  CHECK(h.back().residual < 0.05 * h.front().residual);
}

TEST_CASE("subcritical run converges to the oracle") {
  const auto p = subcritical(16);
  RunOptions opts;
  opts.t_max = 5.0;
  const auto [traj, ev] = run(p, Fields(2, Field(16, 0.0)), opts);
  REQUIRE(ev.kind == EventKind::Converged);
  const auto& u = traj.final_state.u;
  std::vector<double> masses;
  for (const auto& f : u) masses.push_back(integrate(exp(f)));
  NewtonOptions nopts;
  nopts.gauge = Gauge::fix_masses(masses);
  const auto sol = solve(p, u, nopts);
  CHECK(max_diff(sol.u, u) < 1e-5);
  const auto& last = traj.final_state.history.back();
  CHECK(last.decay[0] + last.decay[1] < 1e-8);
  CHECK(last.decay_gradient < 1e-8);
}

TEST_CASE("invalid initial data is rejected") {
  auto p = make_problem(cartan(1), {2 * kPi}, 32, {cos_x(0.0, 1.0)});
  const Fields u{sample(32, [](double x, double) { return -3.0 * std::cos(2 * kPi * x); })};
  CHECK_THROWS_AS(initial_state(p, u), Error);
  CHECK_THROWS_AS(run(p, u, RunOptions{}), Error);
}

TEST_CASE("trajectories are reproducible") {
  const auto p = subcritical(16);
  RunOptions opts;
  opts.t_max = 0.02;
  const Fields u0 = random_fields(2, 16, 4, 0.2);
  const auto a = run(p, u0, opts);
  const auto b = run(p, u0, opts);
  CHECK(max_diff(a.first.final_state.u, b.first.final_state.u) == 0.0);
  CHECK(a.first.final_state.step == b.first.final_state.step);
}

TEST_CASE("checkpoint round trip and resume") {
  const auto p = subcritical(16);
  RunOptions opts;
  opts.t_max = 0.01;
  const Fields u0 = random_fields(2, 16, 5, 0.2);
  const auto first = run(p, u0, opts);
  const auto path = (std::filesystem::temp_directory_path() / "toda_flow_test.ckpt").string();
  write_checkpoint(first.first.final_state, path);
  const FlowState back = read_checkpoint(path);
  std::remove(path.c_str());
  CHECK(back.t == first.first.final_state.t);
  CHECK(back.dt == first.first.final_state.dt);
  CHECK(back.step == first.first.final_state.step);
  CHECK(max_diff(back.u, first.first.final_state.u) == 0.0);
  // Resuming from the checkpoint matches an uninterrupted run.
  RunOptions longer = opts;
  longer.t_max = 0.02;
  const auto whole = run(p, u0, longer);
  const auto resumed = run(p, u0, longer, nullptr, &first.first.final_state);
  CHECK(max_diff(whole.first.final_state.u, resumed.first.final_state.u) < 1e-9);
  CHECK_THROWS_AS(read_checkpoint("/nonexistent.ckpt"), Error);
}

TEST_CASE("diagnostics csv") {
  const auto p = subcritical(16);
  const FlowState s = initial_state(p, Fields(2, Field(16, 0.0)));
  std::ostringstream os;
  write_diagnostics_header(os, 2);
  write_diagnostics_row(os, s.history.front());
  const std::string text = os.str();
  const auto nl = text.find('\n');
  const std::string header = text.substr(0, nl), row = text.substr(nl + 1);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(header.rfind("step,t,dt,J", 0) == 0);
}
}
