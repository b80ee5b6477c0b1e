#include "toda/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "toda/error.hpp"
#include "toda/functional.hpp"

namespace toda {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Converged: return "Converged";
    case EventKind::RegularityLoss: return "RegularityLoss";
    case EventKind::Diverging: return "Diverging";
    case EventKind::MaxTimeReached: return "MaxTimeReached";
    case EventKind::StepUnderflow: return "StepUnderflow";
  }
  return "Unknown";
}

namespace {

// Everything the integrator needs from one state, computed with a single
// Laplacian per component.
struct Evaluation {
  Fields lap;
  Fields residual;
  Fields rate;
  double j = 0.0;
  std::vector<double> masses, h_masses, dissipation;
};

Evaluation evaluate(const TodaProblem& p, const Fields& u) {
  const int N = p.size();
  Evaluation ev;
  Fields& lap = ev.lap;
  for (const auto& ui : u) lap.push_back(laplacian(ui));
  ev.residual = apply_coupling(lap, p.coupling.a_inv());
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double a = p.coupling.inv(i, j);
      if (a != 0.0) ev.j += -0.5 * a * dot_mean(u[i], lap[j]);
    }
  thread_local std::vector<double> eu, heu, work;
  for (int i = 0; i < N; ++i) {
    const Field& ui = u[i];
    const Field& hi = p.h[i];
    const Field& qi = p.q[i];
    const std::size_t cells = ui.size();
    const double c = static_cast<double>(cells);
    // One exponential per sample; the shifted path of log_h_mass only
    // matters for very large u.
    eu.resize(cells);
    heu.resize(cells);
    work.resize(cells);
    const bool shifted = ui.max() > 500.0;
    for (std::size_t s = 0; s < cells; ++s) {
      eu[s] = std::exp(ui[s]);
      heu[s] = hi[s] * eu[s];
    }
    const double hmean = pairwise_sum(heu.data(), cells) / c;
    if (!shifted && !(hmean > 0.0)) throw NonpositiveHMassError(i, hmean);
    const double lh = shifted ? log_h_mass(hi, ui, i) : std::log(hmean);
    const double scale = p.rho[i] * std::exp(-lh);
    Field& r = ev.residual[i];
    std::vector<double> rate(cells);
    for (std::size_t s = 0; s < cells; ++s) {
      const double w = shifted ? std::exp(ui[s] - lh) * p.rho[i] * hi[s] : scale * heu[s];
      r[s] += w - qi[s];
      rate[s] = r[s] / eu[s];
      work[s] = r[s] * rate[s];
    }
    ev.dissipation.push_back(pairwise_sum(work.data(), cells) / c);
    ev.masses.push_back(pairwise_sum(eu.data(), cells) / c);
    ev.h_masses.push_back(std::exp(lh));
    ev.j += dot_mean(qi, ui) - p.rho[i] * lh;
    ev.rate.emplace_back(p.n, std::move(rate));
  }
  return ev;
}

Diagnostics diagnostics_from(const TodaProblem& p, const Fields& u, const Evaluation& ev) {
  Diagnostics d;
  d.j = ev.j;
  d.masses = ev.masses;
  d.h_masses = ev.h_masses;
  d.decay = ev.dissipation;
  for (int i = 0; i < p.size(); ++i) {
    d.decay_gradient += grad_dot(ev.rate[i], ev.rate[i]);
    d.max_u.push_back(u[i].max());
    d.mean_u.push_back(integrate(u[i]));
    d.residual = std::max(d.residual, ev.residual[i].max_abs());
    d.rhs_norm = std::max(d.rhs_norm, ev.rate[i].max_abs());
  }
  // Gradient pairings G_jl = int <grad u_j, grad u_l> from the stored Laplacians.
  const int N = p.size();
  Eigen::MatrixXd g(N, N);
  for (int j = 0; j < N; ++j)
    for (int l = 0; l < N; ++l) g(j, l) = -dot_mean(u[j], ev.lap[l]);
  g = 0.5 * (g + g.transpose()).eval();
  d.grad_norm = std::sqrt(std::max(0.0, g.trace()));
  const Eigen::MatrixXd gu = p.coupling.a_inv() * g * p.coupling.a_inv();
  for (int i = 0; i < N; ++i) d.u_cap_norms.push_back(std::sqrt(std::max(0.0, gu(i, i))));
  return d;
}

double total_dissipation(const Evaluation& ev) {
  double s = 0.0;
  for (double d : ev.dissipation) s += d;
  return s;
}

bool all_finite(const Fields& u) {
  return std::all_of(u.begin(), u.end(), [](const Field& f) { return f.all_finite(); });
}

}  // namespace

Fields rhs(const TodaProblem& p, const Fields& u) { return evaluate(p, u).rate; }

double stability_cap(const TodaProblem& p, const Fields& u, double c_safe) {
  double umin = std::numeric_limits<double>::infinity();
  for (const auto& f : u) umin = std::min(umin, f.min());
  const double dx = 1.0 / p.n;
  return c_safe * dx * dx * std::exp(umin) / p.coupling.lambda_max_inv();
}

Diagnostics diagnose(const TodaProblem& p, const Fields& u) {
  return diagnostics_from(p, u, evaluate(p, u));
}

FlowState initial_state(const TodaProblem& p, const Fields& u0, const StepOptions& opts) {
  require_valid(p);
  if (static_cast<int>(u0.size()) != p.size())
    throw Error(ErrorKind::InvalidArgument, "initial data has wrong component count");
  for (int i = 0; i < p.size(); ++i) {
    if (u0[i].n() != p.n) throw Error(ErrorKind::InvalidArgument, "initial data resolution mismatch");
    if (!u0[i].all_finite()) throw Error(ErrorKind::InvalidConfig, "initial data is not finite");
    const double hm = integrate(p.h[i] * exp(u0[i]));
    if (!(hm > 0.0))
      throw Error(ErrorKind::InvalidConfig,
                  "initial regularity violated: int h_" + std::to_string(i + 1) + " e^{u0} = " +
                      std::to_string(hm));
  }
  FlowState s;
  s.u = u0;
  const Evaluation ev = evaluate(p, u0);
  s.rate = ev.rate;
  s.dt = stability_cap(p, u0, opts.c_safe);
  if (opts.dt_max > 0.0) s.dt = std::min(s.dt, opts.dt_max);
  Diagnostics d = diagnostics_from(p, u0, ev);
  d.dt = s.dt;
  s.history.push_back(std::move(d));
  return s;
}

namespace {
enum class Rejection { None, Energy, Mass, Floor, NonFinite };
// Reason for the most recent rejection, read by run() after an underflow.
thread_local Rejection g_last_rejection = Rejection::None;

// Advances s in place by one accepted step; s is untouched if this throws.
void advance(const TodaProblem& p, FlowState& s, const StepOptions& opts, long* rejected) {
  const int N = p.size();
  const Diagnostics& prev = s.history.back();
  const Fields k1 = s.rate.empty() ? rhs(p, s.u) : s.rate;
  double dt = std::min(s.dt, stability_cap(p, s.u, opts.c_safe));
  if (opts.dt_max > 0.0) dt = std::min(dt, opts.dt_max);
  double prev_diss = 0.0;
  for (double d : prev.decay) prev_diss += d;

  auto stage = [&](const Fields& k, double c) {
    Fields y = s.u;
    for (int i = 0; i < N; ++i)
      for (std::size_t q = 0; q < y[i].size(); ++q) y[i][q] += c * k[i][q];
    return y;
  };

  for (;;) {
    if (dt < opts.dt_min)
      throw Error(ErrorKind::StepUnderflow,
                  "time step underflow (dt = " + std::to_string(dt) + ") at t = " + std::to_string(s.t));
    Rejection why = Rejection::None;
    try {
      const Fields k2 = rhs(p, stage(k1, 0.5 * dt));
      const Fields k3 = rhs(p, stage(k2, 0.5 * dt));
      const Fields k4 = rhs(p, stage(k3, dt));
      Fields u_new = s.u;
      for (int i = 0; i < N; ++i)
        for (std::size_t q = 0; q < u_new[i].size(); ++q)
          u_new[i][q] += dt / 6.0 * (k1[i][q] + 2.0 * k2[i][q] + 2.0 * k3[i][q] + k4[i][q]);
      if (!all_finite(u_new)) {
        why = Rejection::NonFinite;
      } else {
        const Evaluation ev = evaluate(p, u_new);
        const double tol_j = 1e-10 * (1.0 + std::abs(prev.j));
        if (!(ev.j <= prev.j + tol_j)) why = Rejection::Energy;
        for (int i = 0; i < N && why == Rejection::None; ++i) {
          if (std::abs(ev.masses[i] - prev.masses[i]) > opts.tol_m * dt * prev.masses[i])
            why = Rejection::Mass;
          else if (!(ev.h_masses[i] > opts.floor))
            why = Rejection::Floor;
        }
        if (why == Rejection::None) {
          Diagnostics d = diagnostics_from(p, u_new, ev);
          d.step = s.step + 1;
          d.t = s.t + dt;
          d.dt = dt;
          // Trapezoidal dissipation makes the defect second order in dt.
          d.energy_defect = std::abs((ev.j - prev.j) / dt + 0.5 * (prev_diss + total_dissipation(ev)));
          s.t += dt;
          s.u = std::move(u_new);
          s.step += 1;
          s.accepted_streak += 1;
          s.dt = dt;
          if (s.accepted_streak >= opts.growth_after) {
            s.dt = dt * opts.growth;
            s.accepted_streak = 0;
          }
          s.history.push_back(std::move(d));
          s.rate = ev.rate;
          g_last_rejection = Rejection::None;
          return;
        }
      }
    } catch (const NonpositiveHMassError&) {
      why = Rejection::Floor;
    }
    g_last_rejection = why;
    if (rejected) ++*rejected;
    dt *= 0.5;
  }
}

}  // namespace

FlowState step(const TodaProblem& p, const FlowState& s, const StepOptions& opts, long* rejected) {
  FlowState out = s;
  advance(p, out, opts, rejected);
  return out;
}

std::pair<Trajectory, FlowEvent> run(const TodaProblem& p, const Fields& u0, const RunOptions& opts,
                                     const CheckpointSink& checkpoint, const FlowState* start,
                                     const StepObserver& observer) {
  StepOptions so = opts.step;
  so.floor = opts.floor;
  Trajectory traj;
  FlowState s = start ? *start : initial_state(p, u0, so);
  if (start && s.rate.empty()) s.rate = rhs(p, s.u);
  if (start && s.history.empty()) s.history.push_back(diagnose(p, s.u));
  double next_ckpt = opts.checkpoint_every > 0 ? s.t + opts.checkpoint_every : INFINITY;
  double next_snap = s.t;
  FlowEvent ev;

  auto finish = [&](EventKind k, const std::string& detail) {
    ev.kind = k;
    ev.t_event = s.t;
    ev.detail = detail;
    traj.final_state = s;
    if (opts.snapshot_every > 0 && (traj.snapshots.empty() || traj.snapshots.back().t < s.t))
      traj.snapshots.push_back({s.t, s.u});
    return std::make_pair(std::move(traj), ev);
  };

  for (long it = 0;; ++it) {
    const Diagnostics& d = s.history.back();
    if (opts.snapshot_every > 0 && s.t >= next_snap) {
      traj.snapshots.push_back({s.t, s.u});
      next_snap = s.t + opts.snapshot_every;
    }
    if (observer) observer(s);
    double hmin = INFINITY, mean_min = INFINITY;
    for (int i = 0; i < p.size(); ++i) {
      hmin = std::min(hmin, d.h_masses[i]);
      mean_min = std::min(mean_min, d.mean_u[i]);
    }
    if (d.residual < opts.conv_tol && d.rhs_norm < opts.conv_tol)
      return finish(EventKind::Converged, "max residual " + std::to_string(d.residual));
    if (hmin < opts.floor)
      return finish(EventKind::RegularityLoss, "h-mass " + std::to_string(hmin) + " below floor");
    if (mean_min < opts.sentinel)
      return finish(EventKind::Diverging, "mean u fell to " + std::to_string(mean_min));
    if (s.t >= opts.t_max * (1.0 - 1e-14) || it >= opts.max_steps)
      return finish(EventKind::MaxTimeReached, "t = " + std::to_string(s.t));

    // Land exactly on t_max.
    const double dt_saved = s.dt;
    const bool clipped = s.t + s.dt > opts.t_max;
    if (clipped) s.dt = opts.t_max - s.t;
    try {
      advance(p, s, so, &traj.rejected_steps);
      if (clipped) s.dt = std::max(s.dt, dt_saved);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StepUnderflow) throw;
      if (g_last_rejection == Rejection::Floor)
        return finish(EventKind::RegularityLoss, "h-mass floor reached: " + std::string(e.what()));
      return finish(EventKind::StepUnderflow, e.what());
    }
    if (s.t >= next_ckpt) {
      if (checkpoint) checkpoint(s);
      next_ckpt += opts.checkpoint_every;
    }
  }
}

void write_checkpoint(const FlowState& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot open checkpoint " + path);
  const double td[2] = {s.t, s.dt};
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(s.u.empty() ? 0 : s.u[0].n()),
                                 static_cast<std::uint32_t>(s.u.size())};
  const std::int64_t step = s.step;
  os.write(reinterpret_cast<const char*>(td), sizeof(td));
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  os.write(reinterpret_cast<const char*>(&step), sizeof(step));
  for (const auto& f : s.u) write_binary(f, os);
  if (!os) throw Error(ErrorKind::InvalidArgument, "failed writing checkpoint " + path);
}

FlowState read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingArtifact, "cannot open checkpoint " + path);
  double td[2];
  std::uint32_t dims[2];
  std::int64_t step = 0;
  is.read(reinterpret_cast<char*>(td), sizeof(td));
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  is.read(reinterpret_cast<char*>(&step), sizeof(step));
  if (!is) throw Error(ErrorKind::InvalidConfig, "truncated checkpoint header in " + path);
  FlowState s;
  s.t = td[0];
  s.dt = td[1];
  s.step = step;
  for (std::uint32_t i = 0; i < dims[1]; ++i) {
    s.u.push_back(read_binary(is));
    if (s.u.back().n() != static_cast<int>(dims[0]))
      throw Error(ErrorKind::InvalidConfig, "checkpoint field resolution mismatch");
  }
  return s;
}

void write_diagnostics_header(std::ostream& os, int N) {
  os << "step,t,dt,J";
  const char* per[] = {"mass", "hmass", "decay", "maxu", "meanu", "Unorm"};
  for (const char* name : per)
    for (int i = 1; i <= N; ++i) os << ',' << name << '_' << i;
  os << ",decay_grad,grad_norm,residual,rhs_norm,energy_defect\n";
}

void write_diagnostics_row(std::ostream& os, const Diagnostics& d) {
  os << std::setprecision(17) << d.step << ',' << d.t << ',' << d.dt << ',' << d.j;
  for (const auto* v : {&d.masses, &d.h_masses, &d.decay, &d.max_u, &d.mean_u, &d.u_cap_norms})
    for (double x : *v) os << ',' << x;
  os << ',' << d.decay_gradient << ',' << d.grad_norm << ',' << d.residual << ',' << d.rhs_norm
     << ',' << d.energy_defect << '\n';
}

}  // namespace toda
