#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "toda/problem.hpp"

namespace toda {

// Per-step diagnostics of an accepted state.
struct Diagnostics {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double j = 0.0;
  std::vector<double> masses;        // int e^{u_i}
  std::vector<double> h_masses;      // int h_i e^{u_i}
  std::vector<double> decay;         // int e^{u_i} |u_dot_i|^2
  double decay_gradient = 0.0;       // sum int |grad u_dot_i|^2
  std::vector<double> max_u;         // M_i(t)
  std::vector<double> mean_u;        // mean of u_i
  double grad_norm = 0.0;            // ||grad u||_{L^2}
  std::vector<double> u_cap_norms;   // ||grad U_i||_{L^2}
  double residual = 0.0;             // max |R_i|
  double rhs_norm = 0.0;             // max |d/dt u_i|
  double energy_defect = 0.0;        // |dJ/dt + dissipation| over the last step
};

struct FlowState {
  double t = 0.0;
  Fields u;
  double dt = 0.0;
  long step = 0;
  int accepted_streak = 0;
  std::vector<Diagnostics> history;
  Fields rate;  // d/dt u at the current state (reused as the first RK stage)
};

struct StepOptions {
  double c_safe = 0.12;        // explicit RK4 stability factor (see README)
  double tol_m = 1e-6;         // relative mass drift allowed per unit time
  double floor = 1e-8;         // h-mass floor
  double dt_max = 0.0;         // optional additional cap; 0 disables
  double dt_min = 1e-14;
  double growth = 1.2;
  int growth_after = 20;
};

struct RunOptions {
  double t_max = 10.0;
  double conv_tol = 1e-8;
  double floor = 1e-8;
  double checkpoint_every = 0.0;  // 0 disables
  double sentinel = -50.0;        // divergence threshold on mean u_k
  double snapshot_every = 0.0;    // keep states every this much time; 0 disables
  long max_steps = 50'000'000;
  StepOptions step;
};

enum class EventKind { Converged, RegularityLoss, Diverging, MaxTimeReached, StepUnderflow };
const char* to_string(EventKind kind);

struct FlowEvent {
  EventKind kind = EventKind::MaxTimeReached;
  double t_event = 0.0;
  std::string detail;
};

struct Snapshot {
  double t;
  Fields u;
};

struct Trajectory {
  FlowState final_state;
  std::vector<Snapshot> snapshots;
  long rejected_steps = 0;
};

// d/dt u_i = e^{-u_i} (sum_j a^{ij} lap u_j + rho_i h_i e^{u_i}/int h_i e^{u_i} - Q_i).
Fields rhs(const TodaProblem& p, const Fields& u);

// Stability cap c_safe dx^2 e^{min u} / lambda_max(A^{-1}).
double stability_cap(const TodaProblem& p, const Fields& u, double c_safe);

// Diagnostics of a state (step/time/dt/defect fields left to the caller).
Diagnostics diagnose(const TodaProblem& p, const Fields& u);

// Fresh state at t = 0 with dt initialized to the stability cap and one
// history row; rejects initial data with int h_i e^{u_i} <= 0.
FlowState initial_state(const TodaProblem& p, const Fields& u0, const StepOptions& opts = {});

// One accepted RK4 step (retrying with halved dt on rejection). Throws
// StepUnderflow when dt drops below opts.dt_min. `rejected` counts retries.
FlowState step(const TodaProblem& p, const FlowState& s, const StepOptions& opts = {},
               long* rejected = nullptr);

using CheckpointSink = std::function<void(const FlowState&)>;
using StepObserver = std::function<void(const FlowState&)>;

// Integrates until an event fires. `start` allows resuming from a checkpoint.
std::pair<Trajectory, FlowEvent> run(const TodaProblem& p, const Fields& u0,
                                     const RunOptions& opts,
                                     const CheckpointSink& checkpoint = nullptr,
                                     const FlowState* start = nullptr,
                                     const StepObserver& observer = nullptr);

// Checkpoint: t (f64), dt (f64), n (u32), N (u32), step (i64), then N field
// blocks in the grid binary format.
void write_checkpoint(const FlowState& s, const std::string& path);
FlowState read_checkpoint(const std::string& path);

// Diagnostics CSV (one row per accepted step).
void write_diagnostics_header(std::ostream& os, int N);
void write_diagnostics_row(std::ostream& os, const Diagnostics& d);

}  // namespace toda
