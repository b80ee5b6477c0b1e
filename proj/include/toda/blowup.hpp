#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "toda/flow.hpp"

namespace toda {

struct Candidate {
  double x = 0.0, y = 0.0;     // position in [0,1)^2
  int ix = 0, iy = 0;
  std::vector<double> masses;  // int_{B_delta} e^{u_i}, one per swept delta
};

struct Indicators {
  double sum_max = 0.0;    // sum_i M_i, M_i = max u_i
  double grad_norm = 0.0;  // ||grad u||_{L^2}
  double sum_mean = 0.0;   // sum_i mean u_i
};

struct ConcentrationReport {
  double t = 0.0;
  std::vector<double> deltas;
  std::vector<std::vector<Candidate>> candidates;  // per component
  std::vector<double> global_masses;
  Indicators indicators;
  std::vector<double> u_cap_norms;  // ||grad U_i||_{L^2}
};

struct ConcentrationOptions {
  double eps0 = 0.1;
  std::vector<double> deltas{1.0 / 32, 1.0 / 16, 1.0 / 8};
};

// int_{B_delta(x)} e^{f} for every grid point x (discrete disc sum).
Field ball_masses(const Field& f, double delta);

// Grid points whose smallest-delta ball mass exceeds eps0, clustered greedily
// (largest mass first, merge radius 2 delta).
ConcentrationReport detect_concentration(const TodaProblem& p, double t, const Fields& u,
                                         const ConcentrationOptions& opts = {});
std::vector<ConcentrationReport> detect_concentration(const TodaProblem& p,
                                                      const Trajectory& traj,
                                                      const ConcentrationOptions& opts = {});

Indicators blowup_indicators(const Fields& u);

struct ProfileOptions {
  double r_prof = 20.0;  // radial extent of the sampled profile (rescaled units)
  double r_fit = 10.0;   // radius used for the fit and the RMS misfit
  int n_radii = 201;
  int n_theta = 64;
  double min_separation = 5.0;  // required max u - mean u
};

struct RadialProfile {
  double x = 0.0, y = 0.0;  // concentration point
  double m = 0.0;           // max u_k
  double scale = 0.0;       // e^{-M/2}
  std::vector<double> radii;
  std::vector<double> values;  // radial average of u(p + scale x) - M
  double l_fit = 0.0;
  double rms = 0.0;
};

// Rescales about the maximum of u_k and fits -2 ln(1 + L |x|^2). Throws
// InsufficientSeparation when max - mean < min_separation.
RadialProfile rescaled_profile(const Field& u_k, const ProfileOptions& opts = {});

nlohmann::json to_json(const ConcentrationReport& r);
void write_jsonl(std::ostream& os, const std::vector<ConcentrationReport>& reports);

}  // namespace toda
