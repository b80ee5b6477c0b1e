#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "toda/green.hpp"

namespace toda {

// Radius rule for the inner ball, r_eps = L_eps * eps.
enum class RadiusRule {
  Sqrt,        // r_eps = c * sqrt(eps)        (default, c = 0.5)
  InverseLog,  // r_eps = c / ln(1/eps)
};

enum class Cutoff {
  Quintic,  // eta = 1 - smoothstep5(t - 1): C^2, exact 1 on [0,1], 0 on [2,inf)
  Smooth,   // C-infinity transition on [1,2]
};

struct TestFamilyConfig {
  std::vector<double> epsilons{0.04, 0.028, 0.02, 0.014, 0.01};
  RadiusRule rule = RadiusRule::Sqrt;
  double rule_constant = 0.5;
  Cutoff cutoff = Cutoff::Quintic;
  int n_min = 256;              // smallest grid used for J(u^eps)
  double min_annulus_cells = 8; // r_eps >= this many grid spacings
  double min_core_cells = 2.5;  // eps >= this many grid spacings
};

double cutoff_value(Cutoff c, double t);
double ball_radius(const TestFamilyConfig& cfg, double eps);

struct TestFunction {
  double eps = 0.0;
  double radius = 0.0;         // L_eps * eps
  double beta = 0.0;           // outer constant -a - ln((L^2+1)/L^2)
  int n = 0;
  Fields big_u;                // U_i (U_k is the bubble-glued component)
  Fields u;                    // u = A U
  double interface_jump = 0.0; // max |inner - annulus| on the circle |x| = r_eps
};

// Builds u^eps on the grid of `sol`. Throws InvalidArgument when 2 r_eps >= 1/4
// and InterfaceMismatch when the annulus is under-resolved.
TestFunction build_test_function(const TodaProblem& p, const SingularSolution& sol, double eps,
                                 const TestFamilyConfig& cfg = {});

// Delta ln h_k + sum_j a_kj Q_j; NaN where h_k <= 0.
Field jlw_condition_field(const TodaProblem& p, int k);

// Trigonometric interpolation of h and Q onto a finer grid.
TodaProblem refine(const TodaProblem& p, int n_new);

struct FitReport {
  int k = 0;
  GridPoint p0{0, 0};
  std::vector<double> epsilons;
  std::vector<double> j_values;
  std::vector<int> n_used;
  double f_value = 0.0;
  // Three-parameter model J = c0 + c1 eps^2 ln eps^{-2} + c2 eps^2.
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  // Two-parameter model J = c0 + c1 eps^2 ln eps^{-2}.
  double c0_two = 0.0, c1_two = 0.0;
  double c1_theory = 0.0;  // -pi (|grad F|^2 / (16 pi^2) + jlw(p0))
  double jlw_at_p0 = 0.0;
  Vec2 grad_f{0.0, 0.0};
  std::vector<double> relative_errors;  // |c0-F|/|F|, |c1-c1_theory|/|c1_theory|
  bool all_below_f = false;
};

FitReport expansion_check(const TodaProblem& p, int k, const GridPoint& p0,
                          const TestFamilyConfig& cfg = {}, const NewtonOptions& opts = {});
FitReport expansion_check(const TodaProblem& p, const SingularSolution& sol,
                          const TestFamilyConfig& cfg = {});

nlohmann::json to_json(const FitReport& r);

}  // namespace toda
