#pragma once

#include <vector>

#include "toda/problem.hpp"

namespace toda {

// Gauge constraint removing the constant-shift kernel of the residual.
struct Gauge {
  enum class Kind { FixMeans, FixMasses };
  Kind kind = Kind::FixMeans;
  std::vector<double> masses;  // used by FixMasses: target int e^{u_i}

  static Gauge fix_means() { return {}; }
  static Gauge fix_masses(std::vector<double> m) { return {Kind::FixMasses, std::move(m)}; }
};

struct NewtonOptions {
  int max_iter = 50;
  double tol = 1e-10;     // residual max-norm target
  double damping = 1.0;   // initial line-search factor
  Gauge gauge;
  int gmres_restart = 80;
  int gmres_max_iter = 800;
};

struct NewtonResult {
  Fields u;
  int iterations = 0;
  double residual = 0.0;              // final max-norm residual
  std::vector<double> history;        // max-norm residual per iterate
};

// R_i = sum_j a^{ij} lap u_j + rho_i h_i e^{u_i} / int h_i e^{u_i} - Q_i.
Fields residual(const TodaProblem& p, const Fields& u);
double max_norm(const Fields& f);

// Gateaux derivative of the residual at u in direction v, including the
// nonlocal rank-one term from differentiating int h e^{u}.
Fields jacobian_apply(const TodaProblem& p, const Fields& u, const Fields& v);

// Newton-Krylov solve of residual(u) = 0 from u0. The Jacobian is applied
// matrix-free and GMRES is right-preconditioned by the mode-wise inverse of
// A^{-1} lap. Throws NoConvergence or LineSearchStall.
NewtonResult solve(const TodaProblem& p, const Fields& u0, const NewtonOptions& opts = {});

// Shifts each component by a constant so that int e^{u_i} = masses_i.
Fields align_masses(const Fields& u, const std::vector<double>& masses);

}  // namespace toda
