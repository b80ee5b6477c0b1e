#pragma once

#include <vector>

#include "toda/problem.hpp"

namespace toda {

struct EnergyReport {
  double j_value = 0.0;
  double dirichlet = 0.0;           // 1/2 sum a^{ij} int <grad u_i, grad u_j>
  std::vector<double> linear;       // int Q_i u_i
  std::vector<double> log_terms;    // rho_i ln int h_i e^{u_i}
  std::vector<double> masses;       // int e^{u_i}
  std::vector<double> h_masses;     // int h_i e^{u_i}
};

// ln of int h e^{u}. Above max u = 500 the exponential is evaluated against
// a shift and compensated exactly in the logarithm. Throws
// NonpositiveHMassError(index) when the integral is not positive.
double log_h_mass(const Field& h, const Field& u, int index);

EnergyReport evaluate_j(const TodaProblem& p, const Fields& u);

// J_k = J - (1/4 int |grad u_k|^2 + int Q_k u_k - 4 pi ln int h_k e^{u_k}).
double evaluate_j_k(const TodaProblem& p, const Fields& u, int k);

// 1/2 sum a^{ij} int <grad u_i, grad u_j> + 4 pi sum (mean u_i - ln mean e^{u_i}).
double moser_trudinger_lhs(const Fields& u, const CouplingMatrix& a);

struct DecayQuantities {
  std::vector<double> weighted;  // int e^{u_i} |u_dot_i|^2
  double gradient = 0.0;         // sum_i int |grad u_dot_i|^2
};
DecayQuantities decay_quantities(const TodaProblem& p, const Fields& u, const Fields& u_dot);

// U_i = sum_j a^{ij} u_j.
Fields u_cap(const Fields& u, const CouplingMatrix& a);
// A v for a list of fields (inverse of u_cap).
Fields apply_coupling(const Fields& v, const Eigen::MatrixXd& m);

// ||grad f||_{L^2}.
double grad_norm(const Field& f);
// Total ||grad u||_{L^2} over all components.
double grad_norm(const Fields& u);

}  // namespace toda
