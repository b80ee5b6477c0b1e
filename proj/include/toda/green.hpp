#pragma once

#include <array>
#include <string>
#include <vector>

#include "toda/elliptic.hpp"
#include "toda/problem.hpp"

namespace toda {

using GridPoint = std::array<int, 2>;  // (ix, iy) on an n x n grid
using Vec2 = std::array<double, 2>;

// Green function of the unit flat torus, -lap Gamma = 4 pi (delta_0 - 1),
// zero mean, evaluated in closed form through the Jacobi theta function
// theta_1(pi z | i). Displacements are wrapped to the minimum image.
double green_gamma(double dx, double dy);
// Gamma + 2 ln|x| (smooth near the pole; minimum-image |x|).
double green_regular(double dx, double dy);
// e^{-Gamma}: a smooth periodic function vanishing quadratically at the pole.
double green_exp_minus_gamma(double dx, double dy);
// Regular part B = lim (Gamma + 2 ln|x|), closed form from theta constants.
double green_b_closed_form();
// Regular part B from the Ewald splitting of the lattice sum with splitting
// parameter s > 0 (the result is independent of s).
double green_b_ewald(double s = 0.1);

struct GreenData {
  GridPoint p{0, 0};
  int n = 0;
  Field gamma;             // Fourier synthesis with multiplier 1/(pi |k|^2)
  double b = 0.0;          // B(p) from the accelerated lattice sum
  double b_fit = 0.0;      // B(p) from the annulus fit of Gamma + 2 ln|x|
  double b_closed = 0.0;   // B(p) in closed form (reference)
  Vec2 alpha{0.0, 0.0};    // first-order coefficient, grad B = 2 alpha
};

GreenData torus_green(const GridPoint& p, int n);

// Least-squares fit of f(x) ~ c + <g, x> + (higher-order polynomial terms)
// over the annulus 2 dx <= |x| <= 6 dx around p. Returns (c, g).
struct LocalFit {
  double constant = 0.0;
  Vec2 linear{0.0, 0.0};
  double rms = 0.0;
};
LocalFit annulus_fit(const Field& smooth_part, const GridPoint& p);

// Solution of the singular limit system with a Dirac mass at p0 in
// component k (0-based). H = A^{-1} G; H_k = Gamma(., p0) - Theta_k.
struct SingularSolution {
  int k = 0;
  GridPoint p0{0, 0};
  int n = 0;
  Fields g_regular;   // G_i (far), G_i + H_k (neighbours), G_k - 2 H_k
  Fields h_fields;    // H_i for i != k; entry k holds -Theta_k (H_k = Gamma + h_fields[k])
  Field theta_k;      // Gamma(., p0) - H_k, smooth
  Field gamma;        // spectral Gamma(., p0) (weak-form representative)
  double b = 0.0;     // B(p0)
  double r_k = 0.0;   // lim (H_k + 2 ln|x|) from the annulus fit
  double a_val = 0.0; // constant term a of H_k = -2 ln|x| + a + <alpha, x> + S
  Vec2 alpha_vec{0.0, 0.0};
  std::vector<double> residuals;  // max residual of each smooth equation (i != k)
  int newton_iterations = 0;
};

// Solves the system through the substitution H_k = Gamma - Theta_k and the
// modified weights h_i e^{a_ik H_k}, using the Newton solver for the smooth
// components. Requires rho_k = 4 pi, h_k(p0) > 0 and a Cartan-type row k.
SingularSolution solve_singular_system(const TodaProblem& p, int k, const GridPoint& p0,
                                       const NewtonOptions& opts = {});

// Trigonometric interpolation of all smooth parts to a finer power-of-two grid.
SingularSolution refine(const SingularSolution& sol, int n_new);

// Exact point values of H_k on the grid (the pole itself gets +infinity).
Field h_k_values(const SingularSolution& sol);

// F(p0) = J_k(G) + 1/4 int |grad(H_{k-1}+H_{k+1})|^2 + int Q_k H_k
//         - 4 pi (R_k + ln h_k(p0)) - 4 pi - 4 pi ln pi.
double f_value(const TodaProblem& p, const SingularSolution& sol);

// grad F = -4 pi grad(B - H_{k-1} - H_{k+1} + ln h_k) at p0.
Vec2 grad_f(const TodaProblem& p, const SingularSolution& sol);
Vec2 grad_f(const TodaProblem& p, int k, const GridPoint& p0, const NewtonOptions& opts = {});

// Directory of field files plus singular.json {k, p0, r_k, a, alpha, residuals}.
void save_singular(const SingularSolution& sol, const std::string& dir);
SingularSolution load_singular(const std::string& dir);

}  // namespace toda
