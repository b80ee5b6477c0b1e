#include "toda/functional.hpp"

#include <cmath>
#include <numbers>

#include "toda/error.hpp"

namespace toda {

namespace {
constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kShiftThreshold = 500.0;

// ln of int w e^{u}; `w` may be null for weight 1.
double log_weighted_mass(const Field* w, const Field& u, int index) {
  const double umax = u.max();
  const double shift = umax > kShiftThreshold ? umax : 0.0;
  std::vector<double> terms(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = std::exp(u[i] - shift);
    terms[i] = w ? (*w)[i] * e : e;
  }
  const double mean = pairwise_sum(terms.data(), terms.size()) / static_cast<double>(u.size());
  if (!(mean > 0.0)) throw NonpositiveHMassError(index, mean);
  return shift + std::log(mean);
}
}  // namespace

double log_h_mass(const Field& h, const Field& u, int index) {
  return log_weighted_mass(&h, u, index);
}

EnergyReport evaluate_j(const TodaProblem& p, const Fields& u) {
  const int N = p.size();
  if (static_cast<int>(u.size()) != N)
    throw Error(ErrorKind::InvalidArgument, "field count does not match N");
  EnergyReport r;
  Fields lap;
  for (const auto& ui : u) lap.push_back(laplacian(ui));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double a = p.coupling.inv(i, j);
      if (a != 0.0) r.dirichlet += -0.5 * a * integrate(u[i] * lap[j]);
    }
  r.j_value = r.dirichlet;
  for (int i = 0; i < N; ++i) {
    const double lin = integrate(p.q[i] * u[i]);
    const double lh = log_h_mass(p.h[i], u[i], i);
    r.linear.push_back(lin);
    r.log_terms.push_back(p.rho[i] * lh);
    r.h_masses.push_back(std::exp(lh));
    r.masses.push_back(std::exp(log_weighted_mass(nullptr, u[i], i)));
    r.j_value += lin - p.rho[i] * lh;
  }
  return r;
}

double evaluate_j_k(const TodaProblem& p, const Fields& u, int k) {
  if (k < 0 || k >= p.size()) throw Error(ErrorKind::InvalidArgument, "critical index out of range");
  const EnergyReport r = evaluate_j(p, u);
  const double bracket = 0.25 * grad_dot(u[k], u[k]) + integrate(p.q[k] * u[k]) -
                         kFourPi * log_h_mass(p.h[k], u[k], k);
  return r.j_value - bracket;
}

double moser_trudinger_lhs(const Fields& u, const CouplingMatrix& a) {
  const int N = a.size();
  double s = 0.0;
  Fields lap;
  for (const auto& ui : u) lap.push_back(laplacian(ui));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) s += -0.5 * a.inv(i, j) * integrate(u[i] * lap[j]);
  for (int i = 0; i < N; ++i) s += kFourPi * (integrate(u[i]) - log_weighted_mass(nullptr, u[i], i));
  return s;
}

DecayQuantities decay_quantities(const TodaProblem& p, const Fields& u, const Fields& u_dot) {
  DecayQuantities d;
  for (int i = 0; i < p.size(); ++i) {
    d.weighted.push_back(integrate(exp(u[i]) * u_dot[i] * u_dot[i]));
    d.gradient += grad_dot(u_dot[i], u_dot[i]);
  }
  return d;
}

Fields apply_coupling(const Fields& v, const Eigen::MatrixXd& m) {
  const int N = static_cast<int>(v.size());
  Fields out;
  for (int i = 0; i < N; ++i) {
    Field f(v[0].n(), 0.0);
    for (int j = 0; j < N; ++j) {
      const double c = m(i, j);
      if (c == 0.0) continue;
      for (std::size_t s = 0; s < f.size(); ++s) f[s] += c * v[j][s];
    }
    out.push_back(std::move(f));
  }
  return out;
}

Fields u_cap(const Fields& u, const CouplingMatrix& a) { return apply_coupling(u, a.a_inv()); }

double grad_norm(const Field& f) { return std::sqrt(std::max(0.0, grad_dot(f, f))); }

double grad_norm(const Fields& u) {
  double s = 0.0;
  for (const auto& f : u) s += grad_dot(f, f);
  return std::sqrt(std::max(0.0, s));
}

}  // namespace toda
