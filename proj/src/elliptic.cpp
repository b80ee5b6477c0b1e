#include "toda/elliptic.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "toda/error.hpp"
#include "toda/functional.hpp"

namespace toda {

namespace {

constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

// Normalized exponential weights w_i = h_i e^{u_i} / int h_i e^{u_i}.
Fields density_weights(const TodaProblem& p, const Fields& u) {
  Fields w;
  for (int i = 0; i < p.size(); ++i) {
    const double lm = log_h_mass(p.h[i], u[i], i);
    Field wi = u[i];
    for (std::size_t s = 0; s < wi.size(); ++s) wi[s] = p.h[i][s] * std::exp(u[i][s] - lm);
    w.push_back(std::move(wi));
  }
  return w;
}

Fields coupled_laplacian(const TodaProblem& p, const Fields& v) {
  Fields lap;
  for (const auto& f : v) lap.push_back(laplacian(f));
  return apply_coupling(lap, p.coupling.a_inv());
}

// Flattening between field lists and Krylov vectors.
Eigen::VectorXd flatten(const Fields& f) {
  const std::size_t m = f[0].size();
  Eigen::VectorXd x(static_cast<Eigen::Index>(m * f.size()));
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t s = 0; s < m; ++s) x[static_cast<Eigen::Index>(i * m + s)] = f[i][s];
  return x;
}

Fields unflatten(const Eigen::VectorXd& x, int N, int n) {
  Fields f;
  const std::size_t m = static_cast<std::size_t>(n) * n;
  for (int i = 0; i < N; ++i) {
    Field fi(n);
    for (std::size_t s = 0; s < m; ++s) fi[s] = x[static_cast<Eigen::Index>(i * m + s)];
    f.push_back(std::move(fi));
  }
  return f;
}

void remove_means(Fields& f) {
  for (auto& fi : f) fi += -integrate(fi);
}

// Inverse of v -> A^{-1} lap v on mean-zero fields: lap^{-1} (A r).
Fields precondition(const TodaProblem& p, const Fields& r) {
  Fields ar = apply_coupling(r, p.coupling.a());
  Fields out;
  for (auto& f : ar)
    out.push_back(apply_multiplier(f, [](int kx, int ky) {
      const int k2 = kx * kx + ky * ky;
      return k2 == 0 ? 0.0 : -1.0 / (kFourPi2 * k2);
    }));
  return out;
}

// Restarted GMRES for J P^{-1} y = b on the mean-zero subspace; returns
// x = P^{-1} y.
Fields gmres(const TodaProblem& p, const Fields& w, const Fields& b, double rtol,
             int restart, int max_iter) {
  const int N = p.size();
  const int n = p.n;
  auto op = [&](const Eigen::VectorXd& y) {
    Fields v = precondition(p, unflatten(y, N, n));
    Fields jv = coupled_laplacian(p, v);
    for (int i = 0; i < N; ++i) {
      const double wv = integrate(w[i] * v[i]);
      for (std::size_t s = 0; s < jv[i].size(); ++s)
        jv[i][s] += p.rho[i] * w[i][s] * (v[i][s] - wv);
    }
    remove_means(jv);
    return flatten(jv);
  };
  const Eigen::VectorXd rhs = flatten(b);
  const double bnorm = rhs.norm();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rhs.size());
  if (bnorm == 0.0) return precondition(p, unflatten(y, N, n));
  int total = 0;
  while (total < max_iter) {
    Eigen::VectorXd r = rhs - (y.isZero() ? Eigen::VectorXd::Zero(rhs.size()) : op(y));
    double beta = r.norm();
    if (beta <= rtol * bnorm) break;
    std::vector<Eigen::VectorXd> V{r / beta};
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
    std::vector<double> cs(restart), sn(restart);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(restart + 1);
    g[0] = beta;
    int k = 0;
    for (; k < restart && total < max_iter; ++k, ++total) {
      Eigen::VectorXd wv = op(V[k]);
      // Modified Gram-Schmidt with one reorthogonalization pass.
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j <= k; ++j) {
          const double hij = V[j].dot(wv);
          H(j, k) += hij;
          wv -= hij * V[j];
        }
      H(k + 1, k) = wv.norm();
      V.push_back(H(k + 1, k) > 0 ? Eigen::VectorXd(wv / H(k + 1, k)) : wv);
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
        H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
        H(j, k) = t;
      }
      const double den = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = den > 0 ? H(k, k) / den : 1.0;
      sn[k] = den > 0 ? H(k + 1, k) / den : 0.0;
      H(k, k) = den;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) <= rtol * bnorm) {
        ++k;
        ++total;
        break;
      }
    }
    Eigen::VectorXd z = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int j = 0; j < k; ++j) y += z[j] * V[j];
    if (std::abs(g[k]) <= rtol * bnorm) break;
  }
  return precondition(p, unflatten(y, N, n));
}

}  // namespace

Fields residual(const TodaProblem& p, const Fields& u) {
  if (static_cast<int>(u.size()) != p.size())
    throw Error(ErrorKind::InvalidArgument, "field count does not match N");
  Fields r = coupled_laplacian(p, u);
  const Fields w = density_weights(p, u);
  for (int i = 0; i < p.size(); ++i)
    for (std::size_t s = 0; s < r[i].size(); ++s) r[i][s] += p.rho[i] * w[i][s] - p.q[i][s];
  return r;
}

double max_norm(const Fields& f) {
  double m = 0.0;
  for (const auto& fi : f) m = std::max(m, fi.max_abs());
  return m;
}

Fields jacobian_apply(const TodaProblem& p, const Fields& u, const Fields& v) {
  Fields jv = coupled_laplacian(p, v);
  const Fields w = density_weights(p, u);
  for (int i = 0; i < p.size(); ++i) {
    const double wv = integrate(w[i] * v[i]);
    for (std::size_t s = 0; s < jv[i].size(); ++s) jv[i][s] += p.rho[i] * w[i][s] * (v[i][s] - wv);
  }
  return jv;
}

Fields align_masses(const Fields& u, const std::vector<double>& masses) {
  Fields out = u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double lm = std::log(integrate(exp(u[i])));
    out[i] += std::log(masses[i]) - lm;
  }
  return out;
}

NewtonResult solve(const TodaProblem& p, const Fields& u0, const NewtonOptions& opts) {
  require_valid(p);
  if (!(opts.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "Newton tolerance must be positive");
  if (static_cast<int>(u0.size()) != p.size())
    throw Error(ErrorKind::InvalidArgument, "initial guess has wrong component count");
  if (opts.gauge.kind == Gauge::Kind::FixMasses && opts.gauge.masses.size() != u0.size())
    throw Error(ErrorKind::InvalidArgument, "FixMasses gauge needs one mass per component");

  NewtonResult res;
  res.u = u0;
  Fields r = residual(p, res.u);
  double rnorm = max_norm(r);
  res.history.push_back(rnorm);
  while (rnorm >= opts.tol) {
    if (res.iterations >= opts.max_iter)
      throw Error(ErrorKind::NoConvergence, "Newton did not converge in " +
                                                std::to_string(opts.max_iter) +
                                                " iterations, residual " + std::to_string(rnorm));
    ++res.iterations;
    const Fields w = density_weights(p, res.u);
    Fields b = r;
    for (auto& f : b) f *= -1.0;
    remove_means(b);
    const double forcing = std::clamp(0.1 * rnorm, 1e-12, 1e-2);
    Fields du = gmres(p, w, b, forcing, opts.gmres_restart, opts.gmres_max_iter);

    // Backtracking on the residual norm; the full step is tried first.
    double lambda = opts.damping;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, lambda *= 0.5) {
      Fields trial = res.u;
      for (int i = 0; i < p.size(); ++i) trial[i] += lambda * du[i];
      Fields rt;
      try {
        rt = residual(p, trial);
      } catch (const NonpositiveHMassError&) {
        continue;
      }
      const double tn = max_norm(rt);
      if (std::isfinite(tn) && tn < (1.0 - 1e-4 * lambda) * rnorm) {
        res.u = std::move(trial);
        r = std::move(rt);
        rnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw Error(ErrorKind::LineSearchStall,
                  "line search stalled at residual " + std::to_string(rnorm));
    res.history.push_back(rnorm);
  }
  if (opts.gauge.kind == Gauge::Kind::FixMasses) res.u = align_masses(res.u, opts.gauge.masses);
  res.residual = max_norm(residual(p, res.u));
  return res;
}

}  // namespace toda
