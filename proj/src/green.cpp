#include "toda/green.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "toda/error.hpp"
#include "toda/functional.hpp"

namespace toda {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEulerGamma = 0.57721566490153286061;

double wrap(double d) { return d - std::round(d); }

// P = sum_{n>=1} ln(1 - e^{-2 pi n}); converges geometrically.
double theta_log_product() {
  double s = 0.0;
  for (int m = 1; m <= 12; ++m) s += std::log1p(-std::exp(-2.0 * kPi * m));
  return s;
}

// C such that Gamma = -2 ln|theta_1(pi z)| + 2 pi y^2 + 4 pi C has zero mean.
double theta_constant() { return theta_log_product() / (2.0 * kPi) - 1.0 / 24.0; }

// theta_1(pi z | tau = i) / z for a minimum-image displacement z = x + i y.
std::complex<double> theta_over_z(double x, double y) {
  const std::complex<double> z(x, y);
  const double q = std::exp(-kPi);
  std::complex<double> s = 0.0;
  for (int m = 0; m < 7; ++m) {
    const double a = (2 * m + 1) * kPi;
    const double coef = std::pow(q, (m + 0.5) * (m + 0.5)) * (m % 2 == 0 ? 1.0 : -1.0);
    std::complex<double> sinc;
    if (std::abs(z) < 1e-4) {
      const std::complex<double> az2 = (a * z) * (a * z);
      sinc = a * (1.0 - az2 / 6.0 + az2 * az2 / 120.0);
    } else {
      sinc = std::sin(a * z) / z;
    }
    s += coef * sinc;
  }
  return 2.0 * s;
}

std::complex<double> theta_1(double x, double y) {
  const double q = std::exp(-kPi);
  const std::complex<double> z(x, y);
  std::complex<double> s = 0.0;
  for (int m = 0; m < 7; ++m) {
    const double coef = std::pow(q, (m + 0.5) * (m + 0.5)) * (m % 2 == 0 ? 1.0 : -1.0);
    s += coef * std::sin((2 * m + 1) * kPi * z);
  }
  return 2.0 * s;
}

double e1(double x) { return -std::expint(-x); }

Field discrete_delta(int n, const GridPoint& p) {
  Field d(n, 0.0);
  d(p[0], p[1]) = static_cast<double>(n) * n;
  return d;
}

Field spectral_gamma(int n, const GridPoint& p) {
  return apply_multiplier(discrete_delta(n, p), [](int kx, int ky) {
    const int k2 = kx * kx + ky * ky;
    return k2 == 0 ? 0.0 : 1.0 / (kPi * k2);
  });
}

void check_point(const GridPoint& p, int n) {
  if (!is_valid_resolution(n))
    throw Error(ErrorKind::InvalidArgument, "resolution must be a power of two >= 16");
  if (p[0] < 0 || p[0] >= n || p[1] < 0 || p[1] >= n)
    throw Error(ErrorKind::InvalidArgument, "grid point outside the grid");
}

// Point values of a smooth function given on grid coordinates relative to p.
Field sample_relative(int n, const GridPoint& p, double (*fn)(double, double)) {
  Field out(n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      out(ix, iy) = fn(wrap(static_cast<double>(ix - p[0]) / n),
                       wrap(static_cast<double>(iy - p[1]) / n));
  return out;
}

}  // namespace

double green_regular(double dx, double dy) {
  const double x = wrap(dx), y = wrap(dy);
  return -2.0 * std::log(std::abs(theta_over_z(x, y))) + 2.0 * kPi * y * y +
         4.0 * kPi * theta_constant();
}

double green_gamma(double dx, double dy) {
  const double x = wrap(dx), y = wrap(dy);
  const double r = std::hypot(x, y);
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  return green_regular(x, y) - 2.0 * std::log(r);
}

double green_exp_minus_gamma(double dx, double dy) {
  const double x = wrap(dx), y = wrap(dy);
  return std::norm(theta_1(x, y)) * std::exp(-2.0 * kPi * y * y - 4.0 * kPi * theta_constant());
}

double green_b_closed_form() {
  return -2.0 * std::log(2.0 * kPi) + kPi / 3.0 - 4.0 * theta_log_product();
}

double green_b_ewald(double s) {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "Ewald parameter must be positive");
  // Regular part of the zero-mean Green function of -lap = delta - 1 split at
  // heat-kernel time s: real-space images through E1, the rest in Fourier space.
  double real_sum = 0.0, fourier_sum = 0.0;
  const int m_max = 3 + static_cast<int>(std::ceil(12.0 * std::sqrt(s)));
  const int k_max = 3 + static_cast<int>(std::ceil(2.0 / std::sqrt(s)));
  for (int a = -m_max; a <= m_max; ++a)
    for (int b = -m_max; b <= m_max; ++b) {
      if (a == 0 && b == 0) continue;
      const double m2 = static_cast<double>(a * a + b * b);
      real_sum += e1(m2 / (4.0 * s)) / (4.0 * kPi);
    }
  for (int a = -k_max; a <= k_max; ++a)
    for (int b = -k_max; b <= k_max; ++b) {
      if (a == 0 && b == 0) continue;
      const double k2 = static_cast<double>(a * a + b * b);
      fourier_sum += std::exp(-4.0 * kPi * kPi * k2 * s) / (4.0 * kPi * kPi * k2);
    }
  const double gamma_t =
      (std::log(4.0 * s) - kEulerGamma) / (4.0 * kPi) + real_sum - s + fourier_sum;
  return 4.0 * kPi * gamma_t;
}

LocalFit annulus_fit(const Field& smooth_part, const GridPoint& p) {
  const int n = smooth_part.n();
  check_point(p, n);
  const double h = 1.0 / n;
  // Complete polynomial basis through degree four in (x, y).
  std::vector<std::array<double, 3>> samples;  // x, y, value
  for (int j = -6; j <= 6; ++j)
    for (int i = -6; i <= 6; ++i) {
      const double r = std::hypot(i, j);
      if (r < 2.0 || r > 6.0) continue;
      const int ix = ((p[0] + i) % n + n) % n, iy = ((p[1] + j) % n + n) % n;
      samples.push_back({i * h, j * h, smooth_part(ix, iy)});
    }
  const int terms = 15;
  Eigen::MatrixXd m(samples.size(), terms);
  Eigen::VectorXd rhs(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    // Scale coordinates by the annulus radius to keep the system well conditioned.
    const double x = samples[s][0] / (6.0 * h), y = samples[s][1] / (6.0 * h);
    int c = 0;
    for (int deg = 0; deg <= 4; ++deg)
      for (int px = deg; px >= 0; --px) m(s, c++) = std::pow(x, px) * std::pow(y, deg - px);
    rhs(s) = samples[s][2];
  }
  const Eigen::VectorXd coef = m.colPivHouseholderQr().solve(rhs);
  LocalFit fit;
  fit.constant = coef(0);
  fit.linear = {coef(1) / (6.0 * h), coef(2) / (6.0 * h)};
  fit.rms = std::sqrt((m * coef - rhs).squaredNorm() / samples.size());
  return fit;
}

GreenData torus_green(const GridPoint& p, int n) {
  check_point(p, n);
  GreenData g;
  g.p = p;
  g.n = n;
  g.gamma = spectral_gamma(n, p);
  g.b = green_b_ewald();
  g.b_closed = green_b_closed_form();
  const LocalFit fit = annulus_fit(sample_relative(n, p, green_regular), p);
  g.b_fit = fit.constant;
  g.alpha = fit.linear;
  return g;
}

SingularSolution solve_singular_system(const TodaProblem& p, int k, const GridPoint& p0,
                                       const NewtonOptions& opts) {
  require_valid(p);
  const int nn = p.size();
  const int n = p.n;
  if (k < 0 || k >= nn) throw Error(ErrorKind::InvalidArgument, "component index out of range");
  check_point(p0, n);
  const auto& a = p.coupling.a();
  if (std::abs(p.rho[k] - 4.0 * kPi) > 1e-8)
    throw Error(ErrorKind::InvalidArgument, "singular component " + std::to_string(k + 1) +
                                                " needs rho = 4 pi");
  if (std::abs(a(k, k) - 2.0) > 1e-12)
    throw Error(ErrorKind::InvalidArgument, "singular component needs a_kk = 2");
  for (int j = 0; j < nn; ++j)
    if (j != k && a(k, j) > 0.0)
      throw Error(ErrorKind::InvalidArgument,
                  "singular component needs nonpositive off-diagonal couplings");
  if (!(p.h[k](p0[0], p0[1]) > 0.0))
    throw Error(ErrorKind::NonpositiveH, "h_" + std::to_string(k + 1) + "(p0) <= 0");

  SingularSolution sol;
  sol.k = k;
  sol.p0 = p0;
  sol.n = n;
  sol.gamma = spectral_gamma(n, p0);
  sol.b = green_b_closed_form();

  // Theta_k solves lap Theta = 4 pi - Q_k with zero mean.
  Field src = -1.0 * p.q[k] + 4.0 * kPi;
  src += -integrate(src);
  sol.theta_k = inverse_laplacian_zero_mean(src);

  const Field emg = sample_relative(n, p0, green_exp_minus_gamma);
  const Field exp_theta = exp(sol.theta_k);

  // Smooth subsystem on the components i != k with weights h_i e^{a_ik H_k}.
  std::vector<int> idx;
  for (int i = 0; i < nn; ++i)
    if (i != k) idx.push_back(i);
  Fields w;
  sol.h_fields.assign(nn, Field(n, 0.0));
  if (!idx.empty()) {
    Fields hw, qw;
    std::vector<double> rho;
    for (int i : idx) {
      Field weight = p.h[i];
      const double aik = a(i, k);
      if (aik != 0.0) {
        // e^{a_ik H_k} = (e^{-Gamma})^{-a_ik} e^{-a_ik Theta_k}
        for (std::size_t s = 0; s < weight.size(); ++s)
          weight[s] *= std::pow(emg[s], -aik) * std::pow(exp_theta[s], -aik);
      }
      hw.push_back(std::move(weight));
      qw.push_back(p.q[i]);
      rho.push_back(p.rho[i]);
    }
    TodaProblem sub{CouplingMatrix(remove_index(a, k)), rho, hw, qw, n};
    NewtonOptions o = opts;
    o.gauge = Gauge::fix_means();
    const NewtonResult res = solve(sub, Fields(idx.size(), Field(n, 0.0)), o);
    w = res.u;
    for (auto& f : w) f += -integrate(f);
    sol.newton_iterations = res.iterations;
    const Fields r = residual(sub, w);
    for (const auto& f : r) sol.residuals.push_back(f.max_abs());
    const Fields hs = apply_coupling(w, sub.coupling.a_inv());
    for (std::size_t t = 0; t < idx.size(); ++t) sol.h_fields[idx[t]] = hs[t];
  }
  sol.h_fields[k] = -1.0 * sol.theta_k;

  // Smooth representatives of G = A H with the pole removed.
  sol.g_regular.assign(nn, Field(n, 0.0));
  for (int i = 0; i < nn; ++i) {
    Field g(n, 0.0);
    for (int j = 0; j < nn; ++j) {
      if (j == k) continue;
      if (a(i, j) != 0.0) g += a(i, j) * sol.h_fields[j];
    }
    if (i != k && a(i, k) != 0.0) g += -a(i, k) * sol.theta_k;  // a_ik (H_k - Gamma)
    sol.g_regular[i] = std::move(g);
  }

  Field hk_reg = sample_relative(n, p0, green_regular);
  hk_reg -= sol.theta_k;
  const LocalFit fit = annulus_fit(hk_reg, p0);
  sol.r_k = fit.constant;
  sol.a_val = fit.constant;
  sol.alpha_vec = fit.linear;
  return sol;
}

SingularSolution refine(const SingularSolution& sol, int n_new) {
  if (!is_valid_resolution(n_new) || n_new < sol.n || n_new % sol.n != 0)
    throw Error(ErrorKind::InvalidArgument, "refinement must go to a finer power-of-two grid");
  const int f = n_new / sol.n;
  SingularSolution out = sol;
  out.n = n_new;
  out.p0 = {sol.p0[0] * f, sol.p0[1] * f};
  for (auto& g : out.g_regular) g = resample(g, n_new);
  for (auto& h : out.h_fields) h = resample(h, n_new);
  out.theta_k = resample(sol.theta_k, n_new);
  out.gamma = spectral_gamma(n_new, out.p0);
  return out;
}

Field h_k_values(const SingularSolution& sol) {
  Field g = sample_relative(sol.n, sol.p0, green_gamma);
  g -= sol.theta_k;
  return g;
}

double f_value(const TodaProblem& p, const SingularSolution& sol) {
  const int nn = p.size();
  const int k = sol.k;
  if (p.n != sol.n) throw Error(ErrorKind::InvalidArgument, "problem and solution grids differ");
  if (!p.coupling.is_cartan())
    throw Error(ErrorKind::InvalidArgument, "F is defined here for Cartan couplings only");
  const double hk0 = p.h[k](sol.p0[0], sol.p0[1]);
  if (!(hk0 > 0.0))
    throw Error(ErrorKind::NonpositiveH, "h_" + std::to_string(k + 1) + "(p0) <= 0");
  const auto& a = p.coupling.a();
  const Field emg = sample_relative(sol.n, sol.p0, green_exp_minus_gamma);
  const Field exp_theta = exp(sol.theta_k);

  // With a_kk = 2 the singular Dirichlet terms of J_k cancel exactly against
  // the neighbour correction, leaving the smooth block i, j != k.
  double value = 0.0;
  for (int i = 0; i < nn; ++i) {
    if (i == k) continue;
    for (int j = 0; j < nn; ++j)
      if (j != k && a(i, j) != 0.0)
        value += 0.5 * a(i, j) * grad_dot(sol.h_fields[i], sol.h_fields[j]);
  }
  for (int i = 0; i < nn; ++i) {
    if (i == k) continue;
    // int Q_i G_i; the singular part a_ik int Q_i Gamma uses the weak form.
    double lin = 0.0;
    for (int j = 0; j < nn; ++j)
      if (j != k && a(i, j) != 0.0) lin += a(i, j) * dot_mean(p.q[i], sol.h_fields[j]);
    lin += a(i, k) * (dot_mean(p.q[i], sol.gamma) - dot_mean(p.q[i], sol.theta_k));
    // int h_i e^{G_i} with e^{a_ik H_k} taken from the smooth e^{-Gamma}.
    Field weight = p.h[i];
    const double aik = a(i, k);
    for (std::size_t s = 0; s < weight.size(); ++s)
      weight[s] *= std::pow(emg[s], -aik) * std::pow(exp_theta[s], -aik);
    Field gi(sol.n, 0.0);
    for (int j = 0; j < nn; ++j)
      if (j != k && a(i, j) != 0.0) gi += a(i, j) * sol.h_fields[j];
    const double mass = integrate(weight * exp(gi));
    if (!(mass > 0.0)) throw NonpositiveHMassError(i, mass);
    value += lin - p.rho[i] * std::log(mass);
  }
  value += dot_mean(p.q[k], sol.gamma) - dot_mean(p.q[k], sol.theta_k);
  value -= 4.0 * kPi * (sol.r_k + std::log(hk0));
  value -= 4.0 * kPi * (1.0 + std::log(kPi));
  return value;
}

Vec2 grad_f(const TodaProblem& p, const SingularSolution& sol) {
  const int nn = p.size();
  const int k = sol.k;
  const double hk0 = p.h[k](sol.p0[0], sol.p0[1]);
  if (!(hk0 > 0.0))
    throw Error(ErrorKind::NonpositiveH, "h_" + std::to_string(k + 1) + "(p0) <= 0");
  // grad B = 2 alpha(p0) of the Green function.
  const LocalFit gfit = annulus_fit(sample_relative(sol.n, sol.p0, green_regular), sol.p0);
  Field nb(sol.n, 0.0);
  for (int j = 0; j < nn; ++j)
    if (j != k && p.coupling.a(k, j) != 0.0) nb += -p.coupling.a(k, j) * sol.h_fields[j];
  const auto gnb = gradient(nb);
  const auto gh = gradient(p.h[k]);
  Vec2 out;
  for (int d = 0; d < 2; ++d) {
    const double v = 2.0 * gfit.linear[d] - gnb[d](sol.p0[0], sol.p0[1]) +
                     gh[d](sol.p0[0], sol.p0[1]) / hk0;
    out[d] = -4.0 * kPi * v;
  }
  return out;
}

Vec2 grad_f(const TodaProblem& p, int k, const GridPoint& p0, const NewtonOptions& opts) {
  return grad_f(p, solve_singular_system(p, k, p0, opts));
}

void save_singular(const SingularSolution& sol, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const int nn = static_cast<int>(sol.h_fields.size());
  for (int i = 0; i < nn; ++i) {
    write_binary(sol.h_fields[i], (fs::path(dir) / ("H_" + std::to_string(i + 1) + ".bin")).string());
    write_binary(sol.g_regular[i], (fs::path(dir) / ("Greg_" + std::to_string(i + 1) + ".bin")).string());
  }
  write_binary(sol.theta_k, (fs::path(dir) / "theta.bin").string());
  nlohmann::json j;
  j["N"] = nn;
  j["k"] = sol.k + 1;
  j["n"] = sol.n;
  j["p0"] = {static_cast<double>(sol.p0[0]) / sol.n, static_cast<double>(sol.p0[1]) / sol.n};
  j["p0_index"] = {sol.p0[0], sol.p0[1]};
  j["B"] = sol.b;
  j["R_k"] = sol.r_k;
  j["a"] = sol.a_val;
  j["alpha"] = {sol.alpha_vec[0], sol.alpha_vec[1]};
  j["residuals"] = sol.residuals;
  j["newton_iterations"] = sol.newton_iterations;
  std::ofstream os(fs::path(dir) / "singular.json");
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write " + dir);
  os << j.dump(2) << "\n";
}

SingularSolution load_singular(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path meta = fs::path(dir) / "singular.json";
  std::ifstream is(meta);
  if (!is) throw Error(ErrorKind::MissingArtifact, "missing " + meta.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::InvalidConfig, meta.string() + ": " + e.what());
  }
  SingularSolution sol;
  const int nn = j.at("N").get<int>();
  sol.k = j.at("k").get<int>() - 1;
  sol.n = j.at("n").get<int>();
  sol.p0 = {j.at("p0_index")[0].get<int>(), j.at("p0_index")[1].get<int>()};
  sol.b = j.at("B").get<double>();
  sol.r_k = j.at("R_k").get<double>();
  sol.a_val = j.at("a").get<double>();
  sol.alpha_vec = {j.at("alpha")[0].get<double>(), j.at("alpha")[1].get<double>()};
  sol.residuals = j.at("residuals").get<std::vector<double>>();
  sol.newton_iterations = j.value("newton_iterations", 0);
  auto load = [&](const std::string& name) {
    const fs::path f = fs::path(dir) / name;
    if (!fs::exists(f)) throw Error(ErrorKind::MissingArtifact, "missing " + f.string());
    return read_binary(f.string());
  };
  for (int i = 0; i < nn; ++i) {
    sol.h_fields.push_back(load("H_" + std::to_string(i + 1) + ".bin"));
    sol.g_regular.push_back(load("Greg_" + std::to_string(i + 1) + ".bin"));
  }
  sol.theta_k = load("theta.bin");
  sol.gamma = spectral_gamma(sol.n, sol.p0);
  return sol;
}

}  // namespace toda
