#include "toda/classify.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "toda/error.hpp"

namespace toda {
namespace {

constexpr double kPi = 3.14159265358979323846;

using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

CMatrix as_matrix(const std::vector<ComplexVector>& v) {
  const int m = static_cast<int>(v.size());
  CMatrix out(m, m);
  for (int j = 0; j < m; ++j) {
    if (static_cast<int>(v[j].size()) != m)
      throw Error(ErrorKind::InvalidArgument, "polynomial map vectors must have length N+1");
    for (int r = 0; r < m; ++r) out(r, j) = v[j][r];
  }
  return out;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

// Angular average of e^{u_i} on the circle of radius r.
double ring_average(const PolynomialMap& f, const std::vector<double>& rho, int i, double r,
                    int n_theta) {
  double s = 0.0;
  for (int m = 0; m < n_theta; ++m) {
    const double th = 2.0 * kPi * (m + 0.5) / n_theta;
    s += std::exp(entire_solution(f, rho, std::polar(r, th))[i]);
  }
  return s / n_theta;
}

}  // namespace

PolynomialMap::PolynomialMap(std::vector<ComplexVector> vectors, bool normalize)
    : v_(std::move(vectors)) {
  if (v_.size() < 2) throw Error(ErrorKind::InvalidArgument, "polynomial map needs N >= 1");
  const Complex d = as_matrix(v_).determinant();
  if (normalize) {
    if (std::abs(d) < 1e-300) throw Error(ErrorKind::DegenerateFrame, "vectors are linearly dependent");
    for (auto& c : v_[0]) c /= d;
  } else if (std::abs(d - 1.0) >= 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "polynomial map needs det(v_0..v_N) = 1");
  }
}

Complex PolynomialMap::determinant() const { return as_matrix(v_).determinant(); }

ComplexVector PolynomialMap::derivative(int i, Complex z) const {
  const int m = static_cast<int>(v_.size());
  ComplexVector out(m, 0.0);
  // f^{(i)}(z) = sum_{j>=i} v_j z^{j-i} / (j-i)!
  Complex pw = 1.0;
  double fact = 1.0;
  for (int j = i; j < m; ++j) {
    if (j > i) {
      pw *= z;
      fact *= (j - i);
    }
    for (int r = 0; r < m; ++r) out[r] += v_[j][r] * pw / fact;
  }
  return out;
}

PolynomialMap PolynomialMap::standard(int n_sys) {
  std::vector<ComplexVector> v(n_sys + 1, ComplexVector(n_sys + 1, 0.0));
  for (int j = 0; j <= n_sys; ++j) v[j][j] = 1.0;
  return PolynomialMap(std::move(v));
}

PolynomialMap PolynomialMap::random(int n_sys, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ComplexVector> v(n_sys + 1, ComplexVector(n_sys + 1));
  for (auto& col : v)
    for (auto& c : col) c = Complex(g(rng), g(rng));
  return PolynomialMap(std::move(v), true);
}

PolynomialMap PolynomialMap::from_json(const nlohmann::json& doc) {
  // [[ [re, im], ... ], ...]: one complex (N+1)-vector per v_j.
  const auto& list = doc.contains("vectors") ? doc.at("vectors") : doc;
  std::vector<ComplexVector> v;
  try {
    for (const auto& col : list) {
      ComplexVector c;
      for (const auto& e : col) c.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
      v.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("polynomial map: ") + e.what());
  }
  const bool normalize = doc.is_object() && doc.value("normalize", false);
  return PolynomialMap(std::move(v), normalize);
}

std::vector<double> log_wedge_norms(const PolynomialMap& f, Complex z) {
  const int m = f.n_sys() + 1;
  CMatrix frame(m, m);
  for (int i = 0; i < m; ++i) {
    const ComplexVector d = f.derivative(i, z);
    for (int r = 0; r < m; ++r) frame(r, i) = d[r];
  }
  // |Lambda_k|^2 is the Gram determinant of the first k columns, i.e. the
  // product of the squared diagonal entries of R in frame = Q R.
  Eigen::HouseholderQR<CMatrix> qr(frame);
  const CMatrix& r = qr.matrixQR();
  std::vector<double> out(m + 1, 0.0);
  for (int k = 0; k < m; ++k) {
    const double d = std::abs(r(k, k));
    if (!(d > 1e-150) || d < 1e-14 * frame.col(k).norm())
      throw Error(ErrorKind::DegenerateFrame, "Gram determinant underflow in the osculating frame");
    out[k + 1] = out[k] + 2.0 * std::log(d);
  }
  return out;
}

std::vector<double> entire_solution(const PolynomialMap& f, const std::vector<double>& rho,
                                    Complex z) {
  const int n = f.n_sys();
  if (static_cast<int>(rho.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "rho must have N entries");
  for (double r : rho)
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho must be positive");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw Error(ErrorKind::InvalidArgument, "z must be finite");
  const std::vector<double> lw = log_wedge_norms(f, z);
  std::vector<double> u(n);
  for (int i = 1; i <= n; ++i)
    u[i - 1] = std::log(4.0) + lw[i + 1] + lw[i - 1] - 2.0 * lw[i] - std::log(rho[i - 1]);
  return u;
}

std::vector<double> classification_residual(const PolynomialMap& f,
                                            const std::vector<double>& rho, Complex z,
                                            double h) {
  const int n = f.n_sys();
  const std::vector<double> u0 = entire_solution(f, rho, z);
  auto five_point = [&](double step) {
    std::vector<double> lap(n, 0.0);
    const Complex offs[4] = {{step, 0}, {-step, 0}, {0, step}, {0, -step}};
    for (const auto& o : offs) {
      const auto u = entire_solution(f, rho, z + o);
      for (int i = 0; i < n; ++i) lap[i] += u[i];
    }
    for (int i = 0; i < n; ++i) lap[i] = (lap[i] - 4.0 * u0[i]) / (step * step);
    return lap;
  };
  const auto l1 = five_point(h), l2 = five_point(2.0 * h);
  std::vector<double> res(n);
  for (int i = 0; i < n; ++i) {
    double v = (4.0 * l1[i] - l2[i]) / 3.0;
    for (int j = 0; j < n; ++j) {
      const double a = (i == j) ? 2.0 : (std::abs(i - j) == 1 ? -1.0 : 0.0);
      if (a != 0.0) v += a * rho[j] * std::exp(u0[j]);
    }
    res[i] = v;
  }
  return res;
}

MassResult quantized_mass(const PolynomialMap& f, const std::vector<double>& rho, int i,
                          double r_max) {
  if (i < 0 || i >= f.n_sys()) throw Error(ErrorKind::InvalidArgument, "component index out of range");
  if (!(r_max >= 100.0)) throw Error(ErrorKind::InvalidArgument, "r_max must be at least 100");
  static const GaussLegendre gl(64);
  const int n_theta = 128;
  // Shells [0, 1/8], then dyadic out to r_max.
  std::vector<double> edges{0.0, 0.125};
  while (edges.back() < r_max) edges.push_back(std::min(2.0 * edges.back(), r_max));
  MassResult res;
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double a = edges[s], b = edges[s + 1];
    double shell = 0.0;
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[q];
      shell += gl.w[q] * 0.5 * (b - a) * 2.0 * kPi * r * ring_average(f, rho, i, r, n_theta);
    }
    total += shell;
  }
  // Power-law decay e^{u_i} ~ C r^{-gamma} from the two outermost radii.
  const double r1 = 0.5 * r_max, r2 = r_max;
  const double m1 = ring_average(f, rho, i, r1, n_theta), m2 = ring_average(f, rho, i, r2, n_theta);
  const double gamma = std::log(m1 / m2) / std::log(r2 / r1);
  res.decay_exponent = gamma;
  if (!(gamma > 2.0))
    throw Error(ErrorKind::TailNotConvergent,
                "fitted decay exponent " + std::to_string(gamma) + " <= 2");
  res.tail = 2.0 * kPi * m2 * r2 * r2 / (gamma - 2.0);
  res.disc_value = rho[i] * total;
  res.value = rho[i] * (total + res.tail);
  // The tail model is only asymptotic; report it in full as the error bound.
  res.error_estimate = rho[i] * res.tail;
  return res;
}

double bubble(double l, double x, double y) {
  if (!(l > 0.0)) throw Error(ErrorKind::InvalidArgument, "bubble scale must be positive");
  return -2.0 * std::log1p(l * (x * x + y * y));
}

}  // namespace toda
