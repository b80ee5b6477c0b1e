#pragma once

#include <complex>
#include <vector>

#include <json.hpp>

namespace toda {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// f(z) = sum_{j=0}^{N} v_j z^j / j! with det(v_0, ..., v_N) = 1.
class PolynomialMap {
 public:
  // Validates |det - 1| < 1e-12 unless `normalize` is set, in which case v_0
  // is rescaled to make the determinant exactly one.
  explicit PolynomialMap(std::vector<ComplexVector> vectors, bool normalize = false);

  int n_sys() const { return static_cast<int>(v_.size()) - 1; }
  const std::vector<ComplexVector>& vectors() const { return v_; }
  Complex determinant() const;
  // i-th derivative f^{(i)}(z), exact from the coefficients.
  ComplexVector derivative(int i, Complex z) const;

  // The canonical map (1, z, z^2/2, ..., z^N/N!).
  static PolynomialMap standard(int n_sys);
  // Seeded random generic map normalized to det = 1.
  static PolynomialMap random(int n_sys, unsigned seed);
  static PolynomialMap from_json(const nlohmann::json& doc);

 private:
  std::vector<ComplexVector> v_;
};

// ln |Lambda_m(z)|^2 for m = 0..N+1, Lambda_m = f ^ f' ^ ... ^ f^{(m-1)}.
std::vector<double> log_wedge_norms(const PolynomialMap& f, Complex z);

// u_i(z) = ln(4 |Lambda_{i+1}|^2 |Lambda_{i-1}|^2 / |Lambda_i|^4) - ln rho_i.
std::vector<double> entire_solution(const PolynomialMap& f, const std::vector<double>& rho,
                                    Complex z);

// Delta u_i + sum_j a_ij rho_j e^{u_j} with a fourth-order Richardson
// combination of five-point Laplacians at steps h and 2h.
std::vector<double> classification_residual(const PolynomialMap& f,
                                            const std::vector<double>& rho, Complex z,
                                            double h = 1e-3);

struct MassResult {
  double value = 0.0;         // rho_i int_{R^2} e^{u_i}
  double disc_value = 0.0;    // contribution of |z| <= r_max
  double tail = 0.0;          // analytic tail beyond r_max
  double decay_exponent = 0.0;
  double error_estimate = 0.0;
};

// Gauss-Legendre (64 nodes) on dyadic shells times the trapezoid rule in angle,
// plus the tail of the fitted power law e^{u_i} ~ C r^{-gamma}. Throws
// TailNotConvergent when gamma <= 2. Component index is 0-based.
MassResult quantized_mass(const PolynomialMap& f, const std::vector<double>& rho, int i,
                          double r_max = 1e4);

// w(x) = -2 ln(1 + L |x|^2); -Delta w = 8 L e^w and int e^w = pi / L.
double bubble(double l, double x, double y);

}  // namespace toda
