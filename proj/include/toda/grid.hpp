#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace toda {

// Real scalar field on the unit flat torus [0,1)^2 sampled at (ix/n, iy/n).
// Storage is row-major with y as the slow index: value(ix, iy) = v[iy*n+ix].
class Field {
 public:
  Field() = default;
  // n must be a power of two >= 16.
  explicit Field(int n, double value = 0.0);
  Field(int n, std::vector<double> values);

  int n() const { return n_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  double& operator()(int ix, int iy) { return v_[static_cast<std::size_t>(iy) * n_ + ix]; }
  double operator()(int ix, int iy) const { return v_[static_cast<std::size_t>(iy) * n_ + ix]; }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double max() const;
  double min() const;
  double max_abs() const;
  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(const Field& o);
  Field& operator+=(double c);
  Field& operator*=(double c);

 private:
  int n_ = 0;
  std::vector<double> v_;
};

using Fields = std::vector<Field>;

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, const Field& b);
Field operator*(double c, Field a);
Field operator+(Field a, double c);

bool is_valid_resolution(int n);

// Pointwise constructors and maps.
Field sample(int n, const std::function<double(double, double)>& f);
Field map(const Field& f, const std::function<double(double)>& fn);
Field exp(const Field& f);

// Spectral calculus. Every operation is exact on trigonometric polynomials
// resolved by the grid.
Field laplacian(const Field& f);
// Returns g with laplacian(g) = f and zero mean; rejects |mean f| > 1e-10.
Field inverse_laplacian_zero_mean(const Field& f);
// Pairwise (cascade) summation of count doubles.
double pairwise_sum(const double* x, std::size_t count);
// Mean of the samples, i.e. the integral over the unit-area torus.
double integrate(const Field& f);
// integrate(a * b) without forming the product field.
double dot_mean(const Field& a, const Field& b);
std::array<Field, 2> gradient(const Field& f);
// Integral of <grad f, grad g>, computed as -integral(f * laplacian(g)).
double grad_dot(const Field& f, const Field& g);
// Applies a real Fourier multiplier symbol(kx, ky) with integer wave numbers.
Field apply_multiplier(const Field& f, const std::function<double(int, int)>& symbol);
// 2/3-rule truncation: drops modes with |kx| > n/3 or |ky| > n/3.
Field dealias_two_thirds(const Field& f);
// Fraction of the non-mean spectral energy carried by modes with
// max(|kx|,|ky|) > n/3; a resolution diagnostic for exponential nonlinearities.
double spectral_tail_fraction(const Field& f);
// Trigonometric interpolation to a different power-of-two resolution.
Field resample(const Field& f, int n_new);
// Periodic bilinear interpolation at an arbitrary point.
double bilinear(const Field& f, double x, double y);

// Field serialization: 8-byte header (n as little-endian u32, reserved u32)
// followed by n*n little-endian doubles in storage order.
void write_binary(const Field& f, const std::string& path);
Field read_binary(const std::string& path);
void write_binary(const Field& f, std::ostream& os);
Field read_binary(std::istream& is);
// Plain-text export: one grid row (fixed iy) per line.
void write_csv(const Field& f, const std::string& path);
// Heatmap as a binary portable pixmap, diverging colour map on [min, max].
void write_ppm(const Field& f, const std::string& path);

}  // namespace toda
