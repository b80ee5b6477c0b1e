#pragma once
// Shared fixtures for the unit tests.

#include <cmath>
#include <random>

#include "toda/grid.hpp"
#include "toda/problem.hpp"

namespace testing_util {

constexpr double kPi = 3.14159265358979323846;

// Smooth random periodic field with a handful of decaying Fourier modes.
inline toda::Field random_field(int n, unsigned seed, double amplitude = 1.0, int modes = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  struct Mode {
    int a, b;
    double c, s;
  };
  std::vector<Mode> ms;
  for (int a = -modes; a <= modes; ++a)
    for (int b = 0; b <= modes; ++b)
      if (a != 0 || b != 0) ms.push_back({a, b, g(rng), g(rng)});
  return toda::sample(n, [&](double x, double y) {
    double s = 0.0;
    for (const auto& m : ms) {
      const double ph = 2 * kPi * (m.a * x + m.b * y);
      s += (m.c * std::cos(ph) + m.s * std::sin(ph)) / (1.0 + m.a * m.a + m.b * m.b);
    }
    return amplitude * s;
  });
}

inline toda::Fields random_fields(int N, int n, unsigned seed, double amplitude = 1.0) {
  toda::Fields u;
  for (int i = 0; i < N; ++i) u.push_back(random_field(n, seed + 101 * i, amplitude));
  return u;
}

inline toda::Expression constant(double c) {
  return [c](double, double) { return c; };
}

inline toda::Expression cos_x(double a, double b) {
  return [a, b](double x, double) { return a + b * std::cos(2 * kPi * x); };
}

// Subcritical reference problem: N=2, rho = (2 pi, 2 pi), h_1 = 1 + 0.3 cos(2 pi x), h_2 = 1.
inline toda::TodaProblem subcritical(int n) {
  return toda::make_problem(toda::cartan(2), {2 * kPi, 2 * kPi}, n, {cos_x(1.0, 0.3), constant(1.0)});
}

inline double max_diff(const toda::Fields& a, const toda::Fields& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).max_abs());
  return m;
}

}  // namespace testing_util
