#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "toda/error.hpp"
#include "toda/grid.hpp"

using namespace toda;
using oracle::kPi;

namespace {
Field random_smooth(int n, unsigned seed, int modes = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> c(4 * (modes + 1) * (modes + 1));
  for (auto& v : c) v = g(rng);
  return sample(n, [&](double x, double y) {
    double s = 0.0;
    std::size_t q = 0;
    for (int a = 0; a <= modes; ++a)
      for (int b = 0; b <= modes; ++b, q += 4) {
        const double w = 1.0 / (1.0 + a * a + b * b);
        s += w * (c[q] * std::cos(2 * kPi * (a * x + b * y)) + c[q + 1] * std::sin(2 * kPi * (a * x + b * y)) +
                  c[q + 2] * std::cos(2 * kPi * (a * x - b * y)) + c[q + 3] * std::sin(2 * kPi * (a * x - b * y)));
      }
    return s;
  });
}
}  // namespace

TEST_SUITE("grid") {
TEST_CASE("resolution rules") {
  CHECK(is_valid_resolution(16));
  CHECK(is_valid_resolution(256));
  CHECK_FALSE(is_valid_resolution(8));
  CHECK_FALSE(is_valid_resolution(48));
  CHECK_THROWS_AS(Field(12), Error);
}

TEST_CASE("laplacian of eigenfunctions") {
  const int n = 64;
  const Field c = sample(n, [](double x, double) { return std::cos(2 * kPi * x); });
  CHECK((laplacian(c) + 4 * kPi * kPi * c).max_abs() < 1e-10);
  CHECK(laplacian(Field(n, 3.7)).max_abs() < 1e-13);
  const Field s = sample(n, [](double x, double y) { return std::sin(2 * kPi * x) * std::sin(4 * kPi * y); });
  CHECK((laplacian(s) + 20 * kPi * kPi * s).max_abs() < 1e-9);
  CHECK(std::abs(integrate(laplacian(random_smooth(n, 3)))) < 1e-13);
}

TEST_CASE("integration") {
  CHECK(integrate(Field(32, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(integrate(sample(64, [](double x, double) { return std::cos(2 * kPi * x); }))) < 1e-14);
  const double i0 = oracle::bessel_i0_one();
  const Field e = sample(64, [](double x, double) { return std::exp(std::sin(2 * kPi * x)); });
  CHECK(std::abs(integrate(e) - i0) < 1e-12);
  CHECK(i0 == doctest::Approx(1.2660658777520082).epsilon(1e-12));
}

TEST_CASE("inverse laplacian") {
  const int n = 64;
  const Field c = sample(n, [](double x, double) { return std::cos(2 * kPi * x); });
  CHECK((inverse_laplacian_zero_mean(-4 * kPi * kPi * c) - c).max_abs() < 1e-12);
  CHECK(inverse_laplacian_zero_mean(Field(n, 0.0)).max_abs() == 0.0);
  Field g0 = random_smooth(n, 5);
  g0 += -integrate(g0);
  CHECK((inverse_laplacian_zero_mean(laplacian(g0)) - g0).max_abs() < 1e-10);
  CHECK_THROWS_AS(inverse_laplacian_zero_mean(Field(n, 1.0)), Error);
}

TEST_CASE("dirichlet pairing") {
  const int n = 64;
  const Field cx = sample(n, [](double x, double) { return std::cos(2 * kPi * x); });
  const Field cy = sample(n, [](double, double y) { return std::cos(2 * kPi * y); });
  CHECK(grad_dot(cx, cx) == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
  CHECK(std::abs(grad_dot(Field(n, 2.0), cx)) < 1e-12);
  CHECK(std::abs(grad_dot(cx, cy)) < 1e-12);
  CHECK_THROWS_AS(grad_dot(cx, Field(32, 0.0)), Error);
  for (unsigned s = 0; s < 5; ++s) {
    const Field f = random_smooth(n, 10 + s), g = random_smooth(n, 20 + s);
    CHECK(std::abs(grad_dot(f, g) - grad_dot(g, f)) < 1e-12);
    CHECK(std::abs(grad_dot(f, g) + integrate(f * laplacian(g))) < 1e-10);
  }
  const auto gr = gradient(cx);
  CHECK((gr[0] + 2 * kPi * sample(n, [](double x, double) { return std::sin(2 * kPi * x); })).max_abs() < 1e-11);
}

TEST_CASE("spectral accuracy under refinement") {
  auto f = [](double x, double y) { return std::exp(std::sin(2 * kPi * x) + 0.5 * std::cos(2 * kPi * y)); };
  auto exact = [](double x, double y) {
    const double s = std::sin(2 * kPi * x), c = std::cos(2 * kPi * y);
    const double e = std::exp(s + 0.5 * c);
    const double fxx = 4 * kPi * kPi * (std::cos(2 * kPi * x) * std::cos(2 * kPi * x) - s) * e;
    const double fyy = 4 * kPi * kPi * (0.25 * std::sin(2 * kPi * y) * std::sin(2 * kPi * y) - 0.5 * c) * e;
    return fxx + fyy;
  };
  const double e16 = (laplacian(sample(16, f)) - sample(16, exact)).max_abs();
  const double e32 = (laplacian(sample(32, f)) - sample(32, exact)).max_abs();
  CHECK(e32 * 10 < e16);
}

TEST_CASE("serialization round trips") {
  const Field f = random_smooth(32, 7);
  const auto path = (std::filesystem::temp_directory_path() / "toda_grid_test.bin").string();
  write_binary(f, path);
  const Field g = read_binary(path);
  CHECK(g.n() == 32);
  CHECK((f - g).max_abs() == 0.0);
  CHECK(std::filesystem::file_size(path) == 8 + 8 * 32 * 32);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_binary("/nonexistent/field.bin"), Error);
}

TEST_CASE("resample and dealias") {
  const Field f = random_smooth(32, 8, 3);
  const Field up = resample(f, 64);
  CHECK((resample(up, 32) - f).max_abs() < 1e-12);
  CHECK(spectral_tail_fraction(f) < 1e-20);
  CHECK((dealias_two_thirds(f) - f).max_abs() < 1e-12);
}
}
