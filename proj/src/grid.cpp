#include "toda/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "toda/error.hpp"

namespace toda {

static_assert(std::endian::native == std::endian::little,
              "field serialization assumes a little-endian host");

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Per-thread transform plans and scratch buffers for one resolution.
// Plans use FFTW_ESTIMATE so results are reproducible run to run.
class Workspace {
 public:
  explicit Workspace(int n) : n_(n), nc_(n / 2 + 1) {
    real_ = fftw_alloc_real(static_cast<std::size_t>(n) * n);
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(n) * nc_);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(n, n, spec_, real_, FFTW_ESTIMATE);
    lap_.resize(static_cast<std::size_t>(n) * nc_);
    for (int row = 0; row < n; ++row)
      for (int kx = 0; kx < nc_; ++kx) {
        const int k = ky(row);
        lap_[static_cast<std::size_t>(row) * nc_ + kx] =
            -kTwoPi * kTwoPi * static_cast<double>(kx * kx + k * k);
      }
  }
  ~Workspace() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  int n() const { return n_; }
  int nc() const { return nc_; }
  // Signed wave number for a row index of the transformed array.
  int ky(int row) const { return row <= n_ / 2 ? row : row - n_; }

  // Forward transform of f into spec(); spectrum is unnormalized.
  void forward(const Field& f) {
    std::memcpy(real_, f.data(), sizeof(double) * f.size());
    fftw_execute(fwd_);
  }
  // Inverse transform of spec() into a field, including the 1/n^2 factor.
  // The c2r transform destroys its input.
  Field backward() {
    fftw_execute(bwd_);
    const std::size_t m = static_cast<std::size_t>(n_) * n_;
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) real_[i] *= scale;
    return Field(n_, std::vector<double>(real_, real_ + m));
  }
  // Laplacian symbol -4 pi^2 |k|^2 in transformed-array order.
  const std::vector<double>& laplacian_symbol() const { return lap_; }
  std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }
  std::complex<double>& spec(int row, int kx) {
    return reinterpret_cast<std::complex<double>*>(spec_)[static_cast<std::size_t>(row) * nc_ + kx];
  }

 private:
  int n_, nc_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
  std::vector<double> lap_;
};

Workspace& workspace(int n) {
  thread_local std::map<int, std::unique_ptr<Workspace>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Workspace>(n);
  return *slot;
}

void require_same(const Field& a, const Field& b) {
  if (a.n() != b.n())
    throw Error(ErrorKind::InvalidArgument, "resolution mismatch: " + std::to_string(a.n()) +
                                                " vs " + std::to_string(b.n()));
}

}  // namespace

bool is_valid_resolution(int n) { return n >= 16 && (n & (n - 1)) == 0; }

Field::Field(int n, double value) : n_(n) {
  if (!is_valid_resolution(n))
    throw Error(ErrorKind::InvalidArgument,
                "grid resolution must be a power of two >= 16, got " + std::to_string(n));
  v_.assign(static_cast<std::size_t>(n) * n, value);
}

Field::Field(int n, std::vector<double> values) : n_(n), v_(std::move(values)) {
  if (!is_valid_resolution(n))
    throw Error(ErrorKind::InvalidArgument,
                "grid resolution must be a power of two >= 16, got " + std::to_string(n));
  if (v_.size() != static_cast<std::size_t>(n) * n)
    throw Error(ErrorKind::InvalidArgument, "field value count does not match n*n");
}

double Field::max() const { return *std::max_element(v_.begin(), v_.end()); }
double Field::min() const { return *std::min_element(v_.begin(), v_.end()); }
double Field::max_abs() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}
bool Field::all_finite() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

Field& Field::operator+=(const Field& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}
Field& Field::operator-=(const Field& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}
Field& Field::operator*=(const Field& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] *= o.v_[i];
  return *this;
}
Field& Field::operator+=(double c) {
  for (double& x : v_) x += c;
  return *this;
}
Field& Field::operator*=(double c) {
  for (double& x : v_) x *= c;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, const Field& b) { return a *= b; }
Field operator*(double c, Field a) { return a *= c; }
Field operator+(Field a, double c) { return a += c; }

Field sample(int n, const std::function<double(double, double)>& f) {
  Field out(n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      out(ix, iy) = f(static_cast<double>(ix) / n, static_cast<double>(iy) / n);
  return out;
}

Field map(const Field& f, const std::function<double(double)>& fn) {
  Field out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(f[i]);
  return out;
}

Field exp(const Field& f) {
  Field out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(f[i]);
  return out;
}

Field apply_multiplier(const Field& f, const std::function<double(int, int)>& symbol) {
  Workspace& ws = workspace(f.n());
  ws.forward(f);
  for (int row = 0; row < ws.n(); ++row) {
    const int ky = ws.ky(row);
    for (int kx = 0; kx < ws.nc(); ++kx) ws.spec(row, kx) *= symbol(kx, ky);
  }
  return ws.backward();
}

Field laplacian(const Field& f) {
  Workspace& ws = workspace(f.n());
  ws.forward(f);
  const auto& sym = ws.laplacian_symbol();
  std::complex<double>* c = ws.spectrum();
  for (std::size_t i = 0; i < sym.size(); ++i) c[i] *= sym[i];
  return ws.backward();
}

double pairwise_sum(const double* x, std::size_t count) {
  // Blocked pairwise summation: O(log n) error growth at plain-loop speed.
  if (count <= 256) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
      s0 += x[i];
      s1 += x[i + 1];
      s2 += x[i + 2];
      s3 += x[i + 3];
    }
    for (; i < count; ++i) s0 += x[i];
    return (s0 + s1) + (s2 + s3);
  }
  const std::size_t half = count / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, count - half);
}

double dot_mean(const Field& a, const Field& b) {
  require_same(a, b);
  thread_local std::vector<double> scratch;
  scratch.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) scratch[i] = a[i] * b[i];
  return pairwise_sum(scratch.data(), scratch.size()) / static_cast<double>(a.size());
}

double integrate(const Field& f) {
  return pairwise_sum(f.data(), f.size()) / static_cast<double>(f.size());
}

Field inverse_laplacian_zero_mean(const Field& f) {
  const double mean = integrate(f);
  if (std::abs(mean) > 1e-10)
    throw Error(ErrorKind::InvalidArgument,
                "inverse Laplacian needs a zero-mean source, mean = " + std::to_string(mean));
  return apply_multiplier(f, [](int kx, int ky) {
    const int k2 = kx * kx + ky * ky;
    return k2 == 0 ? 0.0 : -1.0 / (kTwoPi * kTwoPi * k2);
  });
}

std::array<Field, 2> gradient(const Field& f) {
  Workspace& ws = workspace(f.n());
  const int n = f.n();
  std::array<Field, 2> out;
  for (int dir = 0; dir < 2; ++dir) {
    ws.forward(f);
    for (int row = 0; row < n; ++row) {
      const int ky = ws.ky(row);
      for (int kx = 0; kx < ws.nc(); ++kx) {
        int k = dir == 0 ? kx : ky;
        // The Nyquist mode has no odd counterpart; its derivative is dropped.
        if (std::abs(k) == n / 2) k = 0;
        ws.spec(row, kx) *= std::complex<double>(0.0, kTwoPi * k);
      }
    }
    out[dir] = ws.backward();
  }
  return out;
}

double grad_dot(const Field& f, const Field& g) {
  require_same(f, g);
  return -dot_mean(f, laplacian(g));
}

Field dealias_two_thirds(const Field& f) {
  const int cut = f.n() / 3;
  return apply_multiplier(f, [cut](int kx, int ky) {
    return (std::abs(kx) > cut || std::abs(ky) > cut) ? 0.0 : 1.0;
  });
}

double spectral_tail_fraction(const Field& f) {
  Workspace& ws = workspace(f.n());
  ws.forward(f);
  const int cut = f.n() / 3;
  double total = 0.0, tail = 0.0;
  for (int row = 0; row < ws.n(); ++row) {
    const int ky = ws.ky(row);
    for (int kx = 0; kx < ws.nc(); ++kx) {
      if (kx == 0 && ky == 0) continue;
      // Columns 1..n/2-1 stand for two conjugate modes each.
      const double w = (kx == 0 || kx == ws.n() / 2) ? 1.0 : 2.0;
      const double e = w * std::norm(ws.spec(row, kx));
      total += e;
      if (std::max(kx, std::abs(ky)) > cut) tail += e;
    }
  }
  return total > 0.0 ? tail / total : 0.0;
}

Field resample(const Field& f, int n_new) {
  if (n_new == f.n()) return f;
  if (!is_valid_resolution(n_new))
    throw Error(ErrorKind::InvalidArgument, "resample target must be a power of two >= 16");
  const int n = f.n();
  Workspace& src = workspace(n);
  src.forward(f);
  const int m = n_new;
  const int keep = std::min(n, m) / 2;  // keep |k| < keep, split Nyquist symmetrically
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(m) * (m / 2 + 1));
  const double scale = static_cast<double>(m) * m / (static_cast<double>(n) * n);
  for (int row = 0; row < n; ++row) {
    const int ky = src.ky(row);
    if (std::abs(ky) > keep) continue;
    for (int kx = 0; kx <= keep && kx < src.nc(); ++kx) {
      std::complex<double> c = src.spec(row, kx) * scale;
      // Modes sitting at the smaller grid's Nyquist frequency are halved so
      // the interpolant stays real and symmetric.
      if (std::abs(ky) == keep) c *= 0.5;
      if (kx == keep) c *= (m > n ? 0.5 : 1.0);
      const int dst_row = ky >= 0 ? ky : ky + m;
      buf[static_cast<std::size_t>(dst_row) * (m / 2 + 1) + kx] += c;
      if (std::abs(ky) == keep && m > n) {
        const int mirror = ky >= 0 ? m - ky : -ky;
        buf[static_cast<std::size_t>(mirror) * (m / 2 + 1) + kx] += c;
      }
    }
  }
  Workspace& dst = workspace(m);
  for (int row = 0; row < m; ++row)
    for (int kx = 0; kx < dst.nc(); ++kx)
      dst.spec(row, kx) = buf[static_cast<std::size_t>(row) * (m / 2 + 1) + kx];
  return dst.backward();
}

double bilinear(const Field& f, double x, double y) {
  const int n = f.n();
  const double gx = (x - std::floor(x)) * n, gy = (y - std::floor(y)) * n;
  const int i0 = static_cast<int>(std::floor(gx)) % n, j0 = static_cast<int>(std::floor(gy)) % n;
  const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
  const double tx = gx - std::floor(gx), ty = gy - std::floor(gy);
  return (1 - tx) * (1 - ty) * f(i0, j0) + tx * (1 - ty) * f(i1, j0) +
         (1 - tx) * ty * f(i0, j1) + tx * ty * f(i1, j1);
}

void write_binary(const Field& f, std::ostream& os) {
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(f.n()), 0u};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  os.write(reinterpret_cast<const char*>(f.data()),
           static_cast<std::streamsize>(sizeof(double) * f.size()));
  if (!os) throw Error(ErrorKind::InvalidArgument, "failed writing field data");
}

Field read_binary(std::istream& is) {
  std::uint32_t header[2] = {0u, 0u};
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!is) throw Error(ErrorKind::InvalidConfig, "truncated field header");
  const int n = static_cast<int>(header[0]);
  if (!is_valid_resolution(n))
    throw Error(ErrorKind::InvalidConfig, "field header has invalid resolution " + std::to_string(n));
  std::vector<double> v(static_cast<std::size_t>(n) * n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  if (!is) throw Error(ErrorKind::InvalidConfig, "truncated field data");
  return Field(n, std::move(v));
}

void write_binary(const Field& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  write_binary(f, os);
}

Field read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingArtifact, "cannot open field file " + path);
  return read_binary(is);
}

void write_csv(const Field& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  os.precision(17);
  for (int iy = 0; iy < f.n(); ++iy) {
    for (int ix = 0; ix < f.n(); ++ix) os << (ix ? "," : "") << f(ix, iy);
    os << '\n';
  }
}

void write_ppm(const Field& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  const int n = f.n();
  os << "P6\n" << n << ' ' << n << "\n255\n";
  const double lo = f.min(), hi = f.max();
  const double span = hi > lo ? hi - lo : 1.0;
  // Image rows run top to bottom, so y is flipped to keep y pointing up.
  for (int iy = n - 1; iy >= 0; --iy)
    for (int ix = 0; ix < n; ++ix) {
      const double t = (f(ix, iy) - lo) / span;  // 0 blue, 0.5 white, 1 red
      const double r = t < 0.5 ? 2 * t : 1.0;
      const double b = t < 0.5 ? 1.0 : 2 * (1 - t);
      const double g = 1.0 - std::abs(2 * t - 1);
      const unsigned char px[3] = {static_cast<unsigned char>(255 * r),
                                   static_cast<unsigned char>(255 * g),
                                   static_cast<unsigned char>(255 * b)};
      os.write(reinterpret_cast<const char*>(px), 3);
    }
}

}  // namespace toda
