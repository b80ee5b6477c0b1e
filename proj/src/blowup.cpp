#include "toda/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "toda/error.hpp"
#include "toda/functional.hpp"

namespace toda {
namespace {

constexpr double kPi = 3.14159265358979323846;

double torus_distance(double ax, double ay, double bx, double by) {
  double dx = ax - bx, dy = ay - by;
  dx -= std::round(dx);
  dy -= std::round(dy);
  return std::hypot(dx, dy);
}

std::vector<std::array<int, 2>> disc_offsets(int n, double delta) {
  std::vector<std::array<int, 2>> out;
  const int r = static_cast<int>(std::ceil(delta * n));
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i)
      if (std::hypot(i, j) <= delta * n) out.push_back({i, j});
  return out;
}

double ball_mass_at(const Field& e, int ix, int iy, const std::vector<std::array<int, 2>>& offs) {
  const int n = e.n();
  double s = 0.0;
  for (const auto& o : offs) s += e((ix + o[0] + n) % n, (iy + o[1] + n) % n);
  return s / (static_cast<double>(n) * n);
}

}  // namespace

Field ball_masses(const Field& f, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1/2)");
  const Field e = exp(f);
  const auto offs = disc_offsets(f.n(), delta);
  Field out(f.n());
  for (int iy = 0; iy < f.n(); ++iy)
    for (int ix = 0; ix < f.n(); ++ix) out(ix, iy) = ball_mass_at(e, ix, iy, offs);
  return out;
}

Indicators blowup_indicators(const Fields& u) {
  Indicators ind;
  for (const auto& f : u) {
    ind.sum_max += f.max();
    ind.sum_mean += integrate(f);
  }
  ind.grad_norm = grad_norm(u);
  return ind;
}

ConcentrationReport detect_concentration(const TodaProblem& p, double t, const Fields& u,
                                         const ConcentrationOptions& opts) {
  if (opts.deltas.empty()) throw Error(ErrorKind::InvalidArgument, "empty delta sweep");
  ConcentrationReport rep;
  rep.t = t;
  rep.deltas = opts.deltas;
  std::sort(rep.deltas.begin(), rep.deltas.end());
  const double d0 = rep.deltas.front();
  const int n = u.at(0).n();
  for (const auto& f : u) {
    const Field e = exp(f);
    rep.global_masses.push_back(integrate(e));
    const Field bm = ball_masses(f, d0);
    std::vector<std::pair<double, std::size_t>> hot;
    for (std::size_t s = 0; s < bm.size(); ++s)
      if (bm[s] > opts.eps0) hot.emplace_back(bm[s], s);
    std::sort(hot.begin(), hot.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<Candidate> found;
    for (const auto& [mass, s] : hot) {
      const int ix = static_cast<int>(s % n), iy = static_cast<int>(s / n);
      const double x = static_cast<double>(ix) / n, y = static_cast<double>(iy) / n;
      bool merged = false;
      for (const auto& c : found)
        if (torus_distance(x, y, c.x, c.y) <= 2.0 * d0) merged = true;
      if (merged) continue;
      Candidate c{x, y, ix, iy, {}};
      for (double d : rep.deltas) c.masses.push_back(ball_mass_at(e, ix, iy, disc_offsets(n, d)));
      found.push_back(std::move(c));
    }
    rep.candidates.push_back(std::move(found));
  }
  rep.indicators = blowup_indicators(u);
  for (const auto& cap : u_cap(u, p.coupling)) rep.u_cap_norms.push_back(grad_norm(cap));
  return rep;
}

std::vector<ConcentrationReport> detect_concentration(const TodaProblem& p,
                                                      const Trajectory& traj,
                                                      const ConcentrationOptions& opts) {
  std::vector<ConcentrationReport> out;
  for (const auto& s : traj.snapshots) out.push_back(detect_concentration(p, s.t, s.u, opts));
  if (traj.snapshots.empty() || traj.snapshots.back().t != traj.final_state.t)
    out.push_back(detect_concentration(p, traj.final_state.t, traj.final_state.u, opts));
  return out;
}

RadialProfile rescaled_profile(const Field& u, const ProfileOptions& opts) {
  const int n = u.n();
  std::size_t imax = 0;
  for (std::size_t s = 1; s < u.size(); ++s)
    if (u[s] > u[imax]) imax = s;
  const double m = u[imax];
  const double mean = integrate(u);
  if (m - mean < opts.min_separation)
    throw Error(ErrorKind::InsufficientSeparation,
                "max u - mean u = " + std::to_string(m - mean) + " is below " +
                    std::to_string(opts.min_separation));
  const int ix = static_cast<int>(imax % n), iy = static_cast<int>(imax / n);
  // Sub-cell peak location from a parabola through three samples per axis.
  auto vertex = [](double a, double b, double c) {
    const double den = a - 2.0 * b + c;
    return den < 0.0 ? std::clamp(0.5 * (a - c) / den, -0.5, 0.5) : 0.0;
  };
  const double ox = vertex(u((ix - 1 + n) % n, iy), u(ix, iy), u((ix + 1) % n, iy));
  const double oy = vertex(u(ix, (iy - 1 + n) % n), u(ix, iy), u(ix, (iy + 1) % n));
  RadialProfile prof;
  prof.x = (ix + ox) / n;
  prof.y = (iy + oy) / n;
  prof.m = m;
  prof.scale = std::exp(-0.5 * m);
  if (prof.scale * opts.r_prof >= 0.5)
    throw Error(ErrorKind::InsufficientSeparation, "rescaled window exceeds the torus");
  for (int r = 0; r < opts.n_radii; ++r) {
    const double rad = opts.r_prof * r / (opts.n_radii - 1);
    double s = 0.0;
    for (int a = 0; a < opts.n_theta; ++a) {
      const double th = 2.0 * kPi * a / opts.n_theta;
      s += bilinear(u, prof.x + prof.scale * rad * std::cos(th), prof.y + prof.scale * rad * std::sin(th));
    }
    prof.radii.push_back(rad);
    prof.values.push_back(s / opts.n_theta - m);
  }
  auto misfit = [&](double l) {
    double s = 0.0;
    int cnt = 0;
    for (std::size_t r = 0; r < prof.radii.size(); ++r) {
      if (prof.radii[r] > opts.r_fit) break;
      const double d = prof.values[r] + 2.0 * std::log1p(l * prof.radii[r] * prof.radii[r]);
      s += d * d;
      ++cnt;
    }
    return std::sqrt(s / cnt);
  };
  // Golden-section search in ln L.
  double lo = std::log(1e-4), hi = std::log(1e4);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = misfit(std::exp(c)), fd = misfit(std::exp(d));
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (fc < fd) {
      hi = d, d = c, fd = fc;
      c = hi - g * (hi - lo);
      fc = misfit(std::exp(c));
    } else {
      lo = c, c = d, fc = fd;
      d = lo + g * (hi - lo);
      fd = misfit(std::exp(d));
    }
  }
  prof.l_fit = std::exp(0.5 * (lo + hi));
  prof.rms = misfit(prof.l_fit);
  return prof;
}

nlohmann::json to_json(const ConcentrationReport& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["deltas"] = r.deltas;
  j["global_masses"] = r.global_masses;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& list : r.candidates) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : list)
      arr.push_back({{"x", c.x}, {"y", c.y}, {"ix", c.ix}, {"iy", c.iy}, {"local_masses", c.masses}});
    comps.push_back(arr);
  }
  j["candidates"] = comps;
  j["indicators"] = {{"sum_max_u", r.indicators.sum_max},
                     {"grad_norm", r.indicators.grad_norm},
                     {"sum_mean_u", r.indicators.sum_mean}};
  j["u_cap_norms"] = r.u_cap_norms;
  return j;
}

void write_jsonl(std::ostream& os, const std::vector<ConcentrationReport>& reports) {
  for (const auto& r : reports) os << to_json(r).dump() << "\n";
}

}  // namespace toda
