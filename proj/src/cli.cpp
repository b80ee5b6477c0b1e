#include "toda/cli.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "toda/blowup.hpp"
#include "toda/classify.hpp"
#include "toda/elliptic.hpp"
#include "toda/error.hpp"
#include "toda/flow.hpp"
#include "toda/functional.hpp"
#include "toda/green.hpp"
#include "toda/testfn.hpp"

namespace toda {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Manifest with the directory its relative paths resolve against.
struct Context {
  json manifest;
  fs::path base;
  unsigned long seed = 0;
};

json read_json_file(const fs::path& path, ErrorKind missing_kind) {
  std::ifstream is(path);
  if (!is) throw Error(missing_kind, "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
}

fs::path resolve(const Context& ctx, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : ctx.base / path;
}

// Writes into "<out>.partial" and renames onto <out> only on success.
class OutputDir {
 public:
  explicit OutputDir(const std::string& out) : final_(out) {
    if (out.empty()) throw Error(ErrorKind::InvalidConfig, "output directory (--out) is required");
    tmp_ = fs::path(out + ".partial");
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~OutputDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(tmp_, ec);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  fs::path path(const std::string& name) const { return tmp_ / name; }
  fs::path final_path(const std::string& name) const { return final_ / name; }
  void commit() {
    fs::remove_all(final_);
    if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
    fs::rename(tmp_, final_);
    committed_ = true;
  }

 private:
  fs::path final_, tmp_;
  bool committed_ = false;
};

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
  os << j.dump(2) << "\n";
}

TodaProblem problem_of(const Context& ctx) {
  if (!ctx.manifest.contains("problem"))
    throw Error(ErrorKind::InvalidConfig, "manifest needs a \"problem\" entry");
  const json& pr = ctx.manifest.at("problem");
  if (pr.is_string()) {
    const fs::path path = resolve(ctx, pr.get<std::string>());
    return problem_from_json(read_json_file(path, ErrorKind::InvalidConfig),
                             path.parent_path().string());
  }
  return problem_from_json(pr, ctx.base.string());
}

json options_of(const Context& ctx) {
  return ctx.manifest.contains("options") ? ctx.manifest.at("options") : json::object();
}

// Smooth random field with decaying Fourier coefficients, from the run seed.
Field random_field(int n, double amplitude, int modes, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::array<double, 4>> coef;
  for (int ky = 0; ky <= modes; ++ky)
    for (int kx = 0; kx <= modes; ++kx) {
      const double decay = 1.0 / (1.0 + kx * kx + ky * ky);
      coef.push_back({g(rng) * decay, g(rng) * decay, g(rng) * decay, g(rng) * decay});
    }
  Field f(n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double x = 2.0 * kPi * ix / n, y = 2.0 * kPi * iy / n;
      double v = 0.0;
      std::size_t c = 0;
      for (int ky = 0; ky <= modes; ++ky)
        for (int kx = 0; kx <= modes; ++kx, ++c) {
          if (kx == 0 && ky == 0) continue;
          v += coef[c][0] * std::cos(kx * x + ky * y) + coef[c][1] * std::sin(kx * x + ky * y) +
               coef[c][2] * std::cos(kx * x - ky * y) + coef[c][3] * std::sin(kx * x - ky * y);
        }
      f(ix, iy) = amplitude * v;
    }
  return f;
}

Fields initial_data(const Context& ctx, const TodaProblem& p) {
  const int nn = p.size();
  if (!ctx.manifest.contains("u0")) return Fields(nn, Field(p.n, 0.0));
  const json& u0 = ctx.manifest.at("u0");
  if (u0.contains("checkpoint")) {
    const FlowState s = read_checkpoint(resolve(ctx, u0.at("checkpoint").get<std::string>()).string());
    if (static_cast<int>(s.u.size()) != nn)
      throw Error(ErrorKind::InvalidConfig, "checkpoint component count differs from the problem");
    Fields u;
    for (const auto& f : s.u) u.push_back(f.n() == p.n ? f : resample(f, p.n));
    return u;
  }
  if (u0.contains("expr")) {
    const auto& list = u0.at("expr");
    if (!list.is_array() || static_cast<int>(list.size()) != nn)
      throw Error(ErrorKind::InvalidConfig, "u0.expr needs one expression per component");
    Fields u;
    for (const auto& e : list) {
      if (e.is_number()) {
        u.emplace_back(p.n, e.get<double>());
      } else {
        const Expression f = parse_expression(e.get<std::string>());
        u.push_back(sample(p.n, f));
      }
    }
    return u;
  }
  if (u0.contains("random")) {
    const json& r = u0.at("random");
    std::mt19937_64 rng(ctx.seed);
    Fields u;
    for (int i = 0; i < nn; ++i)
      u.push_back(random_field(p.n, r.value("amplitude", 0.1), r.value("modes", 3), rng));
    return u;
  }
  throw Error(ErrorKind::InvalidConfig, "u0 must contain \"expr\", \"random\" or \"checkpoint\"");
}

RunOptions run_options(const json& o, const CliOptions& cli) {
  RunOptions r;
  r.t_max = o.value("t_max", r.t_max);
  r.conv_tol = o.value("conv_tol", r.conv_tol);
  r.sentinel = o.value("sentinel", r.sentinel);
  r.floor = o.value("floor", r.floor);
  r.step.floor = r.floor;
  r.step.c_safe = o.value("c_safe", r.step.c_safe);
  r.step.tol_m = o.value("tol_m", r.step.tol_m);
  r.step.dt_max = o.value("dt_max", r.step.dt_max);
  r.snapshot_every = o.value("snapshot_every", r.snapshot_every);
  r.max_steps = o.value("max_steps", r.max_steps);
  r.checkpoint_every = o.value("checkpoint_every", r.checkpoint_every);
  if (cli.checkpoint_every > 0.0) r.checkpoint_every = cli.checkpoint_every;
  if (!(r.t_max > 0.0)) throw Error(ErrorKind::InvalidConfig, "t_max must be positive");
  return r;
}

GridPoint grid_point(const json& xy, int n) {
  if (!xy.is_array() || xy.size() != 2) throw Error(ErrorKind::InvalidConfig, "point must be [x, y]");
  GridPoint g;
  for (int d = 0; d < 2; ++d) {
    double v = xy[d].get<double>();
    v -= std::floor(v);
    const double s = v * n;
    if (std::abs(s - std::round(s)) > 1e-9)
      throw Error(ErrorKind::InvalidConfig, "point must lie on the grid (multiples of 1/n)");
    g[d] = static_cast<int>(std::lround(s)) % n;
  }
  return g;
}

void write_fields(const OutputDir& dir, const std::string& prefix, const Fields& u, bool ppm) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::string stem = prefix + "u_" + std::to_string(i + 1);
    write_binary(u[i], dir.path(stem + ".bin").string());
    if (ppm) write_ppm(u[i], dir.path(stem + ".ppm").string());
  }
}

// Core of a flow run shared by `flow` and `scan`; writes into `dir` and
// returns the event summary.
json flow_into(const TodaProblem& p, const Fields& u0, const RunOptions& ro, const fs::path& dir,
               const FlowState* start, bool ppm, bool concentration) {
  fs::create_directories(dir);
  CheckpointSink sink;
  if (ro.checkpoint_every > 0.0) {
    fs::create_directories(dir / "checkpoints");
    sink = [dir](const FlowState& s) {
      std::ostringstream name;
      name << "ckpt_" << std::setw(9) << std::setfill('0') << s.step << ".bin";
      write_checkpoint(s, (dir / "checkpoints" / name.str()).string());
    };
  }
  auto [traj, ev] = run(p, u0, ro, sink, start);
  const FlowState& fin = traj.final_state;
  {
    std::ofstream os(dir / "diagnostics.csv");
    write_diagnostics_header(os, p.size());
    for (const auto& d : fin.history) write_diagnostics_row(os, d);
  }
  write_checkpoint(fin, (dir / "final.ckpt").string());
  for (std::size_t i = 0; i < fin.u.size(); ++i) {
    const std::string stem = "u_" + std::to_string(i + 1);
    write_binary(fin.u[i], (dir / (stem + ".bin")).string());
    if (ppm) write_ppm(fin.u[i], (dir / (stem + ".ppm")).string());
  }
  if (concentration) {
    std::ofstream os(dir / "concentration.jsonl");
    write_jsonl(os, detect_concentration(p, traj));
  }
  const Diagnostics& last = fin.history.back();
  double j_max = -INFINITY;
  for (const auto& d : fin.history) j_max = std::max(j_max, d.j);
  json s;
  s["event"] = to_string(ev.kind);
  s["t_event"] = ev.t_event;
  s["final_J"] = last.j;
  s["final_residual"] = last.residual;
  s["initial_J"] = fin.history.front().j;
  s["max_J"] = j_max;
  s["steps"] = fin.step;
  s["rejected_steps"] = traj.rejected_steps;
  s["final_masses"] = last.masses;
  s["final_mean_u"] = last.mean_u;
  s["detail"] = ev.detail;
  write_json(dir / "summary.json", s);
  return s;
}

}  // namespace

json cmd_flow(const json& manifest, const CliOptions& opts) {
  Context ctx{manifest, fs::path(opts.config).parent_path(), 0};
  ctx.seed = opts.seed.value_or(manifest.value("seed", 0ul));
  const TodaProblem p = problem_of(ctx);
  const json o = options_of(ctx);
  const RunOptions ro = run_options(o, opts);
  std::optional<FlowState> start;
  Fields u0;
  if (!opts.resume.empty()) {
    start = read_checkpoint(opts.resume);
    u0 = start->u;
  } else {
    u0 = initial_data(ctx, p);
    initial_state(p, u0, ro.step);  // validates initial regularity up front
  }
  OutputDir dir(opts.out);
  json m = manifest;
  m["seed"] = ctx.seed;
  write_json(dir.path("manifest.json"), m);
  const json s = flow_into(p, u0, ro, dir.path(""), start ? &*start : nullptr,
                           o.value("ppm", true), ro.snapshot_every > 0.0);
  dir.commit();
  return s;
}

json cmd_solve(const json& manifest, const CliOptions& opts) {
  Context ctx{manifest, fs::path(opts.config).parent_path(), 0};
  ctx.seed = opts.seed.value_or(manifest.value("seed", 0ul));
  const TodaProblem p = problem_of(ctx);
  const json o = options_of(ctx);
  NewtonOptions no;
  no.tol = o.value("tol", no.tol);
  no.max_iter = o.value("max_iter", no.max_iter);
  if (o.value("gauge", std::string("means")) == "masses") {
    if (!o.contains("masses")) throw Error(ErrorKind::InvalidConfig, "gauge \"masses\" needs \"masses\"");
    no.gauge = Gauge::fix_masses(o.at("masses").get<std::vector<double>>());
  }
  const NewtonResult r = solve(p, initial_data(ctx, p), no);
  OutputDir dir(opts.out);
  write_fields(dir, "", r.u, o.value("ppm", true));
  const EnergyReport e = evaluate_j(p, r.u);
  json s;
  s["iterations"] = r.iterations;
  s["residual"] = r.residual;
  s["J"] = e.j_value;
  s["masses"] = e.masses;
  s["history"] = r.history;
  write_json(dir.path("solution.json"), s);
  dir.commit();
  return s;
}

json cmd_green(const json& manifest, const CliOptions& opts) {
  Context ctx{manifest, fs::path(opts.config).parent_path(), 0};
  const json o = options_of(ctx);
  json s;
  std::optional<TodaProblem> p;
  if (manifest.contains("problem")) p = problem_of(ctx);
  const int n = p ? p->n : manifest.value("n", 64);
  const GridPoint gp = grid_point(manifest.value("p", json::array({0.0, 0.0})), n);
  const GreenData g = torus_green(gp, n);
  s["n"] = n;
  s["p_index"] = {gp[0], gp[1]};
  s["B"] = g.b;
  s["B_fit"] = g.b_fit;
  s["B_closed"] = g.b_closed;
  s["alpha"] = {g.alpha[0], g.alpha[1]};
  OutputDir dir(opts.out);
  write_binary(g.gamma, dir.path("gamma.bin").string());
  if (manifest.contains("singular")) {
    if (!p) throw Error(ErrorKind::InvalidConfig, "singular solve needs a \"problem\"");
    const json& sg = manifest.at("singular");
    const int k = sg.at("k").get<int>() - 1;
    const GridPoint p0 = grid_point(sg.at("p0"), n);
    NewtonOptions no;
    no.tol = o.value("tol", no.tol);
    const SingularSolution sol = solve_singular_system(*p, k, p0, no);
    save_singular(sol, dir.path("singular").string());
    const Vec2 gf = grad_f(*p, sol);
    s["singular"] = {{"k", k + 1},
                     {"p0_index", {p0[0], p0[1]}},
                     {"R_k", sol.r_k},
                     {"F", f_value(*p, sol)},
                     {"grad_F", {gf[0], gf[1]}},
                     {"residuals", sol.residuals}};
  }
  write_json(dir.path("green.json"), s);
  dir.commit();
  return s;
}

json cmd_testfn(const json& manifest, const CliOptions& opts) {
  Context ctx{manifest, fs::path(opts.config).parent_path(), 0};
  if (!manifest.contains("singular"))
    throw Error(ErrorKind::MissingArtifact, "singular solution required (\"singular\": cache directory)");
  const fs::path cache = resolve(ctx, manifest.at("singular").get<std::string>());
  if (!fs::exists(cache / "singular.json"))
    throw Error(ErrorKind::MissingArtifact, "singular solution required: no cache at " + cache.string());
  const SingularSolution sol = load_singular(cache.string());
  TodaProblem p = problem_of(ctx);
  if (p.n > sol.n) throw Error(ErrorKind::InvalidConfig, "singular cache is coarser than the problem grid");
  p = refine(p, sol.n);
  const json o = options_of(ctx);
  TestFamilyConfig cfg;
  if (o.contains("epsilons")) cfg.epsilons = o.at("epsilons").get<std::vector<double>>();
  const std::string rule = o.value("rule", std::string("sqrt"));
  if (rule == "sqrt") cfg.rule = RadiusRule::Sqrt;
  else if (rule == "inverse_log") cfg.rule = RadiusRule::InverseLog;
  else throw Error(ErrorKind::InvalidConfig, "rule must be \"sqrt\" or \"inverse_log\"");
  cfg.rule_constant = o.value("rule_constant", cfg.rule_constant);
  const std::string cutoff = o.value("cutoff", std::string("quintic"));
  if (cutoff == "quintic") cfg.cutoff = Cutoff::Quintic;
  else if (cutoff == "smooth") cfg.cutoff = Cutoff::Smooth;
  else throw Error(ErrorKind::InvalidConfig, "cutoff must be \"quintic\" or \"smooth\"");
  cfg.n_min = o.value("n_min", cfg.n_min);

  const FitReport rep = expansion_check(p, sol, cfg);
  OutputDir dir(opts.out);
  json s = to_json(rep);
  if (manifest.contains("export")) {
    // Initial datum u^(eps*) for a flow run on the export grid.
    const json& ex = manifest.at("export");
    const double eps = ex.at("eps").get<double>();
    const int n = ex.value("n", sol.n);
    if (n < sol.n) throw Error(ErrorKind::InvalidConfig, "export grid must not be coarser than the cache");
    const SingularSolution fine = n == sol.n ? sol : refine(sol, n);
    const TodaProblem pf = refine(p, n);
    const TestFunction tf = build_test_function(pf, fine, eps, cfg);
    FlowState st;
    st.u = tf.u;
    write_checkpoint(st, dir.path("export.ckpt").string());
    s["export"] = {{"eps", eps}, {"n", n}, {"J_u0", evaluate_j(pf, tf.u).j_value},
                   {"F", rep.f_value}, {"checkpoint", "export.ckpt"}};
  }
  write_json(dir.path("fit_report.json"), s);
  dir.commit();
  return s;
}

json cmd_classify(const json& manifest, const CliOptions& opts) {
  const unsigned long seed = opts.seed.value_or(manifest.value("seed", 0ul));
  if (!manifest.contains("map")) throw Error(ErrorKind::InvalidConfig, "manifest needs a \"map\"");
  const json& mj = manifest.at("map");
  const PolynomialMap f = mj.contains("standard")  ? PolynomialMap::standard(mj.at("standard").get<int>())
                          : mj.contains("random") ? PolynomialMap::random(mj.at("random").get<int>(),
                                                                          static_cast<unsigned>(seed))
                                                  : PolynomialMap::from_json(mj);
  const int nn = f.n_sys();
  std::vector<double> rho(nn, 1.0);
  if (manifest.contains("rho")) rho = manifest.at("rho").get<std::vector<double>>();
  if (static_cast<int>(rho.size()) != nn) throw Error(ErrorKind::InvalidConfig, "rho needs N entries");
  const int points = manifest.value("points", 100);
  const double radius = manifest.value("radius", 2.0);
  const double r_max = manifest.value("r_max", 1e4);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-radius, radius);
  std::vector<double> max_res(nn, 0.0);
  for (int t = 0; t < points; ++t) {
    const auto r = classification_residual(f, rho, Complex(uni(rng), uni(rng)));
    for (int i = 0; i < nn; ++i) max_res[i] = std::max(max_res[i], std::abs(r[i]));
  }
  std::vector<double> masses, gammas, errs;
  for (int i = 0; i < nn; ++i) {
    const MassResult m = quantized_mass(f, rho, i, r_max);
    masses.push_back(m.value);
    gammas.push_back(m.decay_exponent);
    errs.push_back(m.error_estimate);
  }
  const CouplingMatrix a = cartan(nn);
  std::vector<double> sums(nn, 0.0);
  for (int i = 0; i < nn; ++i)
    for (int j = 0; j < nn; ++j) sums[i] += a.a(i, j) * masses[j];
  json s;
  s["N"] = nn;
  s["seed"] = seed;
  s["determinant"] = {f.determinant().real(), f.determinant().imag()};
  s["max_residual"] = max_res;
  s["masses"] = masses;
  s["mass_error_estimates"] = errs;
  s["decay_exponents"] = gammas;
  s["cartan_sums"] = sums;
  OutputDir dir(opts.out);
  write_json(dir.path("classify.json"), s);
  dir.commit();
  return s;
}

json cmd_scan(const json& manifest, const CliOptions& opts) {
  Context ctx{manifest, fs::path(opts.config).parent_path(), 0};
  ctx.seed = opts.seed.value_or(manifest.value("seed", 0ul));
  if (!manifest.contains("axes") || !manifest.at("axes").is_array() || manifest.at("axes").empty())
    throw Error(ErrorKind::InvalidConfig, "scan needs at least one axis");
  json base = manifest.at("problem");
  if (base.is_string())
    base = read_json_file(resolve(ctx, base.get<std::string>()), ErrorKind::InvalidConfig);
  struct Axis {
    std::string param;
    int index;
    std::vector<json> values;
  };
  std::vector<Axis> axes;
  for (const auto& a : manifest.at("axes")) {
    Axis ax{a.at("param").get<std::string>(), a.value("index", 1) - 1, {}};
    if (ax.param != "rho" && ax.param != "h_offset")
      throw Error(ErrorKind::InvalidConfig, "scan axis param must be \"rho\" or \"h_offset\"");
    for (const auto& v : a.at("values")) ax.values.push_back(v);
    if (ax.values.empty()) throw Error(ErrorKind::InvalidConfig, "scan axis has no values");
    axes.push_back(std::move(ax));
  }
  // Cartesian product, first axis slowest.
  std::vector<std::vector<std::size_t>> grid{{}};
  for (const auto& ax : axes) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& g : grid)
      for (std::size_t v = 0; v < ax.values.size(); ++v) {
        auto h = g;
        h.push_back(v);
        next.push_back(std::move(h));
      }
    grid = std::move(next);
  }
  auto value_of = [](const json& v) {
    return v.is_number() ? v.get<double>() : parse_constant(v.get<std::string>());
  };
  // Build and validate every sub-problem before running anything.
  std::vector<TodaProblem> problems;
  for (const auto& g : grid) {
    json doc = base;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Axis& ax = axes[a];
      const json& v = ax.values[g[a]];
      if (ax.param == "rho") {
        doc.at("rho").at(ax.index) = v;
      } else {
        json& h = doc.at("h").at(ax.index);
        std::ostringstream e;
        e << std::setprecision(17);
        if (h.is_number()) e << h.get<double>();
        else e << "(" << h.get<std::string>() << ")";
        e << "+(" << value_of(v) << ")";
        h = e.str();
      }
    }
    problems.push_back(problem_from_json(doc, ctx.base.string()));
  }
  const json o = options_of(ctx);
  const RunOptions ro = run_options(o, opts);
  OutputDir dir(opts.out);
  std::vector<json> results(grid.size());
  std::vector<std::string> failures(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r; (r = next++) < grid.size();) {
      std::ostringstream name;
      name << "run_" << std::setw(4) << std::setfill('0') << r + 1;
      try {
        Context sub = ctx;
        const Fields u0 = initial_data(sub, problems[r]);
        results[r] = flow_into(problems[r], u0, ro, dir.path("runs") / name.str(), nullptr, false, false);
      } catch (const Error& e) {
        failures[r] = std::string(to_string(e.kind())) + ": " + e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream csv(dir.path("summary.csv"));
  csv << std::setprecision(17) << "run";
  for (const auto& ax : axes) csv << ',' << ax.param << '_' << ax.index + 1;
  csv << ",event,t_event,final_J,final_residual,steps\n";
  json s = json::array();
  for (std::size_t r = 0; r < grid.size(); ++r) {
    csv << r + 1;
    json row;
    row["run"] = r + 1;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const double v = value_of(axes[a].values[grid[r][a]]);
      csv << ',' << v;
      row[axes[a].param + "_" + std::to_string(axes[a].index + 1)] = v;
    }
    if (failures[r].empty()) {
      const json& res = results[r];
      csv << ',' << res.at("event").get<std::string>() << ',' << res.at("t_event").get<double>() << ','
          << res.at("final_J").get<double>() << ',' << res.at("final_residual").get<double>() << ','
          << res.at("steps").get<long>() << "\n";
      row["event"] = res.at("event");
      row["t_event"] = res.at("t_event");
    } else {
      csv << ",Error,,,,\n";
      row["event"] = "Error";
      row["detail"] = failures[r];
    }
    s.push_back(row);
  }
  csv.close();
  json out{{"runs", s}};
  write_json(dir.path("scan.json"), out);
  dir.commit();
  return out;
}

int run_command(const std::string& command, const CliOptions& opts, std::ostream& out,
                std::ostream& err) {
  auto fail = [&](int code, const std::string& kind, const std::string& msg, const json& extra) {
    json e{{"error", kind}, {"message", msg}, {"exit_code", code}};
    if (!extra.is_null()) e.update(extra);
    err << e.dump() << std::endl;
    return code;
  };
  try {
    if (opts.config.empty()) throw Error(ErrorKind::InvalidConfig, "--config is required");
    const json manifest = read_json_file(opts.config, ErrorKind::InvalidConfig);
    json result;
    if (command == "flow") result = cmd_flow(manifest, opts);
    else if (command == "solve") result = cmd_solve(manifest, opts);
    else if (command == "green") result = cmd_green(manifest, opts);
    else if (command == "testfn") result = cmd_testfn(manifest, opts);
    else if (command == "classify") result = cmd_classify(manifest, opts);
    else if (command == "scan") result = cmd_scan(manifest, opts);
    else throw Error(ErrorKind::InvalidArgument, "unknown command " + command);
    out << result.dump() << std::endl;
    return kExitOk;
  } catch (const NonpositiveHMassError& e) {
    return fail(kExitNumerical, to_string(e.kind()), e.what(), json{{"component", e.index() + 1}});
  } catch (const Error& e) {
    int code = kExitNumerical;
    if (e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::InvalidConfig) code = kExitConfig;
    if (e.kind() == ErrorKind::MissingArtifact) code = kExitMissing;
    return fail(code, to_string(e.kind()), e.what(), nullptr);
  } catch (const json::exception& e) {
    return fail(kExitConfig, "InvalidConfig", e.what(), nullptr);
  } catch (const fs::filesystem_error& e) {
    return fail(kExitConfig, "InvalidConfig", e.what(), nullptr);
  }
}

}  // namespace toda
