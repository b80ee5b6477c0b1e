#include "toda/problem.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "toda/error.hpp"
#include "toda/expr.hpp"

namespace toda {

TodaProblem make_problem(const CouplingMatrix& a, const std::vector<double>& rho, int n,
                         const std::vector<Expression>& h, const std::vector<Expression>& q) {
  const std::size_t N = static_cast<std::size_t>(a.size());
  if (rho.size() != N || h.size() != N || (!q.empty() && q.size() != N))
    throw Error(ErrorKind::InvalidArgument, "problem data sizes do not match N");
  Fields hf, qf;
  for (std::size_t i = 0; i < N; ++i) {
    hf.push_back(sample(n, h[i]));
    qf.push_back(q.empty() || !q[i] ? Field(n, rho[i]) : sample(n, q[i]));
  }
  return TodaProblem{a, rho, std::move(hf), std::move(qf), n};
}

TodaProblem make_problem(const CouplingMatrix& a, const std::vector<double>& rho, Fields h) {
  if (rho.size() != static_cast<std::size_t>(a.size()) || h.size() != rho.size())
    throw Error(ErrorKind::InvalidArgument, "problem data sizes do not match N");
  const int n = h.front().n();
  Fields q;
  for (double r : rho) q.emplace_back(n, r);
  return TodaProblem{a, rho, std::move(h), std::move(q), n};
}

std::vector<Violation> validate(const TodaProblem& p) {
  std::vector<Violation> out;
  const std::size_t N = static_cast<std::size_t>(p.size());
  if (p.rho.size() != N || p.h.size() != N || p.q.size() != N) {
    out.push_back({-1, "size", 0.0, "rho/h/q sizes do not match N=" + std::to_string(N)});
    return out;
  }
  for (std::size_t i = 0; i < N; ++i) {
    const std::string tag = std::to_string(i + 1);
    const int idx = static_cast<int>(i);
    if (p.h[i].n() != p.n || p.q[i].n() != p.n) {
      out.push_back({idx, "resolution", 0.0, "field resolution mismatch i=" + tag});
      continue;
    }
    if (!p.h[i].all_finite() || !p.q[i].all_finite() || !std::isfinite(p.rho[i])) {
      out.push_back({idx, "nonfinite", 0.0, "non-finite data i=" + tag});
      continue;
    }
    const double defect = integrate(p.q[i]) - p.rho[i];
    if (std::abs(defect) > 1e-8) {
      std::ostringstream msg;
      msg << "mass mismatch i=" << tag << ", defect " << defect;
      out.push_back({idx, "mass_mismatch", defect, msg.str()});
    }
    const double hmax = p.h[i].max();
    if (hmax <= 0.0)
      out.push_back({idx, "h_nonpositive", hmax, "h_" + tag + " has no positive part"});
  }
  return out;
}

void require_valid(const TodaProblem& p) {
  const auto v = validate(p);
  if (v.empty()) return;
  std::string msg = "invalid problem:";
  for (const auto& x : v) msg += " [" + x.message + "]";
  throw Error(ErrorKind::InvalidConfig, msg);
}

Fields background_phi(const TodaProblem& p) {
  const int N = p.size();
  Fields phi;
  for (int j = 0; j < N; ++j) {
    Field src(p.n, 0.0);
    for (int i = 0; i < N; ++i) {
      const double a = p.coupling.a(i, j);
      if (a == 0.0) continue;
      src += a * (p.q[i] + (-p.rho[i]));
    }
    // Remove the round-off mean left by the sampled Q before inverting.
    src += -integrate(src);
    phi.push_back(inverse_laplacian_zero_mean(src));
  }
  return phi;
}

TodaProblem normalize_constant_q(const TodaProblem& p) {
  const Fields phi = background_phi(p);
  TodaProblem out = p;
  for (int j = 0; j < p.size(); ++j) {
    out.h[j] = p.h[j] * exp(phi[j]);
    out.q[j] = Field(p.n, p.rho[j]);
  }
  return out;
}

namespace {

double json_number(const nlohmann::json& v, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_constant(v.get<std::string>());
  throw Error(ErrorKind::InvalidConfig, what + " must be a number or constant expression");
}

Field json_field(const nlohmann::json& v, int n, const std::string& base_dir,
                 const std::string& what) {
  if (v.is_number()) return Field(n, v.get<double>());
  if (v.is_string()) return sample(n, parse_expression(v.get<std::string>()));
  if (v.is_object() && v.contains("file")) {
    std::filesystem::path path = v.at("file").get<std::string>();
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    Field f = read_binary(path.string());
    if (f.n() != n) f = resample(f, n);
    return f;
  }
  throw Error(ErrorKind::InvalidConfig, what + " must be an expression, number or {\"file\": path}");
}

}  // namespace

TodaProblem problem_from_json(const nlohmann::json& doc, const std::string& base_dir) {
  try {
    const int N = doc.at("N").get<int>();
    const int n = doc.value("n", 64);
    if (!is_valid_resolution(n))
      throw Error(ErrorKind::InvalidConfig, "n must be a power of two >= 16");
    Eigen::MatrixXd a;
    const auto& c = doc.contains("coupling") ? doc.at("coupling") : nlohmann::json("cartan");
    if (c.is_string()) {
      if (c.get<std::string>() != "cartan")
        throw Error(ErrorKind::InvalidConfig, "coupling must be \"cartan\" or a matrix");
      a = cartan(N).a();
    } else {
      if (!c.is_array() || c.size() != static_cast<std::size_t>(N))
        throw Error(ErrorKind::InvalidConfig, "coupling matrix must be N x N");
      a.resize(N, N);
      for (int i = 0; i < N; ++i) {
        if (!c[i].is_array() || c[i].size() != static_cast<std::size_t>(N))
          throw Error(ErrorKind::InvalidConfig, "coupling matrix must be N x N");
        for (int j = 0; j < N; ++j) a(i, j) = json_number(c[i][j], "coupling entry");
      }
    }
    CouplingMatrix coupling = [&] {
      try {
        return CouplingMatrix(a);
      } catch (const Error& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
      }
    }();
    const auto& rho_j = doc.at("rho");
    const auto& h_j = doc.at("h");
    if (!rho_j.is_array() || rho_j.size() != static_cast<std::size_t>(N) || !h_j.is_array() ||
        h_j.size() != static_cast<std::size_t>(N))
      throw Error(ErrorKind::InvalidConfig, "rho and h must be arrays of length N");
    std::vector<double> rho;
    Fields h, q;
    for (int i = 0; i < N; ++i) {
      rho.push_back(json_number(rho_j[i], "rho"));
      h.push_back(json_field(h_j[i], n, base_dir, "h"));
    }
    if (doc.contains("q")) {
      const auto& q_j = doc.at("q");
      if (!q_j.is_array() || q_j.size() != static_cast<std::size_t>(N))
        throw Error(ErrorKind::InvalidConfig, "q must be an array of length N");
      for (int i = 0; i < N; ++i) q.push_back(json_field(q_j[i], n, base_dir, "q"));
    } else {
      for (int i = 0; i < N; ++i) q.emplace_back(n, rho[i]);
    }
    return TodaProblem{std::move(coupling), std::move(rho), std::move(h), std::move(q), n};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("problem config: ") + e.what());
  }
}

TodaProblem load_problem(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::InvalidConfig, "cannot open problem config " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("malformed JSON in ") + path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return problem_from_json(doc, dir.empty() ? "." : dir.string());
}

}  // namespace toda
