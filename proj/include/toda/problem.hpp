#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "toda/algebra.hpp"
#include "toda/expr.hpp"
#include "toda/grid.hpp"

namespace toda {

// Full problem data (A, rho, h, Q) on a common grid. Component indices are
// 0-based in code and 1-based in every user-facing message.
struct TodaProblem {
  CouplingMatrix coupling;
  std::vector<double> rho;
  Fields h;
  Fields q;
  int n = 0;

  int size() const { return coupling.size(); }
};

// Convenience constructor: h_i and Q_i given as closed-form expressions of
// (x, y); an empty q expression means Q_i == rho_i.
TodaProblem make_problem(const CouplingMatrix& a, const std::vector<double>& rho, int n,
                         const std::vector<Expression>& h,
                         const std::vector<Expression>& q = {});

// Problem with constant Q_i == rho_i and the given h fields.
TodaProblem make_problem(const CouplingMatrix& a, const std::vector<double>& rho, Fields h);

struct Violation {
  int index;  // 0-based component, -1 for problem-wide issues
  std::string kind;
  double defect;
  std::string message;
};

// Empty iff every construction invariant holds.
std::vector<Violation> validate(const TodaProblem& p);

// Throws Error(InvalidConfig) listing all violations if validate() is nonempty.
void require_valid(const TodaProblem& p);

// Mean-zero phi with -sum_j a^{ij} lap(phi_j) = rho_i - Q_i, solved
// componentwise as lap(phi_j) = sum_i a_ij (Q_i - rho_i).
Fields background_phi(const TodaProblem& p);

// Equivalent problem with Q == rho: h_j -> h_j e^{phi_j}, and solutions map
// by u -> u - phi with phi = background_phi(p).
TodaProblem normalize_constant_q(const TodaProblem& p);

// Problem config document:
//   {"N": 2, "coupling": "cartan" | [[..],[..]], "rho": [num|expr, ..],
//    "h": [expr | num | {"file": path}, ..], "q": [...] (optional), "n": 64}
// Relative file paths resolve against base_dir.
TodaProblem problem_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
TodaProblem load_problem(const std::string& path);

}  // namespace toda
