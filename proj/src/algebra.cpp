#include "toda/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "toda/error.hpp"

namespace toda {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::NonpositiveHMass: return "NonpositiveHMass";
    case ErrorKind::NonpositiveH: return "NonpositiveH";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::LineSearchStall: return "LineSearchStall";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::DegenerateFrame: return "DegenerateFrame";
    case ErrorKind::TailNotConvergent: return "TailNotConvergent";
    case ErrorKind::InsufficientSeparation: return "InsufficientSeparation";
    case ErrorKind::InterfaceMismatch: return "InterfaceMismatch";
    case ErrorKind::IllConditionedFit: return "IllConditionedFit";
  }
  return "Unknown";
}

NonpositiveHMassError::NonpositiveHMassError(int index, double value)
    : Error(ErrorKind::NonpositiveHMass,
            "integral of h_" + std::to_string(index + 1) +
                " e^{u} is nonpositive (" + std::to_string(value) + ")"),
      index_(index) {}

CouplingMatrix::CouplingMatrix(const Eigen::MatrixXd& a) : a_(a) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw Error(ErrorKind::InvalidArgument, "coupling matrix must be square and nonempty");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
    throw Error(ErrorKind::InvalidArgument, "coupling matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorKind::InvalidArgument, "coupling matrix is not positive definite");
  a_inv_ = a.partialPivLu().inverse();
  // Symmetrize to remove round-off asymmetry of the LU inverse.
  a_inv_ = 0.5 * (a_inv_ + a_inv_.transpose()).eval();
  lambda_max_inv_ = 1.0 / eig.eigenvalues().minCoeff();
}

bool CouplingMatrix::is_cartan() const {
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double want = (i == j) ? 2.0 : (std::abs(i - j) == 1 ? -1.0 : 0.0);
      if (a_(i, j) != want) return false;
    }
  return true;
}

CouplingMatrix cartan(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "Cartan matrix size must be >= 1");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = -1.0;
  }
  return CouplingMatrix(a);
}

double cartan_inverse_entry(int n, int i, int j) {
  if (n < 1 || i < 1 || j < 1 || i > n || j > n)
    throw Error(ErrorKind::InvalidArgument, "Cartan inverse index out of range");
  return std::min(i, j) - static_cast<double>(i) * j / (n + 1);
}

bool is_dominated_by_cartan(const CouplingMatrix& a) {
  const Eigen::MatrixXd diff = cartan(a.size()).a() - a.a();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

Eigen::MatrixXd remove_index(const Eigen::MatrixXd& m, int k) {
  const int n = static_cast<int>(m.rows());
  Eigen::MatrixXd out(n - 1, n - 1);
  for (int i = 0, r = 0; i < n; ++i) {
    if (i == k) continue;
    for (int j = 0, c = 0; j < n; ++j) {
      if (j == k) continue;
      out(r, c++) = m(i, j);
    }
    ++r;
  }
  return out;
}

}  // namespace toda
