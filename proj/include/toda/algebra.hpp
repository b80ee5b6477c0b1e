#pragma once

#include <Eigen/Dense>

namespace toda {

// Symmetric positive definite coupling matrix A together with its inverse
// (a^{ij}). Immutable after construction.
class CouplingMatrix {
 public:
  // Validates symmetry and positive definiteness; the inverse is formed by
  // dense LU with partial pivoting.
  explicit CouplingMatrix(const Eigen::MatrixXd& a);

  int size() const { return static_cast<int>(a_.rows()); }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& a_inv() const { return a_inv_; }
  double a(int i, int j) const { return a_(i, j); }
  double inv(int i, int j) const { return a_inv_(i, j); }

  // Largest eigenvalue of A^{-1}; enters the explicit-step stability cap.
  double lambda_max_inv() const { return lambda_max_inv_; }
  bool is_cartan() const;

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd a_inv_;
  double lambda_max_inv_ = 0.0;
};

// Cartan matrix of SU(N+1): 2 on the diagonal, -1 on the first off-diagonals.
CouplingMatrix cartan(int n);

// Closed-form inverse entry min(i,j) - i*j/(N+1), 1-based indices.
double cartan_inverse_entry(int n, int i, int j);

// A <= A_N in the Loewner order: smallest eigenvalue of A_N - A >= -1e-12.
bool is_dominated_by_cartan(const CouplingMatrix& a);

// Principal submatrix with row and column `k` (0-based) removed.
Eigen::MatrixXd remove_index(const Eigen::MatrixXd& m, int k);

}  // namespace toda
