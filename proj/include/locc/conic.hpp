#pragma once

// Primal-dual interior-point solver for small dense cone programs
//
//   minimize    c'x
//   subject to  G x + s = h,  A x = b,  s in K
//
// with K a product of a nonnegative orthant, second-order cones and complex
// Hermitian positive semidefinite cones. Search directions use Nesterov-Todd
// scaling with a Mehrotra predictor-corrector step; the reduced KKT system is
// solved densely, which is adequate for the few hundred variables that the
// detection and estimation programs in this library need.
//
// A Hermitian n x n block is stored as n*n reals: the diagonal first, then for
// every i < j (row-major over the upper triangle) sqrt(2) Re H(i,j) followed by
// sqrt(2) Im H(i,j). With this layout the Euclidean inner product of two
// vectors equals Re tr(H K).

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locc/linalg.hpp"

namespace locc::conic {

struct ConeDims {
  int nonneg = 0;
  std::vector<int> soc;            // dimension of each second-order cone (head + tail)
  std::vector<int> hermitian_psd;  // order n of each Hermitian PSD block

  int size() const;    // length of s and z
  int degree() const;  // barrier parameter nu
};

struct ConeProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;  // may have zero rows
  Eigen::VectorXd b;
  ConeDims cones;
};

struct SolverSettings {
  double feastol = 1e-8;
  double abstol = 1e-9;
  double reltol = 1e-8;
  int max_iterations = 100;
};

enum class SolverStatus { optimal, near_optimal, infeasible, numerical_failure };

std::string to_string(SolverStatus status);

struct ConeSolution {
  SolverStatus status = SolverStatus::numerical_failure;
  Eigen::VectorXd x, s, z, y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

// Throws InvalidInput on inconsistent dimensions. Never throws for numerical
// trouble; inspect `status` instead. When the iteration stalls before meeting
// the strict tolerances, the best iterate seen is returned as near_optimal if
// its residuals are within 1e-6.
ConeSolution solve(const ConeProgram& program, const SolverSettings& settings = {});

Eigen::VectorXd hermitian_to_vec(const ComplexMatrix& m);
ComplexMatrix vec_to_hermitian(const Eigen::Ref<const Eigen::VectorXd>& v, int n);

}  // namespace locc::conic
