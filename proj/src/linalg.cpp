#include "locc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "locc/error.hpp"

namespace locc {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix partial_transpose(const ComplexMatrix& m, SubsystemDims dims, Party which) {
  const int n = dims.total();
  if (m.rows() != n || m.cols() != n) {
    throw InvalidInput("partial_transpose: expected " + std::to_string(n) + "x" + std::to_string(n) +
                       " matrix, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  const int da = dims.dim_a;
  const int db = dims.dim_b;
  ComplexMatrix out(n, n);
  for (int a = 0; a < da; ++a) {
    for (int b = 0; b < db; ++b) {
      for (int ap = 0; ap < da; ++ap) {
        for (int bp = 0; bp < db; ++bp) {
          const int row = a * db + b;
          const int col = ap * db + bp;
          if (which == Party::B) {
            out(row, col) = m(a * db + bp, ap * db + b);
          } else {
            out(row, col) = m(ap * db + b, a * db + bp);
          }
        }
      }
    }
  }
  return out;
}

double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) { return hermiticity_error(m) <= tol; }

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

ComplexMatrix unitary_exp(const ComplexMatrix& h) {
  if (h.rows() != h.cols()) throw InvalidInput("unitary_exp: matrix is not square");
  const double skew = h.size() == 0 ? 0.0 : (h + h.adjoint()).cwiseAbs().maxCoeff();
  if (skew > kHermitianTol) {
    throw InvalidInput("unitary_exp: exponent is not skew-Hermitian (max |h + h^dag| = " +
                       std::to_string(skew) + ")");
  }
  const ComplexMatrix herm = hermitian_part(Complex(0.0, -1.0) * h);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(herm);
  ComplexVector phases(eig.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::polar(1.0, eig.eigenvalues()(k));
  }
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

double min_eigenvalue(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hermitian_part(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_psd(const ComplexMatrix& m, double tol) {
  if (!is_hermitian(m, std::max(tol, kHermitianTol))) {
    throw InvalidInput("is_psd: matrix is not Hermitian");
  }
  return min_eigenvalue(m) >= -tol;
}

ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

DensityMatrix::DensityMatrix(const ComplexMatrix& m, SubsystemDims dims, double tol) : dims_(dims) {
  const int n = dims.total();
  if (m.rows() != n || m.cols() != n) {
    throw InvalidInput("density matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  const double herm = hermiticity_error(m);
  if (herm > std::max(tol, kHermitianTol)) {
    throw InvalidInput("density matrix is not Hermitian (error " + std::to_string(herm) + ")");
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol) {
    throw InvalidInput("density matrix trace is " + std::to_string(tr) + ", expected 1");
  }
  const double lmin = min_eigenvalue(m);
  if (lmin < -std::max(tol, kPsdTol)) {
    throw InvalidInput("density matrix has negative eigenvalue " + std::to_string(lmin));
  }
  mat_ = hermitian_part(m) / tr;
}

DensityMatrix DensityMatrix::from_pure(const ComplexVector& v, SubsystemDims dims) {
  const double norm = v.norm();
  if (norm == 0.0) throw InvalidInput("pure state vector has zero norm");
  const ComplexVector u = v / norm;
  return DensityMatrix(projector(u), dims);
}

DensityMatrix DensityMatrix::maximally_mixed(SubsystemDims dims) {
  const int n = dims.total();
  return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(n), dims);
}

double DensityMatrix::purity() const { return (mat_ * mat_).trace().real(); }

namespace {

// Eigenvalues below this are rounding noise; their square roots would
// otherwise leak ~1e-8 into fidelities of pure states.
constexpr double kSpectralFloor = 1e-13;

RealVector floored_sqrt(const RealVector& values) {
  RealVector out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out(i) = values(i) > kSpectralFloor ? std::sqrt(values(i)) : 0.0;
  }
  return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hermitian_part(m));
  const RealVector roots = floored_sqrt(eig.eigenvalues());
  return eig.eigenvectors() * roots.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw InvalidInput("fidelity: dimension mismatch");
  const ComplexMatrix root = psd_sqrt(rho.mat());
  const ComplexMatrix inner = root * sigma.mat() * root;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hermitian_part(inner), Eigen::EigenvaluesOnly);
  const double tr = floored_sqrt(eig.eigenvalues()).sum();
  return tr * tr;
}

}  // namespace locc
