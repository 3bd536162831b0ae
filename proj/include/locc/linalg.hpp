#pragma once

// Dense complex linear algebra on the qutrit-qutrit space.
//
// Composite basis convention used everywhere in this library: the product
// state |a>|b> sits at row a * dim_b + b.

#include <complex>

#include <Eigen/Dense>

namespace locc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kTraceTol = 1e-9;

struct SubsystemDims {
  int dim_a = 3;
  int dim_b = 3;

  int total() const { return dim_a * dim_b; }
  bool operator==(const SubsystemDims&) const = default;
};

enum class Party { A, B };

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Transpose of the selected tensor factor. Throws InvalidInput if m is not
// square of size dims.total().
ComplexMatrix partial_transpose(const ComplexMatrix& m, SubsystemDims dims, Party which);

// exp(h) for skew-Hermitian h, via the eigendecomposition of the Hermitian
// matrix -i h. Throws InvalidInput if h is not skew-Hermitian within 1e-10.
ComplexMatrix unitary_exp(const ComplexMatrix& h);

double hermiticity_error(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol);
ComplexMatrix hermitian_part(const ComplexMatrix& m);

// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const ComplexMatrix& m);

// True iff the minimum eigenvalue is >= -tol. Throws InvalidInput when m is
// not Hermitian within max(tol, 1e-10).
bool is_psd(const ComplexMatrix& m, double tol);

ComplexMatrix projector(const ComplexVector& v);

// Unit-trace positive semidefinite operator on a bipartite space.
//
// Construction validates against `tol` (Hermiticity, trace, minimum
// eigenvalue), then stores the Hermitian part rescaled to trace one, so the
// stored matrix always meets the library tolerances.
class DensityMatrix {
 public:
  explicit DensityMatrix(const ComplexMatrix& m, SubsystemDims dims = {}, double tol = kTraceTol);

  static DensityMatrix from_pure(const ComplexVector& v, SubsystemDims dims = {});
  static DensityMatrix maximally_mixed(SubsystemDims dims = {});

  const ComplexMatrix& mat() const { return mat_; }
  SubsystemDims dims() const { return dims_; }
  int dim() const { return dims_.total(); }
  double purity() const;

 private:
  ComplexMatrix mat_;
  SubsystemDims dims_;
};

// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

}  // namespace locc
