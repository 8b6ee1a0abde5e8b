#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "corrflow/errors.hpp"

namespace corrflow {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

namespace tol {
// Global numerical contract of the library.  All operators are Hermitian to
// kHermitian; density operators additionally have unit trace to kTrace and
// minimum eigenvalue above -kPsd.
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-12;
inline constexpr double kPsd = 1e-10;
inline constexpr double kDegeneracy = 1e-10;    // energy matching of exchange pairs
inline constexpr double kEigenFloor = 1e-14;    // eigenvalues below count as exact zeros
inline constexpr double kSupport = 1e-10;       // overlap that flags a support violation
}  // namespace tol

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

// (M + M^dagger)/2; applied after arithmetic constructions to keep
// floating-point drift out of the Hermitian invariants.
inline ComplexMatrix hermitized(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

// Hermitian matrix with a checked construction invariant.  The carrier for
// every Hamiltonian and number operator in the library.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;

  explicit OperatorMatrix(ComplexMatrix m) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols())
      throw DimensionMismatch("operator matrix must be square, got " +
                              std::to_string(mat_.rows()) + "x" + std::to_string(mat_.cols()));
    const double defect = hermiticity_defect(mat_);
    if (defect > tol::kHermitian)
      throw NotHermitian("max |M - M^dagger| = " + std::to_string(defect));
  }

  static OperatorMatrix diagonal(const RealVector& d) {
    return OperatorMatrix(ComplexMatrix(d.cast<Complex>().asDiagonal()));
  }

  static OperatorMatrix identity(Eigen::Index dim) {
    return OperatorMatrix(ComplexMatrix::Identity(dim, dim));
  }

  static OperatorMatrix zero(Eigen::Index dim) {
    return OperatorMatrix(ComplexMatrix::Zero(dim, dim));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const ComplexMatrix& mat() const { return mat_; }

 private:
  ComplexMatrix mat_;
};

// Max absolute entry of XY - YX.
inline double commutator_norm(const OperatorMatrix& x, const OperatorMatrix& y) {
  if (x.dim() != y.dim())
    throw DimensionMismatch("commutator of " + std::to_string(x.dim()) + "-dim and " +
                            std::to_string(y.dim()) + "-dim operators");
  return max_abs(x.mat() * y.mat() - y.mat() * x.mat());
}

// Kronecker product with A as the slow index: (A x B)[ia*dB+ib, ja*dB+jb].
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::SelfAdjointEigenSolver<ComplexMatrix> eigensolve(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw Error("EigensolverFailure", "self-adjoint eigendecomposition did not converge");
  return solver;
}

}  // namespace corrflow
