#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hklab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Entrywise Hermiticity tolerance for constructed operators.
inline constexpr double kHermitianTol = 1e-12;

/// Largest dimension handled by dense eigensolvers.
inline constexpr int kDenseLimit = 4000;

/// Raised when inputs violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative routine exhausts its budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// max_ij |M_ij - conj(M_ji)|
double hermiticity_defect(const CMatrix& m);

}  // namespace hklab
