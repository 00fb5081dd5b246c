#pragma once

// Dense small-dimension linear algebra used by every other module.
//
// Matrices are dynamically sized Eigen objects; all problems handled here are
// n <= 8, so nothing is tuned for large or sparse systems.

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hodo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct Spectrum {
  std::vector<Complex> eigenvalues;
  bool diagonalizable = true;
  /// 2-norm condition number of the eigenvector matrix (infinity if defective).
  double eigvec_condition = 1.0;
};

/// e^{tA} by scaling and squaring around a truncated Taylor core.
/// Throws OverflowError when the result is not representable.
Matrix mat_exp(const Matrix& a, double t);

/// t * phi1(tA) = A^{-1}(e^{tA} - I), well defined for singular A.
Matrix phi1(const Matrix& a, double t);

/// t^2 * phi2(tA) = A^{-2}(e^{tA} - I - tA), well defined for singular A.
Matrix phi2(const Matrix& a, double t);

/// Scalar versions of phi1/phi2 (the 1x1 case), used by closed forms.
double phi1(double a, double t);
double phi2(double a, double t);

Spectrum eig(const Matrix& a);

/// Numerical rank: number of singular values above tol * sigma_max.
int rank(const Matrix& a, double tol = 1e-10);

double det(const Matrix& a);

/// Solves A x = b. Throws SingularMatrixError when A is numerically singular.
Vector solve(const Matrix& a, const Vector& b);

/// Roots of c[0] + c[1] z + ... + c[d] z^d via companion-matrix eigenvalues.
/// Leading zero coefficients are trimmed.
std::vector<Complex> poly_roots(std::span<const double> coeffs);

/// Real roots of the polynomial; a root counts as real when
/// |Im z| <= imag_tol * max(1, |z|). Returned in ascending order.
std::vector<double> real_poly_roots(std::span<const double> coeffs, double imag_tol = 1e-9);

/// True when every entry is finite.
bool all_finite(const Matrix& a);

/// Max-abs entry norm.
double max_abs(const Matrix& a);

}  // namespace hodo
