#include "hodo/matops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hodo {

namespace {

double norm1(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Truncated Taylor series for e^Y with ||Y||_1 <= 0.25.
Matrix exp_taylor(const Matrix& y) {
  const auto n = y.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * y / static_cast<double>(k);
    sum += term;
    if (norm1(term) <= 1e-17 * norm1(sum)) break;
  }
  return sum;
}

constexpr double kSeriesRadius = 0.25;

// sum_{k>=0} X^k / (k + offset)!  for small ||X||.
Matrix shifted_exp_series(const Matrix& x, int offset) {
  const auto n = x.rows();
  double fact = 1.0;
  for (int j = 2; j <= offset; ++j) fact *= j;
  Matrix term = Matrix::Identity(n, n) / fact;
  Matrix sum = term;
  for (int k = 1; k <= 60; ++k) {
    term = term * x / static_cast<double>(k + offset);
    sum += term;
    if (norm1(term) <= 1e-17 * norm1(sum)) break;
  }
  return sum;
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix is not square");
  }
}

}  // namespace

bool all_finite(const Matrix& a) { return a.allFinite(); }

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Matrix mat_exp(const Matrix& a, double t) {
  require_square(a, "mat_exp");
  if (!a.allFinite() || !std::isfinite(t)) {
    throw std::invalid_argument("mat_exp: non-finite input");
  }
  const Matrix x = t * a;
  const double nrm = norm1(x);
  int squarings = 0;
  if (nrm > kSeriesRadius) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / kSeriesRadius)));
  }
  Matrix e = exp_taylor(x / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) {
    e = e * e;
    if (!e.allFinite()) break;
  }
  if (!e.allFinite()) {
    throw OverflowError("mat_exp: result overflows double range (||tA||_1 = " +
                        std::to_string(nrm) + ")");
  }
  return e;
}

Matrix phi1(const Matrix& a, double t) {
  require_square(a, "phi1");
  const auto n = a.rows();
  if (norm1(t * a) < kSeriesRadius) {
    return t * shifted_exp_series(t * a, 1);
  }
  // Top-middle block of exp(t [[A, I], [0, 0]]).
  Matrix z = Matrix::Zero(2 * n, 2 * n);
  z.topLeftCorner(n, n) = a;
  z.topRightCorner(n, n) = Matrix::Identity(n, n);
  return mat_exp(z, t).topRightCorner(n, n);
}

Matrix phi2(const Matrix& a, double t) {
  require_square(a, "phi2");
  const auto n = a.rows();
  if (norm1(t * a) < kSeriesRadius) {
    return t * t * shifted_exp_series(t * a, 2);
  }
  // Top-right block of exp(t [[A, I, 0], [0, 0, I], [0, 0, 0]]).
  Matrix z = Matrix::Zero(3 * n, 3 * n);
  z.block(0, 0, n, n) = a;
  z.block(0, n, n, n) = Matrix::Identity(n, n);
  z.block(n, 2 * n, n, n) = Matrix::Identity(n, n);
  return mat_exp(z, t).block(0, 2 * n, n, n);
}

double phi1(double a, double t) {
  if (a == 0.0) return t;
  return std::expm1(a * t) / a;
}

double phi2(double a, double t) {
  const double z = a * t;
  if (std::abs(z) < 0.5) {
    double term = 0.5;
    double sum = term;
    for (int k = 1; k < 40; ++k) {
      term *= z / (k + 2);
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return t * t * sum;
  }
  return (std::expm1(z) - z) / (a * a);
}

Spectrum eig(const Matrix& a) {
  require_square(a, "eig");
  Spectrum out;
  if (a.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> solver(a, true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eig: QR iteration did not converge");
  }
  const auto values = solver.eigenvalues();
  out.eigenvalues.assign(values.data(), values.data() + values.size());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(solver.eigenvectors());
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  out.eigvec_condition = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  out.diagonalizable = out.eigvec_condition < 1e8;
  return out;
}

int rank(const Matrix& a, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank: tol must be positive");
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++r;
  }
  return r;
}

double det(const Matrix& a) {
  require_square(a, "det");
  if (a.rows() == 0) return 1.0;
  return a.fullPivLu().determinant();
}

Vector solve(const Matrix& a, const Vector& b) {
  require_square(a, "solve");
  if (a.rows() != b.size()) throw std::invalid_argument("solve: dimension mismatch");
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!(lu.rcond() > 1e-14)) {
    throw SingularMatrixError("solve: matrix is numerically singular");
  }
  Vector x = lu.solve(b);
  // one step of iterative refinement
  x += lu.solve(b - a * x);
  return x;
}

std::vector<Complex> poly_roots(std::span<const double> coeffs) {
  std::size_t deg = coeffs.size();
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  while (deg > 0 && std::abs(coeffs[deg - 1]) <= 1e-14 * scale) --deg;
  if (deg <= 1) return {};
  const int d = static_cast<int>(deg) - 1;
  const double lead = coeffs[deg - 1];
  Matrix companion = Matrix::Zero(d, d);
  for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) companion(i, d - 1) = -coeffs[i] / lead;
  Eigen::EigenSolver<Matrix> solver(companion, false);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("poly_roots: companion eigenvalues did not converge");
  }
  std::vector<Complex> roots;
  for (Eigen::Index i = 0; i < d; ++i) {
    Complex z = solver.eigenvalues()(i);
    // Newton polish on the original polynomial
    for (int it = 0; it < 3; ++it) {
      Complex p = 0.0, dp = 0.0;
      for (int k = d; k >= 0; --k) {
        dp = dp * z + p;
        p = p * z + coeffs[k];
      }
      if (std::abs(dp) == 0.0) break;
      const Complex step = p / dp;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      z -= step;
    }
    roots.push_back(z);
  }
  return roots;
}

std::vector<double> real_poly_roots(std::span<const double> coeffs, double imag_tol) {
  std::vector<double> out;
  for (const Complex& z : poly_roots(coeffs)) {
    if (std::abs(z.imag()) <= imag_tol * std::max(1.0, std::abs(z))) out.push_back(z.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hodo
