#pragma once

// Rank-deficient A. With k = n - r left-kernel rows L^(a) (a < k) and their
// complement, the rotated variables y = L x, v = L u, f = L g see the force
// f + B v, where B = L A P has zero kernel rows. The kernel components move
// as free particles; the rest couple through the r x r block Btilde.
//
// Initial data for the solver is registered in rotated coordinates: the
// inverse map phi sends M to y.

#include <optional>
#include <utility>
#include <vector>

#include "hodo/hodograph.hpp"

namespace hodo {

struct DegenerateBasis {
  int n = 0;
  int r = 0;
  /// Rows: kernel vectors first, then the complement.
  Matrix L;
  /// Inverse of L.
  Matrix P;
  /// L A P; the first n - r rows vanish.
  Matrix B;
  /// Lower-right r x r block of B.
  Matrix Btilde;

  int kernel_dim() const { return n - r; }
};

/// Orthonormal basis from the SVD of A: left-kernel rows, then the left
/// singular vectors of the nonzero singular values. Each row is signed so its
/// first nonzero entry is positive. Throws DegenerateSpecError for r = 0,
/// r = n, or singular Btilde.
DegenerateBasis build_basis(const Matrix& a, double rank_tol = 1e-10);

/// Validates user-supplied rows (kernel rows first) and fills P, B, Btilde.
DegenerateBasis basis_from_rows(const Matrix& a, const Matrix& l, double rank_tol = 1e-10);

/// The 3D Coriolis basis with L^(1) = omega / |omega|. Needs omega_2 or
/// omega_3 nonzero; det L = -1.
DegenerateBasis coriolis3d_basis(const Vector& omega);

/// omega = (0, 0, w): L = P = rows (0,0,1), (0,1,0), (1,0,0).
DegenerateBasis coriolis3d_z_basis(double omega);

struct TimeMatrices {
  /// L e^{-tA} P (full n x n; the coupled rows are the last r).
  Matrix C;
  /// L A e^{-tA} P.
  Matrix D;
};

TimeMatrices time_matrices(const DegenerateBasis& basis, const Matrix& a, double t);

/// Integrals in rotated coordinates. I1 = v - f t - B y and I2 = C f + D v;
/// M and N satisfy M(0) = v, N(0) = y.
IntegralValues degenerate_integrals(const ForceSpec& spec, const DegenerateBasis& basis, double t,
                                    const Vector& y, const Vector& v);

/// The rotated system at (t, y): N(M) from degenerate_integrals and v(M).
detail::LinearHodograph degenerate_system(const ForceSpec& spec, const DegenerateBasis& basis, double t,
                                          const Vector& y);

/// Solves the rotated hodograph system at original-coordinate x. The result
/// carries x and u in original coordinates and M in rotated coordinates.
SolveResult degenerate_solve(const HodographProblem& p, const DegenerateBasis& basis, double t, const Vector& x,
                             const std::optional<Vector>& guess_M = std::nullopt);

/// The matrix L(t) of the 3D Coriolis blow-up condition in original row order:
/// -P phi1(B, t).
Matrix coriolis3d_calL(const DegenerateBasis& basis, double t);

/// z-axis closed form:
/// [[0, -(1-cos wt)/w, -sin wt / w], [0, -sin wt / w, (1-cos wt)/w], [-t, 0, 0]].
Matrix coriolis3d_z_calL(double omega, double t);

/// Leading order in w t: [[0,0,-t],[0,-t,0],[-t,0,0]].
Matrix coriolis3d_z_calL_small(double t);

/// det(P dphi/dM - L(t)), M in rotated coordinates. With pinned components
/// the determinant is taken over the active block of dphi/dM + phi1(B, t),
/// times det P.
double coriolis3d_blowup_residual(const HodographProblem& p, const DegenerateBasis& basis, double t,
                                  const Vector& m);

/// Same with the small-time L.
double coriolis3d_blowup_residual_small(const HodographProblem& p, const DegenerateBasis& basis, double t,
                                        const Vector& m);

struct PeriodWitness {
  double t = 0.0;
  Vector x;
  Vector u_t;
  Vector u_tT;
  double difference = 0.0;
};

/// First sample where |u(t + T, x) - u(t, x)| > threshold, following the
/// root from t to t + T by continuation. Requires g = 0.
std::optional<PeriodWitness> non_periodicity_witness(const HodographProblem& p, const DegenerateBasis& basis,
                                                     double period,
                                                     const std::vector<std::pair<double, Vector>>& samples,
                                                     double threshold = 1e-3, int steps = 200);

}  // namespace hodo
