#pragma once

// Time periodicity of e^{tA}: detection, the minimal period, periodic
// generators in 2D and 4D, and a direct check on hodograph solutions.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hodo/hodograph.hpp"

namespace hodo {

struct EigenRatio {
  Complex eigenvalue;
  /// |Im eigenvalue| / lambda_ref ~ p / q in lowest terms.
  long p = 0;
  long q = 1;
};

struct PeriodicityReport {
  bool periodic = false;
  std::optional<double> period;
  /// Smallest |Im| over the spectrum; the base rate of the ratios.
  double lambda_ref = 0.0;
  std::vector<EigenRatio> ratios;
  /// Empty when periodic.
  std::string reason;
};

/// Periodic iff A is invertible, diagonalizable, its spectrum is purely
/// imaginary and every |Im nu| / lambda_ref is a rational p/q with
/// q <= max_denominator. The period 2 pi lcm(q) / lambda_ref is reduced to the
/// smallest integer fraction that still satisfies e^{TA} = I.
PeriodicityReport check_periodic(const Matrix& a, double rational_tol = 1e-9, int max_denominator = 64);

/// lambda [[A11, A12], [A21, -A11]] with A21 = -(1 + A11^2) / A12, so A^2 = -lambda^2 I.
Matrix make_periodic_2d(double lambda, double a11, double a12);

enum class Periodic4D {
  /// lambda [[0,1,0,0],[-1,0,0,0],[0,0,0,1],[0,0,-1,0]]
  BlockRotation,
  /// lambda [[0,0,1,0],[0,0,0,1],[-1,0,0,0],[0,-1,0,0]]
  PairedRotation,
};

Matrix make_periodic_4d(Periodic4D kind, double lambda);

struct PeriodPoint {
  double t = 0.0;
  Vector x;
  Vector u_t;
  Vector u_tT;
  double difference = 0.0;
  bool ok = false;
  /// Empty, or why the point could not be checked.
  std::string failure;
};

struct PeriodVerification {
  bool passed = false;
  double max_difference = 0.0;
  std::vector<PeriodPoint> points;
};

/// Solves at (t, x), follows the root in time to t + T and compares u. A
/// point fails when the path meets the blow-up surface or the solver does.
/// Requires g = 0.
PeriodVerification verify_solution_period(const HodographProblem& p, double period,
                                          const std::vector<std::pair<double, Vector>>& samples, double tol,
                                          int steps = 200);

}  // namespace hodo
