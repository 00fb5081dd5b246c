#pragma once

// Integrals of motion, the M/N change of variables, hodograph residuals and
// the Newton solve producing u(t, x).
//
// Along a characteristic of u_t + (u.grad)u = g + A u,
//   u(t) = e^{tA} M + phi1(A,t) g,   x(t) = N + phi1(A,t) M + phi2(A,t) g,
// so M is the initial velocity and N the initial position. For data u0 with
// inverse phi the solution is the root M of  x - phi1 M - phi2 g - phi(M) = 0.

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "hodo/model.hpp"

namespace hodo {

class DegenerateSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StateSample {
  double t = 0.0;
  Vector x;
  Vector u;
};

struct IntegralValues {
  Vector I1;
  Vector I2;
  Vector M;
  Vector N;
};

struct SolverOptions {
  double newton_tol = 1e-12;
  int max_iter = 50;
  /// Points per M-dimension for blow-up scans.
  int grid_points = 201;
};

class HodographProblem {
 public:
  HodographProblem(ForceSpec spec, InitialData data, SolverOptions options = {});

  const ForceSpec& spec() const { return spec_; }
  const InitialData& data() const { return data_; }
  const SolverOptions& options() const { return options_; }
  int dim() const { return spec_.dim(); }

 private:
  ForceSpec spec_;
  InitialData data_;
  SolverOptions options_;
};

/// I1 = u - g t - A x,  I2 = e^{-tA}(g + A u), M and N as above.
/// Throws DegenerateSpecError when 0 < rank(A) < n.
IntegralValues integrals(const ForceSpec& spec, const StateSample& s);

Vector M_from_u(const ForceSpec& spec, double t, const Vector& u);
Vector u_from_M(const ForceSpec& spec, double t, const Vector& m);
/// N at position x for the characteristic labelled by M.
Vector N_from_M(const ForceSpec& spec, double t, const Vector& x, const Vector& m);

/// x - phi1 M - phi2 g - phi(M). Rows of constant-data components are zero.
Vector residual_M(const HodographProblem& p, double t, const Vector& x, const Vector& m);

/// The same equation written in u: x + phi1(A,-t) u + phi2(A,-t) g - phi(M(u)).
Vector residual_u(const HodographProblem& p, double t, const Vector& x, const Vector& u);

/// d residual_M / dM = -(phi1(A,t) + dphi/dM).
Matrix residual_jacobian(const HodographProblem& p, double t, const Vector& m);

enum class SolveStatus { Converged, NoConvergence, JacobianSingular, DomainExit };

std::string to_string(SolveStatus s);

struct SolveResult {
  StateSample state;
  Vector M;
  int iterations = 0;
  SolveStatus status = SolveStatus::NoConvergence;
  double residual_norm = 0.0;

  bool ok() const { return status == SolveStatus::Converged; }
};

/// Damped Newton on residual_M. Without a guess the iteration starts from
/// u0(x) polished by a few fixed-point sweeps, and falls back to continuation
/// in t from t = 0 if the direct attempt fails.
SolveResult solve_u(const HodographProblem& p, double t, const Vector& x,
                    const std::optional<Vector>& guess_M = std::nullopt);

/// Newton from an explicit starting point only (no fallbacks).
SolveResult newton_M(const HodographProblem& p, double t, const Vector& x, const Vector& m0);

namespace detail {

/// The x-side of a hodograph system at fixed (t, x): N(M), affine in M, and
/// the velocity map u(M). The equation solved is N(M) = phi(M).
struct LinearHodograph {
  std::function<Vector(const Vector&)> n_of_m;
  Matrix dn_dm;
  std::function<Vector(const Vector&)> u_of_m;
};

using SystemFactory = std::function<LinearHodograph(double t, const Vector& x)>;

SolveResult newton_core(const HodographProblem& p, double t, const Vector& x, const Vector& m0,
                        const LinearHodograph& sys);

/// Guess, direct Newton, then continuation in t from t = 0 on failure.
SolveResult solve_core(const HodographProblem& p, double t, const Vector& x, const std::optional<Vector>& guess,
                       const SystemFactory& factory);

struct MarchResult {
  SolveResult end;
  /// The Newton Jacobian determinant changed sign between two steps.
  bool crossed_blowup = false;
  /// Time of the last converged step.
  double reached = 0.0;
};

/// Follows the root M from (t0, m0) to t1 in `steps` Newton continuation steps.
MarchResult march(const HodographProblem& p, double t0, double t1, const Vector& x, const Vector& m0,
                  const SystemFactory& factory, int steps);

/// The factory used by solve_u.
SystemFactory generic_factory(const ForceSpec& spec);

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed-form families obtained by holding one integral constant.

struct ConstI1 {
  Vector alpha;
};
struct ConstI2 {
  Vector beta;
};
struct ConstM {
  Vector gamma;
};
struct ConstN {
  Vector delta;
};
using ClosedFormKind = std::variant<ConstI1, ConstI2, ConstM, ConstN>;

/// ConstI1: u = g t + A x + alpha.
/// ConstI2: u = A^{-1}(e^{tA} beta - g), A invertible.
/// ConstM:  u = e^{tA} gamma + phi1(A,t) g.
/// ConstN:  u = (-phi1(A,-t))^{-1} (x - delta + phi2(A,-t) g); singular at t = 0.
Vector closed_form(const ClosedFormKind& kind, const ForceSpec& spec, double t, const Vector& x);

/// (t, x, u) -> (phi1(a,t), x - phi2(a,t) g, M) for A = a I. The image solves
/// the homogeneous hodograph equation xbar - ubar tbar = phi(ubar).
StateSample to_bar_variables(const ForceSpec& spec, const StateSample& s);

/// Same initial data with A = 0 and g = 0; pairs with to_bar_variables.
HodographProblem homogeneous_problem(const HodographProblem& p);

}  // namespace hodo
