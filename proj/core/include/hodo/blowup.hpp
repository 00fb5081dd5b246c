#pragma once

// Blow-up hypersurface det(phi1(A,t) + dphi/dM) = 0 in (t, M) variables:
// analytic sheets for the scalar, A = a I, 2D Coriolis and 2D diagonal cases,
// a generic scan for everything else, minimal catastrophe times and
// no-blow-up certificates.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hodo/hodograph.hpp"

namespace hodo {

/// det(phi1(A,t) + dphi/dM) restricted to the active components.
double blowup_residual(const HodographProblem& p, double t, const Vector& m);

/// K = (phi1(A,t) + dphi/dM) e^{-tA}; du/dx = K^{-1} before blow-up.
Matrix K_matrix(const HodographProblem& p, double t, const Vector& m);

struct SheetSample {
  Vector M;
  std::optional<double> t;
  /// Polynomial variable for the diagonal cases, when one is used.
  std::optional<double> tau;
  std::string absent_reason;
};

enum class ExtremumKind { Min, Max };

struct SheetExtremum {
  Vector M;
  double t = 0.0;
  ExtremumKind kind = ExtremumKind::Min;
};

struct BlowupSheet {
  std::string branch;
  std::vector<SheetSample> samples;
  /// Smallest positive t on the sheet (kind Min), or the negative t closest
  /// to zero when the sheet has no positive values (kind Max).
  std::optional<SheetExtremum> extremum;
  Box validity;
  /// Continuous evaluation of the sheet at any M; nullopt where absent.
  std::function<std::optional<double>(const Vector&)> time_at;

  std::size_t present_count() const;
};

struct ScanOptions {
  /// Time window [-t_max, t_max] for root scans.
  double t_max = 10.0;
  double dt = 1e-2;
  /// Refine sheet extrema after sampling.
  bool refine = true;
};

/// Full-dimension M points on a tensor grid of interior points of the M-box.
/// Unbounded directions use [-unbounded_range, unbounded_range].
std::vector<Vector> m_grid(const InitialData& data, int points_per_dim, double unbounded_range = 1.0);

/// Scalar problems: t = log(1 - A phi'(M)) / A, or -phi'(M) when A = 0.
BlowupSheet sheet_1d(const HodographProblem& p, const std::vector<Vector>& grid,
                     const ScanOptions& opt = {});

struct Certificate {
  bool certified = false;
  std::string reason;
  /// Point where the certifying quantity is least favourable.
  Vector worst_M;
  double worst_value = 0.0;
};

/// Certified iff A phi'(M) > 1 on the whole M-domain (no real blow-up time).
Certificate certify_no_blowup_1d(const HodographProblem& p);

/// A = a I: real roots tau of det(tau I + dphi/dM), t = log(1 + a tau) / a
/// kept when a tau > -1. Sheet k holds the k-th smallest root.
std::vector<BlowupSheet> sheets_diag(const HodographProblem& p, const std::vector<Vector>& grid,
                                     const ScanOptions& opt = {});

/// Sheet `branch` of sheets_diag is absent on the whole M-domain iff
/// a tau_k(M) <= -1 everywhere (or the root is never real).
Certificate certify_branch_absent(const HodographProblem& p, int branch);

struct CoriolisABC {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// a sin(wt) + b cos(wt) + c = w^2 det(phi1 + dphi/dM) for A = w [[0,1],[-1,0]].
CoriolisABC coriolis2d_abc(const HodographProblem& p, const Vector& m);

struct CoriolisTimes {
  bool absent = false;
  std::string reason;
  /// Roots from the + and - sign of the closed form, for each k in range.
  std::vector<double> plus;
  std::vector<double> minus;
};

CoriolisTimes coriolis2d_times(const CoriolisABC& abc, double omega, int k_lo = 0, int k_hi = 0);

/// Two sheets ("plus", "minus") holding the representative in (0, 2 pi / |w|];
/// other sheets are shifts by 2 pi k / w.
std::vector<BlowupSheet> sheets_coriolis2d(const HodographProblem& p, const std::vector<Vector>& grid,
                                           const ScanOptions& opt = {});

/// A = diag(a1, a2): roots of e^{(a1+a2)t} + K1 e^{a1 t} + K2 e^{a2 t} + K3 = 0.
/// Rational a1/a2 = p/q is solved as a polynomial in tau = e^{t a2 / q};
/// otherwise by scanning and bisection on [-t_max, t_max].
std::vector<BlowupSheet> sheets_diag2(const HodographProblem& p, const std::vector<Vector>& grid,
                                      const ScanOptions& opt = {});

struct DiagCoefficients {
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
};
DiagCoefficients diag2_coefficients(const HodographProblem& p, const Vector& m);

/// Roots of the diag(a1, a2) equation by the polynomial route (nullopt if a1/a2
/// is not a small rational) and by bisection; exposed for cross-checking.
std::optional<std::vector<double>> diag2_times_polynomial(double a1, double a2, const DiagCoefficients& k);
std::vector<double> diag2_times_bisection(const HodographProblem& p, const Vector& m, double t_max, double dt);

/// First zero of blowup_residual along fixed M for t in (0, t_max] (or
/// [t_max, 0) when t_max < 0), located by stepping and bisection.
std::optional<double> first_blowup_time(const HodographProblem& p, const Vector& m, double t_max,
                                        double dt = 1e-2);

/// Generic single sheet: first positive blow-up time per M.
BlowupSheet sheet_generic(const HodographProblem& p, const std::vector<Vector>& grid,
                          const ScanOptions& opt = {});

/// Picks the analytic sheet builder matching A, else sheet_generic.
std::vector<BlowupSheet> scan_blowup(const HodographProblem& p, const std::vector<Vector>& grid,
                                     const ScanOptions& opt = {});

struct Catastrophe {
  double t = 0.0;
  Vector M;
  Vector x;
  Vector u;
  std::string branch;
};

/// Smallest positive blow-up time over all sheets, refined; x* from the
/// hodograph equation and u* = u_from_M. nullopt when no sheet has t > 0.
std::optional<Catastrophe> min_blowup_time(const HodographProblem& p, const std::vector<BlowupSheet>& sheets);

/// Convenience: m_grid + scan_blowup + min_blowup_time.
std::optional<Catastrophe> find_catastrophe(const HodographProblem& p, const ScanOptions& opt = {});

}  // namespace hodo
