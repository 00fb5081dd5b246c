#include "hodo/periodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hodo {

namespace {

// Best rational approximation p/q of x >= 0 with q <= max_den, if within tol.
std::optional<std::pair<long, long>> rationalize(double x, double tol, int max_den) {
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(r);
    const long a = static_cast<long>(fl);
    const long h2 = a * h1 + h0;
    const long k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol * std::max(1.0, x)) {
      return std::make_pair(h1, k1);
    }
    const double frac = r - fl;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

double distance_to_identity(const Matrix& a, double t) {
  return max_abs(mat_exp(a, t) - Matrix::Identity(a.rows(), a.cols()));
}

constexpr double kPeriodTol = 1e-8;

}  // namespace

PeriodicityReport check_periodic(const Matrix& a, double rational_tol, int max_denominator) {
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("check_periodic: A must be square");
  if (!all_finite(a)) throw std::invalid_argument("check_periodic: A must be finite");
  if (!(rational_tol > 0.0) || max_denominator < 1) throw std::invalid_argument("check_periodic: bad tolerances");

  PeriodicityReport rep;
  const int n = static_cast<int>(a.rows());
  if (rank(a) < n) {
    rep.reason = "zero eigenvalue";
    return rep;
  }
  const Spectrum sp = eig(a);
  const double norm = std::max(max_abs(a), 1e-300);
  double lambda_ref = std::numeric_limits<double>::infinity();
  bool any_complex = false;
  for (const Complex& nu : sp.eigenvalues) {
    if (std::abs(nu.imag()) > rational_tol * norm) any_complex = true;
  }
  if (!any_complex) {
    rep.reason = "real eigenvalues";
    return rep;
  }
  for (const Complex& nu : sp.eigenvalues) {
    if (std::abs(nu.real()) > rational_tol * norm) {
      rep.reason = "eigenvalue with nonzero real part";
      return rep;
    }
    lambda_ref = std::min(lambda_ref, std::abs(nu.imag()));
  }
  if (!sp.diagonalizable) {
    rep.reason = "not diagonalizable";
    return rep;
  }
  rep.lambda_ref = lambda_ref;

  long l = 1;
  for (const Complex& nu : sp.eigenvalues) {
    const auto pq = rationalize(std::abs(nu.imag()) / lambda_ref, rational_tol, max_denominator);
    if (!pq) {
      rep.reason = "irrational eigenvalue ratio";
      return rep;
    }
    rep.ratios.push_back({nu, pq->first, pq->second});
    l = std::lcm(l, pq->second);
    if (l > 1'000'000) {
      rep.reason = "irrational eigenvalue ratio";
      return rep;
    }
  }

  const double t_full = 2.0 * std::numbers::pi * static_cast<double>(l) / lambda_ref;
  if (distance_to_identity(a, t_full) > kPeriodTol) {
    rep.reason = "e^{TA} != I at the candidate period";
    return rep;
  }
  double period = t_full;
  for (int d = std::min<long>(max_denominator, 1'000'000); d >= 2; --d) {
    if (distance_to_identity(a, t_full / d) <= kPeriodTol) {
      period = t_full / d;
      break;
    }
  }
  rep.periodic = true;
  rep.period = period;
  return rep;
}

Matrix make_periodic_2d(double lambda, double a11, double a12) {
  if (a12 == 0.0) throw std::invalid_argument("make_periodic_2d: A12 must be nonzero");
  if (!std::isfinite(lambda) || !std::isfinite(a11) || !std::isfinite(a12)) {
    throw std::invalid_argument("make_periodic_2d: non-finite parameter");
  }
  Matrix a(2, 2);
  a << a11, a12, -(1.0 + a11 * a11) / a12, -a11;
  return lambda * a;
}

Matrix make_periodic_4d(Periodic4D kind, double lambda) {
  Matrix a = Matrix::Zero(4, 4);
  if (kind == Periodic4D::BlockRotation) {
    a(0, 1) = 1.0;
    a(1, 0) = -1.0;
    a(2, 3) = 1.0;
    a(3, 2) = -1.0;
  } else {
    a(0, 2) = 1.0;
    a(1, 3) = 1.0;
    a(2, 0) = -1.0;
    a(3, 1) = -1.0;
  }
  return lambda * a;
}

PeriodVerification verify_solution_period(const HodographProblem& p, double period,
                                          const std::vector<std::pair<double, Vector>>& samples, double tol,
                                          int steps) {
  if (max_abs(p.spec().g()) != 0.0) throw std::invalid_argument("verify_solution_period: requires g = 0");
  if (!(period > 0.0)) throw std::invalid_argument("verify_solution_period: period must be positive");
  const auto factory = detail::generic_factory(p.spec());
  PeriodVerification out;
  out.passed = !samples.empty();
  for (const auto& [t, x] : samples) {
    PeriodPoint pt;
    pt.t = t;
    pt.x = x;
    const SolveResult start = solve_u(p, t, x);
    if (!start.ok()) {
      pt.failure = "solve failed at t: " + to_string(start.status);
    } else {
      pt.u_t = start.state.u;
      const detail::MarchResult m = detail::march(p, t, t + period, x, start.M, factory, steps);
      if (!m.end.ok()) {
        pt.failure = "continuation failed at t = " + std::to_string(m.reached) + ": " + to_string(m.end.status);
      } else if (m.crossed_blowup) {
        pt.failure = "blow-up surface crossed between t and t + T";
      } else {
        pt.u_tT = m.end.state.u;
        pt.difference = max_abs(pt.u_tT - pt.u_t);
        pt.ok = pt.difference <= tol;
        out.max_difference = std::max(out.max_difference, pt.difference);
      }
    }
    if (!pt.ok) out.passed = false;
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace hodo
