#include "hodo/hodograph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hodo {

namespace {

void require_generic(const ForceSpec& spec) {
  if (spec.degenerate() && !spec.a_is_zero()) {
    throw DegenerateSpecError(
        "rank(A) < n: M and N need the degenerate basis (use hodo/degenerate.hpp)");
  }
}

void check_state(const ForceSpec& spec, double t, const Vector& v, const char* what) {
  if (v.size() != spec.dim()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  if (!std::isfinite(t) || !v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

// Restriction of a vector or matrix to the active components.
Vector take(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

Matrix take(const Matrix& m, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Matrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return out;
}

Vector put(const InitialData& data, const Vector& active_values) {
  Vector m = data.pinned();
  const auto& idx = data.active();
  for (std::size_t i = 0; i < idx.size(); ++i) m(idx[i]) = active_values(static_cast<Eigen::Index>(i));
  return m;
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vector masked_residual(const InitialData& data, const Vector& n_val, const Vector& m) {
  Vector r = n_val - data.phi(m);
  if (data.has_constant()) {
    Vector masked = Vector::Zero(r.size());
    for (int i : data.active()) masked(i) = r(i);
    return masked;
  }
  return r;
}

SolveResult finish(const detail::LinearHodograph& sys, double t, const Vector& x, const Vector& m, int iters,
                   SolveStatus status, double res) {
  SolveResult r;
  r.M = m;
  r.iterations = iters;
  r.status = status;
  r.residual_norm = res;
  r.state.t = t;
  r.state.x = x;
  r.state.u = sys.u_of_m(m);
  return r;
}

// Starting point: u0(x) followed by fixed-point sweeps M <- u0(N(M)); N(M) is
// the foot of the characteristic through x labelled by M.
Vector default_guess(const InitialData& data, const detail::LinearHodograph& sys, const Vector& x) {
  Vector m = data.x_in_domain(x) ? data.u0(x) : data.pinned();
  m = data.clip_to_domain(m);
  double best = std::numeric_limits<double>::infinity();
  Vector best_m = m;
  for (int k = 0; k < 12; ++k) {
    const Vector foot = sys.n_of_m(m);
    double res;
    try {
      res = inf_norm(masked_residual(data, foot, m));
    } catch (const DomainError&) {
      break;
    }
    if (res < best) {
      best = res;
      best_m = m;
    }
    if (!data.x_in_domain(foot)) break;
    m = data.clip_to_domain(data.u0(foot));
  }
  return best_m;
}

detail::LinearHodograph generic_system(const ForceSpec& spec, double t, const Vector& x) {
  const Matrix p1 = phi1(spec.A(), t);
  const Matrix e = mat_exp(spec.A(), t);
  const Vector shift = phi2(spec.A(), t) * spec.g();
  const Vector drift = p1 * spec.g();
  detail::LinearHodograph sys;
  sys.n_of_m = [x, p1, shift](const Vector& m) -> Vector { return x - p1 * m - shift; };
  sys.dn_dm = -p1;
  sys.u_of_m = [e, drift](const Vector& m) -> Vector { return e * m + drift; };
  return sys;
}

}  // namespace

HodographProblem::HodographProblem(ForceSpec spec, InitialData data, SolverOptions options)
    : spec_(std::move(spec)), data_(std::move(data)), options_(options) {
  if (spec_.dim() != data_.dim()) throw std::invalid_argument("HodographProblem: spec and data dimensions differ");
  if (!(options_.newton_tol > 0.0)) throw std::invalid_argument("HodographProblem: newton_tol must be positive");
  if (options_.max_iter < 1) throw std::invalid_argument("HodographProblem: max_iter must be at least 1");
  if (options_.grid_points < 3) throw std::invalid_argument("HodographProblem: grid_points must be at least 3");
}

Vector M_from_u(const ForceSpec& spec, double t, const Vector& u) {
  check_state(spec, t, u, "M_from_u");
  return mat_exp(spec.A(), -t) * u + phi1(spec.A(), -t) * spec.g();
}

Vector u_from_M(const ForceSpec& spec, double t, const Vector& m) {
  check_state(spec, t, m, "u_from_M");
  return mat_exp(spec.A(), t) * m + phi1(spec.A(), t) * spec.g();
}

Vector N_from_M(const ForceSpec& spec, double t, const Vector& x, const Vector& m) {
  check_state(spec, t, x, "N_from_M");
  return x - phi1(spec.A(), t) * m - phi2(spec.A(), t) * spec.g();
}

IntegralValues integrals(const ForceSpec& spec, const StateSample& s) {
  check_state(spec, s.t, s.x, "integrals");
  check_state(spec, s.t, s.u, "integrals");
  IntegralValues out;
  out.I1 = s.u - spec.g() * s.t - spec.A() * s.x;
  out.I2 = mat_exp(spec.A(), -s.t) * (spec.g() + spec.A() * s.u);
  require_generic(spec);
  out.M = M_from_u(spec, s.t, s.u);
  out.N = N_from_M(spec, s.t, s.x, out.M);
  return out;
}

Vector residual_M(const HodographProblem& p, double t, const Vector& x, const Vector& m) {
  require_generic(p.spec());
  Vector r = N_from_M(p.spec(), t, x, m) - p.data().phi(m);
  if (p.data().has_constant()) {
    Vector masked = Vector::Zero(r.size());
    for (int i : p.data().active()) masked(i) = r(i);
    return masked;
  }
  return r;
}

Vector residual_u(const HodographProblem& p, double t, const Vector& x, const Vector& u) {
  require_generic(p.spec());
  const Matrix& a = p.spec().A();
  Vector r = x + phi1(a, -t) * u + phi2(a, -t) * p.spec().g() - p.data().phi(M_from_u(p.spec(), t, u));
  if (p.data().has_constant()) {
    Vector masked = Vector::Zero(r.size());
    for (int i : p.data().active()) masked(i) = r(i);
    return masked;
  }
  return r;
}

Matrix residual_jacobian(const HodographProblem& p, double t, const Vector& m) {
  return -(phi1(p.spec().A(), t) + p.data().phi_jacobian(m));
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "CONVERGED";
    case SolveStatus::NoConvergence: return "NO_CONVERGENCE";
    case SolveStatus::JacobianSingular: return "JACOBIAN_SINGULAR";
    case SolveStatus::DomainExit: return "DOMAIN_EXIT";
  }
  return "UNKNOWN";
}

namespace detail {

SolveResult newton_core(const HodographProblem& p, double t, const Vector& x, const Vector& m0,
                        const LinearHodograph& sys) {
  const InitialData& data = p.data();
  const auto& act = data.active();
  const double tol = p.options().newton_tol;
  const Matrix dn = take(sys.dn_dm, act);
  auto res = [&](const Vector& m) { return take(masked_residual(data, sys.n_of_m(m), m), act); };

  Vector m = m0;
  for (int i = 0; i < data.dim(); ++i) {
    if (std::find(act.begin(), act.end(), i) == act.end()) m(i) = data.pinned()(i);
  }
  if (act.empty()) return finish(sys, t, x, m, 0, SolveStatus::Converged, 0.0);
  if (!data.in_domain(m)) {
    return finish(sys, t, x, m, 0, SolveStatus::DomainExit, std::numeric_limits<double>::infinity());
  }

  Vector r = res(m);
  double rn = inf_norm(r);
  const double scale = std::max(1.0, inf_norm(x));
  for (int it = 0; it < p.options().max_iter; ++it) {
    if (rn <= tol * scale) return finish(sys, t, x, m, it, SolveStatus::Converged, rn);
    const Matrix j = dn - take(data.phi_jacobian(m), act);
    Eigen::PartialPivLU<Matrix> lu(j);
    if (!(lu.rcond() > 1e-13) || !j.allFinite()) {
      return finish(sys, t, x, m, it, SolveStatus::JacobianSingular, rn);
    }
    const Vector step = lu.solve(r);
    double lambda = 1.0;
    bool accepted = false;
    bool left_domain = false;
    for (int half = 0; half <= 8; ++half, lambda *= 0.5) {
      const Vector trial = put(data, take(m, act) - lambda * step);
      if (!data.in_domain(trial)) {
        left_domain = true;
        continue;
      }
      const Vector rt = res(trial);
      const double rtn = inf_norm(rt);
      if (rtn < rn || (half == 8 && rtn <= rn * (1.0 + 1e-12))) {
        m = trial;
        r = rt;
        rn = rtn;
        accepted = true;
        break;
      }
      left_domain = false;
    }
    if (!accepted) {
      if (rn <= 1e3 * tol * scale) return finish(sys, t, x, m, it + 1, SolveStatus::Converged, rn);
      return finish(sys, t, x, m, it + 1, left_domain ? SolveStatus::DomainExit : SolveStatus::NoConvergence, rn);
    }
  }
  return finish(sys, t, x, m, p.options().max_iter,
                rn <= tol * scale ? SolveStatus::Converged : SolveStatus::NoConvergence, rn);
}

SolveResult solve_core(const HodographProblem& p, double t, const Vector& x, const std::optional<Vector>& guess,
                       const SystemFactory& factory) {
  const InitialData& data = p.data();
  const LinearHodograph sys = factory(t, x);
  const Vector start = guess ? data.clip_to_domain(*guess) : default_guess(data, sys, x);
  SolveResult direct = newton_core(p, t, x, start, sys);
  if (direct.ok() || guess || !data.x_in_domain(x)) return direct;

  // Continuation in time from the exact value M = u0(x) at t = 0.
  for (int steps : {8, 32, 128}) {
    Vector m = data.clip_to_domain(data.u0(x));
    SolveResult last;
    bool ok = true;
    int total = 0;
    for (int k = 1; k <= steps; ++k) {
      const double tk = t * k / steps;
      last = newton_core(p, tk, x, m, factory(tk, x));
      total += last.iterations;
      if (!last.ok()) {
        ok = false;
        break;
      }
      m = last.M;
    }
    if (ok || last.status == SolveStatus::JacobianSingular) {
      last.iterations = total;
      return last;
    }
  }
  return direct;
}

MarchResult march(const HodographProblem& p, double t0, double t1, const Vector& x, const Vector& m0,
                  const SystemFactory& factory, int steps) {
  if (steps < 1) throw std::invalid_argument("march: steps must be positive");
  const InitialData& data = p.data();
  const auto& act = data.active();
  auto jac_det = [&](const LinearHodograph& sys, const Vector& m) {
    if (act.empty()) return 1.0;
    return (take(sys.dn_dm, act) - take(data.phi_jacobian(m), act)).determinant();
  };
  MarchResult out;
  LinearHodograph sys0 = factory(t0, x);
  out.end = newton_core(p, t0, x, m0, sys0);
  out.reached = t0;
  if (!out.end.ok()) return out;
  double prev = jac_det(sys0, out.end.M);
  for (int k = 1; k <= steps; ++k) {
    const double tk = t0 + (t1 - t0) * k / steps;
    const LinearHodograph sys = factory(tk, x);
    SolveResult r = newton_core(p, tk, x, out.end.M, sys);
    r.iterations += out.end.iterations;
    if (!r.ok()) {
      out.end = r;
      return out;
    }
    const double d = jac_det(sys, r.M);
    if (d * prev <= 0.0) out.crossed_blowup = true;
    prev = d;
    out.end = r;
    out.reached = tk;
  }
  return out;
}

SystemFactory generic_factory(const ForceSpec& spec) {
  return [spec](double t, const Vector& x) { return generic_system(spec, t, x); };
}

}  // namespace detail

SolveResult newton_M(const HodographProblem& p, double t, const Vector& x, const Vector& m0) {
  require_generic(p.spec());
  check_state(p.spec(), t, x, "solve_u");
  if (m0.size() != p.dim()) throw std::invalid_argument("solve_u: guess has wrong dimension");
  return detail::newton_core(p, t, x, m0, generic_system(p.spec(), t, x));
}

SolveResult solve_u(const HodographProblem& p, double t, const Vector& x, const std::optional<Vector>& guess_M) {
  require_generic(p.spec());
  check_state(p.spec(), t, x, "solve_u");
  if (guess_M && guess_M->size() != p.dim()) throw std::invalid_argument("solve_u: guess has wrong dimension");
  const ForceSpec& spec = p.spec();
  return detail::solve_core(p, t, x, guess_M,
                            [&spec](double tt, const Vector& xx) { return generic_system(spec, tt, xx); });
}

Vector closed_form(const ClosedFormKind& kind, const ForceSpec& spec, double t, const Vector& x) {
  check_state(spec, t, x, "closed_form");
  const Matrix& a = spec.A();
  const Vector& g = spec.g();
  auto check = [&](const Vector& v) {
    if (v.size() != spec.dim()) throw std::invalid_argument("closed_form: constant vector has wrong dimension");
  };
  if (const auto* k = std::get_if<ConstI1>(&kind)) {
    check(k->alpha);
    return g * t + a * x + k->alpha;
  }
  if (const auto* k = std::get_if<ConstI2>(&kind)) {
    check(k->beta);
    if (spec.rank() < spec.dim()) throw SingularMatrixError("closed_form: const_I2 needs invertible A");
    return solve(a, mat_exp(a, t) * k->beta - g);
  }
  if (const auto* k = std::get_if<ConstM>(&kind)) {
    check(k->gamma);
    return mat_exp(a, t) * k->gamma + phi1(a, t) * g;
  }
  const auto& k = std::get<ConstN>(kind);
  check(k.delta);
  return solve(-phi1(a, -t), x - k.delta + phi2(a, -t) * g);
}

StateSample to_bar_variables(const ForceSpec& spec, const StateSample& s) {
  if (!spec.scalar_a()) throw std::invalid_argument("to_bar_variables: A must be a multiple of the identity");
  const double a = spec.scalar_value();
  StateSample out;
  out.t = phi1(a, s.t);
  out.x = s.x - phi2(a, s.t) * spec.g();
  out.u = M_from_u(spec, s.t, s.u);
  return out;
}

HodographProblem homogeneous_problem(const HodographProblem& p) {
  const int n = p.dim();
  return HodographProblem(ForceSpec(Matrix::Zero(n, n), Vector::Zero(n)), p.data(), p.options());
}

}  // namespace hodo
