#include "hodo/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace hodo {

namespace {

void check_pair(const Vector& x0, const Vector& u0, int n, const char* what) {
  if (x0.size() != n || u0.size() != n) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  if (!x0.allFinite() || !u0.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace

FlowResult exact_flow(const ForceSpec& spec, const Vector& x0, const Vector& u0, double t) {
  check_pair(x0, u0, spec.dim(), "exact_flow");
  if (!std::isfinite(t)) throw std::invalid_argument("exact_flow: non-finite t");
  const Matrix& a = spec.A();
  const Matrix p1 = phi1(a, t);
  FlowResult r;
  r.t = t;
  r.u = mat_exp(a, t) * u0 + p1 * spec.g();
  r.x = x0 + p1 * u0 + phi2(a, t) * spec.g();
  return r;
}

FlowResult rk4_flow(const ForceField& force, const Vector& x0, const Vector& u0, double t, double dt, long max_steps) {
  check_pair(x0, u0, static_cast<int>(x0.size()), "rk4_flow");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("rk4_flow: dt must be positive");
  if (!std::isfinite(t)) throw std::invalid_argument("rk4_flow: non-finite t");
  const double need = std::ceil(std::abs(t) / dt - 1e-9);
  if (need > static_cast<double>(max_steps)) throw std::overflow_error("rk4_flow: too many steps");
  const long steps = std::max(1L, static_cast<long>(need));
  const double h = t / static_cast<double>(steps);

  Vector x = x0;
  Vector u = u0;
  double s = 0.0;
  for (long i = 0; i < steps; ++i) {
    const Vector k1x = u;
    const Vector k1u = force(s, x, u);
    const Vector k2x = u + 0.5 * h * k1u;
    const Vector k2u = force(s + 0.5 * h, x + 0.5 * h * k1x, k2x);
    const Vector k3x = u + 0.5 * h * k2u;
    const Vector k3u = force(s + 0.5 * h, x + 0.5 * h * k2x, k3x);
    const Vector k4x = u + h * k3u;
    const Vector k4u = force(s + h, x + h * k3x, k4x);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    s = h * static_cast<double>(i + 1);
  }
  FlowResult r;
  r.t = t;
  r.x = std::move(x);
  r.u = std::move(u);
  return r;
}

FlowResult rk4_flow(const ForceSpec& spec, const Vector& x0, const Vector& u0, double t, double dt, long max_steps) {
  check_pair(x0, u0, spec.dim(), "rk4_flow");
  const Matrix a = spec.A();
  const Vector g = spec.g();
  return rk4_flow([a, g](double, const Vector&, const Vector& u) -> Vector { return g + a * u; }, x0, u0, t, dt,
                  max_steps);
}

double flow_jacobian_det(const ForceSpec& spec, const InitialData& data, const Vector& x0, double t) {
  if (x0.size() != spec.dim() || data.dim() != spec.dim()) throw std::invalid_argument("flow_jacobian_det: dimension mismatch");
  const int n = spec.dim();
  return (Matrix::Identity(n, n) + phi1(spec.A(), t) * data.u0_jacobian(x0)).determinant();
}

double pde_residual(const VelocityField& u, const ForceSpec& spec, double t, const Vector& x, double h) {
  const int n = spec.dim();
  if (x.size() != n) throw std::invalid_argument("pde_residual: dimension mismatch");
  if (!(h > 0.0)) throw std::invalid_argument("pde_residual: h must be positive");
  const Vector u0 = u(t, x);
  Vector res = (u(t + h, x) - u(t - h, x)) / (2.0 * h);
  for (int k = 0; k < n; ++k) {
    Vector xp = x;
    Vector xm = x;
    xp(k) += h;
    xm(k) -= h;
    res += u0(k) * (u(t, xp) - u(t, xm)) / (2.0 * h);
  }
  res -= spec.g() + spec.A() * u0;
  return res.cwiseAbs().maxCoeff();
}

}  // namespace hodo
