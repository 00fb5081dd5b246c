#pragma once

// Independent ground truth: characteristic flows (closed form and RK4), the
// flow-map Jacobian whose zeros mark gradient catastrophes, and a
// finite-difference residual of the PDE u_t + (u.grad)u = g + A u.

#include <functional>
#include <optional>

#include "hodo/model.hpp"

namespace hodo {

struct FlowResult {
  double t = 0.0;
  Vector x;
  Vector u;
  /// det(dx(t)/dx0), when computed.
  std::optional<double> jacobian_det;
};

/// u(t) = e^{tA} u0 + phi1(A,t) g,  x(t) = x0 + phi1(A,t) u0 + phi2(A,t) g.
FlowResult exact_flow(const ForceSpec& spec, const Vector& x0, const Vector& u0, double t);

/// Acceleration F/rho as a function of (t, x, u).
using ForceField = std::function<Vector(double t, const Vector& x, const Vector& u)>;

/// Fixed-step classical RK4 for x' = u, u' = F. The step is the largest
/// h <= dt dividing |t| evenly; t may be negative. Throws when more than
/// max_steps steps would be needed.
FlowResult rk4_flow(const ForceField& force, const Vector& x0, const Vector& u0, double t, double dt,
                    long max_steps = 100'000'000);
FlowResult rk4_flow(const ForceSpec& spec, const Vector& x0, const Vector& u0, double t, double dt,
                    long max_steps = 100'000'000);

/// det(I + phi1(A,t) Du0(x0)) for the flow started from (x0, u0(x0)).
double flow_jacobian_det(const ForceSpec& spec, const InitialData& data, const Vector& x0, double t);

/// Velocity field (t, x) -> u.
using VelocityField = std::function<Vector(double t, const Vector& x)>;

/// Max norm of u_t + (Du) u - g - A u with central differences of step h.
double pde_residual(const VelocityField& u, const ForceSpec& spec, double t, const Vector& x, double h = 1e-4);

}  // namespace hodo
