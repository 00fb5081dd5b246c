#pragma once

// One- and few-dimensional search primitives shared by the blow-up and
// periodicity code. Objectives may return nullopt to mark a point as
// infeasible; such points are treated as +infinity.

#include <functional>
#include <optional>

#include "hodo/matops.hpp"

namespace hodo::search {

using Objective1 = std::function<std::optional<double>(double)>;
using ObjectiveN = std::function<std::optional<double>(const Vector&)>;

struct Min1 {
  double x;
  double f;
};

struct MinN {
  Vector x;
  double f;
};

/// Golden-section minimisation of a unimodal f on [a, b].
Min1 golden_min(const Objective1& f, double a, double b, double xtol = 1e-12, int max_iter = 200);

/// Root of f on [a, b] by bisection; requires f(a) f(b) <= 0.
/// Stops when the bracket is below xtol or f vanishes exactly.
double bisect(const std::function<double(double)>& f, double a, double b, double xtol = 1e-15,
              int max_iter = 200);

/// First sign change of f on (a, b] found by stepping with dt, refined by bisection.
/// Returns nullopt if none is found. Works for a > b as well (scans backwards).
std::optional<double> first_root(const std::function<double(double)>& f, double a, double b, double dt);

/// Points lo + (hi - lo) (i + 1) / (n + 1), i = 0..n-1: n interior points.
std::vector<double> interior_grid(double lo, double hi, int n);

/// Local minimisation inside the box [lo, hi] starting at x0: cyclic golden
/// searches with radius h, then Newton steps on a finite-difference gradient.
MinN refine_min(const ObjectiveN& f, const Vector& x0, const Vector& lo, const Vector& hi, double h);

}  // namespace hodo::search
