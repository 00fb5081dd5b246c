#include "hodo/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hodo::search {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double value_or_inf(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? *v : kInf;
}

}  // namespace

Min1 golden_min(const Objective1& f, double a, double b, double xtol, int max_iter) {
  if (a > b) std::swap(a, b);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = value_or_inf(f(c));
  double fd = value_or_inf(f(d));
  for (int it = 0; it < max_iter && (b - a) > xtol * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = value_or_inf(f(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = value_or_inf(f(d));
    }
  }
  return fc <= fd ? Min1{c, fc} : Min1{d, fd};
}

double bisect(const std::function<double(double)>& f, double a, double b, double xtol, int max_iter) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw std::invalid_argument("bisect: no sign change on the bracket");
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b || std::abs(b - a) <= xtol * std::max(1.0, std::abs(m))) return m;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

std::optional<double> first_root(const std::function<double(double)>& f, double a, double b, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("first_root: dt must be positive");
  const double dir = b >= a ? 1.0 : -1.0;
  const auto steps = static_cast<long>(std::ceil(std::abs(b - a) / dt));
  double prev_t = a;
  double prev_f = f(a);
  for (long k = 1; k <= steps; ++k) {
    const double t = k == steps ? b : a + dir * dt * static_cast<double>(k);
    const double ft = f(t);
    if (!std::isfinite(ft)) return std::nullopt;
    if (ft == 0.0) return t;
    if (prev_f != 0.0 && (ft > 0.0) != (prev_f > 0.0)) return bisect(f, prev_t, t);
    prev_t = t;
    prev_f = ft;
  }
  return std::nullopt;
}

std::vector<double> interior_grid(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 1) / (n + 1.0);
  return out;
}

MinN refine_min(const ObjectiveN& f, const Vector& x0, const Vector& lo, const Vector& hi, double h) {
  const auto n = x0.size();
  auto F = [&](const Vector& x) { return value_or_inf(f(x)); };
  auto inside = [&](const Vector& x) { return ((x - lo).array() > 0.0).all() && ((hi - x).array() > 0.0).all(); };

  Vector x = x0;
  double fx = F(x);
  double radius = h;
  for (int sweep = 0; sweep < 200 && radius > 1e-13; ++sweep) {
    const double before = fx;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::max(lo(i), x(i) - radius);
      const double b = std::min(hi(i), x(i) + radius);
      Vector trial = x;
      const Min1 m = golden_min(
          [&](double s) -> std::optional<double> {
            trial(i) = s;
            return F(trial);
          },
          a, b, 1e-14);
      if (m.f <= fx) {
        x(i) = m.x;
        fx = m.f;
      }
    }
    const double moved = before - fx;
    if (moved <= 1e-15 * std::max(1.0, std::abs(fx))) radius *= 0.25;
  }

  // Newton polish on the stationarity condition.
  for (int it = 0; it < 30; ++it) {
    const double e = 1e-5 * std::max(1.0, x.cwiseAbs().maxCoeff());
    Vector grad(n);
    Matrix hess(n, n);
    bool ok = true;
    for (Eigen::Index i = 0; i < n && ok; ++i) {
      Vector xp = x, xm = x;
      xp(i) += e;
      xm(i) -= e;
      const double fp = F(xp), fm = F(xm);
      ok = std::isfinite(fp) && std::isfinite(fm);
      grad(i) = (fp - fm) / (2 * e);
      hess(i, i) = (fp - 2 * fx + fm) / (e * e);
      for (Eigen::Index j = 0; j < i && ok; ++j) {
        Vector pp = x, pm = x, mp = x, mm = x;
        pp(i) += e, pp(j) += e;
        pm(i) += e, pm(j) -= e;
        mp(i) -= e, mp(j) += e;
        mm(i) -= e, mm(j) -= e;
        const double v = (F(pp) - F(pm) - F(mp) + F(mm)) / (4 * e * e);
        ok = std::isfinite(v);
        hess(i, j) = hess(j, i) = v;
      }
    }
    if (!ok) break;
    Eigen::LLT<Matrix> llt(hess);
    if (llt.info() != Eigen::Success) break;
    const Vector step = llt.solve(grad);
    if (!step.allFinite() || step.norm() > h) break;
    Vector trial = x - step;
    if (!inside(trial)) break;
    const double ft = F(trial);
    if (!(ft <= fx + 1e-15 * std::max(1.0, std::abs(fx)))) break;
    const double size = step.norm();
    x = trial;
    fx = ft;
    if (size < 1e-12) break;
  }
  return {x, fx};
}

}  // namespace hodo::search
