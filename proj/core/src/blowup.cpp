#include "hodo/blowup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "hodo/search.hpp"

namespace hodo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix active_block(const Matrix& m, const std::vector<int>& act) {
  const auto k = static_cast<Eigen::Index>(act.size());
  Matrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = m(act[static_cast<std::size_t>(i)], act[static_cast<std::size_t>(j)]);
  return out;
}

double active_det(const Matrix& m, const std::vector<int>& act) {
  if (act.size() == static_cast<std::size_t>(m.rows())) return det(m);
  return det(active_block(m, act));
}

// Finite search box over the active coordinates.
struct ActiveBox {
  Vector lo;
  Vector hi;
  double spacing = 0.0;
};

ActiveBox active_box(const InitialData& data, int points, double unbounded_range) {
  const Box box = data.m_box();
  const auto& act = data.active();
  ActiveBox out{Vector(static_cast<Eigen::Index>(act.size())), Vector(static_cast<Eigen::Index>(act.size())), 0.0};
  for (std::size_t k = 0; k < act.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out.lo(i) = std::isfinite(box.lo(act[k])) ? box.lo(act[k]) : -unbounded_range;
    out.hi(i) = std::isfinite(box.hi(act[k])) ? box.hi(act[k]) : unbounded_range;
    out.spacing = std::max(out.spacing, (out.hi(i) - out.lo(i)) / (points + 1.0));
  }
  return out;
}

Vector to_full(const InitialData& data, const Vector& active_values) {
  Vector m = data.pinned();
  const auto& act = data.active();
  for (std::size_t k = 0; k < act.size(); ++k) m(act[k]) = active_values(static_cast<Eigen::Index>(k));
  return m;
}

Vector to_active(const InitialData& data, const Vector& m) {
  const auto& act = data.active();
  Vector out(static_cast<Eigen::Index>(act.size()));
  for (std::size_t k = 0; k < act.size(); ++k) out(static_cast<Eigen::Index>(k)) = m(act[k]);
  return out;
}

int grid_side(const HodographProblem& p, const std::vector<Vector>& grid) {
  const auto d = p.data().active().size();
  if (d == 0) return p.options().grid_points;
  return std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(grid.size()), 1.0 / static_cast<double>(d)))));
}

// Fills sheet.extremum from the samples, then refines with time_at.
void finalize_sheet(const HodographProblem& p, BlowupSheet& sheet, const ScanOptions& opt, int side) {
  const SheetSample* best_pos = nullptr;
  const SheetSample* best_neg = nullptr;
  for (const auto& s : sheet.samples) {
    if (!s.t) continue;
    if (*s.t > 0.0 && (!best_pos || *s.t < *best_pos->t)) best_pos = &s;
    if (*s.t < 0.0 && (!best_neg || *s.t > *best_neg->t)) best_neg = &s;
  }
  const SheetSample* seed = best_pos ? best_pos : best_neg;
  if (!seed) return;
  const bool positive = best_pos != nullptr;
  SheetExtremum ext{seed->M, *seed->t, positive ? ExtremumKind::Min : ExtremumKind::Max};

  const InitialData& data = p.data();
  if (opt.refine && !data.active().empty()) {
    const ActiveBox box = active_box(data, side, 1.0);
    auto time_at = sheet.time_at;
    auto objective = [&](const Vector& a) -> std::optional<double> {
      const Vector m = to_full(data, a);
      if (!data.in_domain(m)) return std::nullopt;
      const auto t = time_at(m);
      if (!t) return std::nullopt;
      if (positive) return *t > 0.0 ? std::optional<double>(*t) : std::nullopt;
      return *t < 0.0 ? std::optional<double>(-*t) : std::nullopt;
    };
    const auto r = search::refine_min(objective, to_active(data, seed->M), box.lo, box.hi, box.spacing);
    if (std::isfinite(r.f)) {
      const double t = positive ? r.f : -r.f;
      if ((positive && t <= ext.t) || (!positive && t >= ext.t)) {
        ext.M = to_full(data, r.x);
        ext.t = t;
      }
    }
  }
  sheet.extremum = ext;
}

BlowupSheet make_sheet(const HodographProblem& p, const std::vector<Vector>& grid, std::string branch,
                       std::function<std::optional<double>(const Vector&)> time_at,
                       std::function<std::string(const Vector&)> why_absent, const ScanOptions& opt) {
  BlowupSheet sheet;
  sheet.branch = std::move(branch);
  sheet.validity = p.data().m_box();
  sheet.time_at = std::move(time_at);
  sheet.samples.reserve(grid.size());
  for (const auto& m : grid) {
    SheetSample s;
    s.M = m;
    if (!p.data().in_domain(m)) {
      s.absent_reason = "M outside the data domain";
    } else {
      s.t = sheet.time_at(m);
      if (!s.t) s.absent_reason = why_absent(m);
    }
    sheet.samples.push_back(std::move(s));
  }
  finalize_sheet(p, sheet, opt, grid_side(p, grid));
  return sheet;
}

// Coefficients c_0..c_n of det(tau I + F), ascending (Faddeev-LeVerrier on -F).
std::vector<double> char_poly_plus(const Matrix& f) {
  const auto n = f.rows();
  const Matrix b = -f;
  std::vector<double> c(static_cast<std::size_t>(n + 1), 0.0);
  c[static_cast<std::size_t>(n)] = 1.0;
  Matrix mk = Matrix::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    mk = b * mk + c[static_cast<std::size_t>(n - k + 1)] * Matrix::Identity(n, n);
    c[static_cast<std::size_t>(n - k)] = -(b * mk).trace() / static_cast<double>(k);
  }
  return c;
}

std::vector<double> diag_taus(const HodographProblem& p, const Vector& m) {
  const Matrix f = active_block(p.data().phi_jacobian(m), p.data().active());
  const auto c = char_poly_plus(f);
  return real_poly_roots(c);
}

std::optional<double> time_from_tau(double a, double tau) {
  if (a == 0.0) return tau;
  if (!(a * tau > -1.0)) return std::nullopt;
  return std::log1p(a * tau) / a;
}

bool is_coriolis2d(const Matrix& a) {
  return a.rows() == 2 && a(0, 0) == 0.0 && a(1, 1) == 0.0 && a(0, 1) == -a(1, 0) && a(0, 1) != 0.0;
}

bool is_diagonal(const Matrix& a) {
  return (a - Matrix(a.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

// Best continued-fraction approximation p/q of r with q <= qmax within rtol.
std::optional<std::pair<int, int>> small_rational(double r, int qmax, double rtol) {
  double x = r;
  long h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  for (int it = 0; it < 32; ++it) {
    const double fl = std::floor(x);
    const long a = static_cast<long>(fl);
    const long h = a * h0 + h1;
    const long k = a * k0 + k1;
    if (k > qmax) break;
    if (std::abs(r - static_cast<double>(h) / static_cast<double>(k)) <= rtol * std::max(1.0, std::abs(r))) {
      return std::make_pair(static_cast<int>(h), static_cast<int>(k));
    }
    h1 = h0, h0 = h, k1 = k0, k0 = k;
    const double frac = x - fl;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace

std::size_t BlowupSheet::present_count() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const SheetSample& s) { return s.t.has_value(); }));
}

double blowup_residual(const HodographProblem& p, double t, const Vector& m) {
  return active_det(phi1(p.spec().A(), t) + p.data().phi_jacobian(m), p.data().active());
}

Matrix K_matrix(const HodographProblem& p, double t, const Vector& m) {
  return (phi1(p.spec().A(), t) + p.data().phi_jacobian(m)) * mat_exp(p.spec().A(), -t);
}

std::vector<Vector> m_grid(const InitialData& data, int points_per_dim, double unbounded_range) {
  if (points_per_dim < 1) throw std::invalid_argument("m_grid: need at least one point per dimension");
  const auto& act = data.active();
  const auto d = act.size();
  if (d == 0) return {data.pinned()};
  // keep the tensor grid below ~2.5e5 points
  int side = points_per_dim;
  while (d > 1 && std::pow(static_cast<double>(side), static_cast<double>(d)) > 2.5e5) side = side * 3 / 4;
  const ActiveBox box = active_box(data, side, unbounded_range);
  std::vector<std::vector<double>> axes;
  for (std::size_t k = 0; k < d; ++k) {
    axes.push_back(search::interior_grid(box.lo(static_cast<Eigen::Index>(k)), box.hi(static_cast<Eigen::Index>(k)), side));
  }
  std::vector<Vector> out;
  std::vector<int> idx(d, 0);
  while (true) {
    Vector a(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) a(static_cast<Eigen::Index>(k)) = axes[k][static_cast<std::size_t>(idx[k])];
    out.push_back(to_full(data, a));
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++idx[k] < side) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
  }
}

// ---------------------------------------------------------------------------

BlowupSheet sheet_1d(const HodographProblem& p, const std::vector<Vector>& grid, const ScanOptions& opt) {
  if (p.dim() != 1) throw std::invalid_argument("sheet_1d: scalar problem required");
  const double a = p.spec().A()(0, 0);
  auto time_at = [a, data = p.data()](const Vector& m) -> std::optional<double> {
    if (!data.in_domain(m)) return std::nullopt;
    const double fp = data.phi_jacobian(m)(0, 0);
    if (a == 0.0) return -fp;
    if (!(1.0 - a * fp > 0.0)) return std::nullopt;
    return std::log1p(-a * fp) / a;
  };
  auto why = [](const Vector&) { return std::string("A*phi'(M) >= 1"); };
  return make_sheet(p, grid, "1d", time_at, why, opt);
}

Certificate certify_no_blowup_1d(const HodographProblem& p) {
  if (p.dim() != 1) throw std::invalid_argument("certify_no_blowup_1d: scalar problem required");
  const double a = p.spec().A()(0, 0);
  const InitialData& data = p.data();
  Certificate cert;
  if (data.active().empty()) {
    cert.certified = true;
    cert.reason = "constant data: dphi/dM vanishes identically";
    cert.worst_M = data.pinned();
    return cert;
  }
  auto objective = [&](const Vector& m) -> std::optional<double> {
    if (!data.in_domain(m)) return std::nullopt;
    return a * data.phi_jacobian(m)(0, 0);
  };
  const int n = p.options().grid_points;
  const auto grid = m_grid(data, n);
  Vector best = grid.front();
  double best_v = kInf;
  for (const auto& m : grid) {
    const auto v = objective(m);
    if (v && *v < best_v) {
      best_v = *v;
      best = m;
    }
  }
  const ActiveBox box = active_box(data, n, 1.0);
  const auto r = search::refine_min(objective, best, box.lo, box.hi, box.spacing);
  if (r.f < best_v) {
    best_v = r.f;
    best = r.x;
  }
  cert.worst_M = best;
  cert.worst_value = best_v;
  cert.certified = best_v > 1.0;
  cert.reason = cert.certified ? "A*phi'(M) > 1 on the whole M-domain"
                               : "A*phi'(M) <= 1 somewhere: a real blow-up time exists";
  return cert;
}

// ---------------------------------------------------------------------------

std::vector<BlowupSheet> sheets_diag(const HodographProblem& p, const std::vector<Vector>& grid, const ScanOptions& opt) {
  if (!p.spec().scalar_a()) throw std::invalid_argument("sheets_diag: A must be a multiple of the identity");
  const double a = p.spec().scalar_value();
  const int count = static_cast<int>(p.data().active().size());
  std::vector<BlowupSheet> out;
  for (int k = 0; k < count; ++k) {
    auto pp = std::make_shared<HodographProblem>(p);
    auto time_at = [pp, a, k](const Vector& m) -> std::optional<double> {
      if (!pp->data().in_domain(m)) return std::nullopt;
      const auto taus = diag_taus(*pp, m);
      if (k >= static_cast<int>(taus.size())) return std::nullopt;
      return time_from_tau(a, taus[static_cast<std::size_t>(k)]);
    };
    auto why = [pp, k](const Vector& m) {
      const auto taus = diag_taus(*pp, m);
      return k >= static_cast<int>(taus.size()) ? std::string("root is complex") : std::string("A*tau <= -1");
    };
    BlowupSheet sheet = make_sheet(p, grid, "tau" + std::to_string(k), time_at, why, opt);
    for (auto& s : sheet.samples) {
      if (!p.data().in_domain(s.M)) continue;
      const auto taus = diag_taus(p, s.M);
      if (k < static_cast<int>(taus.size())) s.tau = taus[static_cast<std::size_t>(k)];
    }
    out.push_back(std::move(sheet));
  }
  return out;
}

Certificate certify_branch_absent(const HodographProblem& p, int branch) {
  if (!p.spec().scalar_a()) throw std::invalid_argument("certify_branch_absent: A must be a multiple of the identity");
  const double a = p.spec().scalar_value();
  const InitialData& data = p.data();
  // minimise -a tau_k, i.e. find the largest a tau_k
  auto objective = [&](const Vector& act) -> std::optional<double> {
    const Vector m = to_full(data, act);
    if (!data.in_domain(m)) return std::nullopt;
    const auto taus = diag_taus(p, m);
    if (branch >= static_cast<int>(taus.size())) return std::nullopt;
    return -a * taus[static_cast<std::size_t>(branch)];
  };
  const int n = p.options().grid_points;
  const auto grid = m_grid(data, n);
  Certificate cert;
  double best = kInf;
  Vector best_m;
  for (const auto& m : grid) {
    const auto v = objective(to_active(data, m));
    if (v && *v < best) {
      best = *v;
      best_m = m;
    }
  }
  if (!std::isfinite(best)) {
    cert.certified = true;
    cert.reason = "root is never real on the M-domain";
    cert.worst_M = grid.front();
    return cert;
  }
  const ActiveBox box = active_box(data, grid_side(p, grid), 1.0);
  const auto r = search::refine_min(objective, to_active(data, best_m), box.lo, box.hi, box.spacing);
  if (r.f < best) {
    best = r.f;
    best_m = to_full(data, r.x);
  }
  cert.worst_M = best_m;
  cert.worst_value = -best;
  cert.certified = -best < -1.0;
  cert.reason = cert.certified ? "A*tau <= -1 on the whole M-domain" : "A*tau > -1 somewhere: branch is real";
  return cert;
}

// ---------------------------------------------------------------------------

CoriolisABC coriolis2d_abc(const HodographProblem& p, const Vector& m) {
  if (!is_coriolis2d(p.spec().A())) throw std::invalid_argument("coriolis2d_abc: A must be w [[0,1],[-1,0]]");
  const double w = p.spec().A()(0, 1);
  const Matrix f = p.data().phi_jacobian(m);
  CoriolisABC r;
  r.a = w * (f(0, 0) + f(1, 1));
  r.b = w * (f(1, 0) - f(0, 1)) - 2.0;
  r.c = -r.b + w * w * (f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0));
  return r;
}

CoriolisTimes coriolis2d_times(const CoriolisABC& abc, double omega, int k_lo, int k_hi) {
  const double a = abc.a, b = abc.b, c = abc.c;
  const double r2 = a * a + b * b;
  if (r2 == 0.0) throw std::invalid_argument("coriolis2d_times: a = b = 0");
  if (omega == 0.0) throw std::invalid_argument("coriolis2d_times: omega must be nonzero");
  CoriolisTimes out;
  const double disc = r2 - c * c;
  if (!(disc > 0.0)) {
    out.absent = true;
    out.reason = "a^2 + b^2 <= c^2";
    return out;
  }
  const double pi = std::numbers::pi;
  const double period = 2.0 * pi / std::abs(omega);
  auto res = [&](double th) { return std::abs(a * std::sin(th) + b * std::cos(th) + c); };
  auto candidates = [&](double sign) {
    const double s = std::clamp((-a * c + sign * std::abs(b) * std::sqrt(disc)) / r2, -1.0, 1.0);
    const double th = std::asin(s);
    std::array<double, 2> two{th, pi - th};
    if (res(two[1]) < res(two[0])) std::swap(two[0], two[1]);
    return two;
  };
  auto same_angle = [&](double x, double y) {
    const double d = std::remainder(x - y, 2.0 * pi);
    return std::abs(d) < 1e-10;
  };
  const auto plus = candidates(+1.0);
  auto minus = candidates(-1.0);
  double th_minus = minus[0];
  if (same_angle(th_minus, plus[0])) th_minus = minus[1];
  auto representative = [&](double th) {
    double t = std::fmod(th / omega, period);
    if (t <= 0.0) t += period;
    return t;
  };
  const double tp = representative(plus[0]);
  const double tm = representative(th_minus);
  for (int k = k_lo; k <= k_hi; ++k) {
    out.plus.push_back(tp + k * period);
    out.minus.push_back(tm + k * period);
  }
  return out;
}

std::vector<BlowupSheet> sheets_coriolis2d(const HodographProblem& p, const std::vector<Vector>& grid,
                                           const ScanOptions& opt) {
  if (!is_coriolis2d(p.spec().A())) throw std::invalid_argument("sheets_coriolis2d: A must be w [[0,1],[-1,0]]");
  if (p.data().has_constant()) throw std::invalid_argument("sheets_coriolis2d: constant components not supported");
  const double w = p.spec().A()(0, 1);
  auto pp = std::make_shared<HodographProblem>(p);
  std::vector<BlowupSheet> out;
  for (int sign : {+1, -1}) {
    auto time_at = [pp, w, sign](const Vector& m) -> std::optional<double> {
      if (!pp->data().in_domain(m)) return std::nullopt;
      const auto abc = coriolis2d_abc(*pp, m);
      if (abc.a == 0.0 && abc.b == 0.0) return std::nullopt;
      const auto times = coriolis2d_times(abc, w);
      if (times.absent) return std::nullopt;
      return sign > 0 ? times.plus.front() : times.minus.front();
    };
    auto why = [](const Vector&) { return std::string("a^2 + b^2 <= c^2"); };
    out.push_back(make_sheet(p, grid, sign > 0 ? "plus" : "minus", time_at, why, opt));
  }
  return out;
}

// ---------------------------------------------------------------------------

DiagCoefficients diag2_coefficients(const HodographProblem& p, const Vector& m) {
  const Matrix& a = p.spec().A();
  if (a.rows() != 2 || !is_diagonal(a)) throw std::invalid_argument("diag2_coefficients: A must be 2x2 diagonal");
  const double a1 = a(0, 0), a2 = a(1, 1);
  const Matrix f = p.data().phi_jacobian(m);
  DiagCoefficients k;
  k.K1 = a2 * f(1, 1) - 1.0;
  k.K2 = a1 * f(0, 0) - 1.0;
  k.K3 = 1.0 - a1 * f(0, 0) - a2 * f(1, 1) + a1 * a2 * (f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0));
  return k;
}

std::optional<std::vector<double>> diag2_times_polynomial(double a1, double a2, const DiagCoefficients& k) {
  if (a1 == 0.0 || a2 == 0.0) return std::nullopt;
  const auto pq = small_rational(a1 / a2, 6, 1e-12);
  if (!pq) return std::nullopt;
  const int pe = pq->first;
  const int qe = pq->second;
  const double s = a2 / qe;
  const int shift = -std::min({0, pe, pe + qe});
  const int deg = std::max({0, pe, qe, pe + qe}) + shift;
  if (deg > 12) return std::nullopt;
  std::vector<double> coeffs(static_cast<std::size_t>(deg + 1), 0.0);
  coeffs[static_cast<std::size_t>(pe + qe + shift)] += 1.0;
  coeffs[static_cast<std::size_t>(pe + shift)] += k.K1;
  coeffs[static_cast<std::size_t>(qe + shift)] += k.K2;
  coeffs[static_cast<std::size_t>(shift)] += k.K3;
  std::vector<double> times;
  for (double tau : real_poly_roots(coeffs)) {
    if (tau > 0.0) times.push_back(std::log(tau) / s);
  }
  std::sort(times.begin(), times.end());
  return times;
}

std::vector<double> diag2_times_bisection(const HodographProblem& p, const Vector& m, double t_max, double dt) {
  const Matrix& a = p.spec().A();
  const Matrix f = p.data().phi_jacobian(m);
  const double a1 = a(0, 0), a2 = a(1, 1);
  auto det_at = [&](double t) {
    const double p1 = phi1(a1, t), p2 = phi1(a2, t);
    return (p1 + f(0, 0)) * (p2 + f(1, 1)) - f(0, 1) * f(1, 0);
  };
  std::vector<double> roots;
  const auto steps = static_cast<long>(std::ceil(2.0 * t_max / dt));
  double t0 = -t_max;
  double f0 = det_at(t0);
  for (long i = 1; i <= steps; ++i) {
    const double t1 = i == steps ? t_max : -t_max + dt * static_cast<double>(i);
    const double f1 = det_at(t1);
    if (!std::isfinite(f1)) {
      t0 = t1;
      f0 = f1;
      continue;
    }
    if (f1 == 0.0) {
      roots.push_back(t1);
    } else if (std::isfinite(f0) && f0 != 0.0 && (f0 > 0.0) != (f1 > 0.0)) {
      roots.push_back(search::bisect(det_at, t0, t1));
    }
    t0 = t1;
    f0 = f1;
  }
  return roots;
}

std::vector<BlowupSheet> sheets_diag2(const HodographProblem& p, const std::vector<Vector>& grid, const ScanOptions& opt) {
  const Matrix& a = p.spec().A();
  if (a.rows() != 2 || !is_diagonal(a)) throw std::invalid_argument("sheets_diag2: A must be 2x2 diagonal");
  if (p.data().has_constant()) throw std::invalid_argument("sheets_diag2: constant components not supported");
  auto pp = std::make_shared<HodographProblem>(p);
  const double t_max = opt.t_max, dt = opt.dt;
  auto all_times = [pp, t_max, dt](const Vector& m) {
    const Matrix& am = pp->spec().A();
    std::vector<double> times;
    if (auto poly = diag2_times_polynomial(am(0, 0), am(1, 1), diag2_coefficients(*pp, m))) {
      for (double t : *poly)
        if (std::abs(t) <= t_max) times.push_back(t);
    } else {
      times = diag2_times_bisection(*pp, m, t_max, dt);
    }
    return times;
  };
  std::size_t count = 0;
  for (const auto& m : grid) {
    if (p.data().in_domain(m)) count = std::max(count, all_times(m).size());
  }
  std::vector<BlowupSheet> out;
  for (std::size_t k = 0; k < count; ++k) {
    auto time_at = [pp, all_times, k](const Vector& m) -> std::optional<double> {
      if (!pp->data().in_domain(m)) return std::nullopt;
      const auto times = all_times(m);
      if (k >= times.size()) return std::nullopt;
      return times[k];
    };
    auto why = [](const Vector&) { return std::string("no real root in the time window"); };
    out.push_back(make_sheet(p, grid, "root" + std::to_string(k), time_at, why, opt));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<double> first_blowup_time(const HodographProblem& p, const Vector& m, double t_max, double dt) {
  if (t_max == 0.0) return std::nullopt;
  return search::first_root([&](double t) { return blowup_residual(p, t, m); }, 0.0, t_max, dt);
}

BlowupSheet sheet_generic(const HodographProblem& p, const std::vector<Vector>& grid, const ScanOptions& opt) {
  // phi1 is tabulated once on the time grid and shared by all M.
  const auto steps = static_cast<std::size_t>(std::ceil(opt.t_max / opt.dt));
  auto table = std::make_shared<std::vector<Matrix>>();
  table->reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) table->push_back(phi1(p.spec().A(), std::min(opt.t_max, static_cast<double>(k) * opt.dt)));
  auto pp = std::make_shared<HodographProblem>(p);
  const double t_max = opt.t_max, dt = opt.dt;
  auto time_at = [pp, table, t_max, dt](const Vector& m) -> std::optional<double> {
    if (!pp->data().in_domain(m)) return std::nullopt;
    const Matrix f = pp->data().phi_jacobian(m);
    const auto& act = pp->data().active();
    double prev = active_det((*table)[0] + f, act);
    for (std::size_t k = 1; k < table->size(); ++k) {
      const double cur = active_det((*table)[k] + f, act);
      if (cur == 0.0) return std::min(t_max, static_cast<double>(k) * dt);
      if (prev != 0.0 && (cur > 0.0) != (prev > 0.0)) {
        return search::bisect([&](double t) { return blowup_residual(*pp, t, m); }, static_cast<double>(k - 1) * dt,
                              std::min(t_max, static_cast<double>(k) * dt));
      }
      prev = cur;
    }
    return std::nullopt;
  };
  auto why = [](const Vector&) { return std::string("no sign change of the determinant in (0, t_max]"); };
  return make_sheet(p, grid, "first", time_at, why, opt);
}

std::vector<BlowupSheet> scan_blowup(const HodographProblem& p, const std::vector<Vector>& grid, const ScanOptions& opt) {
  const Matrix& a = p.spec().A();
  if (p.dim() == 1) return {sheet_1d(p, grid, opt)};
  if (p.spec().scalar_a()) return sheets_diag(p, grid, opt);
  if (!p.data().has_constant()) {
    if (is_coriolis2d(a)) return sheets_coriolis2d(p, grid, opt);
    if (a.rows() == 2 && is_diagonal(a)) return sheets_diag2(p, grid, opt);
  }
  return {sheet_generic(p, grid, opt)};
}

std::optional<Catastrophe> min_blowup_time(const HodographProblem& p, const std::vector<BlowupSheet>& sheets) {
  const BlowupSheet* best = nullptr;
  for (const auto& s : sheets) {
    if (!s.extremum || s.extremum->kind != ExtremumKind::Min || !(s.extremum->t > 0.0)) continue;
    if (!best || s.extremum->t < best->extremum->t) best = &s;
  }
  if (!best) return std::nullopt;
  Catastrophe c;
  c.t = best->extremum->t;
  c.M = best->extremum->M;
  c.branch = best->branch;
  const Matrix& a = p.spec().A();
  c.x = phi1(a, c.t) * c.M + phi2(a, c.t) * p.spec().g() + p.data().phi(c.M);
  c.u = u_from_M(p.spec(), c.t, c.M);
  return c;
}

std::optional<Catastrophe> find_catastrophe(const HodographProblem& p, const ScanOptions& opt) {
  const auto grid = m_grid(p.data(), p.options().grid_points);
  return min_blowup_time(p, scan_blowup(p, grid, opt));
}

}  // namespace hodo
