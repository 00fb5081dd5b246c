#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hodo/blowup.hpp"
#include "hodo/oracle.hpp"
#include "test_support.hpp"

using namespace hodo;
using hodo::testing::max_diff;
using hodo::testing::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

HodographProblem tanh1d(double a, double g, double mu = 1, double kappa = 1) {
  return HodographProblem(presets::scalar1d(a, g), InitialData(Tanh1D{mu, kappa}));
}

HodographProblem gauss1d(double a, int branch = 1) {
  return HodographProblem(presets::scalar1d(a, 0.0), InitialData(Gauss1D{1, 1, branch}));
}

HodographProblem tanh2d_scalar(double a, double eps) {
  return HodographProblem(presets::diagonal(Vector::Constant(2, a), Vector::Zero(2)), InitialData(Tanh2D{eps}));
}

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

void expect_sheets_on_surface(const HodographProblem& p, const std::vector<BlowupSheet>& sheets) {
  for (const BlowupSheet& s : sheets) {
    for (const SheetSample& smp : s.samples) {
      if (!smp.t) continue;
      const double scale = std::max(1.0, std::abs(det(p.data().phi_jacobian(smp.M))));
      EXPECT_LE(std::abs(blowup_residual(p, *smp.t, smp.M)) / scale, 1e-9) << s.branch;
    }
  }
}

/// True when f changes sign anywhere on a dense t grid in [-t_max, t_max].
bool has_sign_change(const std::function<double(double)>& f, double t_max, int steps) {
  double prev = f(-t_max);
  for (int i = 1; i <= steps; ++i) {
    const double cur = f(-t_max + 2 * t_max * i / steps);
    if ((prev < 0) != (cur < 0)) return true;
    prev = cur;
  }
  return false;
}

}  // namespace

TEST(BlowupResidual, TimeZeroIsJacobianDeterminant) {
  const HodographProblem p(presets::coriolis2d(1, Vector::Zero(2)), InitialData(Gauss2DCoriolis{}));
  const Vector m = v2(0.6, 0.5);
  EXPECT_NEAR(blowup_residual(p, 0.0, m), det(p.data().phi_jacobian(m)), 1e-14);
}

TEST(BlowupResidual, OneDimensionalForm) {
  const HodographProblem p = tanh1d(0.6, 0.3);
  const double t = 0.9, m = 0.7;
  const double expected = (std::exp(0.6 * t) - 1) / 0.6 - 1.0 / (m * (2 - m));
  EXPECT_NEAR(blowup_residual(p, t, v1(m)), expected, 1e-14);
}

TEST(KMatrix, IdentitiesAndTimeZero) {
  Rng rng(41);
  const HodographProblem p(ForceSpec(rng.matrix(2, 1.0), Vector::Zero(2)), InitialData(Tanh2D{0.5}));
  const Vector m = v2(0.2, -0.5);
  EXPECT_LT(max_diff(K_matrix(p, 0.0, m), p.data().phi_jacobian(m)), 1e-15);
  for (int i = 0; i < 20; ++i) {
    const double t = rng.uniform(-2, 2);
    const Vector mm = rng.vector(2, -0.9, 0.9);
    const double r = blowup_residual(p, t, mm);
    const double lhs = det(K_matrix(p, t, mm)) * det(mat_exp(p.spec().A(), t));
    EXPECT_LE(std::abs(lhs - r), 1e-10 * std::max(1.0, std::abs(r)));
  }
}

TEST(KMatrix, InverseIsVelocityGradient) {
  Rng rng(42);
  const HodographProblem p(presets::coriolis2d(0.9, Vector::Constant(2, 0.2)), InitialData(Tanh2D{0.5}));
  for (int i = 0; i < 20; ++i) {
    const Vector x0 = rng.vector(2, -1, 1);
    const double t = rng.uniform(0.05, 0.4);
    const FlowResult f = exact_flow(p.spec(), x0, p.data().u0(x0), t);
    const SolveResult base = solve_u(p, t, f.x);
    ASSERT_TRUE(base.ok());
    const double h = 1e-5;
    Matrix fd(2, 2);
    for (int k = 0; k < 2; ++k) {
      Vector xp = f.x, xm = f.x;
      xp(k) += h;
      xm(k) -= h;
      fd.col(k) = (solve_u(p, t, xp, base.M).state.u - solve_u(p, t, xm, base.M).state.u) / (2 * h);
    }
    EXPECT_LT(max_diff(K_matrix(p, t, base.M).inverse(), fd), 1e-7);
  }
}

TEST(Sheet1D, TanhClosedFormWithForce) {
  const double a = 0.7, mu = 1.4, kappa = 0.6;
  const HodographProblem p = tanh1d(a, 0.5, mu, kappa);
  const BlowupSheet s = sheet_1d(p, m_grid(p.data(), 51));
  ASSERT_EQ(s.present_count(), 51u);
  for (const SheetSample& smp : s.samples) {
    const double m = smp.M(0);
    EXPECT_NEAR(*smp.t, std::log(1 + a * mu / (kappa * m * (2 * mu - m))) / a, 1e-12);
  }
}

TEST(Sheet1D, FreeTanhMinimum) {
  const HodographProblem p = tanh1d(0.0, 0.0, 2.0, 0.5);
  const BlowupSheet s = sheet_1d(p, m_grid(p.data(), 101));
  for (const SheetSample& smp : s.samples) {
    const double r = 1 - smp.M(0) / 2.0;
    EXPECT_NEAR(*smp.t, 1.0 / (0.5 * 2.0) / (1 - r * r), 1e-12);
  }
  ASSERT_TRUE(s.extremum);
  EXPECT_NEAR(s.extremum->t, 1.0, 1e-10);
  EXPECT_NEAR(s.extremum->M(0), 2.0, 1e-4);
}

TEST(Sheet1D, GaussClosedForm) {
  for (int eps : {1, -1}) {
    const double a = 0.8;
    const HodographProblem p = gauss1d(a, eps);
    const BlowupSheet s = sheet_1d(p, m_grid(p.data(), 41));
    for (const SheetSample& smp : s.samples) {
      const double m = smp.M(0);
      const double arg = 1 + eps * a / (2 * m) / std::sqrt(std::log(1 / m));
      if (arg > 0) {
        ASSERT_TRUE(smp.t);
        EXPECT_NEAR(*smp.t, std::log(arg) / a, 1e-12);
      } else {
        EXPECT_FALSE(smp.t);
        EXPECT_FALSE(smp.absent_reason.empty());
      }
    }
  }
}

TEST(Sheet1D, SignRule) {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = rng.uniform(-2, 2);
    const HodographProblem p = tanh1d(a, 0, rng.uniform(-1.5, 1.5), rng.uniform(0.3, 2));
    const BlowupSheet s = sheet_1d(p, m_grid(p.data(), 31));
    for (const SheetSample& smp : s.samples) {
      const double afp = a * p.data().phi_jacobian(smp.M)(0, 0);
      if (afp < 0) {
        ASSERT_TRUE(smp.t);
        EXPECT_EQ(*smp.t > 0, a > 0);
      } else if (afp > 0 && afp < 1) {
        ASSERT_TRUE(smp.t);
        EXPECT_EQ(*smp.t > 0, a < 0);
      }
    }
  }
}

TEST(Sheet1D, SmallALimit) {
  const HodographProblem tiny = tanh1d(1e-10, 0);
  const HodographProblem zero = tanh1d(0, 0);
  const auto grid = m_grid(tiny.data(), 51);
  const BlowupSheet a = sheet_1d(tiny, grid), b = sheet_1d(zero, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(*a.samples[i].t, *b.samples[i].t, 1e-6);
}

TEST(Sheet1D, SamplesLieOnSurface) {
  for (double a : {-0.6, 0.0, 0.9}) {
    const HodographProblem p = tanh1d(a, 0.4);
    expect_sheets_on_surface(p, {sheet_1d(p, m_grid(p.data(), 101))});
  }
}

TEST(Certificate, Tanh1D) {
  EXPECT_TRUE(certify_no_blowup_1d(tanh1d(-2, 0)).certified);
  EXPECT_FALSE(certify_no_blowup_1d(tanh1d(-0.5, 0)).certified);
  EXPECT_TRUE(certify_no_blowup_1d(tanh1d(-1.01, 0)).certified);
  EXPECT_FALSE(certify_no_blowup_1d(tanh1d(-0.99, 0)).certified);
  // Negative mu flips the sign requirement.
  EXPECT_TRUE(certify_no_blowup_1d(tanh1d(1.6, 0, -1.5, 1)).certified);
  EXPECT_FALSE(certify_no_blowup_1d(tanh1d(1.4, 0, -1.5, 1)).certified);
}

TEST(Certificate, Gauss1DThreshold) {
  const double threshold = std::sqrt(2 / std::numbers::e);
  EXPECT_TRUE(certify_no_blowup_1d(gauss1d(-1.3)).certified);
  EXPECT_TRUE(certify_no_blowup_1d(gauss1d(-1.01 * threshold)).certified);
  EXPECT_FALSE(certify_no_blowup_1d(gauss1d(-0.99 * threshold)).certified);
  // The worst point sits where 2 M sqrt(log(1/M)) peaks, M = e^{-1/2}.
  const Certificate c = certify_no_blowup_1d(gauss1d(-0.5));
  EXPECT_NEAR(c.worst_M(0), std::exp(-0.5), 1e-4);
}

TEST(Certificate, SoundAgainstDenseScan) {
  for (const HodographProblem& p : {tanh1d(-1.2, 0), tanh1d(-3, 1), gauss1d(-1.0), gauss1d(-2.0)}) {
    ASSERT_TRUE(certify_no_blowup_1d(p).certified);
    for (const Vector& m : m_grid(p.data(), 60)) {
      EXPECT_FALSE(has_sign_change([&](double t) { return blowup_residual(p, t, m); }, 50.0, 4000));
    }
  }
}

TEST(SheetsDiag, Tanh2DExtrema) {
  for (double eps : {0.5, 2.0}) {
    const HodographProblem p = tanh2d_scalar(0.0, eps);
    const auto sheets = sheets_diag(p, m_grid(p.data(), 101));
    ASSERT_EQ(sheets.size(), 2u);
    expect_sheets_on_surface(p, sheets);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : sheets)
      if (s.extremum && s.extremum->kind == ExtremumKind::Min) best = std::min(best, s.extremum->t);
    EXPECT_NEAR(best, 1 / (1 + eps), 1e-6) << eps;
  }
}

TEST(SheetsDiag, QuadraticCoefficients) {
  // det(tau I + J) = tau^2 + tr(J) tau + det J with the displayed coefficients.
  const double eps = 0.5;
  const HodographProblem p = tanh2d_scalar(0.0, eps);
  const Vector m = v2(0.3, -0.6);
  const double d = (eps * eps - 1) * (1 - m(0) * m(0)) * (1 - m(1) * m(1));
  const double b = (2 - m(0) * m(0) - m(1) * m(1)) / d, c = -1 / d;
  const double disc = std::sqrt(b * b - 4 * c);
  const auto sheets = sheets_diag(p, {m});
  EXPECT_NEAR(*sheets[0].samples[0].tau, (-b - disc) / 2, 1e-12);
  EXPECT_NEAR(*sheets[1].samples[0].tau, (-b + disc) / 2, 1e-12);
}

TEST(SheetsDiag, LinearDataDoubleRoot) {
  Matrix r = Matrix::Identity(2, 2) * -0.7;
  const HodographProblem p(presets::diagonal(Vector::Constant(2, 0.0), Vector::Zero(2)), InitialData(LinearR{r}));
  const auto sheets = sheets_diag(p, {v2(0.1, 0.2)});
  ASSERT_EQ(sheets.size(), 2u);
  EXPECT_NEAR(*sheets[0].samples[0].tau, 0.7, 1e-7);
  EXPECT_NEAR(*sheets[1].samples[0].tau, 0.7, 1e-7);
}

TEST(SheetsDiag, PositiveBranchCertifiedAbsent) {
  const double eps = 2.0;
  const HodographProblem p = tanh2d_scalar(-(1 + eps) - 0.01, eps);
  const auto sheets = sheets_diag(p, m_grid(p.data(), 101));
  bool any_positive = false;
  for (std::size_t k = 0; k < sheets.size(); ++k) {
    for (const auto& s : sheets[k].samples)
      if (s.t && *s.t > 0) any_positive = true;
  }
  EXPECT_FALSE(any_positive);
}

TEST(Coriolis2D, AbcIdentity) {
  Rng rng(44);
  const double w = 1.3;
  const HodographProblem p(presets::coriolis2d(w, Vector::Zero(2)), InitialData(Tanh2D{0.5}));
  for (int i = 0; i < 30; ++i) {
    const Vector m = rng.vector(2, -0.9, 0.9);
    const CoriolisABC k = coriolis2d_abc(p, m);
    EXPECT_NEAR(k.c + k.b, w * w * det(p.data().phi_jacobian(m)), 1e-10);
    const double t = rng.uniform(-3, 3);
    EXPECT_NEAR(k.a * std::sin(w * t) + k.b * std::cos(w * t) + k.c, w * w * blowup_residual(p, t, m), 1e-10);
    // The a coefficient of the tanh example.
    const double d = (1 - m(0) * m(0)) * (1 - m(1) * m(1));
    EXPECT_NEAR(k.a, w / (0.25 - 1) * (2 - m(0) * m(0) - m(1) * m(1)) / d, 1e-12);
  }
}

TEST(Coriolis2D, LinearTracelessCoefficients) {
  const double w = 0.8;
  Matrix r(2, 2);
  r << 0.5, 1.0, 0.5, -0.5;
  const HodographProblem p(presets::coriolis2d(w, Vector::Zero(2)), InitialData(LinearR{r}));
  const CoriolisABC k = coriolis2d_abc(p, v2(0.3, 0.4));
  const double b = -2 - w * (r(0, 1) - r(1, 0));
  EXPECT_NEAR(k.a, 0.0, 1e-15);
  EXPECT_NEAR(k.b, b, 1e-14);
  EXPECT_NEAR(k.c, -b - w * w * (r(0, 0) * r(0, 0) + r(0, 1) * r(1, 0)), 1e-14);
}

TEST(Coriolis2D, Gauss2DMatchesAppendixCoefficients) {
  const HodographProblem p(presets::coriolis2d(1, Vector::Zero(2)), InitialData(Gauss2DCoriolis{}));
  const Vector m = v2(0.62, 0.55);
  const double s1 = std::sqrt(std::log(m(1) / (m(0) * m(0)))), s2 = std::sqrt(std::log(m(0) / m(1)));
  const double a = -1 / (m(0) * s1) - 1 / (2 * m(1) * s2);
  const double b = -1 / (2 * m(1) * s1) + 1 / (2 * m(0) * s2) - 2;
  const double c = -b + 1 / (4 * m(0) * m(1) * s2 * s1);
  const CoriolisABC k = coriolis2d_abc(p, m);
  EXPECT_NEAR(k.a, a, 1e-13);
  EXPECT_NEAR(k.b, b, 1e-13);
  EXPECT_NEAR(k.c, c, 1e-13);
}

TEST(Coriolis2D, TimesWithVanishingA) {
  const double w = 2.0;
  const CoriolisABC k{0.0, -2.5, 1.75};
  const CoriolisTimes ts = coriolis2d_times(k, w, -1, 1);
  ASSERT_FALSE(ts.absent);
  const double base = std::asin(std::sqrt(1 - (k.c * k.c) / (k.b * k.b))) / w;
  std::vector<double> all(ts.plus);
  all.insert(all.end(), ts.minus.begin(), ts.minus.end());
  for (double t : all) EXPECT_NEAR(k.a * std::sin(w * t) + k.b * std::cos(w * t) + k.c, 0.0, 1e-10);
  auto contains = [&](double target) {
    for (double t : all)
      if (std::abs(t - target) < 1e-12) return true;
    return false;
  };
  // Representatives lie in (0, 2 pi / w], so the window covers base + k T
  // for k in [-1, 1] and -base + k T for k in [0, 2].
  for (int kk = -1; kk <= 1; ++kk) {
    EXPECT_TRUE(contains(base + 2 * kPi * kk / w)) << kk;
    EXPECT_TRUE(contains(-base + 2 * kPi * (kk + 1) / w)) << kk;
  }
  EXPECT_TRUE(coriolis2d_times({0.0, 1.0, 2.0}, w).absent);
  EXPECT_THROW(coriolis2d_times({0.0, 0.0, 1.0}, w), std::invalid_argument);
}

TEST(Coriolis2D, TimesGeneralCoefficientsSatisfyEquation) {
  Rng rng(45);
  for (int i = 0; i < 200; ++i) {
    const CoriolisABC k{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double w = rng.uniform(0.3, 2);
    const CoriolisTimes ts = coriolis2d_times(k, w, 0, 2);
    EXPECT_EQ(ts.absent, k.a * k.a + k.b * k.b <= k.c * k.c);
    for (const auto* list : {&ts.plus, &ts.minus})
      for (double t : *list) EXPECT_NEAR(k.a * std::sin(w * t) + k.b * std::cos(w * t) + k.c, 0.0, 1e-10);
  }
}

TEST(Coriolis2D, LinearTracelessBlowupTimes) {
  const double w = 1.0;
  Matrix r(2, 2);
  r << 0.5, 1.0, 0.5, -0.5;
  const HodographProblem p(presets::coriolis2d(w, Vector::Zero(2)), InitialData(LinearR{r}));
  const double q = w * w * (0.25 + 0.5) / (2 + w * 0.5);
  const double expected = std::asin(std::sqrt(1 - (1 - q) * (1 - q))) / w;
  const auto cat = find_catastrophe(p);
  ASSERT_TRUE(cat);
  EXPECT_NEAR(cat->t, expected, 1e-9);
  EXPECT_LT(expected, 2 * kPi / w);
}

TEST(Coriolis2D, SheetsLieOnSurface) {
  const HodographProblem p(presets::coriolis2d(1, Vector::Zero(2)), InitialData(Gauss2DCoriolis{}));
  expect_sheets_on_surface(p, sheets_coriolis2d(p, m_grid(p.data(), 41)));
}

TEST(Diag2, ReducesToScalarCase) {
  const HodographProblem p = tanh2d_scalar(0.4, 0.5);
  const auto grid = m_grid(p.data(), 21);
  const auto a = sheets_diag(p, grid);
  const auto b = sheets_diag2(p, grid);
  for (const Vector& m : grid) {
    std::vector<double> ta, tb;
    for (const auto& s : a)
      if (auto t = s.time_at(m)) ta.push_back(*t);
    for (const auto& s : b)
      if (auto t = s.time_at(m)) tb.push_back(*t);
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    // The diag2 scan only covers its time window; compare the roots it reports.
    for (double t : tb) {
      bool found = false;
      for (double s : ta) found = found || std::abs(s - t) < 1e-8;
      EXPECT_TRUE(found) << t;
    }
  }
}

TEST(Diag2, OppositeRatesMatchTanhDisplay) {
  // A = diag(a, -a), Tanh2D: roots of the displayed tau formula.
  const double a = 0.7, eps = 0.5;
  const HodographProblem p(presets::diagonal(v2(a, -a), Vector::Zero(2)), InitialData(Tanh2D{eps}));
  for (const Vector& m : {v2(0.3, -0.4), v2(0.6, 0.2), v2(-0.1, 0.8)}) {
    const double m1 = m(0) * m(0), m2 = m(1) * m(1), e2 = eps * eps;
    const double disc = a * a - 2 * a * (m1 - m2) + m1 * (m2 * (4 * e2 - 2) - 4 * e2) + m1 * m1 - 4 * m2 * e2 +
                        m2 * m2 + 4 * e2;
    const double den = 2 * (m1 - 1) * (a - (m2 - 1) * (e2 - 1));
    for (double sgn : {1.0, -1.0}) {
      const double tau = -(a + m1 + m2 - 2 + sgn * std::sqrt(disc)) / den;
      if (a * tau <= -1) continue;
      const double t = std::log1p(a * tau) / a;
      EXPECT_NEAR(blowup_residual(p, t, m), 0.0, 1e-10) << tau;
      const auto times = diag2_times_bisection(p, m, 20.0, 1e-2);
      bool found = false;
      for (double s : times) found = found || std::abs(s - t) < 1e-8;
      EXPECT_TRUE(found || std::abs(t) > 20) << t;
    }
  }
}

TEST(Diag2, PolynomialAndBisectionAgree) {
  Rng rng(46);
  const double a1 = 0.3, a2 = 0.6;  // ratio 1/2
  for (int i = 0; i < 20; ++i) {
    Matrix r = rng.matrix(2, 1.5);
    if (std::abs(det(r)) < 0.1) r += Matrix::Identity(2, 2);
    const HodographProblem p(presets::diagonal(v2(a1, a2), Vector::Zero(2)), InitialData(LinearR{r}));
    const Vector m = v2(0.1, 0.2);
    const DiagCoefficients k = diag2_coefficients(p, m);
    const auto poly = diag2_times_polynomial(a1, a2, k);
    ASSERT_TRUE(poly);
    const auto bis = diag2_times_bisection(p, m, 10.0, 1e-3);
    for (double t : bis) {
      bool found = false;
      for (double s : *poly) found = found || std::abs(s - t) < 1e-9;
      EXPECT_TRUE(found) << t;
    }
    for (double t : *poly) {
      if (std::abs(t) >= 10.0) continue;
      bool found = false;
      for (double s : bis) found = found || std::abs(s - t) < 1e-9;
      EXPECT_TRUE(found) << t;
      EXPECT_NEAR(blowup_residual(p, t, m), 0.0, 1e-9);
    }
  }
}

TEST(Diag2, IrrationalRatioSamplesOnSurface) {
  const HodographProblem p(presets::diagonal(v2(0.5, -std::sqrt(2.0) / 3), Vector::Zero(2)),
                           InitialData(Tanh2D{0.5}));
  EXPECT_FALSE(diag2_times_polynomial(0.5, -std::sqrt(2.0) / 3, diag2_coefficients(p, v2(0.1, 0.1))));
  expect_sheets_on_surface(p, sheets_diag2(p, m_grid(p.data(), 15)));
}

TEST(MinBlowupTime, Tanh1DFree) {
  for (double g : {0.0, 1.0, -0.7}) {
    const auto cat = find_catastrophe(tanh1d(0, g));
    ASSERT_TRUE(cat);
    EXPECT_NEAR(cat->t, 1.0, 1e-8);
    EXPECT_NEAR(cat->M(0), 1.0, 1e-4);
    EXPECT_NEAR(cat->u(0), 1.0 + g, 1e-8);
  }
}

TEST(MinBlowupTime, Tanh1DWithForce) {
  for (double a : {1.0, 0.5, -0.4}) {
    const double g = 0.8;
    const HodographProblem p = tanh1d(a, g);
    const auto cat = find_catastrophe(p);
    ASSERT_TRUE(cat);
    EXPECT_NEAR(cat->t, std::log(1 + a) / a, 1e-8);
    EXPECT_NEAR(cat->u(0), 1 + a + g, 1e-8);
    // x* from the hodograph equation.
    EXPECT_NEAR(residual_M(p, cat->t, cat->x, cat->M)(0), 0.0, 1e-10);
  }
}

TEST(MinBlowupTime, NoBlowupWhenCertified) { EXPECT_FALSE(find_catastrophe(tanh1d(-2, 0))); }

TEST(MinBlowupTime, AgreesWithFlowJacobian) {
  const HodographProblem p(presets::coriolis2d(1, Vector::Zero(2)), InitialData(Tanh2D{0.5}));
  const auto cat = find_catastrophe(p);
  ASSERT_TRUE(cat);
  const Vector x0 = p.data().phi(cat->M);
  EXPECT_LE(std::abs(flow_jacobian_det(p.spec(), p.data(), x0, cat->t)), 1e-6);
  // At the symmetric point the determinant only touches zero, so check that
  // t* is the first zero rather than a sign change.
  for (int i = 1; i < 100; ++i) {
    EXPECT_GT(flow_jacobian_det(p.spec(), p.data(), x0, cat->t * i / 100.0), 0.0) << i;
  }
}
