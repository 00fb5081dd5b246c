#include <gtest/gtest.h>

#include <cmath>

#include "hodo/blowup.hpp"
#include "hodo/hodograph.hpp"
#include "hodo/oracle.hpp"
#include "test_support.hpp"

using namespace hodo;
using hodo::testing::max_diff;
using hodo::testing::Rng;

namespace {

ForceSpec random_spec(Rng& rng, int n) {
  Matrix a = rng.matrix(n, 1.0);
  if (rank(a) < n) a += 0.5 * Matrix::Identity(n, n);
  return ForceSpec(a, rng.vector(n, -1, 1));
}

HodographProblem tanh_problem(double a, double g) {
  return HodographProblem(presets::scalar1d(a, g), InitialData(Tanh1D{1, 1}));
}

double vmax(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Integrals, InitialValuesAreStateValues) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const ForceSpec spec = random_spec(rng, 1 + trial % 3);
    const StateSample s{0.0, rng.vector(spec.dim(), -1, 1), rng.vector(spec.dim(), -1, 1)};
    const IntegralValues iv = integrals(spec, s);
    EXPECT_LT(vmax(iv.M - s.u), 1e-15);
    EXPECT_LT(vmax(iv.N - s.x), 1e-15);
    EXPECT_LT(vmax(iv.I1 - (s.u - spec.A() * s.x)), 1e-15);
    EXPECT_LT(vmax(iv.I2 - (spec.g() + spec.A() * s.u)), 1e-15);
  }
}

TEST(Integrals, SmallALimit) {
  Vector g(2), x(2), u(2);
  g << 0.3, -1.0;
  x << 1.0, 2.0;
  u << -0.5, 0.25;
  const double t = 1.7;
  const ForceSpec spec(1e-12 * Matrix::Identity(2, 2), g);
  const IntegralValues iv = integrals(spec, {t, x, u});
  EXPECT_LT(vmax(iv.M - (u - g * t)), 1e-10);
  EXPECT_LT(vmax(iv.N - (x - u * t + 0.5 * g * t * t)), 1e-10);
}

TEST(Integrals, CoriolisRotatesVelocity) {
  const double w = 1.3, t = 0.9;
  Vector u(2);
  u << 0.4, -0.8;
  const ForceSpec spec = presets::coriolis2d(w, Vector::Zero(2));
  const IntegralValues iv = integrals(spec, {t, Vector::Zero(2), u});
  EXPECT_LT(vmax(iv.M - hodo::testing::rot(w, -t) * u), 1e-14);
}

TEST(Integrals, ConservedAlongExactFlow) {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const ForceSpec spec = random_spec(rng, 1 + trial % 4);
    const Vector x0 = rng.vector(spec.dim(), -1, 1), u0 = rng.vector(spec.dim(), -1, 1);
    const IntegralValues at0 = integrals(spec, {0.0, x0, u0});
    for (double t : {0.1, 0.7, 1.3}) {
      const FlowResult f = exact_flow(spec, x0, u0, t);
      const IntegralValues it = integrals(spec, {t, f.x, f.u});
      EXPECT_LT(vmax(it.I1 - at0.I1), 1e-9);
      EXPECT_LT(vmax(it.I2 - at0.I2), 1e-9);
      EXPECT_LT(vmax(it.M - at0.M), 1e-9);
      EXPECT_LT(vmax(it.N - at0.N), 1e-9);
    }
  }
}

TEST(Integrals, DegenerateSpecIsRoutedAway) {
  const ForceSpec spec = presets::coriolis3d_z(1.0, 0.0);
  EXPECT_THROW(integrals(spec, {0.5, Vector::Zero(3), Vector::Zero(3)}), DegenerateSpecError);
}

TEST(UFromM, Examples) {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const ForceSpec spec = random_spec(rng, 1 + trial % 3);
    const Vector m = rng.vector(spec.dim(), -1, 1);
    EXPECT_LT(vmax(u_from_M(spec, 0.0, m) - m), 1e-15);
    const double t = rng.uniform(-2, 2);
    EXPECT_LT(vmax(u_from_M(spec, t, Vector::Zero(spec.dim())) - phi1(spec.A(), t) * spec.g()), 1e-14);
    const Vector u = u_from_M(spec, t, m);
    EXPECT_LT(vmax(integrals(spec, {t, Vector::Zero(spec.dim()), u}).M - m), 1e-12);
  }
}

TEST(Residual, VanishesAtInitialCondition) {
  const HodographProblem p(presets::coriolis2d(1.0, Vector::Zero(2)), InitialData(Tanh2D{0.5}));
  Vector m(2);
  m << 0.3, -0.6;
  EXPECT_LT(vmax(residual_M(p, 0.0, p.data().phi(m), m)), 1e-15);
}

TEST(Residual, FreeFallForm) {
  const double g = 0.8, t = 0.6, x = 0.35, m = 0.9;
  const HodographProblem p = tanh_problem(0.0, g);
  const double phi = std::atanh(1 - m);
  // x - u t + g t^2 / 2 - phi(u - g t) with u = M + g t.
  const double expected = x - (m + g * t) * t + 0.5 * g * t * t - phi;
  EXPECT_NEAR(residual_M(p, t, Vector::Constant(1, x), Vector::Constant(1, m))(0), expected, 1e-15);
}

TEST(Residual, ZeroOnExactFlow) {
  Rng rng(34);
  const HodographProblem p(presets::coriolis2d(1.0, Vector::Constant(2, 0.2)), InitialData(Tanh2D{0.5}));
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x0 = rng.vector(2, -1, 1);
    const Vector u0 = p.data().u0(x0);
    const FlowResult f = exact_flow(p.spec(), x0, u0, rng.uniform(0, 0.3));
    EXPECT_LT(vmax(residual_M(p, f.t, f.x, u0)), 1e-10);
  }
}

TEST(Residual, MFormEquivalentToUForm) {
  Rng rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    const ForceSpec spec = random_spec(rng, 2);
    const HodographProblem p(spec, InitialData(Tanh2D{0.5}));
    const Vector m = rng.vector(2, -0.9, 0.9);
    const double t = rng.uniform(-1, 1);
    const Vector x = rng.vector(2, -2, 2);
    const Vector u = u_from_M(spec, t, m);
    EXPECT_LT(vmax(residual_M(p, t, x, m) - residual_u(p, t, x, u)), 1e-11);
  }
}

TEST(Residual, JacobianMatchesFiniteDifferences) {
  const HodographProblem p(presets::coriolis2d(0.7, Vector::Constant(2, 0.3)), InitialData(Gauss2DCoriolis{}));
  Vector m(2), x(2);
  m << 0.6, 0.5;
  x << 0.2, 0.1;
  const double t = 0.4, h = 1e-7;
  Matrix fd(2, 2);
  for (int k = 0; k < 2; ++k) {
    Vector mp = m, mm = m;
    mp(k) += h;
    mm(k) -= h;
    fd.col(k) = (residual_M(p, t, x, mp) - residual_M(p, t, x, mm)) / (2 * h);
  }
  EXPECT_LT(max_diff(residual_jacobian(p, t, m), fd), 1e-6);
}

TEST(SolveU, TimeZeroReturnsInitialData) {
  const HodographProblem p = tanh_problem(0.5, 1.0);
  const Vector x = Vector::Constant(1, 0.42);
  const SolveResult r = solve_u(p, 0.0, x);
  ASSERT_TRUE(r.ok());
  EXPECT_LE(r.iterations, 1);
  EXPECT_NEAR(r.state.u(0), 1 - std::tanh(0.42), 1e-13);
}

TEST(SolveU, ConstantData) {
  Rng rng(36);
  Vector c(2);
  c << 0.4, -1.1;
  const ForceSpec spec = presets::coriolis2d(1.5, Vector::Constant(2, 0.5));
  const HodographProblem p(spec, InitialData(Constant{c}));
  for (int i = 0; i < 10; ++i) {
    const double t = rng.uniform(0, 3);
    const SolveResult r = solve_u(p, t, rng.vector(2, -5, 5));
    ASSERT_TRUE(r.ok());
    EXPECT_LT(vmax(r.state.u - (mat_exp(spec.A(), t) * c + phi1(spec.A(), t) * spec.g())), 1e-13);
  }
}

TEST(SolveU, TanhFreeFallMatchesFlow) {
  const HodographProblem p = tanh_problem(0.0, 1.0);
  const Vector x0 = Vector::Constant(1, 0.3);
  const FlowResult f = exact_flow(p.spec(), x0, p.data().u0(x0), 0.5);
  const SolveResult r = solve_u(p, 0.5, f.x);
  ASSERT_TRUE(r.ok()) << to_string(r.status);
  EXPECT_NEAR(r.state.u(0), f.u(0), 1e-9);
}

TEST(SolveU, AgreesWithFlowAcrossFamilies) {
  Rng rng(37);
  std::vector<HodographProblem> problems{
      HodographProblem(presets::scalar1d(0.7, -0.4), InitialData(Gauss1D{1, 1, 1})),
      HodographProblem(presets::coriolis2d(1.0, Vector::Constant(2, 0.1)), InitialData(Tanh2D{0.5})),
      HodographProblem(presets::diagonal(Vector::Constant(2, -0.5), Vector::Zero(2)), InitialData(Tanh2D{2.0})),
      HodographProblem(presets::coriolis2d(1.0, Vector::Zero(2)), InitialData(Gauss2DCoriolis{})),
  };
  for (const HodographProblem& p : problems) {
    const auto cat = find_catastrophe(p);
    const double t_safe = cat ? 0.8 * cat->t : 1.0;
    for (int i = 0; i < 25; ++i) {
      Vector x0 = p.data().phi(p.data().clip_to_domain(p.data().u0(rng.vector(p.dim(), 0.05, 1.2))));
      const double t = rng.uniform(0, t_safe);
      const FlowResult f = exact_flow(p.spec(), x0, p.data().u0(x0), t);
      const SolveResult r = solve_u(p, t, f.x, p.data().u0(x0));
      ASSERT_TRUE(r.ok()) << to_string(r.status);
      EXPECT_LT(vmax(r.state.u - f.u), 1e-9);
    }
  }
}

TEST(SolveU, BlowupIsReportedNotHidden) {
  // Jacobian exactly singular at M = 1, t = 1 for the free tanh; the query
  // point is off the root so Newton has to take a step there.
  const HodographProblem p = tanh_problem(0.0, 0.0);
  const SolveResult r = newton_M(p, 1.0, Vector::Constant(1, 1.01), Vector::Constant(1, 1.0));
  EXPECT_EQ(r.status, SolveStatus::JacobianSingular);
}

TEST(SolveU, SatisfiesPde) {
  Rng rng(38);
  const HodographProblem p(presets::coriolis2d(0.8, Vector::Constant(2, 0.3)), InitialData(Tanh2D{0.5}));
  const auto field = [&](double t, const Vector& x) {
    const SolveResult r = solve_u(p, t, x);
    if (!r.ok()) throw std::runtime_error("solve failed");
    return r.state.u;
  };
  for (int i = 0; i < 50; ++i) {
    const Vector x0 = rng.vector(2, -1, 1);
    const double t = rng.uniform(0.05, 0.4);
    const FlowResult f = exact_flow(p.spec(), x0, p.data().u0(x0), t);
    EXPECT_LT(pde_residual(field, p.spec(), t, f.x), 1e-5);
  }
}

TEST(ClosedForm, Examples) {
  Vector g(2), x(2);
  g << 0.5, -0.2;
  x << 1.0, 3.0;
  const ForceSpec spec = presets::coriolis2d(0.9, g);
  const double t = 0.7;
  EXPECT_LT(vmax(closed_form(ConstI1{Vector::Zero(2)}, spec, t, x) - (g * t + spec.A() * x)), 1e-15);
  const ForceSpec free(1e-13 * Matrix::Identity(2, 2), g);
  Vector gamma(2);
  gamma << 0.1, 0.2;
  EXPECT_LT(vmax(closed_form(ConstM{gamma}, free, t, x) - (gamma + g * t)), 1e-11);
  Vector beta(2);
  beta << 0.3, -0.7;
  EXPECT_LT(vmax(closed_form(ConstI2{beta}, spec, 0.0, x) - solve(spec.A(), beta - g)), 1e-14);
}

TEST(ClosedForm, AllFamiliesSolveThePde) {
  Rng rng(39);
  for (int trial = 0; trial < 10; ++trial) {
    const ForceSpec spec = random_spec(rng, 2);
    const Vector c = rng.vector(2, -1, 1);
    const std::vector<ClosedFormKind> kinds{ConstI1{c}, ConstI2{c}, ConstM{c}, ConstN{c}};
    for (const ClosedFormKind& k : kinds) {
      const auto field = [&](double t, const Vector& x) { return closed_form(k, spec, t, x); };
      const double t = rng.uniform(0.3, 1.0);
      EXPECT_LT(pde_residual(field, spec, t, rng.vector(2, -1, 1)), 1e-5) << k.index();
    }
  }
}

TEST(ClosedForm, ConstNIsSingularAtTimeZero) {
  const ForceSpec spec = presets::coriolis2d(1.0, Vector::Zero(2));
  EXPECT_THROW(closed_form(ConstN{Vector::Zero(2)}, spec, 0.0, Vector::Ones(2)), SingularMatrixError);
}

TEST(BarVariables, Examples) {
  const ForceSpec spec = presets::scalar1d(1.0, 0.5);
  const StateSample s0{0.0, Vector::Constant(1, 0.7), Vector::Constant(1, 0.2)};
  const StateSample b0 = to_bar_variables(spec, s0);
  EXPECT_DOUBLE_EQ(b0.t, 0.0);
  EXPECT_NEAR(b0.x(0), 0.7, 1e-15);
  EXPECT_NEAR(b0.u(0), 0.2, 1e-15);
  const StateSample b1 = to_bar_variables(spec, {std::log(2.0), s0.x, s0.u});
  EXPECT_NEAR(b1.t, 1.0, 1e-15);

  const double g = 0.4, t = 0.8;
  const StateSample lim = to_bar_variables(ForceSpec(Matrix::Constant(1, 1, 1e-12), Vector::Constant(1, g)),
                                           {t, s0.x, s0.u});
  EXPECT_NEAR(lim.t, t, 1e-11);
  EXPECT_NEAR(lim.x(0), s0.x(0) - 0.5 * g * t * t, 1e-11);
  EXPECT_NEAR(lim.u(0), s0.u(0) - g * t, 1e-11);
  EXPECT_THROW(to_bar_variables(presets::coriolis2d(1, Vector::Zero(2)), {t, Vector::Zero(2), Vector::Zero(2)}),
               std::invalid_argument);
}

TEST(BarVariables, HomogeneousSolveMapsBack) {
  Rng rng(40);
  for (double a : {0.8, -0.6}) {
    const HodographProblem p(presets::scalar1d(a, 0.3), InitialData(Tanh1D{1, 1}));
    const HodographProblem h = homogeneous_problem(p);
    const double tcat = find_catastrophe(p)->t;
    for (int i = 0; i < 20; ++i) {
      const double t = rng.uniform(0.0, 0.9 * tcat);
      const Vector x = rng.vector(1, -1, 1);
      const SolveResult direct = solve_u(p, t, x);
      ASSERT_TRUE(direct.ok());
      const StateSample bar = to_bar_variables(p.spec(), direct.state);
      // The homogeneous equation at (tbar, xbar) has root ubar = M.
      const SolveResult hs = solve_u(h, bar.t, bar.x);
      ASSERT_TRUE(hs.ok());
      EXPECT_NEAR(hs.state.u(0), bar.u(0), 1e-9);
      EXPECT_NEAR(u_from_M(p.spec(), t, hs.state.u)(0), direct.state.u(0), 1e-9);
    }
  }
}
