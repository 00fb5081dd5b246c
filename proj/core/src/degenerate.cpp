#include "hodo/degenerate.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include <Eigen/SVD>

namespace hodo {

namespace {

void orient(Matrix& l) {
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
      if (std::abs(l(i, j)) > 1e-12) {
        if (l(i, j) < 0.0) l.row(i) *= -1.0;
        break;
      }
    }
  }
}

void fill_blocks(DegenerateBasis& b, const Matrix& a) {
  const int k = b.n - b.r;
  b.B = b.L * a * b.P;
  // Kernel rows are exactly zero by construction; remove rounding noise.
  b.B.topRows(k).setZero();
  b.Btilde = b.B.bottomRightCorner(b.r, b.r);
  if (rank(b.Btilde) < b.r) {
    throw DegenerateSpecError("degenerate basis: Btilde is singular (rank deficit inside the complement)");
  }
}

int checked_rank(const Matrix& a, double rank_tol) {
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("degenerate basis: A must be square");
  if (!a.allFinite()) throw std::invalid_argument("degenerate basis: A must be finite");
  const int r = rank(a, rank_tol);
  if (r == 0) throw DegenerateSpecError("degenerate basis: A = 0 is handled by the generic path");
  if (r == a.rows()) throw DegenerateSpecError("degenerate basis: A has full rank");
  return r;
}

// Everything at fixed t that the integrals need.
struct Frame {
  int k = 0;
  int r = 0;
  double t = 0.0;
  Vector f;
  Matrix B;
  Matrix C;
  Matrix D;
  Eigen::PartialPivLU<Matrix> btilde;
};

Frame make_frame(const ForceSpec& spec, const DegenerateBasis& basis, double t) {
  if (spec.dim() != basis.n) throw std::invalid_argument("degenerate: basis and spec dimensions differ");
  Frame fr;
  fr.k = basis.kernel_dim();
  fr.r = basis.r;
  fr.t = t;
  fr.f = basis.L * spec.g();
  fr.B = basis.B;
  const TimeMatrices cd = time_matrices(basis, spec.A(), t);
  fr.C = cd.C;
  fr.D = cd.D;
  fr.btilde.compute(basis.Btilde);
  return fr;
}

IntegralValues integrals_in(const Frame& fr, const Vector& y, const Vector& v) {
  const int k = fr.k;
  const int r = fr.r;
  const double t = fr.t;
  const Vector fk = fr.f.head(k);
  const Vector fb = fr.f.tail(r);
  const Matrix b_ba = fr.B.bottomLeftCorner(r, k);

  IntegralValues out;
  out.I1 = v - fr.f * t - fr.B * y;
  out.I2 = fr.C * fr.f + fr.D * v;

  out.M.resize(k + r);
  out.N.resize(k + r);
  const Vector m_a = v.head(k) - fk * t;
  out.M.head(k) = m_a;
  out.M.tail(r) = fr.btilde.solve(Vector(out.I2.tail(r) - fb - b_ba * m_a));

  const Vector drift_a = v.head(k) * t - fk * (0.5 * t * t);
  out.N.head(k) = y.head(k) - drift_a;
  out.N.tail(r) = y.tail(r) + fr.btilde.solve(Vector(out.M.tail(r) - v.tail(r) + fb * t + b_ba * drift_a));
  return out;
}

void check_basis_matches(const DegenerateBasis& basis, const Matrix& a) {
  if (a.rows() != basis.n) throw std::invalid_argument("degenerate: basis and A dimensions differ");
  const double scale = std::max(1.0, max_abs(a));
  if (max_abs(basis.L * a * basis.P - basis.B) > 1e-9 * scale) {
    throw std::invalid_argument("degenerate: basis was built for a different A");
  }
}

double active_det(const InitialData& data, const Matrix& m) {
  const auto& act = data.active();
  const auto k = static_cast<Eigen::Index>(act.size());
  if (k == 0) return 1.0;
  Matrix sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = m(act[static_cast<std::size_t>(i)], act[static_cast<std::size_t>(j)]);
  return sub.determinant();
}

}  // namespace

DegenerateBasis build_basis(const Matrix& a, double rank_tol) {
  const int r = checked_rank(a, rank_tol);
  const int n = static_cast<int>(a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  const Matrix& u = svd.matrixU();
  DegenerateBasis b;
  b.n = n;
  b.r = r;
  b.L.resize(n, n);
  // Singular values are sorted descending: the last n - r columns span the left kernel.
  for (int i = 0; i < n - r; ++i) b.L.row(i) = u.col(r + i).transpose();
  for (int i = 0; i < r; ++i) b.L.row(n - r + i) = u.col(i).transpose();
  orient(b.L);
  b.P = b.L.transpose();
  fill_blocks(b, a);
  return b;
}

DegenerateBasis basis_from_rows(const Matrix& a, const Matrix& l, double rank_tol) {
  const int r = checked_rank(a, rank_tol);
  const int n = static_cast<int>(a.rows());
  if (l.rows() != n || l.cols() != n) throw std::invalid_argument("basis_from_rows: L must be n x n");
  Eigen::PartialPivLU<Matrix> lu(l);
  if (!(lu.rcond() > 1e-12)) throw std::invalid_argument("basis_from_rows: L is singular");
  const double scale = std::max(1.0, max_abs(a));
  if (max_abs(l.topRows(n - r) * a) > 1e-10 * scale * std::max(1.0, max_abs(l))) {
    throw std::invalid_argument("basis_from_rows: leading rows are not in the left kernel of A");
  }
  DegenerateBasis b;
  b.n = n;
  b.r = r;
  b.L = l;
  b.P = lu.inverse();
  fill_blocks(b, a);
  return b;
}

DegenerateBasis coriolis3d_basis(const Vector& omega) {
  if (omega.size() != 3 || !omega.allFinite()) throw std::invalid_argument("coriolis3d_basis: omega must be a finite 3-vector");
  const double w = omega.norm();
  const double s = std::hypot(omega(1), omega(2));
  if (!(s > 0.0)) throw std::invalid_argument("coriolis3d_basis: omega_2 or omega_3 must be nonzero (use build_basis)");
  Matrix l(3, 3);
  l.row(0) = omega.transpose() / w;
  l.row(1) << 0.0, omega(2) / s, -omega(1) / s;
  l.row(2) << s * s, -omega(0) * omega(1), -omega(0) * omega(2);
  l.row(2) /= w * s;
  return basis_from_rows(presets::coriolis3d_matrix(omega), l);
}

DegenerateBasis coriolis3d_z_basis(double omega) {
  Matrix l(3, 3);
  l << 0, 0, 1, 0, 1, 0, 1, 0, 0;
  return basis_from_rows(presets::coriolis3d_matrix(Vector::Unit(3, 2) * omega), l);
}

TimeMatrices time_matrices(const DegenerateBasis& basis, const Matrix& a, double t) {
  check_basis_matches(basis, a);
  const Matrix e = mat_exp(a, -t);
  return {basis.L * e * basis.P, basis.L * a * e * basis.P};
}

IntegralValues degenerate_integrals(const ForceSpec& spec, const DegenerateBasis& basis, double t, const Vector& y,
                                    const Vector& v) {
  if (y.size() != basis.n || v.size() != basis.n) throw std::invalid_argument("degenerate_integrals: dimension mismatch");
  if (!std::isfinite(t) || !y.allFinite() || !v.allFinite()) throw std::invalid_argument("degenerate_integrals: non-finite input");
  return integrals_in(make_frame(spec, basis, t), y, v);
}

detail::LinearHodograph degenerate_system(const ForceSpec& spec, const DegenerateBasis& basis, double t,
                                          const Vector& y) {
  auto fr = std::make_shared<const Frame>(make_frame(spec, basis, t));
  const Matrix e = mat_exp(basis.B, t);
  const Vector drift = phi1(basis.B, t) * fr->f;
  auto v_of_m = [e, drift](const Vector& m) -> Vector { return e * m + drift; };

  detail::LinearHodograph sys;
  sys.u_of_m = v_of_m;
  sys.n_of_m = [fr, y, v_of_m](const Vector& m) -> Vector { return integrals_in(*fr, y, v_of_m(m)).N; };
  // N is affine in M, so unit differences give the exact Jacobian.
  const int n = basis.n;
  const Vector n0 = sys.n_of_m(Vector::Zero(n));
  sys.dn_dm.resize(n, n);
  for (int j = 0; j < n; ++j) sys.dn_dm.col(j) = sys.n_of_m(Vector::Unit(n, j)) - n0;
  return sys;
}

SolveResult degenerate_solve(const HodographProblem& p, const DegenerateBasis& basis, double t, const Vector& x,
                             const std::optional<Vector>& guess_M) {
  check_basis_matches(basis, p.spec().A());
  if (x.size() != basis.n || !x.allFinite() || !std::isfinite(t)) {
    throw std::invalid_argument("degenerate_solve: bad (t, x)");
  }
  if (guess_M && guess_M->size() != basis.n) throw std::invalid_argument("degenerate_solve: guess has wrong dimension");
  const ForceSpec& spec = p.spec();
  const Vector y = basis.L * x;
  SolveResult r = detail::solve_core(p, t, y, guess_M, [&](double tt, const Vector& yy) {
    return degenerate_system(spec, basis, tt, yy);
  });
  r.state.x = x;
  r.state.u = basis.P * r.state.u;
  return r;
}

Matrix coriolis3d_calL(const DegenerateBasis& basis, double t) { return -basis.P * phi1(basis.B, t); }

Matrix coriolis3d_z_calL(double omega, double t) {
  if (omega == 0.0) throw std::invalid_argument("coriolis3d_z_calL: omega must be nonzero");
  const double c = std::cos(omega * t);
  const double s = std::sin(omega * t);
  Matrix l(3, 3);
  l << 0, -(1 - c) / omega, -s / omega, 0, -s / omega, (1 - c) / omega, -t, 0, 0;
  return l;
}

Matrix coriolis3d_z_calL_small(double t) {
  Matrix l(3, 3);
  l << 0, 0, -t, 0, -t, 0, -t, 0, 0;
  return l;
}

double coriolis3d_blowup_residual(const HodographProblem& p, const DegenerateBasis& basis, double t,
                                  const Vector& m) {
  check_basis_matches(basis, p.spec().A());
  const Matrix inner = p.data().phi_jacobian(m) - basis.L * coriolis3d_calL(basis, t);
  return basis.P.determinant() * active_det(p.data(), inner);
}

double coriolis3d_blowup_residual_small(const HodographProblem& p, const DegenerateBasis& basis, double t,
                                        const Vector& m) {
  if (basis.n != 3) throw std::invalid_argument("coriolis3d_blowup_residual_small: 3D only");
  const Matrix inner = p.data().phi_jacobian(m) - basis.L * coriolis3d_z_calL_small(t);
  return basis.P.determinant() * active_det(p.data(), inner);
}

std::optional<PeriodWitness> non_periodicity_witness(const HodographProblem& p, const DegenerateBasis& basis,
                                                     double period,
                                                     const std::vector<std::pair<double, Vector>>& samples,
                                                     double threshold, int steps) {
  if (max_abs(p.spec().g()) != 0.0) throw std::invalid_argument("non_periodicity_witness: requires g = 0");
  if (!(period > 0.0)) throw std::invalid_argument("non_periodicity_witness: period must be positive");
  const ForceSpec& spec = p.spec();
  const detail::SystemFactory factory = [&](double tt, const Vector& yy) {
    return degenerate_system(spec, basis, tt, yy);
  };
  for (const auto& [t, x] : samples) {
    const SolveResult start = degenerate_solve(p, basis, t, x);
    if (!start.ok()) continue;
    const detail::MarchResult m = detail::march(p, t, t + period, basis.L * x, start.M, factory, steps);
    if (!m.end.ok() || m.crossed_blowup) continue;
    const Vector u_tT = basis.P * m.end.state.u;
    const double diff = max_abs(u_tT - start.state.u);
    if (diff > threshold) return PeriodWitness{t, x, start.state.u, u_tT, diff};
  }
  return std::nullopt;
}

}  // namespace hodo
