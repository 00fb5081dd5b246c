#include "hodo/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hodo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double sech2(double s) {
  const double th = std::tanh(s);
  return 1.0 - th * th;
}

void check_sign(int s, const char* what) {
  if (s != 1 && s != -1) throw std::invalid_argument(std::string(what) + " must be +1 or -1");
}

void validate(const Family& f) {
  std::visit(overloaded{
                 [](const Tanh1D& p) {
                   if (p.mu == 0.0 || !(p.kappa > 0.0))
                     throw std::invalid_argument("tanh1d: need mu != 0 and kappa > 0");
                 },
                 [](const Gauss1D& p) {
                   if (!(p.eta > 0.0) || !(p.kappa > 0.0))
                     throw std::invalid_argument("gauss1d: need eta > 0 and kappa > 0");
                   check_sign(p.branch, "gauss1d branch");
                 },
                 [](const Tanh2D& p) {
                   if (!(p.eps > 0.0) || p.eps == 1.0)
                     throw std::invalid_argument("tanh2d: need eps > 0 and eps != 1");
                 },
                 [](const Gauss2DCoriolis& p) {
                   if (!(p.amplitude > 0.0))
                     throw std::invalid_argument("gauss2d_coriolis: amplitude must be positive");
                   check_sign(p.branch_x, "gauss2d_coriolis branch_x");
                   check_sign(p.branch_y, "gauss2d_coriolis branch_y");
                 },
                 [](const LinearR& p) {
                   if (p.R.rows() == 0 || p.R.rows() != p.R.cols())
                     throw std::invalid_argument("linear: R must be square and non-empty");
                   if (!p.R.allFinite() || rank(p.R) < p.R.rows())
                     throw std::invalid_argument("linear: R must be finite and invertible");
                 },
                 [](const Constant& p) {
                   if (p.c.size() == 0 || !p.c.allFinite())
                     throw std::invalid_argument("constant: c must be finite and non-empty");
                 },
             },
             f);
}

// ---- per-family kernels on local coordinates --------------------------------

Vector fam_u0(const Family& f, const Vector& x) {
  return std::visit(
      overloaded{
          [&](const Tanh1D& p) -> Vector {
            return Vector::Constant(1, p.mu * (1.0 - std::tanh(p.kappa * x(0))));
          },
          [&](const Gauss1D& p) -> Vector {
            if (x(0) * p.branch < 0.0)
              throw DomainError("gauss1d: x is on the wrong side for this branch");
            return Vector::Constant(1, p.eta * std::exp(-p.kappa * p.kappa * x(0) * x(0)));
          },
          [&](const Tanh2D& p) -> Vector {
            Vector u(2);
            u(0) = -std::tanh(x(0) + p.eps * x(1));
            u(1) = -std::tanh(p.eps * x(0) + x(1));
            return u;
          },
          [&](const Gauss2DCoriolis& p) -> Vector {
            if (x(0) * p.branch_x < 0.0 || x(1) * p.branch_y < 0.0)
              throw DomainError("gauss2d_coriolis: x is outside the branch quadrant");
            Vector u(2);
            u(0) = p.amplitude * std::exp(-(x(0) * x(0) + x(1) * x(1)));
            u(1) = p.amplitude * std::exp(-(x(0) * x(0) + 2.0 * x(1) * x(1)));
            return u;
          },
          [&](const LinearR& p) -> Vector { return solve(p.R, x); },
          [&](const Constant& p) -> Vector { return p.c; },
      },
      f);
}

Matrix fam_u0_jac(const Family& f, const Vector& x) {
  return std::visit(
      overloaded{
          [&](const Tanh1D& p) -> Matrix {
            return Matrix::Constant(1, 1, -p.mu * p.kappa * sech2(p.kappa * x(0)));
          },
          [&](const Gauss1D& p) -> Matrix {
            const double u = fam_u0(f, x)(0);
            return Matrix::Constant(1, 1, -2.0 * p.kappa * p.kappa * x(0) * u);
          },
          [&](const Tanh2D& p) -> Matrix {
            const double s1 = sech2(x(0) + p.eps * x(1));
            const double s2 = sech2(p.eps * x(0) + x(1));
            Matrix j(2, 2);
            j << -s1, -p.eps * s1, -p.eps * s2, -s2;
            return j;
          },
          [&](const Gauss2DCoriolis&) -> Matrix {
            const Vector u = fam_u0(f, x);
            Matrix j(2, 2);
            j << -2.0 * x(0) * u(0), -2.0 * x(1) * u(0), -2.0 * x(0) * u(1), -4.0 * x(1) * u(1);
            return j;
          },
          [&](const LinearR& p) -> Matrix { return p.R.inverse(); },
          [&](const Constant& p) -> Matrix { return Matrix::Zero(p.c.size(), p.c.size()); },
      },
      f);
}

bool fam_in_domain(const Family& f, const Vector& m) {
  if (!m.allFinite()) return false;
  return std::visit(
      overloaded{
          [&](const Tanh1D& p) {
            const double r = m(0) / p.mu;
            return r > 0.0 && r < 2.0;
          },
          [&](const Gauss1D& p) { return m(0) > 0.0 && m(0) < p.eta; },
          [&](const Tanh2D&) { return std::abs(m(0)) < 1.0 && std::abs(m(1)) < 1.0; },
          [&](const Gauss2DCoriolis& p) {
            const double m1 = m(0) / p.amplitude;
            const double m2 = m(1) / p.amplitude;
            return m1 > 0.0 && m2 > 0.0 && m2 > m1 * m1 && m1 > m2;
          },
          [&](const LinearR&) { return true; },
          [&](const Constant&) { return true; },
      },
      f);
}

bool fam_x_in_domain(const Family& f, const Vector& x) {
  if (!x.allFinite()) return false;
  return std::visit(overloaded{
                        [&](const Gauss1D& p) { return x(0) * p.branch >= 0.0; },
                        [&](const Gauss2DCoriolis& p) {
                          return x(0) * p.branch_x >= 0.0 && x(1) * p.branch_y >= 0.0;
                        },
                        [&](const auto&) { return true; },
                    },
                    f);
}

Vector fam_phi(const Family& f, const Vector& m) {
  if (!fam_in_domain(f, m)) throw DomainError(family_name(f) + ": M outside the admissible domain");
  return std::visit(
      overloaded{
          [&](const Tanh1D& p) -> Vector {
            return Vector::Constant(1, std::atanh(1.0 - m(0) / p.mu) / p.kappa);
          },
          [&](const Gauss1D& p) -> Vector {
            return Vector::Constant(1, p.branch * std::sqrt(std::log(p.eta / m(0))) / p.kappa);
          },
          [&](const Tanh2D& p) -> Vector {
            const double s = 1.0 / (p.eps * p.eps - 1.0);
            const double a1 = std::atanh(m(0));
            const double a2 = std::atanh(m(1));
            Vector x(2);
            x(0) = s * (a1 - p.eps * a2);
            x(1) = s * (-p.eps * a1 + a2);
            return x;
          },
          [&](const Gauss2DCoriolis& p) -> Vector {
            Vector x(2);
            x(0) = p.branch_x * std::sqrt(std::log(p.amplitude * m(1) / (m(0) * m(0))));
            x(1) = p.branch_y * std::sqrt(std::log(m(0) / m(1)));
            return x;
          },
          [&](const LinearR& p) -> Vector { return p.R * m; },
          [&](const Constant&) -> Vector {
            throw DomainError("constant: initial data has no inverse map");
          },
      },
      f);
}

Matrix fam_phi_jac(const Family& f, const Vector& m) {
  if (!fam_in_domain(f, m)) throw DomainError(family_name(f) + ": M outside the admissible domain");
  return std::visit(
      overloaded{
          [&](const Tanh1D& p) -> Matrix {
            return Matrix::Constant(1, 1, -p.mu / (p.kappa * m(0) * (2.0 * p.mu - m(0))));
          },
          [&](const Gauss1D& p) -> Matrix {
            const double l = std::log(p.eta / m(0));
            return Matrix::Constant(1, 1, -p.branch / (2.0 * p.kappa * m(0) * std::sqrt(l)));
          },
          [&](const Tanh2D& p) -> Matrix {
            const double s = 1.0 / (p.eps * p.eps - 1.0);
            const double d1 = 1.0 / (1.0 - m(0) * m(0));
            const double d2 = 1.0 / (1.0 - m(1) * m(1));
            Matrix j(2, 2);
            j << s * d1, -s * p.eps * d2, -s * p.eps * d1, s * d2;
            return j;
          },
          [&](const Gauss2DCoriolis& p) -> Matrix {
            const double r1 = std::sqrt(std::log(p.amplitude * m(1) / (m(0) * m(0))));
            const double r2 = std::sqrt(std::log(m(0) / m(1)));
            Matrix j(2, 2);
            j << -p.branch_x / (m(0) * r1), p.branch_x / (2.0 * m(1) * r1),
                p.branch_y / (2.0 * m(0) * r2), -p.branch_y / (2.0 * m(1) * r2);
            return j;
          },
          [&](const LinearR& p) -> Matrix { return p.R; },
          [&](const Constant& p) -> Matrix { return Matrix::Zero(p.c.size(), p.c.size()); },
      },
      f);
}

Box fam_box(const Family& f) {
  return std::visit(overloaded{
                        [](const Tanh1D& p) {
                          return Box{Vector::Constant(1, std::min(0.0, 2.0 * p.mu)),
                                     Vector::Constant(1, std::max(0.0, 2.0 * p.mu))};
                        },
                        [](const Gauss1D& p) {
                          return Box{Vector::Constant(1, 0.0), Vector::Constant(1, p.eta)};
                        },
                        [](const Tanh2D&) {
                          return Box{Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
                        },
                        [](const Gauss2DCoriolis& p) {
                          return Box{Vector::Constant(2, 0.0), Vector::Constant(2, p.amplitude)};
                        },
                        [](const LinearR& p) {
                          const auto n = p.R.rows();
                          return Box{Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
                        },
                        [](const Constant& p) { return Box{p.c, p.c}; },
                    },
                    f);
}

Vector fam_clip(const Family& f, const Vector& m) {
  if (fam_in_domain(f, m)) return m;
  if (const auto* p = std::get_if<Gauss2DCoriolis>(&f)) {
    const double a = p->amplitude;
    double m1 = std::isfinite(m(0)) ? m(0) / a : 0.5;
    double m2 = std::isfinite(m(1)) ? m(1) / a : 0.35;
    m1 = std::clamp(m1, 0.02, 0.98);
    const double gap = m1 - m1 * m1;
    m2 = std::clamp(m2, m1 * m1 + 1e-3 * gap, m1 - 1e-3 * gap);
    Vector out(2);
    out << a * m1, a * m2;
    return out;
  }
  const Box box = fam_box(f);
  Vector out = m;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double lo = box.lo(i);
    const double hi = box.hi(i);
    if (!std::isfinite(out(i))) out(i) = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double margin = 1e-6 * (hi - lo);
      out(i) = std::clamp(out(i), lo + margin, hi - margin);
    }
  }
  return out;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ForceSpec::ForceSpec(Matrix a, Vector g, double rank_tol) : a_(std::move(a)), g_(std::move(g)) {
  if (g_.size() == 0) throw std::invalid_argument("ForceSpec: dimension must be positive");
  if (a_.rows() != g_.size() || a_.cols() != g_.size()) {
    throw std::invalid_argument("ForceSpec: A must be n x n with n = size(g)");
  }
  if (!a_.allFinite() || !g_.allFinite()) throw std::invalid_argument("ForceSpec: non-finite entries");
  rank_ = hodo::rank(a_, rank_tol);
}

bool ForceSpec::scalar_a() const {
  const double a = a_(0, 0);
  return (a_ - a * Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() == 0.0;
}

double ForceSpec::scalar_value() const {
  if (!scalar_a()) throw std::invalid_argument("ForceSpec: A is not a multiple of the identity");
  return a_(0, 0);
}

namespace presets {

Matrix coriolis2d_matrix(double omega) {
  Matrix a(2, 2);
  a << 0.0, omega, -omega, 0.0;
  return a;
}

Matrix coriolis3d_matrix(const Vector& w) {
  if (w.size() != 3) throw std::invalid_argument("coriolis3d: omega must have 3 components");
  Matrix a(3, 3);
  a << 0.0, w(2), -w(1), -w(2), 0.0, w(0), w(1), -w(0), 0.0;
  return a;
}

ForceSpec coriolis2d(double omega, const Vector& g) { return ForceSpec(coriolis2d_matrix(omega), g); }

ForceSpec coriolis3d_z(double omega, double gravity) {
  return ForceSpec(coriolis3d_matrix(Eigen::Vector3d(0.0, 0.0, omega)), Eigen::Vector3d(0.0, 0.0, -gravity));
}

ForceSpec coriolis3d(const Vector& omega, const Vector& g) { return ForceSpec(coriolis3d_matrix(omega), g); }

ForceSpec diagonal(const Vector& a, const Vector& g) { return ForceSpec(a.asDiagonal().toDenseMatrix(), g); }

ForceSpec scalar1d(double a, double g) {
  return ForceSpec(Matrix::Constant(1, 1, a), Vector::Constant(1, g));
}

}  // namespace presets

// ---------------------------------------------------------------------------

int family_dim(const Family& f) {
  return std::visit(overloaded{
                        [](const Tanh1D&) { return 1; },
                        [](const Gauss1D&) { return 1; },
                        [](const Tanh2D&) { return 2; },
                        [](const Gauss2DCoriolis&) { return 2; },
                        [](const LinearR& p) { return static_cast<int>(p.R.rows()); },
                        [](const Constant& p) { return static_cast<int>(p.c.size()); },
                    },
                    f);
}

std::string family_name(const Family& f) {
  return std::visit(overloaded{
                        [](const Tanh1D&) { return std::string("tanh1d"); },
                        [](const Gauss1D&) { return std::string("gauss1d"); },
                        [](const Tanh2D&) { return std::string("tanh2d"); },
                        [](const Gauss2DCoriolis&) { return std::string("gauss2d_coriolis"); },
                        [](const LinearR&) { return std::string("linear"); },
                        [](const Constant&) { return std::string("constant"); },
                    },
                    f);
}

InitialData::InitialData(Family family) {
  const int d = family_dim(family);
  std::vector<int> coords(static_cast<std::size_t>(d));
  std::iota(coords.begin(), coords.end(), 0);
  blocks_.push_back(Block{std::move(coords), std::move(family)});
  finalize();
}

InitialData::InitialData(std::vector<Block> blocks) : blocks_(std::move(blocks)) { finalize(); }

void InitialData::finalize() {
  if (blocks_.empty()) throw std::invalid_argument("InitialData: no blocks");
  dim_ = 0;
  for (const auto& b : blocks_) {
    validate(b.family);
    if (static_cast<int>(b.coords.size()) != family_dim(b.family)) {
      throw std::invalid_argument("InitialData: block coordinate count does not match its family");
    }
    dim_ += static_cast<int>(b.coords.size());
  }
  std::vector<int> seen(static_cast<std::size_t>(dim_), 0);
  for (const auto& b : blocks_) {
    for (int c : b.coords) {
      if (c < 0 || c >= dim_ || seen[static_cast<std::size_t>(c)]++) {
        throw std::invalid_argument("InitialData: block coordinates must partition 0..n-1");
      }
    }
  }
  pinned_ = Vector::Zero(dim_);
  active_.clear();
  std::vector<bool> is_const(static_cast<std::size_t>(dim_), false);
  for (const auto& b : blocks_) {
    if (const auto* c = std::get_if<Constant>(&b.family)) {
      for (std::size_t k = 0; k < b.coords.size(); ++k) {
        pinned_(b.coords[k]) = c->c(static_cast<Eigen::Index>(k));
        is_const[static_cast<std::size_t>(b.coords[k])] = true;
      }
    }
  }
  for (int i = 0; i < dim_; ++i) {
    if (!is_const[static_cast<std::size_t>(i)]) active_.push_back(i);
  }
}

Vector InitialData::u0(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("u0: dimension mismatch");
  Vector out(dim_);
  for (const auto& b : blocks_) {
    const Vector local = fam_u0(b.family, gather(x, b.coords));
    for (std::size_t k = 0; k < b.coords.size(); ++k) out(b.coords[k]) = local(static_cast<Eigen::Index>(k));
  }
  return out;
}

Matrix InitialData::u0_jacobian(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("u0_jacobian: dimension mismatch");
  Matrix out = Matrix::Zero(dim_, dim_);
  for (const auto& b : blocks_) {
    const Matrix local = fam_u0_jac(b.family, gather(x, b.coords));
    for (std::size_t r = 0; r < b.coords.size(); ++r)
      for (std::size_t c = 0; c < b.coords.size(); ++c)
        out(b.coords[r], b.coords[c]) = local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return out;
}

Vector InitialData::phi(const Vector& m) const {
  if (m.size() != dim_) throw std::invalid_argument("phi: dimension mismatch");
  Vector out = Vector::Zero(dim_);
  for (const auto& b : blocks_) {
    if (std::holds_alternative<Constant>(b.family)) continue;
    const Vector local = fam_phi(b.family, gather(m, b.coords));
    for (std::size_t k = 0; k < b.coords.size(); ++k) out(b.coords[k]) = local(static_cast<Eigen::Index>(k));
  }
  return out;
}

Matrix InitialData::phi_jacobian(const Vector& m) const {
  if (m.size() != dim_) throw std::invalid_argument("phi_jacobian: dimension mismatch");
  Matrix out = Matrix::Zero(dim_, dim_);
  for (const auto& b : blocks_) {
    if (std::holds_alternative<Constant>(b.family)) continue;
    const Matrix local = fam_phi_jac(b.family, gather(m, b.coords));
    for (std::size_t r = 0; r < b.coords.size(); ++r)
      for (std::size_t c = 0; c < b.coords.size(); ++c)
        out(b.coords[r], b.coords[c]) = local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return out;
}

bool InitialData::in_domain(const Vector& m) const {
  if (m.size() != dim_) return false;
  for (const auto& b : blocks_) {
    if (std::holds_alternative<Constant>(b.family)) continue;
    if (!fam_in_domain(b.family, gather(m, b.coords))) return false;
  }
  return true;
}

bool InitialData::x_in_domain(const Vector& x) const {
  if (x.size() != dim_) return false;
  for (const auto& b : blocks_) {
    if (!fam_x_in_domain(b.family, gather(x, b.coords))) return false;
  }
  return true;
}

Box InitialData::m_box() const {
  Box box{Vector(dim_), Vector(dim_)};
  for (const auto& b : blocks_) {
    const Box local = fam_box(b.family);
    for (std::size_t k = 0; k < b.coords.size(); ++k) {
      box.lo(b.coords[k]) = local.lo(static_cast<Eigen::Index>(k));
      box.hi(b.coords[k]) = local.hi(static_cast<Eigen::Index>(k));
    }
  }
  return box;
}

Vector InitialData::clip_to_domain(const Vector& m) const {
  Vector out = m;
  for (const auto& b : blocks_) {
    Vector local = std::holds_alternative<Constant>(b.family) ? std::get<Constant>(b.family).c
                                                              : fam_clip(b.family, gather(m, b.coords));
    for (std::size_t k = 0; k < b.coords.size(); ++k) out(b.coords[k]) = local(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace hodo
