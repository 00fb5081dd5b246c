#pragma once

// Force specification F/rho = g + A u and the registry of initial-data
// families with analytic inverse maps phi = (u0)^{-1} and their Jacobians.

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hodo/matops.hpp"

namespace hodo {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ForceSpec {
 public:
  ForceSpec(Matrix a, Vector g, double rank_tol = 1e-10);

  int dim() const { return static_cast<int>(g_.size()); }
  const Matrix& A() const { return a_; }
  const Vector& g() const { return g_; }
  int rank() const { return rank_; }
  /// rank(A) < n; routes generic vs degenerate pipelines.
  bool degenerate() const { return rank_ < dim(); }
  bool a_is_zero() const { return rank_ == 0; }
  /// True when A = a I for some scalar a (including n = 1).
  bool scalar_a() const;
  /// Scalar a for scalar_a() problems.
  double scalar_value() const;

 private:
  Matrix a_;
  Vector g_;
  int rank_;
};

namespace presets {
/// A = omega [[0, 1], [-1, 0]].
Matrix coriolis2d_matrix(double omega);
/// Skew matrix of u -> -omega x u.
Matrix coriolis3d_matrix(const Vector& omega);
ForceSpec coriolis2d(double omega, const Vector& g);
/// omega along z, g = (0, 0, -gravity).
ForceSpec coriolis3d_z(double omega, double gravity);
ForceSpec coriolis3d(const Vector& omega, const Vector& g);
ForceSpec diagonal(const Vector& a, const Vector& g);
ForceSpec scalar1d(double a, double g);
}  // namespace presets

// ---------------------------------------------------------------------------
// Initial-data families

/// u0 = mu (1 - tanh(kappa x)); M in the open interval between 0 and 2 mu.
struct Tanh1D {
  double mu = 1.0;
  double kappa = 1.0;
};

/// u0 = eta exp(-kappa^2 x^2) on the half line sign(x) = branch.
struct Gauss1D {
  double eta = 1.0;
  double kappa = 1.0;
  int branch = 1;
};

/// u0 = (-tanh(x1 + eps x2), -tanh(eps x1 + x2)), eps != 1.
struct Tanh2D {
  double eps = 0.5;
};

/// u0 = amplitude (exp(-(x^2 + y^2)), exp(-(x^2 + 2 y^2))) on the quadrant
/// selected by (branch_x, branch_y).
struct Gauss2DCoriolis {
  double amplitude = 1.0;
  int branch_x = 1;
  int branch_y = 1;
};

/// u0 = R^{-1} x, phi(M) = R M.
struct LinearR {
  Matrix R;
};

/// u0 = c everywhere. No inverse map; M is pinned to c.
struct Constant {
  Vector c;
};

using Family = std::variant<Tanh1D, Gauss1D, Tanh2D, Gauss2DCoriolis, LinearR, Constant>;

int family_dim(const Family& f);
std::string family_name(const Family& f);

/// A family acting on a subset of the coordinates.
struct Block {
  std::vector<int> coords;
  Family family;
};

/// Open box containing the admissible M values (bounds may be infinite).
struct Box {
  Vector lo;
  Vector hi;
};

class InitialData {
 public:
  explicit InitialData(Family family);
  explicit InitialData(std::vector<Block> blocks);

  int dim() const { return dim_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  Vector u0(const Vector& x) const;
  /// Analytic Jacobian du0/dx.
  Matrix u0_jacobian(const Vector& x) const;

  Vector phi(const Vector& m) const;
  /// Analytic dphi_i/dM_m. Rows and columns of constant components are zero.
  Matrix phi_jacobian(const Vector& m) const;

  bool in_domain(const Vector& m) const;
  bool x_in_domain(const Vector& x) const;
  Box m_box() const;

  /// Components whose M is unknown (not pinned by a Constant block).
  const std::vector<int>& active() const { return active_; }
  bool has_constant() const { return static_cast<int>(active_.size()) < dim_; }
  /// Pinned M values; entries of active components are zero.
  const Vector& pinned() const { return pinned_; }

  /// Moves m into the strict interior of the M-domain (used for Newton guesses).
  Vector clip_to_domain(const Vector& m) const;

 private:
  void finalize();

  std::vector<Block> blocks_;
  int dim_ = 0;
  std::vector<int> active_;
  Vector pinned_;
};

}  // namespace hodo
