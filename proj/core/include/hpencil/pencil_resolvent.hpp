#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hpencil/linalg.hpp"

namespace hp {

/// P(k) = -d^2/dx^2 + k xi v - k^2 on [0, L] with Dirichlet ends, second-order
/// central differences. Unknowns live on the N - 1 interior nodes x_i = i h.
struct PencilGrid1D {
  double L = 0.0;
  int N = 0;
  double h = 0.0;
  std::vector<double> v;  ///< potential at the interior nodes

  int unknowns() const noexcept { return N - 1; }
  double x(int i) const noexcept { return h * (i + 1); }  ///< position of unknown i
};

PencilGrid1D pencil_grid(double L, int N, const std::function<double(double)>& v);

/// Bounded test potentials with sup norm 1.
enum class ShippedPotential { Cosine, RandomSteps, SineSum };

ShippedPotential shipped_potential_from(const std::string& name);
std::string to_string(ShippedPotential p);

/// cos 2x; seeded +-1 on unit cells; normalized sin(sqrt2 x) + sin(sqrt3 x + 1) + sin(sqrt5 x + 2).
PencilGrid1D shipped_grid(ShippedPotential kind, double L, int N, std::uint64_t seed = 1);

/// Discrete L2 norm with weight h.
double grid_norm(const PencilGrid1D& g, const Vector& f);

struct RootPair {
  double k1 = 0.0;  ///< larger root
  double k2 = 0.0;
  double c1 = 0.0;          ///< xi sum v |f|^2 h
  double grad_sq = 0.0;     ///< discrete |f'|^2, forward differences with zero ends
  double discriminant = 0.0;
};

/// Roots of k^2 - c1 k - |f'|^2, i.e. of (P(k) f, f) = 0 for |f| = 1.
RootPair hyperbolicity_roots(const PencilGrid1D& g, double xi, const Vector& f);

/// LU factorization of the tridiagonal P(k), reused across right-hand sides.
class PencilFactorization {
public:
  PencilFactorization(const PencilGrid1D& g, double xi, cplx k);
  ~PencilFactorization();
  PencilFactorization(PencilFactorization&&) noexcept;
  PencilFactorization& operator=(PencilFactorization&&) noexcept;

  /// P(k)^{-1} rhs, column by column.
  Matrix solve(const Matrix& rhs) const;
  /// P(k) x
  Matrix apply(const Matrix& x) const;

  cplx k() const noexcept { return k_; }
  int size() const noexcept;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  cplx k_;
};

struct PencilSolve {
  Vector psi;
  double norm_f = 0.0;
  double norm_psi = 0.0;
  double bound = 0.0;  ///< (Im k)^{-2} |f|
  double slack = 0.0;  ///< bound - |psi|
  bool bound_ok = false;
  double residual = 0.0;  ///< |P psi - f| / |f|
};

PencilSolve solve_pencil(const PencilGrid1D& g, double xi, cplx k, const Vector& f);

/// Unit-width node masks [a, a + width).
std::vector<int> window_nodes(const PencilGrid1D& g, double a, double width = 1.0);

/// |chi2 P^{-1}(k) chi1| as the largest singular value of the exact block.
double windowed_norm(const PencilFactorization& fac, const std::vector<int>& win1,
                     const std::vector<int>& win2);

struct DecayFit {
  std::vector<double> separations;
  std::vector<double> log_norms;
  std::vector<double> excluded;  ///< separations whose norm fell below 1e-280
  double gamma_fit = 0.0;        ///< minus the slope of log norm against separation
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (x, y); returns {slope, intercept, r_squared}.
std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Left window fixed at [left, left + 1), right window at distance s for each
/// separation; separations must keep both windows inside (2, L - 2).
DecayFit combes_thomas_fit(const PencilGrid1D& g, double xi, cplx k,
                           const std::vector<double>& separations, double left = 2.0);

/// Small 3-D box [0, L]^3 with n interior nodes per side and the 7-point
/// Laplacian (sparse LU); n <= 24.
PencilSolve solve_pencil_3d(int n, double L, const std::function<double(double, double, double)>& v,
                            double xi, cplx k, const Vector& f);

}  // namespace hp
