#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/SparseCore>

#include "hpencil/ode.hpp"
#include "hpencil/scattering1d.hpp"

namespace hp {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Spherical-mode bookkeeping for the frequency splitting on r >= 1.
/// Coefficients f_l^m (m <= b, |l| <= m) are stored at index m^2 + l + m.
struct ModeLayout {
  double alpha = 0.66;
  int b = 1;
  std::vector<double> lambdas;     ///< lambda_m = -m(m+1)
  std::vector<double> thresholds;  ///< r_m = (m(m+1))^{1/(2 alpha)}, r_0 = 1
  std::vector<int> mode_dims;      ///< 2m + 1

  int dim() const noexcept { return (b + 1) * (b + 1); }
  static int index(int m, int l) noexcept { return m * m + l + m; }
  static int degree_of(int idx) noexcept;

  /// Largest m <= b with r_m <= r (closed-left band convention); 0 for r < r_1.
  int band(double r) const;
  /// s(r) = |lambda_band(r)|^{1/2}.
  double s(double r) const;
};

ModeLayout mode_layout(double alpha, int b);

/// Diagonals (per coefficient) of M1(r), M2(r), B1(r) = B M1 and B_{2,b}(r) = B_b M2.
struct SplitMultipliers {
  Eigen::VectorXd m1;
  Eigen::VectorXd m2;
  Eigen::VectorXd b1;
  Eigen::VectorXd b2;
};

SplitMultipliers split_multipliers(const ModeLayout& layout, double r);

/// V(r) = sum_j profile_j(r) Theta_j with Hermitian angular operators Theta_j
/// in the truncated harmonic basis.
class CouplingMatrixFunction {
public:
  struct Term {
    std::function<double(double)> profile;
    SparseMatrix op;
  };

  CouplingMatrixFunction() = default;
  CouplingMatrixFunction(int dim, std::vector<Term> terms, bool spherically_symmetric = false);

  int dim() const noexcept { return dim_; }
  bool spherically_symmetric() const noexcept { return symmetric_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  /// out = V(r) u
  void apply(double r, const Matrix& u, Matrix& out) const;
  Matrix dense(double r) const;

  /// Declared envelope |V(r)| <= C <r>^{-gamma}; gamma = NaN when none.
  double envelope_constant = 0.0;
  double envelope_gamma = std::numeric_limits<double>::quiet_NaN();

  /// Zero coupling.
  static CouplingMatrixFunction zero(const ModeLayout& layout);
  /// Spherically symmetric v(r) times the identity.
  static CouplingMatrixFunction symmetric(const ModeLayout& layout, std::function<double(double)> v);
  /// amplitude <r>^{-gamma} cos(theta): couples (m, l) to (m +- 1, l).
  static CouplingMatrixFunction dipole(const ModeLayout& layout, double amplitude, double gamma);
  /// amplitude <r>^{-gamma} Theta with a seeded random Hermitian Theta of unit norm.
  static CouplingMatrixFunction random(const ModeLayout& layout, double amplitude, double gamma,
                                       std::uint64_t seed);

private:
  int dim_ = 0;
  std::vector<Term> terms_;
  bool symmetric_ = false;
};

/// Which part of V-tilde = -B1/r^2 + V drives the evolution: the coupling is
/// switched on for lower < r < upper. full(), tail(d) = V_(d) and truncated(R)
/// = V_R cover the usual variants; both edges may be set at once.
struct CouplingWindow {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  bool low_band = true;  ///< include -B1/r^2

  static CouplingWindow full() { return {}; }
  static CouplingWindow tail(double d) { return {d, std::numeric_limits<double>::infinity()}; }
  static CouplingWindow truncated(double R) { return {0.0, R}; }

  bool active(double r) const { return r > lower && r < upper; }
};

/// kappa = -1/(2ik).
cplx kappa_of(cplx k);

struct Evolution {
  SolutionTrajectory u;       ///< U(rho, r) eta on the nodes
  std::vector<double> norms;  ///< Frobenius norm of U eta per node
};

struct EvolveOptions {
  CouplingWindow window;
  std::vector<double> report;  ///< extra output radii; empty selects 64 per decade
  OdeOptions ode;
};

/// U' = kappa B_{2,b}(r)/r^2 U + (xi/2i) V-tilde(r) U, U(rho) = I, applied to
/// eta (dim x p). Mode thresholds, window edges and report radii are nodes.
Evolution evolve_U(const ModeLayout& layout, const CouplingMatrixFunction& v, const Wavenumber& k,
                   double xi, double rho, double r, const Matrix& eta, const EvolveOptions& opt = {});

/// Pure m = 0 mode ("the constant function 1" on the sphere, normalized).
Matrix lowest_mode(const ModeLayout& layout);

struct TwistOptions {
  double d = 20.0;
  double r_max = 1e4;
  double gamma = 0.95;  ///< decay exponent used for the zeta/eta diagnostics
  int per_decade = 64;
  OdeOptions ode;
};

struct TwistResult {
  double liminf_estimate = 0.0;  ///< min |u| over [0.75 r_max, r_max]
  std::vector<double> r;
  std::vector<double> norm;
  // Per threshold r_m (m = 1.. while r_m <= r_max):
  std::vector<int> m;
  std::vector<double> r_m;
  std::vector<double> alpha_m;  ///< |M1(r_m) u(r_m)|
  std::vector<double> beta_m;   ///< |M2(r_m) u(r_m)|
  std::vector<double> zeta_m;
  std::vector<double> eta_m;
  double damping_C = 0.0;  ///< largest C with e^{-C m^{1-1/alpha}} above the exact band damping
  double forcing_c = 0.0;  ///< smallest c making the beta recursion hold
  double zeta_C = 0.0;     ///< max zeta_m / m^{(1-gamma)/alpha - 1}
  double eta_C = 0.0;      ///< max eta_m / m^{2(1-gamma)/alpha - 2}
  bool non_expansive = true;
};

/// Evolves the lowest mode from r = 1 with the tail coupling V-tilde_(d).
TwistResult twist_experiment(const ModeLayout& layout, const CouplingMatrixFunction& v,
                             const Wavenumber& k, double xi, const TwistOptions& opt = {});

struct AdjointResult {
  std::vector<double> t;
  std::vector<double> norm_w;
  std::vector<double> dissipated;             ///< 2 Re(kappa) int_t^{r_end} |<B2 w, w>|/s^2 ds
  std::vector<double> conservation_residual;  ///< | |w(t)|^2 + dissipated - |eta|^2 |
  std::vector<double> tail_derivative_l2;     ///< int_t^{r_end} |w'|^2 ds
  double max_residual = 0.0;
};

/// w' = -[conj(kappa) B2/rho^2 - (xi/2i) V-tilde] w integrated backward from
/// w(r_end) = eta. The window must be compact (upper < r_end). Both tail
/// integrals are carried as extra ODE states; results are reported at t
/// (each in [1, r_end]) in the order given.
AdjointResult adjoint_energy_identity(const ModeLayout& layout, const CouplingMatrixFunction& v,
                                      const CouplingWindow& window, const Wavenumber& k, double xi,
                                      const Vector& eta, std::vector<double> t, double r_end,
                                      const OdeOptions& opt = {});

struct BalanceResult {
  double J_norm = 0.0;    ///< |m(infinity)|
  double lhs = 0.0;       ///< |J|^2 + (Im k/|k|^2) int |m'|^2
  double rhs = 0.0;       ///< |k|^{-2} Im[k int phi conj(g) e^{2 Im k r}]
  double residual = 0.0;  ///< |lhs - rhs|
  double bound = 0.0;     ///< [sqrt|k| Im k]^{-1} (|g| |g e^{2 Im k r}|)^{1/2}
  bool bound_ok = false;
};

/// Radial (m = 0) balance identity for -phi'' + k xi v phi - k^2 phi = g,
/// phi(0) = 0, outgoing, with m = phi e^{-ikr}. Needs dim 1 data and Im k > 0.
BalanceResult radial_balance_identity(const PotentialGrid& v, const SourceVector& g,
                                      const Wavenumber& k, double xi, const OdeOptions& opt = {});

}  // namespace hp
