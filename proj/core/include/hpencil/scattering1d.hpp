#pragma once

#include <functional>
#include <vector>

#include "hpencil/ode.hpp"
#include "hpencil/potential.hpp"

namespace hp {

/// Boundary data of the pencil Jost solution D(r,k,xi) at r = 0.
struct JostData {
  Wavenumber k;
  double xi = 0.0;
  Matrix D0;
  Matrix D0prime;
  double gronwall_bound = 0.0;  ///< +inf on the real axis
  double cond_D0 = 0.0;
};

struct ScatteringPair {
  Matrix A_frak;
  Matrix B_frak;
};

/// F(r) = (f(r), 0, ..., 0)^T sampled on r = 0, h, ..., delta with unit L2 norm.
struct SourceVector {
  int dim = 1;
  double step = 0.0;
  double delta = 0.0;
  std::vector<double> values;  ///< f at the nodes

  /// Samples f on [0, delta] with the given step (delta must be a multiple)
  /// and rescales to unit norm (Simpson).
  static SourceVector sample(const std::function<double(double)>& f, double delta, double step,
                             int dim);
  /// Normalized indicator of [0, delta].
  static SourceVector indicator(double delta, double step, int dim);

  double l2_norm() const;
};

/// Regular solution of -a'' + t Q a = k^2 a, a(0) = 0, a'(0) = I on [0, R].
SolutionTrajectory regular_solution(const PotentialGrid& q, const Wavenumber& k, double t,
                                    const OdeOptions& opt = {});

/// Same with arbitrary complex k and coupling (analytic continuation), on
/// [0, r_end] (r_end = 0 means R).
SolutionTrajectory regular_solution_c(const PotentialGrid& q, cplx k, cplx t, double r_end = 0.0,
                                      const OdeOptions& opt = {});

/// Jost solution J(r) = e^{ikr} I for r >= R, integrated backward to 0.
SolutionTrajectory jost_solution(const PotentialGrid& q, const Wavenumber& k, double t,
                                 const OdeOptions& opt = {});
SolutionTrajectory jost_solution_c(const PotentialGrid& q, cplx k, cplx t,
                                   const OdeOptions& opt = {});

/// Pencil Jost solution along [0, R] from the S1/S2 reduction.
struct PencilTrajectory {
  JostData data;
  std::vector<double> nodes;      ///< ascending grid nodes on [0, R]
  std::vector<Matrix> D;          ///< D(r)
  std::vector<Matrix> Dprime;     ///< D'(r)
  std::vector<Matrix> mu_prime;   ///< mu'(r), mu = D e^{-ikr}
  Matrix mu_prime_gram_simpson;   ///< Simpson quadrature of mu'* mu' on [0, R]
  Matrix mu_prime_gram_exact;     ///< same integral carried as an extra ODE state
};

PencilTrajectory pencil_jost_trajectory(const PotentialGrid& q, const Wavenumber& k, double xi,
                                        const OdeOptions& opt = {});

/// D(0,k,xi), D'(0,k,xi) and the Gronwall certificate. Throws
/// InternalConsistencyError if ||D0|| exceeds the certificate for Im k > 0.
JostData pencil_jost(const PotentialGrid& q, const Wavenumber& k, double xi,
                     const OdeOptions& opt = {});

/// exp(xi^2 |Q|_2^2 / (8 Im k)) (1 + |xi| |Q|_2 / (2 sqrt(2 Im k))); +inf for Im k <= 0.
double gronwall_bound(double l2_squared, double im_k, double xi);

/// Fhat(k,t) = int_0^delta a*(r,k,t) F(r) dr, the adjoint taken of the
/// solution at conjugated (k, t) so the result is analytic in k.
Vector fhat(const PotentialGrid& q, const SourceVector& f, const Wavenumber& k, double t,
            const OdeOptions& opt = {});
Vector fhat_c(const PotentialGrid& q, const SourceVector& f, cplx k, cplx t,
              const OdeOptions& opt = {});

ScatteringPair scattering_coefficients(const PotentialGrid& q, const Wavenumber& k, double t,
                                       const OdeOptions& opt = {});
ScatteringPair scattering_coefficients(const Matrix& J0, const Matrix& J0prime, cplx k);

struct HerglotzValue {
  Matrix G;
  double min_im_eigenvalue = 0.0;
};

/// G(k) = D'(0) D(0)^{-1} / k with the smallest eigenvalue of its imaginary part.
HerglotzValue herglotz_G(const PotentialGrid& q, const Wavenumber& k, double xi,
                         const OdeOptions& opt = {});

enum class GramQuadrature { Simpson, Ode };

/// Operator norm of
///   |D^{-1}|^2 + D^{-*} (Im k / |k|^2 int |mu'|^2) D^{-1} - Im(D' D^{-1} / k).
double weyl_identity_residual(const PotentialGrid& q, const Wavenumber& k, double xi,
                              GramQuadrature quadrature = GramQuadrature::Simpson,
                              const OdeOptions& opt = {});
double weyl_identity_residual(const PencilTrajectory& p, GramQuadrature quadrature);

struct ScatteringSolution {
  SolutionTrajectory u;       ///< column vector u(r) on [0, R] (values n x 1)
  Vector amplitude;           ///< A(k,t) = J^{-1}(0) Fhat
  Vector fhat;
  double dirichlet_residual = 0.0;  ///< |u(0)|
  double tail_residual = 0.0;       ///< max over nodes in [delta, R] of |u - J A|, plus |u'(R) - ik e^{ikR} A|
  double flux_residual = 0.0;       ///< |Im int F* u - k |A|^2|
};

/// Outgoing solution of -u'' + t Q u - k^2 u = F from the Green representation.
/// Throws ResonanceError when J(0,k,t) is numerically singular.
ScatteringSolution solution_u(const PotentialGrid& q, const SourceVector& f, const Wavenumber& k,
                              double t, const OdeOptions& opt = {});

}  // namespace hp
