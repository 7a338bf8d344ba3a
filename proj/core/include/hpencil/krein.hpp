#pragma once

#include "hpencil/ode.hpp"
#include "hpencil/potential.hpp"

namespace hp {

/// A(r,xi) = -(i xi/2) U2^{-1}(0,r) Q(r) U1(0,r) on [0, R], zero beyond R.
class KreinCoefficient {
public:
  KreinCoefficient(PotentialGrid q, double xi, const OdeOptions& opt = {});

  const PotentialGrid& potential() const noexcept { return q_; }
  double xi() const noexcept { return xi_; }
  const SolutionTrajectory& U1() const noexcept { return u1_; }
  const SolutionTrajectory& U2() const noexcept { return u2_; }

  /// A at grid node i (exact ordered exponentials).
  Matrix at_node(std::size_t i) const;
  /// A at arbitrary r (Hermite-interpolated ordered exponentials).
  Matrix at(double r) const;

  /// A from given U1(0,r), U2(0,r) and Q(r).
  static Matrix assemble(double xi, const Matrix& q, const Matrix& u1, const Matrix& u2);

private:
  PotentialGrid q_;
  double xi_;
  SolutionTrajectory u1_;
  SolutionTrajectory u2_;
};

KreinCoefficient krein_coefficient(const PotentialGrid& q, double xi, const OdeOptions& opt = {});

/// Fundamental solution X(r) of X' = [[2ik, -A*], [-A, 0]] X with X(r0) = I,
/// reported on the grid nodes between r0 and r1 (tau = 2k is fixed here).
/// U1, U2 are carried as extra states so A is exact between nodes.
SolutionTrajectory integrate_krein(const KreinCoefficient& a, cplx k, double r0, double r1,
                                   const OdeOptions& opt = {});

struct TransformCheck {
  double residual = 0.0;      ///< max_r |Y - Y0 U E X|_max / max(1, |Y|_max)
  double det_residual = 0.0;  ///< max_r |det(Y0 U E X) - (-2ik)^n| / |2k|^n
};

/// Compares the direct solution Y of the pencil system (Y(0) = Y0(0)) with
/// the factor chain Y0 U E X over the grid on [0, R].
TransformCheck transform_equivalence(const PotentialGrid& q, cplx k, double xi,
                                     const OdeOptions& opt = {});

}  // namespace hp
