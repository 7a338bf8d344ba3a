#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hpencil/linalg.hpp"
#include "hpencil/potential.hpp"

namespace hp {

/// Matrix-valued solution sampled at grid nodes (ascending r) with its derivative.
/// Between nodes, at() evaluates the cubic Hermite interpolant.
class SolutionTrajectory {
public:
  std::vector<double> nodes;
  std::vector<Matrix> values;
  std::vector<Matrix> derivs;

  std::size_t size() const noexcept { return nodes.size(); }
  bool empty() const noexcept { return nodes.empty(); }
  const Matrix& front() const { return values.front(); }
  const Matrix& back() const { return values.back(); }

  /// Index of the node at r (within 1e-9 relative), if any.
  std::optional<std::size_t> index_of(double r) const;

  Matrix at(double r) const;
  void at(double r, Matrix& out) const;
};

struct OdeOptions {
  double tol = 1e-10;                  ///< per-step error bound (mixed absolute/relative)
  std::size_t max_steps = 50'000'000;  ///< total accepted + rejected steps
};

/// Right-hand side dy = f(r, y). Must be a pure function of its arguments.
using OdeRhs = std::function<void(double r, const Matrix& y, Matrix& dy)>;

/// Coefficient A(r) of a linear system Y' = A(r) Y.
using Coefficient = std::function<void(double r, Matrix& a)>;

/// Adaptive Dormand-Prince 5(4) through the given nodes (strictly monotone,
/// either direction). Nodes act as breakpoints: steps never straddle one, and
/// right-hand sides are evaluated strictly inside the current node interval so
/// coefficients may jump at nodes. Throws IntegrationError on step-size
/// underflow or a non-finite state.
SolutionTrajectory integrate(const OdeRhs& rhs, const Matrix& initial,
                             std::span<const double> nodes, const OdeOptions& opt = {});

/// Y' = A(r) Y with Y(from) = initial; reported at every grid node between
/// from and to (plus both endpoints). Integration may run in either direction.
SolutionTrajectory integrate_linear(const Coefficient& coefficient, const Matrix& initial,
                                    std::span<const double> grid, double from, double to,
                                    double tol = 1e-10);

/// Grid nodes of q lying in [min(a,b), max(a,b)] ordered from a to b, with a
/// and b themselves always included.
std::vector<double> nodes_between(const PotentialGrid& q, double a, double b);
std::vector<double> nodes_between(std::span<const double> grid, double a, double b);

/// Spectral parameter k with its regime.
struct Wavenumber {
  enum class Regime { RealAxis, UpperHalfPlane };

  cplx k;
  Regime regime;

  static constexpr double kMin = 1e-3;

  /// Real k with |k| >= kMin.
  static Wavenumber real(double k);
  /// k with Im k > 0.
  static Wavenumber upper(cplx k);
  /// Picks the regime from k: |Im k| <= 1e-14 is real-axis.
  static Wavenumber from(cplx k);

  bool is_real() const noexcept { return regime == Regime::RealAxis; }
};

/// Left-ordered exponential U(r0, r) solving U' = -sign (i xi / 2) Q(r) U,
/// U(r0) = I, reported on the grid nodes from r0 to r1. sign = +1 gives U_1,
/// sign = -1 gives U_2. Unitary for Hermitian Q.
SolutionTrajectory ordered_exponential(const PotentialGrid& q, double xi, double r0, double r1,
                                       int sign, const OdeOptions& opt = {});

}  // namespace hp
