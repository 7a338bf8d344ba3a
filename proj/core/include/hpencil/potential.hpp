#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "hpencil/linalg.hpp"

namespace hp {

/// Hermitian matrix-valued potential Q(r) sampled at r = 0, h, 2h, ..., r_max.
///
/// Samples beyond the support radius are exactly zero, and between nodes the
/// potential is the linear interpolant, cut to zero for r > support_radius.
/// The support radius is always a grid node. Instances are immutable.
class PotentialGrid {
public:
  /// Validates Hermiticity (1e-12), finiteness and the zero tail.
  PotentialGrid(int dim, double step, std::vector<Matrix> samples, double support_radius);

  int dim() const noexcept { return dim_; }
  double step() const noexcept { return step_; }
  double support_radius() const noexcept { return support_; }
  double extent() const noexcept { return step_ * static_cast<double>(samples_.size() - 1); }
  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t support_index() const noexcept { return support_index_; }
  double node(std::size_t i) const noexcept { return step_ * static_cast<double>(i); }
  const Matrix& sample(std::size_t i) const { return samples_.at(i); }
  const std::vector<Matrix>& samples() const noexcept { return samples_; }

  /// Linear interpolant; zero beyond the support radius and the grid.
  Matrix at(double r) const;
  void at(double r, Matrix& out) const;

  /// Grid node index for r, or nullopt when r is not (within 1e-9 h) a node.
  std::optional<std::size_t> node_index(double r) const;

private:
  int dim_;
  double step_;
  double support_;
  std::size_t support_index_;
  std::vector<Matrix> samples_;
};

struct PotentialNorms {
  double l2 = 0.0;                      ///< int ||Q(s)||^2 ds (squared L2 norm of the operator norm)
  double linf = 0.0;                    ///< max_i ||Q(r_i)||
  double radial_sup_l2_weighted = 0.0;  ///< int r ||Q(r)||^2 dr
};

namespace potential_spec {

struct Zero {};

struct Constant {
  Matrix block;  ///< Hermitian, dim x dim
};

/// Arbitrary Hermitian matrix function sampled at the nodes.
struct ClosedForm {
  std::function<Matrix(double)> entries;
};

/// Random Hermitian matrices scaled by amplitude*(1+r)^(-decay). Diagonal
/// entries are uniform on [-1,1], off-diagonal real and imaginary parts
/// uniform on [-1,1]/sqrt(2). With cell = 0 every node gets an independent
/// draw; with cell > 0 one draw is held on each [j*cell, (j+1)*cell), so the
/// potential does not depend on the grid step.
struct RandomHermitian {
  double amplitude = 1.0;
  double decay_exponent = 0.0;
  std::uint64_t seed = 0;
  double cell = 0.0;
};

/// Pre-sampled values at r = 0, h, 2h, ...
struct Tabulated {
  std::vector<Matrix> samples;
};

}  // namespace potential_spec

struct PotentialSpec {
  std::variant<potential_spec::Zero, potential_spec::Constant, potential_spec::ClosedForm,
               potential_spec::RandomHermitian, potential_spec::Tabulated>
      kind;
  int dim = 1;
  double step = 0.0;            ///< 0 selects the default 1e-3 * support_radius
  double support_radius = 1.0;  ///< R
  double extent = 0.0;          ///< r_max; 0 means r_max = R
};

PotentialGrid build_potential(const PotentialSpec& spec);

/// Pi_n Q chi_[0,R] Pi_n on the same grid: upper-left n x n block, zero beyond R.
PotentialGrid truncate(const PotentialGrid& q, int n, double R);

PotentialNorms norms(const PotentialGrid& q);

/// Reads a tabulated potential: each row is r followed by Re(Q_ij), Im(Q_ij)
/// pairs in row-major order. Rows must sit on a uniform grid starting at 0.
/// Comment lines start with '#'; a non-numeric first line is a header.
PotentialSpec read_tabulated_csv(std::istream& in, std::optional<double> support_radius = {});

}  // namespace hp
