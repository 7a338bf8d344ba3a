#include "hpencil/krein.hpp"

#include <cmath>

#include "hpencil/errors.hpp"

namespace hp {

KreinCoefficient::KreinCoefficient(PotentialGrid q, double xi, const OdeOptions& opt)
    : q_(std::move(q)),
      xi_(xi),
      u1_(ordered_exponential(q_, xi, 0.0, q_.support_radius(), 1, opt)),
      u2_(ordered_exponential(q_, xi, 0.0, q_.support_radius(), -1, opt)) {}

Matrix KreinCoefficient::assemble(double xi, const Matrix& q, const Matrix& u1, const Matrix& u2) {
  return (-kI * (xi / 2.0)) * u2.partialPivLu().solve(q * u1);
}

Matrix KreinCoefficient::at_node(std::size_t i) const {
  if (i >= u1_.size()) {
    return Matrix::Zero(q_.dim(), q_.dim());
  }
  return assemble(xi_, q_.sample(i), u1_.values[i], u2_.values[i]);
}

Matrix KreinCoefficient::at(double r) const {
  if (r > q_.support_radius()) {
    return Matrix::Zero(q_.dim(), q_.dim());
  }
  return assemble(xi_, q_.at(r), u1_.at(r), u2_.at(r));
}

KreinCoefficient krein_coefficient(const PotentialGrid& q, double xi, const OdeOptions& opt) {
  return KreinCoefficient(q, xi, opt);
}

SolutionTrajectory integrate_krein(const KreinCoefficient& a, cplx k, double r0, double r1,
                                   const OdeOptions& opt) {
  const PotentialGrid& q = a.potential();
  const int n = q.dim();
  const double R = q.support_radius();
  if (std::min(r0, r1) < 0.0 || std::max(r0, r1) > q.extent() * (1 + 1e-12)) {
    throw ParameterError("Krein integration span outside the grid");
  }
  const cplx tau = 2.0 * k;
  const cplx c = kI * (a.xi() / 2.0);

  // State [U1 (n x 2n, only the left block used); U2; X] stacked as 2n + 2n rows.
  Matrix z0 = Matrix::Zero(4 * n, 2 * n);
  const double ur = std::min(r0, R);
  z0.block(0, 0, n, n) = a.U1().at(ur);
  z0.block(n, 0, n, n) = a.U2().at(ur);
  z0.bottomRows(2 * n).setIdentity();

  Matrix qr, qu1, am;
  OdeRhs rhs = [&](double r, const Matrix& z, Matrix& dz) {
    q.at(r, qr);
    dz.setZero(z.rows(), z.cols());
    const auto U1 = z.block(0, 0, n, n);
    const auto U2 = z.block(n, 0, n, n);
    const auto X = z.bottomRows(2 * n);
    qu1.noalias() = qr * U1;
    dz.block(0, 0, n, n) = -c * qu1;
    dz.block(n, 0, n, n).noalias() = c * (qr * U2);
    am = -c * Matrix(U2).partialPivLu().solve(qu1);
    auto dX = dz.bottomRows(2 * n);
    dX.topRows(n).noalias() = (kI * tau) * X.topRows(n);
    dX.topRows(n).noalias() -= am.adjoint() * X.bottomRows(n);
    dX.bottomRows(n).noalias() = -(am * X.topRows(n));
  };
  const auto full = integrate(rhs, z0, nodes_between(q, r0, r1), opt);
  SolutionTrajectory out;
  out.nodes = full.nodes;
  out.values.reserve(full.size());
  out.derivs.reserve(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    out.values.push_back(full.values[i].bottomRows(2 * n));
    out.derivs.push_back(full.derivs[i].bottomRows(2 * n));
  }
  return out;
}

TransformCheck transform_equivalence(const PotentialGrid& q, cplx k, double xi,
                                     const OdeOptions& opt) {
  if (std::abs(k) < Wavenumber::kMin) {
    throw ParameterError("wavenumber too close to zero");
  }
  const int n = q.dim();
  const double R = q.support_radius();
  const Matrix eye = Matrix::Identity(n, n);

  auto y0 = [&](double r) {
    const cplx ep = std::exp(kI * k * r), em = std::exp(-kI * k * r);
    Matrix m(2 * n, 2 * n);
    m << ep * eye, em * eye, (kI * k * ep) * eye, (-kI * k * em) * eye;
    return m;
  };

  Matrix qr;
  Coefficient pencil = [&](double r, Matrix& a) {
    q.at(r, qr);
    a.setZero(2 * n, 2 * n);
    a.topRightCorner(n, n) = eye;
    a.bottomLeftCorner(n, n) = (k * xi) * qr - (k * k) * eye;
  };
  std::vector<double> grid(q.support_index() + 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = q.node(i);
  }
  const auto Y = integrate_linear(pencil, y0(0.0), grid, 0.0, R, opt.tol);

  const KreinCoefficient a(q, xi, opt);
  const auto X = integrate_krein(a, k, 0.0, R, opt);
  if (X.size() != Y.size() || a.U1().size() != Y.size()) {
    throw InternalConsistencyError("transform check grids disagree");
  }

  const cplx det_expected = std::pow(-2.0 * kI * k, n);
  TransformCheck out;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double r = Y.nodes[i];
    Matrix ue = Matrix::Zero(2 * n, 2 * n);
    ue.topLeftCorner(n, n) = std::exp(-2.0 * kI * k * r) * a.U1().values[i];
    ue.bottomRightCorner(n, n) = a.U2().values[i];
    const Matrix z = y0(r) * ue * X.values[i];
    const double scale = std::max(1.0, Y.values[i].cwiseAbs().maxCoeff());
    out.residual = std::max(out.residual, (Y.values[i] - z).cwiseAbs().maxCoeff() / scale);
    out.det_residual =
        std::max(out.det_residual, std::abs(z.determinant() - det_expected) / std::abs(det_expected));
  }
  return out;
}

}  // namespace hp
