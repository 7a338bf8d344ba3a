#include "hpencil/scattering1d.hpp"

#include <cmath>
#include <limits>

#include "hpencil/errors.hpp"
#include "hpencil/quadrature.hpp"

namespace hp {

namespace {

// -y'' + tau Q y = k^2 y as a first-order system on stacked [y; y'].
SolutionTrajectory companion(const PotentialGrid& q, cplx k2, cplx tau,
                             const std::vector<double>& nodes, const Matrix& init,
                             const OdeOptions& opt) {
  const int n = q.dim();
  Matrix qr;
  OdeRhs rhs = [&, n](double r, const Matrix& y, Matrix& dy) {
    q.at(r, qr);
    dy.resize(y.rows(), y.cols());
    dy.topRows(n) = y.bottomRows(n);
    dy.bottomRows(n).noalias() = tau * (qr * y.topRows(n));
    dy.bottomRows(n) -= k2 * y.topRows(n);
  };
  SolutionTrajectory full = integrate(rhs, init, nodes, opt);
  SolutionTrajectory out;
  out.nodes = std::move(full.nodes);
  out.values.reserve(full.values.size());
  out.derivs.reserve(full.values.size());
  for (const auto& v : full.values) {
    out.values.push_back(v.topRows(n));
    out.derivs.push_back(v.bottomRows(n));
  }
  return out;
}

void check_k(cplx k) {
  if (std::abs(k) < Wavenumber::kMin) {
    throw ParameterError("wavenumber too close to zero");
  }
}

std::size_t node_count(double length, double step) {
  const double m = length / step;
  const double mr = std::round(m);
  if (std::abs(m - mr) > 1e-9 * std::max(1.0, m)) {
    throw ParameterError("length is not a multiple of the grid step");
  }
  return static_cast<std::size_t>(mr) + 1;
}

}  // namespace

SourceVector SourceVector::sample(const std::function<double(double)>& f, double delta,
                                  double step, int dim) {
  if (!(step > 0.0) || !(delta > 0.0) || dim < 1) {
    throw ParameterError("source needs delta > 0, step > 0, dim >= 1");
  }
  const std::size_t m = node_count(delta, step);
  if (m < 3) {
    throw ParameterError("source support must span at least two grid steps");
  }
  SourceVector s;
  s.dim = dim;
  s.step = step;
  s.delta = step * static_cast<double>(m - 1);
  s.values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    s.values[i] = f(step * static_cast<double>(i));
    if (!std::isfinite(s.values[i])) {
      throw InputError("non-finite source sample", i);
    }
  }
  const double norm = s.l2_norm();
  if (!(norm > 0.0)) {
    throw ParameterError("source vanishes identically");
  }
  for (double& v : s.values) {
    v /= norm;
  }
  return s;
}

SourceVector SourceVector::indicator(double delta, double step, int dim) {
  return sample([](double) { return 1.0; }, delta, step, dim);
}

double SourceVector::l2_norm() const {
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    sq[i] = values[i] * values[i];
  }
  return std::sqrt(quad::simpson(sq, step));
}

SolutionTrajectory regular_solution_c(const PotentialGrid& q, cplx k, cplx t, double r_end,
                                      const OdeOptions& opt) {
  check_k(k);
  const double R = r_end > 0.0 ? r_end : q.support_radius();
  if (R > q.extent() * (1 + 1e-12)) {
    throw ParameterError("regular solution requested beyond the grid");
  }
  const int n = q.dim();
  Matrix init = Matrix::Zero(2 * n, n);
  init.bottomRows(n).setIdentity();
  return companion(q, k * k, t, nodes_between(q, 0.0, R), init, opt);
}

SolutionTrajectory regular_solution(const PotentialGrid& q, const Wavenumber& k, double t,
                                    const OdeOptions& opt) {
  return regular_solution_c(q, k.k, t, 0.0, opt);
}

SolutionTrajectory jost_solution_c(const PotentialGrid& q, cplx k, cplx t, const OdeOptions& opt) {
  check_k(k);
  const int n = q.dim();
  const double R = q.support_radius();
  const cplx e = std::exp(kI * k * R);
  Matrix init(2 * n, n);
  init.topRows(n) = e * Matrix::Identity(n, n);
  init.bottomRows(n) = (kI * k * e) * Matrix::Identity(n, n);
  return companion(q, k * k, t, nodes_between(q, R, 0.0), init, opt);
}

SolutionTrajectory jost_solution(const PotentialGrid& q, const Wavenumber& k, double t,
                                 const OdeOptions& opt) {
  return jost_solution_c(q, k.k, t, opt);
}

double gronwall_bound(double l2_squared, double im_k, double xi) {
  if (!(im_k > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(xi * xi * l2_squared / (8.0 * im_k)) *
         (1.0 + std::abs(xi) * std::sqrt(l2_squared) / (2.0 * std::sqrt(2.0 * im_k)));
}

PencilTrajectory pencil_jost_trajectory(const PotentialGrid& q, const Wavenumber& kw, double xi,
                                        const OdeOptions& opt) {
  const cplx k = kw.k;
  check_k(k);
  const int n = q.dim();
  const double R = q.support_radius();
  const cplx c = kI * (xi / 2.0);
  const Matrix eye = Matrix::Identity(n, n);

  // U1(0,R), U2(0,R) forward; the backward pass then re-creates U(0,r)
  // alongside S so that no interpolation enters the coefficient.
  Matrix qr, qu;
  OdeRhs urhs = [&](double r, const Matrix& y, Matrix& dy) {
    q.at(r, qr);
    dy.resize(y.rows(), y.cols());
    dy.topRows(n).noalias() = -c * (qr * y.topRows(n));
    dy.bottomRows(n).noalias() = c * (qr * y.bottomRows(n));
  };
  Matrix u0(2 * n, n);
  u0.topRows(n) = eye;
  u0.bottomRows(n) = eye;
  const auto fwd = integrate(urhs, u0, nodes_between(q, 0.0, R), opt);
  const Matrix U1R = fwd.back().topRows(n);
  const Matrix U2R = fwd.back().bottomRows(n);

  // State [U1; U2; S1; S2~; K] with S2~ = e^{-2ikr} S2 and K' = -S2~* S2~.
  Matrix a, qu1;
  OdeRhs srhs = [&](double r, const Matrix& z, Matrix& dz) {
    q.at(r, qr);
    dz.resize(z.rows(), z.cols());
    const auto U1 = z.middleRows(0, n);
    const auto U2 = z.middleRows(n, n);
    const auto S1 = z.middleRows(2 * n, n);
    const auto S2 = z.middleRows(3 * n, n);
    qu1.noalias() = qr * U1;
    dz.middleRows(0, n) = -c * qu1;
    dz.middleRows(n, n).noalias() = c * (qr * U2);
    a = -c * Matrix(U2).partialPivLu().solve(qu1);
    dz.middleRows(2 * n, n).noalias() = -(a.adjoint() * S2);
    dz.middleRows(3 * n, n).noalias() = -(a * S1);
    dz.middleRows(3 * n, n) -= (2.0 * kI * k) * S2;
    dz.middleRows(4 * n, n).noalias() = -(S2.adjoint() * S2);
  };
  Matrix z0 = Matrix::Zero(5 * n, n);
  z0.middleRows(0, n) = U1R;
  z0.middleRows(n, n) = U2R;
  z0.middleRows(2 * n, n) = eye;
  const auto bwd = integrate(srhs, z0, nodes_between(q, R, 0.0), opt);

  const Matrix URinv = checked_inverse(U1R, "U1(0,R)");
  PencilTrajectory out;
  out.nodes = bwd.nodes;
  const std::size_t m = bwd.size();
  out.D.reserve(m);
  out.Dprime.reserve(m);
  out.mu_prime.reserve(m);
  std::vector<Matrix> gram(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Matrix& z = bwd.values[i];
    const double r = bwd.nodes[i];
    const Matrix v1 = z.middleRows(0, n) * z.middleRows(2 * n, n);
    const Matrix v2 = z.middleRows(n, n) * z.middleRows(3 * n, n);
    const cplx e = std::exp(kI * k * r);
    out.D.push_back(e * (v1 + v2) * URinv);
    out.Dprime.push_back((kI * k * e) * (v1 - v2) * URinv);
    out.mu_prime.push_back((-2.0 * kI * k) * v2 * URinv);
    gram[i] = out.mu_prime.back().adjoint() * out.mu_prime.back();
  }
  out.mu_prime_gram_simpson = quad::simpson(gram, q.step());
  if (m > 1 && std::abs((out.nodes[1] - out.nodes[0]) - q.step()) > 1e-9 * q.step()) {
    throw InternalConsistencyError("pencil nodes are not on the potential grid");
  }
  out.mu_prime_gram_exact =
      (4.0 * std::norm(k)) * URinv.adjoint() * bwd.values.front().middleRows(4 * n, n) * URinv;

  JostData& d = out.data;
  d.k = kw;
  d.xi = xi;
  d.D0 = out.D.front();
  d.D0prime = out.Dprime.front();
  d.cond_D0 = condition_number(d.D0);
  d.gronwall_bound = gronwall_bound(norms(q).l2, k.imag(), xi);
  if (!all_finite(d.D0) || !all_finite(d.D0prime)) {
    throw IntegrationError("non-finite pencil Jost data", 0.0);
  }
  if (k.imag() > 0.0 && op_norm(d.D0) > d.gronwall_bound * (1.0 + 1e-9)) {
    throw InternalConsistencyError("||D(0,k,xi)|| exceeds the Gronwall bound");
  }
  return out;
}

JostData pencil_jost(const PotentialGrid& q, const Wavenumber& k, double xi,
                     const OdeOptions& opt) {
  return pencil_jost_trajectory(q, k, xi, opt).data;
}

Vector fhat_c(const PotentialGrid& q, const SourceVector& f, cplx k, cplx t,
              const OdeOptions& opt) {
  if (f.dim != q.dim()) {
    throw ParameterError("source and potential dimensions differ");
  }
  if (std::abs(f.step - q.step()) > 1e-9 * q.step()) {
    throw ParameterError("source step differs from the potential grid step");
  }
  if (f.delta > q.support_radius() * (1 + 1e-12)) {
    throw ParameterError("source support exceeds [0, R]");
  }
  const auto alpha = regular_solution_c(q, std::conj(k), std::conj(t), f.delta, opt);
  if (alpha.size() != f.values.size()) {
    throw InternalConsistencyError("source nodes do not match the regular solution");
  }
  std::vector<Vector> integrand(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    integrand[i] = alpha.values[i].row(0).adjoint() * f.values[i];
  }
  return quad::simpson(integrand, f.step);
}

Vector fhat(const PotentialGrid& q, const SourceVector& f, const Wavenumber& k, double t,
            const OdeOptions& opt) {
  return fhat_c(q, f, k.k, t, opt);
}

ScatteringPair scattering_coefficients(const Matrix& J0, const Matrix& J0prime, cplx k) {
  const Matrix scaled = J0prime / (kI * k);
  return {(J0 + scaled) / 2.0, (J0 - scaled) / 2.0};
}

ScatteringPair scattering_coefficients(const PotentialGrid& q, const Wavenumber& k, double t,
                                       const OdeOptions& opt) {
  if (!k.is_real()) {
    throw ParameterError("scattering coefficients need a real wavenumber");
  }
  const auto J = jost_solution(q, k, t, opt);
  return scattering_coefficients(J.values.front(), J.derivs.front(), k.k);
}

HerglotzValue herglotz_G(const PotentialGrid& q, const Wavenumber& k, double xi,
                         const OdeOptions& opt) {
  if (k.is_real()) {
    throw ParameterError("Herglotz function needs Im k > 0");
  }
  const JostData d = pencil_jost(q, k, xi, opt);
  const Matrix Dinv = checked_inverse(d.D0, "D(0,k,xi)");
  HerglotzValue out;
  out.G = d.D0prime * Dinv / k.k;
  out.min_im_eigenvalue = min_eigenvalue_hermitian(im_part(out.G));
  return out;
}

double weyl_identity_residual(const PencilTrajectory& p, GramQuadrature quadrature) {
  const cplx k = p.data.k.k;
  const Matrix Dinv = checked_inverse(p.data.D0, "D(0,k,xi)");
  const Matrix& gram =
      quadrature == GramQuadrature::Simpson ? p.mu_prime_gram_simpson : p.mu_prime_gram_exact;
  const Matrix lhs = Dinv.adjoint() * Dinv + Dinv.adjoint() * ((k.imag() / std::norm(k)) * gram) * Dinv;
  const Matrix rhs = im_part(p.data.D0prime * Dinv / k);
  return op_norm(lhs - rhs);
}

double weyl_identity_residual(const PotentialGrid& q, const Wavenumber& k, double xi,
                              GramQuadrature quadrature, const OdeOptions& opt) {
  if (k.is_real()) {
    throw ParameterError("Weyl identity needs Im k > 0");
  }
  return weyl_identity_residual(pencil_jost_trajectory(q, k, xi, opt), quadrature);
}

ScatteringSolution solution_u(const PotentialGrid& q, const SourceVector& f, const Wavenumber& kw,
                              double t, const OdeOptions& opt) {
  if (!kw.is_real()) {
    throw ParameterError("solution_u needs a real wavenumber");
  }
  if (f.dim != q.dim() || std::abs(f.step - q.step()) > 1e-9 * q.step() ||
      f.delta > q.support_radius() * (1 + 1e-12)) {
    throw ParameterError("source does not fit the potential grid");
  }
  const cplx k = kw.k;
  const int n = q.dim();
  const auto J = jost_solution(q, kw, t, opt);
  const auto alpha = regular_solution(q, kw, t, opt);
  const std::size_t nodes = J.size();
  const std::size_t m = f.values.size();

  Matrix J0inv;
  try {
    J0inv = checked_inverse(J.values.front(), "J(0,k,t)");
  } catch (const ConditioningError&) {
    throw ResonanceError(k);
  }
  const Matrix J0invAdj = J0inv.adjoint();
  const Matrix gram = J0invAdj * J0inv;

  std::vector<Vector> g12(m), g22(m), af(m);
  for (std::size_t i = 0; i < m; ++i) {
    af[i] = alpha.values[i].row(0).adjoint() * f.values[i];
    const Vector jf = J.values[i].row(0).adjoint() * f.values[i];
    g12[i] = -(J0inv * af[i]);
    g22[i] = (2.0 * kI * k) * (gram * af[i]) + J0invAdj * jf;
  }
  const auto c1 = quad::cumulative(g12, f.step);
  const auto c2cum = quad::cumulative(g22, f.step);
  const Vector c2tot = c2cum.back();

  ScatteringSolution out;
  out.fhat = quad::simpson(af, f.step);
  out.amplitude = J0inv * out.fhat;
  out.u.nodes = J.nodes;
  out.u.values.resize(nodes);
  out.u.derivs.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const Vector C1 = i < m ? c1[i] : c1.back();
    const Vector C2 = i < m ? Vector(c2tot - c2cum[i]) : Vector::Zero(n);
    out.u.values[i] = -J.values[i] * C1 + alpha.values[i] * C2;
    out.u.derivs[i] = -J.derivs[i] * C1 + alpha.derivs[i] * C2;
  }

  out.dirichlet_residual = out.u.values.front().norm();
  double tail = 0.0;
  for (std::size_t i = m - 1; i < nodes; ++i) {
    tail = std::max(tail, (out.u.values[i] - J.values[i] * out.amplitude).norm());
  }
  const double R = q.support_radius();
  const cplx e = std::exp(kI * k * R);
  tail = std::max(tail, (out.u.values.back() - e * out.amplitude).norm());
  tail = std::max(tail, (out.u.derivs.back() - (kI * k * e) * out.amplitude).norm());
  out.tail_residual = tail;

  std::vector<cplx> flux(m);
  for (std::size_t i = 0; i < m; ++i) {
    flux[i] = f.values[i] * out.u.values[i](0, 0);
  }
  const cplx inner = quad::simpson(flux, f.step);
  out.flux_residual = std::abs(inner.imag() - k.real() * out.amplitude.squaredNorm());
  return out;
}

}  // namespace hp
