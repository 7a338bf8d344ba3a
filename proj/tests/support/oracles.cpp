#include "oracles.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using hp::kI;

cplx sqrt_upper(cplx z) {
  cplx s = std::sqrt(z);
  if (s.imag() < 0.0 || (s.imag() == 0.0 && s.real() < 0.0)) {
    s = -s;
  }
  return s;
}

Matrix expm(const Matrix& a) { return a.exp(); }

namespace {
cplx kappa_of(double q, double t, cplx k) {
  cplx kap = sqrt_upper(k * k - t * q);
  if (std::abs(kap) < 1e-12) {
    kap = 1e-12;
  }
  return kap;
}
}  // namespace

cplx const_alpha(double q, double t, cplx k, double r) {
  const cplx kap = kappa_of(q, t, k);
  return std::sin(kap * r) / kap;
}

cplx const_alpha_prime(double q, double t, cplx k, double r) {
  const cplx kap = kappa_of(q, t, k);
  return std::cos(kap * r);
}

// On [0,R]: J = a e^{i kap r} + b e^{-i kap r} with J, J' continuous at R.
static void jost_coeffs(double q, double t, cplx k, double R, cplx& a, cplx& b, cplx& kap) {
  kap = kappa_of(q, t, k);
  const cplx e = std::exp(kI * k * R);
  a = e * std::exp(-kI * kap * R) * (1.0 + k / kap) / 2.0;
  b = e * std::exp(kI * kap * R) * (1.0 - k / kap) / 2.0;
}

cplx const_jost(double q, double t, cplx k, double R, double r) {
  cplx a, b, kap;
  jost_coeffs(q, t, k, R, a, b, kap);
  return a * std::exp(kI * kap * r) + b * std::exp(-kI * kap * r);
}

cplx const_jost_prime(double q, double t, cplx k, double R, double r) {
  cplx a, b, kap;
  jost_coeffs(q, t, k, R, a, b, kap);
  return kI * kap * (a * std::exp(kI * kap * r) - b * std::exp(-kI * kap * r));
}

cplx const_fhat_indicator(double q, double t, cplx k, double delta) {
  const cplx kap = kappa_of(q, t, k);
  return (1.0 - std::cos(kap * delta)) / (kap * kap) / std::sqrt(delta);
}

Matrix Gen::hermitian(int n, double scale) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = uniform(-1, 1);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = cplx(uniform(-1, 1), uniform(-1, 1)) / std::sqrt(2.0);
      m(j, i) = std::conj(m(i, j));
    }
  }
  return scale * m;
}

hp::PotentialGrid random_potential(int n, double R, double h, double amplitude, std::uint64_t seed,
                                   double decay) {
  hp::PotentialSpec spec;
  spec.kind = hp::potential_spec::RandomHermitian{amplitude, decay, seed};
  spec.dim = n;
  spec.step = h;
  spec.support_radius = R;
  return hp::build_potential(spec);
}

hp::PotentialGrid smooth_potential(int n, double R, double h, double amplitude) {
  hp::PotentialSpec spec;
  spec.dim = n;
  spec.step = h;
  spec.support_radius = R;
  spec.kind = hp::potential_spec::ClosedForm{[n, amplitude](double r) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double s = std::cos(1.3 * r + 0.7 * (i + 1) * (j + 1));
        const double c = i == j ? 0.0 : std::sin(0.9 * r * (i - j));
        m(i, j) = cplx(s, c);
      }
    }
    return Matrix(amplitude * std::exp(-r) * (m + m.adjoint()) / 2.0);
  }};
  return hp::build_potential(spec);
}

}  // namespace oracle
