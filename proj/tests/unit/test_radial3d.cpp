#include <cmath>

#include "doctest.h"
#include "hpencil/errors.hpp"
#include "hpencil/radial3d.hpp"
#include "oracles.hpp"

using namespace hp;
namespace ps = hp::potential_spec;

namespace {

// <Y_m^l | cos^2 theta | Y_m^l>
double cos2_expectation(int m, int l) {
  return 1.0 / 3.0 + (2.0 / 3.0) * (m * (m + 1.0) - 3.0 * l * l) / ((2.0 * m - 1) * (2.0 * m + 3));
}

PotentialGrid scalar_potential(std::function<double(double)> v, double R, double h) {
  PotentialSpec spec;
  spec.kind = ps::ClosedForm{[v](double r) { return Matrix::Constant(1, 1, v(r)); }};
  spec.support_radius = R;
  spec.step = h;
  return build_potential(spec);
}

}  // namespace

TEST_CASE("mode thresholds") {
  CHECK(std::abs(mode_layout(2.0 / 3.0, 3).thresholds[1] - std::pow(2.0, 0.75)) <= 1e-13);
  CHECK(std::abs(mode_layout(0.5, 3).thresholds[2] - 6.0) <= 1e-12);
  for (double a : {0.5, 0.66, 2.0 / 3.0}) {
    const auto L = mode_layout(a, 50);
    CHECK(L.dim() == 51 * 51);
    CHECK(L.thresholds[0] == 1.0);
    for (int m = 1; m < 50; ++m) {
      CHECK(L.thresholds[m + 1] > L.thresholds[m]);
      CHECK(L.lambdas[m] == -m * (m + 1.0));
      CHECK(L.mode_dims[m] == 2 * m + 1);
    }
    // band and s(r) are piecewise constant with closed-left intervals
    for (int m = 1; m < 50; ++m) {
      const double rm = L.thresholds[m];
      CHECK(L.band(rm) == m);
      CHECK(L.band(std::nextafter(rm, 0.0)) == m - 1);
      CHECK(L.s(0.5 * (rm + L.thresholds[m + 1])) == doctest::Approx(std::sqrt(m * (m + 1.0))));
    }
  }
  CHECK_THROWS_AS(mode_layout(1.0, 3), ParameterError);
  CHECK_THROWS_AS(mode_layout(0.0, 3), ParameterError);
  CHECK_THROWS_AS(mode_layout(0.5, 0), ParameterError);
  for (int idx = 0; idx < 400; ++idx) {
    const int m = ModeLayout::degree_of(idx);
    CHECK(m * m <= idx);
    CHECK(idx < (m + 1) * (m + 1));
  }
}

TEST_CASE("frequency splitting") {
  const auto L = mode_layout(0.66, 6);
  SUBCASE("lowest band below the first threshold") {
    const auto s = split_multipliers(L, 1.2);
    CHECK(s.m1[0] == 1.0);
    CHECK(s.m1.sum() == 1.0);
  }
  SUBCASE("partition of unity and the damped generator") {
    oracle::Gen gen(5);
    for (int trial = 0; trial < 200; ++trial) {
      const double r = std::exp(gen.uniform(0.0, std::log(2.0 * L.thresholds.back())));
      const auto s = split_multipliers(L, r);
      CHECK((s.m1 + s.m2 - Eigen::VectorXd::Ones(L.dim())).norm() == 0.0);
      CHECK(s.m1.cwiseProduct(s.m2).norm() == 0.0);
      const int band = L.band(r);
      for (int i = 0; i < L.dim(); ++i) {
        const int m = ModeLayout::degree_of(i);
        const double lam = m < L.b ? -m * (m + 1.0) : -L.b * (L.b + 1.0);
        CHECK(s.m1[i] == (m <= band ? 1.0 : 0.0));
        CHECK(s.b2[i] == (m <= band ? 0.0 : lam));
        CHECK(s.b1[i] == (m <= band ? -m * (m + 1.0) : 0.0));
      }
    }
  }
  SUBCASE("threshold belongs to the low band") {
    for (int m = 1; m <= L.b; ++m) {
      const auto s = split_multipliers(L, L.thresholds[m]);
      CHECK(s.m1[m * m] == 1.0);
      if (m < L.b) {
        CHECK(s.m2[(m + 1) * (m + 1)] == 1.0);
      }
    }
  }
}

TEST_CASE("dipole coupling matrix") {
  const auto L = mode_layout(0.66, 8);
  const auto v = CouplingMatrixFunction::dipole(L, 1.0, 0.0);
  const Matrix c = v.dense(0.0);
  CHECK(hermitian_defect(c) == 0.0);
  const Matrix c2 = c * c;
  for (int m = 0; m + 1 < L.b; ++m) {
    for (int l = -m; l <= m; ++l) {
      const int i = ModeLayout::index(m, l);
      CHECK(std::abs(c2(i, i) - cos2_expectation(m, l)) <= 1e-14);
    }
  }
  // cos(theta) only shifts the degree, keeps the order
  for (int i = 0; i < L.dim(); ++i) {
    for (int j = 0; j < L.dim(); ++j) {
      if (c(i, j) != 0.0) {
        CHECK(std::abs(ModeLayout::degree_of(i) - ModeLayout::degree_of(j)) == 1);
        CHECK(i - ModeLayout::degree_of(i) * (ModeLayout::degree_of(i) + 1) ==
              j - ModeLayout::degree_of(j) * (ModeLayout::degree_of(j) + 1));
      }
    }
  }
  const auto r = CouplingMatrixFunction::random(mode_layout(0.66, 3), 1.0, 1.0, 9);
  const Matrix rd = r.dense(0.0);
  CHECK(hermitian_defect(rd) <= 1e-15);
  CHECK(std::abs(op_norm(rd) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(CouplingMatrixFunction::random(mode_layout(0.66, 17), 1.0, 1.0, 9),
                  ParameterError);
}

TEST_CASE("free evolution") {
  const auto L = mode_layout(0.66, 6);
  const auto zero = CouplingMatrixFunction::zero(L);
  SUBCASE("lowest mode is never damped") {
    const auto ev = evolve_U(L, zero, Wavenumber::upper({0, 0.5}), -2.0, 1.0, 500.0, lowest_mode(L));
    for (double n : ev.norms) {
      CHECK(n == 1.0);
    }
  }
  SUBCASE("single high mode decays like the scalar exponential") {
    for (cplx k : {cplx(0, 0.5), cplx(0.3, 0.7), cplx(-1.1, 0.2)}) {
      const cplx kappa = -1.0 / (2.0 * kI * k);
      for (int m = 2; m <= L.b; ++m) {
        const double rho = L.thresholds[m - 1];
        const double r = L.thresholds[m];
        const double lam = m < L.b ? -m * (m + 1.0) : -L.b * (L.b + 1.0);
        Matrix eta = Matrix::Zero(L.dim(), 1);
        eta(ModeLayout::index(m, 0), 0) = 1.0;
        const auto ev = evolve_U(L, zero, Wavenumber::upper(k), 0.7, rho, r, eta);
        for (std::size_t i = 0; i < ev.u.size(); ++i) {
          const double s = ev.u.nodes[i];
          const cplx exact = std::exp(kappa * lam * (1.0 / rho - 1.0 / s));
          CHECK(std::abs(ev.u.values[i](ModeLayout::index(m, 0), 0) - exact) <= 1e-9);
          CHECK(ev.norms[i] <= std::exp(-kappa.real() * std::abs(lam) * (s - rho) / (s * rho)) + 1e-9);
        }
      }
    }
  }
  CHECK_THROWS_AS(evolve_U(L, zero, Wavenumber::upper({0, 1}), 1.0, 0.5, 2.0, lowest_mode(L)),
                  ParameterError);
}

TEST_CASE("dissipative evolution is non-expansive") {
  oracle::Gen gen(77);
  const auto L = mode_layout(0.66, 4);
  for (int trial = 0; trial < 6; ++trial) {
    const auto v = trial % 2 ? CouplingMatrixFunction::random(L, gen.uniform(0.5, 3), 0.9, gen.seed())
                             : CouplingMatrixFunction::dipole(L, gen.uniform(0.5, 3), 0.9);
    Matrix eta(L.dim(), 1);
    for (int i = 0; i < L.dim(); ++i) {
      eta(i, 0) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
    }
    EvolveOptions eo;
    eo.window = trial < 3 ? CouplingWindow::full() : CouplingWindow::tail(3.0);
    const auto ev = evolve_U(L, v, Wavenumber::upper({0, 0.5}), -2.0, 1.0, 200.0, eta, eo);
    for (std::size_t i = 1; i < ev.norms.size(); ++i) {
      CHECK(ev.norms[i] <= ev.norms[i - 1] + 1e-9);
    }
    CHECK(ev.norms.back() < ev.norms.front());
  }
}

TEST_CASE("evolution matches the matrix exponential for a constant generator") {
  // Between thresholds with a spherically symmetric constant coupling and no
  // low-band term the generator is diagonal but r-dependent only through 1/r^2;
  // use a pure m = 0 state with a constant coupling: u = e^{(xi/2i) v (r - rho)}.
  const auto L = mode_layout(0.66, 3);
  const auto v = CouplingMatrixFunction::symmetric(L, [](double) { return 0.8; });
  EvolveOptions eo;
  eo.window.low_band = false;
  const cplx k(0.4, 0.9);
  const double xi = 1.3;
  const auto ev = evolve_U(L, v, Wavenumber::upper(k), xi, 1.0, 1.5, lowest_mode(L), eo);
  for (std::size_t i = 0; i < ev.u.size(); ++i) {
    const cplx exact = std::exp(xi / (2.0 * kI) * 0.8 * (ev.u.nodes[i] - 1.0));
    CHECK(std::abs(ev.u.values[i](0, 0) - exact) <= 1e-10);
  }
}

TEST_CASE("twist experiment") {
  SUBCASE("no coupling keeps the lowest mode") {
    const auto L = mode_layout(0.66, 6);
    TwistOptions to;
    to.r_max = 200.0;
    const auto tw = twist_experiment(L, CouplingMatrixFunction::zero(L), Wavenumber::upper({0, 0.5}),
                                     -2.0, to);
    CHECK(tw.liminf_estimate == 1.0);
    CHECK(tw.non_expansive);
    for (std::size_t j = 0; j < tw.m.size(); ++j) {
      CHECK(tw.alpha_m[j] == 1.0);
      CHECK(tw.beta_m[j] == 0.0);
    }
  }
  SUBCASE("small dipole tail") {
    const auto L = mode_layout(0.66, 8);
    TwistOptions to;
    to.d = 5.0;
    to.r_max = 500.0;
    const auto v = CouplingMatrixFunction::dipole(L, 1.0, 0.95);
    const auto tw = twist_experiment(L, v, Wavenumber::upper({0, 0.5}), -2.0, to);
    CHECK(tw.non_expansive);
    CHECK(tw.liminf_estimate > 0.0);
    CHECK(tw.liminf_estimate < 1.0);
    REQUIRE(tw.alpha_m.size() == tw.beta_m.size());
    for (std::size_t j = 0; j < tw.m.size(); ++j) {
      CHECK(tw.alpha_m[j] * tw.alpha_m[j] + tw.beta_m[j] * tw.beta_m[j] <= 1.0 + 1e-9);
    }
    CHECK(tw.damping_C > 0.0);
    CHECK(tw.forcing_c >= 0.0);
    CHECK(std::isfinite(tw.zeta_C));
    CHECK(std::isfinite(tw.eta_C));
    // the beta recursion holds with the fitted constants
    const double k1 = 1.0 - 1.0 / L.alpha;
    const double p = (1.0 - 0.95) / L.alpha - 1.0;
    for (std::size_t j = 0; j + 1 < tw.m.size(); ++j) {
      const int m = tw.m[j];
      CHECK(tw.beta_m[j + 1] <=
            std::exp(-tw.damping_C * std::pow(m, k1)) * tw.beta_m[j] + tw.forcing_c * std::pow(m, p) + 1e-12);
    }
  }
  SUBCASE("r_max must pass the second threshold") {
    const auto L = mode_layout(0.66, 6);
    TwistOptions to;
    to.r_max = 0.9 * L.thresholds[2];
    CHECK_THROWS_AS(twist_experiment(L, CouplingMatrixFunction::zero(L), Wavenumber::upper({0, 0.5}),
                                     -2.0, to),
                    ParameterError);
  }
}

TEST_CASE("adjoint energy identity") {
  const auto L = mode_layout(0.66, 4);
  SUBCASE("free lowest mode") {
    Vector eta = Vector::Zero(L.dim());
    eta(0) = 1.0;
    const auto res = adjoint_energy_identity(L, CouplingMatrixFunction::zero(L), CouplingWindow::truncated(50),
                                             Wavenumber::upper({0, 0.5}), -2.0, eta, {10, 20, 40}, 60.0);
    for (std::size_t i = 0; i < res.t.size(); ++i) {
      CHECK(res.conservation_residual[i] <= 1e-10);
      CHECK(res.tail_derivative_l2[i] == 0.0);
      CHECK(res.norm_w[i] == 1.0);
    }
  }
  SUBCASE("random couplings") {
    oracle::Gen gen(2024);
    for (int trial = 0; trial < 5; ++trial) {
      const auto v = CouplingMatrixFunction::random(L, gen.uniform(0.5, 2), 0.95, gen.seed());
      Vector eta(L.dim());
      for (int i = 0; i < L.dim(); ++i) {
        eta(i) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
      }
      CouplingWindow w = CouplingWindow::truncated(60.0);
      w.lower = 2.0;
      const cplx k = trial == 0 ? cplx(0, 0.5) : cplx(gen.uniform(-1, 1), gen.uniform(0.3, 1.5));
      const auto res = adjoint_energy_identity(L, v, w, Wavenumber::upper(k), gen.uniform(-2, 2), eta,
                                               {1.0, 5.0, 10.0, 20.0, 40.0}, 70.0);
      CHECK(res.max_residual <= 1e-6);
      for (std::size_t i = 1; i < res.t.size(); ++i) {
        CHECK(res.tail_derivative_l2[i] <= res.tail_derivative_l2[i - 1]);
        CHECK(res.dissipated[i] <= res.dissipated[i - 1] + 1e-12);
      }
    }
  }
}

TEST_CASE("adjoint matches the forward propagator") {
  const auto L = mode_layout(0.66, 3);
  oracle::Gen gen(8);
  const auto v = CouplingMatrixFunction::random(L, 1.5, 0.9, gen.seed());
  CouplingWindow w = CouplingWindow::truncated(30.0);
  const cplx k(0.6, 0.8);
  const double xi = 1.4;
  Vector eta(L.dim());
  for (int i = 0; i < L.dim(); ++i) {
    eta(i) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
  }
  EvolveOptions eo;
  eo.window = w;
  const auto fwd = evolve_U(L, v, Wavenumber::upper(k), xi, 4.0, 35.0, Matrix::Identity(L.dim(), L.dim()), eo);
  const Vector expected = fwd.u.back().adjoint() * eta;
  const auto res = adjoint_energy_identity(L, v, w, Wavenumber::upper(k), xi, eta, {4.0}, 35.0);
  CHECK(std::abs(res.norm_w[0] - expected.norm()) <= 1e-8);
  CHECK(res.max_residual <= 1e-8);
}

TEST_CASE("radial balance identity") {
  SUBCASE("free: far field against the closed form") {
    const double delta = 1.0;
    const auto v = scalar_potential([](double) { return 0.0; }, 3.0, 1e-3);
    const auto g = SourceVector::indicator(delta, 1e-3, 1);
    for (cplx k : {cplx(1, 1), cplx(0.3, 0.5), cplx(-2, 0.2)}) {
      const auto res = radial_balance_identity(v, g, Wavenumber::upper(k), 0.9);
      const double exact = std::abs((1.0 - std::cos(k * delta)) / (k * k)) / std::sqrt(delta);
      CHECK(std::abs(res.J_norm - exact) <= 1e-9);
      CHECK(res.residual <= 1e-8);
      CHECK(res.bound_ok);
    }
  }
  SUBCASE("constant potential: far field against the matched solution") {
    const double q = 0.7, R = 2.0, delta = 1.5;
    const auto v = scalar_potential([q](double) { return q; }, R, 1e-3);
    const auto g = SourceVector::indicator(delta, 1e-3, 1);
    for (cplx k : {cplx(1, 1), cplx(0.5, 0.4)}) {
      const double xi = -1.3;
      const auto res = radial_balance_identity(v, g, Wavenumber::upper(k), xi);
      // phi = sin(w r)/w inside, w^2 = k^2 - k xi q; D matched to e^{ikr} at R
      const cplx w = std::sqrt(k * k - k * xi * q);
      const cplx e = std::exp(kI * k * R);
      const cplx D0 = e * ((w + k) * std::exp(-kI * w * R) + (w - k) * std::exp(kI * w * R)) / (2.0 * w);
      const cplx fhat = (1.0 - std::cos(w * delta)) / (w * w * std::sqrt(delta));
      CHECK(std::abs(res.J_norm - std::abs(fhat / D0)) <= 1e-9);
      CHECK(res.residual <= 1e-7);
    }
  }
  SUBCASE("decaying potential across a k grid") {
    const auto v = scalar_potential([](double r) { return std::pow(1.0 + r, -2.0); }, 5.0, 2e-3);
    const auto g = SourceVector::sample([](double r) { return 1.0 + r - r * r; }, 1.0, 2e-3, 1);
    const auto res = radial_balance_identity(v, g, Wavenumber::upper({1, 1}), 1.0);
    CHECK(res.residual <= 1e-6);
    CHECK(res.bound_ok);
    for (double re : {-3.0, -1.0, 0.0, 0.5, 2.0, 4.0}) {
      for (double im : {0.1, 0.5, 1.0, 3.0}) {
        for (double xi : {-2.0, 1.0}) {
          const auto r = radial_balance_identity(v, g, Wavenumber::upper({re, im}), xi);
          CHECK(r.residual <= 1e-6 * std::max(1.0, r.lhs));
          CHECK(r.bound_ok);
        }
      }
    }
  }
  SUBCASE("rejects non-symmetric data") {
    const auto q = oracle::random_potential(2, 2.0, 1e-2, 1.0, 3);
    CHECK_THROWS_AS(radial_balance_identity(q, SourceVector::indicator(1.0, 1e-2, 2),
                                            Wavenumber::upper({1, 1}), 1.0),
                    ParameterError);
  }
}
