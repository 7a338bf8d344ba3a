#include <cmath>

#include "doctest.h"
#include "hpencil/errors.hpp"
#include "hpencil/pencil_resolvent.hpp"
#include "oracles.hpp"

using namespace hp;

namespace {

const double kPi = std::acos(-1.0);

Vector random_vector(oracle::Gen& gen, int n) {
  Vector f(n);
  for (int i = 0; i < n; ++i) {
    f(i) = cplx(gen.uniform(-1, 1), gen.uniform(-1, 1));
  }
  return f;
}

// Dense P(k) for any complex k (no half-plane restriction), for cross-checks.
Matrix dense_pencil(const PencilGrid1D& g, double xi, cplx k) {
  const int n = g.unknowns();
  const double c = 1.0 / (g.h * g.h);
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    p(i, i) = 2.0 * c + k * xi * g.v[i] - k * k;
  }
  p.diagonal(1).setConstant(-c);
  p.diagonal(-1).setConstant(-c);
  return p;
}

}  // namespace

TEST_CASE("grids and shipped potentials") {
  CHECK_THROWS_AS(pencil_grid(10.0, 32, [](double) { return 0.0; }), ParameterError);
  CHECK_THROWS_AS(pencil_grid(10.0, 128, [](double) { return NAN; }), InputError);
  for (auto kind : {ShippedPotential::Cosine, ShippedPotential::RandomSteps, ShippedPotential::SineSum}) {
    const auto g = shipped_grid(kind, 40.0, 4096, 3);
    CHECK(g.unknowns() == 4095);
    double peak = 0.0;
    for (double v : g.v) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(shipped_potential_from(to_string(kind)) == kind);
  }
  // random steps are constant on unit cells and reproducible
  const auto a = shipped_grid(ShippedPotential::RandomSteps, 20.0, 256, 11);
  const auto b = shipped_grid(ShippedPotential::RandomSteps, 20.0, 256, 11);
  CHECK(a.v == b.v);
  for (int i = 0; i + 1 < a.unknowns(); ++i) {
    if (std::floor(a.x(i)) == std::floor(a.x(i + 1))) CHECK(a.v[i] == a.v[i + 1]);
  }
  CHECK_THROWS_AS(shipped_potential_from("square"), ParameterError);
}

TEST_CASE("hyperbolicity roots") {
  SUBCASE("free sine mode") {
    const auto g = pencil_grid(kPi, 64, [](double) { return 0.0; });
    Vector f(g.unknowns());
    for (int i = 0; i < g.unknowns(); ++i) f(i) = std::sin(g.x(i));
    const auto r = hyperbolicity_roots(g, 1.3, f);
    const double exact = 2.0 / g.h * std::sin(0.5 * g.h);
    CHECK(std::abs(r.k1 - exact) <= 1e-12);
    CHECK(std::abs(r.k2 + exact) <= 1e-12);
    CHECK(std::abs(r.c1) == 0.0);
  }
  SUBCASE("roots straddle zero for random data") {
    oracle::Gen gen(3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto g = pencil_grid(gen.uniform(2, 20), gen.integer(64, 300),
                                 [&gen](double) { return gen.uniform(-3, 3); });
      const double xi = gen.uniform(-2, 2);
      const Vector f = random_vector(gen, g.unknowns());
      const auto r = hyperbolicity_roots(g, xi, f);
      CHECK(r.k1 > 0.0);
      CHECK(r.k2 < 0.0);
      CHECK(r.discriminant > r.c1 * r.c1);
      // (P(k) f, f) vanishes at both roots
      for (double k : {r.k1, r.k2}) {
        const Matrix p = dense_pencil(g, xi, k);
        const cplx form = g.h * (f.adjoint() * p * f)(0, 0) / (g.h * f.squaredNorm());
        CHECK(std::abs(form) <= 1e-9 * (1.0 + r.grad_sq));
      }
    }
  }
  const auto g = pencil_grid(1.0, 64, [](double) { return 0.0; });
  CHECK_THROWS_AS(hyperbolicity_roots(g, 1.0, Vector::Zero(g.unknowns())), ParameterError);
}

TEST_CASE("pencil solves") {
  SUBCASE("free eigenmode") {
    const auto g = pencil_grid(5.0, 200, [](double) { return 0.0; });
    for (int j : {1, 4, 17}) {
      Vector f(g.unknowns());
      for (int i = 0; i < g.unknowns(); ++i) f(i) = std::sin(j * kPi * g.x(i) / g.L);
      const double lam = 4.0 / (g.h * g.h) * std::pow(std::sin(j * kPi * g.h / (2 * g.L)), 2);
      const cplx k(0.7, 0.3);
      const auto s = solve_pencil(g, 1.0, k, f);
      CHECK((s.psi - f / (lam - k * k)).norm() <= 1e-12 * f.norm() / std::abs(lam - k * k));
    }
  }
  SUBCASE("bound and residual on a random battery") {
    oracle::Gen gen(19);
    for (int trial = 0; trial < 40; ++trial) {
      const auto g = pencil_grid(gen.uniform(5, 40), gen.integer(64, 2048),
                                 [&gen](double) { return gen.uniform(-1, 1); });
      const cplx k(gen.uniform(-3, 3), gen.uniform(0.05, 3));
      const auto s = solve_pencil(g, gen.uniform(-2, 2), k, random_vector(gen, g.unknowns()));
      CHECK(s.bound_ok);
      CHECK(s.slack >= 0.0);
      CHECK(s.residual <= 1e-10);
    }
  }
  SUBCASE("matches a dense solve") {
    oracle::Gen gen(4);
    const auto g = pencil_grid(6.0, 100, [](double x) { return std::cos(3 * x); });
    const Vector f = random_vector(gen, g.unknowns());
    const cplx k(1.2, 0.4);
    const Vector dense = dense_pencil(g, -1.5, k).partialPivLu().solve(f);
    CHECK((solve_pencil(g, -1.5, k, f).psi - dense).norm() <= 1e-10 * dense.norm());
  }
  const auto g = pencil_grid(1.0, 64, [](double) { return 0.0; });
  CHECK_THROWS_AS(solve_pencil(g, 1.0, cplx(1.0, 0.0), Vector::Ones(g.unknowns())), ParameterError);
}

TEST_CASE("windowed norms") {
  const auto g = shipped_grid(ShippedPotential::SineSum, 12.0, 256);
  const cplx k(0.5, 0.8);
  const double xi = 1.0;
  const PencilFactorization fac(g, xi, k);
  const auto w1 = window_nodes(g, 2.0);
  const auto w2 = window_nodes(g, 7.0);
  CHECK(w1.size() == w2.size());
  const Matrix inv = dense_pencil(g, xi, k).inverse();
  const Matrix inv_conj = dense_pencil(g, xi, std::conj(k)).inverse();
  Matrix b(w2.size(), w1.size()), bc(w1.size(), w2.size());
  for (std::size_t i = 0; i < w2.size(); ++i) {
    for (std::size_t j = 0; j < w1.size(); ++j) {
      b(i, j) = inv(w2[i], w1[j]);
      bc(j, i) = inv_conj(w1[j], w2[i]);
    }
  }
  const double n = windowed_norm(fac, w1, w2);
  CHECK(std::abs(n - op_norm(b)) <= 1e-10 * n);
  // P(k)* = P(conj k)
  CHECK(std::abs(n - op_norm(bc.adjoint())) <= 1e-8 * n);
  // P(k) is complex symmetric
  CHECK(std::abs(n - windowed_norm(fac, w2, w1)) <= 1e-8 * n);
}

TEST_CASE("linear fit") {
  const auto f = linear_fit({1, 2, 3, 4}, {3, 1, -1, -3});
  CHECK(f[0] == doctest::Approx(-2.0));
  CHECK(f[1] == doctest::Approx(5.0));
  CHECK(f[2] == doctest::Approx(1.0));
  const auto g = linear_fit({0, 1, 2, 3}, {0, 1, 0, 1});
  CHECK(g[2] == doctest::Approx(0.2));
  CHECK_THROWS_AS(linear_fit({1}, {1}), ParameterError);
}

TEST_CASE("Combes-Thomas decay") {
  std::vector<double> seps;
  for (int s = 2; s <= 30; ++s) seps.push_back(s);
  SUBCASE("free kernel decays at the discrete rate") {
    const auto g = pencil_grid(40.0, 4096, [](double) { return 0.0; });
    for (double im : {0.5, 1.0, 2.0}) {
      const cplx k(0.0, im);
      // zeta + 1/zeta = 2 - h^2 k^2, |zeta| < 1
      const cplx b = 2.0 - g.h * g.h * k * k;
      cplx z = 0.5 * (b - std::sqrt(b * b - 4.0));
      if (std::abs(z) > 1.0) z = 1.0 / z;
      const double rate = -std::log(std::abs(z)) / g.h;
      const auto fit = combes_thomas_fit(g, 1.0, k, seps);
      CHECK(std::abs(fit.gamma_fit - im) <= 0.05 * im);
      CHECK(std::abs(fit.gamma_fit - rate) <= 2e-3 * im);
      CHECK(fit.r_squared >= 0.9999);
    }
  }
  SUBCASE("bounded potentials") {
    for (auto kind : {ShippedPotential::Cosine, ShippedPotential::RandomSteps, ShippedPotential::SineSum}) {
      const auto g = shipped_grid(kind, 40.0, 2048, 5);
      const auto a = combes_thomas_fit(g, 1.0, cplx(0.5, 1.0), seps);
      const auto b = combes_thomas_fit(g, 1.0, cplx(0.5, 2.0), seps);
      CHECK(a.gamma_fit >= 0.5);
      CHECK(a.r_squared >= 0.98);
      CHECK(b.gamma_fit / a.gamma_fit >= 1.6);
      CHECK(b.gamma_fit / a.gamma_fit <= 2.4);
    }
  }
  SUBCASE("underflow excludes separations") {
    const auto g = pencil_grid(40.0, 1024, [](double) { return 0.0; });
    const auto fit = combes_thomas_fit(g, 1.0, cplx(0.0, 40.0), seps);
    CHECK(!fit.excluded.empty());
    CHECK(fit.separations.size() + fit.excluded.size() == seps.size());
  }
  const auto g = pencil_grid(10.0, 256, [](double) { return 0.0; });
  CHECK_THROWS_AS(combes_thomas_fit(g, 1.0, cplx(0, 1), {2.0, 6.0}), ParameterError);
}

TEST_CASE("three-dimensional box") {
  const int n = 12;
  const double L = 3.0;
  const double h = L / (n + 1);
  Vector f(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        f((i * n + j) * n + l) = std::sin(kPi * h * (i + 1) / L) * std::sin(kPi * h * (j + 1) / L) *
                                 std::sin(kPi * h * (l + 1) / L);
  const double lam = 3.0 * 4.0 / (h * h) * std::pow(std::sin(kPi * h / (2 * L)), 2);
  const cplx k(0.4, 0.6);
  const auto free = solve_pencil_3d(n, L, [](double, double, double) { return 0.0; }, 1.0, k, f);
  CHECK((free.psi - f / (lam - k * k)).norm() <= 1e-11 * free.psi.norm());
  oracle::Gen gen(12);
  for (int trial = 0; trial < 5; ++trial) {
    const cplx kk(gen.uniform(-2, 2), gen.uniform(0.1, 2));
    const auto s = solve_pencil_3d(
        n, L, [](double x, double y, double z) { return std::cos(2 * x) * std::sin(y + z); },
        gen.uniform(-2, 2), kk, random_vector(gen, n * n * n));
    CHECK(s.bound_ok);
    CHECK(s.residual <= 1e-10);
  }
  CHECK_THROWS_AS(solve_pencil_3d(25, L, [](double, double, double) { return 0.0; }, 1.0, k,
                                  Vector::Zero(25 * 25 * 25)),
                  ParameterError);
}
