#include "hpencil/pencil_resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "hpencil/errors.hpp"

namespace hp {

namespace {

constexpr double kUnderflow = 1e-280;

void check_k(cplx k) {
  if (!(k.imag() > 0.0)) {
    throw ParameterError("pencil resolvent needs Im k > 0");
  }
}

}  // namespace

PencilGrid1D pencil_grid(double L, int N, const std::function<double(double)>& v) {
  if (!(L > 0.0) || N < 64) {
    throw ParameterError("pencil grid needs L > 0 and N >= 64");
  }
  PencilGrid1D g;
  g.L = L;
  g.N = N;
  g.h = L / N;
  g.v.resize(N - 1);
  for (int i = 0; i < N - 1; ++i) {
    const double val = v(g.x(i));
    if (!std::isfinite(val)) {
      throw InputError("non-finite potential sample", static_cast<std::size_t>(i));
    }
    g.v[i] = val;
  }
  return g;
}

ShippedPotential shipped_potential_from(const std::string& name) {
  if (name == "cosine") return ShippedPotential::Cosine;
  if (name == "random-steps") return ShippedPotential::RandomSteps;
  if (name == "sine-sum") return ShippedPotential::SineSum;
  throw ParameterError("unknown shipped potential '" + name + "'");
}

std::string to_string(ShippedPotential p) {
  switch (p) {
    case ShippedPotential::Cosine: return "cosine";
    case ShippedPotential::RandomSteps: return "random-steps";
    case ShippedPotential::SineSum: return "sine-sum";
  }
  return "?";
}

PencilGrid1D shipped_grid(ShippedPotential kind, double L, int N, std::uint64_t seed) {
  switch (kind) {
    case ShippedPotential::Cosine:
      return pencil_grid(L, N, [](double x) { return std::cos(2.0 * x); });
    case ShippedPotential::RandomSteps: {
      std::mt19937_64 gen(seed);
      std::vector<double> cells(static_cast<std::size_t>(std::ceil(L)) + 1);
      for (auto& c : cells) {
        c = (gen() & 1u) ? 1.0 : -1.0;
      }
      return pencil_grid(L, N, [&cells](double x) { return cells[static_cast<std::size_t>(x)]; });
    }
    case ShippedPotential::SineSum: {
      const auto raw = [](double x) {
        return std::sin(std::sqrt(2.0) * x) + std::sin(std::sqrt(3.0) * x + 1.0) +
               std::sin(std::sqrt(5.0) * x + 2.0);
      };
      auto g = pencil_grid(L, N, raw);
      double peak = 0.0;
      for (double val : g.v) {
        peak = std::max(peak, std::abs(val));
      }
      for (double& val : g.v) {
        val /= peak;
      }
      return g;
    }
  }
  throw ParameterError("unknown shipped potential");
}

double grid_norm(const PencilGrid1D& g, const Vector& f) { return std::sqrt(g.h) * f.norm(); }

RootPair hyperbolicity_roots(const PencilGrid1D& g, double xi, const Vector& f) {
  if (f.size() != g.unknowns()) {
    throw ParameterError("test vector does not match the grid");
  }
  const double n = grid_norm(g, f);
  if (n == 0.0) {
    throw ParameterError("hyperbolicity roots need a nonzero vector");
  }
  const Vector u = f / n;
  const int m = g.unknowns();
  RootPair out;
  double grad = 0.0;
  double c1 = 0.0;
  for (int i = 0; i <= m; ++i) {
    const cplx left = i > 0 ? u(i - 1) : cplx(0.0);
    const cplx right = i < m ? u(i) : cplx(0.0);
    grad += std::norm(right - left);
  }
  for (int i = 0; i < m; ++i) {
    c1 += g.v[i] * std::norm(u(i));
  }
  out.grad_sq = grad / g.h;
  out.c1 = xi * c1 * g.h;
  out.discriminant = out.c1 * out.c1 + 4.0 * out.grad_sq;
  const double root = std::sqrt(out.discriminant);
  out.k1 = 0.5 * (out.c1 + root);
  out.k2 = 0.5 * (out.c1 - root);
  return out;
}

struct PencilFactorization::Impl {
  int n = 0;
  std::vector<cplx> dl, d, du, du2;
  std::vector<lapack_int> ipiv;
  std::vector<cplx> off;  // original off-diagonal
  std::vector<cplx> diag;  // original diagonal
};

PencilFactorization::PencilFactorization(const PencilGrid1D& g, double xi, cplx k)
    : impl_(std::make_unique<Impl>()), k_(k) {
  check_k(k);
  auto& s = *impl_;
  s.n = g.unknowns();
  const double inv_h2 = 1.0 / (g.h * g.h);
  s.diag.resize(s.n);
  for (int i = 0; i < s.n; ++i) {
    s.diag[i] = 2.0 * inv_h2 + k * xi * g.v[i] - k * k;
  }
  s.off.assign(std::max(0, s.n - 1), cplx(-inv_h2));
  s.d = s.diag;
  s.dl = s.off;
  s.du = s.off;
  s.du2.resize(std::max(0, s.n - 2));
  s.ipiv.resize(s.n);
  const lapack_int info =
      LAPACKE_zgttrf(s.n, s.dl.data(), s.d.data(), s.du.data(), s.du2.data(), s.ipiv.data());
  if (info != 0) {
    throw InternalConsistencyError("P(k) is singular for Im k > 0 (zgttrf info " +
                                   std::to_string(info) + ")");
  }
}

PencilFactorization::~PencilFactorization() = default;
int PencilFactorization::size() const noexcept { return impl_->n; }
PencilFactorization::PencilFactorization(PencilFactorization&&) noexcept = default;
PencilFactorization& PencilFactorization::operator=(PencilFactorization&&) noexcept = default;

Matrix PencilFactorization::solve(const Matrix& rhs) const {
  const auto& s = *impl_;
  if (rhs.rows() != s.n) {
    throw ParameterError("right-hand side does not match the grid");
  }
  Matrix x = rhs;  // column-major, leading dimension n
  const lapack_int info =
      LAPACKE_zgttrs(LAPACK_COL_MAJOR, 'N', s.n, static_cast<lapack_int>(x.cols()), s.dl.data(),
                     s.d.data(), s.du.data(), s.du2.data(), s.ipiv.data(), x.data(), s.n);
  if (info != 0) {
    throw InternalConsistencyError("zgttrs failed with info " + std::to_string(info));
  }
  return x;
}

Matrix PencilFactorization::apply(const Matrix& x) const {
  const auto& s = *impl_;
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (int i = 0; i < s.n; ++i) {
      cplx acc = s.diag[i] * x(i, c);
      if (i > 0) acc += s.off[i - 1] * x(i - 1, c);
      if (i + 1 < s.n) acc += s.off[i] * x(i + 1, c);
      y(i, c) = acc;
    }
  }
  return y;
}

PencilSolve solve_pencil(const PencilGrid1D& g, double xi, cplx k, const Vector& f) {
  const PencilFactorization fac(g, xi, k);
  PencilSolve out;
  out.psi = fac.solve(f);
  out.norm_f = grid_norm(g, f);
  out.norm_psi = grid_norm(g, out.psi);
  out.bound = out.norm_f / (k.imag() * k.imag());
  out.slack = out.bound - out.norm_psi;
  out.bound_ok = out.norm_psi <= out.bound;
  const Vector r = fac.apply(out.psi) - f;
  out.residual = out.norm_f > 0.0 ? grid_norm(g, r) / out.norm_f : grid_norm(g, r);
  return out;
}

std::vector<int> window_nodes(const PencilGrid1D& g, double a, double width) {
  std::vector<int> out;
  for (int i = 0; i < g.unknowns(); ++i) {
    const double x = g.x(i);
    // a tiny relative guard keeps nodes that sit on a window edge on the left side
    if (x >= a - 1e-12 * g.L && x < a + width - 1e-12 * g.L) {
      out.push_back(i);
    }
  }
  return out;
}

double windowed_norm(const PencilFactorization& fac, const std::vector<int>& win1,
                     const std::vector<int>& win2) {
  if (win1.empty() || win2.empty()) {
    throw ParameterError("empty window");
  }
  Matrix rhs = Matrix::Zero(fac.size(), static_cast<Eigen::Index>(win1.size()));
  for (std::size_t j = 0; j < win1.size(); ++j) {
    rhs(win1[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  const Matrix x = fac.solve(rhs);
  Matrix block(static_cast<Eigen::Index>(win2.size()), x.cols());
  for (std::size_t i = 0; i < win2.size(); ++i) {
    block.row(static_cast<Eigen::Index>(i)) = x.row(win2[i]);
  }
  return op_norm(block);
}

std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) {
    throw ParameterError("linear fit needs at least two points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw ParameterError("linear fit needs distinct abscissae");
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {slope, intercept, r2};
}

DecayFit combes_thomas_fit(const PencilGrid1D& g, double xi, cplx k,
                           const std::vector<double>& separations, double left) {
  check_k(k);
  if (separations.size() < 2) {
    throw ParameterError("decay fit needs at least two separations");
  }
  if (left < 2.0) {
    throw ParameterError("left window must start at x >= 2");
  }
  for (double s : separations) {
    if (!(s > 0.0) || left + s + 1.0 > g.L - 2.0) {
      throw ParameterError("separation " + std::to_string(s) + " leaves the window range (2, L - 2)");
    }
  }
  const PencilFactorization fac(g, xi, k);
  const auto win1 = window_nodes(g, left);
  // one solve block for the left window, reused for every separation
  Matrix rhs = Matrix::Zero(fac.size(), static_cast<Eigen::Index>(win1.size()));
  for (std::size_t j = 0; j < win1.size(); ++j) {
    rhs(win1[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  const Matrix x = fac.solve(rhs);

  DecayFit out;
  for (double s : separations) {
    const auto win2 = window_nodes(g, left + s);
    Matrix block(static_cast<Eigen::Index>(win2.size()), x.cols());
    for (std::size_t i = 0; i < win2.size(); ++i) {
      block.row(static_cast<Eigen::Index>(i)) = x.row(win2[i]);
    }
    const double nrm = op_norm(block);
    if (!(nrm > kUnderflow)) {
      out.excluded.push_back(s);
      continue;
    }
    out.separations.push_back(s);
    out.log_norms.push_back(std::log(nrm));
  }
  if (out.separations.size() < 2) {
    throw ParameterError("fewer than two separations above the underflow floor");
  }
  const auto fit = linear_fit(out.separations, out.log_norms);
  out.gamma_fit = -fit[0];
  out.intercept = fit[1];
  out.r_squared = fit[2];
  return out;
}

PencilSolve solve_pencil_3d(int n, double L, const std::function<double(double, double, double)>& v,
                            double xi, cplx k, const Vector& f) {
  check_k(k);
  if (n < 2 || n > 24 || !(L > 0.0)) {
    throw ParameterError("3-D box needs 2 <= n <= 24 and L > 0");
  }
  const int total = n * n * n;
  if (f.size() != total) {
    throw ParameterError("right-hand side does not match the 3-D box");
  }
  const double h = L / (n + 1);
  const double inv_h2 = 1.0 / (h * h);
  const auto id = [n](int i, int j, int l) { return (i * n + j) * n + l; };
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(total) * 7);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const int row = id(i, j, l);
        const double pot = v(h * (i + 1), h * (j + 1), h * (l + 1));
        trip.emplace_back(row, row, 6.0 * inv_h2 + k * xi * pot - k * k);
        if (i > 0) trip.emplace_back(row, id(i - 1, j, l), -inv_h2);
        if (i + 1 < n) trip.emplace_back(row, id(i + 1, j, l), -inv_h2);
        if (j > 0) trip.emplace_back(row, id(i, j - 1, l), -inv_h2);
        if (j + 1 < n) trip.emplace_back(row, id(i, j + 1, l), -inv_h2);
        if (l > 0) trip.emplace_back(row, id(i, j, l - 1), -inv_h2);
        if (l + 1 < n) trip.emplace_back(row, id(i, j, l + 1), -inv_h2);
      }
    }
  }
  Eigen::SparseMatrix<cplx> P(total, total);
  P.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(P);
  if (lu.info() != Eigen::Success) {
    throw InternalConsistencyError("3-D pencil factorization failed");
  }
  PencilSolve out;
  out.psi = lu.solve(f);
  const double w = std::pow(h, 1.5);
  out.norm_f = w * f.norm();
  out.norm_psi = w * out.psi.norm();
  out.bound = out.norm_f / (k.imag() * k.imag());
  out.slack = out.bound - out.norm_psi;
  out.bound_ok = out.norm_psi <= out.bound;
  out.residual = out.norm_f > 0.0 ? w * (P * out.psi - f).norm() / out.norm_f : 0.0;
  return out;
}

}  // namespace hp
