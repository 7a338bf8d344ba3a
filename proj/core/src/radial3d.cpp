#include "hpencil/radial3d.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "hpencil/errors.hpp"
#include "hpencil/quadrature.hpp"

namespace hp {

namespace {

// Sorted, deduplicated radii (relative 1e-12) clipped to [lo, hi].
std::vector<double> merge_nodes(std::vector<double> pts, double lo, double hi) {
  pts.push_back(lo);
  pts.push_back(hi);
  std::vector<double> kept;
  for (double p : pts) {
    if (std::isfinite(p) && p >= lo && p <= hi) {
      kept.push_back(p);
    }
  }
  std::sort(kept.begin(), kept.end());
  std::vector<double> out;
  for (double p : kept) {
    if (out.empty() || p - out.back() > 1e-12 * std::max(1.0, p)) {
      out.push_back(p);
    }
  }
  // keep the exact endpoints
  out.front() = lo;
  if (hi - out.back() <= 1e-12 * std::max(1.0, hi)) {
    out.back() = hi;
  }
  return out;
}

std::vector<double> log_points(double a, double b, int per_decade) {
  std::vector<double> out;
  const double decades = std::log10(b / a);
  const int n = std::max(2, static_cast<int>(std::ceil(decades * per_decade)));
  for (int i = 0; i <= n; ++i) {
    out.push_back(a * std::pow(b / a, static_cast<double>(i) / n));
  }
  return out;
}

double envelope(double r, double gamma) { return std::pow(1.0 + r * r, -0.5 * gamma); }

void check_layout_vector(const ModeLayout& layout, Eigen::Index rows, const char* what) {
  if (rows != layout.dim()) {
    throw ParameterError(std::string(what) + " has " + std::to_string(rows) +
                         " rows, layout needs " + std::to_string(layout.dim()));
  }
}

// G(r) u for G = kappa B2/r^2 + c (-B1/r^2 + V) on the window.
struct Generator {
  const ModeLayout& layout;
  const CouplingMatrixFunction& v;
  CouplingWindow window;
  cplx kappa;
  cplx c;  // xi / 2i

  void apply(double r, const Matrix& u, Matrix& out) const {
    const auto mult = split_multipliers(layout, r);
    const double r2 = r * r;
    out = (kappa / r2) * (mult.b2.cast<cplx>().asDiagonal() * u);
    if (window.active(r)) {
      Matrix vu;
      v.apply(r, u, vu);
      if (window.low_band) {
        vu -= (1.0 / r2) * (mult.b1.cast<cplx>().asDiagonal() * u);
      }
      out += c * vu;
    }
  }
};

}  // namespace

int ModeLayout::degree_of(int idx) noexcept {
  int m = static_cast<int>(std::sqrt(static_cast<double>(idx)));
  while (m * m > idx) {
    --m;
  }
  while ((m + 1) * (m + 1) <= idx) {
    ++m;
  }
  return m;
}

int ModeLayout::band(double r) const {
  // thresholds[0] = 1 always belongs to the lowest band
  const auto it = std::upper_bound(thresholds.begin() + 1, thresholds.end(), r);
  return static_cast<int>(it - thresholds.begin()) - 1;
}

double ModeLayout::s(double r) const { return std::sqrt(std::abs(lambdas[band(r)])); }

ModeLayout mode_layout(double alpha, int b) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (b < 1) {
    throw ParameterError("mode cutoff b must be >= 1");
  }
  ModeLayout out;
  out.alpha = alpha;
  out.b = b;
  for (int m = 0; m <= b; ++m) {
    const double mm = static_cast<double>(m) * (m + 1);
    out.lambdas.push_back(-mm);
    out.thresholds.push_back(m == 0 ? 1.0 : std::pow(mm, 1.0 / (2.0 * alpha)));
    out.mode_dims.push_back(2 * m + 1);
  }
  return out;
}

SplitMultipliers split_multipliers(const ModeLayout& layout, double r) {
  const int n = layout.dim();
  const int band = layout.band(r);
  const double cutoff = -static_cast<double>(layout.b) * (layout.b + 1);
  SplitMultipliers out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                       Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int m = 0; m <= layout.b; ++m) {
    const bool low = m <= band;
    const double lam = layout.lambdas[m];
    const double lam_b = m < layout.b ? lam : cutoff;
    for (int i = m * m; i < (m + 1) * (m + 1); ++i) {
      out.m1[i] = low ? 1.0 : 0.0;
      out.m2[i] = low ? 0.0 : 1.0;
      out.b1[i] = low ? lam : 0.0;
      out.b2[i] = low ? 0.0 : lam_b;
    }
  }
  return out;
}

CouplingMatrixFunction::CouplingMatrixFunction(int dim, std::vector<Term> terms,
                                               bool spherically_symmetric)
    : dim_(dim), terms_(std::move(terms)), symmetric_(spherically_symmetric) {
  for (const auto& t : terms_) {
    if (t.op.rows() != dim || t.op.cols() != dim) {
      throw ParameterError("coupling operator has the wrong size");
    }
    const SparseMatrix adj = t.op.adjoint();
    if ((SparseMatrix(t.op - adj)).norm() > 1e-12 * std::max(1.0, t.op.norm())) {
      throw InputError("coupling operator is not Hermitian");
    }
  }
}

void CouplingMatrixFunction::apply(double r, const Matrix& u, Matrix& out) const {
  out = Matrix::Zero(u.rows(), u.cols());
  for (const auto& t : terms_) {
    const double p = t.profile(r);
    if (p != 0.0) {
      out += p * (t.op * u);
    }
  }
}

Matrix CouplingMatrixFunction::dense(double r) const {
  Matrix out = Matrix::Zero(dim_, dim_);
  for (const auto& t : terms_) {
    out += t.profile(r) * Matrix(t.op);
  }
  return out;
}

CouplingMatrixFunction CouplingMatrixFunction::zero(const ModeLayout& layout) {
  CouplingMatrixFunction out(layout.dim(), {}, true);
  out.envelope_constant = 0.0;
  out.envelope_gamma = std::numeric_limits<double>::infinity();
  return out;
}

CouplingMatrixFunction CouplingMatrixFunction::symmetric(const ModeLayout& layout,
                                                         std::function<double(double)> v) {
  const int n = layout.dim();
  SparseMatrix id(n, n);
  id.setIdentity();
  return CouplingMatrixFunction(n, {Term{std::move(v), id}}, true);
}

CouplingMatrixFunction CouplingMatrixFunction::dipole(const ModeLayout& layout, double amplitude,
                                                      double gamma) {
  const int n = layout.dim();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int m = 0; m < layout.b; ++m) {
    for (int l = -m; l <= m; ++l) {
      const double num = static_cast<double>((m + 1) * (m + 1) - l * l);
      const double c = std::sqrt(num / ((2.0 * m + 1) * (2.0 * m + 3)));
      const int i = ModeLayout::index(m, l);
      const int j = ModeLayout::index(m + 1, l);
      trip.emplace_back(i, j, c);
      trip.emplace_back(j, i, c);
    }
  }
  SparseMatrix op(n, n);
  op.setFromTriplets(trip.begin(), trip.end());
  CouplingMatrixFunction out(
      n, {Term{[amplitude, gamma](double r) { return amplitude * envelope(r, gamma); }, op}});
  out.envelope_constant = std::abs(amplitude);
  out.envelope_gamma = gamma;
  return out;
}

CouplingMatrixFunction CouplingMatrixFunction::random(const ModeLayout& layout, double amplitude,
                                                      double gamma, std::uint64_t seed) {
  if (layout.b > 16) {
    throw ParameterError("dense random coupling is limited to b <= 16");
  }
  const int n = layout.dim();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = u(gen);
    for (int j = i + 1; j < n; ++j) {
      const double re = u(gen);
      const double im = u(gen);
      m(i, j) = cplx(re, im);
      m(j, i) = cplx(re, -im);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  m /= es.eigenvalues().cwiseAbs().maxCoeff();
  SparseMatrix op = m.sparseView();
  CouplingMatrixFunction out(
      n, {Term{[amplitude, gamma](double r) { return amplitude * envelope(r, gamma); }, op}});
  out.envelope_constant = std::abs(amplitude);
  out.envelope_gamma = gamma;
  return out;
}

cplx kappa_of(cplx k) {
  if (std::abs(k) < Wavenumber::kMin) {
    throw ParameterError("|k| below the minimum wavenumber");
  }
  return -1.0 / (2.0 * kI * k);
}

Evolution evolve_U(const ModeLayout& layout, const CouplingMatrixFunction& v, const Wavenumber& k,
                   double xi, double rho, double r, const Matrix& eta, const EvolveOptions& opt) {
  if (!(rho >= 1.0 && r > rho)) {
    throw ParameterError("evolve_U needs 1 <= rho < r");
  }
  check_layout_vector(layout, eta.rows(), "eta");
  if (v.dim() != layout.dim()) {
    throw ParameterError("coupling does not match the mode layout");
  }
  const Generator g{layout, v, opt.window, kappa_of(k.k), xi / (2.0 * kI)};

  std::vector<double> pts = opt.report.empty() ? log_points(rho, r, 64) : opt.report;
  pts.insert(pts.end(), layout.thresholds.begin(), layout.thresholds.end());
  pts.push_back(opt.window.lower);
  pts.push_back(opt.window.upper);
  const auto nodes = merge_nodes(std::move(pts), rho, r);

  const OdeRhs rhs = [&g](double s, const Matrix& y, Matrix& dy) { g.apply(s, y, dy); };
  Evolution out;
  out.u = integrate(rhs, eta, nodes, opt.ode);
  out.norms.reserve(out.u.size());
  for (const auto& val : out.u.values) {
    out.norms.push_back(val.norm());
  }
  return out;
}

Matrix lowest_mode(const ModeLayout& layout) {
  Matrix e = Matrix::Zero(layout.dim(), 1);
  e(0, 0) = 1.0;
  return e;
}

TwistResult twist_experiment(const ModeLayout& layout, const CouplingMatrixFunction& v,
                             const Wavenumber& k, double xi, const TwistOptions& opt) {
  if (layout.b < 2 || opt.r_max < layout.thresholds[2]) {
    throw ParameterError("r_max must reach the second mode threshold");
  }
  if (opt.d < 1.0) {
    throw ParameterError("tail cutoff d must be >= 1");
  }
  EvolveOptions eo;
  eo.window = CouplingWindow::tail(opt.d);
  eo.report = log_points(1.0, opt.r_max, opt.per_decade);
  eo.ode = opt.ode;
  const auto ev = evolve_U(layout, v, k, xi, 1.0, opt.r_max, lowest_mode(layout), eo);

  TwistResult out;
  out.r = ev.u.nodes;
  out.norm = ev.norms;
  out.liminf_estimate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.r.size(); ++i) {
    if (out.r[i] >= 0.75 * opt.r_max) {
      out.liminf_estimate = std::min(out.liminf_estimate, out.norm[i]);
    }
    if (i > 0 && out.norm[i] > out.norm[i - 1] + 1e-9) {
      out.non_expansive = false;
    }
  }

  for (int m = 1; m <= layout.b && layout.thresholds[m] <= opt.r_max; ++m) {
    const double rm = layout.thresholds[m];
    const auto idx = ev.u.index_of(rm);
    if (!idx) {
      throw InternalConsistencyError("threshold is not an integration node");
    }
    const auto mult = split_multipliers(layout, rm);
    const Matrix& u = ev.u.values[*idx];
    out.m.push_back(m);
    out.r_m.push_back(rm);
    out.alpha_m.push_back((mult.m1.cast<cplx>().asDiagonal() * u).norm());
    out.beta_m.push_back((mult.m2.cast<cplx>().asDiagonal() * u).norm());
  }

  // Recursion diagnostics along I_m = [r_m, r_{m+1}).
  const double re_kappa = kappa_of(k.k).real();
  const double a = layout.alpha;
  const double gamma = opt.gamma;
  const double kappa1 = 1.0 - 1.0 / a;
  const double zeta_power = (1.0 - gamma) / a - 1.0;
  const double eta_power = 2.0 * (1.0 - gamma) / a - 2.0;
  const int panels = 512;
  double C = std::numeric_limits<double>::infinity();
  std::vector<double> damping;
  for (std::size_t j = 0; j + 1 < out.m.size(); ++j) {
    const int m = out.m[j];
    const double r0 = out.r_m[j];
    const double r1 = out.r_m[j + 1];
    const double h = (r1 - r0) / panels;
    const double c = re_kappa * std::abs(layout.lambdas[m]);

    std::vector<double> zeta_f(panels + 1), inner_f(panels + 1);
    for (int i = 0; i <= panels; ++i) {
      const double s = r0 + h * i;
      zeta_f[i] = std::pow(s, -gamma) * std::exp(-c * (s - r0) / (s * r0));
      // s^-g e^{-c(1/s - 1/r0)}; the rho factor e^{-c(1/r0 - 1/rho)} is applied below
      inner_f[i] = std::pow(s, -gamma) * std::exp(-c * (1.0 / s - 1.0 / r0));
    }
    const auto inner = quad::cumulative(std::span<const double>(inner_f), h);
    std::vector<double> outer_f(panels + 1);
    for (int i = 0; i <= panels; ++i) {
      const double p = r0 + h * i;
      outer_f[i] = std::pow(p, -gamma) * std::exp(-c * (1.0 / r0 - 1.0 / p)) * inner[i];
    }
    const double zeta = quad::simpson(zeta_f, h);
    const double eta = std::abs(quad::simpson(outer_f, h));
    out.zeta_m.push_back(zeta);
    out.eta_m.push_back(eta);
    out.zeta_C = std::max(out.zeta_C, zeta / std::pow(m, zeta_power));
    out.eta_C = std::max(out.eta_C, eta / std::pow(m, eta_power));

    const double lam_next = std::abs(layout.lambdas[std::min(m + 1, layout.b)]);
    const double D = re_kappa * lam_next * (r1 - r0) / (r0 * r1);
    damping.push_back(D);
    C = std::min(C, D / std::pow(m, kappa1));
  }
  out.damping_C = std::isfinite(C) ? C : 0.0;
  for (std::size_t j = 0; j + 1 < out.m.size(); ++j) {
    const int m = out.m[j];
    const double lead = std::exp(-out.damping_C * std::pow(m, kappa1)) * out.beta_m[j];
    out.forcing_c =
        std::max(out.forcing_c, (out.beta_m[j + 1] - lead) / std::pow(m, zeta_power));
  }
  return out;
}

AdjointResult adjoint_energy_identity(const ModeLayout& layout, const CouplingMatrixFunction& v,
                                      const CouplingWindow& window, const Wavenumber& k, double xi,
                                      const Vector& eta, std::vector<double> t, double r_end,
                                      const OdeOptions& opt) {
  check_layout_vector(layout, eta.size(), "eta");
  if (v.dim() != layout.dim()) {
    throw ParameterError("coupling does not match the mode layout");
  }
  if (!(window.upper < r_end)) {
    throw ParameterError("adjoint evolution needs a window ending before r_end");
  }
  if (t.empty()) {
    throw ParameterError("no evaluation points for the adjoint evolution");
  }
  for (double s : t) {
    if (!(s >= 1.0 && s <= r_end)) {
      throw ParameterError("adjoint evaluation points must lie in [1, r_end]");
    }
  }
  const int n = layout.dim();
  const cplx kappa = kappa_of(k.k);
  const double re_kappa = kappa.real();
  // G* = conj(kappa) B2/r^2 - (xi/2i) V-tilde
  const Generator adj{layout, v, window, std::conj(kappa), -xi / (2.0 * kI)};

  const OdeRhs rhs = [&](double s, const Matrix& y, Matrix& dy) {
    const Matrix w = y.topRows(n);
    Matrix gw;
    adj.apply(s, w, gw);
    dy.resize(n + 2, 1);
    dy.topRows(n) = -gw;
    const auto mult = split_multipliers(layout, s);
    const double quad_form =
        std::abs((w.adjoint() * (mult.b2.cast<cplx>().asDiagonal() * w))(0, 0));
    dy(n, 0) = -2.0 * re_kappa * quad_form / (s * s);
    dy(n + 1, 0) = -gw.squaredNorm();
  };

  const double t_min = *std::min_element(t.begin(), t.end());
  std::vector<double> pts = t;
  pts.insert(pts.end(), layout.thresholds.begin(), layout.thresholds.end());
  pts.push_back(window.lower);
  pts.push_back(window.upper);
  auto nodes = merge_nodes(std::move(pts), t_min, r_end);
  std::reverse(nodes.begin(), nodes.end());

  Matrix y0 = Matrix::Zero(n + 2, 1);
  y0.topRows(n) = eta;
  const auto traj = integrate(rhs, y0, nodes, opt);

  AdjointResult out;
  const double eta2 = eta.squaredNorm();
  for (double s : t) {
    const auto idx = traj.index_of(s);
    if (!idx) {
      throw InternalConsistencyError("adjoint evaluation point is not a node");
    }
    const Matrix& y = traj.values[*idx];
    const double w2 = y.topRows(n).squaredNorm();
    const double c = y(n, 0).real();
    out.t.push_back(s);
    out.norm_w.push_back(std::sqrt(w2));
    out.dissipated.push_back(c);
    out.conservation_residual.push_back(std::abs(w2 + c - eta2));
    out.tail_derivative_l2.push_back(y(n + 1, 0).real());
    out.max_residual = std::max(out.max_residual, out.conservation_residual.back());
  }
  return out;
}

BalanceResult radial_balance_identity(const PotentialGrid& v, const SourceVector& g,
                                      const Wavenumber& kw, double xi, const OdeOptions& opt) {
  if (v.dim() != 1 || g.dim != 1) {
    throw ParameterError("radial balance identity needs spherically symmetric (dim 1) data");
  }
  if (kw.is_real()) {
    throw ParameterError("radial balance identity needs Im k > 0");
  }
  if (std::abs(g.step - v.step()) > 1e-9 * v.step() ||
      g.delta > v.support_radius() * (1 + 1e-12)) {
    throw ParameterError("source does not fit the potential grid");
  }
  const cplx k = kw.k;
  const cplx t = k * xi;
  const auto D = jost_solution_c(v, k, t, opt);
  const auto a = regular_solution_c(v, k, t, 0.0, opt);
  if (D.size() != a.size()) {
    throw InternalConsistencyError("regular and Jost solutions on different nodes");
  }
  const std::size_t nodes = D.size();
  const std::size_t m = g.values.size();
  const double h = g.step;
  const cplx D0 = D.values.front()(0, 0);
  if (std::abs(D0) == 0.0) {
    throw ConditioningError("D(0) vanishes", std::numeric_limits<double>::infinity());
  }

  std::vector<cplx> ag(m), dg(m);
  for (std::size_t i = 0; i < m; ++i) {
    ag[i] = a.values[i](0, 0) * g.values[i];
    dg[i] = D.values[i](0, 0) * g.values[i];
  }
  const auto A = quad::cumulative(std::span<const cplx>(ag), h);
  const auto Bc = quad::cumulative(std::span<const cplx>(dg), h);

  const double imk = k.imag();
  std::vector<double> mp2(nodes);
  std::vector<cplx> flux(m);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double r = D.nodes[i];
    const cplx Ai = i < m ? A[i] : A.back();
    const cplx Bi = i < m ? Bc.back() - Bc[i] : cplx(0.0);
    const cplx phi = (D.values[i](0, 0) * Ai + a.values[i](0, 0) * Bi) / D0;
    const cplx dphi = (D.derivs[i](0, 0) * Ai + a.derivs[i](0, 0) * Bi) / D0;
    const cplx e = std::exp(-kI * k * r);
    mp2[i] = std::norm((dphi - kI * k * phi) * e);
    if (i < m) {
      flux[i] = phi * g.values[i] * std::exp(2.0 * imk * r);
    }
  }
  // the integrand has a kink where the source ends; integrate the two pieces separately
  const std::span<const double> all(mp2);
  const double mp_int =
      quad::simpson(all.subspan(0, m), h) + quad::simpson(all.subspan(m - 1), h);

  BalanceResult out;
  const double k2 = std::norm(k);
  const cplx m_inf = A.back() / D0;
  out.J_norm = std::abs(m_inf);
  out.lhs = std::norm(m_inf) + imk / k2 * mp_int;
  out.rhs = (k * quad::simpson(flux, h)).imag() / k2;
  out.residual = std::abs(out.lhs - out.rhs);

  std::vector<double> g2(m), g2w(m);
  for (std::size_t i = 0; i < m; ++i) {
    g2[i] = g.values[i] * g.values[i];
    g2w[i] = g2[i] * std::exp(4.0 * imk * g.step * static_cast<double>(i));
  }
  const double gn = std::sqrt(quad::simpson(g2, h));
  const double gw = std::sqrt(quad::simpson(g2w, h));
  out.bound = std::sqrt(gn * gw) / (std::sqrt(std::abs(k)) * imk);
  out.bound_ok = out.J_norm <= out.bound * (1 + 1e-9);
  return out;
}

}  // namespace hp
