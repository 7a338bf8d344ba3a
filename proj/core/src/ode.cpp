#include "hpencil/ode.hpp"

#include <algorithm>
#include <cmath>

#include "hpencil/errors.hpp"

namespace hp {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Stage abscissae at the ends of a step are pulled this far (relative to the
// step) into its interior so that one-sided coefficients are used at nodes.
constexpr double kEdge = 1e-12;

double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double tol) {
  double worst = 0.0;
  const Eigen::Index n = err.size();
  const cplx* e = err.data();
  const cplx* a = y0.data();
  const cplx* b = y1.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = tol * (1.0 + std::max(std::abs(a[i]), std::abs(b[i])));
    worst = std::max(worst, std::abs(e[i]) / scale);
  }
  return worst;
}

}  // namespace

std::optional<std::size_t> SolutionTrajectory::index_of(double r) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), r - 1e-9 * std::max(1.0, std::abs(r)));
  if (it != nodes.end() && std::abs(*it - r) <= 1e-9 * std::max(1.0, std::abs(r))) {
    return static_cast<std::size_t>(it - nodes.begin());
  }
  return std::nullopt;
}

void SolutionTrajectory::at(double r, Matrix& out) const {
  if (nodes.empty()) {
    throw ParameterError("empty trajectory");
  }
  if (r <= nodes.front()) {
    out = values.front();
    return;
  }
  if (r >= nodes.back()) {
    out = values.back();
    return;
  }
  auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - nodes.begin()) - 1;
  const double x0 = nodes[i];
  const double h = nodes[i + 1] - x0;
  const double s = (r - x0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  out = h00 * values[i] + (h10 * h) * derivs[i] + h01 * values[i + 1] + (h11 * h) * derivs[i + 1];
}

Matrix SolutionTrajectory::at(double r) const {
  Matrix out;
  at(r, out);
  return out;
}

SolutionTrajectory integrate(const OdeRhs& rhs, const Matrix& initial,
                             std::span<const double> nodes, const OdeOptions& opt) {
  if (nodes.empty()) {
    throw ParameterError("integration needs at least one node");
  }
  if (!(opt.tol > 0.0)) {
    throw ParameterError("integration tolerance must be positive");
  }
  if (!initial.allFinite()) {
    throw InputError("non-finite initial value");
  }
  const double dir = nodes.size() > 1 && nodes.back() < nodes.front() ? -1.0 : 1.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!((nodes[i] - nodes[i - 1]) * dir > 0.0)) {
      throw ParameterError("integration nodes must be strictly monotone");
    }
  }

  SolutionTrajectory traj;
  traj.nodes.assign(nodes.begin(), nodes.end());
  traj.values.reserve(nodes.size());
  traj.derivs.reserve(nodes.size());

  Matrix y = initial;
  Matrix k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err;
  auto eval = [&](double r, const Matrix& state, Matrix& out) {
    rhs(r, state, out);
    if (out.rows() != state.rows() || out.cols() != state.cols()) {
      throw ParameterError("right-hand side changed the state shape");
    }
  };

  Matrix dy0;
  eval(nodes[0], y, dy0);
  if (!dy0.allFinite()) {
    throw InputError("non-finite coefficient sample at r = " + std::to_string(nodes[0]));
  }
  traj.values.push_back(y);
  traj.derivs.push_back(dy0);

  double h_prev = 0.0;
  std::size_t steps = 0;
  for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
    const double a = nodes[seg];
    const double b = nodes[seg + 1];
    const double span = std::abs(b - a);
    double r = a;

    eval(a + dir * kEdge * span, y, k1);
    if (!k1.allFinite()) {
      throw InputError("non-finite coefficient sample at r = " + std::to_string(a));
    }
    double h;
    if (h_prev > 0.0) {
      h = std::min(h_prev, span);
    } else {
      const double fn = k1.cwiseAbs().maxCoeff();
      const double yn = y.cwiseAbs().maxCoeff();
      h = fn > 0.0 ? std::min(span, 0.01 * (1.0 + yn) / fn) : span;
    }

    while (true) {
      const double remaining = std::abs(b - r);
      if (remaining <= 1e-14 * std::max(1.0, std::abs(b))) {
        break;
      }
      bool last = false;
      if (h >= remaining * (1.0 - 1e-12)) {
        h = remaining;
        last = true;
      }
      if (h < 1e-14 * std::max(1.0, std::abs(r))) {
        throw IntegrationError("step-size underflow (stiff or singular system)", r);
      }
      if (++steps > opt.max_steps) {
        throw IntegrationError("step budget exhausted", r);
      }
      const double hs = dir * h;
      const double edge = kEdge * h;

      tmp = y + (hs * a21) * k1;
      eval(r + hs * c2, tmp, k2);
      tmp = y + hs * (a31 * k1 + a32 * k2);
      eval(r + hs * c3, tmp, k3);
      tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      eval(r + hs * c4, tmp, k4);
      tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      eval(r + hs * c5, tmp, k5);
      tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      eval(r + hs - dir * edge, tmp, k6);
      ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      eval(r + hs - dir * edge, ynew, k7);
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double en = error_norm(err, y, ynew, opt.tol);
      if (!std::isfinite(en) || !ynew.allFinite()) {
        en = 1e10;
      }
      if (en <= 1.0) {
        r = last ? b : r + hs;
        y.swap(ynew);
        k1.swap(k7);
        const double fac = en > 0.0 ? std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0) : 5.0;
        if (!last) {
          h *= fac;
        } else {
          h_prev = std::max(h * fac, h);
        }
        if (last) {
          break;
        }
        h_prev = h;
      } else {
        h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      }
    }
    if (!y.allFinite()) {
      throw IntegrationError("non-finite solution", b);
    }
    Matrix dy;
    eval(b, y, dy);
    traj.values.push_back(y);
    traj.derivs.push_back(std::move(dy));
  }

  if (dir < 0.0) {
    std::reverse(traj.nodes.begin(), traj.nodes.end());
    std::reverse(traj.values.begin(), traj.values.end());
    std::reverse(traj.derivs.begin(), traj.derivs.end());
  }
  return traj;
}

std::vector<double> nodes_between(std::span<const double> grid, double a, double b) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double eps = 1e-9 * std::max(1.0, hi - lo);
  std::vector<double> out;
  out.push_back(a);
  std::vector<double> inner;
  for (double x : grid) {
    if (x > lo + eps && x < hi - eps) {
      inner.push_back(x);
    }
  }
  std::sort(inner.begin(), inner.end());
  if (b < a) {
    std::reverse(inner.begin(), inner.end());
  }
  out.insert(out.end(), inner.begin(), inner.end());
  if (b != a) {
    out.push_back(b);
  }
  return out;
}

std::vector<double> nodes_between(const PotentialGrid& q, double a, double b) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double h = q.step();
  std::vector<double> out;
  out.push_back(a);
  const double eps = 1e-9 * h;
  auto first = static_cast<long long>(std::floor(lo / h + 1e-9)) + 1;
  auto last = static_cast<long long>(std::ceil(hi / h - 1e-9)) - 1;
  std::vector<double> inner;
  for (long long i = std::max(0LL, first); i <= last; ++i) {
    const double x = h * static_cast<double>(i);
    if (x > lo + eps && x < hi - eps) {
      inner.push_back(x);
    }
  }
  if (b < a) {
    std::reverse(inner.begin(), inner.end());
  }
  out.insert(out.end(), inner.begin(), inner.end());
  if (b != a) {
    out.push_back(b);
  }
  return out;
}

SolutionTrajectory integrate_linear(const Coefficient& coefficient, const Matrix& initial,
                                    std::span<const double> grid, double from, double to,
                                    double tol) {
  const auto nodes = nodes_between(grid, from, to);
  Matrix a;
  OdeRhs rhs = [&](double r, const Matrix& y, Matrix& dy) {
    coefficient(r, a);
    if (a.cols() != y.rows()) {
      throw ParameterError("coefficient and state shapes do not match");
    }
    dy.noalias() = a * y;
  };
  OdeOptions opt;
  opt.tol = tol;
  return integrate(rhs, initial, nodes, opt);
}

Wavenumber Wavenumber::real(double k) {
  if (!(std::abs(k) >= kMin) || !std::isfinite(k)) {
    throw ParameterError("real wavenumber must satisfy |k| >= 1e-3");
  }
  return {cplx(k, 0.0), Regime::RealAxis};
}

Wavenumber Wavenumber::upper(cplx k) {
  if (!(k.imag() > 0.0) || !std::isfinite(k.real()) || !std::isfinite(k.imag())) {
    throw ParameterError("upper-half-plane wavenumber needs Im k > 0");
  }
  return {k, Regime::UpperHalfPlane};
}

Wavenumber Wavenumber::from(cplx k) {
  if (std::abs(k.imag()) <= 1e-14) {
    return real(k.real());
  }
  return upper(k);
}

SolutionTrajectory ordered_exponential(const PotentialGrid& q, double xi, double r0, double r1,
                                       int sign, const OdeOptions& opt) {
  if (sign != 1 && sign != -1) {
    throw ParameterError("ordered_exponential sign must be +1 or -1");
  }
  if (r0 < 0.0 || r1 < 0.0 || std::max(r0, r1) > q.extent() * (1 + 1e-12)) {
    throw ParameterError("ordered_exponential span outside the grid");
  }
  const cplx factor = -static_cast<double>(sign) * kI * (xi / 2.0);
  const auto nodes = nodes_between(q, r0, r1);
  Matrix qr;
  OdeRhs rhs = [&](double r, const Matrix& u, Matrix& du) {
    q.at(r, qr);
    du.noalias() = factor * (qr * u);
  };
  return integrate(rhs, Matrix::Identity(q.dim(), q.dim()), nodes, opt);
}

}  // namespace hp
