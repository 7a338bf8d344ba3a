#include "hpencil/spectral.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "hpencil/errors.hpp"
#include "hpencil/parallel.hpp"
#include "hpencil/quadrature.hpp"

namespace hp {

namespace {

constexpr double kSubharmonicSlack = 1e-4;
constexpr double kMinImag = 1e-4;

Vector solve_checked(const Matrix& m, const Vector& v, cplx k) {
  try {
    return checked_inverse(m, "Jost matrix") * v;
  } catch (const ConditioningError&) {
    throw ResonanceError(k);
  }
}

std::vector<double> simpson_weights(std::size_t nodes, double h) {
  // Weights reproducing quad::simpson on `nodes` samples.
  std::vector<double> w(nodes, 0.0);
  std::vector<double> e(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    e[i] = 1.0;
    w[i] = quad::simpson(e, h);
    e[i] = 0.0;
  }
  return w;
}

std::vector<double> linspace(double a, double b, int intervals) {
  std::vector<double> out(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    out[i] = a + (b - a) * i / intervals;
  }
  out.back() = b;
  return out;
}

}  // namespace

double log_minus(double x, double floor) {
  if (!(x > 0.0)) {
    return floor;
  }
  return std::max(std::min(std::log(x), 0.0), floor);
}

SpectralSample density(const PotentialGrid& q, const SourceVector& f, const Wavenumber& k, double t,
                       const OdeOptions& opt) {
  if (!k.is_real()) {
    throw ParameterError("density needs a real wavenumber");
  }
  const auto J = jost_solution(q, k, t, opt);
  const Vector amp = solve_checked(J.front(), fhat(q, f, k, t, opt), k.k);
  SpectralSample s;
  s.lambda = std::norm(k.k);
  s.t = t;
  s.density = std::abs(k.k.real()) / std::numbers::pi * amp.squaredNorm();
  s.log_minus = log_minus(s.density);
  return s;
}

SpectralSample density_via_pencil(const PotentialGrid& q, const SourceVector& f,
                                  const Wavenumber& k, double xi, const OdeOptions& opt) {
  if (!k.is_real()) {
    throw ParameterError("density needs a real wavenumber");
  }
  const double kr = k.k.real();
  const JostData d = pencil_jost(q, k, xi, opt);
  const Vector amp = solve_checked(d.D0, fhat_c(q, f, k.k, k.k * xi, opt), k.k);
  SpectralSample s;
  s.lambda = kr * kr;
  s.t = kr * xi;
  s.density = std::abs(kr) / std::numbers::pi * amp.squaredNorm();
  s.log_minus = log_minus(s.density);
  return s;
}

namespace {

// Weighted 2-D Simpson sum of value(sample) * jac(k), excluded nodes dropped.
template <class Value, class Jac>
double integrate_grid(const EntropyReport& r, Value value, Jac jac) {
  const std::size_t nk = r.k_nodes.size(), nt = r.t_nodes.size();
  const auto wk = simpson_weights(nk, r.k_nodes[1] - r.k_nodes[0]);
  const auto wt = simpson_weights(nt, r.t_nodes[1] - r.t_nodes[0]);
  double total = 0.0;
  for (std::size_t it = 0; it < nt; ++it) {
    double row = 0.0;
    for (std::size_t ik = 0; ik < nk; ++ik) {
      const auto& s = r.at(ik, it);
      if (!s.excluded) {
        row += wk[ik] * jac(r.k_nodes[ik]) * value(s);
      }
    }
    total += wt[it] * row;
  }
  return total;
}

}  // namespace

double entropy_with_floor(const EntropyReport& report, double floor) {
  const bool slanted = report.mode == ScanMode::PencilSlanted;
  return integrate_grid(
      report, [floor](const SpectralSample& s) { return log_minus(s.density, floor); },
      [slanted](double k) { return slanted ? 2.0 * k * k : 2.0 * k; });
}

EntropyReport entropy_scan(const PotentialGrid& q, const SourceVector& f, const Rectangle& rect,
                           const ScanOptions& opt) {
  if (!(rect.c > 0.0) || !(rect.d > rect.c) || !(rect.T > 0.0)) {
    throw ParameterError("scan rectangle needs 0 < c < d and T > 0");
  }
  if (opt.n_lambda < 16 || opt.n_t < 16 || opt.n_lambda % 2 != 0 || opt.n_t % 2 != 0) {
    throw ParameterError("scan resolutions must be even and >= 16");
  }
  const double ka = std::sqrt(rect.c), kb = std::sqrt(rect.d);
  if (ka < Wavenumber::kMin) {
    throw ParameterError("scan rectangle reaches k < 1e-3");
  }
  EntropyReport r;
  r.rect = rect;
  r.n_lambda = opt.n_lambda;
  r.n_t = opt.n_t;
  r.mode = opt.mode;
  r.k_nodes = linspace(ka, kb, opt.n_lambda);
  r.t_nodes = linspace(-rect.T, rect.T, opt.n_t);
  const std::size_t nk = r.k_nodes.size(), nt = r.t_nodes.size();
  r.samples.resize(nk * nt);

  parallel_for(nk * nt, static_cast<unsigned>(std::max(1, opt.threads)), [&](std::size_t idx) {
    const std::size_t ik = idx % nk, it = idx / nk;
    const auto k = Wavenumber::real(r.k_nodes[ik]);
    const double s = r.t_nodes[it];
    SpectralSample out;
    try {
      out = opt.mode == ScanMode::FixedT ? density(q, f, k, s, opt.ode)
                                         : density_via_pencil(q, f, k, s, opt.ode);
      out.log_minus = log_minus(out.density, opt.floor);
    } catch (const ResonanceError&) {
      out.lambda = r.k_nodes[ik] * r.k_nodes[ik];
      out.t = opt.mode == ScanMode::FixedT ? s : r.k_nodes[ik] * s;
      out.excluded = true;
    }
    r.samples[idx] = out;
  });

  for (const auto& s : r.samples) {
    r.excluded += s.excluded ? 1 : 0;
  }
  if (static_cast<double>(r.excluded) > 0.01 * static_cast<double>(r.samples.size())) {
    for (const auto& s : r.samples) {
      if (s.excluded) {
        throw ResonanceError(std::sqrt(s.lambda));
      }
    }
  }

  r.entropy = entropy_with_floor(r, opt.floor);

  // max over t of int sigma' dlambda (FixedT) or int sigma'(k^2, k xi) dk (PencilSlanted).
  const auto wk = simpson_weights(nk, r.k_nodes[1] - r.k_nodes[0]);
  const bool slanted = opt.mode == ScanMode::PencilSlanted;
  r.variation_bound = 0.0;
  for (std::size_t it = 0; it < nt; ++it) {
    double v = 0.0;
    for (std::size_t ik = 0; ik < nk; ++ik) {
      const auto& s = r.at(ik, it);
      if (!s.excluded) {
        v += wk[ik] * (slanted ? 1.0 : 2.0 * r.k_nodes[ik]) * s.density;
      }
    }
    r.variation_bound = std::max(r.variation_bound, v);
  }
  return r;
}

double subharmonic_g(const PotentialGrid& q, const SourceVector& f, double xi, cplx k,
                     const OdeOptions& opt) {
  const JostData d = pencil_jost(q, Wavenumber::upper(k), xi, opt);
  const Vector v = checked_inverse(d.D0, "D(0,k,xi)") * fhat_c(q, f, k, k * xi, opt);
  return std::log(v.norm());
}

SubharmonicResult subharmonic_check(const PotentialGrid& q, const SourceVector& f, double xi,
                                    cplx center, double radius, int points,
                                    const OdeOptions& opt) {
  if (!(radius > 0.0) || points < 8) {
    throw ParameterError("subharmonic check needs radius > 0 and at least 8 circle points");
  }
  SubharmonicResult res;
  res.points = points;
  res.center = center;
  if (center.imag() - radius < kMinImag) {
    res.center += cplx(0.0, kMinImag - (center.imag() - radius));
  }
  res.rhs = subharmonic_g(q, f, xi, res.center, opt);

  auto circle_mean = [&](double rho) {
    double acc = 0.0;
    for (int j = 0; j < points; ++j) {
      const double th = 2.0 * std::numbers::pi * j / points;
      acc += subharmonic_g(q, f, xi, res.center + std::polar(rho, th), opt);
    }
    return acc / points;
  };
  res.radius = radius;
  try {
    res.lhs = circle_mean(radius);
  } catch (const Error&) {
    res.radius = 0.9 * radius;
    res.lhs = circle_mean(res.radius);
  }
  if (!std::isfinite(res.lhs) || !std::isfinite(res.rhs)) {
    // ln 0 at the center makes the inequality trivially true; a -inf on the
    // circle has measure zero only in the limit and is reported as failure.
    res.ok = std::isinf(res.rhs) && res.rhs < 0.0;
    return res;
  }
  res.ok = res.lhs >= res.rhs - kSubharmonicSlack;
  return res;
}

}  // namespace hp
