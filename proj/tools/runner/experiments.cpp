#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hpencil/errors.hpp"
#include "hpencil/krein.hpp"
#include "hpencil/parallel.hpp"
#include "hpencil/pencil_resolvent.hpp"
#include "hpencil/radial3d.hpp"
#include "hpencil/spectral.hpp"

namespace hp::cli {

namespace {

namespace ps = hp::potential_spec;

constexpr double kPi = 3.14159265358979323846;

std::uint64_t require_seed(const ConfigNode& node, std::optional<std::uint64_t> seed,
                           const std::string& why) {
  if (!seed) {
    throw ConfigError(node.path().empty() ? "/seed" : node.path(),
                      why + " needs a seed (top-level \"seed\" or --seed)");
  }
  return *seed;
}

std::pair<double, double> read_range(const ConfigNode& node, const std::string& key,
                                     std::pair<double, double> fallback) {
  if (!node.has(key)) return fallback;
  const auto v = node.numbers(key);
  if (v.size() != 2 || v[1] < v[0]) {
    node.fail(key, "expected [min, max] with min <= max");
  }
  return {v[0], v[1]};
}

struct Draw {
  std::mt19937_64 rng;
  explicit Draw(std::uint64_t s) : rng(s) {}
  double uniform(std::pair<double, double> r) {
    return std::uniform_real_distribution<double>(r.first, r.second)(rng);
  }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
};

// ---------------------------------------------------------------- density

Job parse_density(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const auto pnode = c.child("potential");
  const auto spec = read_potential(pnode, seed);
  const bool zero = pnode.string("kind") == "zero";
  const auto snode = c.child("source");
  const bool indicator = snode.string("profile", "indicator") == "indicator";
  const double delta = snode.number("delta", 1.0);
  const auto q = std::make_shared<PotentialGrid>(build_potential(spec));
  const auto f = std::make_shared<SourceVector>(read_source(snode, q->step(), q->dim()));
  const auto ks = read_grid(c, "k");
  const std::string method = c.string("method", "jost");
  if (method != "jost" && method != "pencil") c.fail("method", "expected \"jost\" or \"pencil\"");
  const double t = c.number("t", 0.0);
  const double xi = c.number("xi", 0.0);
  const double tol = c.number("free_tolerance", 1e-7);
  for (double k : ks) {
    if (!(k >= Wavenumber::kMin)) c.fail("k", "wavenumbers must be >= 1e-3");
  }
  return [=](Context& ctx) {
    std::vector<SpectralSample> out(ks.size());
    parallel_for(ks.size(), ctx.threads, [&](std::size_t i) {
      const auto k = Wavenumber::real(ks[i]);
      out[i] = method == "jost" ? density(*q, *f, k, t, ctx.ode)
                                : density_via_pencil(*q, *f, k, xi, ctx.ode);
    });
    const bool reference = zero && indicator;
    std::vector<std::string> header{"k", "lambda", "t", "density", "log_minus"};
    if (reference) {
      header.insert(header.end(), {"free_reference", "abs_error"});
    }
    CsvTable csv(header);
    double worst = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      std::vector<CsvTable::Cell> row{ks[i], out[i].lambda, out[i].t, out[i].density, out[i].log_minus};
      if (reference) {
        const double k = ks[i];
        const double a = (1.0 - std::cos(k * delta)) / (k * k);
        const double ref = k / kPi * a * a / delta;
        const double err = std::abs(out[i].density - ref);
        worst = std::max(worst, err);
        row.push_back(ref);
        row.push_back(err);
      }
      csv.add(row);
    }
    ctx.write("density.csv", csv);
    ctx.summary["points"] = ks.size();
    ctx.summary["method"] = method;
    if (reference) {
      ctx.summary["max_abs_error_vs_free"] = worst;
      ctx.task("free-closed-form", worst <= tol, {{"max_abs_error", worst}, {"tolerance", tol}});
    }
  };
}

// ---------------------------------------------------------------- entropy

Job parse_entropy(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const auto spec = read_potential(c.child("potential"), seed);
  const auto q = std::make_shared<PotentialGrid>(build_potential(spec));
  const auto f = std::make_shared<SourceVector>(read_source(c.child("source"), q->step(), q->dim()));
  Rectangle rect;
  if (auto r = c.optional_child("rectangle")) {
    rect.c = r->number("c", rect.c);
    rect.d = r->number("d", rect.d);
    rect.T = r->number("T", rect.T);
  }
  ScanOptions so;
  so.n_lambda = c.integer("n_lambda", so.n_lambda);
  so.n_t = c.integer("n_t", so.n_t);
  so.floor = c.number("floor", so.floor);
  const std::string mode = c.string("mode", "fixed-t");
  if (mode == "fixed-t") {
    so.mode = ScanMode::FixedT;
  } else if (mode == "pencil") {
    so.mode = ScanMode::PencilSlanted;
  } else {
    c.fail("mode", "expected \"fixed-t\" or \"pencil\"");
  }
  std::vector<double> radii = c.numbers("truncate", {});
  if (radii.empty()) radii.push_back(q->support_radius());
  for (double R : radii) {
    if (!(R > 0.0) || R > q->support_radius() * (1 + 1e-12)) {
      c.fail("truncate", "radii must lie in (0, support_radius]");
    }
  }
  double min_entropy = -std::numeric_limits<double>::infinity();
  double max_change = std::numeric_limits<double>::infinity();
  if (auto chk = c.optional_child("checks")) {
    min_entropy = chk->number("min_entropy", min_entropy);
    max_change = chk->number("max_relative_change", max_change);
  }
  struct Discs {
    int count = 0;
    std::uint64_t seed = 0;
    std::pair<double, double> re{1.0, 2.0}, im{0.3, 1.0}, radius{0.1, 0.25}, xi{-2.0, 2.0};
    int points = 256;
  } discs;
  if (auto sh = c.optional_child("subharmonic")) {
    discs.seed = require_seed(*sh, seed, "the subharmonic discs");
    discs.count = sh->integer("discs", 20);
    discs.re = read_range(*sh, "re_k_range", discs.re);
    discs.im = read_range(*sh, "im_k_range", discs.im);
    discs.radius = read_range(*sh, "radius_range", discs.radius);
    discs.xi = read_range(*sh, "xi_range", discs.xi);
    discs.points = sh->integer("points", discs.points);
    if (discs.count < 1) sh->fail("discs", "must be >= 1");
    if (discs.points < 8) sh->fail("points", "must be >= 8");
    if (!(discs.radius.first > 0.0) || !(discs.im.first > 0.0)) {
      sh->fail("radius_range", "radii and Im k must be positive");
    }
  }
  return [=](Context& ctx) {
    if (discs.count > 0) {
      std::vector<SubharmonicResult> res(discs.count);
      std::vector<double> xis(discs.count);
      parallel_for(res.size(), ctx.threads, [&](std::size_t i) {
        Draw d(derive_seed(discs.seed, i));
        const cplx center(d.uniform(discs.re), d.uniform(discs.im));
        const double radius = d.uniform(discs.radius);
        xis[i] = d.uniform(discs.xi);
        res[i] = subharmonic_check(*q, *f, xis[i], center, radius, discs.points, ctx.ode);
      });
      CsvTable csv({"disc", "center_re", "center_im", "radius", "xi", "circle_mean", "center_value",
                    "margin", "status"});
      int failures = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& r = res[i];
        const double margin = r.lhs - r.rhs;
        worst = std::min(worst, margin);
        failures += r.ok ? 0 : 1;
        csv.add({i, r.center.real(), r.center.imag(), r.radius, xis[i], r.lhs, r.rhs, margin,
                 r.ok ? "pass" : "fail"});
      }
      ctx.write("subharmonic.csv", csv);
      ctx.task("subharmonic", failures == 0,
               {{"discs", discs.count}, {"failures", failures}, {"min_margin", worst}});
    }
    ScanOptions opt = so;
    opt.threads = static_cast<int>(ctx.threads);
    opt.ode = ctx.ode;
    CsvTable grid({"R", "k", "t", "lambda", "density", "log_minus", "excluded"});
    CsvTable byR({"R", "entropy", "variation_bound", "excluded"});
    std::vector<double> values;
    json scans = json::array();
    for (double R : radii) {
      const auto qr = truncate(*q, q->dim(), R);
      const auto rep = entropy_scan(qr, *f, rect, opt);
      for (std::size_t it = 0; it < rep.t_nodes.size(); ++it) {
        for (std::size_t ik = 0; ik < rep.k_nodes.size(); ++ik) {
          const auto& s = rep.at(ik, it);
          grid.add({R, rep.k_nodes[ik], rep.t_nodes[it], s.lambda, s.density, s.log_minus, s.excluded});
        }
      }
      byR.add({R, rep.entropy, rep.variation_bound, rep.excluded});
      values.push_back(rep.entropy);
      ctx.excluded += rep.excluded;
      scans.push_back({{"R", R}, {"entropy", rep.entropy}, {"variation_bound", rep.variation_bound},
                       {"excluded", rep.excluded}});
    }
    ctx.write("entropy_grid.csv", grid);
    ctx.write("entropy_vs_R.csv", byR);
    ctx.summary["scans"] = scans;
    ctx.summary["mode"] = mode;
    if (std::isfinite(min_entropy)) {
      const double lo = *std::min_element(values.begin(), values.end());
      ctx.task("entropy-above-floor", lo > min_entropy, {{"min_entropy", lo}, {"threshold", min_entropy}});
    }
    if (std::isfinite(max_change) && values.size() > 1) {
      double worst = 0.0;
      for (std::size_t i = 1; i < values.size(); ++i) {
        worst = std::max(worst, std::abs(values[i] - values[i - 1]) / std::abs(values[i]));
      }
      ctx.task("entropy-stabilizes", worst < max_change,
               {{"max_relative_change", worst}, {"threshold", max_change}});
    }
  };
}

// ---------------------------------------------------------------- identities

struct IdentityParams {
  int instances = 20;
  int max_dim = 4;
  double max_R = 5.0;
  double step = 0.01;
  double amplitude = 1.0;
  std::pair<double, double> k{0.5, 5.0};
  std::pair<double, double> t{-2.0, 2.0};
  std::pair<double, double> imk{0.2, 2.0};
  std::pair<double, double> xi{-2.0, 2.0};
  std::map<std::string, int> counts;  // per identity, defaults to instances
  int count(const std::string& id) const {
    const auto it = counts.find(id);
    return it == counts.end() ? instances : it->second;
  }
  double tol_flux = 1e-8, tol_weyl = 1e-6, tol_krein = 1e-6, tol_jost = 1e-7, tol_herglotz = 1e-8;
};

struct IdentityRow {
  // braced construction keeps the draw order of the arguments
  IdentityRow(std::string id, cplx k_, double coupling_, double tol)
      : identity(std::move(id)), k(k_), coupling(coupling_), tolerance(tol) {}

  std::string identity;
  cplx k;
  double coupling = 0.0;
  double value = 0.0;
  double tolerance = 0.0;
  double aux = std::numeric_limits<double>::quiet_NaN();  // Gronwall ratio for pencil-jost
  bool pass = false;
  std::string note;
};

std::vector<IdentityRow> identity_instance(const IdentityParams& p, int index, std::uint64_t seed,
                                           const OdeOptions& ode, int& dim, double& R) {
  Draw d(seed);
  dim = d.integer(1, p.max_dim);
  R = std::max(p.step, p.step * std::round(d.uniform({0.5, p.max_R}) / p.step));
  PotentialSpec spec;
  spec.kind = ps::RandomHermitian{p.amplitude, 0.0, d.rng(), 0.0};
  spec.dim = dim;
  spec.step = p.step;
  spec.support_radius = R;
  const auto q = build_potential(spec);
  std::vector<IdentityRow> rows;
  // parameters are always drawn, so trimming one identity's count leaves the others unchanged
  const auto guarded = [&](IdentityRow row, const std::function<void(IdentityRow&)>& body) {
    if (index >= p.count(row.identity)) return;
    try {
      body(row);
    } catch (const Error& e) {
      row.value = std::numeric_limits<double>::quiet_NaN();
      row.pass = false;
      row.note = e.what();
    }
    rows.push_back(row);
  };

  {
    IdentityRow r{"flux", cplx(d.uniform(p.k), 0.0), d.uniform(p.t), p.tol_flux};
    guarded(r, [&](IdentityRow& row) {
      const auto s = scattering_coefficients(q, Wavenumber::real(row.k.real()), row.coupling, ode);
      const Matrix m = s.A_frak.adjoint() * s.A_frak - s.B_frak.adjoint() * s.B_frak -
                       Matrix::Identity(dim, dim);
      row.value = op_norm(m);
      row.pass = row.value <= row.tolerance;
    });
  }
  {
    IdentityRow r{"weyl", cplx(d.uniform(p.k), d.uniform(p.imk)), d.uniform(p.xi), p.tol_weyl};
    guarded(r, [&](IdentityRow& row) {
      row.value = weyl_identity_residual(q, Wavenumber::upper(row.k), row.coupling,
                                         GramQuadrature::Ode, ode);
      row.pass = row.value <= row.tolerance;
    });
  }
  {
    // alternate real and complex k
    const double im = (seed & 1u) ? d.uniform(p.imk) : 0.0;
    IdentityRow r{"krein", cplx(d.uniform(p.k), im), d.uniform(p.xi), p.tol_krein};
    guarded(r, [&](IdentityRow& row) {
      row.value = transform_equivalence(q, row.k, row.coupling, ode).residual;
      row.pass = row.value <= row.tolerance;
    });
  }
  {
    IdentityRow r{"pencil-jost", cplx(d.uniform(p.k), d.uniform(p.imk)), d.uniform(p.xi), p.tol_jost};
    guarded(r, [&](IdentityRow& row) {
      const auto jd = pencil_jost(q, Wavenumber::upper(row.k), row.coupling, ode);
      const auto J = jost_solution_c(q, row.k, row.k * row.coupling, ode);
      const Matrix& J0 = J.values.front();
      row.value = (jd.D0 - J0).norm() / std::max(1.0, J0.norm());
      row.aux = op_norm(jd.D0) / jd.gronwall_bound;
      const bool gronwall = row.aux <= 1.0;
      row.pass = row.value <= row.tolerance && gronwall;
      if (!gronwall) row.note = "Gronwall bound violated";
    });
  }
  {
    IdentityRow r{"herglotz", cplx(0.0, 0.0), d.uniform(p.xi), p.tol_herglotz};
    guarded(r, [&](IdentityRow& row) {
      double worst = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
          const cplx k(p.k.first + (p.k.second - p.k.first) * i / 4.0,
                       p.imk.first + (p.imk.second - p.imk.first) * j / 4.0);
          const auto h = herglotz_G(q, Wavenumber::upper(k), row.coupling, ode);
          if (h.min_im_eigenvalue < worst) {
            worst = h.min_im_eigenvalue;
            row.k = k;
          }
        }
      }
      row.value = worst;
      row.pass = worst >= -row.tolerance;
    });
  }
  return rows;
}

Job parse_identities(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const std::uint64_t s = require_seed(c, seed, "the identity battery");
  IdentityParams p;
  p.instances = c.integer("instances", p.instances);
  p.max_dim = c.integer("max_dim", p.max_dim);
  p.max_R = c.number("max_R", p.max_R);
  p.step = c.number("step", p.step);
  p.amplitude = c.number("amplitude", p.amplitude);
  p.k = read_range(c, "k_range", p.k);
  p.t = read_range(c, "t_range", p.t);
  p.imk = read_range(c, "im_k_range", p.imk);
  p.xi = read_range(c, "xi_range", p.xi);
  if (auto tol = c.optional_child("tolerances")) {
    p.tol_flux = tol->number("flux", p.tol_flux);
    p.tol_weyl = tol->number("weyl", p.tol_weyl);
    p.tol_krein = tol->number("krein", p.tol_krein);
    p.tol_jost = tol->number("pencil_jost", p.tol_jost);
    p.tol_herglotz = tol->number("herglotz", p.tol_herglotz);
  }
  if (p.instances < 1) c.fail("instances", "must be >= 1");
  if (auto cn = c.optional_child("counts")) {
    for (const char* id : {"flux", "weyl", "krein", "pencil_jost", "herglotz"}) {
      if (!cn->has(id)) continue;
      const int n = cn->integer(id);
      if (n < 0 || n > p.instances) cn->fail(id, "must lie in [0, instances]");
      p.counts[std::string(id) == "pencil_jost" ? "pencil-jost" : id] = n;
    }
  }
  if (p.max_dim < 1) c.fail("max_dim", "must be >= 1");
  if (!(p.step > 0.0) || !(p.max_R >= 0.5)) c.fail("max_R", "needs step > 0 and max_R >= 0.5");
  if (!(p.k.first >= Wavenumber::kMin)) c.fail("k_range", "wavenumbers must be >= 1e-3");
  if (!(p.imk.first > 0.0)) c.fail("im_k_range", "Im k must be positive");
  return [=](Context& ctx) {
    struct Result {
      std::uint64_t seed = 0;
      int dim = 0;
      double R = 0.0;
      std::vector<IdentityRow> rows;
    };
    std::vector<Result> res(p.instances);
    parallel_for(res.size(), ctx.threads, [&](std::size_t i) {
      res[i].seed = derive_seed(s, i);
      res[i].rows = identity_instance(p, static_cast<int>(i), res[i].seed, ctx.ode, res[i].dim, res[i].R);
    });
    CsvTable csv({"instance", "seed", "dim", "R", "identity", "k_re", "k_im", "coupling", "value",
                  "tolerance", "aux", "status"});
    std::map<std::string, std::pair<int, double>> agg;  // failures, worst value
    for (std::size_t i = 0; i < res.size(); ++i) {
      for (const auto& r : res[i].rows) {
        csv.add({i, res[i].seed, res[i].dim, res[i].R, r.identity, r.k.real(), r.k.imag(), r.coupling,
                 r.value, r.tolerance, r.aux, std::isnan(r.value) ? "error" : (r.pass ? "pass" : "fail")});
        auto& a = agg.try_emplace(r.identity, 0, -std::numeric_limits<double>::infinity()).first->second;
        a.first += r.pass ? 0 : 1;
        const double v = r.identity == "herglotz" ? -r.value : r.value;
        a.second = std::isnan(v) ? a.second : std::max(a.second, v);
      }
    }
    ctx.write("identities.csv", csv);
    for (const auto& [name, a] : agg) {
      ctx.task(name, a.first == 0,
               {{"failures", a.first},
                {name == "herglotz" ? "most_negative_eigenvalue" : "max_residual",
                 name == "herglotz" ? -a.second : a.second}});
    }
    ctx.summary["instances"] = p.instances;
  };
}

// ---------------------------------------------------------------- krein-check

Job parse_krein(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const auto spec = read_potential(c.child("potential"), seed);
  const auto q = std::make_shared<PotentialGrid>(build_potential(spec));
  const auto ks = c.complexes("k");
  const auto xis = c.numbers("xi");
  const double tol = c.number("tolerance", 1e-6);
  if (ks.empty() || xis.empty()) c.fail("k", "need at least one k and one xi");
  return [=](Context& ctx) {
    const std::size_t n = ks.size() * xis.size();
    std::vector<TransformCheck> out(n);
    parallel_for(n, ctx.threads, [&](std::size_t i) {
      out[i] = transform_equivalence(*q, ks[i / xis.size()], xis[i % xis.size()], ctx.ode);
    });
    CsvTable csv({"k_re", "k_im", "xi", "residual", "det_residual", "status"});
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx k = ks[i / xis.size()];
      const bool ok = out[i].residual <= tol;
      worst = std::max(worst, out[i].residual);
      csv.add({k.real(), k.imag(), xis[i % xis.size()], out[i].residual, out[i].det_residual,
               ok ? "pass" : "fail"});
    }
    ctx.write("krein.csv", csv);
    ctx.task("transform-equivalence", worst <= tol, {{"max_residual", worst}, {"tolerance", tol}});
  };
}

// ---------------------------------------------------------------- radial couplings

CouplingMatrixFunction read_coupling(const ConfigNode& c, const ModeLayout& L,
                                     std::optional<std::uint64_t> seed, std::uint64_t index,
                                     double gamma) {
  const std::string kind = c.string("kind", "dipole");
  const double amp = c.number("amplitude", 1.0);
  if (kind == "zero") return CouplingMatrixFunction::zero(L);
  if (kind == "dipole") return CouplingMatrixFunction::dipole(L, amp, gamma);
  if (kind == "random") {
    if (L.b > 16) c.fail("kind", "random couplings are limited to b <= 16");
    return CouplingMatrixFunction::random(L, amp, gamma,
                                          derive_seed(require_seed(c, seed, "a random coupling"), index));
  }
  c.fail("kind", "unknown coupling '" + kind + "' (zero, dipole, random)");
}

// ---------------------------------------------------------------- twist

Job parse_twist(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const double alpha = c.number("alpha", 0.66);
  const int b = c.integer("b", 32);
  if (!(alpha > 0.0 && alpha < 1.0)) c.fail("alpha", "must lie in (0, 1)");
  if (b < 2 || b > 64) c.fail("b", "must lie in [2, 64]");
  const auto L = mode_layout(alpha, b);
  TwistOptions to;
  to.gamma = c.number("gamma", 0.95);
  to.d = c.number("d", 20.0);
  to.r_max = c.number("r_max", 1e4);
  to.per_decade = c.integer("per_decade", 64);
  const auto cnode = c.child("coupling");
  const auto v = std::make_shared<CouplingMatrixFunction>(read_coupling(cnode, L, seed, 0, to.gamma));
  const cplx k = c.complex("k", cplx(0.0, 0.5));
  const double xi = c.number("xi", -2.0);
  const double min_liminf = c.number("min_liminf", 0.1);
  if (!(k.imag() > 0.0)) c.fail("k", "needs Im k > 0");
  if (to.d < 1.0) c.fail("d", "must be >= 1");
  if (to.r_max < L.thresholds[2]) c.fail("r_max", "must reach the second mode threshold");
  return [=](Context& ctx) {
    TwistOptions o = to;
    o.ode = ctx.ode;
    const auto tw = twist_experiment(L, *v, Wavenumber::upper(k), xi, o);
    CsvTable trace({"r", "norm_u"});
    for (std::size_t i = 0; i < tw.r.size(); ++i) trace.add({tw.r[i], tw.norm[i]});
    CsvTable blocks({"m", "r_m", "alpha_m", "beta_m", "zeta_m", "eta_m"});
    for (std::size_t j = 0; j < tw.m.size(); ++j) {
      const bool has = j < tw.zeta_m.size();
      blocks.add({tw.m[j], tw.r_m[j], tw.alpha_m[j], tw.beta_m[j], has ? fmt(tw.zeta_m[j]) : "",
                  has ? fmt(tw.eta_m[j]) : ""});
    }
    ctx.write("twist_trace.csv", trace);
    ctx.write("twist_blocks.csv", blocks);
    ctx.summary["liminf_estimate"] = tw.liminf_estimate;
    ctx.summary["fitted"] = {{"damping_C", tw.damping_C},
                             {"forcing_c", tw.forcing_c},
                             {"zeta_C", tw.zeta_C},
                             {"eta_C", tw.eta_C}};
    ctx.summary["non_expansive"] = tw.non_expansive;
    ctx.summary["last_threshold"] = L.thresholds.back();
    ctx.task("liminf", tw.liminf_estimate >= min_liminf,
             {{"liminf_estimate", tw.liminf_estimate}, {"threshold", min_liminf}});
  };
}

// ---------------------------------------------------------------- adjoint

Job parse_adjoint(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const std::uint64_t s = require_seed(c, seed, "the adjoint battery");
  const double alpha = c.number("alpha", 0.66);
  const int b = c.integer("b", 4);
  if (!(alpha > 0.0 && alpha < 1.0)) c.fail("alpha", "must lie in (0, 1)");
  if (b < 1 || b > 16) c.fail("b", "must lie in [1, 16]");
  const auto L = mode_layout(alpha, b);
  const double gamma = c.number("gamma", 0.95);
  const int runs = c.integer("runs", 20);
  const auto cnode = c.child("coupling");
  std::vector<CouplingMatrixFunction> vs;
  for (int r = 0; r < runs; ++r) vs.push_back(read_coupling(cnode, L, s, r, gamma));
  const auto couplings = std::make_shared<std::vector<CouplingMatrixFunction>>(std::move(vs));
  const cplx k = c.complex("k", cplx(0.0, 0.5));
  const double xi = c.number("xi", -2.0);
  CouplingWindow w;
  if (auto wn = c.optional_child("window")) {
    w.lower = wn->number("lower", 1.0);
    w.upper = wn->number("upper", 50.0);
    w.low_band = wn->boolean("low_band", true);
  } else {
    w.lower = 1.0;
    w.upper = 50.0;
  }
  const double r_end = c.number("r_end", w.upper + 10.0);
  auto ts = c.numbers("t", {1.0, 10.0, 20.0, 40.0});
  std::sort(ts.begin(), ts.end());
  const double tol = c.number("tolerance", 1e-6);
  if (runs < 1) c.fail("runs", "must be >= 1");
  if (!(k.imag() > 0.0)) c.fail("k", "needs Im k > 0");
  if (!(w.upper < r_end)) c.fail("r_end", "must exceed window.upper");
  for (double t : ts) {
    if (!(t >= 1.0 && t <= r_end)) c.fail("t", "points must lie in [1, r_end]");
  }
  return [=](Context& ctx) {
    std::vector<AdjointResult> res(runs);
    parallel_for(res.size(), ctx.threads, [&](std::size_t r) {
      std::mt19937_64 gen(derive_seed(s ^ 0x5bd1e995ULL, r));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Vector eta(L.dim());
      for (int i = 0; i < L.dim(); ++i) eta(i) = cplx(u(gen), u(gen));
      res[r] = adjoint_energy_identity(L, (*couplings)[r], w, Wavenumber::upper(k), xi, eta, ts, r_end,
                                       ctx.ode);
    });
    CsvTable csv({"run", "t", "norm_w", "dissipated", "conservation_residual", "tail_derivative_l2"});
    double worst = 0.0;
    int not_decreasing = 0;
    for (int r = 0; r < runs; ++r) {
      const auto& a = res[r];
      for (std::size_t i = 0; i < a.t.size(); ++i) {
        csv.add({r, a.t[i], a.norm_w[i], a.dissipated[i], a.conservation_residual[i],
                 a.tail_derivative_l2[i]});
        if (i > 0 && a.tail_derivative_l2[i] > a.tail_derivative_l2[i - 1]) ++not_decreasing;
      }
      worst = std::max(worst, a.max_residual);
    }
    ctx.write("adjoint.csv", csv);
    ctx.task("conservation", worst <= tol, {{"max_residual", worst}, {"tolerance", tol}});
    ctx.task("tail-decreasing", not_decreasing == 0, {{"violations", not_decreasing}});
  };
}

// ---------------------------------------------------------------- combes-thomas

Job parse_combes_thomas(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const auto names = c.strings("potentials", {"cosine", "random-steps", "sine-sum"});
  std::vector<ShippedPotential> kinds;
  for (const auto& n : names) {
    try {
      kinds.push_back(shipped_potential_from(n));
    } catch (const ParameterError& e) {
      c.fail("potentials", e.what());
    }
  }
  const double L = c.number("L", 40.0);
  const int N = c.integer("N", 4096);
  const double re_k = c.number("re_k", 0.5);
  const auto im_k = c.numbers("im_k", {0.5, 1.0, 2.0});
  const double xi = c.number("xi", 1.0);
  const double left = c.number("left", 2.0);
  std::vector<double> seps;
  if (c.has("separations")) {
    seps = read_grid(c, "separations");
  } else {
    for (int s = 2; s + left + 1.0 <= L - 2.0; ++s) seps.push_back(s);
  }
  double min_factor = 0.5, min_r2 = 0.95;
  std::pair<double, double> ratio{1.6, 2.4};
  if (auto chk = c.optional_child("checks")) {
    min_factor = chk->number("min_rate_factor", min_factor);
    min_r2 = chk->number("min_r_squared", min_r2);
    ratio = read_range(*chk, "doubling_ratio", ratio);
  }
  std::uint64_t s = 0;
  if (std::find(kinds.begin(), kinds.end(), ShippedPotential::RandomSteps) != kinds.end()) {
    s = require_seed(c, seed, "the random-steps potential");
  }
  if (N < 64) c.fail("N", "must be >= 64");
  for (double im : im_k) {
    if (!(im > 0.0)) c.fail("im_k", "values must be positive");
  }
  return [=](Context& ctx) {
    const std::size_t n = kinds.size() * im_k.size();
    std::vector<DecayFit> fits(n);
    std::vector<PencilGrid1D> grids(kinds.size());
    parallel_for(kinds.size(), ctx.threads,
                 [&](std::size_t i) { grids[i] = shipped_grid(kinds[i], L, N, s); });
    parallel_for(n, ctx.threads, [&](std::size_t i) {
      const std::size_t p = i / im_k.size();
      fits[i] = combes_thomas_fit(grids[p], xi, cplx(re_k, im_k[i % im_k.size()]), seps, left);
    });
    CsvTable data({"potential", "im_k", "separation", "log_norm", "fitted"});
    CsvTable summary({"potential", "im_k", "gamma_fit", "intercept", "r_squared", "nu_proxy", "excluded"});
    json fit_json = json::array();
    bool rates_ok = true, r2_ok = true, ratio_ok = true;
    double worst_ratio_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = fits[i];
      const std::string name = to_string(kinds[i / im_k.size()]);
      const double im = im_k[i % im_k.size()];
      for (std::size_t j = 0; j < f.separations.size(); ++j) {
        data.add({name, im, f.separations[j], f.log_norms[j], f.intercept - f.gamma_fit * f.separations[j]});
      }
      summary.add({name, im, f.gamma_fit, f.intercept, f.r_squared, f.gamma_fit / im, f.excluded.size()});
      ctx.excluded += f.excluded.size();
      rates_ok = rates_ok && f.gamma_fit >= min_factor * im;
      r2_ok = r2_ok && f.r_squared >= min_r2;
      json entry = {{"potential", name}, {"im_k", im}, {"gamma_fit", f.gamma_fit},
                    {"r_squared", f.r_squared}, {"nu_proxy", f.gamma_fit / im}};
      // doubling ratio against the entry with half the imaginary part
      for (std::size_t j = 0; j < im_k.size(); ++j) {
        if (std::abs(im_k[j] * 2.0 - im) <= 1e-12 * im) {
          const double r = f.gamma_fit / fits[(i / im_k.size()) * im_k.size() + j].gamma_fit;
          entry["doubling_ratio"] = r;
          ratio_ok = ratio_ok && r >= ratio.first && r <= ratio.second;
          worst_ratio_dev = std::max(worst_ratio_dev, std::abs(r - 2.0));
        }
      }
      fit_json.push_back(entry);
    }
    ctx.write("combes_thomas.csv", data);
    ctx.write("combes_thomas_fit.csv", summary);
    ctx.summary["fits"] = fit_json;
    ctx.task("decay-rate", rates_ok, {{"min_rate_factor", min_factor}});
    ctx.task("exponential-fit", r2_ok, {{"min_r_squared", min_r2}});
    ctx.task("rate-doubling", ratio_ok,
             {{"range", {ratio.first, ratio.second}}, {"max_deviation_from_2", worst_ratio_dev}});
  };
}

// ---------------------------------------------------------------- pencil-bound

Job parse_pencil_bound(const ConfigNode& c, std::optional<std::uint64_t> seed) {
  const std::uint64_t s = require_seed(c, seed, "the resolvent battery");
  const int solves = c.integer("solves", 100);
  const double L = c.number("L", 20.0);
  const int N = c.integer("N", 1024);
  const auto names = c.strings("potentials", {"cosine", "random-steps", "sine-sum"});
  std::vector<ShippedPotential> kinds;
  for (const auto& n : names) {
    try {
      kinds.push_back(shipped_potential_from(n));
    } catch (const ParameterError& e) {
      c.fail("potentials", e.what());
    }
  }
  const auto re = read_range(c, "re_k_range", {-3.0, 3.0});
  const auto im = read_range(c, "im_k_range", {0.05, 3.0});
  const auto xir = read_range(c, "xi_range", {-2.0, 2.0});
  const double rtol = c.number("residual_tolerance", 1e-10);
  if (solves < 1) c.fail("solves", "must be >= 1");
  if (N < 64) c.fail("N", "must be >= 64");
  if (kinds.empty()) c.fail("potentials", "need at least one potential");
  if (!(im.first > 0.0)) c.fail("im_k_range", "Im k must be positive");
  return [=](Context& ctx) {
    struct Row {
      std::string potential;
      cplx k;
      double xi = 0.0;
      PencilSolve sol;
      RootPair roots;
    };
    std::vector<Row> rows(solves);
    parallel_for(rows.size(), ctx.threads, [&](std::size_t i) {
      Draw d(derive_seed(s, i));
      const auto kind = kinds[i % kinds.size()];
      const auto g = shipped_grid(kind, L, N, d.rng());
      Row& r = rows[i];
      r.potential = to_string(kind);
      r.k = cplx(d.uniform(re), d.uniform(im));
      r.xi = d.uniform(xir);
      Vector f(g.unknowns());
      for (int j = 0; j < g.unknowns(); ++j) f(j) = cplx(d.uniform({-1, 1}), d.uniform({-1, 1}));
      r.sol = solve_pencil(g, r.xi, r.k, f);
      r.roots = hyperbolicity_roots(g, r.xi, f);
    });
    CsvTable csv({"solve", "potential", "k_re", "k_im", "xi", "norm_f", "norm_psi", "bound", "slack",
                  "residual", "root_k1", "root_k2", "status"});
    int bound_fail = 0, residual_fail = 0, roots_fail = 0;
    double min_slack_ratio = std::numeric_limits<double>::infinity(), worst_res = 0.0;
    for (int i = 0; i < solves; ++i) {
      const auto& r = rows[i];
      const bool ok = r.sol.bound_ok && r.sol.residual <= rtol && r.roots.k1 > r.roots.k2;
      bound_fail += r.sol.bound_ok ? 0 : 1;
      residual_fail += r.sol.residual <= rtol ? 0 : 1;
      roots_fail += r.roots.k1 > r.roots.k2 ? 0 : 1;
      min_slack_ratio = std::min(min_slack_ratio, r.sol.slack / r.sol.bound);
      worst_res = std::max(worst_res, r.sol.residual);
      csv.add({i, r.potential, r.k.real(), r.k.imag(), r.xi, r.sol.norm_f, r.sol.norm_psi, r.sol.bound,
               r.sol.slack, r.sol.residual, r.roots.k1, r.roots.k2, ok ? "pass" : "fail"});
    }
    ctx.write("pencil_bound.csv", csv);
    ctx.task("resolvent-bound", bound_fail == 0,
             {{"violations", bound_fail}, {"min_relative_slack", min_slack_ratio}});
    ctx.task("solve-residual", residual_fail == 0, {{"max_residual", worst_res}, {"tolerance", rtol}});
    ctx.task("hyperbolicity", roots_fail == 0, {{"violations", roots_fail}});
  };
}

}  // namespace

const std::map<std::string, Parser>& parsers() {
  static const std::map<std::string, Parser> table{
      {"density", parse_density},         {"entropy", parse_entropy},
      {"identities", parse_identities},   {"krein-check", parse_krein},
      {"twist", parse_twist},             {"adjoint", parse_adjoint},
      {"combes-thomas", parse_combes_thomas}, {"pencil-bound", parse_pencil_bound},
  };
  return table;
}

}  // namespace hp::cli
