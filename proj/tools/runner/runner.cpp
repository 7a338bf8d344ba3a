#include "hpencil/cli/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "hpencil/errors.hpp"
#include "hpencil/version.hpp"

namespace hp::cli {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : parsers()) k.push_back(name);
    return k;
  }();
  return kinds;
}

namespace {

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string gnuplot_header(const std::string& title, const std::string& png) {
  return "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n"
         "set output '" + png + "'\nset title '" + title + "'\nset grid\n";
}

void require_csv(const fs::path& dir, const std::string& name) {
  if (!fs::exists(dir / name)) {
    throw std::runtime_error("missing CSV file " + (dir / name).string());
  }
}

void put(const fs::path& dir, const std::string& name, const std::string& text,
         std::vector<std::string>& written) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  f << text;
  written.push_back(name);
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& kind, const fs::path& dir) {
  std::vector<std::string> out;
  if (kind == "density") {
    require_csv(dir, "density.csv");
    put(dir, "density.gp",
        gnuplot_header("spectral density", "density.png") +
            "set xlabel 'k'\nset ylabel 'density'\nplot 'density.csv' using 1:4 with lines lw 2\n",
        out);
  } else if (kind == "entropy") {
    require_csv(dir, "entropy_grid.csv");
    require_csv(dir, "entropy_vs_R.csv");
    const auto byR = read_csv(dir / "entropy_vs_R.csv");
    const std::string R = byR.rows.empty() ? "0" : byR.rows.back()[0];
    put(dir, "entropy_heatmap.gp",
        gnuplot_header("ln- density, R = " + R, "entropy_heatmap.png") +
            "set view map\nset xlabel 'k'\nset ylabel 't'\n"
            "splot 'entropy_grid.csv' using 2:3:($1 == " + R + " ? $6 : NaN) with points pt 5 ps 0.6 palette notitle\n",
        out);
    put(dir, "entropy_vs_R.gp",
        gnuplot_header("entropy against truncation radius", "entropy_vs_R.png") +
            "set xlabel 'R'\nset ylabel 'entropy'\nplot 'entropy_vs_R.csv' using 1:2 with linespoints lw 2\n",
        out);
  } else if (kind == "identities") {
    require_csv(dir, "identities.csv");
    put(dir, "identities.gp",
        gnuplot_header("identity residuals", "identities.png") +
            "set logscale y\nset xlabel 'instance'\nset ylabel 'residual'\n"
            "plot for [id in 'flux weyl krein pencil-jost'] 'identities.csv' "
            "using 1:(strcol(5) eq id ? $9 : NaN) with points title id\n",
        out);
  } else if (kind == "krein-check") {
    require_csv(dir, "krein.csv");
    put(dir, "krein.gp",
        gnuplot_header("Krein transform residual", "krein.png") +
            "set logscale y\nset ylabel 'residual'\nplot 'krein.csv' using 0:4 with points pt 7\n",
        out);
  } else if (kind == "twist") {
    require_csv(dir, "twist_trace.csv");
    require_csv(dir, "twist_blocks.csv");
    put(dir, "twist.gp",
        gnuplot_header("norm of the evolved lowest mode", "twist.png") +
            "set logscale x\nset xlabel 'r'\nset ylabel '|u(r)|'\nset yrange [0:1.05]\n"
            "plot 'twist_trace.csv' using 1:2 with lines lw 2, \\\n"
            "     'twist_blocks.csv' using 2:(1.02) with impulses lc rgb 'gray' title 'r_m'\n",
        out);
  } else if (kind == "adjoint") {
    require_csv(dir, "adjoint.csv");
    put(dir, "adjoint.gp",
        gnuplot_header("adjoint evolution", "adjoint.png") +
            "set logscale y\nset xlabel 't'\n"
            "plot 'adjoint.csv' using 2:6 with points title 'tail derivative', \\\n"
            "     'adjoint.csv' using 2:(abs($5) + 1e-18) with points title 'conservation residual'\n",
        out);
  } else if (kind == "combes-thomas") {
    require_csv(dir, "combes_thomas.csv");
    require_csv(dir, "combes_thomas_fit.csv");
    const auto fits = read_csv(dir / "combes_thomas_fit.csv");
    std::string plot = "set xlabel 'separation'\nset ylabel 'ln |chi2 P^{-1} chi1|'\nplot \\\n";
    for (std::size_t i = 0; i < fits.rows.size(); ++i) {
      const auto& r = fits.rows[i];
      const std::string sel = "(strcol(1) eq '" + r[0] + "' && $2 == " + r[1] + " ? ";
      plot += "  'combes_thomas.csv' using 3:" + sel + "$4 : NaN) with points pt 7 title '" + r[0] +
              " Im k=" + r[1] + "', \\\n";
      plot += "  'combes_thomas.csv' using 3:" + sel + "$5 : NaN) with lines notitle" +
              (i + 1 < fits.rows.size() ? ", \\\n" : "\n");
    }
    put(dir, "combes_thomas.gp", gnuplot_header("Green kernel decay", "combes_thomas.png") + plot, out);
  } else if (kind == "pencil-bound") {
    require_csv(dir, "pencil_bound.csv");
    put(dir, "pencil_bound.gp",
        gnuplot_header("resolvent bound", "pencil_bound.png") +
            "set logscale xy\nset xlabel 'bound'\nset ylabel '|psi|'\n"
            "plot 'pencil_bound.csv' using 8:7 with points pt 7, x with lines title 'equality'\n",
        out);
  } else {
    throw std::runtime_error("no plots for experiment '" + kind + "'");
  }
  return out;
}

RunResult run(const std::string& kind, const std::string& config_text, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  Context ctx;
  ctx.out = opt.out;
  ctx.threads = opt.threads;
  json manifest = {{"tool", "hpencil"}, {"version", HPENCIL_VERSION}, {"experiment", kind},
                   {"threads", opt.threads}};
  std::optional<std::uint64_t> seed = opt.seed;

  const auto finish = [&](int code, const std::string& status, const std::string& message) {
    result.exit_code = code;
    result.status = status;
    result.message = message;
    manifest["status"] = status;
    manifest["message"] = message;
    manifest["seed"] = seed ? json(*seed) : json(nullptr);
    manifest["tasks"] = ctx.tasks;
    manifest["summary"] = ctx.summary;
    manifest["excluded_nodes"] = ctx.excluded;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
      fs::create_directories(ctx.out);
      ctx.files.push_back("manifest.json");
      manifest["files"] = ctx.files;
      std::ofstream f(ctx.out / "manifest.json", std::ios::binary);
      f << manifest.dump(2) << '\n';
      result.manifest = ctx.out / "manifest.json";
    } catch (const std::exception&) {
      // the exit code still reports the outcome
    }
    result.files = ctx.files;
    return result;
  };

  if (opt.threads == 0) {
    return finish(kConfigError, "error", "--threads: must be >= 1");
  }
  const auto it = parsers().find(kind);
  if (it == parsers().end()) {
    return finish(kConfigError, "error", "unknown experiment '" + kind + "'");
  }

  Job job;
  try {
    const json cfg = json::parse(config_text);
    const auto root = ConfigNode::root(cfg);
    if (root.has("experiment") && root.string("experiment") != kind) {
      throw ConfigError("/experiment", "config is for '" + root.string("experiment") +
                                           "', not '" + kind + "'");
    }
    if (root.has("seed")) {
      const auto s = root.u64("seed");
      if (!seed) seed = s;
    }
    ctx.ode.tol = root.number("ode_tol", ctx.ode.tol);
    if (!(ctx.ode.tol > 0.0)) root.fail("ode_tol", "must be positive");
    const auto body = root.has(kind) ? root.child(kind) : root;
    job = it->second(body, seed);
    root.reject_unknown();
    manifest["config_hash"] =
        hex(fnv1a(cfg.dump() + "|seed=" + (seed ? std::to_string(*seed) : std::string("none"))));
  } catch (const json::exception& e) {
    return finish(kConfigError, "error", std::string("config is not valid JSON: ") + e.what());
  } catch (const ConfigError& e) {
    return finish(kConfigError, "error", e.what());
  } catch (const ParameterError& e) {
    return finish(kConfigError, "error", e.what());
  } catch (const InputError& e) {
    return finish(kConfigError, "error", e.what());
  }

  try {
    fs::create_directories(ctx.out);
    job(ctx);
    for (const auto& p : emit_plots(kind, ctx.out)) ctx.files.push_back(p);
    ctx.write("summary.json", ctx.summary.dump(2) + "\n");
  } catch (const InternalConsistencyError& e) {
    return finish(kInternalError, "error", kind + ": " + e.what());
  } catch (const ParameterError& e) {
    return finish(kConfigError, "error", kind + ": " + e.what());
  } catch (const InputError& e) {
    return finish(kConfigError, "error", kind + ": " + e.what());
  } catch (const Error& e) {
    return finish(kNumericFailure, "error", kind + ": " + e.what());
  } catch (const std::exception& e) {
    return finish(kInternalError, "error", kind + ": " + e.what());
  }
  if (ctx.failed) {
    return finish(kNumericFailure, "fail", "one or more checks failed");
  }
  return finish(kPass, "pass", "");
}

RunResult run_file(const std::string& kind, const fs::path& config, const RunOptions& opt) {
  std::ifstream in(config, std::ios::binary);
  if (!in) {
    RunResult r;
    r.exit_code = kConfigError;
    r.status = "error";
    r.message = "cannot read config " + config.string();
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return run(kind, ss.str(), opt);
}

int main_entry(int argc, char** argv) {
  CLI::App app{"hpencil: scattering, pencil and spectral-entropy experiments"};
  app.require_subcommand(1);
  std::string config;
  std::string out = "hpencil-out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<CLI::App*> subs;
  for (const auto& kind : experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--seed", seed, "seed, overrides the config");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->capture_default_str();
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }
  for (auto* sub : subs) {
    if (!sub->parsed()) continue;
    RunOptions opt;
    opt.out = out;
    opt.threads = threads;
    if (sub->count("--seed")) opt.seed = seed;
    const auto r = run_file(sub->get_name(), config, opt);
    std::cout << sub->get_name() << ": " << r.status;
    if (!r.message.empty()) std::cout << " (" << r.message << ")";
    std::cout << "\n";
    if (!r.manifest.empty()) std::cout << "manifest: " << r.manifest.string() << "\n";
    return r.exit_code;
  }
  return kConfigError;
}

}  // namespace hp::cli
