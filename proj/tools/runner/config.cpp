#include "config.hpp"

#include <cmath>
#include <fstream>

namespace hp::cli {

namespace ps = hp::potential_spec;

ConfigNode::ConfigNode(const json& j, std::string path, std::shared_ptr<std::set<std::string>> seen)
    : j_(&j), path_(std::move(path)), seen_(std::move(seen)) {
  if (!j.is_object()) {
    throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }
}

ConfigNode ConfigNode::root(const json& j) {
  return ConfigNode(j, "", std::make_shared<std::set<std::string>>());
}

std::string ConfigNode::key_path(const std::string& key) const { return path_ + "/" + key; }

bool ConfigNode::has(const std::string& key) const { return j_->contains(key); }

bool ConfigNode::is_object(const std::string& key) const {
  return has(key) && (*j_)[key].is_object();
}

void ConfigNode::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(key_path(key), what);
}

const json& ConfigNode::get(const std::string& key) const {
  const auto it = j_->find(key);
  if (it == j_->end()) {
    fail(key, "required key is missing");
  }
  seen_->insert(key_path(key));
  return *it;
}

double ConfigNode::number(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_number()) {
    fail(key, "expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    fail(key, "expected a finite number");
  }
  return x;
}

double ConfigNode::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int ConfigNode::integer(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_number_integer()) {
    fail(key, "expected an integer");
  }
  return v.get<int>();
}

int ConfigNode::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t ConfigNode::u64(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_number_unsigned()) {
    fail(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string ConfigNode::string(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_string()) {
    fail(key, "expected a string");
  }
  return v.get<std::string>();
}

std::string ConfigNode::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool ConfigNode::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) {
    return fallback;
  }
  const auto& v = get(key);
  if (!v.is_boolean()) {
    fail(key, "expected true or false");
  }
  return v.get<bool>();
}

std::vector<double> ConfigNode::numbers(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_array()) {
    fail(key, "expected an array of numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      fail(key, "expected an array of numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<double> ConfigNode::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> ConfigNode::strings(const std::string& key,
                                             std::vector<std::string> fallback) const {
  if (!has(key)) {
    return fallback;
  }
  const auto& v = get(key);
  if (!v.is_array()) {
    fail(key, "expected an array of strings");
  }
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) {
      fail(key, "expected an array of strings");
    }
    out.push_back(x.get<std::string>());
  }
  return out;
}

namespace {
std::optional<cplx> as_complex(const json& v) {
  if (v.is_number()) {
    return cplx(v.get<double>(), 0.0);
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return cplx(v[0].get<double>(), v[1].get<double>());
  }
  return std::nullopt;
}
}  // namespace

cplx ConfigNode::complex(const std::string& key) const {
  const auto c = as_complex(get(key));
  if (!c) {
    fail(key, "expected a number or [re, im]");
  }
  return *c;
}

cplx ConfigNode::complex(const std::string& key, cplx fallback) const {
  return has(key) ? complex(key) : fallback;
}

std::vector<cplx> ConfigNode::complexes(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_array()) {
    fail(key, "expected an array of [re, im] pairs");
  }
  std::vector<cplx> out;
  for (const auto& x : v) {
    const auto c = as_complex(x);
    if (!c) {
      fail(key, "expected an array of [re, im] pairs");
    }
    out.push_back(*c);
  }
  return out;
}

ConfigNode ConfigNode::child(const std::string& key) const {
  const auto& v = get(key);
  if (!v.is_object()) {
    fail(key, "expected an object");
  }
  return ConfigNode(v, key_path(key), seen_);
}

std::optional<ConfigNode> ConfigNode::optional_child(const std::string& key) const {
  if (!has(key)) {
    return std::nullopt;
  }
  return child(key);
}

void ConfigNode::reject_unknown() const {
  for (auto it = j_->begin(); it != j_->end(); ++it) {
    const std::string p = key_path(it.key());
    if (!seen_->count(p)) {
      throw ConfigError(p, "unknown key");
    }
    if (it.value().is_object()) {
      ConfigNode(it.value(), p, seen_).reject_unknown();
    }
  }
}

std::vector<double> read_grid(const ConfigNode& node, const std::string& key) {
  if (!node.has(key)) {
    node.fail(key, "required key is missing");
  }
  std::vector<double> out;
  if (node.is_object(key)) {
    const auto g = node.child(key);
    const double a = g.number("min");
    const double b = g.number("max");
    const int n = g.integer("count");
    if (n < 1 || (n == 1 && a != b) || b < a) {
      g.fail("count", "needs count >= 1 and min <= max");
    }
    for (int i = 0; i < n; ++i) {
      out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    }
    return out;
  }
  out = node.numbers(key);
  if (out.empty()) {
    node.fail(key, "empty list");
  }
  return out;
}

PotentialSpec read_potential(const ConfigNode& node, std::optional<std::uint64_t> seed) {
  PotentialSpec spec;
  const std::string kind = node.string("kind");
  spec.dim = node.integer("dim", 1);
  spec.support_radius = node.number("support_radius", 1.0);
  spec.step = node.number("step", 0.0);
  spec.extent = node.number("extent", 0.0);
  if (spec.dim < 1) {
    node.fail("dim", "must be >= 1");
  }
  if (kind == "zero") {
    spec.kind = ps::Zero{};
  } else if (kind == "constant") {
    const double c = node.number("value");
    const int n = spec.dim;
    spec.kind = ps::ClosedForm{[c, n](double) { return Matrix(c * Matrix::Identity(n, n)); }};
  } else if (kind == "power") {
    const double a = node.number("amplitude", 1.0);
    const double p = node.number("decay");
    const int n = spec.dim;
    spec.kind = ps::ClosedForm{
        [a, p, n](double r) { return Matrix(a * std::pow(1.0 + r, -p) * Matrix::Identity(n, n)); }};
  } else if (kind == "random") {
    if (!seed) {
      node.fail("kind", "a random potential needs a seed (top-level \"seed\" or --seed)");
    }
    ps::RandomHermitian r;
    r.amplitude = node.number("amplitude", 1.0);
    r.decay_exponent = node.number("decay", 0.0);
    r.cell = node.number("cell", 0.0);
    r.seed = *seed;
    spec.kind = r;
  } else if (kind == "tabulated") {
    const std::string path = node.string("path");
    std::ifstream in(path);
    if (!in) {
      node.fail("path", "cannot open '" + path + "'");
    }
    std::optional<double> R;
    if (node.has("support_radius")) {
      R = spec.support_radius;
    }
    return read_tabulated_csv(in, R);
  } else {
    node.fail("kind", "unknown potential kind '" + kind +
                          "' (zero, constant, power, random, tabulated)");
  }
  return spec;
}

SourceVector read_source(const ConfigNode& node, double step, int dim) {
  const std::string profile = node.string("profile", "indicator");
  const double delta = node.number("delta", 1.0);
  if (!(delta > 0.0)) {
    node.fail("delta", "must be positive");
  }
  if (profile == "indicator") {
    return SourceVector::indicator(delta, step, dim);
  }
  if (profile == "sine") {
    const double w = node.number("frequency");
    return SourceVector::sample([w](double r) { return std::sin(w * r); }, delta, step, dim);
  }
  if (profile == "polynomial") {
    const auto c = node.numbers("coefficients");
    return SourceVector::sample(
        [c](double r) {
          double acc = 0.0;
          for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * r + *it;
          return acc;
        },
        delta, step, dim);
  }
  node.fail("profile", "unknown source profile '" + profile + "' (indicator, sine, polynomial)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace hp::cli
