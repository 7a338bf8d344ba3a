#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hpencil/cli/runner.hpp"
#include "hpencil/linalg.hpp"
#include "hpencil/potential.hpp"
#include "hpencil/scattering1d.hpp"

namespace hp::cli {

using json = nlohmann::json;

/// Typed read access to a JSON object. Every key read is recorded so unknown
/// keys can be reported once parsing is done.
class ConfigNode {
public:
  ConfigNode(const json& j, std::string path, std::shared_ptr<std::set<std::string>> seen);
  static ConfigNode root(const json& j);

  const std::string& path() const noexcept { return path_; }
  bool has(const std::string& key) const;
  bool is_object(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  std::uint64_t u64(const std::string& key) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) const;
  /// [re, im] or a plain number.
  cplx complex(const std::string& key) const;
  cplx complex(const std::string& key, cplx fallback) const;
  std::vector<cplx> complexes(const std::string& key) const;

  ConfigNode child(const std::string& key) const;
  std::optional<ConfigNode> optional_child(const std::string& key) const;

  /// Throws ConfigError for the first key under this node that was never read.
  void reject_unknown() const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

private:
  const json& get(const std::string& key) const;
  std::string key_path(const std::string& key) const;

  const json* j_;
  std::string path_;
  std::shared_ptr<std::set<std::string>> seen_;
};

/// Numeric range helper {"min": a, "max": b, "count": n} or an explicit list.
std::vector<double> read_grid(const ConfigNode& node, const std::string& key);

/// Potential section. Random kinds require a seed.
PotentialSpec read_potential(const ConfigNode& node, std::optional<std::uint64_t> seed);
/// Source section on the given step.
SourceVector read_source(const ConfigNode& node, double step, int dim);

/// Deterministic per-instance seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace hp::cli
