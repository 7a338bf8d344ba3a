#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "config.hpp"
#include "output.hpp"

namespace hp::cli {

using Job = std::function<void(Context&)>;
/// Reads and validates an experiment section; the returned job does the work.
using Parser = std::function<Job(const ConfigNode&, std::optional<std::uint64_t> seed)>;

const std::map<std::string, Parser>& parsers();

}  // namespace hp::cli
