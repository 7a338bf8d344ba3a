#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "hpencil/ode.hpp"

namespace hp::cli {

/// Shortest round-trip-safe text for a double (%.17g).
std::string fmt(double x);

/// CSV assembled in memory; cells are numbers (%.17g), integers or plain strings.
class CsvTable {
public:
  struct Cell {
    Cell(double x) : text(fmt(x)) {}
    Cell(int x) : text(std::to_string(x)) {}
    Cell(long x) : text(std::to_string(x)) {}
    Cell(unsigned long x) : text(std::to_string(x)) {}
    Cell(unsigned long long x) : text(std::to_string(x)) {}
    Cell(bool x) : text(x ? "1" : "0") {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
    std::string text;
  };

  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<Cell> cells);
  std::string str() const;
  std::size_t rows() const noexcept { return rows_; }

private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string body_;
};

/// Reads a CSV written by CsvTable: header plus string cells.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};
CsvData read_csv(const std::filesystem::path& path);

/// Shared state of one experiment run.
struct Context {
  std::filesystem::path out;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  OdeOptions ode;
  std::vector<std::string> files;
  json summary = json::object();
  json tasks = json::array();
  std::size_t excluded = 0;
  bool failed = false;

  void write(const std::string& name, const std::string& content);
  void write(const std::string& name, const CsvTable& table) { write(name, table.str()); }
  /// Records a named check; a failed check makes the run exit with status 1.
  void task(const std::string& name, bool pass, json detail = json::object());
};

}  // namespace hp::cli
