#include "output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hp::cli {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    body_ += (i ? "," : "") + header[i];
  }
  body_ += '\n';
}

void CsvTable::add(std::vector<Cell> cells) {
  if (cells.size() != columns_) {
    throw std::logic_error("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    body_ += (i ? "," : "") + cells[i].text;
  }
  body_ += '\n';
  ++rows_;
}

std::string CsvTable::str() const { return body_; }

std::size_t CsvData::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::runtime_error("CSV has no column '" + name + "'");
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("missing CSV file " + path.string());
  }
  const auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  CsvData d;
  std::string line;
  if (std::getline(in, line)) d.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) d.rows.push_back(split(line));
  }
  return d;
}

void Context::write(const std::string& name, const std::string& content) {
  std::ofstream f(out / name, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot write " + (out / name).string());
  }
  f << content;
  files.push_back(name);
}

void Context::task(const std::string& name, bool pass, json detail) {
  detail["name"] = name;
  detail["status"] = pass ? "pass" : "fail";
  tasks.push_back(std::move(detail));
  if (!pass) failed = true;
}

}  // namespace hp::cli
