// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace raremut {

// Shortest round-trip-safe decimal form: 17 significant digits, '.' decimal
// separator regardless of locale ("%g" with the C locale semantics of
// snprintf applied to a NaN-free double).
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Minimal CSV emitter: header row fixed at construction, numeric cells
// written with format_g17 so files are deterministic across runs.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, std::vector<std::string> columns)
      : out_(file), columns_(columns.size()) {
    if (!out_)
      throw std::runtime_error("CsvWriter: cannot open " + file.string());
    bool first = true;
    for (const auto& c : columns) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter(const std::filesystem::path& file,
            std::initializer_list<std::string> columns)
      : CsvWriter(file, std::vector<std::string>(columns)) {}

  void row(std::span<const double> values) {
    check(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_g17(values[i]);
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    row(std::span<const double>(values.begin(), values.size()));
  }

  // For rows mixing integers (already formatted) and numbers.
  void row_text(std::span<const std::string> cells) {
    check(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("CsvWriter: write failed");
  }

 private:
  void check(std::size_t n) const {
    if (n != columns_)
      throw std::invalid_argument("CsvWriter: row width does not match header");
  }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace raremut
