#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace qnd {

inline constexpr const char* kVersion = "0.1.0";

// Shortest decimal that parses back to x; "inf", "-inf", "nan" otherwise.
std::string format_double(double x);
double parse_double(const std::string& s);

using CsvCell = std::variant<double, std::string>;

struct CsvTable {
  std::string comment;  // text of the leading '#' line, without the '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  size_t column(const std::string& name) const;  // throws kConfig if absent
  double number(size_t row, size_t col) const;
  double number(size_t row, const std::string& name) const {
    return number(row, column(name));
  }
};

// Writes '# manifest <hash>', the header, then the rows.
void write_csv(const std::string& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows);

CsvTable read_csv(const std::string& path);

// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

// Run manifest. The hash covers the subcommand, the resolved config and the
// seed, not the wall time or thread count, so equal inputs give equal hashes.
struct Manifest {
  std::string subcommand;
  nlohmann::json config;
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_time_s = 0;
  std::vector<std::string> artifacts;

  std::string hash() const;
  nlohmann::json to_json() const;
};

void write_json(const std::string& path, const nlohmann::json& j);

// JSON with +-inf written as the strings "inf"/"-inf" and NaN as null.
nlohmann::json json_number(double x);

}  // namespace qnd
