#include "qndsim/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qndsim/errors.hpp"

namespace qnd {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double x = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kConfig, "csv: not a number: '" + s + "'");
  }
  return x;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_q = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_q) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_q = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_q = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

size_t CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::kConfig, "csv: no column '" + name + "'");
}

double CsvTable::number(size_t row, size_t col) const {
  return parse_double(rows.at(row).at(col));
}

void write_csv(const std::string& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kConfig, "cannot write " + path);
  f << "# manifest " << manifest_hash << '\n';
  for (size_t i = 0; i < header.size(); ++i) {
    f << (i ? "," : "") << quote(header[i]);
  }
  f << '\n';
  for (const auto& r : rows) {
    if (r.size() != header.size()) {
      throw Error(ErrorKind::kNumeric, "csv: row width differs from header");
    }
    for (size_t i = 0; i < r.size(); ++i) {
      if (i) f << ',';
      if (auto d = std::get_if<double>(&r[i])) {
        f << format_double(*d);
      } else {
        f << quote(std::get<std::string>(r[i]));
      }
    }
    f << '\n';
  }
  if (!f) throw Error(ErrorKind::kConfig, "write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kConfig, "cannot read " + path);
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && !line.empty() && line[0] == '#') {
      t.comment = line.substr(1);
      if (!t.comment.empty() && t.comment[0] == ' ') t.comment.erase(0, 1);
      continue;
    }
    if (!have_header) {
      t.header = split_line(line);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    t.rows.push_back(split_line(line));
  }
  if (!have_header) throw Error(ErrorKind::kConfig, "csv: no header in " + path);
  return t;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Manifest::hash() const {
  nlohmann::json j = {{"subcommand", subcommand},
                      {"config", config},
                      {"seed", seed},
                      {"version", kVersion}};
  return fnv1a_hex(j.dump());
}

nlohmann::json Manifest::to_json() const {
  return {{"tool", "qndsim"},
          {"version", kVersion},
          {"subcommand", subcommand},
          {"seed", seed},
          {"threads", threads},
          {"config", config},
          {"hash", hash()},
          {"wall_time_s", wall_time_s},
          {"artifacts", artifacts}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kConfig, "cannot write " + path);
  f << j.dump(2) << '\n';
  if (!f) throw Error(ErrorKind::kConfig, "write failed: " + path);
}

nlohmann::json json_number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace qnd
