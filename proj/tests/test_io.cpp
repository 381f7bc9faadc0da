#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "qndsim/config.hpp"
#include "qndsim/constants.hpp"
#include "qndsim/errors.hpp"
#include "qndsim/io.hpp"

using namespace qnd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "qndsim_test_io";
  fs::create_directories(dir);
  return dir / name;
}

nlohmann::json base_config() {
  return nlohmann::json::parse(R"({
    "circuit": {"topology": "single_arm",
                "rates": {"omega_s_hz": 5e9, "gamma_t_hz": 1e6, "Z_out": 50}},
    "membrane": {"omega_m_hz": 1e8, "gamma_b_hz": 100, "x0": 1e-12},
    "couplings": {"g1_hz": 10, "g2_hz": 0.01},
    "drive": {"alpha_sq": 1e12, "T": 1e-4}
  })");
}

ErrorKind kind_of(const nlohmann::json& j) {
  try {
    load_config(j);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no throw");
  return ErrorKind::kNumeric;
}

}  // namespace

TEST_CASE("number formatting round trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    double x = std::pow(10.0, u(rng) / 1.0) * (i % 2 ? -1 : 1);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(kInf) == "inf");
  CHECK(format_double(-kInf) == "-inf");
  CHECK(format_double(kNaN) == "nan");
  CHECK(std::isinf(parse_double("inf")));
  CHECK(std::isnan(parse_double("nan")));
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("abc"), Error);
}

TEST_CASE("CSV round trip") {
  auto path = scratch("round.csv").string();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<CsvCell>> rows;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({u(rng) * 1e-9, std::exp(40 * u(rng)), -u(rng),
                    std::string(i % 3 ? "ok" : "bad, \"quoted\" value")});
  }
  rows.push_back({kInf, kNaN, -kInf, std::string("")});
  write_csv(path, "0123456789abcdef", {"a", "b", "c", "note"}, rows);
  auto t = read_csv(path);
  CHECK(t.comment == "manifest 0123456789abcdef");
  REQUIRE(t.header.size() == 4);
  REQUIRE(t.rows.size() == rows.size());
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    for (size_t c = 0; c < 3; ++c) {
      double x = std::get<double>(rows[i][c]);
      CHECK(std::abs(t.number(i, c) - x) <= 1e-12 * std::abs(x));
    }
    CHECK(t.rows[i][3] == std::get<std::string>(rows[i][3]));
  }
  size_t last = rows.size() - 1;
  CHECK(std::isinf(t.number(last, "a")));
  CHECK(std::isnan(t.number(last, "b")));
  CHECK(t.number(last, "c") < 0);
  CHECK_THROWS_AS(t.column("missing"), Error);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("manifest hash ignores threads and wall time") {
  Manifest a;
  a.subcommand = "measure";
  a.config = base_config();
  a.seed = 7;
  a.threads = 1;
  a.wall_time_s = 0.5;
  Manifest b = a;
  b.threads = 4;
  b.wall_time_s = 9;
  b.artifacts = {"x.csv"};
  CHECK(a.hash() == b.hash());
  b.seed = 8;
  CHECK(a.hash() != b.hash());
  auto j = a.to_json();
  CHECK(j.at("version") == kVersion);
  CHECK(j.at("hash") == a.hash());
}

TEST_CASE("json numbers") {
  CHECK(json_number(1.5) == 1.5);
  CHECK(json_number(kInf) == "inf");
  CHECK(json_number(-kInf) == "-inf");
  CHECK(json_number(kNaN).is_null());
}

TEST_CASE("config converts Hz to rad/s") {
  auto cfg = load_config(base_config());
  auto s = cfg.setup();
  CHECK(s.rates.omega_s == doctest::Approx(kTwoPi * 5e9));
  CHECK(s.gamma_b() == doctest::Approx(kTwoPi * 100));
  CHECK(s.couplings.g1 == doctest::Approx(kTwoPi * 10));
  CHECK(*cfg.drive.alpha_sq == 1e12);
  CHECK(cfg.seed == 1);
}

TEST_CASE("config errors name the key path") {
  auto j = base_config();
  j["membrane"]["omega_m"] = 1;
  try {
    load_config(j);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    CHECK(std::string(e.what()).find("membrane.omega_m") != std::string::npos);
  }
  j = base_config();
  j["membrane"]["omega_m_hz"] = "fast";
  CHECK(kind_of(j) == ErrorKind::kConfig);
  j = base_config();
  j["circuit"]["topology"] = "triple_arm";
  CHECK(kind_of(j) == ErrorKind::kConfig);
  j = base_config();
  j.erase("membrane");
  CHECK(kind_of(j) == ErrorKind::kConfig);
  j = base_config();
  j["drive"]["flux"] = 2e16;  // inconsistent with alpha_sq / T
  CHECK(kind_of(j) == ErrorKind::kConfig);
}

TEST_CASE("shipped configs load") {
  for (const auto& e :
       fs::directory_iterator(fs::path(QNDSIM_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config_file(e.path().string()));
  }
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), Error);
  auto bad = scratch("bad.json");
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(load_config_file(bad.string()), Error);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::kConfig) == 2);
  CHECK(exit_code(ErrorKind::kNumeric) == 3);
  CHECK(exit_code(ErrorKind::kConvergence) == 4);
}
