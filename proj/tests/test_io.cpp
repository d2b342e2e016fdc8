#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "epsim/io.hpp"
#include "epsim/rng.hpp"

using namespace epsim;
namespace fs = std::filesystem;

TEST_CASE("double formatting round trips") {
  rng::Rng rng(55);
  for (int i = 0; i < 200; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, int(rng.uniform() * 40) - 20);
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK_THROWS_AS(io::parse_double("12x"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_double(""), std::invalid_argument);
}

TEST_CASE("complex text format") {
  CHECK(io::format_complex({0.5, 0.25}) == "0.5+0.25j");
  CHECK(io::format_complex({0.5, -0.25}) == "0.5-0.25j");
  CHECK(io::format_complex({-1.0, 0.0}) == "-1+0j");
  SUBCASE("round trip incl. exponents") {
    rng::Rng rng(56);
    for (int i = 0; i < 200; ++i) {
      const std::complex<double> z{(rng.uniform() - 0.5) * 1e-7,
                                   (rng.uniform() - 0.5) * 1e9};
      CHECK(io::parse_complex(io::format_complex(z)) == z);
    }
    CHECK(io::parse_complex("1e-05+2e-07j") == std::complex<double>(1e-5, 2e-7));
    CHECK(io::parse_complex("-3.5e+2-1e-3j") == std::complex<double>(-350.0, -1e-3));
  }
  CHECK_THROWS_AS(io::parse_complex("1+2"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_complex("j"), std::invalid_argument);
}

TEST_CASE("csv io") {
  const fs::path path = fs::temp_directory_path() / "epsim_io_test.csv";
  io::write_csv(path, {"a", "b"}, {{"1", "x"}, {"2", "y"}});
  const auto t = io::read_csv(path);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == "y");
  CHECK_THROWS(io::write_csv(path, {"a"}, {{"1", "2"}}));
  fs::remove(path);
  CHECK_THROWS(io::read_csv(path));
}

TEST_CASE("jsonc with comments") {
  const fs::path path = fs::temp_directory_path() / "epsim_io_test.jsonc";
  io::write_text(path, "{\n  // a comment\n  \"x\": 3 // trailing\n}\n");
  const auto j = io::load_jsonc(path);
  CHECK(j.at("x").get<int>() == 3);
  fs::remove(path);
}

TEST_CASE("config hash is stable and content-sensitive") {
  nlohmann::json a = {{"x", 1}, {"y", 2.5}};
  nlohmann::json b = {{"y", 2.5}, {"x", 1}};
  nlohmann::json c = {{"x", 1}, {"y", 2.6}};
  CHECK(io::config_hash(a) == io::config_hash(b));  // key order canonicalized
  CHECK(io::config_hash(a) != io::config_hash(c));
  CHECK(io::config_hash(a).size() == 16);
}

TEST_CASE("output schema registry") {
  const fs::path dir = fs::temp_directory_path();
  SUBCASE("valid counts file") {
    const fs::path path = dir / "counts_test.csv";
    io::write_csv(path,
                  {"setting_index", "basis", "qwp_signal_deg", "hwp_signal_deg",
                   "pol_signal_deg", "qwp_idler_deg", "hwp_idler_deg", "pol_idler_deg",
                   "singles_signal_hz", "singles_idler_hz", "coincidences_hz",
                   "accidentals_hz", "integration_time_s", "pump_power_mw",
                   "raw_singles_signal", "raw_singles_idler", "raw_coincidences",
                   "raw_accidentals"},
                  {});
    CHECK(io::has_known_schema(path));
    CHECK_NOTHROW(io::validate_output_schema(path));
    fs::remove(path);
  }
  SUBCASE("wrong header rejected") {
    const fs::path path = dir / "spdc_bad.csv";
    io::write_csv(path, {"wavelength_nm", "intensity"}, {{"1550", "0.5"}});
    CHECK_THROWS(io::validate_output_schema(path));
    fs::remove(path);
  }
  SUBCASE("unknown files have no schema") {
    CHECK_FALSE(io::has_known_schema(dir / "whatever.csv"));
  }
}
