#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>

#include "epsim/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = EPSIM_CLI_PATH;
const fs::path kDataDir = EPSIM_DATA_DIR;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_small_config(const fs::path& dir) {
  auto j = epsim::io::load_jsonc(kDataDir / "paper_repro.jsonc");
  j["channels"] = {{{"label", "H8-H38"}, {"signal_nm", 1546.92}, {"idler_nm", 1571.24}}};
  j["detector"]["integration_time_s"] = 2.0;
  const fs::path path = dir / "scenario.json";
  epsim::io::write_json(path, j);
  return path;
}

}  // namespace

TEST_CASE("cli pipeline") {
  const auto dir = fresh_dir("epsim_cli_test");
  const auto config = write_small_config(dir);
  const auto out = (dir / "out").string();

  SUBCASE("stages chain through the output directory") {
    CHECK(run("simulate --config " + config.string() + " --out " + out) == 0);
    CHECK(fs::exists(dir / "out" / "counts_H8-H38.csv"));
    CHECK(run("tomo --out " + out) == 0);
    CHECK(fs::exists(dir / "out" / "metrics_H8-H38.json"));
    CHECK(run("phasematch --config " + config.string() + " --out " + out) == 0);
    CHECK(fs::exists(dir / "out" / "shg_upper.csv"));
    CHECK(run("report --out " + out) == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));

    const auto report = epsim::io::load_jsonc(dir / "out" / "report.json");
    CHECK(report.at("channels").size() == 1);
    CHECK(report.at("channels")[0].at("converged").get<bool>());
  }
  SUBCASE("mmifit") {
    CHECK(run("mmifit --input " + (kDataDir / "mmi_tree.csv").string() + " --out " +
              out) == 0);
    CHECK(fs::exists(dir / "out" / "mmifit.json"));
  }
  SUBCASE("missing upstream files fail loudly") {
    CHECK(run("tomo --out " + (dir / "nothing_here").string()) != 0);
    CHECK(run("report --out " + (dir / "nothing_here").string()) != 0);
  }
  SUBCASE("invalid config fails with nonzero status") {
    auto j = epsim::io::load_jsonc(config);
    j["chip"]["mmi"]["split_fraction_upper"] = 2.0;
    const fs::path bad = dir / "bad.json";
    epsim::io::write_json(bad, j);
    CHECK(run("simulate --config " + bad.string() + " --out " + out) != 0);
  }
  SUBCASE("config dir environment fallback") {
    const std::string cmd = "EPSIM_CONFIG_DIR=" + dir.string() + " " + kCli +
                            " simulate --config scenario.json --out " + out +
                            " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  }
  SUBCASE("tomo without accidental subtraction still reconstructs") {
    REQUIRE(run("simulate --config " + config.string() + " --out " + out) == 0);
    CHECK(run("tomo --no-subtract-accidentals --out " + out) == 0);
  }
}
