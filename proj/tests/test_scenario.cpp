#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "epsim/io.hpp"
#include "epsim/scenario.hpp"

using namespace epsim;
namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = EPSIM_DATA_DIR;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// compact copy of the bundled scenario: one channel, short integration
fs::path small_scenario(const fs::path& dir, double integration_s = 2.0) {
  auto j = io::load_jsonc(kDataDir / "paper_repro.jsonc");
  j["channels"] = {{{"label", "H8-H38"}, {"signal_nm", 1546.92}, {"idler_nm", 1571.24}}};
  j["detector"]["integration_time_s"] = integration_s;
  const fs::path path = dir / "scenario.json";
  io::write_json(path, j);
  return path;
}

}  // namespace

TEST_CASE("scenario loading and validation") {
  SUBCASE("bundled reference scenario parses") {
    const auto sc = scenario::load_scenario(kDataDir / "paper_repro.jsonc");
    CHECK(sc.channels.size() == 3);
    CHECK(sc.chip.noise_admixture == doctest::Approx(0.026));
    CHECK(sc.detector.dwdm_bandwidth_nm == doctest::Approx(1.6));
    CHECK(sc.dispersion == "device");
  }
  SUBCASE("config round trip is semantically identical") {
    const auto sc = scenario::load_scenario(kDataDir / "paper_repro.jsonc");
    const auto j = chip::chip_to_json(sc.chip);
    const auto back = chip::chip_from_json(j);
    CHECK(chip::chip_to_json(back) == j);
  }
  SUBCASE("energy conservation is enforced per channel") {
    const auto dir = fresh_dir("epsim_sc_energy");
    auto j = io::load_jsonc(kDataDir / "paper_repro.jsonc");
    j["channels"] = {{{"label", "bad"}, {"signal_nm", 1520.0}, {"idler_nm", 1571.24}}};
    const fs::path path = dir / "bad.json";
    io::write_json(path, j);
    try {
      scenario::load_scenario(path);
      FAIL("expected energy-conservation rejection");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("energy conservation") != std::string::npos);
      CHECK(msg.find("residual") != std::string::npos);
    }
  }
  SUBCASE("invalid fields are listed") {
    const auto dir = fresh_dir("epsim_sc_invalid");
    auto j = io::load_jsonc(kDataDir / "paper_repro.jsonc");
    j["chip"]["noise_admixture"] = 2.0;
    const fs::path path = dir / "bad.json";
    io::write_json(path, j);
    CHECK_THROWS_AS(scenario::load_scenario(path), std::invalid_argument);
  }
}

TEST_CASE("derived seeds") {
  // adding channels or settings never perturbs other streams
  const auto a = scenario::channel_seed(7, "H8-H38", 3);
  CHECK(a == scenario::channel_seed(7, "H8-H38", 3));
  CHECK(a != scenario::channel_seed(7, "H8-H38", 4));
  CHECK(a != scenario::channel_seed(7, "L92-H54", 3));
  CHECK(a != scenario::channel_seed(8, "H8-H38", 3));
}

TEST_CASE("dispersion resolution") {
  const auto sc = scenario::load_scenario(kDataDir / "paper_repro.jsonc");
  CHECK(scenario::resolve_dispersion(sc, kDataDir).is_sampled());
  auto bulk = sc;
  bulk.dispersion = "linbo3";
  CHECK_FALSE(scenario::resolve_dispersion(bulk, kDataDir).is_sampled());
  auto missing = sc;
  missing.dispersion = "nonexistent.csv";
  CHECK_THROWS(scenario::resolve_dispersion(missing, kDataDir));
}

TEST_CASE("pipeline stages") {
  const auto dir = fresh_dir("epsim_sc_stages");
  const auto config = small_scenario(dir);

  SUBCASE("tomo before simulate names the missing input") {
    try {
      scenario::stage_tomo(dir / "empty", true);
      FAIL("expected dependency error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("counts_") != std::string::npos);
    }
  }
  SUBCASE("report before simulate names the missing input") {
    try {
      scenario::stage_report(dir / "empty");
      FAIL("expected dependency error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("scenario_resolved.json") != std::string::npos);
    }
  }
  SUBCASE("full run emits every documented artifact") {
    const auto out = dir / "out";
    const auto report = scenario::run_scenario(config, out);
    REQUIRE(report.channels.size() == 1);
    CHECK(report.channels[0].label == "H8-H38");
    CHECK(report.channels[0].converged);
    CHECK(report.channels[0].fidelity > 0.5);
    CHECK(report.tool_version == scenario::kToolVersion);
    CHECK(report.config_hash.size() == 16);
    for (const char* f :
         {"counts_H8-H38.csv", "state_H8-H38.dm", "brightness_H8-H38.json",
          "rho_H8-H38_re.csv", "rho_H8-H38_im.csv", "metrics_H8-H38.json",
          "shg_upper.csv", "shg_upper.csv.meta.json", "shg_lower.csv",
          "spdc_spectrum.csv", "gvd.csv", "dispersion_model.csv", "report.json",
          "scenario_resolved.json"}) {
      CHECK_MESSAGE(fs::exists(out / f), f);
    }
    // every emitted CSV with a documented schema validates against it
    for (const auto& entry : fs::directory_iterator(out)) {
      if (io::has_known_schema(entry.path()))
        CHECK_NOTHROW(io::validate_output_schema(entry.path()));
    }
    // the synthesized state round-trips through the plain-text format
    const auto rho =
        pol::density_from_text(io::read_text(out / "state_H8-H38.dm"));
    CHECK(pol::check_density(rho.m).ok);
  }
  SUBCASE("channel filter rejects unknown labels") {
    scenario::RunOverrides ov;
    ov.channels = {"nope"};
    CHECK_THROWS_AS(scenario::run_scenario(config, dir / "out2", ov),
                    std::invalid_argument);
  }
  SUBCASE("ideal chip without noise reconstructs a clean Bell state") {
    auto j = io::load_jsonc(config);
    j["chip"]["noise_admixture"] = 0.0;
    j["chip"]["mmi"]["split_fraction_upper"] = 0.5;
    j["chip"]["prc"]["through_insertion_loss_db"] = 2.5;
    j["chip"]["prc"]["cross_insertion_loss_db"] = 2.5;
    j["chip"]["prc"]["cross_fwhm_nm"] = 1e9;
    j["chip"]["prc"]["extinction_h_db"] = 200.0;
    j["chip"]["prc"]["extinction_v_db"] = 200.0;
    j["detector"]["integration_time_s"] = 30.0;
    const fs::path ideal_path = dir / "ideal.json";
    io::write_json(ideal_path, j);
    const auto report = scenario::run_scenario(ideal_path, dir / "ideal_out");
    for (const auto& ch : report.channels) CHECK(ch.fidelity >= 0.999);
  }
  SUBCASE("exported tuning curve carries the calibrated peak") {
    const auto out = dir / "pm_out";
    const auto sc = scenario::load_scenario(config);
    scenario::stage_phasematch(sc, out, dir);
    const auto t = io::read_csv(out / "shg_upper.csv");
    double best = 0.0, peak = 0.0;
    for (const auto& row : t.rows) {
      const double v = io::parse_double(row[1]);
      if (v > best) {
        best = v;
        peak = io::parse_double(row[0]);
      }
    }
    CHECK(std::abs(peak - 1558.50) < 0.05);
    const auto meta = io::load_jsonc(out / "shg_upper.csv.meta.json");
    CHECK(meta.at("value_kind").get<std::string>() == "normalized_intensity");
    CHECK(meta.at("config_hash").get<std::string>().size() == 16);
  }
}

TEST_CASE("determinism of repeated runs") {
  const auto dir = fresh_dir("epsim_sc_det");
  const auto config = small_scenario(dir);
  const auto out1 = dir / "run1";
  const auto out2 = dir / "run2";
  scenario::run_scenario(config, out1);
  scenario::run_scenario(config, out2);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(out1)) {
    if (entry.path().extension() != ".csv" && entry.path().extension() != ".dm") continue;
    const auto other = out2 / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK_MESSAGE(io::read_text(entry.path()) == io::read_text(other),
                  entry.path().filename().string());
    ++compared;
  }
  CHECK(compared >= 8);

  // a different seed must change the counts
  scenario::RunOverrides ov;
  ov.seed = 777;
  const auto out3 = dir / "run3";
  scenario::run_scenario(config, out3, ov);
  CHECK(io::read_text(out1 / "counts_H8-H38.csv") !=
        io::read_text(out3 / "counts_H8-H38.csv"));
}

TEST_CASE("mmi fit stage") {
  const auto dir = fresh_dir("epsim_sc_mmi");
  const auto fit = scenario::stage_mmifit(kDataDir / "mmi_tree.csv", dir);
  CHECK(fit.per_splitter_loss_db == doctest::Approx(3.47).epsilon(1e-12));
  CHECK(fs::exists(dir / "mmifit.json"));
  const auto j = io::load_jsonc(dir / "mmifit.json");
  CHECK(j.at("per_splitter_loss_db").get<double>() == doctest::Approx(3.47));
}
