// epsim: entangled-pair source simulation and characterization pipeline.
//
// Subcommands operate on a shared output directory:
//   simulate    synthesize states and Poisson count tables per channel
//   tomo        maximum-likelihood reconstruction from count tables
//   phasematch  SHG tuning curves, pair spectrum and GVD export
//   mmifit      per-splitter loss fit from an MMI-tree measurement CSV
//   report      aggregate everything into report.json

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "epsim/io.hpp"
#include "epsim/scenario.hpp"

namespace fs = std::filesystem;

namespace {

fs::path resolve_config(const std::string& config) {
  fs::path p(config);
  if (fs::exists(p)) return p;
  if (const char* dir = std::getenv(epsim::scenario::kConfigDirEnv)) {
    const fs::path fallback = fs::path(dir) / p;
    if (fs::exists(fallback)) return fallback;
  }
  throw std::runtime_error("config not found: " + config);
}

void print_report(const epsim::scenario::RunReport& report) {
  std::cout << "config " << report.config_hash << " seed " << report.seed << "\n";
  for (const auto& m : report.channels) {
    std::cout << m.label << ": F=" << m.fidelity << " Vhv=" << m.v_hv
              << " Vad=" << m.v_ad << " S=" << m.chsh_s << " B=" << m.brightness
              << " PGR=" << m.pgr << (m.converged ? "" : "  [NOT CONVERGED]") << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entangled-pair source simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::vector<std::string> channels;
  bool no_subtract = false;
  std::string mmi_input;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config, "scenario config file (JSON, // comments ok)")
          ->required();
    cmd->add_option("--out", out, "output directory");
  };

  CLI::App* sim = app.add_subcommand("simulate", "simulate per-channel count tables");
  add_common(sim, true);
  sim->add_option("--seed", seed, "override the scenario seed");
  sim->add_option("--channels", channels, "restrict to these channel labels")
      ->delimiter(',');

  CLI::App* tomo = app.add_subcommand("tomo", "reconstruct states from count tables");
  add_common(tomo, false);
  tomo->add_flag("--no-subtract-accidentals", no_subtract,
                 "reconstruct from raw coincidences");
  tomo->add_option("--channels", channels, "restrict to these channel labels")
      ->delimiter(',');

  CLI::App* pmc = app.add_subcommand("phasematch", "export tuning curves and spectra");
  add_common(pmc, true);

  CLI::App* mmi = app.add_subcommand("mmifit", "fit per-splitter loss from a tree CSV");
  mmi->add_option("--input", mmi_input, "CSV with splitter_count,output_power_dbm")
      ->required();
  mmi->add_option("--out", out, "output directory");

  CLI::App* rep = app.add_subcommand("report", "aggregate outputs into report.json");
  add_common(rep, false);

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out_dir(out);
    if (sim->parsed()) {
      epsim::scenario::Scenario sc =
          epsim::scenario::load_scenario(resolve_config(config));
      if (sim->count("--seed") > 0) sc.seed = seed;
      sc.raw["seed"] = sc.seed;
      if (!channels.empty()) {
        std::vector<epsim::scenario::Channel> keep;
        for (const auto& want : channels) {
          bool found = false;
          for (const auto& c : sc.channels) {
            if (c.label == want) {
              keep.push_back(c);
              found = true;
            }
          }
          if (!found) throw std::runtime_error("unknown channel label " + want);
        }
        sc.channels = std::move(keep);
      }
      epsim::scenario::stage_simulate(sc, out_dir);
      std::cout << "wrote count tables for " << sc.channels.size() << " channels to "
                << out_dir.string() << "\n";
    } else if (tomo->parsed()) {
      epsim::scenario::stage_tomo(out_dir, !no_subtract, channels);
      std::cout << "reconstructions written to " << out_dir.string() << "\n";
    } else if (pmc->parsed()) {
      const epsim::scenario::Scenario sc =
          epsim::scenario::load_scenario(resolve_config(config));
      epsim::scenario::stage_phasematch(sc, out_dir,
                                        resolve_config(config).parent_path());
      std::cout << "spectra written to " << out_dir.string() << "\n";
    } else if (mmi->parsed()) {
      const auto fit = epsim::scenario::stage_mmifit(mmi_input, out_dir);
      std::cout << "per-splitter loss: " << fit.per_splitter_loss_db
                << " dB (residual rms " << fit.residual_rms_db << " dB)\n";
    } else if (rep->parsed()) {
      const auto report = epsim::scenario::stage_report(out_dir);
      nlohmann::json j;
      j["tool_version"] = report.tool_version;
      j["config_hash"] = report.config_hash;
      j["seed"] = report.seed;
      j["channels"] = nlohmann::json::array();
      for (const auto& m : report.channels) {
        j["channels"].push_back({{"label", m.label},
                                 {"fidelity_to_bell", m.fidelity},
                                 {"visibility_hv", m.v_hv},
                                 {"visibility_ad", m.v_ad},
                                 {"chsh_s", m.chsh_s},
                                 {"brightness_pairs_per_s_nm_mw", m.brightness},
                                 {"pgr_pairs_per_s_mw", m.pgr},
                                 {"converged", m.converged}});
      }
      j["output_files"] = report.output_files;
      epsim::io::write_json(out_dir / "report.json", j);
      print_report(report);
      for (const auto& m : report.channels)
        if (!m.converged) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
