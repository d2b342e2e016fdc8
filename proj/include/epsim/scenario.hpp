#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epsim/chip.hpp"
#include "epsim/counting.hpp"
#include "epsim/phase_matching.hpp"
#include "epsim/tomography.hpp"
#include "json.hpp"

namespace epsim::scenario {

inline constexpr const char* kToolVersion = "0.1.0";
/// Environment variable naming the default config directory.
inline constexpr const char* kConfigDirEnv = "EPSIM_CONFIG_DIR";

struct Channel {
  std::string label;
  double signal_nm = 0.0;
  double idler_nm = 0.0;
};

struct Scenario {
  chip::ChipConfig chip;
  counting::DetectorConfig detector;
  std::vector<Channel> channels;
  std::string dispersion = "device";  // "device" | "linbo3" | CSV path
  std::uint64_t seed = 1;
  double pair_rate_hz = 0.0;
  double pump_power_mw = 0.0;
  double source_bandwidth_nm = 73.0;
  double chip_temperature_c = 67.0;
  bool subtract_accidentals = true;
  std::string output_dir;  // optional default; CLI --out overrides
  nlohmann::json raw;      // parsed config, hashed into reports
};

/// Parse + validate; throws with a list of failing fields, and rejects any
/// channel whose pair violates energy conservation with the pump by more
/// than 0.2 nm (the residual is included in the message).
Scenario load_scenario(const std::filesystem::path& config_path);
void validate(const Scenario& sc);

/// Resolve the dispersion reference ("device", "linbo3", or a CSV path
/// relative to base_dir).
pm::DispersionModel resolve_dispersion(const Scenario& sc,
                                       const std::filesystem::path& base_dir);

struct ChannelMetrics {
  std::string label;
  double fidelity = 0.0;
  double v_hv = 0.0;
  double v_ad = 0.0;
  double chsh_s = 0.0;
  double brightness = 0.0;
  double pgr = 0.0;
  bool converged = false;
};

struct RunReport {
  std::vector<ChannelMetrics> channels;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> output_files;  // metric source -> path
};

/// Per-channel derived RNG streams: stream id is the FNV-1a hash of the label
/// mixed with the scenario seed, then one sub-stream per setting index, so
/// adding channels never perturbs existing channels' counts.
std::uint64_t channel_seed(std::uint64_t scenario_seed, const std::string& label,
                           std::uint64_t setting_index);

/// Stage 1: synthesize states, simulate 16-setting counts and a no-analyzer
/// brightness record per channel; writes counts_<label>.csv,
/// brightness_<label>.json, state_<label>.dm and scenario_resolved.json.
void stage_simulate(const Scenario& sc, const std::filesystem::path& out_dir);

/// Stage 2: reconstruct every counts_<label>.csv found in out_dir.
void stage_tomo(const std::filesystem::path& out_dir, bool subtract_accidentals,
                const std::vector<std::string>& only_labels = {});

/// Stage 3: SHG tuning curves for both waveguides, the pair spectrum and the
/// GVD curve, each as CSV plus sidecar metadata.
void stage_phasematch(const Scenario& sc, const std::filesystem::path& out_dir,
                      const std::filesystem::path& base_dir);

chip::MmiTreeFit stage_mmifit(const std::filesystem::path& csv_path,
                              const std::filesystem::path& out_dir);

/// Stage 4: aggregate per-channel outputs into the run report
/// (report.json). Missing upstream files raise an error naming the path.
RunReport stage_report(const std::filesystem::path& out_dir);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<bool> subtract_accidentals;
  std::vector<std::string> channels;  // empty = all
};

/// Full pipeline: simulate, reconstruct, spectra, report. Deterministic for a
/// fixed (config, seed): identical runs produce byte-identical CSV outputs.
RunReport run_scenario(const std::filesystem::path& config_path,
                       const std::filesystem::path& out_dir,
                       const RunOverrides& overrides = {});

}  // namespace epsim::scenario
