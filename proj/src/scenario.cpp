#include "epsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <set>
#include <sstream>
#include <stdexcept>

#include "epsim/io.hpp"
#include "epsim/rng.hpp"

namespace epsim::scenario {

namespace fs = std::filesystem;

namespace {

constexpr double kEnergyToleranceNm = 0.2;
// reserved sub-stream for the per-channel unanalyzed brightness record
constexpr std::uint64_t kBrightnessStream = 1000;

void write_curve(const fs::path& csv_path, const pm::SpectralCurve& curve,
                 const std::string& config_hash) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(curve.wavelengths_nm.size());
  for (std::size_t i = 0; i < curve.wavelengths_nm.size(); ++i)
    rows.push_back({io::format_double(curve.wavelengths_nm[i]),
                    io::format_double(curve.values[i])});
  const char* value_col = curve.kind == pm::ValueKind::GvdPs2PerKm ? "gvd_ps2_per_km"
                          : curve.kind == pm::ValueKind::TransmissionDb
                              ? "transmission_db"
                              : "normalized_intensity";
  io::write_csv(csv_path, {"wavelength_nm", value_col}, rows);
  io::validate_output_schema(csv_path);

  nlohmann::json meta;
  meta["value_kind"] = pm::value_kind_name(curve.kind);
  meta["grid_min_nm"] = curve.wavelengths_nm.front();
  meta["grid_max_nm"] = curve.wavelengths_nm.back();
  meta["points"] = curve.wavelengths_nm.size();
  meta["config_hash"] = config_hash;
  fs::path meta_path = csv_path;
  meta_path += ".meta.json";
  io::write_json(meta_path, meta);
}

counting::CountRecord simulate_unanalyzed(double pair_rate_hz,
                                          const counting::DetectorConfig& det,
                                          double pump_power_mw, std::uint64_t seed) {
  const double r_s = pair_rate_hz * det.efficiency_signal + det.dark_rate_hz;
  const double r_i = pair_rate_hz * det.efficiency_idler + det.dark_rate_hz;
  const double r_acc = counting::accidental_rate(r_s, r_i, det.coincidence_window_s);
  const double r_true = pair_rate_hz * det.efficiency_signal * det.efficiency_idler;
  rng::Rng rng(seed);
  const double t = det.integration_time_s;
  counting::CountRecord rec;
  rec.integration_time_s = t;
  rec.pump_power_mw = pump_power_mw;
  rec.raw_singles_signal = rng.poisson(r_s * t);
  rec.raw_singles_idler = rng.poisson(r_i * t);
  rec.raw_coincidences = rng.poisson((r_true + r_acc) * t);
  rec.raw_accidentals = rng.poisson(r_acc * t);
  rec.singles_signal_hz = static_cast<double>(rec.raw_singles_signal) / t;
  rec.singles_idler_hz = static_cast<double>(rec.raw_singles_idler) / t;
  rec.coincidences_hz = static_cast<double>(rec.raw_coincidences) / t;
  rec.accidentals_hz = static_cast<double>(rec.raw_accidentals) / t;
  return rec;
}

nlohmann::json require_json_file(const fs::path& path, const char* producer) {
  if (!fs::exists(path))
    throw std::runtime_error("missing " + path.string() + "; run `" + producer +
                             "` first");
  return io::load_jsonc(path);
}

}  // namespace

Scenario load_scenario(const fs::path& config_path) {
  const nlohmann::json j = io::load_jsonc(config_path);
  Scenario sc;
  sc.raw = j;
  sc.chip = chip::chip_from_json(j.at("chip"));
  if (j.at("chip").contains("prc") &&
      j.at("chip").at("prc").contains("measured_curve_csv")) {
    const fs::path rel = j.at("chip").at("prc").at("measured_curve_csv").get<std::string>();
    sc.chip.prc.measured_curve = chip::prc_curve_from_csv(config_path.parent_path() / rel);
  }
  const auto& dj = j.at("detector");
  sc.detector.efficiency_signal = dj.at("efficiency_signal").get<double>();
  sc.detector.efficiency_idler = dj.at("efficiency_idler").get<double>();
  sc.detector.dark_rate_hz = dj.value("dark_rate_hz", 0.0);
  sc.detector.coincidence_window_s = dj.at("coincidence_window_s").get<double>();
  sc.detector.integration_time_s = dj.at("integration_time_s").get<double>();
  sc.detector.dwdm_bandwidth_nm = dj.at("dwdm_bandwidth_nm").get<double>();
  for (const auto& cj : j.at("channels")) {
    Channel c;
    c.label = cj.at("label").get<std::string>();
    c.signal_nm = cj.at("signal_nm").get<double>();
    c.idler_nm = cj.at("idler_nm").get<double>();
    sc.channels.push_back(std::move(c));
  }
  sc.dispersion = j.value("dispersion", std::string("device"));
  sc.seed = j.value("seed", std::uint64_t{1});
  sc.pair_rate_hz = j.at("pair_rate_hz").get<double>();
  sc.pump_power_mw = j.at("pump_power_mw").get<double>();
  sc.source_bandwidth_nm = j.value("source_bandwidth_nm", 73.0);
  sc.chip_temperature_c = j.value("chip_temperature_c", 67.0);
  sc.subtract_accidentals = j.value("subtract_accidentals", true);
  sc.output_dir = j.value("output_dir", std::string{});
  validate(sc);
  return sc;
}

void validate(const Scenario& sc) {
  chip::validate(sc.chip);
  counting::validate(sc.detector);
  if (sc.channels.empty()) throw std::invalid_argument("scenario has no channels");
  if (!(sc.pair_rate_hz > 0.0)) throw std::invalid_argument("pair_rate_hz must be > 0");
  if (!(sc.pump_power_mw > 0.0)) throw std::invalid_argument("pump_power_mw must be > 0");
  std::set<std::string> seen;
  const double pump_nm =
      chip::pump_wavelength(sc.chip.pump, sc.chip.pump.reference_temperature_c);
  for (const auto& c : sc.channels) {
    if (!seen.insert(c.label).second)
      throw std::invalid_argument("duplicate channel label " + c.label);
    const double implied_pump = 1.0 / (1.0 / c.signal_nm + 1.0 / c.idler_nm);
    const double residual = std::abs(implied_pump - pump_nm);
    if (residual > kEnergyToleranceNm) {
      std::ostringstream msg;
      msg << "channel " << c.label << " violates energy conservation: implied pump "
          << implied_pump << " nm vs " << pump_nm << " nm (residual " << residual
          << " nm)";
      throw std::invalid_argument(msg.str());
    }
  }
}

pm::DispersionModel resolve_dispersion(const Scenario& sc, const fs::path& base_dir) {
  if (sc.dispersion == "device") {
    pm::DeviceModelParams params;
    params.degenerate_nm = 2.0 * sc.chip.pump.reference_wavelength_nm;
    params.shg_fwhm_nm = sc.chip.ppln_upper.shg_fwhm_nm;
    params.shg_peak_nm = sc.chip.ppln_upper.peak_wavelength_nm;
    params.length_mm = sc.chip.ppln_upper.length_mm;
    return pm::device_waveguide_model(params);
  }
  if (sc.dispersion == "linbo3")
    return pm::DispersionModel::congruent_linbo3_extraordinary();
  return pm::DispersionModel::from_csv(base_dir / sc.dispersion);
}

std::uint64_t channel_seed(std::uint64_t scenario_seed, const std::string& label,
                           std::uint64_t setting_index) {
  const std::uint64_t stream =
      rng::Rng::hash_label(label) + 0x9e3779b97f4a7c15ull * (setting_index + 1);
  return rng::Rng::mix(scenario_seed, stream);
}

void stage_simulate(const Scenario& sc, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const tomo::TomographySettingSet settings = tomo::tomo_settings();

  auto simulate_channel = [&](const Channel& ch) {
    const pol::DensityMatrix rho = chip::synthesize_pair_state(sc.chip, ch.signal_nm);
    io::write_text(out_dir / ("state_" + ch.label + ".dm"), pol::to_text(rho));

    std::vector<counting::CountRecord> records;
    records.reserve(16);
    for (std::uint64_t k = 0; k < 16; ++k) {
      counting::CountRecord rec = counting::simulate_counts(
          rho, settings.settings[k], sc.pair_rate_hz, sc.detector,
          channel_seed(sc.seed, ch.label, k));
      rec.pump_power_mw = sc.pump_power_mw;
      records.push_back(rec);
    }
    const fs::path counts_path = out_dir / ("counts_" + ch.label + ".csv");
    counting::write_count_records_csv(
        counts_path, records,
        std::vector<std::string>(settings.labels.begin(), settings.labels.end()));
    io::validate_output_schema(counts_path);

    const counting::CountRecord bright = simulate_unanalyzed(
        sc.pair_rate_hz, sc.detector, sc.pump_power_mw,
        channel_seed(sc.seed, ch.label, kBrightnessStream));
    const counting::BrightnessReport rep = counting::brightness(
        bright, sc.detector.dwdm_bandwidth_nm, sc.source_bandwidth_nm);
    nlohmann::json bj;
    bj["channel"] = ch.label;
    bj["brightness_pairs_per_s_nm_mw"] = rep.brightness;
    bj["pgr_pairs_per_s_mw"] = rep.pgr;
    bj["bandwidth_used_nm"] = rep.bandwidth_used_nm;
    bj["singles_signal_hz"] = bright.singles_signal_hz;
    bj["singles_idler_hz"] = bright.singles_idler_hz;
    bj["coincidences_hz"] = bright.coincidences_hz;
    bj["accidentals_hz"] = bright.accidentals_hz;
    io::write_json(out_dir / ("brightness_" + ch.label + ".json"), bj);
  };

  std::vector<std::future<void>> jobs;
  jobs.reserve(sc.channels.size());
  for (const auto& ch : sc.channels)
    jobs.push_back(std::async(std::launch::async, simulate_channel, std::cref(ch)));
  for (auto& job : jobs) job.get();

  nlohmann::json resolved;
  resolved["config"] = sc.raw;
  resolved["seed"] = sc.seed;
  resolved["subtract_accidentals"] = sc.subtract_accidentals;
  resolved["channels"] = nlohmann::json::array();
  for (const auto& ch : sc.channels) resolved["channels"].push_back(ch.label);
  io::write_json(out_dir / "scenario_resolved.json", resolved);
}

void stage_tomo(const fs::path& out_dir, bool subtract_accidentals,
                const std::vector<std::string>& only_labels) {
  std::vector<std::pair<std::string, fs::path>> inputs;
  if (fs::exists(out_dir)) {
    for (const auto& entry : fs::directory_iterator(out_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("counts_", 0) == 0 && entry.path().extension() == ".csv") {
        std::string label = name.substr(7, name.size() - 7 - 4);
        if (!only_labels.empty() &&
            std::find(only_labels.begin(), only_labels.end(), label) == only_labels.end())
          continue;
        inputs.emplace_back(std::move(label), entry.path());
      }
    }
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty())
    throw std::runtime_error("missing " + (out_dir / "counts_<label>.csv").string() +
                             "; run `simulate` first");

  std::vector<std::string> failed;
  for (const auto& [label, path] : inputs) {
    const auto records = counting::read_count_records_csv(path);
    tomo::TomographySettingSet settings = tomo::tomo_settings();
    for (std::size_t k = 0; k < 16; ++k) {
      // rebuild projectors from the recorded angles so the CSV alone defines
      // the measurement
      settings.settings[k] = records[k].setting;
      settings.projectors[k] = pol::kron(
          pol::analyzer_projector(records[k].setting, pol::Arm::Signal),
          pol::analyzer_projector(records[k].setting, pol::Arm::Idler));
    }
    tomo::TomographyData data = tomo::data_from_count_records(records);
    if (subtract_accidentals) data = tomo::subtract_accidentals(data).data;
    const tomo::ReconstructionResult result = tomo::mle_reconstruct(data, settings);
    const tomo::MetricsBundle metrics = tomo::report_metrics(result);
    tomo::write_reconstruction(out_dir, label, result, metrics);
    if (!result.converged) failed.push_back(label);
  }
  if (!failed.empty()) {
    std::string msg = "reconstruction did not converge for:";
    for (const auto& l : failed) msg += ' ' + l;
    throw std::runtime_error(msg);
  }
}

void stage_phasematch(const Scenario& sc, const fs::path& out_dir,
                      const fs::path& base_dir) {
  fs::create_directories(out_dir);
  const pm::DispersionModel model = resolve_dispersion(sc, base_dir);
  const std::string hash = io::config_hash(sc.raw);
  const double pump_nm =
      chip::pump_wavelength(sc.chip.pump, sc.chip.pump.reference_temperature_c);

  auto linspace = [](double lo, double hi, double step) {
    std::vector<double> g;
    for (double x = lo; x <= hi + 1e-9; x += step) g.push_back(x);
    return g;
  };

  const auto shg_grid = linspace(1548.0, 1572.0, 0.02);
  write_curve(out_dir / "shg_upper.csv",
              pm::shg_tuning_curve(model, sc.chip.ppln_upper, shg_grid,
                                   sc.chip_temperature_c),
              hash);
  write_curve(out_dir / "shg_lower.csv",
              pm::shg_tuning_curve(model, sc.chip.ppln_lower, shg_grid,
                                   sc.chip_temperature_c),
              hash);

  const auto spdc_grid = linspace(1240.0, 1960.0, 1.0);
  write_curve(out_dir / "spdc_spectrum.csv",
              pm::spdc_spectrum(model, sc.chip.ppln_upper, pump_nm, spdc_grid,
                                sc.chip_temperature_c),
              hash);

  const auto gvd_grid = linspace(1250.0, 2050.0, 5.0);
  write_curve(out_dir / "gvd.csv", pm::gvd_curve(model, gvd_grid), hash);

  if (model.is_sampled())
    pm::dispersion_to_csv(model, out_dir / "dispersion_model.csv");
}

chip::MmiTreeFit stage_mmifit(const fs::path& csv_path, const fs::path& out_dir) {
  const io::CsvTable t = io::read_csv(csv_path);
  if (t.header != std::vector<std::string>{"splitter_count", "output_power_dbm"})
    throw std::runtime_error(
        "MMI tree CSV must have columns splitter_count,output_power_dbm");
  std::vector<std::pair<int, double>> samples;
  for (const auto& row : t.rows)
    samples.emplace_back(static_cast<int>(io::parse_double(row[0])),
                         io::parse_double(row[1]));
  const chip::MmiTreeFit fit = chip::mmi_tree_fit(samples);
  fs::create_directories(out_dir);
  nlohmann::json j;
  j["per_splitter_loss_db"] = fit.per_splitter_loss_db;
  j["intercept_dbm"] = fit.intercept_dbm;
  j["residual_rms_db"] = fit.residual_rms_db;
  j["samples"] = samples.size();
  io::write_json(out_dir / "mmifit.json", j);
  return fit;
}

RunReport stage_report(const fs::path& out_dir) {
  const nlohmann::json resolved =
      require_json_file(out_dir / "scenario_resolved.json", "simulate");
  RunReport report;
  report.seed = resolved.at("seed").get<std::uint64_t>();
  report.config_hash = io::config_hash(resolved.at("config"));
  report.tool_version = kToolVersion;

  for (const auto& label_json : resolved.at("channels")) {
    const std::string label = label_json.get<std::string>();
    const fs::path metrics_path = out_dir / ("metrics_" + label + ".json");
    const fs::path bright_path = out_dir / ("brightness_" + label + ".json");
    const nlohmann::json mj = require_json_file(metrics_path, "tomo");
    const nlohmann::json bj = require_json_file(bright_path, "simulate");
    ChannelMetrics m;
    m.label = label;
    m.fidelity = mj.at("fidelity_to_bell").get<double>();
    m.v_hv = mj.at("visibility_hv").get<double>();
    m.v_ad = mj.at("visibility_ad").get<double>();
    m.chsh_s = mj.at("chsh_s").get<double>();
    m.converged = mj.at("converged").get<bool>();
    m.brightness = bj.at("brightness_pairs_per_s_nm_mw").get<double>();
    m.pgr = bj.at("pgr_pairs_per_s_mw").get<double>();
    report.channels.push_back(m);
    report.output_files["metrics:" + label] = metrics_path.filename().string();
    report.output_files["brightness:" + label] = bright_path.filename().string();
    report.output_files["counts:" + label] = "counts_" + label + ".csv";
    report.output_files["rho_re:" + label] = "rho_" + label + "_re.csv";
    report.output_files["rho_im:" + label] = "rho_" + label + "_im.csv";
  }
  for (const char* f : {"shg_upper.csv", "shg_lower.csv", "spdc_spectrum.csv", "gvd.csv"}) {
    if (fs::exists(out_dir / f)) report.output_files[f] = f;
  }
  return report;
}

RunReport run_scenario(const fs::path& config_path, const fs::path& out_dir,
                       const RunOverrides& overrides) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario sc = load_scenario(config_path);
  if (overrides.seed) sc.seed = *overrides.seed;
  if (overrides.subtract_accidentals)
    sc.subtract_accidentals = *overrides.subtract_accidentals;
  if (!overrides.channels.empty()) {
    std::vector<Channel> keep;
    for (const auto& want : overrides.channels) {
      const auto it = std::find_if(sc.channels.begin(), sc.channels.end(),
                                   [&](const Channel& c) { return c.label == want; });
      if (it == sc.channels.end())
        throw std::invalid_argument("unknown channel label " + want);
      keep.push_back(*it);
    }
    sc.channels = std::move(keep);
  }
  // keep the hashed config in sync with the effective run parameters
  sc.raw["seed"] = sc.seed;

  stage_simulate(sc, out_dir);
  stage_tomo(out_dir, sc.subtract_accidentals);
  stage_phasematch(sc, out_dir, config_path.parent_path());
  RunReport report = stage_report(out_dir);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json j;
  j["tool_version"] = report.tool_version;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["wall_seconds"] = report.wall_seconds;
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
  io::write_json(out_dir / "report.json", j);
  return report;
}

}  // namespace epsim::scenario
