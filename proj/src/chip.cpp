#include "epsim/chip.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "epsim/io.hpp"

namespace epsim::chip {

namespace {

double db_to_power(double db) { return std::pow(10.0, -db / 10.0); }
double db_to_amplitude(double db) { return std::pow(10.0, -db / 20.0); }

}  // namespace

void validate(const ChipConfig& cfg) {
  std::vector<std::string> bad;
  auto require = [&bad](bool ok, const char* field) {
    if (!ok) bad.emplace_back(field);
  };
  require(cfg.pump.coupling_efficiency > 0.0 && cfg.pump.coupling_efficiency <= 1.0,
          "pump.coupling_efficiency");
  require(std::isfinite(cfg.pump.tuning_slope_nm_per_c), "pump.tuning_slope_nm_per_c");
  require(cfg.pump.emitted_power_mw >= 0.0, "pump.emitted_power_mw");
  require(cfg.pump.reference_wavelength_nm > 0.0, "pump.reference_wavelength_nm");
  require(cfg.mmi.split_fraction_upper >= 0.0 && cfg.mmi.split_fraction_upper <= 1.0,
          "mmi.split_fraction_upper");
  require(cfg.mmi.insertion_loss_db >= 0.0, "mmi.insertion_loss_db");
  for (const auto& [cfg_p, name] :
       std::initializer_list<std::pair<const PplnConfig*, const char*>>{
           {&cfg.ppln_upper, "ppln_upper"}, {&cfg.ppln_lower, "ppln_lower"}}) {
    const std::string base(name);
    if (!(cfg_p->length_mm > 0.0)) bad.push_back(base + ".length_mm");
    if (!(cfg_p->poling_period_um > 0.0)) bad.push_back(base + ".poling_period_um");
    if (!(cfg_p->shg_fwhm_nm > 0.0)) bad.push_back(base + ".shg_fwhm_nm");
  }
  require(cfg.prc.cross_fwhm_nm > 0.0, "prc.cross_fwhm_nm");
  require(cfg.prc.extinction_h_db > 0.0, "prc.extinction_h_db");
  require(cfg.prc.extinction_v_db > 0.0, "prc.extinction_v_db");
  require(cfg.prc.window_min_nm < cfg.prc.window_max_nm, "prc.window_min_nm");
  require(cfg.noise_admixture >= 0.0 && cfg.noise_admixture <= 1.0, "noise_admixture");
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "invalid chip config, failing fields:";
    for (const auto& f : bad) msg << ' ' << f;
    throw std::invalid_argument(msg.str());
  }
}

double pump_wavelength(const PumpConfig& cfg, double temperature_c) {
  return cfg.reference_wavelength_nm +
         cfg.tuning_slope_nm_per_c * (temperature_c - cfg.reference_temperature_c);
}

std::pair<double, double> split_pump(const MmiConfig& cfg, double on_chip_power_mw) {
  if (!(on_chip_power_mw >= 0.0))
    throw std::invalid_argument("on-chip pump power must be >= 0");
  const double total = on_chip_power_mw * db_to_power(cfg.insertion_loss_db);
  return {total * cfg.split_fraction_upper, total * (1.0 - cfg.split_fraction_upper)};
}

PrcTransmission prc_transmission(const PrcConfig& cfg, double wavelength_nm) {
  double lo = cfg.window_min_nm, hi = cfg.window_max_nm;
  if (cfg.measured_curve) {
    lo = cfg.measured_curve->wavelengths_nm.front();
    hi = cfg.measured_curve->wavelengths_nm.back();
  }
  if (!(wavelength_nm >= lo && wavelength_nm <= hi))
    throw std::out_of_range("wavelength " + std::to_string(wavelength_nm) +
                            " nm outside PRC validity window [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]");
  PrcTransmission t;
  t.t_through_h = db_to_amplitude(cfg.through_insertion_loss_db);
  if (cfg.measured_curve) {
    const double db = curve_value_at(*cfg.measured_curve, wavelength_nm);
    t.t_cross_v = std::pow(10.0, db / 20.0);
  } else {
    const double detune = (wavelength_nm - cfg.cross_center_wavelength_nm) / cfg.cross_fwhm_nm;
    t.t_cross_v = db_to_amplitude(cfg.cross_insertion_loss_db) *
                  std::exp(-2.0 * std::numbers::ln2 * detune * detune);
  }
  t.leak_h = db_to_amplitude(cfg.extinction_h_db);
  t.leak_v = db_to_amplitude(cfg.extinction_v_db);
  return t;
}

pol::DensityMatrix synthesize_pair_state(const ChipConfig& cfg, double signal_wavelength_nm) {
  validate(cfg);
  const double pump_nm = pump_wavelength(cfg.pump, cfg.pump.reference_temperature_c);
  const double nu_i = 1.0 / pump_nm - 1.0 / signal_wavelength_nm;
  if (!(nu_i > 0.0))
    throw std::invalid_argument("signal wavelength incompatible with pump energy conservation");
  const double idler_nm = 1.0 / nu_i;

  const auto [p_upper, p_lower] = split_pump(cfg.mmi, 1.0);
  const PrcTransmission ts = prc_transmission(cfg.prc, signal_wavelength_nm);
  const PrcTransmission ti = prc_transmission(cfg.prc, idler_nm);

  const double amp_hh = std::sqrt(p_upper) * ts.t_through_h * ti.t_through_h;
  const double amp_vv = std::sqrt(p_lower) * ts.t_cross_v * ti.t_cross_v;
  // per-photon leak weight: power fraction 10^(-ER/10) into the orthogonal
  // polarization, first order only
  const double w_h = ts.leak_h * ts.leak_h;
  const double w_v = ts.leak_v * ts.leak_v;

  const std::complex<double> phase = std::exp(std::complex<double>(0.0, cfg.path_phase_rad));
  const std::complex<double> cross = amp_hh * w_h + amp_vv * w_v * phase;

  pol::Vec4 amplitudes;
  amplitudes << amp_hh, cross, cross, amp_vv * phase;
  if (!(amplitudes.norm() > 1e-12))
    throw std::runtime_error("degenerate pair state: all branch amplitudes vanish");
  const pol::StateVector psi(amplitudes);
  return pol::mix_white_noise(pol::densify(psi), cfg.noise_admixture);
}

MmiTreeFit mmi_tree_fit(const std::vector<std::pair<int, double>>& samples) {
  std::vector<int> counts;
  for (const auto& [n, p] : samples) counts.push_back(n);
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  if (counts.size() < 2)
    throw std::runtime_error("MMI-tree fit needs at least two distinct splitter counts");

  const double n = static_cast<double>(samples.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : samples) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : samples) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  const double slope = sxy / sxx;

  MmiTreeFit fit;
  fit.per_splitter_loss_db = -slope;
  fit.intercept_dbm = my - slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : samples) {
    const double r = y - (fit.intercept_dbm + slope * x);
    fit.residuals_db.push_back(r);
    ss += r * r;
  }
  fit.residual_rms_db = std::sqrt(ss / n);
  return fit;
}

namespace {

nlohmann::json pump_to_json(const PumpConfig& p) {
  return {{"reference_wavelength_nm", p.reference_wavelength_nm},
          {"reference_temperature_c", p.reference_temperature_c},
          {"tuning_slope_nm_per_c", p.tuning_slope_nm_per_c},
          {"emitted_power_mw", p.emitted_power_mw},
          {"coupling_efficiency", p.coupling_efficiency},
          {"polarization_extinction_db", p.polarization_extinction_db},
          {"side_mode_suppression_db", p.side_mode_suppression_db}};
}

nlohmann::json ppln_to_json(const PplnConfig& p) {
  return {{"length_mm", p.length_mm},
          {"poling_period_um", p.poling_period_um},
          {"peak_wavelength_nm", p.peak_wavelength_nm},
          {"reference_temperature_c", p.reference_temperature_c},
          {"shg_fwhm_nm", p.shg_fwhm_nm},
          {"temperature_slope_nm_per_c", p.temperature_slope_nm_per_c},
          {"normalized_shg_efficiency_pct_per_w_cm2", p.normalized_shg_efficiency_pct_per_w_cm2}};
}

PumpConfig pump_from_json(const nlohmann::json& j) {
  PumpConfig p;
  p.reference_wavelength_nm = j.at("reference_wavelength_nm").get<double>();
  p.reference_temperature_c = j.at("reference_temperature_c").get<double>();
  p.tuning_slope_nm_per_c = j.at("tuning_slope_nm_per_c").get<double>();
  p.emitted_power_mw = j.at("emitted_power_mw").get<double>();
  p.coupling_efficiency = j.at("coupling_efficiency").get<double>();
  p.polarization_extinction_db = j.value("polarization_extinction_db", 20.0);
  p.side_mode_suppression_db = j.value("side_mode_suppression_db", 40.0);
  return p;
}

PplnConfig ppln_from_json(const nlohmann::json& j) {
  PplnConfig p;
  p.length_mm = j.at("length_mm").get<double>();
  p.poling_period_um = j.at("poling_period_um").get<double>();
  p.peak_wavelength_nm = j.at("peak_wavelength_nm").get<double>();
  p.reference_temperature_c = j.at("reference_temperature_c").get<double>();
  p.shg_fwhm_nm = j.at("shg_fwhm_nm").get<double>();
  p.temperature_slope_nm_per_c = j.at("temperature_slope_nm_per_c").get<double>();
  p.normalized_shg_efficiency_pct_per_w_cm2 =
      j.value("normalized_shg_efficiency_pct_per_w_cm2", 0.0);
  return p;
}

}  // namespace

ChipConfig chip_from_json(const nlohmann::json& j) {
  ChipConfig cfg;
  cfg.pump = pump_from_json(j.at("pump"));
  cfg.mmi.split_fraction_upper = j.at("mmi").at("split_fraction_upper").get<double>();
  cfg.mmi.insertion_loss_db = j.at("mmi").at("insertion_loss_db").get<double>();
  cfg.ppln_upper = ppln_from_json(j.at("ppln_upper"));
  cfg.ppln_lower = ppln_from_json(j.at("ppln_lower"));
  const auto& pj = j.at("prc");
  cfg.prc.cross_center_wavelength_nm = pj.at("cross_center_wavelength_nm").get<double>();
  cfg.prc.cross_fwhm_nm = pj.at("cross_fwhm_nm").get<double>();
  cfg.prc.through_insertion_loss_db = pj.at("through_insertion_loss_db").get<double>();
  cfg.prc.cross_insertion_loss_db = pj.at("cross_insertion_loss_db").get<double>();
  cfg.prc.extinction_h_db = pj.at("extinction_h_db").get<double>();
  cfg.prc.extinction_v_db = pj.at("extinction_v_db").get<double>();
  cfg.prc.window_min_nm = pj.value("window_min_nm", 1400.0);
  cfg.prc.window_max_nm = pj.value("window_max_nm", 1700.0);
  cfg.path_phase_rad = j.value("path_phase_rad", 0.0);
  cfg.noise_admixture = j.value("noise_admixture", 0.0);
  validate(cfg);
  return cfg;
}

nlohmann::json chip_to_json(const ChipConfig& cfg) {
  nlohmann::json j;
  j["pump"] = pump_to_json(cfg.pump);
  j["mmi"] = {{"split_fraction_upper", cfg.mmi.split_fraction_upper},
              {"insertion_loss_db", cfg.mmi.insertion_loss_db}};
  j["ppln_upper"] = ppln_to_json(cfg.ppln_upper);
  j["ppln_lower"] = ppln_to_json(cfg.ppln_lower);
  j["prc"] = {{"cross_center_wavelength_nm", cfg.prc.cross_center_wavelength_nm},
              {"cross_fwhm_nm", cfg.prc.cross_fwhm_nm},
              {"through_insertion_loss_db", cfg.prc.through_insertion_loss_db},
              {"cross_insertion_loss_db", cfg.prc.cross_insertion_loss_db},
              {"extinction_h_db", cfg.prc.extinction_h_db},
              {"extinction_v_db", cfg.prc.extinction_v_db},
              {"window_min_nm", cfg.prc.window_min_nm},
              {"window_max_nm", cfg.prc.window_max_nm}};
  j["path_phase_rad"] = cfg.path_phase_rad;
  j["noise_admixture"] = cfg.noise_admixture;
  return j;
}

pm::SpectralCurve prc_curve_from_csv(const std::filesystem::path& path) {
  const io::CsvTable t = io::read_csv(path);
  if (t.header != std::vector<std::string>{"wavelength_nm", "transmission_db"})
    throw std::runtime_error("PRC curve CSV must have columns wavelength_nm,transmission_db");
  pm::SpectralCurve curve;
  curve.kind = pm::ValueKind::TransmissionDb;
  for (const auto& row : t.rows) {
    curve.wavelengths_nm.push_back(io::parse_double(row[0]));
    curve.values.push_back(io::parse_double(row[1]));
  }
  pm::validate_curve(curve);
  return curve;
}

}  // namespace epsim::chip
