#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "epsim/polarization.hpp"
#include "epsim/spectral.hpp"
#include "json.hpp"

namespace epsim::chip {

/// DFB pump laser: linear thermal wavelength tuning around a reference point.
struct PumpConfig {
  double reference_wavelength_nm = 779.5;
  double reference_temperature_c = 21.0;
  double tuning_slope_nm_per_c = 0.067;
  double emitted_power_mw = 7.5;
  double coupling_efficiency = 0.10;
  double polarization_extinction_db = 20.0;
  double side_mode_suppression_db = 40.0;
};

struct MmiConfig {
  double split_fraction_upper = 0.5;
  double insertion_loss_db = 3.1;
};

/// One periodically poled waveguide. peak_wavelength_nm is the fundamental
/// wavelength of maximum second-harmonic conversion measured at
/// reference_temperature_c; the peak moves linearly with temperature at
/// temperature_slope_nm_per_c.
struct PplnConfig {
  double length_mm = 6.0;
  double poling_period_um = 4.13;
  double peak_wavelength_nm = 1558.50;
  double reference_temperature_c = 67.0;
  double shg_fwhm_nm = 3.85;
  double temperature_slope_nm_per_c = 0.269;
  double normalized_shg_efficiency_pct_per_w_cm2 = 3300.0;
};

/// Polarization rotator-combiner. The upper (through) path keeps H with a flat
/// insertion loss; the lower (cross) path converts to V with a bell-shaped
/// conversion spectrum, overridable by a measured curve (transmission in dB).
struct PrcConfig {
  double cross_center_wavelength_nm = 1559.0;
  double cross_fwhm_nm = 160.0;
  double through_insertion_loss_db = 2.5;
  double cross_insertion_loss_db = 3.3;
  double extinction_h_db = 19.3;
  double extinction_v_db = 15.5;
  double window_min_nm = 1400.0;
  double window_max_nm = 1700.0;
  std::optional<pm::SpectralCurve> measured_curve;
};

struct ChipConfig {
  PumpConfig pump;
  MmiConfig mmi;
  PplnConfig ppln_upper;
  PplnConfig ppln_lower;
  PrcConfig prc;
  double path_phase_rad = 0.0;   // phase between the HH and VV branches
  double noise_admixture = 0.0;  // isotropic admixture applied to the pair state
};

/// Throws std::invalid_argument listing every failing field.
void validate(const ChipConfig& cfg);

/// Emission wavelength at the given laser temperature.
double pump_wavelength(const PumpConfig& cfg, double temperature_c);

/// (upper, lower) arm powers in mW after splitter insertion loss.
std::pair<double, double> split_pump(const MmiConfig& cfg, double on_chip_power_mw);

/// Field-amplitude fractions at one wavelength: through transmission for H,
/// cross conversion for V, and the leakage amplitudes 10^(-ER/20) into the
/// orthogonal polarization of each path.
struct PrcTransmission {
  double t_through_h = 0.0;
  double t_cross_v = 0.0;
  double leak_h = 0.0;
  double leak_v = 0.0;
};

PrcTransmission prc_transmission(const PrcConfig& cfg, double wavelength_nm);

/// Emitted two-photon polarization state at the given signal wavelength.
/// The idler wavelength follows from energy conservation with the pump at its
/// reference temperature. Branch amplitudes scale with sqrt(arm pump power)
/// and the per-photon field transmissions; HV/VH terms carry one per-photon
/// extinction leak each, weighted by the leak power ratio 10^(-ER/10)
/// (first order only, double-leak terms dropped). The normalized state is
/// densified and mixed with noise_admixture of white noise.
pol::DensityMatrix synthesize_pair_state(const ChipConfig& cfg, double signal_wavelength_nm);

/// Least-squares fit of output power (dBm) against splitter count.
struct MmiTreeFit {
  double per_splitter_loss_db = 0.0;
  double intercept_dbm = 0.0;
  double residual_rms_db = 0.0;
  std::vector<double> residuals_db;
};

MmiTreeFit mmi_tree_fit(const std::vector<std::pair<int, double>>& samples);

ChipConfig chip_from_json(const nlohmann::json& j);
nlohmann::json chip_to_json(const ChipConfig& cfg);

/// Two-column CSV (wavelength_nm, transmission_db) for the PRC cross path.
pm::SpectralCurve prc_curve_from_csv(const std::filesystem::path& path);

}  // namespace epsim::chip
