#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "epsim/polarization.hpp"

namespace epsim::counting {

struct DetectorConfig {
  double efficiency_signal = 1.0;
  double efficiency_idler = 1.0;
  double dark_rate_hz = 0.0;          // per detector
  double coincidence_window_s = 2e-9;
  double integration_time_s = 1.0;
  double dwdm_bandwidth_nm = 1.6;
};

void validate(const DetectorConfig& det);

/// One analyzer setting's worth of counting data. The coincidences field is
/// the recorded rate at the output of the coincidence window, so it carries
/// the accidental floor; accidentals holds the separately measured accidental
/// rate. All rates are raw counts divided by integration time.
struct CountRecord {
  double singles_signal_hz = 0.0;
  double singles_idler_hz = 0.0;
  double coincidences_hz = 0.0;
  double accidentals_hz = 0.0;
  double integration_time_s = 0.0;
  double pump_power_mw = 0.0;
  pol::AnalyzerSetting setting;
  std::uint64_t raw_singles_signal = 0;
  std::uint64_t raw_singles_idler = 0;
  std::uint64_t raw_coincidences = 0;
  std::uint64_t raw_accidentals = 0;
};

/// Born-rule coincidence probability Tr(rho P_s (x) P_i).
double coincidence_probability(const pol::DensityMatrix& rho,
                               const pol::AnalyzerSetting& setting);

/// Poisson counting at one setting. Expected rates:
///   true coincidences = pair_rate * p(setting) * eta_s * eta_i
///   singles           = pair_rate * p_marginal * eta + dark
///   accidentals       = singles_s * singles_i * window
/// Raw counts are drawn from Poisson(rate * time) in the fixed order
/// (singles_s, singles_i, coincidences, accidentals) from the supplied seed;
/// the recorded coincidence mean is the true rate plus the accidental rate.
CountRecord simulate_counts(const pol::DensityMatrix& rho,
                            const pol::AnalyzerSetting& setting, double pair_rate_hz,
                            const DetectorConfig& det, std::uint64_t rng_seed);

double accidental_rate(double singles_signal_hz, double singles_idler_hz,
                       double coincidence_window_s);

struct BrightnessReport {
  double brightness = 0.0;        // pairs / s / nm / mW
  double pgr = 0.0;               // pairs / s / mW
  double bandwidth_used_nm = 0.0; // source bandwidth behind the PGR
};

/// B = Rs Ri / ((Rcc - Rac) P dL) with the true pair rate Rcc - Rac in the
/// denominator; PGR = B * source_bandwidth_nm.
BrightnessReport brightness(const CountRecord& record, double dwdm_bandwidth_nm,
                            double source_bandwidth_nm);

/// Fringe contrast (Cmax - Cmin)/(Cmax + Cmin) over a set of analyzer-sweep
/// records, optionally after subtracting each record's accidental rate.
double visibility(const std::vector<CountRecord>& records,
                  bool subtract_accidentals = true);

enum class FringeBasis { HV, AD };

/// Analytic fringe visibility of a state: one arm fixed at H (HV) or D (AD),
/// the other swept over linear analyzer angles.
double visibility_analytic(const pol::DensityMatrix& rho, FringeBasis basis);

struct ChshResult {
  double s = 0.0;
  bool violation = false;
};

/// S = 2 sqrt(2) V; violation flagged strictly when S > 2.
ChshResult chsh_s_from_visibility(double v);

/// Fixed column layout, angles in degrees, rates in Hz; see counts_ schema.
void write_count_records_csv(const std::filesystem::path& path,
                             const std::vector<CountRecord>& records,
                             const std::vector<std::string>& basis_labels = {});
std::vector<CountRecord> read_count_records_csv(const std::filesystem::path& path);

}  // namespace epsim::counting
