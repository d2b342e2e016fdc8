#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "epsim/counting.hpp"
#include "epsim/polarization.hpp"

namespace epsim::tomo {

/// The 16 product projectors onto {H, V, D, R} x {H, V, D, R}, ordered with
/// the signal basis outermost (setting k = 4*signal + idler). Realization with
/// the polarizer fixed at 0 per arm:
///   H: (qwp 0,    hwp 0,      pol 0)
///   V: (qwp 0,    hwp pi/4,   pol 0)
///   D: (qwp pi/4, hwp 7pi/8,  pol 0)
///   R: (qwp pi/4, hwp 0,      pol 0)   -> projector onto (|H> - i|V>)/sqrt(2)
struct TomographySettingSet {
  std::array<pol::AnalyzerSetting, 16> settings;
  std::array<pol::Mat4, 16> projectors;
  std::array<std::string, 16> labels;
};

TomographySettingSet tomo_settings();

struct TomographyData {
  std::array<double, 16> counts{};
  std::array<double, 16> accidentals{};
  double total_flux_normalization = 0.0;  // <= 0 means derive from H/V block
};

struct SubtractionResult {
  TomographyData data;
  std::vector<int> clipped_settings;
};

/// counts' = max(counts - accidentals, 0); settings that clipped are listed.
SubtractionResult subtract_accidentals(const TomographyData& data);

/// Closed-form solve of <P_k, rho> = counts_k / flux over the two-qubit Pauli
/// basis. Hermitian and unit trace by construction; PSD not guaranteed.
pol::Mat4 linear_inversion(const TomographyData& data, const TomographySettingSet& settings);

/// 16 real parameters of the lower-triangular factor T (real diagonal first,
/// then the complex sub-diagonal entries row by row); rho = T^dag T / tr.
struct TParams {
  std::array<double, 16> x{};
};

pol::Mat4 density_from_tparams(const TParams& t);
TParams tparams_from_density(const pol::Mat4& rho);

/// Poisson log-likelihood with the shared flux normalization profiled out,
/// and its analytic gradient in the 16 T parameters.
double profile_log_likelihood(const std::array<double, 16>& counts,
                              const TomographySettingSet& settings, const TParams& t);
std::array<double, 16> profile_log_likelihood_gradient(
    const std::array<double, 16>& counts, const TomographySettingSet& settings,
    const TParams& t);

struct MleOptions {
  double grad_tol = 1e-8;
  double f_tol = 1e-12;  // relative likelihood change
  int max_iter = 2000;
  bool track_likelihood = false;
};

struct ReconstructionResult {
  pol::DensityMatrix rho;
  double fidelity_to_bell = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> likelihood_trace;  // accepted iterations, when tracked
};

/// Maximum-likelihood reconstruction: L-BFGS ascent on the T parameters with
/// Armijo backtracking, initialized from the PSD-projected linear inversion.
ReconstructionResult mle_reconstruct(const TomographyData& data,
                                     const TomographySettingSet& settings,
                                     const MleOptions& opts = {});

struct MetricsBundle {
  double fidelity = 0.0;
  double purity = 0.0;
  double v_hv = 0.0;
  double v_ad = 0.0;
  double chsh_s = 0.0;
  bool chsh_violation = false;
};

/// Fidelity to (|HH> + |VV>)/sqrt(2), purity, analytic H/V and A/D
/// visibilities, and CHSH S from the A/D visibility.
MetricsBundle report_metrics(const ReconstructionResult& result);

/// Align a 16-record batch (in canonical setting order) into TomographyData;
/// counts are raw coincidences, accidentals are the per-setting raw accidental
/// counts.
TomographyData data_from_count_records(const std::vector<counting::CountRecord>& records);

/// rho real/imag CSV matrices plus a metrics JSON, named by channel label.
void write_reconstruction(const std::filesystem::path& out_dir, const std::string& label,
                          const ReconstructionResult& result, const MetricsBundle& metrics);

}  // namespace epsim::tomo
