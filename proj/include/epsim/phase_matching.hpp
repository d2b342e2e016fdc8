#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epsim/chip.hpp"
#include "epsim/spectral.hpp"

namespace epsim::pm {

/// Temperature-dependent Sellmeier form
///   n^2 = a1 + b1 f + (a2 + b2 f)/(L^2 - (a3 + b3 f)^2)
///         + (a4 + b4 f)/(L^2 - a5^2) - a6 L^2
/// with L in um and f = (T - 24.5)(T + 570.82).
struct SellmeierSet {
  double a1, a2, a3, a4, a5, a6;
  double b1, b2, b3, b4;
  double window_min_nm, window_max_nm;
  std::string origin;
};

/// Refractive-index source: analytic Sellmeier or sampled effective-index
/// data interpolated with a natural cubic spline. Sampled data carries no
/// temperature dependence.
class DispersionModel {
 public:
  /// Congruent LiNbO3 extraordinary index, coefficients from
  /// D. H. Jundt, Opt. Lett. 22, 1553 (1997); valid 400-5000 nm.
  static DispersionModel congruent_linbo3_extraordinary();

  /// Sampled effective indices; requires >= 5 strictly increasing wavelengths.
  static DispersionModel from_samples(std::vector<double> wavelengths_nm,
                                      std::vector<double> indices);
  static DispersionModel from_csv(const std::filesystem::path& path);

  bool is_sampled() const { return std::holds_alternative<Sampled>(source_); }
  std::pair<double, double> validity_window_nm() const;
  const std::string& description() const { return description_; }

  double index_at(double wavelength_nm, double temperature_c) const;

  std::vector<std::pair<double, double>> samples() const;

 private:
  struct Sampled {
    std::vector<double> wl;
    std::vector<double> n;
    std::vector<double> second_derivs;  // natural cubic spline coefficients
  };
  std::variant<SellmeierSet, Sampled> source_;
  std::string description_;
};

/// Effective-index surrogate for the dual-waveguide device, constructed so the
/// telecom band has zero group-velocity dispersion at degenerate_nm with a
/// quartic phase-mismatch profile sized to spdc_fwhm_nm, and the pump band
/// group index sits above the telecom one by the amount that yields
/// shg_fwhm_nm for a length_mm-long waveguide.
struct DeviceModelParams {
  double degenerate_nm = 1559.0;
  double spdc_fwhm_nm = 589.0;
  double shg_fwhm_nm = 3.85;
  double shg_peak_nm = 1558.5;
  double length_mm = 6.0;
  double n_telecom = 1.85;
  double group_index_telecom = 2.25;
  double n_pump = 2.05;
};

DispersionModel device_waveguide_model(const DeviceModelParams& params = {});

double refractive_index(const DispersionModel& model, double wavelength_nm,
                        double temperature_c);

/// Quasi-phase-matched mismatch in rad/m:
///   dk = 2 pi (n_p/l_p - n_s/l_s - n_i/l_i) - 2 pi / period
/// with the idler from energy conservation 1/l_p = 1/l_s + 1/l_i.
double qpm_mismatch(const DispersionModel& model, double pump_nm, double signal_nm,
                    double poling_period_um, double temperature_c);

/// Offset (rad/m) to subtract from qpm_mismatch so dk = 0 at the anchor.
double grating_offset(const DispersionModel& model, double pump_nm,
                      double signal_nm, double poling_period_um,
                      double temperature_c);

/// Normalized sinc^2 second-harmonic tuning curve over fundamental
/// wavelengths. The grating offset is calibrated per call so the peak sits at
/// peak_wavelength_nm + temperature_slope * (T - reference_temperature).
SpectralCurve shg_tuning_curve(const DispersionModel& model,
                               const chip::PplnConfig& cfg,
                               const std::vector<double>& grid_nm,
                               double temperature_c);

double temperature_peak_shift(const chip::PplnConfig& cfg, double t1_c, double t2_c);

/// Normalized sinc^2 pair spectrum over signal wavelengths for a fixed pump;
/// calibrated so dk = 0 at the degenerate point 2*pump.
SpectralCurve spdc_spectrum(const DispersionModel& model, const chip::PplnConfig& cfg,
                            double pump_nm, const std::vector<double>& grid_nm,
                            double temperature_c = 67.0);

/// Group-velocity dispersion beta2 = lambda^3/(2 pi c^2) d2n/dlambda2 in
/// ps^2/km. Second derivative by central differences with a 120 nm stencil on
/// the (spline-resampled) data, or directly on the Sellmeier form.
SpectralCurve gvd_curve(const DispersionModel& model, const std::vector<double>& grid_nm);

/// Width between the half-maximum crossings adjacent to the global maximum
/// (main lobe only), linearly interpolated. Throws std::runtime_error when a
/// crossing falls outside the grid.
double fwhm(const SpectralCurve& curve);

DispersionModel dispersion_from_csv(const std::filesystem::path& path);
void dispersion_to_csv(const DispersionModel& model, const std::filesystem::path& path);

}  // namespace epsim::pm
