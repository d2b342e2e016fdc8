#include "epsim/phase_matching.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "epsim/io.hpp"

namespace epsim::pm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpeedOfLight = 299792458.0;  // m/s

// half-maximum argument of sinc^2: sin(x)^2/x^2 = 1/2
constexpr double kSincHalfMax = 1.39155737825151;

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double sellmeier_index(const SellmeierSet& s, double wavelength_nm, double temperature_c) {
  const double lam = wavelength_nm * 1e-3;  // um
  const double lam2 = lam * lam;
  const double f = (temperature_c - 24.5) * (temperature_c + 570.82);
  const double a3f = s.a3 + s.b3 * f;
  const double n2 = s.a1 + s.b1 * f + (s.a2 + s.b2 * f) / (lam2 - a3f * a3f) +
                    (s.a4 + s.b4 * f) / (lam2 - s.a5 * s.a5) - s.a6 * lam2;
  if (!(n2 > 0.0)) throw std::out_of_range("Sellmeier form undefined at this wavelength");
  return std::sqrt(n2);
}

// Natural cubic spline second derivatives (Thomas algorithm).
std::vector<double> spline_second_derivs(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0), diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1];
    const double hr = x[i + 1] - x[i];
    diag[i] = (hl + hr) / 3.0;
    upper[i] = hr / 6.0;
    rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
  }
  // forward sweep over interior rows; lower coefficient of row i is hl/6
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1];
    const double w = (hl / 6.0) / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    if (i == 1) break;
  }
  return m;
}

double spline_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& m, double q) {
  const auto it = std::upper_bound(x.begin(), x.end(), q);
  std::size_t hi = static_cast<std::size_t>(it - x.begin());
  if (hi == 0) hi = 1;
  if (hi >= x.size()) hi = x.size() - 1;
  const std::size_t lo = hi - 1;
  const double h = x[hi] - x[lo];
  const double a = (x[hi] - q) / h;
  const double b = (q - x[lo]) / h;
  return a * y[lo] + b * y[hi] +
         ((a * a * a - a) * m[lo] + (b * b * b - b) * m[hi]) * h * h / 6.0;
}

}  // namespace

DispersionModel DispersionModel::congruent_linbo3_extraordinary() {
  DispersionModel model;
  SellmeierSet s{};
  s.a1 = 5.35583;
  s.a2 = 0.100473;
  s.a3 = 0.20692;
  s.a4 = 100.0;
  s.a5 = 11.34927;
  s.a6 = 1.5334e-2;
  s.b1 = 4.629e-7;
  s.b2 = 3.862e-8;
  s.b3 = -0.89e-8;
  s.b4 = 2.657e-5;
  s.window_min_nm = 400.0;
  s.window_max_nm = 5000.0;
  s.origin = "D. H. Jundt, Opt. Lett. 22, 1553 (1997), congruent LiNbO3 n_e";
  model.source_ = s;
  model.description_ = "sellmeier:congruent-linbo3-ne";
  return model;
}

DispersionModel DispersionModel::from_samples(std::vector<double> wavelengths_nm,
                                              std::vector<double> indices) {
  if (wavelengths_nm.size() != indices.size())
    throw std::invalid_argument("sampled dispersion arrays differ in length");
  if (wavelengths_nm.size() < 5)
    throw std::invalid_argument("sampled dispersion needs >= 5 points for derivative estimates");
  for (std::size_t i = 1; i < wavelengths_nm.size(); ++i) {
    if (!(wavelengths_nm[i] > wavelengths_nm[i - 1]))
      throw std::invalid_argument("sampled dispersion grid must be strictly increasing");
  }
  DispersionModel model;
  Sampled s;
  s.wl = std::move(wavelengths_nm);
  s.n = std::move(indices);
  s.second_derivs = spline_second_derivs(s.wl, s.n);
  model.source_ = std::move(s);
  model.description_ = "sampled";
  return model;
}

DispersionModel DispersionModel::from_csv(const std::filesystem::path& path) {
  const io::CsvTable t = io::read_csv(path);
  if (t.header != std::vector<std::string>{"wavelength_nm", "effective_index"})
    throw std::runtime_error("dispersion CSV must have columns wavelength_nm,effective_index");
  std::vector<double> wl, n;
  for (const auto& row : t.rows) {
    wl.push_back(io::parse_double(row[0]));
    n.push_back(io::parse_double(row[1]));
  }
  DispersionModel model = from_samples(std::move(wl), std::move(n));
  model.description_ = "sampled:" + path.filename().string();
  return model;
}

std::pair<double, double> DispersionModel::validity_window_nm() const {
  if (const auto* s = std::get_if<SellmeierSet>(&source_))
    return {s->window_min_nm, s->window_max_nm};
  const auto& d = std::get<Sampled>(source_);
  return {d.wl.front(), d.wl.back()};
}

double DispersionModel::index_at(double wavelength_nm, double temperature_c) const {
  const auto [lo, hi] = validity_window_nm();
  if (!(wavelength_nm >= lo && wavelength_nm <= hi))
    throw std::out_of_range("wavelength " + std::to_string(wavelength_nm) +
                            " nm outside dispersion validity window [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (const auto* s = std::get_if<SellmeierSet>(&source_))
    return sellmeier_index(*s, wavelength_nm, temperature_c);
  const auto& d = std::get<Sampled>(source_);
  return spline_eval(d.wl, d.n, d.second_derivs, wavelength_nm);
}

std::vector<std::pair<double, double>> DispersionModel::samples() const {
  std::vector<std::pair<double, double>> out;
  if (const auto* d = std::get_if<Sampled>(&source_)) {
    out.reserve(d->wl.size());
    for (std::size_t i = 0; i < d->wl.size(); ++i) out.emplace_back(d->wl[i], d->n[i]);
  }
  return out;
}

DispersionModel device_waveguide_model(const DeviceModelParams& p) {
  const double nu0 = 1.0 / p.degenerate_nm;
  const double length_nm = p.length_mm * 1e6;

  // quartic mismatch sized so the sinc^2 half-max crossings span spdc_fwhm_nm
  const double w = p.spdc_fwhm_nm;
  const double omega_h = (-1.0 + std::sqrt(1.0 + w * w * nu0 * nu0)) / w;
  const double a4 =
      12.0 * (2.0 * kSincHalfMax / length_nm) / (2.0 * kPi * std::pow(omega_h, 4));

  // pump-band group index above telecom by the SHG acceptance requirement
  const double dng = p.shg_peak_nm * p.shg_peak_nm * kSincHalfMax /
                     (kPi * length_nm * p.shg_fwhm_nm);
  const double ng_pump = p.group_index_telecom + dng;

  const double a0 = p.n_telecom * nu0;
  const double nu_p0 = 2.0 / p.shg_peak_nm;
  const double b0 = p.n_pump * nu_p0;

  auto n_tel = [&](double lam) {
    const double nu = 1.0 / lam;
    const double om = nu - nu0;
    return (a0 + p.group_index_telecom * om + a4 * std::pow(om, 4) / 24.0) / nu;
  };
  auto n_pmp = [&](double lam) {
    const double nu = 1.0 / lam;
    return (b0 + ng_pump * (nu - nu_p0)) / nu;
  };
  auto deriv = [](auto f, double lam) {
    const double h = 0.05;
    return (f(lam + h) - f(lam - h)) / (2.0 * h);
  };

  std::vector<double> wl, n;
  const double pump_lo = 750.0, pump_hi = 810.0;
  const double tel_lo = 1150.0, tel_hi = 2350.0;
  for (double lam = pump_lo; lam < pump_hi + 0.25; lam += 0.5) {
    wl.push_back(lam);
    n.push_back(n_pmp(lam));
  }
  // C1 Hermite bridge between the bands (never queried by the physics ops)
  {
    const double x0 = pump_hi, x1 = tel_lo;
    const double y0 = n_pmp(x0), y1 = n_tel(x1);
    const double d0 = deriv(n_pmp, x0), d1 = deriv(n_tel, x1);
    const double span = x1 - x0;
    for (double lam = x0 + 2.0; lam < x1 - 1.0; lam += 2.0) {
      const double t = (lam - x0) / span;
      const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
      const double h10 = t * (1 - t) * (1 - t);
      const double h01 = t * t * (3 - 2 * t);
      const double h11 = t * t * (t - 1);
      wl.push_back(lam);
      n.push_back(h00 * y0 + h10 * span * d0 + h01 * y1 + h11 * span * d1);
    }
  }
  for (double lam = tel_lo; lam < tel_hi + 0.5; lam += 1.0) {
    wl.push_back(lam);
    n.push_back(n_tel(lam));
  }

  return DispersionModel::from_samples(std::move(wl), std::move(n));
}

double refractive_index(const DispersionModel& model, double wavelength_nm,
                        double temperature_c) {
  return model.index_at(wavelength_nm, temperature_c);
}

double qpm_mismatch(const DispersionModel& model, double pump_nm, double signal_nm,
                    double poling_period_um, double temperature_c) {
  if (!(poling_period_um > 0.0)) throw std::invalid_argument("poling period must be > 0");
  const double nu_p = 1.0 / pump_nm;
  const double nu_s = 1.0 / signal_nm;
  const double nu_i = nu_p - nu_s;
  if (!(nu_i > 0.0))
    throw std::out_of_range("signal wavelength shorter than pump leaves no idler");
  const double idler_nm = 1.0 / nu_i;
  const double n_p = model.index_at(pump_nm, temperature_c);
  const double n_s = model.index_at(signal_nm, temperature_c);
  const double n_i = model.index_at(idler_nm, temperature_c);
  const double period_nm = poling_period_um * 1e3;
  const double dk_per_nm =
      2.0 * kPi * (n_p * nu_p - n_s * nu_s - n_i * nu_i) - 2.0 * kPi / period_nm;
  return dk_per_nm * 1e9;  // rad/m
}

double grating_offset(const DispersionModel& model, double pump_nm, double signal_nm,
                      double poling_period_um, double temperature_c) {
  return qpm_mismatch(model, pump_nm, signal_nm, poling_period_um, temperature_c);
}

SpectralCurve shg_tuning_curve(const DispersionModel& model, const chip::PplnConfig& cfg,
                               const std::vector<double>& grid_nm, double temperature_c) {
  const double target_peak =
      cfg.peak_wavelength_nm +
      cfg.temperature_slope_nm_per_c * (temperature_c - cfg.reference_temperature_c);
  const double offset = grating_offset(model, target_peak / 2.0, target_peak,
                                       cfg.poling_period_um, temperature_c);
  const double half_length_m = 0.5 * cfg.length_mm * 1e-3;
  SpectralCurve curve;
  curve.kind = ValueKind::NormalizedIntensity;
  curve.wavelengths_nm = grid_nm;
  curve.values.reserve(grid_nm.size());
  for (double lam : grid_nm) {
    const double dk =
        qpm_mismatch(model, lam / 2.0, lam, cfg.poling_period_um, temperature_c) - offset;
    const double s = sinc(dk * half_length_m);
    curve.values.push_back(s * s);
  }
  validate_curve(curve);
  return curve;
}

double temperature_peak_shift(const chip::PplnConfig& cfg, double t1_c, double t2_c) {
  return cfg.temperature_slope_nm_per_c * (t2_c - t1_c);
}

SpectralCurve spdc_spectrum(const DispersionModel& model, const chip::PplnConfig& cfg,
                            double pump_nm, const std::vector<double>& grid_nm,
                            double temperature_c) {
  const double offset = grating_offset(model, pump_nm, 2.0 * pump_nm,
                                       cfg.poling_period_um, temperature_c);
  const double half_length_m = 0.5 * cfg.length_mm * 1e-3;
  SpectralCurve curve;
  curve.kind = ValueKind::NormalizedIntensity;
  curve.wavelengths_nm = grid_nm;
  curve.values.reserve(grid_nm.size());
  for (double lam : grid_nm) {
    const double dk =
        qpm_mismatch(model, pump_nm, lam, cfg.poling_period_um, temperature_c) - offset;
    const double s = sinc(dk * half_length_m);
    curve.values.push_back(s * s);
  }
  validate_curve(curve);
  return curve;
}

SpectralCurve gvd_curve(const DispersionModel& model, const std::vector<double>& grid_nm) {
  const auto [lo, hi] = model.validity_window_nm();
  // Wide stencil keeps the eps-level cancellation in sampled data below
  // 1e-9 ps^2/km while the O(h^2) truncation stays under 1% for smooth models.
  const double h_default = model.is_sampled() ? 70.0 : 1.0;
  SpectralCurve curve;
  curve.kind = ValueKind::GvdPs2PerKm;
  curve.wavelengths_nm = grid_nm;
  curve.values.reserve(grid_nm.size());
  const double temperature_c = 25.0;
  for (double lam : grid_nm) {
    double h = std::min({h_default, lam - lo, hi - lam});
    if (!(h >= 0.5))
      throw std::out_of_range("GVD stencil does not fit the validity window at " +
                              std::to_string(lam) + " nm");
    const double d2_per_nm2 = (model.index_at(lam + h, temperature_c) -
                               2.0 * model.index_at(lam, temperature_c) +
                               model.index_at(lam - h, temperature_c)) /
                              (h * h);
    const double d2_per_m2 = d2_per_nm2 * 1e18;
    const double lam_m = lam * 1e-9;
    const double beta2_si =
        lam_m * lam_m * lam_m / (2.0 * kPi * kSpeedOfLight * kSpeedOfLight) * d2_per_m2;
    curve.values.push_back(beta2_si * 1e27);  // ps^2/km
  }
  return curve;
}

double fwhm(const SpectralCurve& curve) {
  validate_curve(curve);
  const auto& wl = curve.wavelengths_nm;
  const auto& v = curve.values;
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
  const double half = v[peak] / 2.0;
  if (!(v[peak] > 0.0)) throw std::runtime_error("curve has no positive maximum");

  auto cross = [&](int dir) {
    std::size_t i = peak;
    while (true) {
      const std::size_t next = i + dir;
      if (next >= v.size())  // unsigned wrap covers both ends
        throw std::runtime_error(
            "half-maximum crossing outside grid; widen the wavelength grid");
      if (v[next] < half) {
        const double t = (half - v[i]) / (v[next] - v[i]);
        return wl[i] + t * (wl[next] - wl[i]);
      }
      i = next;
    }
  };
  return cross(+1) - cross(-1);
}

DispersionModel dispersion_from_csv(const std::filesystem::path& path) {
  return DispersionModel::from_csv(path);
}

void dispersion_to_csv(const DispersionModel& model, const std::filesystem::path& path) {
  const auto samples = model.samples();
  if (samples.empty())
    throw std::runtime_error("analytic dispersion model has no samples to export");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(samples.size());
  for (const auto& [wl, n] : samples)
    rows.push_back({io::format_double(wl), io::format_double(n)});
  io::write_csv(path, {"wavelength_nm", "effective_index"}, rows);
}

}  // namespace epsim::pm
