// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "epsim/chip.hpp"
#include "epsim/counting.hpp"
#include "epsim/io.hpp"
#include "epsim/phase_matching.hpp"
#include "epsim/polarization.hpp"
#include "epsim/rng.hpp"
#include "epsim/scenario.hpp"
#include "epsim/tomography.hpp"

using namespace epsim;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const fs::path kDataDir = EPSIM_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

#define REQUIRE_NEAR(out, value, target, tol)                                    \
  do {                                                                           \
    const double v_ = (value), t_ = (target), d_ = std::abs(v_ - t_);            \
    if (!(d_ <= (tol))) {                                                        \
      out.pass = false;                                                          \
      out.detail << " [" #value " = " << v_ << " vs " << t_ << " +- " << (tol)   \
                 << "]";                                                         \
    }                                                                            \
  } while (0)

#define REQUIRE_TRUE(out, cond)                           \
  do {                                                    \
    if (!(cond)) {                                        \
      out.pass = false;                                   \
      out.detail << " [failed: " #cond "]";               \
    }                                                     \
  } while (0)

pol::DensityMatrix haar_pure(rng::Rng& rng) {
  pol::Vec4 a;
  for (int i = 0; i < 4; ++i) a(i) = {rng.normal(), rng.normal()};
  return pol::densify(pol::StateVector(a));
}

pol::DensityMatrix random_mixed(rng::Rng& rng) {
  pol::Mat4 t;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = {rng.normal(), rng.normal()};
  pol::Mat4 m = t.adjoint() * t;
  m /= m.trace().real();
  pol::DensityMatrix rho;
  rho.m = 0.5 * (m + pol::Mat4(m.adjoint()));
  return rho;
}

tomo::TomographyData noiseless_counts(const pol::DensityMatrix& rho,
                                      const tomo::TomographySettingSet& settings,
                                      double flux) {
  tomo::TomographyData data;
  for (int k = 0; k < 16; ++k)
    data.counts[k] =
        std::max(flux * (rho.m * settings.projectors[k]).trace().real(), 0.0);
  return data;
}

std::vector<double> linspace(double lo, double hi, double step) {
  std::vector<double> g;
  for (double x = lo; x <= hi + 1e-9; x += step) g.push_back(x);
  return g;
}

// 1. Brightness reproduction from the published operating point.
Outcome criterion_brightness() {
  Outcome out;
  counting::CountRecord rec;
  rec.singles_signal_hz = 215e3;
  rec.singles_idler_hz = 92e3;
  rec.coincidences_hz = 1100.0;
  rec.accidentals_hz = 29.0;
  rec.pump_power_mw = 0.0188;
  rec.integration_time_s = 1.0;
  const auto rep = counting::brightness(rec, 1.6, 73.0);
  out.detail << "B = " << rep.brightness << " pairs/s/nm/mW, PGR = " << rep.pgr
             << " pairs/s/mW";
  REQUIRE_TRUE(out, std::abs(rep.brightness - 6.2e8) / 6.2e8 < 0.03);
  REQUIRE_TRUE(out, std::abs(rep.pgr - 4.5e10) / 4.5e10 < 0.03);
  return out;
}

// 2. Bundled reference scenario reconstructs F in [0.96, 0.98] per channel.
Outcome criterion_fidelity_reproduction(const fs::path& out_dir) {
  Outcome out;
  const auto report =
      scenario::run_scenario(kDataDir / "paper_repro.jsonc", out_dir);
  REQUIRE_TRUE(out, report.channels.size() == 3);
  for (const auto& ch : report.channels) {
    out.detail << ch.label << ": F = " << ch.fidelity << "  ";
    REQUIRE_TRUE(out, ch.converged);
    if (!(ch.fidelity >= 0.96 && ch.fidelity <= 0.98)) {
      out.pass = false;
      out.detail << "[outside 0.96..0.98] ";
    }
  }
  return out;
}

// 3. A/D fringe visibility at 1e6 coincidences and the CHSH threshold.
Outcome criterion_visibility_chsh() {
  Outcome out;
  pol::DensityMatrix rho;
  rho.m = 0.975 * pol::densify(pol::bell_state(pol::BellKind::PhiPlus)).m +
          0.025 * 0.25 * pol::Mat4::Identity();

  counting::DetectorConfig det;  // ideal detection, fringe statistics only
  det.coincidence_window_s = 0.0;
  det.integration_time_s = 1.0;
  std::vector<counting::CountRecord> records;
  for (int k = 0; k < 8; ++k) {
    const pol::AnalyzerSetting setting{pol::linear_arm(kPi / 4.0),
                                       pol::linear_arm(k * kPi / 8.0)};
    records.push_back(counting::simulate_counts(rho, setting, 5.0e5, det, 9000 + k));
  }
  double total = 0.0;
  for (const auto& r : records) total += static_cast<double>(r.raw_coincidences);
  const double v = counting::visibility(records);
  out.detail << "V = " << v << " from " << total << " coincidences";
  REQUIRE_NEAR(out, v, 0.975, 0.005);

  REQUIRE_TRUE(out, counting::chsh_s_from_visibility(0.71).violation);
  REQUIRE_TRUE(out, counting::chsh_s_from_visibility(0.71).s > 2.0);
  REQUIRE_TRUE(out,
               !counting::chsh_s_from_visibility(1.0 / std::sqrt(2.0) - 1e-9).violation);
  REQUIRE_TRUE(out,
               counting::chsh_s_from_visibility(1.0 / std::sqrt(2.0) + 1e-9).violation);
  return out;
}

// 4. MLE equals the linear-inversion oracle on noiseless data.
Outcome criterion_oracle_equivalence() {
  Outcome out;
  const auto settings = tomo::tomo_settings();
  rng::Rng rng(424242);
  double worst_gap = 0.0, worst_fid = 1.0;
  for (int rep = 0; rep < 200; ++rep) {
    pol::Vec4 a;
    for (int i = 0; i < 4; ++i) a(i) = {rng.normal(), rng.normal()};
    const pol::StateVector psi(a);
    const auto rho = pol::densify(psi);
    const auto data = noiseless_counts(rho, settings, 1e6);
    const pol::Mat4 lin = tomo::linear_inversion(data, settings);
    const auto mle = tomo::mle_reconstruct(data, settings);
    worst_gap = std::max(worst_gap, (mle.rho.m - lin).cwiseAbs().maxCoeff());
    worst_fid = std::min(worst_fid, pol::fidelity(mle.rho, psi));
  }
  out.detail << "max |rho_mle - rho_lin| = " << worst_gap
             << ", min round-trip fidelity = " << worst_fid;
  REQUIRE_TRUE(out, worst_gap < 1e-6);
  REQUIRE_TRUE(out, worst_fid >= 0.9999);
  return out;
}

// 5. Analytic likelihood gradient against central finite differences.
Outcome criterion_gradient_check() {
  Outcome out;
  const auto settings = tomo::tomo_settings();
  rng::Rng rng(515151);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::array<double, 16> counts;
    for (auto& c : counts) c = std::floor(2000.0 * rng.uniform());
    tomo::TParams x;
    for (auto& v : x.x) v = rng.normal();
    const auto grad = tomo::profile_log_likelihood_gradient(counts, settings, x);
    for (int j = 0; j < 16; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x.x[j]));
      auto xp = x, xm = x;
      xp.x[j] += h;
      xm.x[j] -= h;
      const double fd = (tomo::profile_log_likelihood(counts, settings, xp) -
                         tomo::profile_log_likelihood(counts, settings, xm)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(grad[j] - fd) /
                                  std::max({std::abs(grad[j]), std::abs(fd), 1.0}));
    }
  }
  out.detail << "max relative gradient error = " << worst;
  REQUIRE_TRUE(out, worst < 1e-5);
  return out;
}

// 6. Calibrated SHG tuning curve: peak, width, 1/L scaling.
Outcome criterion_shg() {
  Outcome out;
  const auto model = pm::device_waveguide_model();
  chip::PplnConfig cfg;  // upper guide: 6 mm, peak 1558.50 at 67 C
  const auto grid = linspace(1548.0, 1570.0, 0.01);
  const auto curve = pm::shg_tuning_curve(model, cfg, grid, 67.0);
  const auto it = std::max_element(curve.values.begin(), curve.values.end());
  const double peak =
      curve.wavelengths_nm[static_cast<std::size_t>(it - curve.values.begin())];
  const double width6 = pm::fwhm(curve);
  out.detail << "peak = " << peak << " nm, FWHM(6 mm) = " << width6 << " nm";
  REQUIRE_NEAR(out, peak, 1558.50, 0.05);
  REQUIRE_NEAR(out, width6, 3.85, 0.385);

  cfg.length_mm = 12.0;
  const double width12 = pm::fwhm(pm::shg_tuning_curve(model, cfg, grid, 67.0));
  out.detail << ", FWHM(12 mm) = " << width12 << " nm";
  REQUIRE_TRUE(out, std::abs(width12 - width6 / 2.0) / (width6 / 2.0) < 0.02);
  return out;
}

// 7. Broadband pair spectrum with the zero-GVD-at-degeneracy dataset.
Outcome criterion_spdc() {
  Outcome out;
  const auto model = pm::device_waveguide_model();  // zero GVD at 1559 nm
  chip::PplnConfig cfg;
  const auto gvd = pm::gvd_curve(model, {1559.0});
  out.detail << "beta2(1559) = " << gvd.values[0] << " ps^2/km";
  REQUIRE_TRUE(out, std::abs(gvd.values[0]) < 1.5);

  const auto curve =
      pm::spdc_spectrum(model, cfg, 779.5, linspace(1240.0, 1960.0, 1.0), 67.0);
  const double width = pm::fwhm(curve);
  out.detail << ", FWHM = " << width << " nm";
  REQUIRE_TRUE(out, width >= 450.0);
  REQUIRE_NEAR(out, width, 589.0, 589.0 * 0.25);

  const double nu0 = 0.5 / 779.5;
  double worst = 0.0;
  std::vector<double> grid;
  for (int k = 1; k <= 50; ++k) {
    grid.push_back(1.0 / (nu0 + k * 2e-6));
    grid.push_back(1.0 / (nu0 - k * 2e-6));
  }
  std::sort(grid.begin(), grid.end());
  const auto sym = pm::spdc_spectrum(model, cfg, 779.5, grid, 67.0);
  for (std::size_t i = 0; i < sym.values.size() / 2; ++i)
    worst = std::max(worst,
                     std::abs(sym.values[i] - sym.values[sym.values.size() - 1 - i]));
  out.detail << ", max detuning asymmetry = " << worst;
  REQUIRE_TRUE(out, worst < 1e-10);
  return out;
}

// 8. MMI-tree loss fit, exact and under 0.1 dB measurement noise.
Outcome criterion_mmi() {
  Outcome out;
  std::vector<std::pair<int, double>> clean;
  for (int n = 1; n <= 5; ++n) clean.emplace_back(n, -10.0 - 3.47 * n);
  const double exact = chip::mmi_tree_fit(clean).per_splitter_loss_db;
  out.detail << "noiseless fit = " << exact << " dB";
  REQUIRE_TRUE(out, std::abs(exact - 3.47) < 1e-12);

  rng::Rng rng(616161);
  double worst = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<std::pair<int, double>> noisy;
    for (int n = 1; n <= 5; ++n)
      noisy.emplace_back(n, -10.0 - 3.47 * n + 0.1 * rng.normal());
    worst = std::max(worst,
                     std::abs(chip::mmi_tree_fit(noisy).per_splitter_loss_db - 3.47));
  }
  out.detail << ", worst noisy deviation = " << worst << " dB";
  REQUIRE_TRUE(out, worst <= 0.15);
  return out;
}

// 9. Median reconstruction error strictly decreases with total counts.
Outcome criterion_statistical_consistency() {
  Outcome out;
  const auto settings = tomo::tomo_settings();
  rng::Rng state_rng(717171);
  const auto rho = random_mixed(state_rng);
  const std::array<double, 4> totals = {1e3, 1e4, 1e5, 1e6};
  std::array<double, 4> medians{};
  for (std::size_t t = 0; t < totals.size(); ++t) {
    std::vector<double> errors;
    for (int seed = 0; seed < 50; ++seed) {
      rng::Rng rng(rng::Rng::mix(818181, 100 * t + seed));
      auto data = noiseless_counts(rho, settings, totals[t] / 4.0);
      for (int k = 0; k < 16; ++k)
        data.counts[k] = static_cast<double>(rng.poisson(data.counts[k]));
      const auto rec = tomo::mle_reconstruct(data, settings);
      errors.push_back((rec.rho.m - rho.m).norm());
    }
    std::nth_element(errors.begin(), errors.begin() + 25, errors.end());
    medians[t] = errors[25];
  }
  out.detail << "median |rho - rho_true|_F = {" << medians[0] << ", " << medians[1]
             << ", " << medians[2] << ", " << medians[3] << "}";
  for (std::size_t t = 1; t < medians.size(); ++t)
    REQUIRE_TRUE(out, medians[t] < medians[t - 1]);
  return out;
}

// 10. Identical scenario and seed give byte-identical CSV outputs.
Outcome criterion_determinism(const fs::path& first_run, const fs::path& scratch) {
  Outcome out;
  scenario::run_scenario(kDataDir / "paper_repro.jsonc", scratch);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(first_run)) {
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".dm") continue;
    const fs::path other = scratch / entry.path().filename();
    REQUIRE_TRUE(out, fs::exists(other));
    if (!fs::exists(other)) continue;
    if (io::read_text(entry.path()) != io::read_text(other)) {
      out.pass = false;
      out.detail << " [differs: " << entry.path().filename().string() << "]";
    }
    ++compared;
  }
  out.detail << "byte-compared " << compared << " files";
  REQUIRE_TRUE(out, compared >= 15);
  return out;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "epsim_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const fs::path run_a = work / "scenario_a";
  const fs::path run_b = work / "scenario_b";
  const std::vector<Entry> criteria = {
      {1, "brightness and pair-generation rate", criterion_brightness},
      {2, "reference-scenario fidelity band",
       [&] { return criterion_fidelity_reproduction(run_a); }},
      {3, "fringe visibility and CHSH threshold", criterion_visibility_chsh},
      {4, "tomography oracle equivalence", criterion_oracle_equivalence},
      {5, "likelihood gradient check", criterion_gradient_check},
      {6, "SHG tuning curve calibration", criterion_shg},
      {7, "broadband pair spectrum", criterion_spdc},
      {8, "MMI-tree loss fit", criterion_mmi},
      {9, "tomography statistical consistency", criterion_statistical_consistency},
      {10, "byte-identical reruns", [&] { return criterion_determinism(run_a, run_b); }},
  };

  int failures = 0;
  for (const auto& entry : criteria) {
    Outcome out;
    try {
      out = entry.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s  %2d  %-40s %s\n", out.pass ? "PASS" : "FAIL", entry.id,
                entry.name, out.detail.str().c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
