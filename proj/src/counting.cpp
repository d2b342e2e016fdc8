#include "epsim/counting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "epsim/io.hpp"
#include "epsim/rng.hpp"

namespace epsim::counting {

namespace {

constexpr double kPi = std::numbers::pi;

double trace_probability(const pol::DensityMatrix& rho, const pol::Mat4& op) {
  const double p = (rho.m * op).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

void validate(const DetectorConfig& det) {
  if (!(det.efficiency_signal > 0.0 && det.efficiency_signal <= 1.0) ||
      !(det.efficiency_idler > 0.0 && det.efficiency_idler <= 1.0))
    throw std::invalid_argument("detector efficiencies must lie in (0, 1]");
  if (!(det.coincidence_window_s >= 0.0))
    throw std::invalid_argument("coincidence window must be >= 0");
  if (!(det.integration_time_s > 0.0))
    throw std::invalid_argument("integration time must be > 0");
  if (!(det.dark_rate_hz >= 0.0))
    throw std::invalid_argument("dark rate must be >= 0");
}

double coincidence_probability(const pol::DensityMatrix& rho,
                               const pol::AnalyzerSetting& setting) {
  pol::validate_density(rho);
  const pol::Mat4 proj = pol::kron(pol::analyzer_projector(setting, pol::Arm::Signal),
                                   pol::analyzer_projector(setting, pol::Arm::Idler));
  return trace_probability(rho, proj);
}

CountRecord simulate_counts(const pol::DensityMatrix& rho,
                            const pol::AnalyzerSetting& setting, double pair_rate_hz,
                            const DetectorConfig& det, std::uint64_t rng_seed) {
  if (!(pair_rate_hz >= 0.0)) throw std::invalid_argument("pair rate must be >= 0");
  validate(det);

  const double p_cc = coincidence_probability(rho, setting);
  const pol::Mat4 proj_s =
      pol::kron(pol::analyzer_projector(setting, pol::Arm::Signal), pol::Mat2::Identity());
  const pol::Mat4 proj_i =
      pol::kron(pol::Mat2::Identity(), pol::analyzer_projector(setting, pol::Arm::Idler));
  const double p_s = trace_probability(rho, proj_s);
  const double p_i = trace_probability(rho, proj_i);

  const double r_singles_s = pair_rate_hz * p_s * det.efficiency_signal + det.dark_rate_hz;
  const double r_singles_i = pair_rate_hz * p_i * det.efficiency_idler + det.dark_rate_hz;
  const double r_acc = accidental_rate(r_singles_s, r_singles_i, det.coincidence_window_s);
  const double r_true = pair_rate_hz * p_cc * det.efficiency_signal * det.efficiency_idler;

  rng::Rng rng(rng_seed);
  const double t = det.integration_time_s;
  CountRecord rec;
  rec.setting = setting;
  rec.integration_time_s = t;
  rec.raw_singles_signal = rng.poisson(r_singles_s * t);
  rec.raw_singles_idler = rng.poisson(r_singles_i * t);
  rec.raw_coincidences = rng.poisson((r_true + r_acc) * t);
  rec.raw_accidentals = rng.poisson(r_acc * t);
  rec.singles_signal_hz = static_cast<double>(rec.raw_singles_signal) / t;
  rec.singles_idler_hz = static_cast<double>(rec.raw_singles_idler) / t;
  rec.coincidences_hz = static_cast<double>(rec.raw_coincidences) / t;
  rec.accidentals_hz = static_cast<double>(rec.raw_accidentals) / t;
  return rec;
}

double accidental_rate(double singles_signal_hz, double singles_idler_hz,
                       double coincidence_window_s) {
  if (singles_signal_hz < 0.0 || singles_idler_hz < 0.0 || coincidence_window_s < 0.0)
    throw std::invalid_argument("accidental_rate inputs must be non-negative");
  return singles_signal_hz * singles_idler_hz * coincidence_window_s;
}

BrightnessReport brightness(const CountRecord& record, double dwdm_bandwidth_nm,
                            double source_bandwidth_nm) {
  if (!(record.pump_power_mw > 0.0))
    throw std::invalid_argument("brightness needs a positive pump power");
  if (!(dwdm_bandwidth_nm > 0.0) || !(source_bandwidth_nm > 0.0))
    throw std::invalid_argument("brightness needs positive bandwidths");
  const double pair_rate = record.coincidences_hz - record.accidentals_hz;
  if (!(pair_rate > 0.0))
    throw std::runtime_error("no signal: coincidence rate does not exceed accidentals");
  BrightnessReport rep;
  rep.brightness = record.singles_signal_hz * record.singles_idler_hz /
                   (pair_rate * record.pump_power_mw * dwdm_bandwidth_nm);
  rep.bandwidth_used_nm = source_bandwidth_nm;
  rep.pgr = rep.brightness * source_bandwidth_nm;
  return rep;
}

double visibility(const std::vector<CountRecord>& records, bool subtract_accidentals) {
  if (records.empty()) throw std::invalid_argument("visibility needs at least one record");
  double cmax = 0.0, cmin = 0.0;
  bool first = true;
  for (const auto& rec : records) {
    double c = rec.coincidences_hz;
    if (subtract_accidentals) c = std::max(c - rec.accidentals_hz, 0.0);
    if (first) {
      cmax = cmin = c;
      first = false;
    } else {
      cmax = std::max(cmax, c);
      cmin = std::min(cmin, c);
    }
  }
  if (!(cmax > 0.0)) throw std::runtime_error("no signal: all coincidence counts are zero");
  return (cmax - cmin) / (cmax + cmin);
}

double visibility_analytic(const pol::DensityMatrix& rho, FringeBasis basis) {
  pol::validate_density(rho);
  const double fixed = (basis == FringeBasis::HV) ? 0.0 : kPi / 4.0;
  const pol::Mat2 proj_fixed = pol::polarizer(fixed);
  auto fringe = [&](double theta) {
    return trace_probability(rho, pol::kron(proj_fixed, pol::polarizer(theta)));
  };
  // P(theta) = c0 + c1 cos 2theta + s1 sin 2theta, so three samples suffice
  const double c0 = (fringe(0.0) + fringe(kPi / 2.0)) / 2.0;
  const double c1 = (fringe(0.0) - fringe(kPi / 2.0)) / 2.0;
  const double s1 = (fringe(kPi / 4.0) - fringe(3.0 * kPi / 4.0)) / 2.0;
  if (!(c0 > 0.0)) throw std::runtime_error("no signal: fringe mean is zero");
  return std::hypot(c1, s1) / c0;
}

ChshResult chsh_s_from_visibility(double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument("visibility must lie in [0, 1]");
  ChshResult r;
  r.s = 2.0 * std::sqrt(2.0) * v;
  r.violation = r.s > 2.0;
  return r;
}

namespace {

double deg(double rad) { return rad * 180.0 / kPi; }
double rad(double degv) { return degv * kPi / 180.0; }

}  // namespace

void write_count_records_csv(const std::filesystem::path& path,
                             const std::vector<CountRecord>& records,
                             const std::vector<std::string>& basis_labels) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    const CountRecord& r = records[k];
    const std::string label =
        k < basis_labels.size() ? basis_labels[k] : std::string("-");
    rows.push_back({std::to_string(k), label, io::format_double(deg(r.setting.signal.qwp_angle)),
                    io::format_double(deg(r.setting.signal.hwp_angle)),
                    io::format_double(deg(r.setting.signal.polarizer_angle)),
                    io::format_double(deg(r.setting.idler.qwp_angle)),
                    io::format_double(deg(r.setting.idler.hwp_angle)),
                    io::format_double(deg(r.setting.idler.polarizer_angle)),
                    io::format_double(r.singles_signal_hz),
                    io::format_double(r.singles_idler_hz),
                    io::format_double(r.coincidences_hz),
                    io::format_double(r.accidentals_hz),
                    io::format_double(r.integration_time_s),
                    io::format_double(r.pump_power_mw),
                    std::to_string(r.raw_singles_signal),
                    std::to_string(r.raw_singles_idler),
                    std::to_string(r.raw_coincidences),
                    std::to_string(r.raw_accidentals)});
  }
  io::write_csv(path,
                {"setting_index", "basis", "qwp_signal_deg", "hwp_signal_deg",
                 "pol_signal_deg", "qwp_idler_deg", "hwp_idler_deg", "pol_idler_deg",
                 "singles_signal_hz", "singles_idler_hz", "coincidences_hz",
                 "accidentals_hz", "integration_time_s", "pump_power_mw",
                 "raw_singles_signal", "raw_singles_idler", "raw_coincidences",
                 "raw_accidentals"},
                rows);
}

std::vector<CountRecord> read_count_records_csv(const std::filesystem::path& path) {
  const io::CsvTable t = io::read_csv(path);
  if (t.header.size() != 18 || t.header[0] != "setting_index")
    throw std::runtime_error("unexpected counts CSV layout in " + path.string());
  std::vector<CountRecord> records;
  records.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    CountRecord r;
    r.setting.signal = pol::make_arm(rad(io::parse_double(row[2])),
                                     rad(io::parse_double(row[3])),
                                     rad(io::parse_double(row[4])));
    r.setting.idler = pol::make_arm(rad(io::parse_double(row[5])),
                                    rad(io::parse_double(row[6])),
                                    rad(io::parse_double(row[7])));
    r.singles_signal_hz = io::parse_double(row[8]);
    r.singles_idler_hz = io::parse_double(row[9]);
    r.coincidences_hz = io::parse_double(row[10]);
    r.accidentals_hz = io::parse_double(row[11]);
    r.integration_time_s = io::parse_double(row[12]);
    r.pump_power_mw = io::parse_double(row[13]);
    r.raw_singles_signal = static_cast<std::uint64_t>(std::stoull(row[14]));
    r.raw_singles_idler = static_cast<std::uint64_t>(std::stoull(row[15]));
    r.raw_coincidences = static_cast<std::uint64_t>(std::stoull(row[16]));
    r.raw_accidentals = static_cast<std::uint64_t>(std::stoull(row[17]));
    records.push_back(r);
  }
  return records;
}

}  // namespace epsim::counting
