#include "epsim/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

#include "epsim/io.hpp"
#include "json.hpp"

namespace epsim::tomo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTinyProbability = 1e-15;

using pol::Mat2;
using pol::Mat4;

pol::ArmSetting arm_for_basis(char basis) {
  switch (basis) {
    case 'H':
      return pol::make_arm(0.0, 0.0, 0.0);
    case 'V':
      return pol::make_arm(0.0, kPi / 4.0, 0.0);
    case 'D':
      return pol::make_arm(kPi / 4.0, 7.0 * kPi / 8.0, 0.0);
    case 'R':
      return pol::make_arm(kPi / 4.0, 0.0, 0.0);
  }
  throw std::logic_error("unknown basis letter");
}

// index of T entry (a, b) in the TParams layout
struct EntryRef {
  int row, col;
  int re_index;  // imaginary part at re_index + 1 for off-diagonal entries
  bool diagonal;
};

const std::array<EntryRef, 10>& t_entries() {
  static const std::array<EntryRef, 10> entries = {{
      {0, 0, 0, true},
      {1, 1, 1, true},
      {2, 2, 2, true},
      {3, 3, 3, true},
      {1, 0, 4, false},
      {2, 0, 6, false},
      {2, 1, 8, false},
      {3, 0, 10, false},
      {3, 1, 12, false},
      {3, 2, 14, false},
  }};
  return entries;
}

Mat4 t_matrix(const TParams& t) {
  Mat4 m = Mat4::Zero();
  for (const auto& e : t_entries()) {
    if (e.diagonal)
      m(e.row, e.col) = t.x[e.re_index];
    else
      m(e.row, e.col) = {t.x[e.re_index], t.x[e.re_index + 1]};
  }
  return m;
}

struct LikelihoodEval {
  double ll = 0.0;
  std::array<double, 16> grad{};
};

LikelihoodEval eval_likelihood(const std::array<double, 16>& counts,
                               const TomographySettingSet& settings, const TParams& t,
                               bool want_gradient) {
  const Mat4 T = t_matrix(t);
  const double S = T.squaredNorm();
  if (!(S > 0.0)) throw std::invalid_argument("T parameters are all zero");

  const Mat4 tt = T.adjoint() * T;
  std::array<double, 16> q{}, p{};
  double total_counts = 0.0, total_p = 0.0;
  for (int k = 0; k < 16; ++k) {
    q[k] = (settings.projectors[k] * tt).trace().real();
    p[k] = std::max(q[k] / S, kTinyProbability);
    total_counts += counts[k];
    total_p += p[k];
  }
  const double flux = total_counts / total_p;

  LikelihoodEval out;
  for (int k = 0; k < 16; ++k) {
    const double mu = flux * p[k];
    out.ll += (counts[k] > 0.0 ? counts[k] * std::log(mu) : 0.0) - mu;
  }
  if (!want_gradient) return out;

  // d q_k = 2 Re tr(P_k T^dag dT): coefficient of dT(a,b) is (P_k T^dag)(b,a)
  std::array<Mat4, 16> coeff;
  for (int k = 0; k < 16; ++k) coeff[k] = settings.projectors[k] * T.adjoint();

  for (const auto& e : t_entries()) {
    double g_re = 0.0, g_im = 0.0;
    const double t_re = t.x[e.re_index];
    const double t_im = e.diagonal ? 0.0 : t.x[e.re_index + 1];
    const double ds_re = 2.0 * t_re;
    const double ds_im = 2.0 * t_im;
    for (int k = 0; k < 16; ++k) {
      const std::complex<double> m = coeff[k](e.col, e.row);
      const double dq_re = 2.0 * m.real();
      const double dq_im = -2.0 * m.imag();
      const double dp_re = (dq_re - p[k] * ds_re) / S;
      const double dp_im = (dq_im - p[k] * ds_im) / S;
      const double w = counts[k] / p[k] - flux;
      g_re += w * dp_re;
      g_im += w * dp_im;
    }
    out.grad[e.re_index] += g_re;
    if (!e.diagonal) out.grad[e.re_index + 1] += g_im;
  }
  return out;
}

Mat2 pauli(int i) {
  Mat2 m;
  switch (i) {
    case 0:
      m << 1, 0, 0, 1;
      break;
    case 1:
      m << 0, 1, 1, 0;
      break;
    case 2:
      m << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
      break;
    default:
      m << 1, 0, 0, -1;
      break;
  }
  return m;
}

}  // namespace

TomographySettingSet tomo_settings() {
  static const char bases[4] = {'H', 'V', 'D', 'R'};
  TomographySettingSet set;
  int k = 0;
  for (char s : bases) {
    for (char i : bases) {
      pol::AnalyzerSetting setting{arm_for_basis(s), arm_for_basis(i)};
      set.settings[k] = setting;
      set.projectors[k] =
          pol::kron(pol::analyzer_projector(setting, pol::Arm::Signal),
                    pol::analyzer_projector(setting, pol::Arm::Idler));
      set.labels[k] = std::string{s, i};
      ++k;
    }
  }
  return set;
}

SubtractionResult subtract_accidentals(const TomographyData& data) {
  SubtractionResult out;
  out.data = data;
  for (int k = 0; k < 16; ++k) {
    const double corrected = data.counts[k] - data.accidentals[k];
    if (corrected < 0.0) {
      out.data.counts[k] = 0.0;
      out.clipped_settings.push_back(k);
    } else {
      out.data.counts[k] = corrected;
    }
    out.data.accidentals[k] = 0.0;
  }
  return out;
}

pol::Mat4 linear_inversion(const TomographyData& data, const TomographySettingSet& settings) {
  double flux = data.total_flux_normalization;
  if (!(flux > 0.0)) {
    // settings projecting onto computational-basis products have diagonal
    // projectors; those four sum to the identity and fix the flux
    flux = 0.0;
    int found = 0;
    for (int k = 0; k < 16; ++k) {
      const Mat4& pr = settings.projectors[k];
      double offdiag = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          if (a != b) offdiag = std::max(offdiag, std::abs(pr(a, b)));
      if (offdiag < 1e-9) {
        flux += data.counts[k];
        ++found;
      }
    }
    if (found != 4)
      throw std::runtime_error(
          "cannot derive flux normalization: settings lack a complete H/V block");
  }
  if (!(flux > 0.0)) throw std::runtime_error("no data: zero total flux");

  Eigen::Matrix<double, 16, 16> design;
  std::array<Mat4, 16> basis;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      basis[4 * a + b] = pol::kron(pauli(a), pauli(b));
  for (int k = 0; k < 16; ++k)
    for (int j = 0; j < 16; ++j)
      design(k, j) = 0.25 * (settings.projectors[k] * basis[j]).trace().real();

  Eigen::FullPivLU<Eigen::Matrix<double, 16, 16>> lu(design);
  if (lu.rank() < 16)
    throw std::runtime_error("singular tomography design: projectors do not span");

  Eigen::Matrix<double, 16, 1> probs;
  for (int k = 0; k < 16; ++k) probs(k) = data.counts[k] / flux;
  const Eigen::Matrix<double, 16, 1> c = lu.solve(probs);

  Mat4 rho = Mat4::Zero();
  for (int j = 0; j < 16; ++j) rho += c(j) * basis[j];
  rho *= 0.25;
  return rho;
}

pol::Mat4 density_from_tparams(const TParams& t) {
  const Mat4 T = t_matrix(t);
  Mat4 rho = T.adjoint() * T;
  rho = 0.5 * (rho + Mat4(rho.adjoint()));
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw std::invalid_argument("T parameters are all zero");
  return rho / tr;
}

TParams tparams_from_density(const pol::Mat4& rho) {
  // PSD projection by eigenvalue clipping, then the bottom-right Cholesky
  // factorization rho = T^dag T with T lower triangular (via the index
  // reversal J: J rho J = L L^dag  =>  T = J L^dag J)
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (rho + Mat4(rho.adjoint())));
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  if (!(ev.sum() > 0.0)) throw std::invalid_argument("state has no positive weight");
  ev /= ev.sum();

  Mat4 jrj;
  for (double ridge = 1e-9;; ridge *= 1000.0) {
    Eigen::Vector4d blended = (1.0 - ridge) * ev + (ridge / 4.0) * Eigen::Vector4d::Ones();
    const Mat4 psd =
        es.eigenvectors() * blended.asDiagonal() * es.eigenvectors().adjoint();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) jrj(a, b) = psd(3 - a, 3 - b);
    Eigen::LLT<Mat4> llt(jrj);
    if (llt.info() == Eigen::Success) {
      const Mat4 L = llt.matrixL();
      Mat4 T = Mat4::Zero();
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b <= a; ++b) T(a, b) = std::conj(L(3 - b, 3 - a));
      TParams t;
      for (const auto& e : t_entries()) {
        if (e.diagonal) {
          t.x[e.re_index] = T(e.row, e.col).real();
        } else {
          t.x[e.re_index] = T(e.row, e.col).real();
          t.x[e.re_index + 1] = T(e.row, e.col).imag();
        }
      }
      return t;
    }
    if (ridge > 1e-3) throw std::runtime_error("Cholesky initialization failed");
  }
}

double profile_log_likelihood(const std::array<double, 16>& counts,
                              const TomographySettingSet& settings, const TParams& t) {
  return eval_likelihood(counts, settings, t, false).ll;
}

std::array<double, 16> profile_log_likelihood_gradient(
    const std::array<double, 16>& counts, const TomographySettingSet& settings,
    const TParams& t) {
  return eval_likelihood(counts, settings, t, true).grad;
}

ReconstructionResult mle_reconstruct(const TomographyData& data,
                                     const TomographySettingSet& settings,
                                     const MleOptions& opts) {
  double total = 0.0;
  for (double c : data.counts) {
    if (c < 0.0) throw std::invalid_argument("tomography counts must be non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw std::runtime_error("no data: all tomography counts are zero");

  TParams x = tparams_from_density(linear_inversion(data, settings));

  using Vec16 = Eigen::Matrix<double, 16, 1>;
  auto to_vec = [](const TParams& t) {
    Vec16 v;
    for (int i = 0; i < 16; ++i) v(i) = t.x[i];
    return v;
  };
  auto from_vec = [](const Vec16& v) {
    TParams t;
    for (int i = 0; i < 16; ++i) t.x[i] = v(i);
    return t;
  };

  ReconstructionResult result;
  LikelihoodEval cur = eval_likelihood(data.counts, settings, x, true);
  const double ll_start = cur.ll;
  if (opts.track_likelihood) result.likelihood_trace.push_back(cur.ll);

  Vec16 xv = to_vec(x);
  Vec16 grad = -Eigen::Map<const Vec16>(cur.grad.data());  // gradient of -ll

  std::deque<std::pair<Vec16, Vec16>> memory;  // (s, y) pairs
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (grad.norm() < opts.grad_tol) {
      converged = true;
      break;
    }
    // L-BFGS two-loop recursion
    Vec16 q = grad;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      const double rho_i = 1.0 / y.dot(s);
      alpha[i] = rho_i * s.dot(q);
      q -= alpha[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double rho_i = 1.0 / y.dot(s);
      const double beta = rho_i * y.dot(q);
      q += (alpha[i] - beta) * s;
    }
    Vec16 dir = -q;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // not a descent direction; fall back to steepest
      dir = -grad;
      slope = grad.dot(dir);
      memory.clear();
    }

    double step = 1.0;
    bool accepted = false;
    LikelihoodEval trial;
    Vec16 xv_new;
    for (int half = 0; half < 60; ++half) {
      xv_new = xv + step * dir;
      trial = eval_likelihood(data.counts, settings, from_vec(xv_new), true);
      const double f_cur = -cur.ll, f_new = -trial.ll;
      if (f_new <= f_cur + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no measurable likelihood change is attainable from here
      converged = true;
      break;
    }

    const Vec16 grad_new = -Eigen::Map<const Vec16>(trial.grad.data());
    const Vec16 s = xv_new - xv;
    const Vec16 y = grad_new - grad;
    if (y.dot(s) > 1e-12 * y.norm() * s.norm()) {
      memory.emplace_back(s, y);
      if (memory.size() > 8) memory.pop_front();
    }

    const double improvement = trial.ll - cur.ll;
    const double ascent = std::abs(trial.ll - ll_start);
    xv = xv_new;
    cur = trial;
    grad = grad_new;
    if (opts.track_likelihood) result.likelihood_trace.push_back(cur.ll);
    if (std::abs(improvement) < opts.f_tol * std::max(1.0, ascent)) {
      converged = true;
      ++iter;
      break;
    }
  }

  result.rho.m = density_from_tparams(from_vec(xv));
  result.log_likelihood = cur.ll;
  result.iterations = iter;
  result.converged = converged;
  result.fidelity_to_bell =
      pol::fidelity(result.rho, pol::bell_state(pol::BellKind::PhiPlus));
  return result;
}

MetricsBundle report_metrics(const ReconstructionResult& result) {
  MetricsBundle m;
  m.fidelity = pol::fidelity(result.rho, pol::bell_state(pol::BellKind::PhiPlus));
  m.purity = pol::purity(result.rho);
  m.v_hv = counting::visibility_analytic(result.rho, counting::FringeBasis::HV);
  m.v_ad = counting::visibility_analytic(result.rho, counting::FringeBasis::AD);
  const auto chsh = counting::chsh_s_from_visibility(std::clamp(m.v_ad, 0.0, 1.0));
  m.chsh_s = chsh.s;
  m.chsh_violation = chsh.violation;
  return m;
}

TomographyData data_from_count_records(const std::vector<counting::CountRecord>& records) {
  if (records.size() != 16)
    throw std::invalid_argument("tomography needs exactly 16 setting records");
  TomographyData data;
  for (int k = 0; k < 16; ++k) {
    data.counts[k] = static_cast<double>(records[k].raw_coincidences);
    data.accidentals[k] = static_cast<double>(records[k].raw_accidentals);
  }
  return data;
}

void write_reconstruction(const std::filesystem::path& out_dir, const std::string& label,
                          const ReconstructionResult& result, const MetricsBundle& metrics) {
  auto matrix_rows = [&](bool real_part) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 4; ++i) {
      std::vector<std::string> row;
      for (int j = 0; j < 4; ++j) {
        const auto z = result.rho.m(i, j);
        row.push_back(io::format_double(real_part ? z.real() : z.imag()));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  const std::vector<std::string> header = {"hh", "hv", "vh", "vv"};
  io::write_csv(out_dir / ("rho_" + label + "_re.csv"), header, matrix_rows(true));
  io::write_csv(out_dir / ("rho_" + label + "_im.csv"), header, matrix_rows(false));

  nlohmann::json j;
  j["channel"] = label;
  j["fidelity_to_bell"] = metrics.fidelity;
  j["purity"] = metrics.purity;
  j["visibility_hv"] = metrics.v_hv;
  j["visibility_ad"] = metrics.v_ad;
  j["chsh_s"] = metrics.chsh_s;
  j["chsh_violation"] = metrics.chsh_violation;
  j["log_likelihood"] = result.log_likelihood;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  io::write_json(out_dir / ("metrics_" + label + ".json"), j);
}

}  // namespace epsim::tomo
