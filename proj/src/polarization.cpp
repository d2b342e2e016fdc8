#include "epsim/polarization.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "epsim/io.hpp"

namespace epsim::pol {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

double wrap_half_turn(double angle) {
  double a = std::fmod(angle, kPi);
  if (a < 0.0) a += kPi;
  return a;
}

}  // namespace

StateVector::StateVector(const Vec4& amplitudes) : amp_(amplitudes) {
  const double n = amp_.norm();
  if (!(n > 0.0)) throw std::invalid_argument("state vector has zero norm");
  renormalized_ = std::abs(n - 1.0) > 1e-12;
  amp_ /= n;
}

DensityCheck check_density(const Mat4& m) {
  DensityCheck c;
  c.hermiticity_defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
  c.trace_defect = std::abs(m.trace() - Complex{1.0, 0.0});
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (m + m.adjoint()),
                                         Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  c.ok = c.hermiticity_defect < 1e-12 && c.trace_defect < 1e-10 &&
         c.min_eigenvalue >= -1e-9;
  return c;
}

void validate_density(const DensityMatrix& rho) {
  const DensityCheck c = check_density(rho.m);
  if (!c.ok) {
    std::ostringstream msg;
    msg << "invalid density matrix: hermiticity defect " << c.hermiticity_defect
        << ", trace defect " << c.trace_defect << ", min eigenvalue "
        << c.min_eigenvalue;
    throw std::invalid_argument(msg.str());
  }
}

StateVector bell_state(BellKind kind) {
  const double r = 1.0 / std::sqrt(2.0);
  Vec4 a = Vec4::Zero();
  switch (kind) {
    case BellKind::PhiPlus:
      a(0) = r;
      a(3) = r;
      break;
    case BellKind::PhiMinus:
      a(0) = r;
      a(3) = -r;
      break;
    case BellKind::PsiPlus:
      a(1) = r;
      a(2) = r;
      break;
    case BellKind::PsiMinus:
      a(1) = r;
      a(2) = -r;
      break;
  }
  return StateVector(a);
}

DensityMatrix densify(const StateVector& psi) {
  DensityMatrix rho;
  rho.m = psi.amplitudes() * psi.amplitudes().adjoint();
  return rho;
}

DensityMatrix mix_white_noise(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("noise fraction must lie in [0, 1]");
  DensityMatrix out;
  out.m = (1.0 - p) * rho.m + (p / 4.0) * Mat4::Identity();
  return out;
}

double fidelity(const DensityMatrix& rho, const StateVector& target) {
  validate_density(rho);
  const Complex v = target.amplitudes().adjoint() * rho.m * target.amplitudes();
  return v.real();
}

double purity(const DensityMatrix& rho) {
  return (rho.m * rho.m).trace().real();
}

Mat2 rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

JonesOperator waveplate(WaveplateKind kind, double theta) {
  const double gamma = (kind == WaveplateKind::Half) ? kPi : kPi / 2.0;
  Mat2 d = Mat2::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = std::exp(kI * gamma);
  return rotation(-theta) * d * rotation(theta);
}

JonesOperator polarizer(double theta) {
  Eigen::Vector2cd v;
  v << std::cos(theta), std::sin(theta);
  return v * v.adjoint();
}

ArmSetting make_arm(double qwp, double hwp, double polarizer_angle) {
  return ArmSetting{wrap_half_turn(qwp), wrap_half_turn(hwp),
                    wrap_half_turn(polarizer_angle)};
}

ArmSetting linear_arm(double theta) { return make_arm(theta, theta, theta); }

JonesOperator analyzer_projector(const AnalyzerSetting& setting, Arm arm) {
  const ArmSetting& a = (arm == Arm::Signal) ? setting.signal : setting.idler;
  const Mat2 w = waveplate(WaveplateKind::Half, a.hwp_angle) *
                 waveplate(WaveplateKind::Quarter, a.qwp_angle);
  return w.adjoint() * polarizer(a.polarizer_angle) * w;
}

Mat4 kron(const Mat2& signal_op, const Mat2& idler_op) {
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = signal_op(i, j) * idler_op;
  return out;
}

namespace {

std::string row_to_text(const Eigen::Matrix<Complex, 1, 4>& row) {
  std::string line;
  for (int j = 0; j < 4; ++j) {
    if (j) line += ',';
    line += io::format_complex(row(j));
  }
  return line;
}

std::vector<std::vector<Complex>> parse_rows(const std::string& text) {
  std::vector<std::vector<Complex>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<Complex> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(io::parse_complex(cell));
    if (row.size() != 4)
      throw std::invalid_argument("matrix text row must have 4 entries");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string to_text(const DensityMatrix& rho) {
  std::string out;
  for (int i = 0; i < 4; ++i) {
    out += row_to_text(rho.m.row(i));
    out += '\n';
  }
  return out;
}

std::string to_text(const StateVector& psi) {
  return row_to_text(psi.amplitudes().transpose()) + "\n";
}

DensityMatrix density_from_text(const std::string& text) {
  const auto rows = parse_rows(text);
  if (rows.size() != 4)
    throw std::invalid_argument("density matrix text must have 4 rows");
  DensityMatrix rho;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rho.m(i, j) = rows[i][j];
  validate_density(rho);
  return rho;
}

StateVector state_from_text(const std::string& text) {
  const auto rows = parse_rows(text);
  if (rows.size() != 1)
    throw std::invalid_argument("state vector text must be a single row");
  Vec4 a;
  for (int j = 0; j < 4; ++j) a(j) = rows[0][j];
  return StateVector(a);
}

}  // namespace epsim::pol
