#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

namespace epsim::pol {

using Complex = std::complex<double>;
using Vec4 = Eigen::Vector4cd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

/// Basis ordering is (HH, HV, VH, VV) everywhere: index = 2*signal + idler
/// with H = 0, V = 1.
///
/// PhiPlus = (|HH> + |VV>)/sqrt(2) is the target state every fidelity in this
/// library is quoted against (some sources label this same state Psi+; here
/// Psi+/Psi- are the (|HV> +- |VH>)/sqrt(2) pair).
enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };
enum class WaveplateKind { Half, Quarter };
enum class Arm { Signal, Idler };

/// Two-qubit pure polarization state. Construction normalizes; a state that
/// needed renormalization (norm off by more than 1e-12) is flagged and the
/// flag travels with the value into densify().
class StateVector {
 public:
  explicit StateVector(const Vec4& amplitudes);
  const Vec4& amplitudes() const { return amp_; }
  Complex operator[](int i) const { return amp_(i); }
  bool was_renormalized() const { return renormalized_; }

 private:
  Vec4 amp_;
  bool renormalized_ = false;
};

/// 4x4 density matrix of the signal/idler polarization pair.
/// Valid instances are Hermitian (defect < 1e-12), unit trace (within 1e-10)
/// and PSD (smallest eigenvalue >= -1e-9); see validate_density().
struct DensityMatrix {
  Mat4 m = Mat4::Zero();
};

struct DensityCheck {
  double hermiticity_defect = 0.0;
  double trace_defect = 0.0;
  double min_eigenvalue = 0.0;
  bool ok = false;
};

DensityCheck check_density(const Mat4& m);
void validate_density(const DensityMatrix& rho);  // throws std::invalid_argument

StateVector bell_state(BellKind kind);
DensityMatrix densify(const StateVector& psi);
DensityMatrix mix_white_noise(const DensityMatrix& rho, double p);
double fidelity(const DensityMatrix& rho, const StateVector& target);
double purity(const DensityMatrix& rho);

/// 2x2 Jones operator acting on the (H, V) field amplitudes of one photon.
using JonesOperator = Mat2;

/// Active counterclockwise rotation [[cos t, -sin t], [sin t, cos t]].
Mat2 rotation(double theta);

/// Retarder W(theta) = Rot(-theta) diag(1, e^{i G}) Rot(theta) with
/// G = pi (half) or pi/2 (quarter); global phase is not tracked.
/// With this convention the unretarded eigenaxis of W(theta) lies along
/// (cos theta, -sin theta); a quarter plate at pi/4 maps H to (1, i)/sqrt(2).
JonesOperator waveplate(WaveplateKind kind, double theta);

/// Projector onto the linear polarization at the given angle.
JonesOperator polarizer(double theta);

/// One arm of the analyzer: quarter plate, half plate, polarizer.
/// Angles are radians, stored reduced into [0, pi) (all three elements are
/// pi-periodic).
struct ArmSetting {
  double qwp_angle = 0.0;
  double hwp_angle = 0.0;
  double polarizer_angle = 0.0;
};

ArmSetting make_arm(double qwp, double hwp, double polarizer_angle);

/// Plates and polarizer aligned at theta: projects onto the linear state at
/// theta (each element leaves its own axis invariant).
ArmSetting linear_arm(double theta);

struct AnalyzerSetting {
  ArmSetting signal;
  ArmSetting idler;
};

/// Rank-1 projector P = W^dag Pol W realized by one arm, where the photon
/// traverses quarter plate, half plate, then the polarizer (W = H * Q).
JonesOperator analyzer_projector(const AnalyzerSetting& setting, Arm arm);

/// Signal (x) idler tensor product in the fixed (HH, HV, VH, VV) ordering.
Mat4 kron(const Mat2& signal_op, const Mat2& idler_op);

/// Plain-text matrix format: one row per line, entries "re+imj" separated by
/// commas. A state vector is a single line of four entries.
std::string to_text(const DensityMatrix& rho);
std::string to_text(const StateVector& psi);
DensityMatrix density_from_text(const std::string& text);
StateVector state_from_text(const std::string& text);

}  // namespace epsim::pol
