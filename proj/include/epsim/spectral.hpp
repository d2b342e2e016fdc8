#pragma once

#include <vector>

namespace epsim::pm {

enum class ValueKind { TransmissionDb, NormalizedIntensity, GvdPs2PerKm };

/// Real-valued curve on a strictly increasing wavelength grid (nm).
struct SpectralCurve {
  std::vector<double> wavelengths_nm;
  std::vector<double> values;
  ValueKind kind = ValueKind::NormalizedIntensity;
};

/// Equal-length arrays, strictly increasing grid; normalized intensities
/// must lie in [0, 1]. Throws std::invalid_argument.
void validate_curve(const SpectralCurve& curve);

/// Linear interpolation on the curve grid; throws std::out_of_range outside.
double curve_value_at(const SpectralCurve& curve, double wavelength_nm);

const char* value_kind_name(ValueKind kind);

}  // namespace epsim::pm
