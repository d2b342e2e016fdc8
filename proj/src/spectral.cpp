#include "epsim/spectral.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace epsim::pm {

void validate_curve(const SpectralCurve& curve) {
  if (curve.wavelengths_nm.size() != curve.values.size())
    throw std::invalid_argument("spectral curve arrays differ in length");
  if (curve.wavelengths_nm.size() < 2)
    throw std::invalid_argument("spectral curve needs at least two points");
  for (std::size_t i = 1; i < curve.wavelengths_nm.size(); ++i) {
    if (!(curve.wavelengths_nm[i] > curve.wavelengths_nm[i - 1]))
      throw std::invalid_argument("spectral curve grid must be strictly increasing");
  }
  if (curve.kind == ValueKind::NormalizedIntensity) {
    for (double v : curve.values) {
      if (!(v >= 0.0 && v <= 1.0 + 1e-12))
        throw std::invalid_argument("normalized intensity outside [0, 1]");
    }
  }
}

double curve_value_at(const SpectralCurve& curve, double wavelength_nm) {
  const auto& wl = curve.wavelengths_nm;
  if (wavelength_nm < wl.front() || wavelength_nm > wl.back())
    throw std::out_of_range("wavelength " + std::to_string(wavelength_nm) +
                            " nm outside curve grid");
  const auto it = std::upper_bound(wl.begin(), wl.end(), wavelength_nm);
  if (it == wl.begin()) return curve.values.front();
  if (it == wl.end()) return curve.values.back();
  const std::size_t hi = static_cast<std::size_t>(it - wl.begin());
  const std::size_t lo = hi - 1;
  const double t = (wavelength_nm - wl[lo]) / (wl[hi] - wl[lo]);
  return curve.values[lo] + t * (curve.values[hi] - curve.values[lo]);
}

const char* value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::TransmissionDb:
      return "transmission_dB";
    case ValueKind::NormalizedIntensity:
      return "normalized_intensity";
    case ValueKind::GvdPs2PerKm:
      return "gvd_ps2_per_km";
  }
  return "unknown";
}

}  // namespace epsim::pm
