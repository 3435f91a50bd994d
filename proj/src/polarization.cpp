#include "stimtomo/polarization.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stimtomo/error.hpp"

namespace stimtomo {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
constexpr Complex kI{0.0, 1.0};

}  // namespace

char to_char(PolLabel label) {
  switch (label) {
    case PolLabel::H: return 'H';
    case PolLabel::V: return 'V';
    case PolLabel::D: return 'D';
    case PolLabel::A: return 'A';
    case PolLabel::R: return 'R';
    case PolLabel::L: return 'L';
  }
  return '?';
}

PolLabel label_from_char(char c) {
  switch (c) {
    case 'H': return PolLabel::H;
    case 'V': return PolLabel::V;
    case 'D': return PolLabel::D;
    case 'A': return PolLabel::A;
    case 'R': return PolLabel::R;
    case 'L': return PolLabel::L;
    default:
      throw DataError(std::string("unknown polarisation label '") + c + "'");
  }
}

Basis basis_of(PolLabel label) {
  switch (label) {
    case PolLabel::H:
    case PolLabel::V: return Basis::HV;
    case PolLabel::D:
    case PolLabel::A: return Basis::DA;
    default: return Basis::RL;
  }
}

PolLabel transmitted_label(Basis basis) {
  switch (basis) {
    case Basis::HV: return PolLabel::H;
    case Basis::DA: return PolLabel::D;
    default: return PolLabel::R;
  }
}

PolLabel reflected_label(Basis basis) {
  switch (basis) {
    case Basis::HV: return PolLabel::V;
    case Basis::DA: return PolLabel::A;
    default: return PolLabel::L;
  }
}

PolLabel orthogonal(PolLabel label) {
  const Basis b = basis_of(label);
  return label == transmitted_label(b) ? reflected_label(b)
                                       : transmitted_label(b);
}

JonesVector::JonesVector(Complex h, Complex v) : amps_{h, v} {
  if (std::abs(std::norm(h) + std::norm(v) - 1.0) > 1e-12) {
    throw std::invalid_argument("Jones vector is not unit norm");
  }
}

JonesVector JonesVector::normalized(Complex h, Complex v) {
  const double n = std::sqrt(std::norm(h) + std::norm(v));
  if (!(n > 0.0)) throw DegenerateError("zero Jones vector");
  return JonesVector(h / n, v / n);
}

JonesVector jones_of(PolLabel label) {
  switch (label) {
    case PolLabel::H: return {1.0, 0.0};
    case PolLabel::V: return {0.0, 1.0};
    case PolLabel::D: return {kInvSqrt2, kInvSqrt2};
    case PolLabel::A: return {kInvSqrt2, -kInvSqrt2};
    case PolLabel::R: return {kInvSqrt2, kI * kInvSqrt2};
    case PolLabel::L: return {kInvSqrt2, -kI * kInvSqrt2};
  }
  return {1.0, 0.0};
}

ComplexMatrix projector(const JonesVector& state) {
  return ComplexMatrix::outer(state.amplitudes(), state.amplitudes());
}

ComplexMatrix projector(PolLabel label) { return projector(jones_of(label)); }

std::vector<MeasurementSetting> all_settings() {
  std::vector<MeasurementSetting> out;
  for (PolLabel s : kAllLabels)
    for (PolLabel i : kAllLabels) out.push_back({s, i});
  return out;
}

std::vector<MeasurementSetting> minimal_settings() {
  constexpr std::array<PolLabel, 4> labels{PolLabel::H, PolLabel::V,
                                           PolLabel::D, PolLabel::R};
  std::vector<MeasurementSetting> out;
  for (PolLabel s : labels)
    for (PolLabel i : labels) out.push_back({s, i});
  return out;
}

ComplexMatrix pair_operator(const MeasurementSetting& setting) {
  return tensor_product(projector(setting.signal), projector(setting.idler));
}

ComplexMatrix rotated_pair_operator(const DensityMatrix& seed_state,
                                    PolLabel idler) {
  if (seed_state.dim() != 2) {
    throw InvalidStateError("seed state must be a single-photon state");
  }
  return tensor_product(seed_state.matrix(), projector(idler));
}

ComplexMatrix half_wave_plate(double angle) {
  const double c = std::cos(2.0 * angle), s = std::sin(2.0 * angle);
  return ComplexMatrix(2, {c, s, s, -c});
}

ComplexMatrix quarter_wave_plate(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Complex off = (1.0 - kI) * s * c;
  return ComplexMatrix(2, {c * c + kI * s * s, off, off, s * s + kI * c * c});
}

WaveplateSetting waveplates_for(PolLabel label) {
  using std::numbers::pi;
  switch (label) {
    case PolLabel::H: return {0.0, 0.0};
    case PolLabel::V: return {pi / 4, 0.0};
    case PolLabel::D: return {pi / 8, pi / 4};
    case PolLabel::A: return {3 * pi / 8, pi / 4};
    case PolLabel::R: return {3 * pi / 8, 0.0};
    case PolLabel::L: return {pi / 8, 0.0};
  }
  return {0.0, 0.0};
}

ComplexMatrix analyzer_projector(const WaveplateSetting& setting) {
  const ComplexMatrix w =
      half_wave_plate(setting.hwp_angle) * quarter_wave_plate(setting.qwp_angle);
  return w.adjoint() * projector(PolLabel::H) * w;
}

}  // namespace stimtomo
