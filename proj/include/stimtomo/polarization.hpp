#pragma once

#include <array>
#include <compare>
#include <vector>

#include "stimtomo/matrix.hpp"
#include "stimtomo/quantum.hpp"

namespace stimtomo {

enum class PolLabel { H, V, D, A, R, L };

inline constexpr std::array<PolLabel, 6> kAllLabels{
    PolLabel::H, PolLabel::V, PolLabel::D,
    PolLabel::A, PolLabel::R, PolLabel::L};

/// The three mutually unbiased analysis bases, each named by its
/// transmitted label.
enum class Basis { HV, DA, RL };

inline constexpr std::array<Basis, 3> kAllBases{Basis::HV, Basis::DA,
                                                Basis::RL};

char to_char(PolLabel label);
/// Throws DataError for anything but one of "HVDARL".
PolLabel label_from_char(char c);

Basis basis_of(PolLabel label);
PolLabel transmitted_label(Basis basis);
PolLabel reflected_label(Basis basis);
PolLabel orthogonal(PolLabel label);

/// Unit-norm polarisation state (h, v).
class JonesVector {
 public:
  /// Throws std::invalid_argument unless |h|^2 + |v|^2 = 1 within 1e-12.
  JonesVector(Complex h, Complex v);
  /// Rescales (h, v) to unit norm; throws DegenerateError for a zero vector.
  static JonesVector normalized(Complex h, Complex v);

  Complex h() const { return amps_[0]; }
  Complex v() const { return amps_[1]; }
  std::span<const Complex> amplitudes() const { return amps_; }

 private:
  std::array<Complex, 2> amps_;
};

/// H=(1,0), V=(0,1), D=(1,1)/√2, A=(1,-1)/√2, R=(1,i)/√2, L=(1,-i)/√2.
/// The circular sign follows the tabulated seed matrices, whose R projector
/// carries -i/2 in the upper off-diagonal.
JonesVector jones_of(PolLabel label);

ComplexMatrix projector(PolLabel label);
ComplexMatrix projector(const JonesVector& state);

struct MeasurementSetting {
  PolLabel signal;
  PolLabel idler;

  friend auto operator<=>(const MeasurementSetting&,
                          const MeasurementSetting&) = default;
};

/// All 36 signal/idler label pairs, signal-major in kAllLabels order.
std::vector<MeasurementSetting> all_settings();

/// The 16 settings {H,V,D,R} x {H,V,D,R}; their pair operators span the
/// two-qubit operator space.
std::vector<MeasurementSetting> minimal_settings();

ComplexMatrix pair_operator(const MeasurementSetting& setting);

/// rho_seed ⊗ |i><i|, the measurement operator for a seed whose coupled
/// polarisation was reconstructed as `seed_state`.
ComplexMatrix rotated_pair_operator(const DensityMatrix& seed_state,
                                    PolLabel idler);

/// Analyser angles, each normalised to [0, pi).
struct WaveplateSetting {
  double hwp_angle;
  double qwp_angle;
};

/// Jones matrices of ideal retarders with fast axis at `angle` from H,
/// global phase dropped.
ComplexMatrix half_wave_plate(double angle);
ComplexMatrix quarter_wave_plate(double angle);

/// Analyser order is QWP, then HWP, then an H-transmitting PBS. The returned
/// angles make the transmitted port project onto `label`.
WaveplateSetting waveplates_for(PolLabel label);

/// W^dagger |H><H| W with W = HWP * QWP: the projector implemented by the
/// transmitted port at `setting`.
ComplexMatrix analyzer_projector(const WaveplateSetting& setting);

}  // namespace stimtomo
