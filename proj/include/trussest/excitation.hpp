#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trussest/types.hpp"

namespace trussest {

struct GroundMotion {
  double dt = 0.0;
  std::vector<double> accel;         // m/s^2
  std::vector<double> displacement;  // m, filled when known analytically
  Axis direction = Axis::X;
  std::string type;
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;

  double duration() const { return accel.empty() ? 0.0 : dt * static_cast<double>(accel.size() - 1); }
  // Linear interpolation, zero outside the record.
  double accel_at(double t) const;
  double displacement_at(double t) const;
  double peak_accel() const;
  void scale(double factor);
  void validate() const;
};

// Linear sine sweep x(t) = A sin(2 pi (f0 t + (f1 - f0) t^2 / (2T))).
double chirp_displacement(double t, double f0, double f1, double T, double amplitude);
double chirp_acceleration(double t, double f0, double f1, double T, double amplitude);
double chirp_frequency(double t, double f0, double f1, double T);
GroundMotion chirp(double f0, double f1, double T, double amplitude, double dt,
                   Axis direction = Axis::X);
// Largest |x(t)| on [0, T], located on a fine grid and refined by golden
// section search on the analytic signal.
double chirp_peak_displacement(double f0, double f1, double T, double amplitude);

// Gaussian white noise passed through `order` first-order high-pass sections
// at f_lo (skipped when f_lo <= 0) and low-pass sections at f_hi, then scaled
// to the target RMS.
GroundMotion band_limited_noise(double fs, double f_lo, double f_hi, double rms, double T,
                                std::uint64_t seed, Axis direction = Axis::X, int order = 4);

struct KanaiTajimiParams {
  double duration = 20.0;       // s
  double dominant_freq = 4.0;   // Hz, spectral peak
  double freq_std = 4.0;        // Hz, half-power bandwidth
  double target_pga = 0.37 * 9.81;
  double dt = 0.001;
  double rise_fraction = 0.15;
  double decay_fraction = 0.35;
  double decay_floor = 0.05;    // envelope value at the end of the record
};

struct KanaiTajimiFilter {
  double omega_g = 0.0;  // rad/s
  double zeta_g = 0.0;
};

// Unit-intensity Kanai-Tajimi spectral shape.
double kanai_tajimi_spectrum(double omega, double omega_g, double zeta_g);
// Peak location as a fraction of omega_g and half-power bandwidth relative to
// the peak, both functions of the damping only.
double kanai_tajimi_peak_ratio(double zeta_g);
double kanai_tajimi_relative_bandwidth(double zeta_g);
// Ground filter whose spectrum peaks at dominant_freq with half-power
// bandwidth freq_std.
KanaiTajimiFilter kanai_tajimi_filter(double dominant_freq, double freq_std);
double kanai_tajimi_envelope(double t, const KanaiTajimiParams& p);

GroundMotion kanai_tajimi(const KanaiTajimiParams& params, std::uint64_t seed,
                          Axis direction = Axis::X);

}  // namespace trussest
