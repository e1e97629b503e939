#pragma once

#include <vector>

namespace trussest {

struct Spectrum {
  std::vector<double> freq;   // Hz
  std::vector<double> power;  // one-sided PSD, units^2/Hz
};

// Welch estimate with a Hann window and 50% overlap.
Spectrum welch_psd(const std::vector<double>& x, double fs, int segment_length);
Spectrum periodogram(const std::vector<double>& x, double fs);

// Lag L maximizing sum_k ref[k] est[k + L] over |L| <= max_lag. Positive when
// the estimate trails the reference.
int cross_correlation_lag(const std::vector<double>& ref, const std::vector<double>& est,
                          int max_lag);

double rmse(const std::vector<double>& a, const std::vector<double>& b);
double peak_abs_error(const std::vector<double>& a, const std::vector<double>& b);
double rms(const std::vector<double>& a);

// Frequency of the largest value with a three-point parabolic refinement.
double spectral_peak_frequency(const Spectrum& s, double f_min = 0.0);

}  // namespace trussest
