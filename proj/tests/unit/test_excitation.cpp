#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "trussest/excitation.hpp"
#include "trussest/signal.hpp"

using namespace trussest;

TEST(Chirp, PeakDisplacement) {
  EXPECT_NEAR(chirp_peak_displacement(0.1, 6.0, 10.0, 2e-3), 2e-3, 1e-12);
}

TEST(Chirp, FinalFrequencyFromZeroCrossings) {
  const double f0 = 0.1, f1 = 6.0, T = 10.0, dt = 1e-5;
  std::vector<double> crossings;
  double prev = chirp_displacement(0.0, f0, f1, T, 1.0);
  for (long i = 1; i * dt <= T + 1e-12; ++i) {
    const double t = i * dt;
    const double v = chirp_displacement(t, f0, f1, T, 1.0);
    if ((prev < 0) != (v < 0)) crossings.push_back(t - dt * v / (v - prev));
    prev = v;
  }
  ASSERT_GE(crossings.size(), 3u);
  const double half_period = crossings.back() - crossings[crossings.size() - 2];
  const double f_local = 0.5 / half_period;
  const double t_mid = 0.5 * (crossings.back() + crossings[crossings.size() - 2]);
  EXPECT_NEAR(f_local, chirp_frequency(t_mid, f0, f1, T), 1e-3);
  EXPECT_NEAR(f_local, f1, (f1 - f0) / T * (T - t_mid) + 1e-3);
}

TEST(Chirp, AccelerationIsSecondDerivative) {
  const double h = 1e-4;
  for (double t : {0.5, 3.3, 7.9}) {
    const double fd = (chirp_displacement(t + h, 0.1, 6, 10, 2e-3) - 2 * chirp_displacement(t, 0.1, 6, 10, 2e-3) +
                       chirp_displacement(t - h, 0.1, 6, 10, 2e-3)) / (h * h);
    EXPECT_NEAR(fd, chirp_acceleration(t, 0.1, 6, 10, 2e-3), 1e-5);
  }
  const GroundMotion g = chirp(0.1, 6.0, 10.0, 2e-3, 1e-3);
  EXPECT_EQ(g.accel.size(), 10001u);
  EXPECT_EQ(g.displacement.size(), g.accel.size());
}

TEST(Noise, MeanRmsAndBand) {
  const double fs = 1000.0, target = 0.1;
  const GroundMotion g = band_limited_noise(fs, 0.5, 20.0, target, 60.0, 4);
  const double n = static_cast<double>(g.accel.size());
  const double mean = std::accumulate(g.accel.begin(), g.accel.end(), 0.0) / n;
  EXPECT_LT(std::abs(mean), 3.0 * target / std::sqrt(n));
  EXPECT_NEAR(rms(g.accel) / target, 1.0, 0.01);
  const Spectrum s = welch_psd(g.accel, fs, 8192);
  double inside = 0.0, total = 0.0;
  for (size_t k = 0; k < s.freq.size(); ++k) {
    total += s.power[k];
    if (s.freq[k] >= 0.5 && s.freq[k] <= 20.0) inside += s.power[k];
  }
  EXPECT_GT(inside / total, 0.8);
  EXPECT_THROW(band_limited_noise(fs, 30.0, 20.0, 0.1, 1.0, 1), std::invalid_argument);
}

TEST(Noise, UnfilteredWhiteMeanBound) {
  // With f_lo = 0 the band reaches DC and the mean bound is the textbook one.
  const GroundMotion g = band_limited_noise(1000.0, 0.0, 490.0, 1.0, 100.0, 2, Axis::X, 1);
  const double n = static_cast<double>(g.accel.size());
  const double mean = std::accumulate(g.accel.begin(), g.accel.end(), 0.0) / n;
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(n));
}

TEST(KanaiTajimi, PeakAccelerationIsTarget) {
  const KanaiTajimiParams p;
  const GroundMotion g = kanai_tajimi(p, 1);
  EXPECT_EQ(g.peak_accel(), p.target_pga);
  EXPECT_NEAR(p.target_pga, 3.63, 0.01);
}

TEST(KanaiTajimi, SpectralPeakNearDominantFrequency) {
  const KanaiTajimiParams p;
  const GroundMotion g = kanai_tajimi(p, 1);
  const Spectrum s = welch_psd(g.accel, 1.0 / g.dt, 4096);
  EXPECT_NEAR(spectral_peak_frequency(s, 0.5), 4.0, 0.5);
}

TEST(KanaiTajimi, FilterHitsPeakAndBandwidth) {
  const KanaiTajimiFilter f = kanai_tajimi_filter(4.0, 4.0);
  EXPECT_NEAR(f.omega_g * kanai_tajimi_peak_ratio(f.zeta_g) / (2 * M_PI), 4.0, 1e-9);
  EXPECT_NEAR(kanai_tajimi_relative_bandwidth(f.zeta_g), 1.0, 1e-9);
  // Numerical maximum of the shape agrees with the closed form.
  double best = 0.0, wbest = 0.0;
  for (double w = 0.01; w < 5.0; w += 1e-4) {
    const double v = kanai_tajimi_spectrum(w, 1.0, 0.3);
    if (v > best) {
      best = v;
      wbest = w;
    }
  }
  EXPECT_NEAR(wbest, kanai_tajimi_peak_ratio(0.3), 2e-4);
}

TEST(KanaiTajimi, HoldWindowMatchesAnalyticShape) {
  const KanaiTajimiParams p;
  const double fs = 1.0 / p.dt;
  const int nseg = 1024;
  const size_t i0 = static_cast<size_t>(p.rise_fraction * p.duration * fs);
  const size_t i1 = static_cast<size_t>((1.0 - p.decay_fraction) * p.duration * fs);
  const KanaiTajimiFilter f = kanai_tajimi_filter(p.dominant_freq, p.freq_std);
  std::vector<double> avg;
  std::vector<double> freq;
  for (int seed = 1; seed <= 50; ++seed) {
    const GroundMotion g = kanai_tajimi(p, seed);
    std::vector<double> hold(g.accel.begin() + i0, g.accel.begin() + i1);
    Spectrum s = welch_psd(hold, fs, nseg);
    double band = 0.0;
    for (size_t k = 0; k < s.freq.size(); ++k)
      if (s.freq[k] >= 1.0 && s.freq[k] <= 12.0) band += s.power[k];
    if (avg.empty()) {
      avg.assign(s.power.size(), 0.0);
      freq = s.freq;
    }
    for (size_t k = 0; k < s.power.size(); ++k) avg[k] += s.power[k] / band;
  }
  double band = 0.0;
  for (size_t k = 0; k < freq.size(); ++k)
    if (freq[k] >= 1.0 && freq[k] <= 12.0) band += kanai_tajimi_spectrum(2 * M_PI * freq[k], f.omega_g, f.zeta_g);
  double worst = 0.0;
  for (size_t k = 0; k < freq.size(); ++k) {
    if (freq[k] < 1.0 || freq[k] > 12.0) continue;
    const double model = kanai_tajimi_spectrum(2 * M_PI * freq[k], f.omega_g, f.zeta_g) / band;
    worst = std::max(worst, std::abs(avg[k] / 50.0 / model - 1.0));
  }
  EXPECT_LT(worst, 0.2);
}

TEST(KanaiTajimi, Deterministic) {
  const KanaiTajimiParams p;
  EXPECT_EQ(kanai_tajimi(p, 5).accel, kanai_tajimi(p, 5).accel);
  EXPECT_NE(kanai_tajimi(p, 5).accel, kanai_tajimi(p, 6).accel);
  EXPECT_EQ(band_limited_noise(500, 1, 20, 0.1, 5, 3).accel, band_limited_noise(500, 1, 20, 0.1, 5, 3).accel);
}

TEST(KanaiTajimi, Envelope) {
  const KanaiTajimiParams p;
  EXPECT_EQ(kanai_tajimi_envelope(0.0, p), 0.0);
  EXPECT_EQ(kanai_tajimi_envelope(8.0, p), 1.0);
  EXPECT_NEAR(kanai_tajimi_envelope(p.duration, p), p.decay_floor, 1e-12);
  EXPECT_THROW(kanai_tajimi_filter(4.0, -1.0), std::invalid_argument);
}

TEST(Signal, RmseAndLag) {
  std::vector<double> a(500);
  for (size_t i = 0; i < a.size(); ++i) a[i] = std::sin(0.07 * static_cast<double>(i)) + 0.3 * std::sin(0.31 * i);
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_EQ(cross_correlation_lag(a, a, 20), 0);
  std::vector<double> shifted(a.size(), 0.0);
  for (size_t i = 3; i < a.size(); ++i) shifted[i] = a[i - 3];
  EXPECT_EQ(cross_correlation_lag(a, shifted, 20), 3);
  EXPECT_EQ(cross_correlation_lag(shifted, a, 20), -3);
}

TEST(Signal, WhiteResidualRmse) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 0.4);
  std::vector<double> r(10000), z(10000, 0.0);
  for (double& v : r) v = nd(rng);
  EXPECT_NEAR(rmse(r, z) / 0.4, 1.0, 0.05);
  EXPECT_NEAR(rms(r), rmse(r, z), 1e-15);
  EXPECT_THROW(rmse(r, std::vector<double>(3)), std::invalid_argument);
}

TEST(Signal, PeriodogramOfSine) {
  const double fs = 100.0;
  std::vector<double> x(1000);
  for (size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * M_PI * 7.3 * i / fs);
  EXPECT_NEAR(spectral_peak_frequency(periodogram(x, fs)), 7.3, 0.05);
  // Parseval: integral of the one-sided PSD equals the variance.
  const Spectrum s = periodogram(x, fs);
  double integral = 0.0;
  for (double p : s.power) integral += p * fs / static_cast<double>(x.size());
  EXPECT_NEAR(integral, 0.5, 1e-3);
}
