#include "trussest/signal.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace trussest {

namespace {

Spectrum segment_average(const std::vector<double>& x, double fs, int nseg, bool hann) {
  if (nseg < 2 || static_cast<size_t>(nseg) > x.size())
    throw std::invalid_argument("spectral estimate: segment length must lie in [2, signal length]");
  if (!(fs > 0.0)) throw std::invalid_argument("spectral estimate: sampling rate must be positive");
  std::vector<double> w(nseg, 1.0);
  if (hann)
    for (int i = 0; i < nseg; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / nseg);
  double wss = 0.0;
  for (double v : w) wss += v * v;

  const int step = hann ? nseg / 2 : nseg;
  const int nfreq = nseg / 2 + 1;
  Spectrum s;
  s.freq.resize(nfreq);
  s.power.assign(nfreq, 0.0);
  for (int k = 0; k < nfreq; ++k) s.freq[k] = fs * k / nseg;

  Eigen::FFT<double> fft;
  std::vector<double> buf(nseg);
  std::vector<std::complex<double>> spec;
  int count = 0;
  for (size_t start = 0; start + nseg <= x.size(); start += step) {
    double mean = 0.0;
    for (int i = 0; i < nseg; ++i) mean += x[start + i];
    mean /= nseg;
    for (int i = 0; i < nseg; ++i) buf[i] = (x[start + i] - mean) * w[i];
    fft.fwd(spec, buf);
    for (int k = 0; k < nfreq; ++k) {
      double p = std::norm(spec[k]) / (fs * wss);
      if (k != 0 && !(nseg % 2 == 0 && k == nseg / 2)) p *= 2.0;
      s.power[k] += p;
    }
    ++count;
  }
  for (double& p : s.power) p /= count;
  return s;
}

}  // namespace

Spectrum welch_psd(const std::vector<double>& x, double fs, int segment_length) {
  return segment_average(x, fs, segment_length, true);
}

Spectrum periodogram(const std::vector<double>& x, double fs) {
  return segment_average(x, fs, static_cast<int>(x.size()), false);
}

int cross_correlation_lag(const std::vector<double>& ref, const std::vector<double>& est,
                          int max_lag) {
  if (ref.size() != est.size() || ref.empty())
    throw std::invalid_argument("cross-correlation: signals must be nonempty and of equal length");
  const long n = static_cast<long>(ref.size());
  int best = 0;
  double best_val = -INFINITY;
  for (int L = -max_lag; L <= max_lag; ++L) {
    // biased sum, so identical signals always peak at zero lag
    double acc = 0.0;
    for (long k = std::max(0L, -static_cast<long>(L)); k < n && k + L < n; ++k) acc += ref[k] * est[k + L];
    if (acc > best_val || (acc == best_val && std::abs(L) < std::abs(best))) {
      best_val = acc;
      best = L;
    }
  }
  return best;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("rmse: signals must be nonempty and of equal length");
  double ss = 0.0;
  for (size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss / static_cast<double>(a.size()));
}

double peak_abs_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("peak error: signals must be nonempty and of equal length");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rms(const std::vector<double>& a) {
  if (a.empty()) throw std::invalid_argument("rms: empty signal");
  double ss = 0.0;
  for (double v : a) ss += v * v;
  return std::sqrt(ss / static_cast<double>(a.size()));
}

double spectral_peak_frequency(const Spectrum& s, double f_min) {
  size_t best = 0;
  bool found = false;
  for (size_t k = 0; k < s.power.size(); ++k) {
    if (s.freq[k] < f_min) continue;
    if (!found || s.power[k] > s.power[best]) {
      best = k;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("spectral peak: no bins above f_min");
  if (best == 0 || best + 1 >= s.power.size()) return s.freq[best];
  const double a = s.power[best - 1], b = s.power[best], c = s.power[best + 1];
  const double denom = a - 2.0 * b + c;
  const double delta = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return s.freq[best] + delta * (s.freq[1] - s.freq[0]);
}

}  // namespace trussest
