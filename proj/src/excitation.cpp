#include "trussest/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "trussest/linalg.hpp"

namespace trussest {

namespace {

constexpr double kPi = std::numbers::pi;

double interpolate(const std::vector<double>& v, double dt, double t) {
  if (v.empty() || t < 0.0) return 0.0;
  const double s = t / dt;
  const auto i = static_cast<size_t>(std::floor(s));
  if (i + 1 >= v.size()) return i + 1 == v.size() ? v.back() : 0.0;
  const double frac = s - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

// Golden-section maximization of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, int iters = 200) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++i) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = f(d);
    }
  }
  return std::max({fc, fd, f(0.5 * (a + b))});
}

}  // namespace

double GroundMotion::accel_at(double t) const { return interpolate(accel, dt, t); }

double GroundMotion::displacement_at(double t) const { return interpolate(displacement, dt, t); }

double GroundMotion::peak_accel() const {
  double m = 0.0;
  for (double a : accel) m = std::max(m, std::abs(a));
  return m;
}

void GroundMotion::scale(double factor) {
  for (double& a : accel) a *= factor;
  for (double& x : displacement) x *= factor;
}

void GroundMotion::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("ground motion time step must be positive");
  for (double a : accel)
    if (!std::isfinite(a)) throw std::invalid_argument("ground motion has non-finite samples");
}

// ---------------------------------------------------------------- chirp

double chirp_frequency(double t, double f0, double f1, double T) { return f0 + (f1 - f0) * t / T; }

double chirp_displacement(double t, double f0, double f1, double T, double A) {
  return A * std::sin(2.0 * kPi * (f0 * t + 0.5 * (f1 - f0) * t * t / T));
}

double chirp_acceleration(double t, double f0, double f1, double T, double A) {
  const double phi = 2.0 * kPi * (f0 * t + 0.5 * (f1 - f0) * t * t / T);
  const double dphi = 2.0 * kPi * chirp_frequency(t, f0, f1, T);
  const double ddphi = 2.0 * kPi * (f1 - f0) / T;
  return A * (std::cos(phi) * ddphi - std::sin(phi) * dphi * dphi);
}

GroundMotion chirp(double f0, double f1, double T, double amplitude, double dt, Axis direction) {
  if (!(f0 > 0.0) || !(f1 > f0)) throw std::invalid_argument("chirp requires 0 < f0 < f1");
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("chirp requires T > 0 and dt > 0");
  GroundMotion g;
  g.dt = dt;
  g.direction = direction;
  g.type = "chirp";
  g.parameters = {{"f0_hz", f0}, {"f1_hz", f1}, {"duration_s", T}, {"amplitude_m", amplitude}};
  const auto n = static_cast<size_t>(std::llround(T / dt)) + 1;
  g.accel.resize(n);
  g.displacement.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    g.displacement[i] = chirp_displacement(t, f0, f1, T, amplitude);
    g.accel[i] = chirp_acceleration(t, f0, f1, T, amplitude);
  }
  return g;
}

double chirp_peak_displacement(double f0, double f1, double T, double amplitude) {
  auto f = [&](double t) { return std::abs(chirp_displacement(t, f0, f1, T, amplitude)); };
  // Grid fine enough to resolve every half period near f1.
  const int n = std::max(1000, static_cast<int>(std::ceil(40.0 * f1 * T)));
  const double h = T / n;
  int best = 0;
  double fb = -1.0;
  for (int i = 0; i <= n; ++i) {
    const double v = f(i * h);
    if (v > fb) { fb = v; best = i; }
  }
  const double a = std::max(0.0, (best - 1) * h), b = std::min(T, (best + 1) * h);
  return std::max(fb, golden_max(f, a, b));
}

// ---------------------------------------------------------------- noise

GroundMotion band_limited_noise(double fs, double f_lo, double f_hi, double rms, double T,
                                std::uint64_t seed, Axis direction, int order) {
  if (!(fs > 0.0) || !(T > 0.0)) throw std::invalid_argument("noise requires fs > 0 and T > 0");
  if (!(f_hi > 0.0) || !(f_hi < 0.5 * fs))
    throw std::invalid_argument("noise band upper edge must lie in (0, fs/2)");
  if (f_lo >= f_hi) throw std::invalid_argument("noise band lower edge must be below the upper edge");
  if (!(rms > 0.0)) throw std::invalid_argument("noise RMS must be positive");
  if (order < 1) throw std::invalid_argument("noise filter order must be >= 1");

  const auto n = static_cast<size_t>(std::llround(T * fs)) + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);

  auto run_section = [&](double b0, double b1, double a1) {
    double xp = 0.0, yp = 0.0;
    for (auto& v : x) {
      const double y = b0 * v + b1 * xp - a1 * yp;
      xp = v;
      yp = y;
      v = y;
    }
  };
  const double Kl = std::tan(kPi * f_hi / fs);
  for (int s = 0; s < order; ++s)
    run_section(Kl / (1.0 + Kl), Kl / (1.0 + Kl), (Kl - 1.0) / (Kl + 1.0));
  if (f_lo > 0.0) {
    const double Kh = std::tan(kPi * f_lo / fs);
    for (int s = 0; s < order; ++s)
      run_section(1.0 / (1.0 + Kh), -1.0 / (1.0 + Kh), (Kh - 1.0) / (Kh + 1.0));
  }

  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double scale = rms / std::sqrt(ss / static_cast<double>(n));
  GroundMotion g;
  g.dt = 1.0 / fs;
  g.direction = direction;
  g.type = "noise";
  g.seed = seed;
  g.parameters = {{"fs_hz", fs}, {"f_lo_hz", f_lo}, {"f_hi_hz", f_hi}, {"rms_mps2", rms},
                  {"duration_s", T}, {"order", order}};
  g.accel.resize(n);
  for (size_t i = 0; i < n; ++i) g.accel[i] = scale * x[i];
  return g;
}

// ---------------------------------------------------------------- Kanai-Tajimi

double kanai_tajimi_spectrum(double omega, double omega_g, double zeta_g) {
  const double w2 = omega * omega, g2 = omega_g * omega_g;
  const double c = 4.0 * zeta_g * zeta_g * g2 * w2;
  return (g2 * g2 + c) / ((g2 - w2) * (g2 - w2) + c);
}

namespace {

// Stationary point of the spectrum with omega_g = 1:
// r^2 = (sqrt(1 + 8 z^2) - 1) / (4 z^2).
double peak_r(double zeta) {
  const double z2 = zeta * zeta;
  return std::sqrt((std::sqrt(1.0 + 8.0 * z2) - 1.0) / (4.0 * z2));
}

double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm > 0) == (fa > 0)) { a = m; fa = fm; } else { b = m; }
  }
  return 0.5 * (a + b);
}

}  // namespace

double kanai_tajimi_peak_ratio(double zeta_g) {
  if (!(zeta_g > 0.0)) throw std::invalid_argument("ground damping must be positive");
  return peak_r(zeta_g);
}

double kanai_tajimi_relative_bandwidth(double zeta_g) {
  const double rp = kanai_tajimi_peak_ratio(zeta_g);
  const double half = 0.5 * kanai_tajimi_spectrum(rp, 1.0, zeta_g);
  auto g = [&](double r) { return kanai_tajimi_spectrum(r, 1.0, zeta_g) - half; };
  // Spectrum falls monotonically on either side of the peak; the lower
  // half-power point is clipped at zero frequency when it does not exist.
  const double lo = g(0.0) >= 0.0 ? 0.0 : bisect(g, 0.0, rp);
  double hi_edge = 2.0 * rp;
  while (g(hi_edge) > 0.0) hi_edge *= 2.0;
  const double hi = bisect(g, rp, hi_edge);
  return (hi - lo) / rp;
}

KanaiTajimiFilter kanai_tajimi_filter(double dominant_freq, double freq_std) {
  if (!(dominant_freq > 0.0)) throw std::invalid_argument("dominant frequency must be positive");
  if (!(freq_std > 0.0)) throw std::invalid_argument("spectral standard deviation must be positive");
  const double target = freq_std / dominant_freq;
  // Relative bandwidth grows monotonically with damping.
  double lo = 1e-3, hi = 0.999;
  if (kanai_tajimi_relative_bandwidth(lo) > target || kanai_tajimi_relative_bandwidth(hi) < target)
    throw std::invalid_argument("spectral standard deviation outside the attainable range (ratio " +
                                std::to_string(target) + ")");
  for (int it = 0; it < 80; ++it) {
    const double m = 0.5 * (lo + hi);
    if (kanai_tajimi_relative_bandwidth(m) < target) lo = m; else hi = m;
  }
  KanaiTajimiFilter f;
  f.zeta_g = 0.5 * (lo + hi);
  f.omega_g = 2.0 * kPi * dominant_freq / kanai_tajimi_peak_ratio(f.zeta_g);
  return f;
}

double kanai_tajimi_envelope(double t, const KanaiTajimiParams& p) {
  const double T = p.duration;
  const double t1 = p.rise_fraction * T;
  const double t2 = (1.0 - p.decay_fraction) * T;
  if (t < 0.0 || t > T) return 0.0;
  if (t < t1) return (t / t1) * (t / t1);
  if (t <= t2) return 1.0;
  const double c = -std::log(p.decay_floor) / (T - t2);
  return std::exp(-c * (t - t2));
}

GroundMotion kanai_tajimi(const KanaiTajimiParams& p, std::uint64_t seed, Axis direction) {
  if (!(p.duration > 0.0) || !(p.dt > 0.0)) throw std::invalid_argument("earthquake duration and dt must be positive");
  if (!(p.target_pga > 0.0)) throw std::invalid_argument("target PGA must be positive");
  if (!(p.rise_fraction > 0.0) || !(p.decay_fraction > 0.0) ||
      p.rise_fraction + p.decay_fraction > 1.0 || !(p.decay_floor > 0.0 && p.decay_floor < 1.0))
    throw std::invalid_argument("invalid earthquake envelope fractions");

  const auto flt = kanai_tajimi_filter(p.dominant_freq, p.freq_std);
  const double wg = flt.omega_g, zg = flt.zeta_g;

  // Exact discretization of x'' + 2 z w x' + w^2 x = -u with u held per step.
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(3, 3);
  aug(0, 1) = 1.0;
  aug(1, 0) = -wg * wg;
  aug(1, 1) = -2.0 * zg * wg;
  aug(1, 2) = -1.0;
  const Eigen::MatrixXd E = expm(aug * p.dt);
  const Eigen::Matrix2d Phi = E.topLeftCorner(2, 2);
  const Eigen::Vector2d Gam = E.topRightCorner(2, 1);

  const auto n = static_cast<size_t>(std::llround(p.duration / p.dt)) + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(p.dt));
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  std::vector<double> a(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * p.dt;
    const double ag = -(2.0 * zg * wg * s[1] + wg * wg * s[0]);
    a[i] = kanai_tajimi_envelope(t, p) * ag;
    s = Phi * s + Gam * normal(rng);
  }
  double peak = 0.0;
  for (double v : a) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw std::runtime_error("earthquake realization is identically zero");
  const double k = p.target_pga / peak;
  for (double& v : a) v = std::clamp(v * k, -p.target_pga, p.target_pga);
  const auto ipk = std::max_element(a.begin(), a.end(),
                                    [](double x, double y) { return std::abs(x) < std::abs(y); });
  *ipk = std::copysign(p.target_pga, *ipk);

  GroundMotion g;
  g.dt = p.dt;
  g.direction = direction;
  g.type = "quake";
  g.seed = seed;
  g.accel = std::move(a);
  g.parameters = {{"duration_s", p.duration}, {"dominant_freq_hz", p.dominant_freq},
                  {"freq_std_hz", p.freq_std}, {"target_pga_mps2", p.target_pga},
                  {"omega_g_radps", wg}, {"zeta_g", zg}};
  return g;
}

}  // namespace trussest
