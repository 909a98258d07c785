#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "ssvep/common.hpp"

// Butterworth band-pass design (analog prototype -> band transform ->
// bilinear with prewarping) realized as a cascade of biquad sections, plus
// zero-phase forward-backward filtering with odd-reflection padding and
// steady-state initial conditions, so step inputs produce no start-up
// transient.

namespace ssvep {

/// One second-order section, direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

namespace detail {

inline std::vector<std::complex<double>> butter_prototype_poles(int order) {
  std::vector<std::complex<double>> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta =
        std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

}  // namespace detail

/// Designs an order-n Butterworth band-pass (2n poles) for the digital band
/// [low_hz, high_hz] at sample rate fs_hz. Band edges are prewarped so the
/// -3 dB points land exactly on low_hz and high_hz.
inline std::vector<Biquad> design_butter_bandpass(int order, double low_hz,
                                                  double high_hz, double fs_hz) {
  detail::require(order >= 1 && order <= 12, "design_butter_bandpass: order out of range");
  detail::require(fs_hz > 0.0, "design_butter_bandpass: sample rate must be positive");
  detail::require(low_hz > 0.0 && high_hz > low_hz && high_hz < fs_hz / 2.0,
                  "design_butter_bandpass: band must lie strictly inside (0, Nyquist)");

  const double fs2 = 2.0 * fs_hz;
  const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / fs_hz);
  const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0_sq = w1 * w2;

  // Low-pass prototype poles through the band-pass transform:
  // s_lp -> (s^2 + w0^2) / (bw * s), each prototype pole splits in two.
  std::vector<std::complex<double>> apoles;
  apoles.reserve(static_cast<std::size_t>(2 * order));
  for (const auto& p : detail::butter_prototype_poles(order)) {
    const std::complex<double> half = 0.5 * bw * p;
    const std::complex<double> d = std::sqrt(half * half - w0_sq);
    apoles.push_back(half + d);
    apoles.push_back(half - d);
  }

  // Bilinear transform. The analog transfer has `order` zeros at s = 0 and
  // gain bw^order; the digital version gets `order` zeros at z = +1 and the
  // remaining `order` (from infinity) at z = -1.
  std::vector<std::complex<double>> zpoles;
  zpoles.reserve(apoles.size());
  std::complex<double> denom(1.0, 0.0);
  for (const auto& s : apoles) {
    zpoles.push_back((fs2 + s) / (fs2 - s));
    denom *= (fs2 - s);
  }
  const std::complex<double> k_complex =
      std::pow(bw * fs2, static_cast<double>(order)) / denom;
  detail::require(std::fabs(k_complex.imag()) < 1e-6 * std::fabs(k_complex.real()),
                  "design_butter_bandpass: gain should be real");
  const double k_digital = k_complex.real();
  detail::require(k_digital > 0.0, "design_butter_bandpass: gain should be positive");

  // Pair poles into conjugate sections.
  std::vector<std::complex<double>> upper;
  std::vector<double> reals;
  for (const auto& p : zpoles) {
    detail::require(std::abs(p) < 1.0, "design_butter_bandpass: unstable pole");
    if (p.imag() > 1e-12)
      upper.push_back(p);
    else if (p.imag() >= -1e-12)
      reals.push_back(p.real());
  }
  detail::require(upper.size() * 2 + reals.size() == zpoles.size(),
                  "design_butter_bandpass: conjugate pairing failed");
  detail::require(reals.size() % 2 == 0,
                  "design_butter_bandpass: unpaired real pole");

  const std::size_t n_sections = upper.size() + reals.size() / 2;
  const double g = std::pow(k_digital, 1.0 / static_cast<double>(n_sections));

  std::vector<Biquad> sos;
  sos.reserve(n_sections);
  for (const auto& p : upper) {
    Biquad s;
    s.b0 = g;
    s.b1 = 0.0;
    s.b2 = -g;  // zeros at +1 and -1: g (z^2 - 1)
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    sos.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad s;
    s.b0 = g;
    s.b1 = 0.0;
    s.b2 = -g;
    s.a1 = -(reals[i] + reals[i + 1]);
    s.a2 = reals[i] * reals[i + 1];
    sos.push_back(s);
  }
  return sos;
}

/// Single-pass magnitude response |H(e^{i 2 pi f / fs})| of a cascade.
inline double sos_magnitude(const std::vector<Biquad>& sos, double freq_hz,
                            double fs_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs_hz;
  const std::complex<double> z1(std::cos(-w), std::sin(-w));
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const auto& s : sos)
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

namespace detail {

/// Steady-state section states for a unit-step input (lfilter_zi analogue,
/// direct form II transposed). Scaling by the actual first sample happens at
/// call time; sections past the first also pick up the upstream DC gains.
inline std::vector<std::array<double, 2>> sos_step_states(const std::vector<Biquad>& sos) {
  std::vector<std::array<double, 2>> zi;
  zi.reserve(sos.size());
  double carry = 1.0;  // DC gain accumulated over preceding sections
  for (const auto& s : sos) {
    const double h1 = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double s2 = (s.b2 - s.a2 * h1) * carry;
    const double s1 = (s.b1 - s.a1 * h1) * carry + s2;
    zi.push_back({s1, s2});
    carry *= h1;
  }
  return zi;
}

inline void sosfilt_inplace(const std::vector<Biquad>& sos, std::vector<double>& x,
                            const std::vector<std::array<double, 2>>& step_states,
                            double x0) {
  for (std::size_t si = 0; si < sos.size(); ++si) {
    const auto& s = sos[si];
    double s1 = step_states[si][0] * x0;
    double s2 = step_states[si][1] * x0;
    for (auto& v : x) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace detail

/// Zero-phase forward-backward filtering. The input is extended on both ends
/// by `pad` samples of periodic wrap-around, filtered in both directions
/// with steady-state initial conditions, and the extensions are stripped.
///
/// Periodic extension suits a resonant band-pass applied to steady-state
/// oscillations: a reflection (odd or even) reverses the phase trajectory at
/// the junction and the narrow filter rings for seconds while re-locking,
/// right at the output edge. Wrapping continues the oscillation's phase, so
/// for any signal that is close to periodic over its full length the filter
/// state at the junction is already the steady state.
inline std::vector<double> filtfilt(const std::vector<Biquad>& sos,
                                    std::span<const double> x, std::size_t pad) {
  detail::require(!sos.empty(), "filtfilt: empty filter");
  detail::require(pad >= 1, "filtfilt: pad must be positive");
  detail::require(x.size() > pad,
                  "filtfilt: input shorter than the filter warm-up");

  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(x[n - pad + i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(x[i]);

  const auto zi = detail::sos_step_states(sos);
  detail::sosfilt_inplace(sos, ext, zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  detail::sosfilt_inplace(sos, ext, zi, ext.front());
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

/// Single-direction filtering with steady-state initial conditions.
inline std::vector<double> sosfilt(const std::vector<Biquad>& sos,
                                   std::span<const double> x) {
  detail::require(!sos.empty(), "sosfilt: empty filter");
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  const auto zi = detail::sos_step_states(sos);
  detail::sosfilt_inplace(sos, y, zi, y.front());
  return y;
}

}  // namespace ssvep
