#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssvep/common.hpp"
#include "ssvep/edf.hpp"
#include "ssvep/fft.hpp"
#include "ssvep/filter.hpp"

// Analysis chain for one recording condition: band-pass around the stimulus
// frequency, cut into 1 s epochs, take the maximal FFT magnitude of each.

namespace ssvep {

/// Band-pass parameters; the band is centre +- bandwidth/2.
struct FilterSpec {
  double center_hz = 0.0;
  double bandwidth_hz = 2.0;
  int order = 4;
  bool zero_phase = true;

  double low_hz() const { return center_hz - bandwidth_hz / 2.0; }
  double high_hz() const { return center_hz + bandwidth_hz / 2.0; }

  void validate(double fs_hz) const {
    detail::require(detail::finite(center_hz) && detail::finite(bandwidth_hz),
                    "FilterSpec: parameters must be finite");
    detail::require(bandwidth_hz > 0.0, "FilterSpec: bandwidth must be positive");
    detail::require(order >= 1, "FilterSpec: order must be at least 1");
    detail::require(low_hz() > 0.0,
                    "FilterSpec: band must stay above 0 Hz (centre too low)");
    detail::require(high_hz() < fs_hz / 2.0,
                    "FilterSpec: band must stay below the Nyquist frequency");
  }

  /// Samples consumed by edge padding in zero-phase mode; inputs must be
  /// longer than this (3 s at order 4, 128 Hz).
  std::size_t warmup_samples(double fs_hz) const {
    return static_cast<std::size_t>(std::llround(0.75 * order * fs_hz));
  }
};

/// One second of samples cut from a trial.
struct Epoch {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  int trial_index = 0;
  int segment_index = 0;
};

/// Identifies one recording condition of the protocol.
struct Condition {
  int subject = 0;
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
};

/// Per-epoch maximal FFT magnitudes for one condition, ordered
/// (trial, segment).
struct AmplitudeSet {
  Condition condition;
  std::vector<double> amplitudes;
};

/// Result of cutting a series into non-overlapping 1 s epochs. Residual
/// samples shorter than one epoch are dropped and counted, not hidden.
struct SegmentResult {
  std::vector<Epoch> epochs;
  std::size_t dropped_samples = 0;
};

/// Peak of one epoch's magnitude spectrum over the non-DC, non-Nyquist bins.
struct PeakAmplitude {
  double peak_bin_hz = 0.0;
  double amplitude = 0.0;
};

/// Band-passes a series around spec.center_hz. Zero-phase mode runs the
/// filter forward and backward, so peaks keep their position and the
/// effective attenuation doubles (in dB).
inline SampleSeries bandpass(const SampleSeries& series, const FilterSpec& spec) {
  detail::require(series.sample_rate_hz > 0.0, "bandpass: sample rate must be known");
  spec.validate(series.sample_rate_hz);
  for (double v : series.values)
    detail::require(detail::finite(v), "bandpass: non-finite sample");

  const auto sos = design_butter_bandpass(spec.order, spec.low_hz(), spec.high_hz(),
                                          series.sample_rate_hz);
  SampleSeries out;
  out.sample_rate_hz = series.sample_rate_hz;
  out.label = series.label;
  if (spec.zero_phase) {
    const std::size_t pad = spec.warmup_samples(series.sample_rate_hz);
    detail::require(series.values.size() > pad,
                    "bandpass: series shorter than the filter warm-up (need more than " +
                        std::to_string(pad) + " samples)");
    out.values = filtfilt(sos, series.values, pad);
  } else {
    out.values = sosfilt(sos, series.values);
  }
  return out;
}

/// Cuts a series into contiguous, non-overlapping epochs of epoch_s seconds.
inline SegmentResult segment(const SampleSeries& series, double epoch_s = 1.0,
                             int trial_index = 0) {
  detail::require(series.sample_rate_hz > 0.0, "segment: sample rate must be known");
  detail::require(epoch_s > 0.0, "segment: epoch length must be positive");
  const auto epoch_len =
      static_cast<std::size_t>(std::llround(epoch_s * series.sample_rate_hz));
  detail::require(epoch_len >= 1, "segment: epoch shorter than one sample");
  detail::require(series.values.size() >= epoch_len,
                  "segment: series shorter than one epoch");

  SegmentResult result;
  const std::size_t n_epochs = series.values.size() / epoch_len;
  result.dropped_samples = series.values.size() - n_epochs * epoch_len;
  result.epochs.reserve(n_epochs);
  for (std::size_t e = 0; e < n_epochs; ++e) {
    Epoch epoch;
    epoch.sample_rate_hz = series.sample_rate_hz;
    epoch.trial_index = trial_index;
    epoch.segment_index = static_cast<int>(e);
    const auto begin = series.values.begin() + static_cast<std::ptrdiff_t>(e * epoch_len);
    epoch.samples.assign(begin, begin + static_cast<std::ptrdiff_t>(epoch_len));
    result.epochs.push_back(std::move(epoch));
  }
  return result;
}

/// Maximal FFT magnitude of one epoch, searched over bins 1 .. N/2-1
/// (DC and Nyquist excluded), rectangular window, unnormalized transform.
/// A bin-aligned sine of amplitude A therefore scores A * N/2.
inline PeakAmplitude fft_max_amplitude(const Epoch& epoch) {
  const std::size_t n = epoch.samples.size();
  detail::require(is_power_of_two(n) && n >= 4,
                  "fft_max_amplitude: epoch length must be a power of two (>= 4)");
  detail::require(epoch.sample_rate_hz > 0.0, "fft_max_amplitude: sample rate unknown");
  for (double v : epoch.samples)
    detail::require(detail::finite(v), "fft_max_amplitude: non-finite sample");

  const auto spectrum = fft_real(epoch.samples);
  PeakAmplitude peak;
  std::size_t peak_bin = 1;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double mag = std::abs(spectrum[k]);
    if (mag > peak.amplitude) {
      peak.amplitude = mag;
      peak_bin = k;
    }
  }
  peak.peak_bin_hz = static_cast<double>(peak_bin) * epoch.sample_rate_hz /
                     static_cast<double>(n);
  return peak;
}

/// Runs the full chain for one condition: per trial, band-pass at the
/// stimulus frequency, segment into 1 s epochs, store each epoch's maximal
/// FFT magnitude. Output is ordered (trial, segment); five 30 s trials at
/// 128 Hz yield exactly 150 amplitudes.
inline AmplitudeSet process_condition(const std::vector<SampleSeries>& trials,
                                      const Condition& condition) {
  detail::require(!trials.empty(), "process_condition: no trials");
  FilterSpec spec;
  spec.center_hz = condition.frequency_hz;

  AmplitudeSet out;
  out.condition = condition;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    detail::require(trials[t].sample_rate_hz == trials[0].sample_rate_hz,
                    "process_condition: trials disagree on sample rate");
    const auto filtered = bandpass(trials[t], spec);
    const auto segmented = segment(filtered, 1.0, static_cast<int>(t));
    for (const auto& epoch : segmented.epochs)
      out.amplitudes.push_back(fft_max_amplitude(epoch).amplitude);
  }
  return out;
}

}  // namespace ssvep
