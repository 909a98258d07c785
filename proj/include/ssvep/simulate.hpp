#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssvep/common.hpp"
#include "ssvep/edf.hpp"
#include "ssvep/fft.hpp"
#include "ssvep/protocol.hpp"
#include "ssvep/rng.hpp"

namespace ssvep {

/// Target maximal FFT amplitude (device units) per (frequency, duty) cell.
/// The planted response surface the simulator reproduces and the analysis
/// chain is expected to recover.
class ResponseModel {
 public:
  using Key = std::pair<double, double>;  // (frequency_hz, duty_pct)

  void set(double frequency_hz, double duty_pct, double amplitude) {
    table_[{frequency_hz, duty_pct}] = amplitude;
  }

  bool contains(double frequency_hz, double duty_pct) const {
    return table_.count({frequency_hz, duty_pct}) != 0;
  }

  double target_amplitude(double frequency_hz, double duty_pct) const {
    const auto it = table_.find({frequency_hz, duty_pct});
    detail::require(it != table_.end(),
                    "response model has no entry for " +
                        detail::format_number(frequency_hz) + " Hz at " +
                        detail::format_number(duty_pct) + "% duty");
    return it->second;
  }

  const std::map<Key, double>& table() const { return table_; }

  /// Invariants: amplitudes positive and finite; wherever a frequency has an
  /// 85% duty entry, no other duty of that frequency may exceed it (the
  /// response surface peaks at 85%).
  void validate() const {
    detail::require(!table_.empty(), "response model: empty table");
    for (const auto& [key, amp] : table_)
      detail::require(detail::finite(amp) && amp > 0.0,
                      "response model: amplitudes must be positive");
    for (const auto& [key, amp] : table_) {
      const auto peak = table_.find({key.first, 85.0});
      if (peak == table_.end()) continue;
      detail::require(amp <= peak->second,
                      "response model: 85% duty must give the peak amplitude "
                      "at " + detail::format_number(key.first) + " Hz");
    }
  }

 private:
  std::map<Key, double> table_;
};

/// Built-in response surface: per (frequency, duty) cell, the across-subject
/// mean of the measured average amplitudes of the ten-subject study. The 85%
/// column is the maximum in every row.
inline ResponseModel default_response_model() {
  ResponseModel model;
  const double table[4][6] = {
      // f,   50%,    80%,    85%,    90%,    95%
      {7.0, 533.13, 537.87, 558.44, 525.36, 486.26},
      {8.0, 549.33, 565.03, 599.49, 512.19, 497.76},
      {9.0, 518.03, 525.69, 538.93, 478.63, 465.70},
      {10.0, 507.80, 519.47, 535.35, 483.73, 465.42},
  };
  const double duties[5] = {50.0, 80.0, 85.0, 90.0, 95.0};
  for (const auto& row : table)
    for (int j = 0; j < 5; ++j) model.set(row[0], duties[j], row[j + 1]);
  model.validate();
  return model;
}

/// Model CSV: header `frequency_hz,duty_pct,amplitude`, one row per cell.
inline std::string render_response_model_csv(const ResponseModel& model) {
  std::string out = "frequency_hz,duty_pct,amplitude\n";
  for (const auto& [key, amp] : model.table()) {
    out += detail::format_number(key.first) + ',' +
           detail::format_number(key.second) + ',' +
           detail::format_number(amp) + '\n';
  }
  return out;
}

inline ResponseModel parse_response_model_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  ResponseModel model;
  bool saw_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (!saw_header) {
      detail::require(t == "frequency_hz,duty_pct,amplitude",
                      "model CSV: unexpected header: " + t);
      saw_header = true;
      continue;
    }
    double fields[3];
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      const std::size_t comma = t.find(',', start);
      detail::require((i < 2) == (comma != std::string::npos),
                      "model CSV line " + std::to_string(line_no) +
                          ": expected 3 fields");
      const std::string cell = detail::trim(
          t.substr(start, (comma == std::string::npos ? t.size() : comma) - start));
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(),
                                       fields[i]);
      detail::require(res.ec == std::errc{} && res.ptr == cell.data() + cell.size(),
                      "model CSV line " + std::to_string(line_no) +
                          ": not a number: " + cell);
      start = comma + 1;
    }
    detail::require(!model.contains(fields[0], fields[1]),
                    "model CSV line " + std::to_string(line_no) +
                        ": duplicate cell");
    model.set(fields[0], fields[1], fields[2]);
  }
  detail::require(saw_header, "model CSV: missing header");
  model.validate();
  return model;
}

inline ResponseModel read_response_model_file(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  return parse_response_model_csv(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

/// Simulator knobs. noise_sd is the total background SD in device units,
/// split between pink and white power by pink_fraction; harmonic_fraction is
/// the 2nd-harmonic amplitude relative to the fundamental.
struct SimConfig {
  double noise_sd = 8.0;
  double pink_fraction = 0.5;
  double harmonic_fraction = 0.2;
  std::uint64_t seed = 42;
  double fs_hz = 128.0;
  double trial_s = 30.0;

  void validate() const {
    detail::require(detail::finite(noise_sd) && noise_sd >= 0.0,
                    "sim config: noise_sd must be non-negative");
    detail::require(pink_fraction >= 0.0 && pink_fraction <= 1.0,
                    "sim config: pink_fraction must lie in [0, 1]");
    detail::require(harmonic_fraction >= 0.0 && harmonic_fraction < 1.0,
                    "sim config: harmonic_fraction must lie in [0, 1)");
    detail::require(fs_hz >= 2.0 && fs_hz == std::floor(fs_hz),
                    "sim config: fs_hz must be an integral rate of at least 2 Hz");
    detail::require(detail::finite(trial_s) && trial_s > 0.0,
                    "sim config: trial_s must be positive");
  }
};

/// The condition one trial belongs to.
struct TrialCondition {
  int subject_id = 0;
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
  int trial_index = 0;

  friend bool operator==(const TrialCondition&, const TrialCondition&) = default;
};

/// One synthesized 30 s trial.
struct TrialSignal {
  SampleSeries series;
  TrialCondition condition;
};

/// Deterministic pink (1/f power) noise: random-phase spectral synthesis
/// over a power of two, truncated to n, then centered to zero mean and
/// scaled to unit (population) variance.
inline std::vector<double> gen_pink_noise(std::size_t n, std::uint64_t seed) {
  detail::require(n >= 1, "gen_pink_noise: n must be at least 1");
  if (n == 1) return {0.0};
  std::size_t m = 4;
  while (m < n) m *= 2;
  Rng rng(seed);
  std::vector<std::complex<double>> spectrum(m, 0.0);
  for (std::size_t k = 1; k < m / 2; ++k) {
    const double theta = 2.0 * std::numbers::pi * rng.uniform01();
    // Power of bin k proportional to 1/k; DC and Nyquist stay zero.
    spectrum[k] = std::polar(1.0 / std::sqrt(static_cast<double>(k)), theta);
    spectrum[m - k] = std::conj(spectrum[k]);
  }
  fft_inplace(spectrum, /*inverse=*/true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[i].real();
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double& v : out) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(n);
  if (var > 0.0) {
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& v : out) v *= inv_sd;
  }
  return out;
}

namespace detail {

/// Per-trial child seed: the master seed avalanched with the full condition
/// key, so trials can be synthesized in any order (or in parallel) without
/// changing their content. Real-valued keys enter via their exact bit
/// patterns.
inline std::uint64_t trial_seed(std::uint64_t master, const TrialCondition& c) {
  return derive_seed(master, static_cast<std::uint64_t>(c.subject_id),
                     std::bit_cast<std::uint64_t>(c.frequency_hz),
                     std::bit_cast<std::uint64_t>(c.duty_pct),
                     static_cast<std::uint64_t>(c.trial_index));
}

}  // namespace detail

/// Synthesizes one trial: a fundamental sinusoid calibrated so the noiseless
/// analysis chain recovers the model's target amplitude (|X[k]| = a N/2 for
/// a bin-aligned tone, N/2 = 64 at 128 Hz), an optional 2nd harmonic, and a
/// pink/white noise background. Phases and noise are drawn from a per-trial
/// seed, so the result is a pure function of (condition, model, config).
inline TrialSignal synth_trial(const TrialCondition& condition,
                               const ResponseModel& model, const SimConfig& config) {
  config.validate();
  const double target = model.target_amplitude(condition.frequency_hz,
                                               condition.duty_pct);
  detail::require(condition.frequency_hz < config.fs_hz / 2.0,
                  "synth_trial: stimulus frequency must lie below Nyquist");
  const auto n = static_cast<std::size_t>(std::llround(config.fs_hz * config.trial_s));
  detail::require(n >= 1, "synth_trial: empty trial");
  const double a = target / (config.fs_hz / 2.0);

  Rng rng(detail::trial_seed(config.seed, condition));
  const double phi = 2.0 * std::numbers::pi * rng.uniform01();
  const double phi2 = 2.0 * std::numbers::pi * rng.uniform01();
  const std::uint64_t pink_seed = rng.bits();  // drawn unconditionally to keep
                                               // the stream layout fixed
  const double pink_scale = config.noise_sd * std::sqrt(config.pink_fraction);
  const double white_scale = config.noise_sd * std::sqrt(1.0 - config.pink_fraction);
  std::vector<double> pink;
  if (pink_scale > 0.0) pink = gen_pink_noise(n, pink_seed);

  TrialSignal trial;
  trial.condition = condition;
  trial.series.label = "O2";
  trial.series.sample_rate_hz = config.fs_hz;
  trial.series.values.resize(n);
  const double w = 2.0 * std::numbers::pi * condition.frequency_hz / config.fs_hz;
  for (std::size_t t = 0; t < n; ++t) {
    const double ft = static_cast<double>(t);
    double v = a * std::sin(w * ft + phi) +
               config.harmonic_fraction * a * std::sin(2.0 * w * ft + phi2);
    if (pink_scale > 0.0) v += pink_scale * pink[t];
    if (white_scale > 0.0) v += white_scale * rng.gaussian();
    trial.series.values[t] = v;
  }
  return trial;
}

/// File name scheme for session output: S<subject>_f<freq>_d<duty>_t<trial>.edf
/// with numbers rendered shortest (integral values carry no decimal point).
inline std::string trial_filename(const TrialCondition& c) {
  return "S" + std::to_string(c.subject_id) + "_f" +
         detail::format_number(c.frequency_hz) + "_d" +
         detail::format_number(c.duty_pct) + "_t" +
         std::to_string(c.trial_index) + ".edf";
}

/// Inverse of trial_filename. Rejects anything that does not match the
/// scheme exactly.
inline TrialCondition parse_trial_filename(std::string_view name) {
  const std::string full(name);
  const auto fail = [&full]() -> TrialCondition {
    throw Error("not a session trial file name: " + full);
  };
  if (!name.starts_with('S') || !name.ends_with(".edf")) return fail();
  name.remove_prefix(1);
  name.remove_suffix(4);
  const std::size_t pf = name.find("_f");
  const std::size_t pd = name.find("_d", pf == std::string_view::npos ? 0 : pf + 2);
  const std::size_t pt = name.rfind("_t");
  if (pf == std::string_view::npos || pd == std::string_view::npos ||
      pt == std::string_view::npos || pt <= pd || pd <= pf)
    return fail();
  const auto parse_int = [&](std::string_view s, int& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
  };
  const auto parse_real = [&](std::string_view s, double& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
  };
  TrialCondition c;
  if (!parse_int(name.substr(0, pf), c.subject_id) ||
      !parse_real(name.substr(pf + 2, pd - pf - 2), c.frequency_hz) ||
      !parse_real(name.substr(pd + 2, pt - pd - 2), c.duty_pct) ||
      !parse_int(name.substr(pt + 2), c.trial_index))
    return fail();
  return c;
}

namespace detail {

/// Physical range of simulator EDF output, in device units. Wide enough that
/// the default signal plus noise never reaches the rails (which sit at about
/// 25 standard deviations).
constexpr double kSimPhysicalRange = 200.0;

}  // namespace detail

/// Packs one synthesized trial into a single-channel EDF recording with 1 s
/// records. Samples are quantized to the 16-bit digital range with ADC-style
/// saturation at the physical rails.
inline EdfRecording trial_to_edf(const TrialSignal& trial, const SimConfig& config) {
  detail::require(config.trial_s == std::floor(config.trial_s),
                  "trial_to_edf: trial length must be a whole number of seconds");
  const int n_records = static_cast<int>(std::llround(config.trial_s));
  const int spr = static_cast<int>(std::llround(config.fs_hz));
  detail::require(trial.series.values.size() ==
                      static_cast<std::size_t>(n_records) * static_cast<std::size_t>(spr),
                  "trial_to_edf: sample count does not fill whole records");

  EdfRecording rec;
  rec.file_header.patient_id = "S" + std::to_string(trial.condition.subject_id);
  rec.file_header.recording_id = "synthetic SSVEP session";
  rec.file_header.header_bytes = 256 * 2;
  rec.file_header.n_records = n_records;
  rec.file_header.record_duration_s = 1.0;
  rec.file_header.n_signals = 1;

  SignalHeader sig;
  sig.label = "O2";
  sig.transducer = "synthetic";
  sig.physical_dimension = "units";  // device-raw amplitude scale
  sig.physical_min = -detail::kSimPhysicalRange;
  sig.physical_max = detail::kSimPhysicalRange;
  sig.digital_min = -32768;
  sig.digital_max = 32767;
  sig.prefiltering = "none";
  sig.samples_per_record = spr;
  rec.signal_headers.push_back(sig);

  std::vector<std::int16_t> digital(trial.series.values.size());
  const double gain = sig.gain();
  for (std::size_t i = 0; i < digital.size(); ++i) {
    const double steps = (trial.series.values[i] - sig.physical_min) / gain;
    const long long dig = std::llround(steps) + sig.digital_min;
    digital[i] = static_cast<std::int16_t>(
        std::clamp<long long>(dig, sig.digital_min, sig.digital_max));
  }
  rec.samples.push_back(std::move(digital));
  rec.validate();
  return rec;
}

/// Synthesizes every trial of `plan` for every subject and writes one EDF
/// file per trial into `out_dir` (created if needed). Returns the written
/// paths in generation order (subjects in the given order, schedule order
/// within a subject). Regeneration with identical inputs is byte-identical.
inline std::vector<std::filesystem::path> synth_session(
    const std::vector<int>& subject_ids, const ResponseModel& model,
    const SimConfig& config, const ProtocolPlan& plan,
    const std::filesystem::path& out_dir) {
  detail::require(!subject_ids.empty(), "synth_session: no subjects");
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    detail::require(subject_ids[i] >= 1, "synth_session: subject ids start at 1");
    for (std::size_t j = i + 1; j < subject_ids.size(); ++j)
      detail::require(subject_ids[i] != subject_ids[j],
                      "synth_session: duplicate subject id");
  }
  config.validate();
  model.validate();
  plan.validate();
  detail::require(plan.trial_s == config.trial_s,
                  "synth_session: plan and sim config disagree on trial length");
  for (const ScheduleEntry& e : plan.schedule)
    detail::require(model.contains(e.frequency_hz, e.duty_pct),
                    "synth_session: plan condition missing from the response "
                    "model: " + detail::format_number(e.frequency_hz) +
                        " Hz at " + detail::format_number(e.duty_pct) + "%");

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> files;
  files.reserve(subject_ids.size() * plan.schedule.size());
  for (int subject : subject_ids) {
    for (const ScheduleEntry& e : plan.schedule) {
      const TrialCondition condition{subject, e.frequency_hz, e.duty_pct,
                                     e.trial_index};
      const TrialSignal trial = synth_trial(condition, model, config);
      const std::filesystem::path path = out_dir / trial_filename(condition);
      write_edf_file(path, trial_to_edf(trial, config));
      files.push_back(path);
    }
  }
  return files;
}

}  // namespace ssvep
