#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ssvep/common.hpp"
#include "ssvep/edf.hpp"
#include "ssvep/io.hpp"
#include "ssvep/pipeline.hpp"
#include "ssvep/protocol.hpp"
#include "ssvep/simulate.hpp"
#include "ssvep/stats.hpp"

namespace ssvep {

/// Analyzes recorded trial files: for every file, band-pass at the stimulus
/// frequency encoded in its name, cut into 1 s epochs and keep each epoch's
/// maximal FFT amplitude. Returns one record per epoch, ordered by
/// (subject, frequency, duty, trial, segment).
inline std::vector<AmplitudeRecord> analyze_files(
    const std::vector<std::filesystem::path>& files,
    const std::string& channel = "O2") {
  detail::require(!files.empty(), "analyze: no input files");
  std::map<std::tuple<int, double, double>, std::map<int, std::filesystem::path>>
      conditions;
  for (const std::filesystem::path& path : files) {
    const TrialCondition c = parse_trial_filename(path.filename().string());
    auto& trials = conditions[{c.subject_id, c.frequency_hz, c.duty_pct}];
    detail::require(trials.emplace(c.trial_index, path).second,
                    "analyze: duplicate trial file: " + path.filename().string());
  }

  std::vector<AmplitudeRecord> records;
  for (const auto& [key, trials] : conditions) {
    const auto& [subject, frequency, duty] = key;
    FilterSpec spec;
    spec.center_hz = frequency;
    for (const auto& [trial_index, path] : trials) {
      const SampleSeries series = extract_channel(read_edf_file(path), channel);
      const SegmentResult segments =
          segment(bandpass(series, spec), 1.0, trial_index);
      for (const Epoch& epoch : segments.epochs) {
        const PeakAmplitude peak = fft_max_amplitude(epoch);
        records.push_back({subject, frequency, duty, trial_index,
                           epoch.segment_index, peak.amplitude});
      }
    }
  }
  return records;
}

/// Directory variant: analyzes every *.edf file, optionally restricted to
/// one stimulus frequency.
inline std::vector<AmplitudeRecord> analyze_directory(
    const std::filesystem::path& dir,
    std::optional<double> frequency_hz = std::nullopt,
    const std::string& channel = "O2") {
  detail::require(std::filesystem::is_directory(dir),
                  "analyze: not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".edf") continue;
    if (frequency_hz &&
        parse_trial_filename(entry.path().filename().string()).frequency_hz !=
            *frequency_hz)
      continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  detail::require(!files.empty(), "analyze: no matching .edf files in " + dir.string());
  return analyze_files(files, channel);
}

/// Collects the amplitudes of one frequency into per-duty groups (duty
/// ascending), pooled over all subjects or restricted to one.
inline GroupedAmplitudes group_amplitudes(
    const std::vector<AmplitudeRecord>& records, double frequency_hz,
    std::optional<int> subject = std::nullopt) {
  std::map<double, std::vector<double>> by_duty;
  for (const AmplitudeRecord& r : records) {
    if (r.frequency_hz != frequency_hz) continue;
    if (subject && r.subject != *subject) continue;
    by_duty[r.duty_pct].push_back(r.amplitude);
  }
  detail::require(!by_duty.empty(), "group_amplitudes: no records for " +
                                        detail::format_number(frequency_hz) +
                                        " Hz");
  GroupedAmplitudes grouped;
  for (auto& [duty, values] : by_duty)
    grouped.groups.push_back({duty, std::move(values)});
  return grouped;
}

/// One pooled box-plot cell.
struct BoxCell {
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
  BoxStats stats;
};

/// Pooled per-frequency test with the best-duty selection.
struct FrequencyStats {
  double frequency_hz = 0.0;
  KwResult kw;
  double selected_duty = 0.0;
  bool selection_tie = false;
};

/// Per-subject-per-frequency test with the subject's own selection.
struct SubjectFrequencyStats {
  int subject = 0;
  double frequency_hz = 0.0;
  KwResult kw;
  double selected_duty = 0.0;
  bool selection_tie = false;
};

/// Everything the final report carries.
struct ReportBundle {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<BoxCell> box;                        // (frequency, duty) ascending
  std::vector<FrequencyStats> pooled;              // frequency ascending
  std::vector<SubjectFrequencyStats> per_subject;  // (subject, frequency) ascending
  std::vector<ComfortMean> comfort;                // empty without ratings
};

/// Builds the report from analyzed amplitudes: pooled box stats per
/// (frequency, duty), pooled and per-subject Kruskal-Wallis tests with
/// best-duty selections, and comfort means when ratings are supplied.
inline ReportBundle build_report(const std::vector<AmplitudeRecord>& records,
                                 const ComfortRatings& comfort,
                                 std::uint64_t seed,
                                 const std::string& provenance_hash) {
  detail::require(!records.empty(), "build_report: no amplitude records");
  std::vector<double> frequencies;
  std::vector<double> duties;
  std::vector<int> subjects;
  for (const AmplitudeRecord& r : records) {
    if (std::find(frequencies.begin(), frequencies.end(), r.frequency_hz) ==
        frequencies.end())
      frequencies.push_back(r.frequency_hz);
    if (std::find(duties.begin(), duties.end(), r.duty_pct) == duties.end())
      duties.push_back(r.duty_pct);
    if (std::find(subjects.begin(), subjects.end(), r.subject) == subjects.end())
      subjects.push_back(r.subject);
  }
  std::sort(frequencies.begin(), frequencies.end());
  std::sort(duties.begin(), duties.end());
  std::sort(subjects.begin(), subjects.end());

  ReportBundle bundle;
  bundle.seed = seed;
  bundle.config_hash = provenance_hash;

  for (double f : frequencies) {
    const GroupedAmplitudes grouped = group_amplitudes(records, f);
    for (const GroupedAmplitudes::Group& g : grouped.groups)
      bundle.box.push_back({f, g.duty_pct, box_stats(g.values)});
  }

  std::vector<std::pair<double, KwResult>> pooled_results;
  for (double f : frequencies)
    pooled_results.emplace_back(f, kruskal_wallis(group_amplitudes(records, f)));
  const BestDutySelection pooled_selection = select_best_duty(pooled_results);
  for (std::size_t i = 0; i < pooled_results.size(); ++i) {
    bundle.pooled.push_back({pooled_results[i].first, pooled_results[i].second,
                             pooled_selection.entries[i].duty_pct,
                             pooled_selection.entries[i].tie});
  }

  for (int s : subjects) {
    std::vector<std::pair<double, KwResult>> subject_results;
    for (double f : frequencies)
      subject_results.emplace_back(f,
                                   kruskal_wallis(group_amplitudes(records, f, s)));
    const BestDutySelection selection = select_best_duty(subject_results);
    for (std::size_t i = 0; i < subject_results.size(); ++i) {
      bundle.per_subject.push_back(
          {s, subject_results[i].first, subject_results[i].second,
           selection.entries[i].duty_pct, selection.entries[i].tie});
    }
  }

  bundle.comfort = aggregate_comfort(comfort);
  return bundle;
}

namespace detail {

inline nlohmann::ordered_json kw_to_json(const KwResult& kw) {
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kw.group_labels.size(); ++i) {
    groups.push_back({{"duty_pct", kw.group_labels[i]},
                      {"n", kw.group_sizes[i]},
                      {"mean_rank", kw.mean_ranks[i]},
                      {"mean", kw.group_summaries[i].mean},
                      {"sd", kw.group_summaries[i].sd}});
  }
  return {{"h", kw.h_statistic},       {"df", kw.df},
          {"p_value", kw.p_value},     {"p_underflow", kw.p_underflow},
          {"n_total", kw.n_total},     {"groups", std::move(groups)}};
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const ReportBundle& bundle) {
  nlohmann::ordered_json j;
  j["provenance"] = {{"seed", bundle.seed}, {"config_hash", bundle.config_hash}};
  j["box_plots"] = nlohmann::ordered_json::array();
  for (const BoxCell& cell : bundle.box) {
    j["box_plots"].push_back({{"frequency_hz", cell.frequency_hz},
                              {"duty_pct", cell.duty_pct},
                              {"median", cell.stats.median},
                              {"q25", cell.stats.q25},
                              {"q75", cell.stats.q75},
                              {"n", cell.stats.n}});
  }
  j["frequency_tests"] = nlohmann::ordered_json::array();
  for (const FrequencyStats& fs : bundle.pooled) {
    nlohmann::ordered_json entry = {{"frequency_hz", fs.frequency_hz}};
    entry.update(detail::kw_to_json(fs.kw));
    entry["selected_duty_pct"] = fs.selected_duty;
    entry["selection_tie"] = fs.selection_tie;
    j["frequency_tests"].push_back(std::move(entry));
  }
  j["subject_tests"] = nlohmann::ordered_json::array();
  for (const SubjectFrequencyStats& ss : bundle.per_subject) {
    nlohmann::ordered_json entry = {{"subject", ss.subject},
                                    {"frequency_hz", ss.frequency_hz}};
    entry.update(detail::kw_to_json(ss.kw));
    entry["selected_duty_pct"] = ss.selected_duty;
    entry["selection_tie"] = ss.selection_tie;
    j["subject_tests"].push_back(std::move(entry));
  }
  j["comfort_means"] = nlohmann::ordered_json::array();
  for (const ComfortMean& m : bundle.comfort) {
    j["comfort_means"].push_back(
        {{"duty_pct", m.duty_pct}, {"mean_rating", m.mean_rating}, {"n", m.n}});
  }
  return j;
}

inline std::string render_report_json(const ReportBundle& bundle) {
  return report_to_json(bundle).dump(2) + "\n";
}

/// Runs the full chain simulate → analyze → stats → report into `out_dir`
/// (which must not already hold other content) and leaves every intermediate
/// file in place for audit:
///   plan.csv, edf/S*_f*_d*_t*.edf, amplitudes.csv, report.json.
/// On failure, everything this call created is removed again.
inline ReportBundle run_session(const RunConfig& config, int n_subjects,
                                const std::filesystem::path& out_dir,
                                const ComfortRatings& comfort = {}) {
  config.session.validate();
  detail::require(n_subjects >= 1, "run_session: need at least one subject");
  const ResponseModel model = config.model_path.empty()
                                  ? default_response_model()
                                  : read_response_model_file(config.model_path);

  const bool create_root = !std::filesystem::exists(out_dir);
  if (!create_root) {
    detail::require(std::filesystem::is_directory(out_dir) &&
                        std::filesystem::is_empty(out_dir),
                    "run_session: output directory is not empty: " +
                        out_dir.string());
  }
  std::filesystem::create_directories(out_dir);

  try {
    const ProtocolPlan plan = plan_session(config.session, config.seed);
    std::string plan_csv = "frequency_hz,duty_pct,trial\n";
    for (const ScheduleEntry& e : plan.schedule) {
      plan_csv += detail::format_number(e.frequency_hz) + ',' +
                  detail::format_number(e.duty_pct) + ',' +
                  std::to_string(e.trial_index) + '\n';
    }
    detail::write_text_file(out_dir / "plan.csv", plan_csv);

    SimConfig sim;
    sim.noise_sd = config.noise_sd;
    sim.seed = config.seed;
    sim.trial_s = config.session.trial_s;
    std::vector<int> subjects(static_cast<std::size_t>(n_subjects));
    for (int i = 0; i < n_subjects; ++i) subjects[static_cast<std::size_t>(i)] = i + 1;
    const std::vector<std::filesystem::path> files =
        synth_session(subjects, model, sim, plan, out_dir / "edf");

    const std::vector<AmplitudeRecord> records = analyze_files(files);
    detail::write_text_file(out_dir / "amplitudes.csv",
                            render_amplitude_csv(records));

    const ReportBundle bundle =
        build_report(records, comfort, config.seed, config_hash(config));
    detail::write_text_file(out_dir / "report.json", render_report_json(bundle));
    return bundle;
  } catch (...) {
    // Leave no partial outputs behind.
    std::error_code ec;
    if (create_root) {
      std::filesystem::remove_all(out_dir, ec);
    } else {
      for (const char* name : {"plan.csv", "edf", "amplitudes.csv", "report.json"})
        std::filesystem::remove_all(out_dir / name, ec);
    }
    throw;
  }
}

/// End-to-end reproduction at defaults: ten subjects, the built-in response
/// model, everything derived from one seed.
inline ReportBundle reproduce(std::uint64_t seed,
                              const std::filesystem::path& out_dir) {
  RunConfig config;
  config.seed = seed;
  return run_session(config, 10, out_dir);
}

}  // namespace ssvep
