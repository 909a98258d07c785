// Command-line front end: stimulus schedule generation, EDF inspection, and
// the simulate / analyze / stats / report / reproduce chain.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ssvep/edf.hpp"
#include "ssvep/io.hpp"
#include "ssvep/pipeline.hpp"
#include "ssvep/protocol.hpp"
#include "ssvep/report.hpp"
#include "ssvep/simulate.hpp"
#include "ssvep/stats.hpp"
#include "ssvep/waveform.hpp"

namespace {

using namespace ssvep;

/// Writes `text` to `path`, or to stdout when no path was given.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  detail::write_text_file(out_path, text);
}

RunConfig load_run_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : read_config_file(config_path);
}

int run_stimgen(double freq, double duty, std::uint64_t tick_rate, double duration,
                const std::string& out_path) {
  StimulusSpec spec;
  spec.frequency_hz = freq;
  spec.duty_pct = duty;
  spec.tick_rate_hz = tick_rate;
  spec.duration_s = duration;
  const EdgeSchedule schedule = build_edge_schedule(spec);
  const MeasuredWaveform measured = measure_schedule(schedule, spec);

  std::string csv = "tick,level\n";
  for (const Edge& e : schedule.edges)
    csv += std::to_string(e.tick) + ',' + (e.level == Level::On ? "1" : "0") + '\n';
  emit(out_path, csv);

  // Verification summary on the metadata stream.
  std::cerr << "measured " << detail::format_number(measured.measured_freq_hz)
            << " Hz (error " << detail::format_number(measured.freq_error_hz)
            << " Hz), duty " << detail::format_number(measured.measured_duty_pct)
            << "% (error " << detail::format_number(measured.duty_error_pp)
            << " pp)\n";
  return 0;
}

int run_edf_info(const std::string& path) {
  const EdfRecording rec = read_edf_file(path);
  const EdfFileHeader& h = rec.file_header;
  std::cout << "version:         " << h.version << '\n'
            << "patient:         " << h.patient_id << '\n'
            << "recording:       " << h.recording_id << '\n'
            << "start:           " << h.start_date << ' ' << h.start_time << '\n'
            << "records:         " << h.n_records << " x "
            << detail::format_number(h.record_duration_s) << " s\n"
            << "signals:         " << h.n_signals << '\n';
  for (int i = 0; i < h.n_signals; ++i) {
    const SignalHeader& s = rec.signal_headers[static_cast<std::size_t>(i)];
    std::cout << "  [" << i << "] " << s.label << "  " << s.samples_per_record
              << " samples/record, physical [" << detail::format_number(s.physical_min)
              << ", " << detail::format_number(s.physical_max) << "] "
              << s.physical_dimension << ", digital [" << s.digital_min << ", "
              << s.digital_max << "]\n";
  }
  return 0;
}

int run_edf_extract(const std::string& path, const std::string& channel,
                    const std::string& out_path) {
  const SampleSeries series = extract_channel(read_edf_file(path), channel);
  std::string csv = "index,physical_value\n";
  for (std::size_t i = 0; i < series.values.size(); ++i)
    csv += std::to_string(i) + ',' + detail::format_number(series.values[i]) + '\n';
  emit(out_path, csv);
  std::cerr << series.values.size() << " samples at "
            << detail::format_number(series.sample_rate_hz) << " Hz\n";
  return 0;
}

int run_plan(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::string& out_path) {
  const RunConfig config = load_run_config(config_path);
  const std::uint64_t effective_seed = seed.value_or(config.seed);
  const ProtocolPlan plan = plan_session(config.session, effective_seed);
  std::string csv = "frequency_hz,duty_pct,trial\n";
  for (const ScheduleEntry& e : plan.schedule)
    csv += detail::format_number(e.frequency_hz) + ',' +
           detail::format_number(e.duty_pct) + ',' + std::to_string(e.trial_index) +
           '\n';
  emit(out_path, csv);
  std::cerr << "plan: " << plan.schedule.size() << " trials ("
            << plan.frequencies.size() << " frequencies x " << plan.duties.size()
            << " duties x " << plan.trials_per_condition << " trials), "
            << detail::format_number(plan.trial_s) << " s each, "
            << detail::format_number(plan.rest_s) << " s rest, seed "
            << effective_seed << '\n';
  return 0;
}

int run_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 int subjects, const std::string& model_path,
                 const std::string& out_dir) {
  RunConfig config = load_run_config(config_path);
  if (seed) config.seed = *seed;
  if (!model_path.empty()) config.model_path = model_path;
  const ResponseModel model = config.model_path.empty()
                                  ? default_response_model()
                                  : read_response_model_file(config.model_path);
  const ProtocolPlan plan = plan_session(config.session, config.seed);
  SimConfig sim;
  sim.noise_sd = config.noise_sd;
  sim.seed = config.seed;
  sim.trial_s = config.session.trial_s;
  std::vector<int> ids(static_cast<std::size_t>(subjects));
  for (int i = 0; i < subjects; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  const auto files = synth_session(ids, model, sim, plan, out_dir);
  std::cerr << "wrote " << files.size() << " trial files to " << out_dir << '\n';
  return 0;
}

int run_analyze(const std::vector<std::string>& inputs,
                std::optional<double> freq, const std::string& channel,
                const std::string& out_path) {
  std::vector<AmplitudeRecord> records;
  if (inputs.size() == 1 && std::filesystem::is_directory(inputs.front())) {
    records = analyze_directory(inputs.front(), freq, channel);
  } else {
    std::vector<std::filesystem::path> files;
    for (const std::string& in : inputs) {
      if (freq &&
          parse_trial_filename(std::filesystem::path(in).filename().string())
                  .frequency_hz != *freq)
        continue;
      files.emplace_back(in);
    }
    detail::require(!files.empty(), "analyze: no matching input files");
    records = analyze_files(files, channel);
  }
  emit(out_path, render_amplitude_csv(records));
  std::cerr << "analyzed " << records.size() << " segments\n";
  return 0;
}

int run_stats(const std::string& in_path, const std::string& scope,
              const std::string& out_path) {
  const std::vector<AmplitudeRecord> records =
      parse_amplitude_csv(detail::read_text_file(in_path));
  detail::require(!records.empty(), "stats: no amplitude records");

  std::vector<double> frequencies;
  std::vector<int> subjects;
  for (const AmplitudeRecord& r : records) {
    if (std::find(frequencies.begin(), frequencies.end(), r.frequency_hz) ==
        frequencies.end())
      frequencies.push_back(r.frequency_hz);
    if (std::find(subjects.begin(), subjects.end(), r.subject) == subjects.end())
      subjects.push_back(r.subject);
  }
  std::sort(frequencies.begin(), frequencies.end());
  std::sort(subjects.begin(), subjects.end());

  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  const auto append = [&](std::optional<int> subject) {
    std::vector<std::pair<double, KwResult>> results;
    for (double f : frequencies)
      results.emplace_back(f, kruskal_wallis(group_amplitudes(records, f, subject)));
    const BestDutySelection selection = select_best_duty(results);
    for (std::size_t i = 0; i < results.size(); ++i) {
      nlohmann::ordered_json entry;
      if (subject) entry["subject"] = *subject;
      entry["frequency_hz"] = results[i].first;
      entry.update(detail::kw_to_json(results[i].second));
      entry["selected_duty_pct"] = selection.entries[i].duty_pct;
      entry["selection_tie"] = selection.entries[i].tie;
      out.push_back(std::move(entry));
    }
  };
  if (scope == "pooled") {
    append(std::nullopt);
  } else {
    for (int s : subjects) append(s);
  }
  emit(out_path, out.dump(2) + "\n");
  return 0;
}

int run_report(const std::string& in_path, const std::string& comfort_path,
               const std::string& config_path, std::optional<std::uint64_t> seed,
               const std::string& out_path) {
  RunConfig config = load_run_config(config_path);
  if (seed) config.seed = *seed;
  const std::vector<AmplitudeRecord> records =
      parse_amplitude_csv(detail::read_text_file(in_path));
  ComfortRatings comfort;
  if (!comfort_path.empty())
    comfort = parse_comfort_csv(detail::read_text_file(comfort_path));
  const ReportBundle bundle =
      build_report(records, comfort, config.seed, config_hash(config));
  emit(out_path, render_report_json(bundle));
  return 0;
}

int run_reproduce(std::uint64_t seed, const std::string& out_dir) {
  const ReportBundle bundle = reproduce(seed, out_dir);
  for (const FrequencyStats& fs : bundle.pooled) {
    std::cout << detail::format_number(fs.frequency_hz) << " Hz: best duty "
              << detail::format_number(fs.selected_duty) << "%"
              << (fs.selection_tie ? " (tie)" : "") << ", H = "
              << detail::format_number(fs.kw.h_statistic) << ", p "
              << (fs.kw.p_underflow ? "< 1e-307 (underflow, reported 0)"
                                    : "= " + detail::format_number(fs.kw.p_value))
              << '\n';
  }
  std::cout << "report: " << (std::filesystem::path(out_dir) / "report.json").string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSVEP duty-cycle toolkit: PWM stimulus schedules, EDF I/O, "
               "synthetic EEG, FFT amplitude analysis and rank statistics"};
  app.require_subcommand(1);

  // stimgen
  double sg_freq = 0.0, sg_duty = 0.0, sg_duration = 1.0;
  std::uint64_t sg_ticks = 1'000'000;
  std::string sg_out;
  CLI::App* stimgen = app.add_subcommand("stimgen", "Generate a PWM edge schedule");
  stimgen->add_option("--freq", sg_freq, "Stimulus frequency in Hz")->required();
  stimgen->add_option("--duty", sg_duty, "Duty cycle in percent")->required();
  stimgen->add_option("--tick-rate", sg_ticks, "Timer ticks per second");
  stimgen->add_option("--duration", sg_duration, "Schedule length in seconds");
  stimgen->add_option("--out", sg_out, "Output CSV path (default: stdout)");

  // edf info / extract
  CLI::App* edf = app.add_subcommand("edf", "Inspect EDF recordings");
  edf->require_subcommand(1);
  std::string ei_file;
  CLI::App* edf_info = edf->add_subcommand("info", "Print the header");
  edf_info->add_option("file", ei_file, "EDF file")->required();
  std::string ex_file, ex_channel = "O2", ex_out;
  CLI::App* edf_extract =
      edf->add_subcommand("extract", "Extract one channel as CSV");
  edf_extract->add_option("file", ex_file, "EDF file")->required();
  edf_extract->add_option("--channel", ex_channel, "Channel label");
  edf_extract->add_option("--out", ex_out, "Output CSV path (default: stdout)");

  // plan
  std::string pl_config, pl_out;
  std::optional<std::uint64_t> pl_seed;
  CLI::App* plan = app.add_subcommand("plan", "Emit a randomized session schedule");
  plan->add_option("--config", pl_config, "Config file");
  plan->add_option("--seed", pl_seed, "Master seed (overrides the config)");
  plan->add_option("--out", pl_out, "Output CSV path (default: stdout)");

  // simulate
  std::string si_config, si_model, si_out;
  std::optional<std::uint64_t> si_seed;
  int si_subjects = 10;
  CLI::App* simulate = app.add_subcommand("simulate", "Synthesize an EDF session");
  simulate->add_option("--config", si_config, "Config file");
  simulate->add_option("--seed", si_seed, "Master seed (overrides the config)");
  simulate->add_option("--subjects", si_subjects, "Number of subjects")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--model", si_model, "Response model CSV");
  simulate->add_option("--out", si_out, "Output directory")->required();

  // analyze
  std::vector<std::string> an_in;
  std::optional<double> an_freq;
  std::string an_channel = "O2", an_out;
  CLI::App* analyze = app.add_subcommand("analyze", "Extract per-segment amplitudes");
  analyze->add_option("--in", an_in, "EDF directory or trial files")->required();
  analyze->add_option("--freq", an_freq, "Restrict to one stimulus frequency");
  analyze->add_option("--channel", an_channel, "Channel label");
  analyze->add_option("--out", an_out, "Output CSV path (default: stdout)");

  // stats
  std::string st_in, st_scope = "pooled", st_out;
  CLI::App* stats = app.add_subcommand("stats", "Kruskal-Wallis tests per frequency");
  stats->add_option("--in", st_in, "Amplitude CSV")->required();
  stats->add_option("--scope", st_scope, "pooled or subject")
      ->check(CLI::IsMember({"pooled", "subject"}));
  stats->add_option("--out", st_out, "Output JSON path (default: stdout)");

  // report
  std::string rp_in, rp_comfort, rp_config, rp_out;
  std::optional<std::uint64_t> rp_seed;
  CLI::App* report = app.add_subcommand("report", "Assemble the full report");
  report->add_option("--in", rp_in, "Amplitude CSV")->required();
  report->add_option("--comfort", rp_comfort, "Comfort rating CSV");
  report->add_option("--config", rp_config, "Config file (for provenance)");
  report->add_option("--seed", rp_seed, "Seed recorded in provenance");
  report->add_option("--out", rp_out, "Output JSON path (default: stdout)");

  // reproduce
  std::uint64_t rr_seed = 42;
  std::string rr_out;
  CLI::App* repro =
      app.add_subcommand("reproduce", "Full simulate-analyze-stats-report run");
  repro->add_option("--seed", rr_seed, "Master seed");
  repro->add_option("--out", rr_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stimgen) return run_stimgen(sg_freq, sg_duty, sg_ticks, sg_duration, sg_out);
    if (*edf_info) return run_edf_info(ei_file);
    if (*edf_extract) return run_edf_extract(ex_file, ex_channel, ex_out);
    if (*plan) return run_plan(pl_config, pl_seed, pl_out);
    if (*simulate)
      return run_simulate(si_config, si_seed, si_subjects, si_model, si_out);
    if (*analyze) return run_analyze(an_in, an_freq, an_channel, an_out);
    if (*stats) return run_stats(st_in, st_scope, st_out);
    if (*report) return run_report(rp_in, rp_comfort, rp_config, rp_seed, rp_out);
    if (*repro) return run_reproduce(rr_seed, rr_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
