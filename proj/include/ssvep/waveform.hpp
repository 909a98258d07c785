#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ssvep/common.hpp"

namespace ssvep {

/// Nominal flicker parameters: frequency, duty-cycle percentage, the timer
/// resolution used to realize them, and how long the schedule should run.
struct StimulusSpec {
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
  std::int64_t tick_rate_hz = 1'000'000;  // 1 us timer tick
  double duration_s = 1.0;

  void validate() const {
    detail::require(detail::finite(frequency_hz) && frequency_hz > 0.0,
                    "StimulusSpec: frequency_hz must be positive");
    detail::require(detail::finite(duty_pct) && duty_pct > 0.0 && duty_pct < 100.0,
                    "StimulusSpec: duty_pct must lie in (0, 100)");
    detail::require(detail::finite(duration_s) && duration_s > 0.0,
                    "StimulusSpec: duration_s must be positive");
    detail::require(tick_rate_hz > 0, "StimulusSpec: tick_rate_hz must be positive");
    // Keeps quantization error far below the +-0.1 Hz / +-0.1 pp targets.
    detail::require(static_cast<double>(tick_rate_hz) >= 1e4 * frequency_hz,
                    "StimulusSpec: tick_rate_hz must be at least 1e4 x frequency_hz");
  }
};

/// On/off durations of one flicker cycle, in seconds.
struct OnOffPeriods {
  double t_on_s = 0.0;
  double t_off_s = 0.0;
};

/// Duty-cycle percentage recomputed from on/off periods:
/// t_on / (t_on + t_off) * 100.
inline double duty_pct_from_periods(const OnOffPeriods& p) {
  return p.t_on_s / (p.t_on_s + p.t_off_s) * 100.0;
}

/// t_on = duty/100 * period, t_off = remainder of the period.
inline OnOffPeriods compute_on_off(const StimulusSpec& spec) {
  spec.validate();
  const double period = 1.0 / spec.frequency_hz;
  const double t_on = spec.duty_pct / 100.0 * period;
  return OnOffPeriods{t_on, period - t_on};
}

enum class Level : std::uint8_t { Off = 0, On = 1 };

struct Edge {
  std::int64_t tick = 0;
  Level level = Level::Off;
};

/// Tick-quantized square-wave schedule: one On and one Off edge per cycle,
/// starting On at tick 0, levels strictly alternating.
struct EdgeSchedule {
  std::vector<Edge> edges;
  std::int64_t tick_rate_hz = 0;
};

/// Quantizes a spec onto the tick grid. The cycle length and the on-duration
/// are each rounded to the nearest tick, and every cycle is identical (no
/// error diffusion), matching a fixed-reload hardware timer. Rounding that
/// collapses either phase to zero ticks is an error rather than a clamp.
inline EdgeSchedule build_edge_schedule(const StimulusSpec& spec) {
  spec.validate();
  const double ticks = static_cast<double>(spec.tick_rate_hz);
  const std::int64_t cycle_ticks = std::llround(ticks / spec.frequency_hz);
  const std::int64_t on_ticks =
      std::llround(spec.duty_pct / 100.0 * ticks / spec.frequency_hz);
  detail::require(on_ticks > 0,
                  "build_edge_schedule: duty rounds to an empty on-phase at this tick rate");
  detail::require(on_ticks < cycle_ticks,
                  "build_edge_schedule: duty rounds to an empty off-phase at this tick rate");

  const double want_ticks = spec.duration_s * ticks;
  const auto n_cycles = static_cast<std::int64_t>(
      std::ceil(want_ticks / static_cast<double>(cycle_ticks)));

  EdgeSchedule schedule;
  schedule.tick_rate_hz = spec.tick_rate_hz;
  schedule.edges.reserve(static_cast<std::size_t>(2 * n_cycles));
  for (std::int64_t c = 0; c < n_cycles; ++c) {
    schedule.edges.push_back({c * cycle_ticks, Level::On});
    schedule.edges.push_back({c * cycle_ticks + on_ticks, Level::Off});
  }
  return schedule;
}

/// Software oscilloscope readout of a schedule, with absolute errors against
/// the nominal spec.
struct MeasuredWaveform {
  double measured_freq_hz = 0.0;
  double measured_duty_pct = 0.0;
  double freq_error_hz = 0.0;
  double duty_error_pp = 0.0;  // percentage points
};

/// Measures frequency and duty from the edge list the way an oscilloscope
/// would: frequency from the mean interval between consecutive rising edges,
/// duty from the mean on-fraction of each complete cycle. Needs at least two
/// complete cycles (three rising edges).
inline MeasuredWaveform measure_schedule(const EdgeSchedule& schedule,
                                         const StimulusSpec& nominal) {
  nominal.validate();
  const auto& edges = schedule.edges;
  detail::require(!edges.empty(), "measure_schedule: empty schedule");
  detail::require(schedule.tick_rate_hz > 0, "measure_schedule: bad tick rate");
  detail::require(edges.front().tick == 0 && edges.front().level == Level::On,
                  "measure_schedule: schedule must start On at tick 0");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    detail::require(edges[i].tick > edges[i - 1].tick,
                    "measure_schedule: edge ticks must be strictly increasing");
    detail::require(edges[i].level != edges[i - 1].level,
                    "measure_schedule: levels must alternate");
  }

  // Complete cycles are delimited by consecutive rising edges.
  double cycle_sum = 0.0;
  double duty_sum = 0.0;
  std::int64_t n_cycles = 0;
  for (std::size_t i = 0; i + 2 < edges.size(); i += 2) {
    const double cycle = static_cast<double>(edges[i + 2].tick - edges[i].tick);
    const double on = static_cast<double>(edges[i + 1].tick - edges[i].tick);
    cycle_sum += cycle;
    duty_sum += on / cycle;
    ++n_cycles;
  }
  detail::require(n_cycles >= 2, "measure_schedule: need at least two complete cycles");

  MeasuredWaveform m;
  const double mean_cycle = cycle_sum / static_cast<double>(n_cycles);
  m.measured_freq_hz = static_cast<double>(schedule.tick_rate_hz) / mean_cycle;
  m.measured_duty_pct = duty_sum / static_cast<double>(n_cycles) * 100.0;
  m.freq_error_hz = std::fabs(m.measured_freq_hz - nominal.frequency_hz);
  m.duty_error_pp = std::fabs(m.measured_duty_pct - nominal.duty_pct);
  return m;
}

}  // namespace ssvep
