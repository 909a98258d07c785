#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ssvep/rng.hpp"
#include "ssvep/waveform.hpp"

using namespace ssvep;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("on/off periods for reference conditions", "[waveform]") {
  // 7 Hz, 85%
  auto p = compute_on_off({.frequency_hz = 7.0, .duty_pct = 85.0});
  REQUIRE_THAT(p.t_on_s, WithinRel(0.12142857142857141, 1e-12));
  REQUIRE_THAT(p.t_off_s, WithinRel(0.021428571428571436, 1e-12));

  // 10 Hz, 50%: symmetric square wave
  p = compute_on_off({.frequency_hz = 10.0, .duty_pct = 50.0});
  REQUIRE_THAT(p.t_on_s, WithinRel(0.05, 1e-12));
  REQUIRE_THAT(p.t_off_s, WithinRel(0.05, 1e-12));

  // 8 Hz, 95%
  p = compute_on_off({.frequency_hz = 8.0, .duty_pct = 95.0});
  REQUIRE_THAT(p.t_on_s, WithinRel(0.11875, 1e-12));
  REQUIRE_THAT(p.t_off_s, WithinRel(0.00625, 1e-12));
}

TEST_CASE("duty recomputed from periods matches the nominal duty", "[waveform]") {
  Rng rng(500);
  for (int i = 0; i < 200; ++i) {
    StimulusSpec spec;
    spec.frequency_hz = 1.0 + 29.0 * rng.uniform01();
    spec.duty_pct = 5.0 + 90.0 * rng.uniform01();
    const auto p = compute_on_off(spec);
    REQUIRE_THAT(duty_pct_from_periods(p), WithinRel(spec.duty_pct, 1e-9));
  }
}

TEST_CASE("spec validation rejects out-of-range parameters", "[waveform]") {
  REQUIRE_THROWS_AS(compute_on_off({.frequency_hz = 0.0, .duty_pct = 50.0}), Error);
  REQUIRE_THROWS_AS(compute_on_off({.frequency_hz = -7.0, .duty_pct = 50.0}), Error);
  REQUIRE_THROWS_AS(compute_on_off({.frequency_hz = 7.0, .duty_pct = 0.0}), Error);
  REQUIRE_THROWS_AS(compute_on_off({.frequency_hz = 7.0, .duty_pct = 100.0}), Error);
  REQUIRE_THROWS_AS(
      compute_on_off({.frequency_hz = 7.0, .duty_pct = 50.0, .duration_s = 0.0}), Error);
  // Tick rate must sit at least four decades above the flicker frequency.
  REQUIRE_THROWS_AS(compute_on_off({.frequency_hz = 30.0,
                                    .duty_pct = 50.0,
                                    .tick_rate_hz = 100'000}),
                    Error);
}

TEST_CASE("tick quantization for reference conditions", "[waveform]") {
  // 7 Hz, 85% at 1 MHz: cycle 142857 ticks, on-phase 121429 ticks.
  auto s = build_edge_schedule({.frequency_hz = 7.0, .duty_pct = 85.0});
  REQUIRE(s.edges.size() >= 4);
  REQUIRE(s.edges[0].tick == 0);
  REQUIRE(s.edges[0].level == Level::On);
  REQUIRE(s.edges[1].tick == 121429);
  REQUIRE(s.edges[1].level == Level::Off);
  REQUIRE(s.edges[2].tick == 142857);
  REQUIRE(s.edges[3].tick == 142857 + 121429);
  // 1 s at 7.000007 Hz needs 8 started cycles.
  REQUIRE(s.edges.size() == 16);

  // 10 Hz, 50%: exact division, 10 cycles per second.
  s = build_edge_schedule({.frequency_hz = 10.0, .duty_pct = 50.0});
  REQUIRE(s.edges.size() == 20);
  REQUIRE(s.edges[1].tick == 50000);
  REQUIRE(s.edges[2].tick == 100000);

  // 9 Hz, 95%: both counts round.
  s = build_edge_schedule({.frequency_hz = 9.0, .duty_pct = 95.0});
  REQUIRE(s.edges[1].tick == 105556);
  REQUIRE(s.edges[2].tick == 111111);
}

TEST_CASE("schedule honours the requested duration", "[waveform]") {
  auto s = build_edge_schedule(
      {.frequency_hz = 10.0, .duty_pct = 50.0, .duration_s = 0.5});
  REQUIRE(s.edges.size() == 10);

  s = build_edge_schedule({.frequency_hz = 7.0, .duty_pct = 85.0, .duration_s = 2.0});
  // 2 s x 1e6 ticks / 142857-tick cycles -> 15 started cycles.
  REQUIRE(s.edges.size() == 30);
  REQUIRE(s.edges.back().tick >= 2'000'000 - 142857);
}

TEST_CASE("degenerate duties fail loudly instead of clamping", "[waveform]") {
  // 50 Hz -> 20000-tick cycle; 0.0005% rounds the on-phase to zero ticks.
  REQUIRE_THROWS_WITH(
      build_edge_schedule({.frequency_hz = 50.0, .duty_pct = 0.0005}),
      Catch::Matchers::ContainsSubstring("empty on-phase"));
  REQUIRE_THROWS_WITH(
      build_edge_schedule({.frequency_hz = 50.0, .duty_pct = 99.9995}),
      Catch::Matchers::ContainsSubstring("empty off-phase"));
}

TEST_CASE("measurement recovers exact conditions exactly", "[waveform]") {
  const StimulusSpec spec{.frequency_hz = 10.0, .duty_pct = 50.0};
  const auto m = measure_schedule(build_edge_schedule(spec), spec);
  REQUIRE_THAT(m.measured_freq_hz, WithinAbs(10.0, 1e-12));
  REQUIRE_THAT(m.measured_duty_pct, WithinAbs(50.0, 1e-12));
  REQUIRE(m.freq_error_hz < 1e-12);
  REQUIRE(m.duty_error_pp < 1e-12);
}

TEST_CASE("protocol grid stays within tolerance at 1 MHz ticks", "[waveform]") {
  double worst_freq = 0.0, worst_duty = 0.0;
  for (double f : {7.0, 8.0, 9.0, 10.0}) {
    for (double d : {50.0, 80.0, 85.0, 90.0, 95.0}) {
      const StimulusSpec spec{.frequency_hz = f, .duty_pct = d};
      const auto m = measure_schedule(build_edge_schedule(spec), spec);
      REQUIRE(m.freq_error_hz <= 0.1);
      REQUIRE(m.duty_error_pp <= 0.1);
      worst_freq = std::max(worst_freq, m.freq_error_hz);
      worst_duty = std::max(worst_duty, m.duty_error_pp);
    }
  }
  // Quantization at 1 MHz leaves orders of magnitude of headroom: the worst
  // cases over the grid are 9.0e-6 Hz and 4.95e-4 pp (both at 9 Hz).
  REQUIRE(worst_freq < 1e-4);
  REQUIRE(worst_duty < 1e-3);
  REQUIRE_THAT(worst_freq, WithinRel(9.000008999393572e-06, 1e-9));
  REQUIRE_THAT(worst_duty, WithinRel(4.950004949932918e-04, 1e-9));
}

TEST_CASE("quantization error is bounded by the tick budget", "[waveform]") {
  Rng rng(808);
  for (int i = 0; i < 200; ++i) {
    StimulusSpec spec;
    // Two seconds of a >= 2 Hz wave guarantees enough cycles to measure.
    spec.frequency_hz = 2.0 + 28.0 * rng.uniform01();
    spec.duty_pct = 5.0 + 90.0 * rng.uniform01();
    spec.duration_s = 2.0;
    const auto s = build_edge_schedule(spec);
    const auto m = measure_schedule(s, spec);
    const std::int64_t cycle_ticks = s.edges[2].tick - s.edges[0].tick;
    // Half-tick rounding of the cycle gives |df| <= f^2 / tick_rate; the
    // on-count adds at most one tick of duty error, |dd| <= 100 / cycle.
    const double r = static_cast<double>(spec.tick_rate_hz);
    REQUIRE(m.freq_error_hz <= spec.frequency_hz * spec.frequency_hz / r + 1e-12);
    REQUIRE(m.duty_error_pp <= 100.0 / static_cast<double>(cycle_ticks) + 1e-12);
  }
}

TEST_CASE("more duty never yields fewer on-ticks", "[waveform]") {
  Rng rng(909);
  for (int i = 0; i < 200; ++i) {
    StimulusSpec lo;
    lo.frequency_hz = 2.0 + 28.0 * rng.uniform01();
    lo.duty_pct = 5.0 + 80.0 * rng.uniform01();
    lo.duration_s = 2.0;
    const auto s_lo = build_edge_schedule(lo);
    const std::int64_t cycle_ticks = s_lo.edges[2].tick - s_lo.edges[0].tick;

    // Step the duty by at least 1.5 ticks' worth so the increase must
    // survive nearest-tick rounding.
    StimulusSpec hi = lo;
    const double step_pp =
        (1.5 + 1000.0 * rng.uniform01()) * 100.0 / static_cast<double>(cycle_ticks);
    hi.duty_pct = std::min(lo.duty_pct + step_pp, 99.0);
    if (hi.duty_pct <= lo.duty_pct) continue;
    const auto s_hi = build_edge_schedule(hi);
    REQUIRE(s_hi.edges[1].tick > s_lo.edges[1].tick);
  }
}

TEST_CASE("measurement rejects malformed schedules", "[waveform]") {
  const StimulusSpec nominal{.frequency_hz = 10.0, .duty_pct = 50.0};

  EdgeSchedule s;
  s.tick_rate_hz = 1'000'000;
  REQUIRE_THROWS_WITH(measure_schedule(s, nominal),
                      Catch::Matchers::ContainsSubstring("empty"));

  s.edges = {{5, Level::On}, {10, Level::Off}};
  REQUIRE_THROWS_WITH(measure_schedule(s, nominal),
                      Catch::Matchers::ContainsSubstring("start On at tick 0"));

  s.edges = {{0, Level::On}, {10, Level::On}, {20, Level::Off}};
  REQUIRE_THROWS_WITH(measure_schedule(s, nominal),
                      Catch::Matchers::ContainsSubstring("alternate"));

  s.edges = {{0, Level::On}, {10, Level::Off}, {10, Level::On}};
  REQUIRE_THROWS_WITH(measure_schedule(s, nominal),
                      Catch::Matchers::ContainsSubstring("strictly increasing"));

  // One complete cycle is not enough to average over.
  s.edges = {{0, Level::On}, {50, Level::Off}, {100, Level::On}, {150, Level::Off}};
  REQUIRE_THROWS_WITH(measure_schedule(s, nominal),
                      Catch::Matchers::ContainsSubstring("two complete cycles"));
}
