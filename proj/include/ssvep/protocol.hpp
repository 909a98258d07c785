#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssvep/common.hpp"
#include "ssvep/rng.hpp"

namespace ssvep {

/// One slot of a session schedule: flash `frequency_hz` at `duty_pct` for one
/// trial. `trial_index` is 0-based within the (frequency, duty) condition.
struct ScheduleEntry {
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
  int trial_index = 0;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

/// Session parameters prior to randomization. Defaults describe the full
/// protocol: four frequencies, five duty cycles, five 30 s trials per
/// condition with 1 min rests (100 trials per subject).
struct SessionConfig {
  std::vector<double> frequencies{7.0, 8.0, 9.0, 10.0};
  std::vector<double> duties{50.0, 80.0, 85.0, 90.0, 95.0};
  int trials_per_condition = 5;
  double trial_s = 30.0;
  double rest_s = 60.0;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;

  void validate() const {
    detail::require(!frequencies.empty(), "session config: no frequencies");
    detail::require(!duties.empty(), "session config: no duty cycles");
    detail::require(trials_per_condition >= 1,
                    "session config: trials_per_condition must be at least 1");
    detail::require(trial_s > 0.0, "session config: trial_s must be positive");
    detail::require(rest_s >= 0.0, "session config: rest_s must be non-negative");
    for (double f : frequencies)
      detail::require(detail::finite(f) && f > 0.0,
                      "session config: frequencies must be positive");
    for (double d : duties)
      detail::require(detail::finite(d) && d > 0.0 && d < 100.0,
                      "session config: duty cycles must lie in (0, 100)");
    for (std::size_t i = 0; i < frequencies.size(); ++i)
      for (std::size_t j = i + 1; j < frequencies.size(); ++j)
        detail::require(frequencies[i] != frequencies[j],
                        "session config: duplicate frequency");
    for (std::size_t i = 0; i < duties.size(); ++i)
      for (std::size_t j = i + 1; j < duties.size(); ++j)
        detail::require(duties[i] != duties[j],
                        "session config: duplicate duty cycle");
  }
};

/// A fully randomized session: frequencies run in fixed ascending order; the
/// duty order inside each frequency block is a seeded permutation; the trials
/// of one duty are consecutive.
struct ProtocolPlan {
  std::vector<double> frequencies;  // ascending
  std::vector<double> duties;       // as configured (pre-shuffle order)
  int trials_per_condition = 5;
  double trial_s = 30.0;
  double rest_s = 60.0;
  std::uint64_t seed = 0;
  std::vector<ScheduleEntry> schedule;

  void validate() const {
    detail::require(!frequencies.empty() && !duties.empty(),
                    "protocol plan: empty frequency or duty set");
    detail::require(trials_per_condition >= 1,
                    "protocol plan: trials_per_condition must be at least 1");
    detail::require(std::is_sorted(frequencies.begin(), frequencies.end()),
                    "protocol plan: frequencies must be ascending");
    const std::size_t trials = static_cast<std::size_t>(trials_per_condition);
    detail::require(
        schedule.size() == frequencies.size() * duties.size() * trials,
        "protocol plan: schedule length does not match the condition grid");
    // Frequency blocks in ascending order; inside each block every duty
    // appears exactly once as a run of consecutive trials 0..T-1.
    std::size_t pos = 0;
    for (double f : frequencies) {
      std::vector<double> seen;
      for (std::size_t b = 0; b < duties.size(); ++b) {
        const double d = schedule[pos].duty_pct;
        detail::require(std::find(duties.begin(), duties.end(), d) != duties.end(),
                        "protocol plan: schedule uses an unknown duty cycle");
        detail::require(std::find(seen.begin(), seen.end(), d) == seen.end(),
                        "protocol plan: duty repeated within a frequency block");
        seen.push_back(d);
        for (std::size_t t = 0; t < trials; ++t, ++pos) {
          const ScheduleEntry& e = schedule[pos];
          detail::require(e.frequency_hz == f && e.duty_pct == d &&
                              e.trial_index == static_cast<int>(t),
                          "protocol plan: trials of one duty must be "
                          "consecutive and complete");
        }
      }
    }
  }
};

/// Builds the randomized session plan. Frequency blocks are ascending (the
/// experiment always ran 7 Hz up to 10 Hz); the duty order inside block i is
/// a Fisher-Yates permutation drawn from derive_seed(seed, tag, i), so plans
/// are reproducible and blocks are independently randomized.
inline ProtocolPlan plan_session(const SessionConfig& config, std::uint64_t seed) {
  config.validate();
  // Domain-separation tag: keeps plan shuffles decoupled from the per-trial
  // seeds the simulator derives from the same master seed.
  constexpr std::uint64_t kPlanTag = 0x706c616eULL;  // "plan"
  ProtocolPlan plan;
  plan.frequencies = config.frequencies;
  std::sort(plan.frequencies.begin(), plan.frequencies.end());
  plan.duties = config.duties;
  plan.trials_per_condition = config.trials_per_condition;
  plan.trial_s = config.trial_s;
  plan.rest_s = config.rest_s;
  plan.seed = seed;
  plan.schedule.reserve(plan.frequencies.size() * plan.duties.size() *
                        static_cast<std::size_t>(plan.trials_per_condition));
  for (std::size_t i = 0; i < plan.frequencies.size(); ++i) {
    std::vector<double> order = plan.duties;
    Rng rng(derive_seed(seed, kPlanTag, static_cast<std::uint64_t>(i)));
    rng.shuffle(order);
    for (double d : order)
      for (int t = 0; t < plan.trials_per_condition; ++t)
        plan.schedule.push_back({plan.frequencies[i], d, t});
  }
  plan.validate();
  return plan;
}

/// Box-plot summary of one amplitude cell: median and quartiles, computed by
/// linear interpolation between order statistics (h = (n-1)p).
struct BoxStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t n = 0;
};

namespace detail {

/// Quantile of an ascending-sorted vector by linear interpolation between
/// order statistics at fractional position h = (n-1)p.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

inline BoxStats box_stats(std::span<const double> values) {
  detail::require(!values.empty(), "box_stats: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    detail::require(detail::finite(v), "box_stats: non-finite value");
  std::sort(sorted.begin(), sorted.end());
  BoxStats out;
  out.n = sorted.size();
  out.q25 = detail::quantile_sorted(sorted, 0.25);
  out.median = detail::quantile_sorted(sorted, 0.50);
  out.q75 = detail::quantile_sorted(sorted, 0.75);
  return out;
}

/// One subjective comfort rating on the 1-10 scale (10 = most comfortable).
struct ComfortEntry {
  int subject = 0;
  double frequency_hz = 0.0;
  double duty_pct = 0.0;
  int rating = 0;

  friend bool operator==(const ComfortEntry&, const ComfortEntry&) = default;
};

/// Comfort ratings keyed by (subject, frequency, duty). Range and duplicate
/// checks happen at ingestion so every stored entry is valid.
class ComfortRatings {
 public:
  void add(const ComfortEntry& e) {
    detail::require(e.rating >= 1 && e.rating <= 10,
                    "comfort rating out of range (scale is 1-10): " +
                        std::to_string(e.rating));
    detail::require(detail::finite(e.frequency_hz) && detail::finite(e.duty_pct),
                    "comfort rating: non-finite condition");
    for (const ComfortEntry& x : entries_)
      detail::require(!(x.subject == e.subject &&
                        x.frequency_hz == e.frequency_hz &&
                        x.duty_pct == e.duty_pct),
                      "duplicate comfort rating for subject " +
                          std::to_string(e.subject));
    entries_.push_back(e);
  }

  const std::vector<ComfortEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<ComfortEntry> entries_;
};

/// Mean comfort rating for one duty cycle, pooled over subjects and
/// frequencies.
struct ComfortMean {
  double duty_pct = 0.0;
  double mean_rating = 0.0;
  std::size_t n = 0;
};

/// Per-duty mean ratings, ordered by duty ascending.
inline std::vector<ComfortMean> aggregate_comfort(const ComfortRatings& ratings) {
  std::vector<ComfortMean> out;
  for (const ComfortEntry& e : ratings.entries()) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ComfortMean& m) {
      return m.duty_pct == e.duty_pct;
    });
    if (it == out.end()) {
      out.push_back({e.duty_pct, 0.0, 0});
      it = out.end() - 1;
    }
    it->mean_rating += static_cast<double>(e.rating);  // sum for now
    it->n += 1;
  }
  for (ComfortMean& m : out) m.mean_rating /= static_cast<double>(m.n);
  std::sort(out.begin(), out.end(), [](const ComfortMean& a, const ComfortMean& b) {
    return a.duty_pct < b.duty_pct;
  });
  return out;
}

}  // namespace ssvep
