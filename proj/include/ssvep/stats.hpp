#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ssvep/common.hpp"

// Tie-corrected Kruskal-Wallis test over duty-cycle groups, chi-square
// upper-tail p-values, mean/SD group summaries and best-duty selection.

namespace ssvep {

/// Amplitude observations grouped by duty cycle, in protocol order.
struct GroupedAmplitudes {
  struct Group {
    double duty_pct = 0.0;
    std::vector<double> values;
  };
  std::vector<Group> groups;

  void validate() const {
    detail::require(groups.size() >= 2, "GroupedAmplitudes: need at least two groups");
    for (const auto& g : groups) {
      detail::require(!g.values.empty(), "GroupedAmplitudes: empty group");
      for (double v : g.values)
        detail::require(detail::finite(v), "GroupedAmplitudes: non-finite value");
    }
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (std::size_t j = i + 1; j < groups.size(); ++j)
        detail::require(groups[i].duty_pct != groups[j].duty_pct,
                        "GroupedAmplitudes: duplicate duty label");
  }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.values.size();
    return n;
  }
};

struct GroupSummary {
  double mean = 0.0;
  double sd = 0.0;
};

/// Upper-tail chi-square probability. `underflow` marks results that are
/// mathematically positive but below the smallest representable double.
struct ChiSquarePValue {
  double value = 1.0;
  bool underflow = false;
};

struct KwResult {
  double h_statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  bool p_underflow = false;
  std::vector<double> group_labels;   // duty_pct, input order
  std::vector<std::size_t> group_sizes;
  std::vector<double> mean_ranks;
  std::vector<GroupSummary> group_summaries;
  std::size_t n_total = 0;
};

struct BestDutySelection {
  struct Entry {
    double frequency_hz = 0.0;
    double duty_pct = 0.0;
    bool tie = false;
  };
  std::vector<Entry> entries;
};

/// Ranks 1..N with tied values sharing the average of their would-be ranks;
/// the rank sum is exactly N(N+1)/2.
inline std::vector<double> rank_with_ties(const std::vector<double>& values) {
  detail::require(!values.empty(), "rank_with_ties: empty input");
  for (double v : values)
    detail::require(detail::finite(v), "rank_with_ties: non-finite value");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1; average (i+j)/2 + 1.
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

/// Arithmetic mean and sample SD (n-1 denominator, two-pass).
inline GroupSummary summarize_group(const std::vector<double>& values) {
  detail::require(values.size() >= 2, "summarize_group: need at least two values");
  for (double v : values)
    detail::require(detail::finite(v), "summarize_group: non-finite value");
  GroupSummary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

/// Regularized upper incomplete gamma Q(a, z) by the standard split: series
/// for the lower tail when z < a + 1, Lentz continued fraction otherwise.
/// The prefactor is evaluated in log space so very large statistics report
/// a clean underflow instead of a silent zero.
inline ChiSquarePValue chi_square_sf(double x, int df) {
  detail::require(df >= 1, "chi_square_sf: df must be at least 1");
  detail::require(detail::finite(x) && x >= 0.0,
                  "chi_square_sf: x must be finite and non-negative");
  if (x == 0.0) return {1.0, false};

  const double a = static_cast<double>(df) / 2.0;
  const double z = x / 2.0;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 10000;
  // log of the smallest positive (denormal) double, ~ -744.44.
  const double log_tiny = std::log(std::numeric_limits<double>::denorm_min());

  if (z < a + 1.0) {
    // Lower-tail series: P(a,z) = z^a e^-z / Gamma(a+1) * sum term_n,
    // term_0 = 1, term_n = term_{n-1} * z / (a + n). Q here is never tiny.
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < kMaxIter; ++n) {
      term *= z / (a + static_cast<double>(n));
      sum += term;
      if (term < sum * kEps) break;
    }
    const double log_p = a * std::log(z) - z - std::lgamma(a + 1.0) + std::log(sum);
    const double p_lower = std::exp(log_p);
    return {std::max(0.0, 1.0 - p_lower), false};
  }

  // Upper-tail continued fraction (modified Lentz):
  // Q(a,z) = z^a e^-z / Gamma(a) * 1/(z+1-a- 1(1-a)/(z+3-a- ...)).
  constexpr double kFpMin = 1e-300;
  double b = z + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int n = 1; n < kMaxIter; ++n) {
    const double an = -static_cast<double>(n) * (static_cast<double>(n) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  const double log_q = a * std::log(z) - z - std::lgamma(a) + std::log(h);
  if (log_q < log_tiny) return {0.0, true};
  return {std::exp(log_q), false};
}

/// Tie-corrected Kruskal-Wallis H over the joint ranks of all groups:
/// H = 12/(N(N+1)) * sum R_j^2/n_j - 3(N+1), divided by the correction
/// C = 1 - sum(t^3 - t)/(N^3 - N) over tie runs. All-identical data is the
/// degenerate C = 0 case and reports H = 0, p = 1.
inline KwResult kruskal_wallis(const GroupedAmplitudes& data) {
  data.validate();
  const std::size_t n_total = data.total();
  detail::require(n_total >= 3, "kruskal_wallis: need at least three observations");

  std::vector<double> pooled;
  pooled.reserve(n_total);
  for (const auto& g : data.groups)
    pooled.insert(pooled.end(), g.values.begin(), g.values.end());
  const auto ranks = rank_with_ties(pooled);

  KwResult result;
  result.n_total = n_total;
  result.df = static_cast<int>(data.groups.size()) - 1;

  const double nd = static_cast<double>(n_total);
  double h = 0.0;
  std::size_t offset = 0;
  for (const auto& g : data.groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) rank_sum += ranks[offset + i];
    offset += g.values.size();

    const double nj = static_cast<double>(g.values.size());
    h += rank_sum * rank_sum / nj;
    result.group_labels.push_back(g.duty_pct);
    result.group_sizes.push_back(g.values.size());
    result.mean_ranks.push_back(rank_sum / nj);
    if (g.values.size() >= 2) {
      result.group_summaries.push_back(summarize_group(g.values));
    } else {
      result.group_summaries.push_back({g.values.front(), 0.0});
    }
  }
  h = 12.0 / (nd * (nd + 1.0)) * h - 3.0 * (nd + 1.0);

  // Tie runs over the sorted pooled sample.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  const double correction = 1.0 - tie_sum / (nd * nd * nd - nd);

  if (correction <= 0.0) {
    // Every observation identical: no evidence of any difference.
    result.h_statistic = 0.0;
    result.p_value = 1.0;
    result.p_underflow = false;
    return result;
  }

  result.h_statistic = std::max(0.0, h / correction);
  const auto p = chi_square_sf(result.h_statistic, result.df);
  result.p_value = p.value;
  result.p_underflow = p.underflow;
  return result;
}

/// Picks the duty with the highest mean rank per frequency. Exact ties keep
/// the first-listed duty and set the tie flag.
inline BestDutySelection select_best_duty(
    const std::vector<std::pair<double, KwResult>>& per_frequency) {
  detail::require(!per_frequency.empty(), "select_best_duty: no results");
  BestDutySelection selection;
  for (const auto& [freq, result] : per_frequency) {
    detail::require(!result.mean_ranks.empty(),
                    "select_best_duty: result carries no mean ranks");
    detail::require(result.mean_ranks.size() == result.group_labels.size(),
                    "select_best_duty: labels and mean ranks disagree");
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t i = 1; i < result.mean_ranks.size(); ++i) {
      if (result.mean_ranks[i] > result.mean_ranks[best]) {
        best = i;
        tie = false;
      } else if (result.mean_ranks[i] == result.mean_ranks[best]) {
        tie = true;
      }
    }
    selection.entries.push_back({freq, result.group_labels[best], tie});
  }
  return selection;
}

}  // namespace ssvep
