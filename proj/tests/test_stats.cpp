#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "ssvep/rng.hpp"
#include "ssvep/stats.hpp"

using namespace ssvep;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using Catch::Matchers::ContainsSubstring;

namespace {

// O(n^2) counting oracle: rank = #smaller + (1 + #equal) / 2.
std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = static_cast<double>(smaller) +
               (1.0 + static_cast<double>(equal)) / 2.0;
  }
  return ranks;
}

// Brute-force tie-corrected Kruskal-Wallis, written against the formula
// directly and sharing no code with the library version.
double kw_oracle(const std::vector<std::vector<double>>& groups) {
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const auto ranks = rank_oracle(pooled);
  const double n = static_cast<double>(pooled.size());

  double h = 0.0;
  std::size_t at = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[at++];
    h += r * r / static_cast<double>(g.size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

  std::map<double, int> counts;
  for (double v : pooled) ++counts[v];
  double ties = 0.0;
  for (const auto& [value, count] : counts) {
    (void)value;
    const double t = count;
    ties += t * t * t - t;
  }
  const double correction = 1.0 - ties / (n * n * n - n);
  if (correction <= 0.0) return 0.0;
  return std::max(0.0, h / correction);
}

// Closed-form survival function for even df, evaluated in log space.
double chi_sf_even_oracle(double x, int df) {
  const double z = x / 2.0;
  double term = 1.0, sum = 1.0;
  for (int i = 1; i < df / 2; ++i) {
    term *= z / static_cast<double>(i);
    sum += term;
  }
  return std::exp(-z + std::log(sum));
}

GroupedAmplitudes make_groups(const std::vector<std::vector<double>>& values) {
  GroupedAmplitudes data;
  const double duties[] = {50.0, 80.0, 85.0, 90.0, 95.0};
  for (std::size_t i = 0; i < values.size(); ++i)
    data.groups.push_back({duties[i], values[i]});
  return data;
}

}  // namespace

TEST_CASE("ranking without and with ties", "[stats]") {
  REQUIRE(rank_with_ties({10.0, 20.0, 30.0}) == std::vector<double>{1.0, 2.0, 3.0});
  REQUIRE(rank_with_ties({5.0, 5.0, 9.0}) == std::vector<double>{1.5, 1.5, 3.0});
  REQUIRE(rank_with_ties({30.0, 10.0, 20.0}) == std::vector<double>{3.0, 1.0, 2.0});
  REQUIRE(rank_with_ties({7.0}) == std::vector<double>{1.0});
}

TEST_CASE("ranking matches the counting oracle on tie-heavy data", "[stats]") {
  Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    const std::size_t n = 50;
    for (std::size_t i = 0; i < n; ++i)
      v.push_back(static_cast<double>(rng.uniform_below(8)));
    const auto got = rank_with_ties(v);
    const auto want = rank_oracle(v);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(got[i] == want[i]);

    double sum = 0.0;
    for (double r : got) sum += r;
    REQUIRE(sum == n * (n + 1) / 2.0);
  }
}

TEST_CASE("ranking rejects bad input", "[stats]") {
  REQUIRE_THROWS_AS(rank_with_ties({}), Error);
  REQUIRE_THROWS_AS(rank_with_ties({1.0, std::nan("")}), Error);
}

TEST_CASE("group summary mean and SD", "[stats]") {
  auto s = summarize_group({2.0, 4.0});
  REQUIRE_THAT(s.mean, WithinAbs(3.0, 1e-15));
  REQUIRE_THAT(s.sd, WithinRel(std::sqrt(2.0), 1e-15));

  s = summarize_group({7.5, 7.5, 7.5, 7.5});
  REQUIRE(s.mean == 7.5);
  REQUIRE(s.sd == 0.0);

  REQUIRE_THROWS_AS(summarize_group({1.0}), Error);

  // Long-double accumulation oracle.
  Rng rng(17);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(500.0 + 80.0 * rng.gaussian());
  s = summarize_group(v);
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = static_cast<double>(std::sqrt(ss / (v.size() - 1)));
  REQUIRE_THAT(s.mean, WithinRel(static_cast<double>(mean), 1e-12));
  REQUIRE_THAT(s.sd, WithinRel(sd, 1e-12));
}

TEST_CASE("chi-square survival at reference points", "[stats]") {
  // Values from the even-df closed form and the erfc identities for odd df.
  REQUIRE(chi_square_sf(0.0, 4).value == 1.0);
  REQUIRE_FALSE(chi_square_sf(0.0, 4).underflow);
  REQUIRE_THAT(chi_square_sf(9.488, 4).value, WithinRel(0.04999440557799463, 1e-12));
  REQUIRE_THAT(chi_square_sf(5.0, 2).value, WithinRel(0.0820849986238988, 1e-12));
  REQUIRE_THAT(chi_square_sf(20.0, 6).value, WithinRel(0.0027693957155115762, 1e-12));
  REQUIRE_THAT(chi_square_sf(100.0, 8).value, WithinRel(4.269159205144934e-18, 1e-12));
  REQUIRE_THAT(chi_square_sf(4.0, 1).value, WithinRel(0.045500263896358396, 1e-12));
  REQUIRE_THAT(chi_square_sf(7.5, 3).value, WithinRel(0.057558451972636406, 1e-12));
}

TEST_CASE("chi-square survival matches the even-df closed form", "[stats]") {
  for (int df : {2, 4, 6, 8, 10}) {
    for (double x : {0.5, 1.0, 2.5, 9.488, 20.0, 50.0, 100.0}) {
      const auto got = chi_square_sf(x, df);
      REQUIRE_FALSE(got.underflow);
      REQUIRE_THAT(got.value, WithinRel(chi_sf_even_oracle(x, df), 1e-12));
    }
  }
}

TEST_CASE("chi-square survival is strictly decreasing in x", "[stats]") {
  for (int df : {1, 2, 3, 4, 6}) {
    double previous = 1.0;
    for (double x = 0.5; x <= 50.0; x += 0.5) {
      const double p = chi_square_sf(x, df).value;
      REQUIRE(p < previous);
      previous = p;
    }
  }
}

TEST_CASE("very large statistics underflow cleanly", "[stats]") {
  for (double chi : {4.6e3, 4.2e3, 5.1e3, 5.3e3}) {
    const auto p = chi_square_sf(chi, 4);
    REQUIRE(p.value == 0.0);
    REQUIRE(p.underflow);
  }
  // Large but representable: no underflow flag.
  const auto p = chi_square_sf(1400.0, 4);
  REQUIRE(p.value > 0.0);
  REQUIRE_FALSE(p.underflow);
}

TEST_CASE("chi-square survival rejects bad arguments", "[stats]") {
  REQUIRE_THROWS_AS(chi_square_sf(-1.0, 4), Error);
  REQUIRE_THROWS_AS(chi_square_sf(1.0, 0), Error);
}

TEST_CASE("Kruskal-Wallis on the hand-computed example", "[stats]") {
  const auto result = kruskal_wallis(make_groups({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}}));
  REQUIRE_THAT(result.h_statistic, WithinRel(3.857142857142854, 1e-9));
  REQUIRE(result.df == 1);
  REQUIRE(result.n_total == 6);
  REQUIRE(result.group_sizes == std::vector<std::size_t>{3, 3});
  REQUIRE_THAT(result.mean_ranks[0], WithinAbs(2.0, 1e-12));   // R = 6
  REQUIRE_THAT(result.mean_ranks[1], WithinAbs(5.0, 1e-12));   // R = 15
  REQUIRE_THAT(result.p_value, WithinRel(0.04953461343562674, 1e-9));
  REQUIRE_FALSE(result.p_underflow);
}

TEST_CASE("all-tie data reports no difference", "[stats]") {
  const auto result = kruskal_wallis(make_groups({{5.0, 5.0}, {5.0, 5.0}}));
  REQUIRE(result.h_statistic == 0.0);
  REQUIRE(result.p_value == 1.0);
  REQUIRE_FALSE(result.p_underflow);
}

TEST_CASE("Kruskal-Wallis input validation", "[stats]") {
  REQUIRE_THROWS_AS(kruskal_wallis(make_groups({{1.0, 2.0, 3.0}})), Error);
  REQUIRE_THROWS_WITH(kruskal_wallis(make_groups({{1.0, 2.0}, {}})),
                      ContainsSubstring("empty group"));
  REQUIRE_THROWS_WITH(kruskal_wallis(make_groups({{1.0}, {2.0}})),
                      ContainsSubstring("three observations"));

  GroupedAmplitudes dup;
  dup.groups.push_back({85.0, {1.0, 2.0}});
  dup.groups.push_back({85.0, {3.0, 4.0}});
  REQUIRE_THROWS_WITH(kruskal_wallis(dup), ContainsSubstring("duplicate duty"));
}

TEST_CASE("rank sums are conserved for every configuration", "[stats]") {
  Rng rng(1999);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> groups(2 + rng.uniform_below(3));
    for (auto& g : groups) {
      const std::size_t n = 2 + rng.uniform_below(40);
      for (std::size_t i = 0; i < n; ++i)
        g.push_back(std::floor(rng.uniform01() * 25.0));
    }
    const auto result = kruskal_wallis(make_groups(groups));

    double sum = 0.0;
    for (std::size_t j = 0; j < result.mean_ranks.size(); ++j)
      sum += static_cast<double>(result.group_sizes[j]) * result.mean_ranks[j];
    const double n = static_cast<double>(result.n_total);
    REQUIRE_THAT(sum, WithinRel(n * (n + 1.0) / 2.0, 1e-9));
    REQUIRE(result.h_statistic >= 0.0);
  }
}

TEST_CASE("H matches the brute-force oracle on random configurations", "[stats]") {
  Rng rng(31337);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<double>> groups(2 + rng.uniform_below(3));
    for (auto& g : groups) {
      const std::size_t n = 1 + rng.uniform_below(6);
      for (std::size_t i = 0; i < n; ++i) {
        // Half the draws come from a 6-value lattice to force ties.
        if (rng.uniform_below(2) == 0)
          g.push_back(static_cast<double>(rng.uniform_below(6)));
        else
          g.push_back(10.0 * rng.uniform01());
      }
    }
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    if (total < 3) continue;

    const auto result = kruskal_wallis(make_groups(groups));
    const double want = kw_oracle(groups);
    REQUIRE_THAT(result.h_statistic, WithinAbs(want, 1e-9));
  }
}

TEST_CASE("monotone transforms leave the test untouched", "[stats]") {
  Rng rng(2024);
  std::vector<std::vector<double>> groups(3);
  for (auto& g : groups)
    for (int i = 0; i < 20; ++i)
      g.push_back(static_cast<double>(rng.uniform_below(12)));

  const auto base = kruskal_wallis(make_groups(groups));

  // 2x + 1 and x^3 + 2x are strictly increasing and exact on small integers.
  auto linear = groups;
  for (auto& g : linear)
    for (auto& v : g) v = 2.0 * v + 1.0;
  auto cubic = groups;
  for (auto& g : cubic)
    for (auto& v : g) v = v * v * v + 2.0 * v;

  for (const auto& variant : {linear, cubic}) {
    const auto transformed = kruskal_wallis(make_groups(variant));
    REQUIRE(transformed.h_statistic == base.h_statistic);
    REQUIRE(transformed.mean_ranks == base.mean_ranks);
    REQUIRE(transformed.p_value == base.p_value);
  }
}

TEST_CASE("best duty follows the highest mean rank", "[stats]") {
  // Mean ranks of subject S1 at 7 Hz; the 85% duty dominates and the rank
  // sums close to 150 x (387.1+387.3+649.2+377.4+76.5) = 281625 = 750*751/2.
  KwResult r;
  r.group_labels = {50.0, 80.0, 85.0, 90.0, 95.0};
  r.mean_ranks = {387.1, 387.3, 649.2, 377.4, 76.5};
  double rank_sum = 0.0;
  for (double m : r.mean_ranks) rank_sum += 150.0 * m;
  REQUIRE_THAT(rank_sum, WithinAbs(281625.0, 1e-6));
  REQUIRE_THAT(rank_sum, WithinAbs(750.0 * 751.0 / 2.0, 1e-6));

  const auto selection = select_best_duty({{7.0, r}});
  REQUIRE(selection.entries.size() == 1);
  REQUIRE(selection.entries[0].frequency_hz == 7.0);
  REQUIRE(selection.entries[0].duty_pct == 85.0);
  REQUIRE_FALSE(selection.entries[0].tie);
}

TEST_CASE("exact rank ties are flagged and resolved to the first label", "[stats]") {
  KwResult r;
  r.group_labels = {50.0, 80.0, 85.0};
  r.mean_ranks = {4.0, 4.0, 4.0};
  auto selection = select_best_duty({{9.0, r}});
  REQUIRE(selection.entries[0].duty_pct == 50.0);
  REQUIRE(selection.entries[0].tie);

  // A tie below the maximum is not a tie for the selection.
  r.mean_ranks = {3.0, 3.0, 4.0};
  selection = select_best_duty({{9.0, r}});
  REQUIRE(selection.entries[0].duty_pct == 85.0);
  REQUIRE_FALSE(selection.entries[0].tie);
}

TEST_CASE("selection spans all requested frequencies in order", "[stats]") {
  KwResult a, b;
  a.group_labels = {50.0, 85.0};
  a.mean_ranks = {10.0, 20.0};
  b.group_labels = {50.0, 85.0};
  b.mean_ranks = {30.0, 5.0};
  const auto selection = select_best_duty({{7.0, a}, {8.0, b}});
  REQUIRE(selection.entries.size() == 2);
  REQUIRE(selection.entries[0].duty_pct == 85.0);
  REQUIRE(selection.entries[1].duty_pct == 50.0);
}
