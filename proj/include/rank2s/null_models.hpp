#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rank2s/points.hpp"
#include "rank2s/rank.hpp"
#include "rank2s/statistics.hpp"

namespace rank2s {

enum class NullKind { exact, monte_carlo };

std::string_view to_string(NullKind kind);

/// Null law of a statistic stored as its distinct support points with
/// multiplicities. For the exact kind the counts sum to C(N, m); for the
/// Monte-Carlo kind they sum to the number of replicates.
struct NullDistribution {
  NullKind kind = NullKind::exact;
  StatisticKind statistic = StatisticKind::T;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::vector<double> values;  // ascending, distinct
  std::vector<std::uint64_t> counts;
  std::vector<double> weights;  // counts / total

  std::uint64_t total() const;
  /// P(S >= x); support points within 1e-12 (relative) of x count as equal.
  double tail_ge(double x) const;
  /// P(S > x) with the same tolerance.
  double tail_gt(double x) const;
  double mean() const;
  double variance() const;
};

/// Values within this relative distance are treated as the same support
/// point; rounding differences between algebraically equal sums stay below
/// it while distinct rank configurations are separated by far more.
inline constexpr double kSupportTolerance = 1e-12;

/// C(n, k); throws EnumerationTooLarge on 64-bit overflow.
std::uint64_t binomial(std::size_t n, std::size_t k);

inline constexpr std::uint64_t kDefaultEnumerationCap = 20'000'000;

/// Evaluates a rank statistic on every assignment of m of the ranks 1..N to
/// group X. Throws EnumerationTooLarge when C(N, m) exceeds `cap`.
NullDistribution exact_null(std::size_t m, std::size_t n, StatisticKind statistic,
                            std::uint64_t cap = kDefaultEnumerationCap,
                            unsigned threads = 1);

/// Evaluates the statistic on `reps` uniformly random m-subsets of 1..N,
/// each drawn by a partial Fisher-Yates shuffle. Deterministic in `seed`
/// regardless of `threads`.
NullDistribution mc_null(std::size_t m, std::size_t n, StatisticKind statistic,
                         std::size_t reps, std::uint64_t seed, unsigned threads = 1);

/// Exact kind: P(S >= observed), floored at 1/C(N, m) when observed exceeds
/// the support. Monte-Carlo kind: (1 + #{S >= observed}) / (reps + 1).
double pvalue_from_null(double observed, const NullDistribution& null);

/// Smallest support value c with P(S > c) <= alpha; the test rejects when
/// the statistic exceeds c. Requires 0 < alpha < 1.
double critical_value_from_null(double alpha, const NullDistribution& null);

/// Rejection probability P(S > c) of the rule "reject when S > c".
double attained_size(double critical_value, const NullDistribution& null);

/// Result of one two-sample test.
struct TestOutcome {
  double statistic_value = 0.0;
  double p_value = 1.0;
  StatisticKind method = StatisticKind::T;
  std::string null_model;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
};

/// Statistic evaluated on a split of pooled indices 0..N-1.
using SplitStatistic = std::function<double(std::span<const std::size_t> x_index,
                                            std::span<const std::size_t> y_index)>;

struct PermutationOptions {
  std::size_t replicates = 999;
  std::uint64_t seed = 0;
  /// Evaluate every split instead of sampling when C(N, m) <= replicates.
  bool enumerate_if_feasible = false;
  unsigned threads = 1;
};

struct PermutationResult {
  double observed = 0.0;
  double p_value = 1.0;
  std::size_t replicates = 0;
  bool enumerated = false;
};

/// Pooled relabeling engine. Replicate b relabels with its own stream
/// derived from (seed, b) and p = (1 + #{S_b >= observed}) / (B + 1). When
/// enumerating, p = #{splits with S >= observed} / C(N, m). Requires B >= 99.
PermutationResult permutation_pvalue(const SplitStatistic& statistic, std::size_t m,
                                     std::size_t n, const PermutationOptions& options);

/// Permutation test of any statistic on multivariate or univariate data.
/// Energy and T_M use a precomputed distance matrix; rank statistics rerank
/// the pooled values for every split.
TestOutcome permutation_test(StatisticKind statistic, const PointSample& x,
                             const PointSample& y, const PermutationOptions& options);
TestOutcome permutation_test(StatisticKind statistic, const Sample& x, const Sample& y,
                             const PermutationOptions& options);

// Cache files.

/// Canonical cache file name for a null law, e.g. "null_T_m7_n9_exact.csv".
std::string null_cache_name(StatisticKind statistic, std::size_t m, std::size_t n,
                            NullKind kind, std::size_t reps = 0,
                            std::uint64_t seed = 0);

void save_null(const NullDistribution& null, const std::filesystem::path& path);
/// Throws ParseError on malformed or version-mismatched files.
NullDistribution load_null(const std::filesystem::path& path);

}  // namespace rank2s
