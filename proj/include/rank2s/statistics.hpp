#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rank2s/points.hpp"
#include "rank2s/rank.hpp"

namespace rank2s {

enum class StatisticKind { T, Tprime, Dhat, CvM, Energy, KS, Wilcoxon, Mood, TM };

std::string_view to_string(StatisticKind kind);
/// Accepts the canonical names (case-insensitive); throws InvalidArgument.
StatisticKind parse_statistic(std::string_view name);
/// True for statistics that depend on the data only through the ranks.
bool is_rank_statistic(StatisticKind kind);

// Rank-based statistics. All of them follow the group labels in `pool`.

/// Between-group minus within-group mean distance of standardized ranks,
/// scaled by mn/N. Within-group means divide by m^2 and n^2 (the zero
/// diagonal terms are included). Runs in O(N log N).
double statistic_T(const RankedPool& pool);
/// Direct O(N^2) double-sum evaluation of the same quantity.
double statistic_T_pairwise(const RankedPool& pool);
/// Mean between-group standardized rank distance; requires m == n.
double statistic_Tprime(const RankedPool& pool);
/// N/(mn) * T, the plug-in estimate of the population distance D.
double statistic_dhat(const RankedPool& pool);
/// Classical Cramer-von Mises criterion (mn/N) * int (F_m - G_n)^2 dH_N with
/// right-continuous empirical cdfs and weight 1/N per pooled observation.
double statistic_cvm(const RankedPool& pool);
/// sup |F_m - G_n| over the pooled points.
double statistic_ks(const RankedPool& pool);

struct ZScored {
  double value = 0.0;
  double z = 0.0;
};

/// Rank sum of group X with its standardized value under H0.
ZScored statistic_wilcoxon(const RankedPool& pool);
/// Mood's scale statistic sum (R_i - (N+1)/2)^2 over group X, standardized.
ZScored statistic_mood(const RankedPool& pool);

/// Evaluates a rank statistic directly from the sorted natural ranks of the
/// two groups. This is the kernel used by the null-distribution engines.
/// Throws InvalidArgument for statistics that are not rank based.
double rank_statistic(StatisticKind kind, std::span<const double> x_sorted,
                      std::span<const double> y_sorted);

/// Energy statistic on raw observations (Euclidean distances).
double statistic_energy(const PointSample& x, const PointSample& y);
double statistic_energy(const Sample& x, const Sample& y);

/// Between-minus-within combination (mn/N)[S_xy/(mn) - S_xx/(2m^2) -
/// S_yy/(2n^2)] of a precomputed symmetric N x N distance matrix, for an
/// arbitrary split of the indices. Shared by the energy statistic, T_M and
/// their permutation engines.
class DistanceEnergy {
 public:
  /// `distances` is row-major N x N, symmetric with zero diagonal.
  DistanceEnergy(std::size_t total, std::vector<double> distances);
  static DistanceEnergy from_points(const PointSample& pooled);

  std::size_t total() const noexcept { return total_; }
  double operator()(std::span<const std::size_t> x_index,
                    std::span<const std::size_t> y_index) const;
  double distance(std::size_t i, std::size_t j) const {
    return distances_[i * total_ + j];
  }

 private:
  double within_sum(std::span<const std::size_t> index) const;

  std::size_t total_;
  std::vector<double> distances_;
  double all_pairs_sum_ = 0.0;
};

// Normal and asymptotic p-values for the comparison tests.

/// Upper tail of the standard normal.
double normal_sf(double z);
/// Two-sided normal-approximation p-value 2 * P(Z >= |z|).
double two_sided_normal_pvalue(double z);
/// Limiting Kolmogorov tail P(K >= sqrt(mn/N) * d).
double ks_asymptotic_pvalue(double d, std::size_t m, std::size_t n);

using Cdf = std::function<double(double)>;

/// Numerically integrates int (F - G)^2 d(tau F + (1 - tau) G) with the
/// midpoint rule on `grid_size` quantiles of the mixture. The working range
/// spans the 1e-8 and 1 - 1e-8 quantiles of both distributions. Throws
/// NonMonotoneCdf when either cdf decreases or leaves [0, 1].
double population_D(const Cdf& f_cdf, const Cdf& g_cdf, double tau,
                    std::size_t grid_size);

}  // namespace rank2s
