#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "rank2s/asymptotics.hpp"
#include "rank2s/null_models.hpp"
#include "rank2s/points.hpp"
#include "rank2s/statistics.hpp"

namespace rank2s {

/// Which null law turns a statistic into a p-value.
struct NullModel {
  enum class Kind { automatic, exact, monte_carlo, asymptotic, permutation, normal, kolmogorov };
  Kind kind = Kind::automatic;
  std::size_t parameter = 0;  // reps, d or B

  /// Parses "auto", "exact", "mc:REPS", "asymptotic:D", "permutation:B",
  /// "normal" or "kolmogorov"; throws InvalidArgument.
  static NullModel parse(const std::string& text);
  std::string to_string() const;
};

/// The default pairing: exact/Monte-Carlo for the T family, normal
/// approximations for Wilcoxon and Mood, the Kolmogorov limit for KS and
/// permutation for Energy and T_M.
NullModel resolve_null(StatisticKind statistic, NullModel requested, std::size_t m,
                       std::size_t n, std::uint64_t enumeration_cap = kDefaultEnumerationCap);

/// A statistic bound to a null law for fixed sample sizes. The null is built
/// once at construction so repeated tests (power studies) reuse it.
class PreparedTest {
 public:
  PreparedTest(StatisticKind statistic, NullModel null, std::size_t m, std::size_t n,
               std::uint64_t seed, unsigned threads = 1,
               std::uint64_t enumeration_cap = kDefaultEnumerationCap);

  StatisticKind statistic() const noexcept { return statistic_; }
  const NullModel& null_model() const noexcept { return null_; }
  /// Null distribution behind exact / Monte-Carlo p-values, if any.
  const NullDistribution* null_distribution() const noexcept {
    return table_ ? &*table_ : nullptr;
  }

  /// Runs the test. `replicate_seed` drives permutation replicates. Rank
  /// statistics use `ties` for ranking.
  TestOutcome run(const PointSample& x, const PointSample& y, std::uint64_t replicate_seed,
                  TiePolicy ties = TiePolicy::reject) const;

 private:
  StatisticKind statistic_;
  NullModel null_;
  std::size_t m_;
  std::size_t n_;
  std::uint64_t seed_;
  unsigned threads_;
  std::optional<NullDistribution> table_;
  std::shared_ptr<const MixtureLaw> mixture_;
};

}  // namespace rank2s
