#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rank2s {

/// Univariate observations of one group. Construction validates that the
/// sample is nonempty and every value is finite.
class Sample {
 public:
  explicit Sample(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

enum class Group : unsigned char { X, Y };

enum class TiePolicy { reject, midrank };

/// Two samples pooled and ranked against their combined empirical cdf.
/// Entries are in input order: the m values of x followed by the n values
/// of y.
struct RankedPool {
  std::vector<Group> labels;
  std::vector<double> natural_ranks;       // 1..N, half-integers under midrank
  std::vector<double> standardized_ranks;  // natural / N
  std::size_t m = 0;
  std::size_t n = 0;
  TiePolicy tie_policy = TiePolicy::reject;
  bool has_ties = false;  // only ever true under midrank

  std::size_t total() const noexcept { return m + n; }

  /// Natural ranks of one group, sorted ascending.
  std::vector<double> sorted_ranks(Group g) const;
};

/// Throws EmptySample, or TiesPresent when `policy` is reject and two pooled
/// values coincide.
RankedPool pool_and_rank(const Sample& x, const Sample& y,
                         TiePolicy policy = TiePolicy::reject);

/// Builds the pool that results from assigning natural ranks `x_ranks` to
/// group X and the remaining ranks of 1..N to group Y (tie-free).
RankedPool pool_from_assignment(std::span<const std::size_t> x_ranks,
                                std::size_t total);

}  // namespace rank2s
