#include "rank2s/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rank2s/error.hpp"

namespace rank2s {

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw EmptySample();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NonFiniteValue("non-finite value at position " +
                           std::to_string(i + 1));
    }
  }
}

std::vector<double> RankedPool::sorted_ranks(Group g) const {
  std::vector<double> out;
  out.reserve(g == Group::X ? m : n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == g) out.push_back(natural_ranks[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

RankedPool pool_and_rank(const Sample& x, const Sample& y, TiePolicy policy) {
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  const std::size_t total = m + n;

  std::vector<double> pooled;
  pooled.reserve(total);
  pooled.insert(pooled.end(), x.values().begin(), x.values().end());
  pooled.insert(pooled.end(), y.values().begin(), y.values().end());

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pooled[a] < pooled[b];
  });

  RankedPool pool;
  pool.m = m;
  pool.n = n;
  pool.tie_policy = policy;
  pool.labels.assign(total, Group::Y);
  std::fill_n(pool.labels.begin(), m, Group::X);
  pool.natural_ranks.resize(total);

  // Walk runs of equal values; a run occupying positions [i, j) gets the
  // mean position.
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i + 1;
    while (j < total && pooled[order[j]] == pooled[order[i]]) ++j;
    if (j - i > 1) {
      if (policy == TiePolicy::reject) throw TiesPresent(pooled[order[i]]);
      pool.has_ties = true;
    }
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) pool.natural_ranks[order[k]] = rank;
    i = j;
  }

  pool.standardized_ranks.resize(total);
  const double big_n = static_cast<double>(total);
  for (std::size_t i = 0; i < total; ++i) {
    pool.standardized_ranks[i] = pool.natural_ranks[i] / big_n;
  }
  return pool;
}

RankedPool pool_from_assignment(std::span<const std::size_t> x_ranks,
                                std::size_t total) {
  if (x_ranks.empty() || x_ranks.size() >= total) {
    throw InvalidArgument("assignment must leave both groups nonempty");
  }
  std::vector<bool> in_x(total + 1, false);
  for (auto r : x_ranks) {
    if (r < 1 || r > total || in_x[r]) {
      throw InvalidArgument("assignment is not a set of distinct ranks in 1..N");
    }
    in_x[r] = true;
  }
  RankedPool pool;
  pool.m = x_ranks.size();
  pool.n = total - pool.m;
  const double big_n = static_cast<double>(total);
  for (auto r : x_ranks) {
    pool.labels.push_back(Group::X);
    pool.natural_ranks.push_back(static_cast<double>(r));
  }
  for (std::size_t r = 1; r <= total; ++r) {
    if (in_x[r]) continue;
    pool.labels.push_back(Group::Y);
    pool.natural_ranks.push_back(static_cast<double>(r));
  }
  for (double r : pool.natural_ranks) pool.standardized_ranks.push_back(r / big_n);
  return pool;
}

}  // namespace rank2s
