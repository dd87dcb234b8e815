#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rank2s/null_models.hpp"
#include "rank2s/points.hpp"
#include "rank2s/statistics.hpp"

namespace rank2s {

/// Spatial ranks of a set of query points, one d-vector per query.
struct SpatialRankSet {
  std::size_t dim = 0;
  std::vector<double> ranks;  // row-major, one row per query

  std::size_t size() const noexcept { return dim == 0 ? 0 : ranks.size() / dim; }
  std::span<const double> rank(std::size_t i) const {
    return {ranks.data() + i * dim, dim};
  }
};

/// (1/N) sum_i (query - z_i) / |query - z_i|; pool points equal to the
/// query contribute the zero vector.
std::vector<double> spatial_rank(std::span<const double> query, const PointSample& pool);

/// Spatial ranks of every pooled point with respect to the pool itself.
SpatialRankSet spatial_ranks(const PointSample& pool);

/// Pairwise Euclidean distances between the spatial ranks of the pooled
/// sample (x followed by y), ready for relabeling.
DistanceEnergy spatial_rank_energy(const PointSample& pooled);

/// Multivariate spatial-rank statistic: the between-minus-within energy form
/// evaluated on spatial ranks taken with respect to the pooled N points.
double statistic_TM(const PointSample& x, const PointSample& y);

/// Permutation test for T_M. Spatial ranks depend only on the pooled points,
/// so they are computed once and each replicate only relabels.
TestOutcome permutation_pvalue_TM(const PointSample& x, const PointSample& y,
                                  std::size_t replicates, std::uint64_t seed,
                                  unsigned threads = 1);

}  // namespace rank2s
