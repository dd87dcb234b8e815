#include "rank2s/multivariate.hpp"

#include <cmath>

#include "rank2s/error.hpp"

namespace rank2s {

namespace {

// Adds (query - z) / |query - z| into `acc`; coincident points add nothing.
void add_unit_vector(std::span<const double> query, std::span<const double> z,
                     std::span<double> acc) {
  double norm = 0.0;
  for (std::size_t k = 0; k < query.size(); ++k) {
    const double d = query[k] - z[k];
    norm += d * d;
  }
  if (norm == 0.0) return;
  norm = std::sqrt(norm);
  for (std::size_t k = 0; k < query.size(); ++k) acc[k] += (query[k] - z[k]) / norm;
}

}  // namespace

std::vector<double> spatial_rank(std::span<const double> query, const PointSample& pool) {
  if (query.size() != pool.dim()) {
    throw DimensionMismatch("query has dimension " + std::to_string(query.size()) +
                            ", pool has " + std::to_string(pool.dim()));
  }
  std::vector<double> rank(pool.dim(), 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i) add_unit_vector(query, pool.point(i), rank);
  const double inv = 1.0 / static_cast<double>(pool.size());
  for (double& r : rank) r *= inv;
  return rank;
}

SpatialRankSet spatial_ranks(const PointSample& pool) {
  const std::size_t total = pool.size();
  const std::size_t dim = pool.dim();
  SpatialRankSet out;
  out.dim = dim;
  out.ranks.assign(total * dim, 0.0);
  std::vector<double> unit(dim);
  // The unit vector from z_j to z_i is the negative of the one from z_i to
  // z_j, so each pair is visited once.
  for (std::size_t i = 0; i < total; ++i) {
    const auto zi = pool.point(i);
    for (std::size_t j = i + 1; j < total; ++j) {
      const auto zj = pool.point(j);
      std::fill(unit.begin(), unit.end(), 0.0);
      add_unit_vector(zi, zj, unit);
      for (std::size_t k = 0; k < dim; ++k) {
        out.ranks[i * dim + k] += unit[k];
        out.ranks[j * dim + k] -= unit[k];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(total);
  for (double& r : out.ranks) r *= inv;
  return out;
}

DistanceEnergy spatial_rank_energy(const PointSample& pooled) {
  const SpatialRankSet ranks = spatial_ranks(pooled);
  return DistanceEnergy::from_points(PointSample(ranks.dim, ranks.ranks));
}

double statistic_TM(const PointSample& x, const PointSample& y) {
  const PointSample pooled = concatenate(x, y);
  const DistanceEnergy form = spatial_rank_energy(pooled);
  std::vector<std::size_t> xi(x.size());
  std::vector<std::size_t> yi(y.size());
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = i;
  for (std::size_t j = 0; j < yi.size(); ++j) yi[j] = x.size() + j;
  return form(xi, yi);
}

TestOutcome permutation_pvalue_TM(const PointSample& x, const PointSample& y,
                                  std::size_t replicates, std::uint64_t seed,
                                  unsigned threads) {
  PermutationOptions options;
  options.replicates = replicates;
  options.seed = seed;
  options.threads = threads;
  return permutation_test(StatisticKind::TM, x, y, options);
}

}  // namespace rank2s
