#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rank2s {

/// A set of d-dimensional observations stored row-major. Construction
/// rejects empty sets, ragged rows and non-finite coordinates.
class PointSample {
 public:
  PointSample(std::size_t dim, std::vector<double> coords);
  explicit PointSample(const std::vector<std::vector<double>>& rows);

  /// One-dimensional points from scalar observations.
  static PointSample from_scalars(std::span<const double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Points of `x` followed by the points of `y`; throws DimensionMismatch.
PointSample concatenate(const PointSample& x, const PointSample& y);

}  // namespace rank2s
