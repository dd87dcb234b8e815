#include "rank2s/points.hpp"

#include <cmath>
#include <string>

#include "rank2s/error.hpp"

namespace rank2s {

PointSample::PointSample(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw InvalidArgument("point dimension must be at least 1");
  if (coords_.empty()) throw EmptySample();
  if (coords_.size() % dim_ != 0) {
    throw DimensionMismatch("coordinate count is not a multiple of the dimension");
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw NonFiniteValue("non-finite coordinate");
  }
}

namespace {

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw EmptySample();
  const std::size_t dim = rows.front().size();
  std::vector<double> out;
  out.reserve(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw DimensionMismatch("row " + std::to_string(i + 1) + " has " +
                              std::to_string(rows[i].size()) +
                              " coordinates, expected " + std::to_string(dim));
    }
    out.insert(out.end(), rows[i].begin(), rows[i].end());
  }
  return out;
}

}  // namespace

PointSample::PointSample(const std::vector<std::vector<double>>& rows)
    : PointSample(rows.empty() ? 1 : rows.front().size(), flatten(rows)) {}

PointSample PointSample::from_scalars(std::span<const double> values) {
  return PointSample(1, std::vector<double>(values.begin(), values.end()));
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() == 1) return std::abs(a[0] - b[0]);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

PointSample concatenate(const PointSample& x, const PointSample& y) {
  if (x.dim() != y.dim()) {
    throw DimensionMismatch("samples have dimensions " + std::to_string(x.dim()) +
                            " and " + std::to_string(y.dim()));
  }
  std::vector<double> coords(x.coords().begin(), x.coords().end());
  coords.insert(coords.end(), y.coords().begin(), y.coords().end());
  return PointSample(x.dim(), std::move(coords));
}

}  // namespace rank2s
