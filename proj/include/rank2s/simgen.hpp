#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rank2s/points.hpp"
#include "rank2s/random.hpp"
#include "rank2s/rank.hpp"

namespace rank2s {

namespace dist {

struct Normal {
  double mu = 0.0;
  double sigma = 1.0;
};
/// Student t with `df` degrees of freedom, shifted by `shift`.
struct StudentT {
  double df = 3.0;
  double shift = 0.0;
};
/// Pareto with cdf 1 - (scale/x)^shape on x >= scale.
struct Pareto {
  double shape = 2.0;
  double scale = 2.0;
};
struct Exponential {
  double rate = 1.0;
};
struct LogNormal {
  double mu = 0.0;
  double sigma = 1.0;
};
struct MvNormal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};
/// Multivariate t with one degree of freedom: mean + L z / |w| with
/// L L^T = scatter, z ~ N(0, I), w ~ N(0, 1).
struct MvT1 {
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
};
/// Independent Pareto coordinates.
struct MvPareto {
  Eigen::VectorXd shape;
  Eigen::VectorXd scale;
};

}  // namespace dist

using DistributionSpec = std::variant<dist::Normal, dist::StudentT, dist::Pareto,
                                      dist::Exponential, dist::LogNormal, dist::MvNormal,
                                      dist::MvT1, dist::MvPareto>;

std::size_t dimension(const DistributionSpec& spec);
std::string family_name(const DistributionSpec& spec);

/// Throws InvalidParameters naming the offending parameter.
void validate(const DistributionSpec& spec);

/// Draws `size` observations as a d-dimensional point set (d = 1 for the
/// univariate families).
PointSample draw_points(const DistributionSpec& spec, std::size_t size, Engine& engine);

using DrawnSample = std::variant<Sample, PointSample>;

/// Deterministic in `seed`. Univariate families return a Sample.
DrawnSample draw_sample(const DistributionSpec& spec, std::size_t size, std::uint64_t seed);

/// Covariance with unit diagonal and constant off-diagonal `rho`.
Eigen::MatrixXd equicorrelation(std::size_t d, double rho);

/// Same eigenvectors as `sigma`, reciprocal eigenvalues (i.e. the inverse).
Eigen::MatrixXd reciprocal_eigen_covariance(const Eigen::MatrixXd& sigma);

/// How a scenario's Delta enters the Y distribution.
struct DeltaRule {
  enum class Mode { add, multiply };
  std::string param;
  Mode mode = Mode::add;
};

/// Returns `base` with `rule.param` replaced by base + delta or base * delta
/// (elementwise for vector parameters, whole-matrix for covariances).
DistributionSpec apply_delta(const DistributionSpec& base, const DeltaRule& rule,
                             double delta);

}  // namespace rank2s
