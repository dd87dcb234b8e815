#include "rank2s/simgen.hpp"

#include <cmath>
#include <random>

#include "rank2s/error.hpp"

namespace rank2s {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameters(what);
}

void require_square(const Eigen::MatrixXd& m, Eigen::Index d, const std::string& name) {
  require(m.rows() == d && m.cols() == d, name + " must be " + std::to_string(d) + " x " +
                                              std::to_string(d));
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
          name + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  require(llt.info() == Eigen::Success, name + " must be positive definite");
}

// Pareto by inversion; 1 - U lies in (0, 1].
double pareto(double shape, double scale, Engine& engine) {
  std::uniform_real_distribution<double> unit;
  return scale * std::pow(1.0 - unit(engine), -1.0 / shape);
}

}  // namespace

std::size_t dimension(const DistributionSpec& spec) {
  return std::visit(Overloaded{
                        [](const dist::MvNormal& s) { return static_cast<std::size_t>(s.mean.size()); },
                        [](const dist::MvT1& s) { return static_cast<std::size_t>(s.mean.size()); },
                        [](const dist::MvPareto& s) { return static_cast<std::size_t>(s.shape.size()); },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    spec);
}

std::string family_name(const DistributionSpec& spec) {
  return std::visit(Overloaded{
                        [](const dist::Normal&) { return std::string("normal"); },
                        [](const dist::StudentT&) { return std::string("student_t"); },
                        [](const dist::Pareto&) { return std::string("pareto"); },
                        [](const dist::Exponential&) { return std::string("exponential"); },
                        [](const dist::LogNormal&) { return std::string("lognormal"); },
                        [](const dist::MvNormal&) { return std::string("mv_normal"); },
                        [](const dist::MvT1&) { return std::string("mv_t1"); },
                        [](const dist::MvPareto&) { return std::string("mv_pareto"); },
                    },
                    spec);
}

void validate(const DistributionSpec& spec) {
  std::visit(Overloaded{
                 [](const dist::Normal& s) {
                   require(std::isfinite(s.mu), "normal: mu must be finite");
                   require(s.sigma > 0.0, "normal: sigma must be > 0");
                 },
                 [](const dist::StudentT& s) {
                   require(s.df > 0.0, "student_t: df must be > 0");
                   require(std::isfinite(s.shift), "student_t: shift must be finite");
                 },
                 [](const dist::Pareto& s) {
                   require(s.shape > 0.0, "pareto: shape must be > 0");
                   require(s.scale > 0.0, "pareto: scale must be > 0");
                 },
                 [](const dist::Exponential& s) {
                   require(s.rate > 0.0, "exponential: rate must be > 0");
                 },
                 [](const dist::LogNormal& s) {
                   require(std::isfinite(s.mu), "lognormal: mu must be finite");
                   require(s.sigma > 0.0, "lognormal: sigma must be > 0");
                 },
                 [](const dist::MvNormal& s) {
                   require(s.mean.size() >= 1, "mv_normal: mean must be nonempty");
                   require_square(s.covariance, s.mean.size(), "mv_normal: covariance");
                 },
                 [](const dist::MvT1& s) {
                   require(s.mean.size() >= 1, "mv_t1: mean must be nonempty");
                   require_square(s.scatter, s.mean.size(), "mv_t1: scatter");
                 },
                 [](const dist::MvPareto& s) {
                   require(s.shape.size() >= 1, "mv_pareto: shape must be nonempty");
                   require(s.shape.size() == s.scale.size(),
                           "mv_pareto: shape and scale must have equal length");
                   require((s.shape.array() > 0.0).all(), "mv_pareto: shape must be > 0");
                   require((s.scale.array() > 0.0).all(), "mv_pareto: scale must be > 0");
                 },
             },
             spec);
}

PointSample draw_points(const DistributionSpec& spec, std::size_t size, Engine& engine) {
  if (size == 0) throw InvalidParameters("sample size must be at least 1");
  validate(spec);
  const std::size_t d = dimension(spec);
  std::vector<double> coords(size * d);
  std::visit(
      Overloaded{
          [&](const dist::Normal& s) {
            std::normal_distribution<double> g(s.mu, s.sigma);
            for (auto& c : coords) c = g(engine);
          },
          [&](const dist::StudentT& s) {
            std::student_t_distribution<double> g(s.df);
            for (auto& c : coords) c = s.shift + g(engine);
          },
          [&](const dist::Pareto& s) {
            for (auto& c : coords) c = pareto(s.shape, s.scale, engine);
          },
          [&](const dist::Exponential& s) {
            std::exponential_distribution<double> g(s.rate);
            for (auto& c : coords) c = g(engine);
          },
          [&](const dist::LogNormal& s) {
            std::lognormal_distribution<double> g(s.mu, s.sigma);
            for (auto& c : coords) c = g(engine);
          },
          [&](const dist::MvNormal& s) {
            const Eigen::MatrixXd l = s.covariance.llt().matrixL();
            std::normal_distribution<double> g;
            Eigen::VectorXd z(static_cast<Eigen::Index>(d));
            for (std::size_t i = 0; i < size; ++i) {
              for (auto& zk : z) zk = g(engine);
              Eigen::Map<Eigen::VectorXd>(coords.data() + i * d, static_cast<Eigen::Index>(d)) =
                  s.mean + l * z;
            }
          },
          [&](const dist::MvT1& s) {
            const Eigen::MatrixXd l = s.scatter.llt().matrixL();
            std::normal_distribution<double> g;
            Eigen::VectorXd z(static_cast<Eigen::Index>(d));
            for (std::size_t i = 0; i < size; ++i) {
              for (auto& zk : z) zk = g(engine);
              const double w = std::abs(g(engine));
              Eigen::Map<Eigen::VectorXd>(coords.data() + i * d, static_cast<Eigen::Index>(d)) =
                  s.mean + l * z / w;
            }
          },
          [&](const dist::MvPareto& s) {
            for (std::size_t i = 0; i < size; ++i) {
              for (std::size_t k = 0; k < d; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                coords[i * d + k] = pareto(s.shape(kk), s.scale(kk), engine);
              }
            }
          },
      },
      spec);
  return PointSample(d, std::move(coords));
}

DrawnSample draw_sample(const DistributionSpec& spec, std::size_t size, std::uint64_t seed) {
  Engine engine = make_stream(seed, 0);
  PointSample points = draw_points(spec, size, engine);
  if (points.dim() == 1) {
    return Sample(std::vector<double>(points.coords().begin(), points.coords().end()));
  }
  return points;
}

Eigen::MatrixXd equicorrelation(std::size_t d, double rho) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(n, n, rho);
  out.diagonal().setOnes();
  return out;
}

Eigen::MatrixXd reciprocal_eigen_covariance(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
  if (solver.info() != Eigen::Success || (solver.eigenvalues().array() <= 0.0).any()) {
    throw InvalidParameters("covariance must be positive definite");
  }
  const Eigen::MatrixXd& v = solver.eigenvectors();
  return v * solver.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
}

namespace {

double shifted(double base, const DeltaRule& rule, double delta) {
  return rule.mode == DeltaRule::Mode::add ? base + delta : base * delta;
}

Eigen::VectorXd shifted(const Eigen::VectorXd& base, const DeltaRule& rule, double delta) {
  return rule.mode == DeltaRule::Mode::add ? Eigen::VectorXd(base.array() + delta)
                                           : Eigen::VectorXd(base * delta);
}

Eigen::MatrixXd scaled(const Eigen::MatrixXd& base, const DeltaRule& rule, double delta) {
  if (rule.mode != DeltaRule::Mode::multiply) {
    throw InvalidParameters("matrix parameter '" + rule.param + "' only supports multiply");
  }
  return base * delta;
}

[[noreturn]] void unknown_param(const DistributionSpec& spec, const std::string& param) {
  throw InvalidParameters(family_name(spec) + " has no parameter '" + param + "'");
}

}  // namespace

DistributionSpec apply_delta(const DistributionSpec& base, const DeltaRule& rule,
                             double delta) {
  DistributionSpec out = base;
  const auto& p = rule.param;
  std::visit(Overloaded{
                 [&](dist::Normal& s) {
                   if (p == "mu") s.mu = shifted(s.mu, rule, delta);
                   else if (p == "sigma") s.sigma = shifted(s.sigma, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::StudentT& s) {
                   if (p == "shift") s.shift = shifted(s.shift, rule, delta);
                   else if (p == "df") s.df = shifted(s.df, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::Pareto& s) {
                   if (p == "shape") s.shape = shifted(s.shape, rule, delta);
                   else if (p == "scale") s.scale = shifted(s.scale, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::Exponential& s) {
                   if (p == "rate") s.rate = shifted(s.rate, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::LogNormal& s) {
                   if (p == "mu") s.mu = shifted(s.mu, rule, delta);
                   else if (p == "sigma") s.sigma = shifted(s.sigma, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::MvNormal& s) {
                   if (p == "mean") s.mean = shifted(s.mean, rule, delta);
                   else if (p == "covariance") s.covariance = scaled(s.covariance, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::MvT1& s) {
                   if (p == "mean") s.mean = shifted(s.mean, rule, delta);
                   else if (p == "scatter") s.scatter = scaled(s.scatter, rule, delta);
                   else unknown_param(base, p);
                 },
                 [&](dist::MvPareto& s) {
                   if (p == "shape") s.shape = shifted(s.shape, rule, delta);
                   else if (p == "scale") s.scale = shifted(s.scale, rule, delta);
                   else unknown_param(base, p);
                 },
             },
             out);
  return out;
}

}  // namespace rank2s
