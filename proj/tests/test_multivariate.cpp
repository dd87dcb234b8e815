#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rank2s/error.hpp"
#include "rank2s/multivariate.hpp"
#include "rank2s/statistics.hpp"

using namespace rank2s;
using doctest::Approx;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows gaussian_rows(std::mt19937_64& rng, std::size_t count, std::size_t d, double shift = 0) {
  std::normal_distribution<double> g;
  Rows rows(count, std::vector<double>(d));
  for (auto& r : rows)
    for (auto& c : r) c = g(rng) + shift;
  return rows;
}

double tm_oracle(const Rows& x, const Rows& y) {
  Rows pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  Rows ranks;
  for (const auto& p : pooled) ranks.push_back(oracle::spatial_rank(p, pooled));
  const Rows rx(ranks.begin(), ranks.begin() + static_cast<long>(x.size()));
  const Rows ry(ranks.begin() + static_cast<long>(x.size()), ranks.end());
  return oracle::energy_form(rx, ry, oracle::norm);
}

}  // namespace

TEST_CASE("spatial rank examples") {
  const PointSample pool(Rows{{0.0, 0.0}, {1.0, 0.0}});
  const auto r0 = spatial_rank(std::vector<double>{0.0, 0.0}, pool);
  CHECK(r0[0] == Approx(-0.5));
  CHECK(r0[1] == 0.0);
  const auto r1 = spatial_rank(std::vector<double>{1.0, 0.0}, pool);
  CHECK(r1[0] == Approx(0.5));

  // A query equal to every pool point gets the zero vector.
  const PointSample same(Rows{{2.0, 2.0}, {2.0, 2.0}});
  const auto z = spatial_rank(std::vector<double>{2.0, 2.0}, same);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("spatial ranks match the definition and stay inside the unit ball") {
  std::mt19937_64 rng(21);
  for (std::size_t d : {1u, 2u, 3u, 5u}) {
    const Rows pts = gaussian_rows(rng, 40, d);
    const auto set = spatial_ranks(PointSample(pts));
    REQUIRE(set.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto expected = oracle::spatial_rank(pts[i], pts);
      double norm2 = 0;
      for (std::size_t k = 0; k < d; ++k) {
        CHECK(set.rank(i)[k] == Approx(expected[k]).epsilon(1e-12));
        norm2 += set.rank(i)[k] * set.rank(i)[k];
      }
      CHECK(std::sqrt(norm2) < 1.0);
    }
  }
}

TEST_CASE("in one dimension spatial ranks are affine in the natural ranks") {
  std::mt19937_64 rng(22);
  const Rows pts = gaussian_rows(rng, 31, 1);
  const auto set = spatial_ranks(PointSample(pts));
  std::vector<double> flat;
  for (const auto& p : pts) flat.push_back(p[0]);
  const auto r = oracle::count_ranks(flat);
  const double big_n = 31.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(set.rank(i)[0] == Approx(2.0 * r[i] / big_n - 1.0 - 1.0 / big_n).epsilon(1e-13));
}

TEST_CASE("T_M in one dimension is twice T") {
  const auto x = PointSample::from_scalars(std::vector<double>{0.0, 2.0});
  const auto y = PointSample::from_scalars(std::vector<double>{1.0, 3.0});
  CHECK(statistic_TM(x, y) == Approx(0.25).epsilon(1e-14));

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Rows a = gaussian_rows(rng, 5 + trial % 7, 1);
    const Rows b = gaussian_rows(rng, 3 + trial % 11, 1, 0.3);
    std::vector<double> xa, yb;
    for (const auto& p : a) xa.push_back(p[0]);
    for (const auto& p : b) yb.push_back(p[0]);
    const double t = statistic_T(pool_and_rank(Sample(xa), Sample(yb)));
    CHECK(statistic_TM(PointSample(a), PointSample(b)) == Approx(2 * t).epsilon(1e-12));
  }
}

TEST_CASE("T_M agrees with a from-scratch computation") {
  std::mt19937_64 rng(24);
  const Rows x = gaussian_rows(rng, 12, 3);
  const Rows y = gaussian_rows(rng, 9, 3, 0.7);
  CHECK(statistic_TM(PointSample(x), PointSample(y)) ==
        Approx(tm_oracle(x, y)).epsilon(1e-12));
  CHECK_THROWS_AS(statistic_TM(PointSample(x), PointSample(gaussian_rows(rng, 4, 2))),
                  DimensionMismatch);
}

TEST_CASE("T_M is invariant under rotations, shifts and scaling") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + trial % 3;
    const Rows x = gaussian_rows(rng, 15, d);
    const Rows y = gaussian_rows(rng, 11, d, 0.5);
    Eigen::MatrixXd a(d, d);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    auto move = [&](const Rows& rows) {
      Rows out;
      for (const auto& r : rows) {
        const Eigen::VectorXd v = 2.5 * (q * Eigen::Map<const Eigen::VectorXd>(r.data(), d)) +
                                  Eigen::VectorXd::Constant(d, -3.0);
        out.emplace_back(v.data(), v.data() + d);
      }
      return out;
    };
    CHECK(statistic_TM(PointSample(move(x)), PointSample(move(y))) ==
          Approx(statistic_TM(PointSample(x), PointSample(y))).epsilon(1e-10));
  }
}

TEST_CASE("T_M permutation p-values") {
  std::mt19937_64 rng(26);
  const PointSample x(gaussian_rows(rng, 20, 2));
  const auto same = permutation_pvalue_TM(x, x, 199, 4);
  CHECK(same.p_value >= 1.0 / 200.0);
  CHECK(same.method == StatisticKind::TM);

  const PointSample far(gaussian_rows(rng, 20, 2, 6.0));
  const auto shifted = permutation_pvalue_TM(x, far, 199, 4);
  CHECK(shifted.p_value == Approx(1.0 / 200.0));

  const auto one = permutation_pvalue_TM(x, far, 199, 9, 1);
  const auto four = permutation_pvalue_TM(x, far, 199, 9, 4);
  CHECK(one.p_value == four.p_value);
  const PointSample mild(gaussian_rows(rng, 20, 2, 0.3));
  CHECK(permutation_pvalue_TM(x, mild, 299, 9, 1).p_value ==
        permutation_pvalue_TM(x, mild, 299, 9, 3).p_value);
  CHECK_THROWS_AS(permutation_pvalue_TM(x, mild, 10, 1), InvalidArgument);
}
