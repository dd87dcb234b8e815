#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rank2s/error.hpp"
#include "rank2s/statistics.hpp"

using namespace rank2s;
using doctest::Approx;

namespace {

RankedPool example() { return pool_and_rank(Sample({0.0, 2.0}), Sample({1.0, 3.0})); }

std::vector<double> draw(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> g;
  std::vector<double> v(k);
  for (auto& e : v) e = g(rng);
  return v;
}

}  // namespace

TEST_CASE("T on the worked example is 1/8") {
  CHECK(statistic_T(example()) == 0.125);
  CHECK(statistic_T_pairwise(example()) == 0.125);
}

TEST_CASE("T for a single pair") {
  const auto pool = pool_and_rank(Sample({5.0}), Sample({7.0}));
  CHECK(statistic_T(pool) == Approx(0.25).epsilon(1e-15));
}

TEST_CASE("T' and its relation to T") {
  CHECK(statistic_Tprime(example()) == Approx(0.375).epsilon(1e-15));
  CHECK(2 * statistic_Tprime(example()) - 15.0 / 24.0 == Approx(0.125).epsilon(1e-14));
  CHECK(statistic_Tprime(pool_and_rank(Sample({1.0}), Sample({2.0}))) == 0.5);
  CHECK_THROWS_AS(statistic_Tprime(pool_and_rank(Sample({1.0, 3.0}), Sample({2.0}))),
                  UnbalancedSamples);

  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 30; ++n) {
    const auto pool = pool_and_rank(Sample(draw(rng, n)), Sample(draw(rng, n)));
    const double nd = static_cast<double>(n);
    CHECK(std::abs(nd * statistic_Tprime(pool) - (4 * nd * nd - 1) / (12 * nd) -
                   statistic_T(pool)) < 1e-12);
  }
}

TEST_CASE("Dhat rescales T") {
  CHECK(statistic_dhat(example()) == 0.125);
  std::mt19937_64 rng(6);
  const auto pool = pool_and_rank(Sample(draw(rng, 13)), Sample(draw(rng, 21)));
  CHECK(statistic_dhat(pool) * 13.0 * 21.0 / 34.0 == Approx(statistic_T(pool)).epsilon(1e-14));
}

TEST_CASE("fast T agrees with the pairwise baseline and the integer oracle") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = draw(rng, size(rng));
    const auto y = draw(rng, size(rng));
    const auto pool = pool_and_rank(Sample(x), Sample(y));
    const double fast = statistic_T(pool);
    REQUIRE(std::abs(fast - statistic_T_pairwise(pool)) < 1e-12);

    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = oracle::count_ranks(pooled);
    const std::vector<int> xr(ranks.begin(), ranks.begin() + static_cast<long>(x.size()));
    const std::vector<int> yr(ranks.begin() + static_cast<long>(x.size()), ranks.end());
    REQUIRE(std::abs(fast - oracle::t_value(xr, yr)) < 1e-12);
  }
}

TEST_CASE("T is symmetric under exchanging the groups") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = draw(rng, 7 + trial % 5);
    const auto y = draw(rng, 4 + trial % 9);
    CHECK(statistic_T(pool_and_rank(Sample(x), Sample(y))) ==
          Approx(statistic_T(pool_and_rank(Sample(y), Sample(x)))).epsilon(1e-13));
  }
}

TEST_CASE("enumeration mean of T over C(8,4) splits is 9/48") {
  double sum = 0;
  int count = 0;
  oracle::for_each_split(4, 4, [&](const auto& xr, const auto& yr) {
    const std::vector<std::size_t> xs(xr.begin(), xr.end());
    sum += statistic_T(pool_from_assignment(xs, 8));
    (void)yr;
    ++count;
  });
  CHECK(count == 70);
  CHECK(sum / count == Approx(9.0 / 48.0).epsilon(1e-14));
}

TEST_CASE("classical Cramer-von Mises criterion") {
  // ecdf form with right-continuous ecdfs and 1/N weights
  const double oracle_value = oracle::cvm({0, 2}, {1, 3});
  CHECK(oracle_value == 0.125);
  CHECK(statistic_cvm(example()) == Approx(oracle_value).epsilon(1e-15));
  CHECK(statistic_cvm(pool_and_rank(Sample({1.0, 3.0}), Sample({2.0, 4.0}))) ==
        Approx(oracle::cvm({1, 3}, {2, 4})).epsilon(1e-15));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = draw(rng, 1 + trial % 17);
    const auto y = draw(rng, 1 + trial % 11);
    const auto pool = pool_and_rank(Sample(x), Sample(y));
    CHECK(statistic_cvm(pool) == Approx(oracle::cvm(x, y)).epsilon(1e-12));
  }

  double sum = 0;
  oracle::for_each_split(4, 4, [&](const auto& xr, const auto&) {
    const std::vector<std::size_t> xs(xr.begin(), xr.end());
    sum += statistic_cvm(pool_from_assignment(xs, 8));
  });
  CHECK(sum / 70 == Approx(0.1875).epsilon(1e-14));
}

TEST_CASE("energy statistic") {
  CHECK(statistic_energy(Sample({0.0, 2.0}), Sample({1.0, 3.0})) == Approx(0.5).epsilon(1e-15));
  const PointSample pts(std::vector<std::vector<double>>{{0.0, 1.0}, {2.0, -1.0}, {3.0, 3.0}});
  CHECK(std::abs(statistic_energy(pts, pts)) < 1e-15);
  CHECK_THROWS_AS(statistic_energy(pts, PointSample(std::vector<std::vector<double>>{{1.0}})), DimensionMismatch);

  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> x(9, std::vector<double>(3)), y(6, std::vector<double>(3));
  for (auto& p : x)
    for (auto& c : p) c = g(rng);
  for (auto& p : y)
    for (auto& c : p) c = g(rng) + 0.5;
  const double value = statistic_energy(PointSample(x), PointSample(y));
  CHECK(value == Approx(oracle::energy_form(x, y, oracle::norm)).epsilon(1e-12));
  auto shift = [](std::vector<std::vector<double>> pts) {
    for (auto& p : pts) {
      p[0] += 4.0;
      p[1] -= 2.5;
      p[2] += 0.75;
    }
    return pts;
  };
  CHECK(statistic_energy(PointSample(shift(x)), PointSample(shift(y))) ==
        Approx(value).epsilon(1e-12));
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  CHECK(statistic_ks(example()) == 0.5);
  CHECK(statistic_ks(pool_and_rank(Sample({1.0, 2.0}), Sample({3.0, 4.0, 5.0}))) == 1.0);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + trial % 13;
    const std::size_t n = 1 + trial % 7;
    const double d = statistic_ks(pool_and_rank(Sample(draw(rng, m)), Sample(draw(rng, n))));
    CHECK(d >= 1.0 / static_cast<double>(std::max(m, n)) - 1e-15);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("Wilcoxon rank sum") {
  const auto w = statistic_wilcoxon(example());
  CHECK(w.value == 4.0);
  CHECK(w.z == Approx((4.0 - 5.0) / std::sqrt(4.0 * 5.0 / 12.0)));

  // Null variance over all C(6,3) splits equals mn(N+1)/12 = 5.25.
  double s = 0, s2 = 0;
  oracle::for_each_split(3, 3, [&](const auto& xr, const auto&) {
    const std::vector<std::size_t> xs(xr.begin(), xr.end());
    const double v = statistic_wilcoxon(pool_from_assignment(xs, 6)).value;
    s += v;
    s2 += v * v;
  });
  CHECK(s / 20 == Approx(3.0 * 7.0 / 2.0));
  CHECK(s2 / 20 - (s / 20) * (s / 20) == Approx(5.25));
}

TEST_CASE("Mood scale statistic") {
  const auto mood = statistic_mood(pool_and_rank(Sample({0.0, 3.0}), Sample({1.0, 2.0})));
  CHECK(mood.value == 4.5);
  CHECK(mood.z == Approx((4.5 - 2.5) / std::sqrt(2.0 * 2.0 * 5.0 * 12.0 / 180.0)));

  double s = 0, s2 = 0;
  oracle::for_each_split(3, 3, [&](const auto& xr, const auto&) {
    const std::vector<std::size_t> xs(xr.begin(), xr.end());
    const double v = statistic_mood(pool_from_assignment(xs, 6)).value;
    s += v;
    s2 += v * v;
  });
  CHECK(s / 20 == Approx(8.75));
  CHECK(s2 / 20 - (s / 20) * (s / 20) == Approx(9.0 * 7.0 * 32.0 / 180.0));
}

TEST_CASE("rank_statistic rejects raw-data statistics") {
  const std::vector<double> xs{1, 2}, ys{3};
  CHECK_THROWS_AS(rank_statistic(StatisticKind::Energy, xs, ys), InvalidArgument);
  CHECK(parse_statistic("cvm") == StatisticKind::CvM);
  CHECK(parse_statistic("T'") == StatisticKind::Tprime);
  CHECK_THROWS_AS(parse_statistic("ELT"), InvalidArgument);
}

TEST_CASE("midrank statistics stay well defined") {
  const auto pool = pool_and_rank(Sample({1.0, 2.0, 2.0}), Sample({2.0, 3.0}), TiePolicy::midrank);
  const double t = statistic_T(pool);
  CHECK(t == Approx(statistic_T_pairwise(pool)).epsilon(1e-14));
}

TEST_CASE("normal and Kolmogorov tails") {
  CHECK(normal_sf(0.0) == Approx(0.5));
  CHECK(two_sided_normal_pvalue(1.959963984540054) == Approx(0.05).epsilon(1e-9));
  // Critical value of the Kolmogorov limit at 0.05 is 1.3581.
  const double d = 1.358099 / std::sqrt(50.0 * 50.0 / 100.0);
  CHECK(ks_asymptotic_pvalue(d, 50, 50) == Approx(0.05).epsilon(1e-4));
  CHECK(ks_asymptotic_pvalue(0.01, 50, 50) == 1.0);
}

namespace {

double uniform_cdf(double x, double a) { return std::clamp(x - a, 0.0, 1.0); }

// Midpoint rule on a fixed x-grid, independent of the mixture-quantile path.
double d_on_x_grid(double shift, double tau, int points) {
  const double lo = std::min(0.0, shift);
  const double hi = std::max(1.0, 1.0 + shift);
  const double h = (hi - lo) / points;
  double s = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double f = uniform_cdf(x, 0.0);
    const double g = uniform_cdf(x, shift);
    const double dens = tau * (x > 0 && x < 1) + (1 - tau) * (x > shift && x < 1 + shift);
    s += (f - g) * (f - g) * dens * h;
  }
  return s;
}

}  // namespace

TEST_CASE("population distance D by quadrature") {
  const double reference = d_on_x_grid(0.5, 0.5, 1'000'000);
  CHECK(reference == Approx(1.0 / 6.0).epsilon(1e-6));
  const double d = population_D([](double x) { return uniform_cdf(x, 0.0); },
                                [](double x) { return uniform_cdf(x, 0.5); }, 0.5, 20000);
  CHECK(d == Approx(reference).epsilon(1e-4));

  const auto normal = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  CHECK(population_D(normal, normal, 0.3, 1000) == 0.0);
  CHECK(population_D(normal, [&](double x) { return normal(x - 1.0); }, 0.5, 2000) > 0.0);

  CHECK_THROWS_AS(population_D([](double x) { return x < 0 ? 0.0 : (x < 1 ? 1 - x : 1.0); },
                               normal, 0.5, 1000),
                  NonMonotoneCdf);
  CHECK_THROWS_AS(population_D(normal, normal, 0.5, 10), InvalidArgument);
}

TEST_CASE("Dhat approaches D") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(5000), y(5000);
  for (auto& v : x) v = u(rng);
  for (auto& v : y) v = u(rng) + 0.5;
  const double dhat = statistic_dhat(pool_and_rank(Sample(x), Sample(y)));
  CHECK(std::abs(dhat - 1.0 / 6.0) < 0.01);
  for (auto& v : y) v = u(rng);
  CHECK(statistic_dhat(pool_and_rank(Sample(x), Sample(y))) < 0.01);
}
