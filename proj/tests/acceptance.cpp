// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rank2s/asymptotics.hpp"
#include "rank2s/error.hpp"
#include "rank2s/null_models.hpp"
#include "rank2s/parallel.hpp"
#include "rank2s/power_study.hpp"
#include "rank2s/statistics.hpp"

using namespace rank2s;

namespace {

struct Report {
  bool ok = true;
  std::vector<std::string> lines;

  void check(bool pass, const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    lines.push_back(std::string(pass ? "ok   " : "MISS ") + buf);
    ok = ok && pass;
  }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Report&)>& body) {
  const auto start = std::chrono::steady_clock::now();
  Report r;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.check(false, "exception: %s", e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] %2d %s (%.1fs)\n", r.ok ? "PASS" : "FAIL", id, title, secs);
  for (const auto& line : r.lines) std::printf("       %s\n", line.c_str());
  std::fflush(stdout);
  failures += !r.ok;
}

const unsigned kThreads = default_threads();

// Quantiles shared by criteria 5 and 6.
std::map<std::size_t, double> quantiles;

double round_to(double x, int digits) {
  const double s = std::pow(10.0, digits);
  return std::round(x * s) / s;
}

}  // namespace

int main() {
  std::printf("rank2s acceptance run, %u worker thread(s)\n", kThreads);

  criterion(1, "worked example x=(0,2), y=(1,3)", [](Report& r) {
    const auto pool = pool_and_rank(Sample({0.0, 2.0}), Sample({1.0, 3.0}));
    const double t = statistic_T(pool);
    r.check(t == 0.125, "statistic_T = %.17g (want 0.125 exactly)", t);
    const double c = statistic_cvm(pool);
    // The classical ecdf form evaluates to 1/8 here; see README.
    r.check(c == 0.25, "statistic_cvm = %.17g (want 0.25 exactly)", c);
  });

  criterion(2, "null moments of T for 2 <= m, n <= 8", [](Report& r) {
    double worst_mean = 0.0, worst_var = 0.0;
    for (std::size_t m = 2; m <= 8; ++m) {
      for (std::size_t n = 2; n <= 8; ++n) {
        const auto null = exact_null(m, n, StatisticKind::T, kDefaultEnumerationCap, kThreads);
        const auto mo = moments_T(m, n);
        worst_mean = std::max(worst_mean, std::abs(null.mean() - mo.mean));
        worst_var = std::max(worst_var, std::abs(null.variance() - mo.variance));
      }
    }
    r.check(worst_mean <= 1e-12, "max |mean - (N+1)/(6N)| = %.3g", worst_mean);
    r.check(worst_var <= 1e-12, "max |var - closed form| = %.3g", worst_var);
  });

  criterion(3, "exact critical values", [](Report& r) {
    const struct {
      std::size_t m, n;
      std::uint64_t total;
      double c, size;
    } rows[] = {{7, 7, 3432, 0.4643, 0.049}, {7, 9, 11440, 0.4678, 0.050}};
    for (const auto& row : rows) {
      const auto null = exact_null(row.m, row.n, StatisticKind::T, kDefaultEnumerationCap, kThreads);
      const double c = critical_value_from_null(0.05, null);
      const double size = attained_size(c, null);
      r.check(null.total() == row.total, "m=%zu n=%zu: %llu assignments", row.m, row.n,
              static_cast<unsigned long long>(null.total()));
      r.check(std::abs(c - row.c) <= 5e-5 && std::abs(size - row.size) <= 5e-4,
              "m=%zu n=%zu: c = %.6f (want %.4f), attained size %.5f (want %.3f)", row.m, row.n, c,
              row.c, size, row.size);
    }
  });

  criterion(4, "mixture variance ratios", [](Report& r) {
    const std::pair<std::size_t, double> rows[] = {{1, 0.9239}, {2, 0.9819}, {4, 0.9967}, {10, 0.9997}};
    for (auto [d, want] : rows) {
      const double v = mixture_variance_ratio(d);
      r.check(std::abs(v - want) <= 5e-5, "d=%zu: %.6f (want %.4f +- 5e-5)", d, v, want);
    }
  });

  criterion(5, "Z_d 95% quantiles from 1e7 samples", [](Report& r) {
    const std::pair<std::size_t, double> rows[] = {{1, 1.9298}, {2, 1.9676}, {4, 1.9772}, {10, 1.9779}};
    for (auto [d, want] : rows) {
      const double q = quantile_Zd(d, 0.05, 10'000'000, 1, kThreads);
      quantiles[d] = q;
      r.check(std::abs(q - want) <= 0.002, "d=%zu: %.5f (want %.4f +- 0.002)", d, q, want);
    }
  });

  criterion(6, "approximated critical values", [](Report& r) {
    // d = 100 is not part of criterion 5, so draw it here with the same budget.
    quantiles[100] = quantile_Zd(100, 0.05, 10'000'000, 1, kThreads);
    const std::size_t ds[] = {1, 2, 4, 10, 100};
    const struct {
      std::size_t m, n;
      double c[5];
    } rows[] = {{50, 50, {0.4545, 0.4601, 0.4617, 0.4617, 0.4617}},
                {50, 40, {0.4545, 0.4601, 0.4615, 0.4616, 0.4616}},
                {500, 500, {0.4544, 0.4600, 0.4614, 0.4615, 0.4615}},
                {7, 7, {0.4543, 0.4597, 0.4610, 0.4611, 0.4611}},
                {7, 9, {0.4540, 0.4594, 0.4608, 0.4609, 0.4609}}};
    for (const auto& row : rows) {
      const auto mo = moments_T(row.m, row.n);
      for (int k = 0; k < 5; ++k) {
        if (!quantiles.count(ds[k])) {
          r.check(false, "no quantile for d=%zu", ds[k]);
          continue;
        }
        const double c = mo.mean + mo.sd() * quantiles[ds[k]];
        r.check(std::abs(c - row.c[k]) <= 5e-4, "m=%zu n=%zu d=%zu: %.5f (want %.4f +- 5e-4)",
                row.m, row.n, ds[k], c, row.c[k]);
      }
    }
  });

  criterion(7, "attained size of asymptotic critical values", [](Report& r) {
    const struct {
      std::size_t m, n;
      double c, size;
    } rows[] = {{7, 7, 0.4611, 0.056}, {7, 9, 0.4609, 0.052}};
    for (const auto& row : rows) {
      const auto null = exact_null(row.m, row.n, StatisticKind::T, kDefaultEnumerationCap, kThreads);
      const double size = attained_size(row.c, null);
      r.check(round_to(size, 3) == row.size, "m=%zu n=%zu c=%.4f: P(T > c) = %.5f (want %.3f)",
              row.m, row.n, row.c, size, row.size);
    }
  });

  criterion(8, "invariance under increasing maps", [](Report& r) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<std::size_t> size(2, 60);
    std::uniform_real_distribution<double> coef(0.2, 3.0);
    double worst = 0.0;
    std::size_t datasets = 0;
    for (int rep = 0; rep < 1000; ++rep) {
      std::vector<double> x(size(rng)), y(size(rng));
      for (auto& v : x) v = g(rng);
      for (auto& v : y) v = g(rng);
      const double t0 = statistic_T(pool_and_rank(Sample(x), Sample(y)));
      const double a = coef(rng), b = coef(rng);
      const std::function<double(double)> maps[] = {
          [&](double v) { return a * v + b; },
          [&](double v) { return v + a * v * v * v; },
          [&](double v) { return std::exp(a * v); },
          [&](double v) { return std::sinh(b * v) - 7.0; },
          [&](double v) { return 1.0 / (1.0 + std::exp(-a * v)); }};
      for (const auto& f : maps) {
        std::vector<double> fx(x), fy(y);
        for (auto& v : fx) v = f(v);
        for (auto& v : fy) v = f(v);
        worst = std::max(worst, std::abs(statistic_T(pool_and_rank(Sample(fx), Sample(fy))) - t0));
      }
      ++datasets;
    }
    r.check(worst <= 1e-14, "%zu datasets x 5 maps: max |T - T_0| = %.3g", datasets, worst);
  });

  criterion(9, "kernel eigensystem on a 2000-point grid", [](Report& r) {
    const auto check = verify_kernel_eigensystem(2000, 5);
    for (const auto& e : check.leading) {
      r.check(e.relative_error() <= 1e-3, "k=%zu: %.7f vs %.7f (rel err %.2e)", e.k, e.approx,
              e.reference, e.relative_error());
    }
    const double target = 2.0 / 45.0;
    const double rel = std::abs(check.squared_eigenvalue_sum - target) / target;
    r.check(rel <= 1e-3, "sum of squared eigenvalues %.7f vs 2/45 = %.7f (rel err %.2e)",
            check.squared_eigenvalue_sum, target, rel);
  });

  criterion(10, "desk-scale power of T (M = 2000, +- 0.03)", [](Report& r) {
    const std::string dir = RANK2S_CONFIG_DIR;
    struct Want {
      const char* config;
      const char* scenario;
      double delta, power;
    };
    const Want wants[] = {{"table2_desk.cfg", "normal_location", 0.0, 0.050},
                          {"table2_desk.cfg", "normal_location", 0.25, 0.217},
                          {"table2_desk.cfg", "normal_location", 0.5, 0.652},
                          {"table2_desk.cfg", "normal_location", 0.75, 0.936},
                          {"table2_desk.cfg", "normal_location", 1.0, 0.996},
                          {"table4_desk.cfg", "pareto_location", 0.5, 0.968},
                          {"table3_desk.cfg", "t3_location", 1.0, 0.971}};
    std::map<std::string, PowerStudyResult> results;
    for (const auto& w : wants) {
      if (!results.count(w.config)) {
        auto config = load_power_config(dir + "/" + w.config);
        config.threads = kThreads;
        results.emplace(w.config, run_power_study(config));
      }
      const auto& res = results.at(w.config);
      const auto& cell = res.at(w.scenario, "T", w.delta);
      r.check(res.iterations == 2000 && std::abs(cell.power - w.power) <= 0.03,
              "%s delta=%.2f: %.4f (se %.4f, want %.3f)", w.scenario, w.delta, cell.power,
              cell.se, w.power);
    }
  });

  criterion(11, "spatial-rank permutation test, d = 2, B = 499", [](Report& r) {
    PowerStudyConfig config;
    config.seed = 11;
    config.threads = kThreads;
    config.tests = {TestSpec{StatisticKind::TM, NullModel::parse("permutation:499"), "TM"}};
    Scenario sc;
    sc.name = "mv_normal";
    sc.x = dist::MvNormal{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
    sc.y = sc.x;
    sc.m = sc.n = 50;
    sc.delta_rule = DeltaRule{"mean", DeltaRule::Mode::add};

    sc.deltas = {0.0};
    config.scenarios = {sc};
    config.iterations = 500;
    const double size = run_power_study(config).cells.at(0).power;
    r.check(size > 0.03 && size < 0.07, "H0: rejection rate %.4f over 500 trials (want in (0.03, 0.07))",
            size);

    sc.deltas = {1.0};
    config.scenarios = {sc};
    config.iterations = 200;
    const double power = run_power_study(config).cells.at(0).power;
    r.check(power >= 0.98, "delta=1: power %.4f over 200 trials (want >= 0.98)", power);
  });

  criterion(12, "consistency of Dhat, n = 5000, 20 repetitions", [](Report& r) {
    const double d = population_D([](double x) { return std::clamp(x, 0.0, 1.0); },
                                  [](double x) { return std::clamp(x - 0.5, 0.0, 1.0); }, 0.5, 20000);
    r.check(std::abs(d - 1.0 / 6.0) < 1e-3, "population D = %.6f (analytic 1/6)", d);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_alt = 0.0, worst_null = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x(5000), y(5000), z(5000);
      for (auto& v : x) v = u(rng);
      for (auto& v : y) v = u(rng) + 0.5;
      for (auto& v : z) v = u(rng);
      worst_alt = std::max(worst_alt, std::abs(statistic_dhat(pool_and_rank(Sample(x), Sample(y))) - d));
      worst_null = std::max(worst_null, statistic_dhat(pool_and_rank(Sample(x), Sample(z))));
    }
    r.check(worst_alt < 0.01, "max |Dhat - D| = %.5f (want < 0.01)", worst_alt);
    r.check(worst_null < 0.01, "max Dhat under F = G = %.5f (want < 0.01)", worst_null);
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
