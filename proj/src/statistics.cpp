#include "rank2s/statistics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "rank2s/error.hpp"

namespace rank2s {

namespace {

constexpr std::array<std::pair<StatisticKind, std::string_view>, 9> kNames{{
    {StatisticKind::T, "T"},
    {StatisticKind::Tprime, "Tprime"},
    {StatisticKind::Dhat, "Dhat"},
    {StatisticKind::CvM, "CvM"},
    {StatisticKind::Energy, "Energy"},
    {StatisticKind::KS, "KS"},
    {StatisticKind::Wilcoxon, "Wilcoxon"},
    {StatisticKind::Mood, "Mood"},
    {StatisticKind::TM, "TM"},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char p, char q) {
           return std::tolower(static_cast<unsigned char>(p)) ==
                  std::tolower(static_cast<unsigned char>(q));
         });
}

// Ordered double sum of |a_i - a_j| over a sorted sequence.
double within_pair_sum(std::span<const double> sorted) {
  const double k = static_cast<double>(sorted.size());
  double s = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    s += sorted[i] * (2.0 * static_cast<double>(i) - k + 1.0);
  }
  return 2.0 * s;
}

// Sum of |x_i - y_j| over all cross pairs of two sorted sequences.
double between_pair_sum(std::span<const double> xs, std::span<const double> ys) {
  const double y_total = std::accumulate(ys.begin(), ys.end(), 0.0);
  const double n = static_cast<double>(ys.size());
  double below_sum = 0.0;
  std::size_t below = 0;
  double s = 0.0;
  for (double x : xs) {
    while (below < ys.size() && ys[below] <= x) below_sum += ys[below++];
    const double c = static_cast<double>(below);
    s += x * c - below_sum + (y_total - below_sum) - x * (n - c);
  }
  return s;
}

// Visits the distinct pooled values in ascending order, passing the value
// and the counts of X and Y observations <= it.
template <class Fn>
void walk_pooled(std::span<const double> xs, std::span<const double> ys, Fn&& fn) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < xs.size() || j < ys.size()) {
    double v;
    if (j == ys.size() || (i < xs.size() && xs[i] <= ys[j])) {
      v = xs[i];
    } else {
      v = ys[j];
    }
    std::size_t tied = 0;
    while (i < xs.size() && xs[i] == v) ++i, ++tied;
    while (j < ys.size() && ys[j] == v) ++j, ++tied;
    fn(v, i, j, tied);
  }
}

double t_from_sorted(std::span<const double> xs, std::span<const double> ys) {
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());
  const double big_n = m + n;
  const double between = between_pair_sum(xs, ys);
  const double wx = within_pair_sum(xs);
  const double wy = within_pair_sum(ys);
  // Natural-rank sums; one factor 1/N converts to standardized ranks.
  return (m * n / big_n) *
         (between / (m * n) - wx / (2.0 * m * m) - wy / (2.0 * n * n)) / big_n;
}

double cvm_from_sorted(std::span<const double> xs, std::span<const double> ys) {
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());
  const double big_n = m + n;
  double integral = 0.0;
  walk_pooled(xs, ys, [&](double, std::size_t cx, std::size_t cy, std::size_t tied) {
    const double diff = static_cast<double>(cx) / m - static_cast<double>(cy) / n;
    integral += static_cast<double>(tied) / big_n * diff * diff;
  });
  return m * n / big_n * integral;
}

double ks_from_sorted(std::span<const double> xs, std::span<const double> ys) {
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());
  double best = 0.0;
  walk_pooled(xs, ys, [&](double, std::size_t cx, std::size_t cy, std::size_t) {
    best = std::max(best, std::abs(static_cast<double>(cx) / m -
                                   static_cast<double>(cy) / n));
  });
  return best;
}

double mood_from_sorted(std::span<const double> xs, std::size_t total) {
  const double centre = 0.5 * (static_cast<double>(total) + 1.0);
  double s = 0.0;
  for (double r : xs) s += (r - centre) * (r - centre);
  return s;
}

struct SortedSplit {
  std::vector<double> xs;
  std::vector<double> ys;
};

SortedSplit split(const RankedPool& pool) {
  return {pool.sorted_ranks(Group::X), pool.sorted_ranks(Group::Y)};
}

}  // namespace

std::string_view to_string(StatisticKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

StatisticKind parse_statistic(std::string_view name) {
  for (const auto& [k, canonical] : kNames) {
    if (iequals(name, canonical)) return k;
  }
  if (iequals(name, "T'") || iequals(name, "T_prime")) return StatisticKind::Tprime;
  if (iequals(name, "T_M")) return StatisticKind::TM;
  throw InvalidArgument("unknown statistic '" + std::string(name) + "'");
}

bool is_rank_statistic(StatisticKind kind) {
  return kind != StatisticKind::Energy && kind != StatisticKind::TM;
}

double rank_statistic(StatisticKind kind, std::span<const double> xs,
                      std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw EmptySample();
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());
  const double big_n = m + n;
  switch (kind) {
    case StatisticKind::T:
      return t_from_sorted(xs, ys);
    case StatisticKind::Tprime:
      if (xs.size() != ys.size()) {
        throw UnbalancedSamples("T' requires m == n");
      }
      return between_pair_sum(xs, ys) / (m * n * big_n);
    case StatisticKind::Dhat:
      return big_n / (m * n) * t_from_sorted(xs, ys);
    case StatisticKind::CvM:
      return cvm_from_sorted(xs, ys);
    case StatisticKind::KS:
      return ks_from_sorted(xs, ys);
    case StatisticKind::Wilcoxon:
      return std::accumulate(xs.begin(), xs.end(), 0.0);
    case StatisticKind::Mood:
      return mood_from_sorted(xs, xs.size() + ys.size());
    case StatisticKind::Energy:
    case StatisticKind::TM:
      break;
  }
  throw InvalidArgument(std::string(to_string(kind)) + " is not a rank statistic");
}

double statistic_T(const RankedPool& pool) {
  const auto s = split(pool);
  return t_from_sorted(s.xs, s.ys);
}

double statistic_T_pairwise(const RankedPool& pool) {
  const auto& r = pool.standardized_ranks;
  const auto& g = pool.labels;
  const std::size_t total = pool.total();
  double between = 0.0;
  double within_x = 0.0;
  double within_y = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < total; ++j) {
      const double d = std::abs(r[i] - r[j]);
      if (g[i] == Group::X && g[j] == Group::Y) {
        between += d;
      } else if (g[i] == Group::X && g[j] == Group::X) {
        within_x += d;
      } else if (g[i] == Group::Y && g[j] == Group::Y) {
        within_y += d;
      }
    }
  }
  const double m = static_cast<double>(pool.m);
  const double n = static_cast<double>(pool.n);
  return (m * n / (m + n)) *
         (between / (m * n) - within_x / (2.0 * m * m) - within_y / (2.0 * n * n));
}

double statistic_Tprime(const RankedPool& pool) {
  const auto s = split(pool);
  return rank_statistic(StatisticKind::Tprime, s.xs, s.ys);
}

double statistic_dhat(const RankedPool& pool) {
  const auto s = split(pool);
  return rank_statistic(StatisticKind::Dhat, s.xs, s.ys);
}

double statistic_cvm(const RankedPool& pool) {
  const auto s = split(pool);
  return cvm_from_sorted(s.xs, s.ys);
}

double statistic_ks(const RankedPool& pool) {
  const auto s = split(pool);
  return ks_from_sorted(s.xs, s.ys);
}

ZScored statistic_wilcoxon(const RankedPool& pool) {
  const auto s = split(pool);
  const double m = static_cast<double>(pool.m);
  const double n = static_cast<double>(pool.n);
  const double big_n = m + n;
  const double w = std::accumulate(s.xs.begin(), s.xs.end(), 0.0);
  const double mean = m * (big_n + 1.0) / 2.0;
  const double var = m * n * (big_n + 1.0) / 12.0;
  return {w, (w - mean) / std::sqrt(var)};
}

ZScored statistic_mood(const RankedPool& pool) {
  const auto s = split(pool);
  const double m = static_cast<double>(pool.m);
  const double n = static_cast<double>(pool.n);
  const double big_n = m + n;
  const double value = mood_from_sorted(s.xs, pool.total());
  const double mean = m * (big_n * big_n - 1.0) / 12.0;
  const double var = m * n * (big_n + 1.0) * (big_n * big_n - 4.0) / 180.0;
  return {value, var > 0.0 ? (value - mean) / std::sqrt(var) : 0.0};
}

DistanceEnergy::DistanceEnergy(std::size_t total, std::vector<double> distances)
    : total_(total), distances_(std::move(distances)) {
  if (distances_.size() != total_ * total_) {
    throw DimensionMismatch("distance matrix must be N x N");
  }
  all_pairs_sum_ = std::accumulate(distances_.begin(), distances_.end(), 0.0);
}

DistanceEnergy DistanceEnergy::from_points(const PointSample& pooled) {
  const std::size_t total = pooled.size();
  std::vector<double> d(total * total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = i + 1; j < total; ++j) {
      d[i * total + j] = d[j * total + i] =
          euclidean_distance(pooled.point(i), pooled.point(j));
    }
  }
  return DistanceEnergy(total, std::move(d));
}

double DistanceEnergy::within_sum(std::span<const std::size_t> index) const {
  double s = 0.0;
  for (std::size_t a = 0; a < index.size(); ++a) {
    const double* row = distances_.data() + index[a] * total_;
    for (std::size_t b = a + 1; b < index.size(); ++b) s += row[index[b]];
  }
  return 2.0 * s;
}

double DistanceEnergy::operator()(std::span<const std::size_t> x_index,
                                  std::span<const std::size_t> y_index) const {
  const double m = static_cast<double>(x_index.size());
  const double n = static_cast<double>(y_index.size());
  const double sxx = within_sum(x_index);
  const double syy = within_sum(y_index);
  double sxy;
  if (x_index.size() + y_index.size() == total_) {
    sxy = 0.5 * (all_pairs_sum_ - sxx - syy);
  } else {
    sxy = 0.0;
    for (auto i : x_index) {
      for (auto j : y_index) sxy += distance(i, j);
    }
  }
  return (m * n / (m + n)) * (sxy / (m * n) - sxx / (2.0 * m * m) - syy / (2.0 * n * n));
}

double statistic_energy(const PointSample& x, const PointSample& y) {
  if (x.dim() != y.dim()) {
    throw DimensionMismatch("energy statistic needs equal dimensions");
  }
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  auto pair_sum = [](const PointSample& a, const PointSample& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        s += euclidean_distance(a.point(i), b.point(j));
      }
    }
    return s;
  };
  return (m * n / (m + n)) * (pair_sum(x, y) / (m * n) -
                              pair_sum(x, x) / (2.0 * m * m) -
                              pair_sum(y, y) / (2.0 * n * n));
}

double statistic_energy(const Sample& x, const Sample& y) {
  return statistic_energy(PointSample::from_scalars(x.values()),
                          PointSample::from_scalars(y.values()));
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double two_sided_normal_pvalue(double z) {
  return std::min(1.0, 2.0 * normal_sf(std::abs(z)));
}

double ks_asymptotic_pvalue(double d, std::size_t m, std::size_t n) {
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double lambda = std::sqrt(md * nd / (md + nd)) * d;
  if (lambda < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

namespace {

constexpr double kTailMass = 1e-8;

// Smallest x in [lo, hi] with cdf(x) >= u, by bisection.
double bisect_quantile(const Cdf& cdf, double u, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= u) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double checked(const Cdf& cdf, double x) {
  const double v = cdf(x);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw NonMonotoneCdf("cdf value " + std::to_string(v) + " outside [0, 1]");
  }
  return v;
}

// Expands [lo, hi] until both cdfs carry less than kTailMass outside it.
std::pair<double, double> bracket(const Cdf& f, const Cdf& g) {
  double lo = -1.0;
  double hi = 1.0;
  for (int it = 0; it < 1100; ++it) {
    const bool lo_ok = checked(f, lo) <= kTailMass && checked(g, lo) <= kTailMass;
    const bool hi_ok =
        checked(f, hi) >= 1.0 - kTailMass && checked(g, hi) >= 1.0 - kTailMass;
    if (lo_ok && hi_ok) return {lo, hi};
    if (!lo_ok) lo *= 2.0;
    if (!hi_ok) hi *= 2.0;
    if (!std::isfinite(lo) || !std::isfinite(hi)) break;
  }
  throw NonMonotoneCdf("cdf does not approach 0 and 1 on the real line");
}

}  // namespace

double population_D(const Cdf& f_cdf, const Cdf& g_cdf, double tau,
                    std::size_t grid_size) {
  if (grid_size < 100) throw InvalidArgument("population_D needs grid_size >= 100");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("tau must lie in [0, 1]");

  auto [lo, hi] = bracket(f_cdf, g_cdf);
  const double f_lo = bisect_quantile(f_cdf, kTailMass, lo, hi);
  const double g_lo = bisect_quantile(g_cdf, kTailMass, lo, hi);
  const double f_hi = bisect_quantile(f_cdf, 1.0 - kTailMass, lo, hi);
  const double g_hi = bisect_quantile(g_cdf, 1.0 - kTailMass, lo, hi);
  lo = std::min(f_lo, g_lo);
  hi = std::max(f_hi, g_hi);

  const Cdf mixture = [&](double x) {
    return tau * f_cdf(x) + (1.0 - tau) * g_cdf(x);
  };

  // Coarse scan of the working interval for monotonicity violations.
  constexpr int kScan = 1000;
  double prev_f = checked(f_cdf, lo);
  double prev_g = checked(g_cdf, lo);
  for (int k = 1; k <= kScan; ++k) {
    const double x = lo + (hi - lo) * k / kScan;
    const double fv = checked(f_cdf, x);
    const double gv = checked(g_cdf, x);
    if (fv < prev_f - 1e-12 || gv < prev_g - 1e-12) {
      throw NonMonotoneCdf("cdf decreases near x = " + std::to_string(x));
    }
    prev_f = fv;
    prev_g = gv;
  }

  const double h_lo = mixture(lo);
  const double h_hi = mixture(hi);
  const double width = (h_hi - h_lo) / static_cast<double>(grid_size);
  double sum = 0.0;
  prev_f = 0.0;
  prev_g = 0.0;
  double x_lo = lo;
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double u = h_lo + (static_cast<double>(k) + 0.5) * width;
    // Quantiles increase with u, so each search starts at the previous one.
    const double x = bisect_quantile(mixture, u, x_lo, hi);
    x_lo = std::max(lo, x - (hi - lo) * 1e-12);
    const double fv = checked(f_cdf, x);
    const double gv = checked(g_cdf, x);
    if (fv < prev_f - 1e-12 || gv < prev_g - 1e-12) {
      throw NonMonotoneCdf("cdf decreases near x = " + std::to_string(x));
    }
    prev_f = fv;
    prev_g = gv;
    sum += (fv - gv) * (fv - gv);
  }
  return sum * width;
}

}  // namespace rank2s
