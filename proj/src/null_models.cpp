#include "rank2s/null_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "rank2s/error.hpp"
#include "rank2s/multivariate.hpp"
#include "rank2s/parallel.hpp"
#include "rank2s/random.hpp"

namespace rank2s {

namespace {

constexpr std::uint64_t kEnumerationChunk = 1u << 16;
constexpr std::size_t kMonteCarloChunk = 4096;
constexpr int kCacheVersion = 1;

bool same_support(double a, double b) {
  return std::abs(a - b) <= kSupportTolerance * std::max(1.0, std::abs(a));
}

double tolerance_at(double x) { return kSupportTolerance * std::max(1.0, std::abs(x)); }

struct Histogram {
  std::vector<double> values;
  std::vector<std::uint64_t> counts;
};

// Collapses an unsorted list of values into distinct support points.
Histogram compress(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Histogram h;
  for (double v : values) {
    if (!h.values.empty() && same_support(h.values.back(), v)) {
      ++h.counts.back();
    } else {
      h.values.push_back(v);
      h.counts.push_back(1);
    }
  }
  return h;
}

// Merges histograms in the order given.
Histogram merge(const std::vector<Histogram>& parts) {
  std::vector<std::pair<double, std::uint64_t>> all;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.values.size(); ++i) all.emplace_back(p.values[i], p.counts[i]);
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  Histogram h;
  for (const auto& [v, c] : all) {
    if (!h.values.empty() && same_support(h.values.back(), v)) {
      h.counts.back() += c;
    } else {
      h.values.push_back(v);
      h.counts.push_back(c);
    }
  }
  return h;
}

NullDistribution finish(NullKind kind, StatisticKind statistic, std::size_t m,
                        std::size_t n, std::optional<std::uint64_t> seed, Histogram h) {
  NullDistribution d;
  d.kind = kind;
  d.statistic = statistic;
  d.m = m;
  d.n = n;
  d.seed = seed;
  d.values = std::move(h.values);
  d.counts = std::move(h.counts);
  const double total = static_cast<double>(d.total());
  d.weights.reserve(d.counts.size());
  for (auto c : d.counts) d.weights.push_back(static_cast<double>(c) / total);
  return d;
}

// Lexicographic rank -> combination of k elements from 0..total-1.
void unrank_combination(std::uint64_t rank, std::size_t total, std::size_t k,
                        std::vector<std::size_t>& out) {
  out.resize(k);
  std::size_t e = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (;;) {
      const std::uint64_t c = binomial(total - e - 1, k - i - 1);
      if (rank < c) break;
      rank -= c;
      ++e;
    }
    out[i] = e++;
  }
}

bool next_combination(std::vector<std::size_t>& c, std::size_t total) {
  const std::size_t k = c.size();
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (c[i] < total - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Splits ranks 1..N into sorted X and Y rank lists given membership flags.
void split_ranks(const std::vector<unsigned char>& in_x, std::vector<double>& xs,
                 std::vector<double>& ys) {
  xs.clear();
  ys.clear();
  for (std::size_t r = 0; r < in_x.size(); ++r) {
    (in_x[r] ? xs : ys).push_back(static_cast<double>(r + 1));
  }
}

void check_rank_statistic(StatisticKind statistic, std::size_t m, std::size_t n) {
  if (!is_rank_statistic(statistic)) {
    throw InvalidArgument(std::string(to_string(statistic)) +
                          " has no distribution-free null law; use a permutation test");
  }
  if (m == 0 || n == 0) throw EmptySample();
  if (statistic == StatisticKind::Tprime && m != n) {
    throw UnbalancedSamples("T' requires m == n");
  }
}

std::uint64_t count_ge(const NullDistribution& d, double x) {
  const double cut = x - tolerance_at(x);
  auto it = std::lower_bound(d.values.begin(), d.values.end(), cut);
  std::uint64_t c = 0;
  for (auto i = static_cast<std::size_t>(it - d.values.begin()); i < d.values.size(); ++i) {
    c += d.counts[i];
  }
  return c;
}

std::uint64_t count_gt(const NullDistribution& d, double x) {
  const double cut = x + tolerance_at(x);
  auto it = std::upper_bound(d.values.begin(), d.values.end(), cut);
  std::uint64_t c = 0;
  for (auto i = static_cast<std::size_t>(it - d.values.begin()); i < d.values.size(); ++i) {
    c += d.counts[i];
  }
  return c;
}

}  // namespace

std::string_view to_string(NullKind kind) {
  return kind == NullKind::exact ? "exact" : "monte_carlo";
}

std::uint64_t NullDistribution::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double NullDistribution::tail_ge(double x) const {
  return static_cast<double>(count_ge(*this, x)) / static_cast<double>(total());
}

double NullDistribution::tail_gt(double x) const {
  return static_cast<double>(count_gt(*this, x)) / static_cast<double>(total());
}

double NullDistribution::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * values[i];
  return s;
}

double NullDistribution::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s += weights[i] * (values[i] - mu) * (values[i] - mu);
  }
  return s;
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(result, static_cast<std::uint64_t>(i));
    const std::uint64_t r = result / g;
    const std::uint64_t den = i / g;
    if (r > std::numeric_limits<std::uint64_t>::max() / (num / den)) {
      throw EnumerationTooLarge("C(" + std::to_string(n) + ", " + std::to_string(k) +
                                ") overflows 64 bits");
    }
    result = r * (num / den);
  }
  return result;
}

NullDistribution exact_null(std::size_t m, std::size_t n, StatisticKind statistic,
                            std::uint64_t cap, unsigned threads) {
  check_rank_statistic(statistic, m, n);
  const std::size_t total = m + n;
  std::uint64_t combos = 0;
  try {
    combos = binomial(total, m);
  } catch (const EnumerationTooLarge&) {
    combos = std::numeric_limits<std::uint64_t>::max();
  }
  if (combos > cap) {
    throw EnumerationTooLarge("C(" + std::to_string(total) + ", " + std::to_string(m) +
                              ") assignments exceed the enumeration cap of " +
                              std::to_string(cap) +
                              "; use the Monte-Carlo or asymptotic null instead");
  }

  const std::size_t chunks = static_cast<std::size_t>((combos + kEnumerationChunk - 1) /
                                                      kEnumerationChunk);
  std::vector<Histogram> parts(chunks);
  parallel_for_chunks(chunks, threads, [&](std::size_t chunk) {
    const std::uint64_t begin = chunk * kEnumerationChunk;
    const std::uint64_t end = std::min(combos, begin + kEnumerationChunk);
    std::vector<std::size_t> comb;
    unrank_combination(begin, total, m, comb);
    std::vector<unsigned char> in_x(total);
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(end - begin));
    for (std::uint64_t r = begin; r < end; ++r) {
      std::fill(in_x.begin(), in_x.end(), 0);
      for (auto e : comb) in_x[e] = 1;
      split_ranks(in_x, xs, ys);
      values.push_back(rank_statistic(statistic, xs, ys));
      next_combination(comb, total);
    }
    parts[chunk] = compress(std::move(values));
  });
  return finish(NullKind::exact, statistic, m, n, std::nullopt, merge(parts));
}

NullDistribution mc_null(std::size_t m, std::size_t n, StatisticKind statistic,
                         std::size_t reps, std::uint64_t seed, unsigned threads) {
  check_rank_statistic(statistic, m, n);
  if (reps < 1000) throw InvalidArgument("Monte-Carlo null needs at least 1000 replicates");
  const std::size_t total = m + n;
  const std::size_t chunks = (reps + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<std::vector<double>> parts(chunks);
  parallel_for_chunks(chunks, threads, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kMonteCarloChunk;
    const std::size_t end = std::min(reps, begin + kMonteCarloChunk);
    Engine engine = make_stream(seed, chunk);
    std::vector<std::size_t> perm(total);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<unsigned char> in_x(total);
    std::vector<double> xs;
    std::vector<double> ys;
    auto& out = parts[chunk];
    out.reserve(end - begin);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(perm[i], perm[pick(engine)]);
      }
      std::fill(in_x.begin(), in_x.end(), 0);
      for (std::size_t i = 0; i < m; ++i) in_x[perm[i]] = 1;
      split_ranks(in_x, xs, ys);
      out.push_back(rank_statistic(statistic, xs, ys));
    }
  });
  std::vector<double> all;
  all.reserve(reps);
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return finish(NullKind::monte_carlo, statistic, m, n, seed, compress(std::move(all)));
}

double pvalue_from_null(double observed, const NullDistribution& null) {
  const auto total = static_cast<double>(null.total());
  const auto exceed = static_cast<double>(count_ge(null, observed));
  if (null.kind == NullKind::monte_carlo) return (1.0 + exceed) / (total + 1.0);
  return std::max(exceed, 1.0) / total;
}

double critical_value_from_null(double alpha, const NullDistribution& null) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const auto total = static_cast<double>(null.total());
  // Walk from the top: `above` is the mass strictly greater than values[i].
  std::uint64_t above = 0;
  std::size_t best = null.values.size() - 1;
  for (std::size_t i = null.values.size(); i-- > 0;) {
    if (static_cast<double>(above) / total > alpha) break;
    best = i;
    above += null.counts[i];
  }
  return null.values[best];
}

double attained_size(double critical_value, const NullDistribution& null) {
  return null.tail_gt(critical_value);
}

PermutationResult permutation_pvalue(const SplitStatistic& statistic, std::size_t m,
                                     std::size_t n, const PermutationOptions& options) {
  if (m == 0 || n == 0) throw EmptySample();
  const std::size_t total = m + n;
  std::vector<std::size_t> identity(total);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  PermutationResult result;
  result.observed = statistic(std::span(identity).first(m), std::span(identity).subspan(m));
  const double cut = result.observed - tolerance_at(result.observed);

  std::uint64_t combos = std::numeric_limits<std::uint64_t>::max();
  try {
    combos = binomial(total, m);
  } catch (const EnumerationTooLarge&) {
  }

  if (options.enumerate_if_feasible && combos <= options.replicates) {
    std::vector<std::size_t> comb(m);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    std::vector<unsigned char> in_x(total);
    std::vector<std::size_t> xi;
    std::vector<std::size_t> yi;
    std::uint64_t exceed = 0;
    do {
      std::fill(in_x.begin(), in_x.end(), 0);
      for (auto e : comb) in_x[e] = 1;
      xi.clear();
      yi.clear();
      for (std::size_t i = 0; i < total; ++i) (in_x[i] ? xi : yi).push_back(i);
      if (statistic(xi, yi) >= cut) ++exceed;
    } while (next_combination(comb, total));
    result.p_value = static_cast<double>(exceed) / static_cast<double>(combos);
    result.replicates = static_cast<std::size_t>(combos);
    result.enumerated = true;
    return result;
  }

  if (options.replicates < 99) {
    throw InvalidArgument("permutation test needs at least 99 replicates");
  }
  const std::size_t chunk_size = 64;
  const std::size_t chunks = (options.replicates + chunk_size - 1) / chunk_size;
  std::vector<std::uint64_t> exceed(chunks, 0);
  parallel_for_chunks(chunks, options.threads, [&](std::size_t chunk) {
    const std::size_t begin = chunk * chunk_size;
    const std::size_t end = std::min(options.replicates, begin + chunk_size);
    std::vector<std::size_t> perm(total);
    for (std::size_t b = begin; b < end; ++b) {
      Engine engine = make_stream(options.seed, b);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(perm[i], perm[pick(engine)]);
      }
      if (statistic(std::span(perm).first(m), std::span(perm).subspan(m)) >= cut) {
        ++exceed[chunk];
      }
    }
  });
  const auto hits = std::accumulate(exceed.begin(), exceed.end(), std::uint64_t{0});
  result.replicates = options.replicates;
  result.p_value = (1.0 + static_cast<double>(hits)) /
                   (static_cast<double>(options.replicates) + 1.0);
  return result;
}

namespace {

TestOutcome to_outcome(StatisticKind statistic, std::size_t m, std::size_t n,
                       const PermutationOptions& options, const PermutationResult& r) {
  TestOutcome out;
  out.statistic_value = r.observed;
  out.p_value = r.p_value;
  out.method = statistic;
  out.m = m;
  out.n = n;
  if (r.enumerated) {
    out.null_model = "permutation:enumerated(" + std::to_string(r.replicates) + ")";
  } else {
    out.null_model = "permutation:" + std::to_string(r.replicates);
    out.seed = options.seed;
  }
  return out;
}

}  // namespace

TestOutcome permutation_test(StatisticKind statistic, const PointSample& x,
                             const PointSample& y, const PermutationOptions& options) {
  const PointSample pooled = concatenate(x, y);
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  PermutationResult r;
  if (statistic == StatisticKind::Energy || statistic == StatisticKind::TM) {
    const DistanceEnergy form = statistic == StatisticKind::Energy
                                    ? DistanceEnergy::from_points(pooled)
                                    : spatial_rank_energy(pooled);
    r = permutation_pvalue(form, m, n, options);
  } else {
    if (pooled.dim() != 1) {
      throw DimensionMismatch(std::string(to_string(statistic)) +
                              " needs univariate observations");
    }
    const RankedPool ranked =
        pool_and_rank(Sample({x.coords().begin(), x.coords().end()}),
                      Sample({y.coords().begin(), y.coords().end()}));
    const auto& ranks = ranked.natural_ranks;
    r = permutation_pvalue(
        [&](std::span<const std::size_t> xi, std::span<const std::size_t> yi) {
          std::vector<double> xs;
          std::vector<double> ys;
          for (auto i : xi) xs.push_back(ranks[i]);
          for (auto i : yi) ys.push_back(ranks[i]);
          std::sort(xs.begin(), xs.end());
          std::sort(ys.begin(), ys.end());
          return rank_statistic(statistic, xs, ys);
        },
        m, n, options);
  }
  return to_outcome(statistic, m, n, options, r);
}

TestOutcome permutation_test(StatisticKind statistic, const Sample& x, const Sample& y,
                             const PermutationOptions& options) {
  return permutation_test(statistic, PointSample::from_scalars(x.values()),
                          PointSample::from_scalars(y.values()), options);
}

std::string null_cache_name(StatisticKind statistic, std::size_t m, std::size_t n,
                            NullKind kind, std::size_t reps, std::uint64_t seed) {
  std::string name = "null_" + std::string(to_string(statistic)) + "_m" +
                     std::to_string(m) + "_n" + std::to_string(n);
  if (kind == NullKind::exact) return name + "_exact.csv";
  return name + "_mc" + std::to_string(reps) + "_seed" + std::to_string(seed) + ".csv";
}

void save_null(const NullDistribution& null, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp);
    out.precision(17);
    out << "# rank2s null distribution\n";
    out << "format_version," << kCacheVersion << '\n';
    out << "kind," << to_string(null.kind) << '\n';
    out << "statistic," << to_string(null.statistic) << '\n';
    out << "m," << null.m << '\n';
    out << "n," << null.n << '\n';
    out << "seed,";
    if (null.seed) out << *null.seed;
    out << '\n';
    out << "reps," << null.total() << '\n';
    out << "value,weight,count\n";
    for (std::size_t i = 0; i < null.values.size(); ++i) {
      out << null.values[i] << ',' << null.weights[i] << ',' << null.counts[i] << '\n';
    }
    if (!out) throw Error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

NullDistribution load_null(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  auto header = [&](const std::string& key) {
    if (!std::getline(in, line)) fail("missing '" + key + "' header");
    ++line_no;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.substr(0, comma) != key) {
      fail("expected '" + key + "' header");
    }
    return line.substr(comma + 1);
  };
  if (!std::getline(in, line) || line.rfind("# rank2s null distribution", 0) != 0) {
    fail("not a rank2s null distribution file");
  }
  ++line_no;
  if (header("format_version") != std::to_string(kCacheVersion)) {
    fail("unsupported format version");
  }
  NullDistribution d;
  const auto kind = header("kind");
  if (kind == "exact") {
    d.kind = NullKind::exact;
  } else if (kind == "monte_carlo") {
    d.kind = NullKind::monte_carlo;
  } else {
    fail("unknown kind '" + kind + "'");
  }
  try {
    d.statistic = parse_statistic(header("statistic"));
    d.m = std::stoul(header("m"));
    d.n = std::stoul(header("n"));
    const auto seed = header("seed");
    if (!seed.empty()) d.seed = std::stoull(seed);
    const auto reps = std::stoull(header("reps"));
    header("value");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string v, w, c;
      if (!std::getline(row, v, ',') || !std::getline(row, w, ',') || !std::getline(row, c)) {
        fail("expected value,weight,count");
      }
      d.values.push_back(std::stod(v));
      d.weights.push_back(std::stod(w));
      d.counts.push_back(std::stoull(c));
    }
    if (d.total() != reps) fail("counts do not sum to the recorded total");
  } catch (const std::logic_error&) {
    fail("malformed number");
  }
  return d;
}

}  // namespace rank2s
