#include "rank2s/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "rank2s/error.hpp"
#include "rank2s/parallel.hpp"
#include "rank2s/random.hpp"

namespace rank2s {

namespace {

constexpr std::size_t kSampleChunk = 1u << 16;
constexpr int kQuantileTableVersion = 1;

double upper_quantile(std::vector<double>& values, double alpha) {
  const double h = (static_cast<double>(values.size()) - 1.0) * (1.0 - alpha);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(values.begin(), nth, values.end());
  const double a = *nth;
  if (lo + 1 >= values.size()) return a;
  const double b = *std::min_element(nth + 1, values.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

}  // namespace

double TMoments::sd() const { return std::sqrt(variance); }

TMoments moments_T(std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw InvalidArgument("moments_T needs m, n >= 1");
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double big_n = md + nd;
  TMoments out;
  out.m = m;
  out.n = n;
  out.mean = (big_n + 1.0) / (6.0 * big_n);
  out.variance = (big_n + 1.0) / (180.0 * big_n * big_n) *
                 (4.0 * (big_n + 1.0) - 3.0 * big_n * big_n / (md * nd));
  return out;
}

std::vector<double> mixture_eigenvalues(std::size_t d) {
  std::vector<double> out(d);
  for (std::size_t k = 1; k <= d; ++k) {
    const double kd = static_cast<double>(k);
    out[k - 1] = -2.0 / (std::numbers::pi * std::numbers::pi * kd * kd);
  }
  return out;
}

double mixture_variance_ratio(std::size_t d) {
  if (d == 0) throw InvalidArgument("truncation order must be at least 1");
  double s = 0.0;
  // Smallest terms first.
  for (std::size_t k = d; k >= 1; --k) {
    const double k2 = static_cast<double>(k) * static_cast<double>(k);
    s += 1.0 / (k2 * k2);
  }
  const double pi4 = std::pow(std::numbers::pi, 4);
  return 90.0 / pi4 * s;
}

std::vector<double> sample_Zd(std::size_t d, std::size_t count, std::uint64_t seed,
                              unsigned threads) {
  if (d == 0) throw InvalidArgument("truncation order must be at least 1");
  std::vector<double> weights(d);
  const double scale = std::sqrt(45.0) / (std::numbers::pi * std::numbers::pi);
  for (std::size_t k = 1; k <= d; ++k) {
    weights[k - 1] = scale / (static_cast<double>(k) * static_cast<double>(k));
  }
  std::vector<double> out(count);
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  parallel_for_chunks(chunks, threads, [&](std::size_t chunk) {
    Engine engine = make_stream(seed, chunk, d);
    std::normal_distribution<double> normal;
    const std::size_t end = std::min(count, (chunk + 1) * kSampleChunk);
    for (std::size_t i = chunk * kSampleChunk; i < end; ++i) {
      double z = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double g = normal(engine);
        z += weights[k] * (g * g - 1.0);
      }
      out[i] = z;
    }
  });
  return out;
}

double quantile_Zd(std::size_t d, double alpha, std::size_t count, std::uint64_t seed,
                   unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (count < 100'000) throw InvalidArgument("quantile_Zd needs at least 1e5 samples");
  auto samples = sample_Zd(d, count, seed, threads);
  return upper_quantile(samples, alpha);
}

MixtureSpec MixtureSpec::make(std::size_t d, std::size_t sample_count, std::uint64_t seed) {
  if (d == 0) throw InvalidArgument("truncation order must be at least 1");
  MixtureSpec spec;
  spec.d = d;
  spec.eigenvalues = mixture_eigenvalues(d);
  spec.scale = std::sqrt(45.0) / 2.0;
  spec.sample_count = sample_count;
  spec.seed = seed;
  return spec;
}

double MixtureSpec::quantile(double alpha, unsigned threads) {
  if (auto it = quantile_cache.find(alpha); it != quantile_cache.end()) return it->second;
  const double q = quantile_Zd(d, alpha, sample_count, seed, threads);
  quantile_cache.emplace(alpha, q);
  return q;
}

double critical_value_asymptotic(double alpha, std::size_t m, std::size_t n,
                                 MixtureSpec& spec, unsigned threads) {
  const TMoments mom = moments_T(m, n);
  return mom.mean + mom.sd() * spec.quantile(alpha, threads);
}

MixtureLaw::MixtureLaw(std::size_t d, std::size_t count, std::uint64_t seed,
                       unsigned threads)
    : d_(d), sorted_(sample_Zd(d, count, seed, threads)) {
  if (count == 0) throw InvalidArgument("mixture law needs samples");
  std::sort(sorted_.begin(), sorted_.end());
}

double MixtureLaw::tail(double z) const {
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), z);
  // Add-one estimate keeps the tail strictly positive.
  return (1.0 + static_cast<double>(sorted_.end() - it)) /
         (1.0 + static_cast<double>(sorted_.size()));
}

double MixtureLaw::pvalue_T(double t, std::size_t m, std::size_t n) const {
  const TMoments mom = moments_T(m, n);
  return tail((t - mom.mean) / mom.sd());
}

double kernel_h(double u, double v) {
  return std::abs(u - v) + u * (1.0 - u) + v * (1.0 - v) - 2.0 / 3.0;
}

double EigenComparison::relative_error() const {
  return std::abs(approx - reference) / std::abs(reference);
}

KernelEigenCheck verify_kernel_eigensystem(std::size_t grid_size, std::size_t k_max) {
  if (grid_size < 500) throw InvalidArgument("kernel discretization needs grid_size >= 500");
  if (k_max < 1 || k_max > 10) throw InvalidArgument("k_max must lie in 1..10");
  const auto g = static_cast<Eigen::Index>(grid_size);
  const double w = 1.0 / static_cast<double>(grid_size);
  Eigen::MatrixXd op(g, g);
  KernelEigenCheck out;
  for (Eigen::Index i = 0; i < g; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * w;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = (static_cast<double>(j) + 0.5) * w;
      const double a = kernel_h(u, v) * w;
      op(i, j) = a;
      op(j, i) = a;
      out.frobenius_squared += (i == j ? 1.0 : 2.0) * a * a;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("kernel eigensolve did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
  out.squared_eigenvalue_sum = ev.squaredNorm();
  const auto reference = mixture_eigenvalues(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    out.leading.push_back({k, ev(static_cast<Eigen::Index>(k - 1)), reference[k - 1]});
  }
  return out;
}

std::vector<QuantileRecord> load_quantile_table(const std::filesystem::path& path) {
  std::vector<QuantileRecord> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) return rows;
  ++line_no;
  if (line != "# rank2s Z_d quantiles v" + std::to_string(kQuantileTableVersion)) {
    fail("unsupported quantile table header");
  }
  ++line_no;
  if (!std::getline(in, line) || line != "d,alpha,sample_count,seed,quantile") {
    fail("missing column header");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(row, f[i], i < 4 ? ',' : '\n')) fail("expected 5 fields");
    }
    try {
      rows.push_back({std::stoul(f[0]), std::stod(f[1]), std::stoul(f[2]), std::stoull(f[3]),
                      std::stod(f[4])});
    } catch (const std::logic_error&) {
      fail("malformed number");
    }
  }
  return rows;
}

void save_quantile_table(const std::vector<QuantileRecord>& rows,
                         const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp);
    out.precision(17);
    out << "# rank2s Z_d quantiles v" << kQuantileTableVersion << '\n';
    out << "d,alpha,sample_count,seed,quantile\n";
    for (const auto& r : rows) {
      out << r.d << ',' << r.alpha << ',' << r.sample_count << ',' << r.seed << ','
          << r.quantile << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

double cached_quantile_Zd(const std::filesystem::path& path, std::size_t d, double alpha,
                          std::size_t sample_count, std::uint64_t seed, bool* hit,
                          unsigned threads) {
  auto rows = load_quantile_table(path);
  for (const auto& r : rows) {
    if (r.d == d && r.alpha == alpha && r.sample_count == sample_count && r.seed == seed) {
      if (hit) *hit = true;
      return r.quantile;
    }
  }
  const double q = quantile_Zd(d, alpha, sample_count, seed, threads);
  rows.push_back({d, alpha, sample_count, seed, q});
  save_quantile_table(rows, path);
  if (hit) *hit = false;
  return q;
}

}  // namespace rank2s
