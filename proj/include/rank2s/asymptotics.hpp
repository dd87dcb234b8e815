#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

namespace rank2s {

/// Null mean and variance of T for sample sizes m and n.
struct TMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;

  double sd() const;
};

/// Closed forms E T = (N+1)/(6N) and
/// Var T = (N+1)/(180 N^2) [4(N+1) - 3N^2/(mn)].
TMoments moments_T(std::size_t m, std::size_t n);

/// lambda_k = -2/(pi^2 k^2), k = 1..d: the nonzero eigenvalues of the
/// degenerate kernel operator.
std::vector<double> mixture_eigenvalues(std::size_t d);

/// Var(Z_d) / Var(Z_inf) = (90/pi^4) sum_{k<=d} k^-4.
double mixture_variance_ratio(std::size_t d);

/// Draws `count` variates of Z_d = (sqrt(45)/pi^2) sum_{k<=d} k^-2 (chi2_1k - 1)
/// with chi-square variates as squared standard normals. Samples are produced
/// in fixed-size chunks, each from its own stream of `seed`, so the output
/// does not depend on `threads`.
std::vector<double> sample_Zd(std::size_t d, std::size_t count, std::uint64_t seed,
                              unsigned threads = 1);

/// Monte-Carlo (1 - alpha) quantile of Z_d (linear interpolation between
/// order statistics). Requires count >= 1e5.
double quantile_Zd(std::size_t d, double alpha, std::size_t count, std::uint64_t seed,
                   unsigned threads = 1);

/// Truncated mixture law with lazily computed, cached upper quantiles.
struct MixtureSpec {
  std::size_t d = 4;
  std::vector<double> eigenvalues;
  double scale = 0.0;  // sqrt(45)/2
  std::size_t sample_count = 10'000'000;
  std::uint64_t seed = 1;
  std::map<double, double> quantile_cache;  // alpha -> quantile

  static MixtureSpec make(std::size_t d, std::size_t sample_count = 10'000'000,
                          std::uint64_t seed = 1);

  /// Returns the cached (1 - alpha) quantile, computing it on first use.
  double quantile(double alpha, unsigned threads = 1);
};

/// E T + sd(T) * q_alpha(Z_d): the asymptotic critical value of T.
double critical_value_asymptotic(double alpha, std::size_t m, std::size_t n,
                                 MixtureSpec& spec, unsigned threads = 1);

/// Sorted Monte-Carlo sample of Z_d used for asymptotic p-values of T.
class MixtureLaw {
 public:
  MixtureLaw(std::size_t d, std::size_t count, std::uint64_t seed, unsigned threads = 1);

  std::size_t d() const noexcept { return d_; }
  /// P(Z_d >= z) estimated from the sample as (1 + #{Z >= z}) / (count + 1).
  double tail(double z) const;
  /// Asymptotic p-value of an observed T for sizes m, n.
  double pvalue_T(double t, std::size_t m, std::size_t n) const;

 private:
  std::size_t d_;
  std::vector<double> sorted_;
};

/// h(u, v) = |u - v| + u(1 - u) + v(1 - v) - 2/3 on the probability scale.
double kernel_h(double u, double v);

struct EigenComparison {
  std::size_t k = 0;
  double approx = 0.0;
  double reference = 0.0;

  double relative_error() const;
};

struct KernelEigenCheck {
  std::vector<EigenComparison> leading;
  double squared_eigenvalue_sum = 0.0;  // sum over all discrete eigenvalues
  double frobenius_squared = 0.0;       // same quantity from the matrix entries
};

/// Discretizes the integral operator with kernel h at the midpoints of a
/// uniform grid on (0, 1) (weights 1/grid_size), solves the dense symmetric
/// eigenproblem and pairs the k_max most negative eigenvalues with
/// -2/(pi^2 k^2). Requires grid_size >= 500 and 1 <= k_max <= 10.
KernelEigenCheck verify_kernel_eigensystem(std::size_t grid_size, std::size_t k_max);

/// One persisted Z_d quantile.
struct QuantileRecord {
  std::size_t d = 0;
  double alpha = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  double quantile = 0.0;
};

/// Versioned CSV table of quantiles.
std::vector<QuantileRecord> load_quantile_table(const std::filesystem::path& path);
void save_quantile_table(const std::vector<QuantileRecord>& rows,
                         const std::filesystem::path& path);

/// Looks up (d, alpha, sample_count, seed) in the table at `path`, computing
/// and appending it on a miss. `hit` reports which happened.
double cached_quantile_Zd(const std::filesystem::path& path, std::size_t d, double alpha,
                          std::size_t sample_count, std::uint64_t seed, bool* hit = nullptr,
                          unsigned threads = 1);

}  // namespace rank2s
