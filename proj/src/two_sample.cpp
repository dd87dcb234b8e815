#include "rank2s/two_sample.hpp"

#include <algorithm>

#include "rank2s/error.hpp"
#include "rank2s/multivariate.hpp"

namespace rank2s {

namespace {

constexpr std::size_t kAutoMonteCarloReps = 1'000'000;
constexpr std::size_t kAutoPermutations = 499;
constexpr std::size_t kMixtureSamples = 1'000'000;

bool is_t_family(StatisticKind s) {
  return s == StatisticKind::T || s == StatisticKind::CvM || s == StatisticKind::Dhat ||
         s == StatisticKind::Tprime;
}

std::size_t parse_count(const std::string& text, const std::string& whole) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw InvalidArgument("malformed null model '" + whole + "'");
  }
  return static_cast<std::size_t>(v);
}

[[noreturn]] void incompatible(StatisticKind s, const NullModel& null) {
  throw InvalidArgument("null model '" + null.to_string() + "' does not apply to " +
                        std::string(to_string(s)));
}

// Maps a T-family value onto the T scale for the asymptotic law.
double as_T(StatisticKind s, double value, std::size_t m, std::size_t n) {
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  switch (s) {
    case StatisticKind::Dhat:
      return value * md * nd / (md + nd);
    case StatisticKind::Tprime:
      return nd * value - (4.0 * nd * nd - 1.0) / (12.0 * nd);
    default:
      return value;
  }
}

}  // namespace

NullModel NullModel::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const std::string arg = has_arg ? text.substr(colon + 1) : std::string();
  NullModel out;
  if (head == "auto" && !has_arg) {
    out.kind = Kind::automatic;
  } else if (head == "exact" && !has_arg) {
    out.kind = Kind::exact;
  } else if (head == "normal" && !has_arg) {
    out.kind = Kind::normal;
  } else if (head == "kolmogorov" && !has_arg) {
    out.kind = Kind::kolmogorov;
  } else if (head == "mc") {
    out.kind = Kind::monte_carlo;
    out.parameter = has_arg ? parse_count(arg, text) : kAutoMonteCarloReps;
  } else if (head == "asymptotic") {
    out.kind = Kind::asymptotic;
    out.parameter = has_arg ? parse_count(arg, text) : 4;
  } else if (head == "permutation") {
    out.kind = Kind::permutation;
    out.parameter = has_arg ? parse_count(arg, text) : kAutoPermutations;
  } else {
    throw InvalidArgument("unknown null model '" + text + "'");
  }
  return out;
}

std::string NullModel::to_string() const {
  switch (kind) {
    case Kind::automatic:
      return "auto";
    case Kind::exact:
      return "exact";
    case Kind::monte_carlo:
      return "mc:" + std::to_string(parameter);
    case Kind::asymptotic:
      return "asymptotic:" + std::to_string(parameter);
    case Kind::permutation:
      return "permutation:" + std::to_string(parameter);
    case Kind::normal:
      return "normal";
    case Kind::kolmogorov:
      return "kolmogorov";
  }
  return "unknown";
}

NullModel resolve_null(StatisticKind statistic, NullModel requested, std::size_t m,
                       std::size_t n, std::uint64_t enumeration_cap) {
  if (requested.kind != NullModel::Kind::automatic) return requested;
  NullModel out;
  switch (statistic) {
    case StatisticKind::Wilcoxon:
    case StatisticKind::Mood:
      out.kind = NullModel::Kind::normal;
      return out;
    case StatisticKind::KS:
      out.kind = NullModel::Kind::kolmogorov;
      return out;
    case StatisticKind::Energy:
    case StatisticKind::TM:
      out.kind = NullModel::Kind::permutation;
      out.parameter = kAutoPermutations;
      return out;
    default:
      break;
  }
  bool small = false;
  try {
    small = binomial(m + n, m) <= enumeration_cap;
  } catch (const EnumerationTooLarge&) {
  }
  if (small) {
    out.kind = NullModel::Kind::exact;
  } else {
    out.kind = NullModel::Kind::monte_carlo;
    out.parameter = kAutoMonteCarloReps;
  }
  return out;
}

PreparedTest::PreparedTest(StatisticKind statistic, NullModel null, std::size_t m,
                           std::size_t n, std::uint64_t seed, unsigned threads,
                           std::uint64_t enumeration_cap)
    : statistic_(statistic),
      null_(resolve_null(statistic, null, m, n, enumeration_cap)),
      m_(m),
      n_(n),
      seed_(seed),
      threads_(threads) {
  using Kind = NullModel::Kind;
  switch (null_.kind) {
    case Kind::exact:
      if (!is_rank_statistic(statistic)) incompatible(statistic, null_);
      table_ = exact_null(m, n, statistic, enumeration_cap, threads);
      break;
    case Kind::monte_carlo:
      if (!is_rank_statistic(statistic)) incompatible(statistic, null_);
      table_ = mc_null(m, n, statistic, null_.parameter, seed, threads);
      break;
    case Kind::asymptotic:
      if (!is_t_family(statistic)) incompatible(statistic, null_);
      if (null_.parameter == 0) throw InvalidArgument("asymptotic null needs d >= 1");
      mixture_ = std::make_shared<const MixtureLaw>(null_.parameter, kMixtureSamples, seed,
                                                    threads);
      break;
    case Kind::normal:
      if (statistic != StatisticKind::Wilcoxon && statistic != StatisticKind::Mood) {
        incompatible(statistic, null_);
      }
      break;
    case Kind::kolmogorov:
      if (statistic != StatisticKind::KS) incompatible(statistic, null_);
      break;
    case Kind::permutation:
      if (null_.parameter < 99) {
        throw InvalidArgument("permutation null needs at least 99 replicates");
      }
      break;
    case Kind::automatic:
      break;
  }
}

TestOutcome PreparedTest::run(const PointSample& x, const PointSample& y,
                              std::uint64_t replicate_seed, TiePolicy ties) const {
  if (x.size() != m_ || y.size() != n_) {
    throw InvalidArgument("test prepared for sizes (" + std::to_string(m_) + ", " +
                          std::to_string(n_) + ") got (" + std::to_string(x.size()) +
                          ", " + std::to_string(y.size()) + ")");
  }
  if (null_.kind == NullModel::Kind::permutation) {
    PermutationOptions options;
    options.replicates = null_.parameter;
    options.seed = replicate_seed;
    options.threads = 1;
    return permutation_test(statistic_, x, y, options);
  }

  if (x.dim() != 1 || y.dim() != 1) {
    throw DimensionMismatch(std::string(to_string(statistic_)) +
                            " needs univariate observations");
  }
  const RankedPool pool = pool_and_rank(Sample({x.coords().begin(), x.coords().end()}),
                                        Sample({y.coords().begin(), y.coords().end()}), ties);
  const auto xs = pool.sorted_ranks(Group::X);
  const auto ys = pool.sorted_ranks(Group::Y);

  TestOutcome out;
  out.method = statistic_;
  out.m = m_;
  out.n = n_;
  out.null_model = null_.to_string();
  out.statistic_value = rank_statistic(statistic_, xs, ys);
  switch (null_.kind) {
    case NullModel::Kind::exact:
      out.p_value = pvalue_from_null(out.statistic_value, *table_);
      break;
    case NullModel::Kind::monte_carlo:
      out.p_value = pvalue_from_null(out.statistic_value, *table_);
      out.seed = seed_;
      break;
    case NullModel::Kind::asymptotic:
      out.p_value = mixture_->pvalue_T(as_T(statistic_, out.statistic_value, m_, n_), m_, n_);
      out.seed = seed_;
      break;
    case NullModel::Kind::normal: {
      const ZScored z = statistic_ == StatisticKind::Wilcoxon ? statistic_wilcoxon(pool)
                                                              : statistic_mood(pool);
      out.p_value = two_sided_normal_pvalue(z.z);
      break;
    }
    case NullModel::Kind::kolmogorov:
      out.p_value = ks_asymptotic_pvalue(out.statistic_value, m_, n_);
      break;
    default:
      break;
  }
  // Asymptotic tails can underflow to zero for extreme statistics.
  out.p_value = std::clamp(out.p_value, 1e-300, 1.0);
  return out;
}

}  // namespace rank2s
