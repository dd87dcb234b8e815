#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "rank2s/asymptotics.hpp"
#include "rank2s/error.hpp"
#include "rank2s/multivariate.hpp"
#include "rank2s/null_models.hpp"
#include "rank2s/parallel.hpp"
#include "rank2s/power_study.hpp"
#include "rank2s/two_sample.hpp"

namespace rank2s::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

// Strict full-token parse; whitespace around the token is allowed.
bool parse_double(std::string_view token, double& out) {
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) {
    token.remove_prefix(1);
  }
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) {
    token.remove_suffix(1);
  }
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return in;
}

// Headerless, one number per line; blank and '#' lines are skipped.
Sample read_column(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<double> values;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (skippable(line)) continue;
    double v = 0.0;
    if (!parse_double(line, v)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected one number, got '" +
                       line + "'");
    }
    if (!std::isfinite(v)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": value is not finite");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ParseError(path + ": no observations");
  return Sample(std::move(values));
}

// Comma separated rows with a constant number of numeric columns.
PointSample read_points(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<double> coords;
  std::size_t dim = 0;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (skippable(line)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    std::size_t fields = 0;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw ParseError(where + ": field " + std::to_string(fields + 1) +
                         " is not a finite number");
      }
      coords.push_back(v);
      ++fields;
    }
    if (dim == 0) dim = fields;
    if (fields != dim) {
      throw ParseError(where + ": expected " + std::to_string(dim) + " columns, got " +
                       std::to_string(fields));
    }
  }
  if (coords.empty()) throw ParseError(path + ": no observations");
  return PointSample(dim, std::move(coords));
}

fs::path cache_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RANK2S_CACHE"); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "rank2s";
  if (const char* home = std::getenv("HOME"); home && *home) {
    return fs::path(home) / ".cache" / "rank2s";
  }
  return fs::temp_directory_path() / "rank2s";
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create cache directory " + dir.string() + ": " + ec.message());
  return dir;
}

void emit(const Json& doc, const std::string& output, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(output);
  if (!file) throw InvalidArgument("cannot write " + output);
  file << text;
}

Json outcome_json(const std::string& command, const TestOutcome& o, double alpha) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = command;
  doc["statistic_value"] = o.statistic_value;
  doc["p_value"] = o.p_value;
  doc["method"] = std::string(to_string(o.method));
  doc["null_model"] = o.null_model;
  doc["m"] = o.m;
  doc["n"] = o.n;
  doc["seed"] = o.seed ? Json(*o.seed) : Json(nullptr);
  doc["alpha"] = alpha;
  doc["decision"] = o.p_value <= alpha ? "reject" : "retain";
  return doc;
}

struct Common {
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = default_threads();
  std::string output;
  std::string cache;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--alpha", c.alpha, "significance level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("-o,--output", c.output, "write the result here instead of stdout");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
}

// Loads a cached null law or builds and stores it.
NullDistribution cached_null(const fs::path& dir, StatisticKind stat, std::size_t m,
                             std::size_t n, NullKind kind, std::size_t reps, std::uint64_t seed,
                             unsigned threads, bool& hit, fs::path& file) {
  file = ensure_dir(dir) / null_cache_name(stat, m, n, kind, reps, seed);
  if (fs::exists(file)) {
    hit = true;
    return load_null(file);
  }
  hit = false;
  NullDistribution null = kind == NullKind::exact ? exact_null(m, n, stat, kDefaultEnumerationCap, threads)
                                                  : mc_null(m, n, stat, reps, seed, threads);
  save_null(null, file);
  return null;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank-based two-sample tests", "rank2s"};
  app.require_subcommand(1);

  // test
  Common test_opts;
  std::string x_file, y_file, stat_name = "T", null_text = "auto";
  bool midrank = false;
  auto* test = app.add_subcommand("test", "two-sample test on univariate data");
  test->add_option("x", x_file, "file with the X sample")->required();
  test->add_option("y", y_file, "file with the Y sample")->required();
  test->add_option("-s,--statistic", stat_name,
                   "T, Tprime, Dhat, CvM, Energy, KS, Wilcoxon or Mood")
      ->capture_default_str();
  test->add_option("--null", null_text, "auto, exact, mc:REPS, asymptotic:D or permutation:B")
      ->capture_default_str();
  test->add_flag("--midrank", midrank, "rank tied values by their mean position");
  add_common(test, test_opts);

  // mtest
  Common mtest_opts;
  std::string mx_file, my_file;
  std::size_t replicates = 499;
  auto* mtest = app.add_subcommand("mtest", "spatial-rank permutation test on CSV data");
  mtest->add_option("x", mx_file, "CSV with the X sample")->required();
  mtest->add_option("y", my_file, "CSV with the Y sample")->required();
  mtest->add_option("-B,--replicates", replicates, "permutation replicates")
      ->capture_default_str();
  add_common(mtest, mtest_opts);

  // null
  Common null_opts;
  std::string null_stat = "T", null_model = "exact";
  std::size_t null_m = 0, null_n = 0;
  auto* null = app.add_subcommand("null", "build and cache a null distribution");
  null->add_option("-m", null_m, "size of X")->required()->check(CLI::PositiveNumber);
  null->add_option("-n", null_n, "size of Y")->required()->check(CLI::PositiveNumber);
  null->add_option("-s,--statistic", null_stat, "rank statistic")->capture_default_str();
  null->add_option("--null", null_model, "exact or mc:REPS")->capture_default_str();
  null->add_option("--cache-dir", null_opts.cache, "cache directory");
  add_common(null, null_opts);

  // critval
  Common crit_opts;
  std::string method = "exact", crit_stat = "T";
  std::size_t crit_m = 0, crit_n = 0, d = 4, reps = 1'000'000, samples = 10'000'000;
  auto* critval = app.add_subcommand("critval", "critical value of a rank statistic");
  critval->add_option("-m", crit_m, "size of X")->required()->check(CLI::PositiveNumber);
  critval->add_option("-n", crit_n, "size of Y")->required()->check(CLI::PositiveNumber);
  critval->add_option("--method", method, "exact, mc or asymptotic")
      ->check(CLI::IsMember({"exact", "mc", "asymptotic"}))
      ->capture_default_str();
  critval->add_option("-s,--statistic", crit_stat, "rank statistic (asymptotic needs T)")
      ->capture_default_str();
  critval->add_option("-d", d, "mixture truncation order")->capture_default_str();
  critval->add_option("--reps", reps, "Monte-Carlo null replicates")->capture_default_str();
  critval->add_option("--samples", samples, "mixture samples for the quantile")
      ->capture_default_str();
  critval->add_option("--cache-dir", crit_opts.cache, "cache directory");
  add_common(critval, crit_opts);

  // power
  std::string config_file, power_output;
  unsigned power_threads = 0;
  auto* power = app.add_subcommand("power", "run a power study from a YAML config");
  power->add_option("config", config_file, "config file")->required();
  power->add_option("-o,--output", power_output, "CSV destination (default stdout)");
  power->add_option("--threads", power_threads, "override the config thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kOk : kInputError;
  }

  if (*test) {
    check_alpha(test_opts.alpha);
    const Sample x = read_column(x_file);
    const Sample y = read_column(y_file);
    const StatisticKind stat = parse_statistic(stat_name);
    const PreparedTest prepared(stat, NullModel::parse(null_text), x.size(), y.size(),
                                test_opts.seed, test_opts.threads);
    const auto outcome =
        prepared.run(PointSample::from_scalars(x.values()), PointSample::from_scalars(y.values()),
                     test_opts.seed, midrank ? TiePolicy::midrank : TiePolicy::reject);
    Json doc = outcome_json("test", outcome, test_opts.alpha);
    doc["tie_policy"] = midrank ? "midrank" : "reject";
    emit(doc, test_opts.output, out);
    return kOk;
  }

  if (*mtest) {
    check_alpha(mtest_opts.alpha);
    const PointSample x = read_points(mx_file);
    const PointSample y = read_points(my_file);
    if (x.dim() != y.dim()) {
      throw DimensionMismatch(mx_file + " has " + std::to_string(x.dim()) + " columns but " +
                              my_file + " has " + std::to_string(y.dim()));
    }
    const auto outcome =
        permutation_pvalue_TM(x, y, replicates, mtest_opts.seed, mtest_opts.threads);
    Json doc = outcome_json("mtest", outcome, mtest_opts.alpha);
    doc["dimension"] = x.dim();
    doc["replicates"] = replicates;
    emit(doc, mtest_opts.output, out);
    return kOk;
  }

  if (*null) {
    const StatisticKind stat = parse_statistic(null_stat);
    const NullModel model = NullModel::parse(null_model);
    if (model.kind != NullModel::Kind::exact && model.kind != NullModel::Kind::monte_carlo) {
      throw InvalidArgument("null tables are built by 'exact' or 'mc:REPS'");
    }
    const NullKind kind =
        model.kind == NullModel::Kind::exact ? NullKind::exact : NullKind::monte_carlo;
    bool hit = false;
    fs::path file;
    const auto law = cached_null(cache_dir(null_opts.cache), stat, null_m, null_n, kind,
                                 model.parameter, null_opts.seed, null_opts.threads, hit, file);
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "null";
    doc["statistic"] = std::string(to_string(stat));
    doc["kind"] = std::string(to_string(kind));
    doc["m"] = null_m;
    doc["n"] = null_n;
    doc["total"] = law.total();
    doc["support_size"] = law.values.size();
    doc["mean"] = law.mean();
    doc["variance"] = law.variance();
    doc["cache_file"] = file.string();
    doc["cache_hit"] = hit;
    emit(doc, null_opts.output, out);
    return kOk;
  }

  if (*critval) {
    check_alpha(crit_opts.alpha);
    const StatisticKind stat = parse_statistic(crit_stat);
    const fs::path dir = cache_dir(crit_opts.cache);
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "critval";
    doc["statistic"] = std::string(to_string(stat));
    doc["alpha"] = crit_opts.alpha;
    doc["m"] = crit_m;
    doc["n"] = crit_n;
    doc["method"] = method;
    bool hit = false;
    if (method == "asymptotic") {
      if (stat != StatisticKind::T) throw InvalidArgument("the asymptotic method is for T only");
      if (d == 0) throw InvalidArgument("-d must be at least 1");
      const fs::path file = ensure_dir(dir) / "zd_quantiles.csv";
      const double q = cached_quantile_Zd(file, d, crit_opts.alpha, samples, crit_opts.seed, &hit,
                                          crit_opts.threads);
      const auto mo = moments_T(crit_m, crit_n);
      doc["d"] = d;
      doc["samples"] = samples;
      doc["seed"] = crit_opts.seed;
      doc["quantile"] = q;
      doc["critical_value"] = mo.mean + mo.sd() * q;
      doc["cache_file"] = file.string();
    } else {
      const NullKind kind = method == "exact" ? NullKind::exact : NullKind::monte_carlo;
      fs::path file;
      const auto law = cached_null(dir, stat, crit_m, crit_n, kind, reps, crit_opts.seed,
                                   crit_opts.threads, hit, file);
      const double c = critical_value_from_null(crit_opts.alpha, law);
      if (kind == NullKind::monte_carlo) {
        doc["reps"] = reps;
        doc["seed"] = crit_opts.seed;
      }
      doc["critical_value"] = c;
      doc["attained_size"] = attained_size(c, law);
      doc["cache_file"] = file.string();
    }
    doc["cache_hit"] = hit;
    emit(doc, crit_opts.output, out);
    return kOk;
  }

  // power
  PowerStudyConfig config = load_power_config(config_file);
  if (power_threads > 0) config.threads = power_threads;
  validate(config);
  err << "seed " << config.seed << ", iterations " << config.iterations << "\n";
  const auto result = run_power_study(config);
  if (power_output.empty()) {
    write_power_csv(result, out);
  } else {
    std::ofstream file(power_output);
    if (!file) throw InvalidArgument("cannot write " + power_output);
    write_power_csv(result, file);
  }
  return kOk;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"rank2s"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  } catch (const EnumerationTooLarge& e) {
    err << "error: " << e.what()
        << "\nhint: use --method mc or --method asymptotic (or --null mc:REPS)\n";
    return kInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace rank2s::cli
