#include "rank2s/power_study.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "rank2s/error.hpp"
#include "rank2s/parallel.hpp"
#include "rank2s/random.hpp"

namespace rank2s {

namespace {

// ---- YAML helpers -------------------------------------------------------

template <class T>
T scalar_as(const YAML::Node& node, const std::string& path, const char* what) {
  if (!node || !node.IsScalar()) throw ConfigError(path, std::string("expected ") + what);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, std::string("expected ") + what);
  }
}

double number(const YAML::Node& node, const std::string& path) {
  return scalar_as<double>(node, path, "a number");
}

std::size_t count(const YAML::Node& node, const std::string& path) {
  const auto v = scalar_as<long long>(node, path, "a nonnegative integer");
  if (v < 0) throw ConfigError(path, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

double number_or(const YAML::Node& map, const std::string& key, const std::string& path,
                 double fallback) {
  const YAML::Node node = map[key];
  return node ? number(node, path + "." + key) : fallback;
}

YAML::Node required(const YAML::Node& map, const std::string& key, const std::string& path) {
  const YAML::Node node = map[key];
  if (!node) throw ConfigError(path.empty() ? key : path + "." + key, "is required");
  return node;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Scalar (broadcast) or list of length d.
Eigen::VectorXd vector_param(const YAML::Node& node, std::size_t d, const std::string& path,
                             double fallback) {
  const auto n = static_cast<Eigen::Index>(d);
  if (!node) return Eigen::VectorXd::Constant(n, fallback);
  if (node.IsScalar()) return Eigen::VectorXd::Constant(n, number(node, path));
  if (!node.IsSequence() || node.size() != d) {
    throw ConfigError(path, "expected a number or a list of " + std::to_string(d) + " numbers");
  }
  Eigen::VectorXd out(n);
  for (std::size_t i = 0; i < d; ++i) {
    out(static_cast<Eigen::Index>(i)) = number(node[i], path + "[" + std::to_string(i) + "]");
  }
  return out;
}

// "identity", a scalar multiple of the identity, a full matrix, or
// {equicorrelation: rho, reciprocal: bool}.
Eigen::MatrixXd matrix_param(const YAML::Node& node, std::size_t d, const std::string& path) {
  const auto n = static_cast<Eigen::Index>(d);
  if (!node) return Eigen::MatrixXd::Identity(n, n);
  if (node.IsScalar()) {
    if (node.as<std::string>() == "identity") return Eigen::MatrixXd::Identity(n, n);
    return number(node, path) * Eigen::MatrixXd::Identity(n, n);
  }
  if (node.IsMap()) {
    const double rho = number(required(node, "equicorrelation", path), join(path, "equicorrelation"));
    Eigen::MatrixXd out = equicorrelation(d, rho);
    const YAML::Node rec = node["reciprocal"];
    if (rec && scalar_as<bool>(rec, join(path, "reciprocal"), "true or false")) {
      try {
        out = reciprocal_eigen_covariance(out);
      } catch (const InvalidParameters& e) {
        throw ConfigError(path, e.what());
      }
    }
    return out;
  }
  if (!node.IsSequence() || node.size() != d) {
    throw ConfigError(path, "expected a " + std::to_string(d) + " x " + std::to_string(d) +
                                " matrix");
  }
  Eigen::MatrixXd out(n, n);
  for (std::size_t i = 0; i < d; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!node[i].IsSequence() || node[i].size() != d) {
      throw ConfigError(row_path, "expected " + std::to_string(d) + " numbers");
    }
    for (std::size_t j = 0; j < d; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          number(node[i][j], row_path + "[" + std::to_string(j) + "]");
    }
  }
  return out;
}

std::size_t mv_dimension(const YAML::Node& node, const std::string& path, const char* vec_key) {
  if (const YAML::Node d = node["d"]) {
    const std::size_t dim = count(d, join(path, "d"));
    if (dim == 0) throw ConfigError(join(path, "d"), "must be at least 1");
    return dim;
  }
  const YAML::Node v = node[vec_key];
  if (v && v.IsSequence() && v.size() > 0) return v.size();
  throw ConfigError(join(path, "d"), "is required when '" + std::string(vec_key) +
                                         "' is not a list");
}

DistributionSpec parse_distribution(const YAML::Node& node, const std::string& path) {
  if (!node || !node.IsMap()) throw ConfigError(path, "expected a distribution map");
  const auto family =
      scalar_as<std::string>(required(node, "family", path), join(path, "family"), "a family name");
  DistributionSpec spec;
  if (family == "normal") {
    spec = dist::Normal{number_or(node, "mu", path, 0.0), number_or(node, "sigma", path, 1.0)};
  } else if (family == "student_t") {
    spec = dist::StudentT{number(required(node, "df", path), join(path, "df")),
                          number_or(node, "shift", path, 0.0)};
  } else if (family == "pareto") {
    spec = dist::Pareto{number(required(node, "shape", path), join(path, "shape")),
                        number(required(node, "scale", path), join(path, "scale"))};
  } else if (family == "exponential") {
    spec = dist::Exponential{number_or(node, "rate", path, 1.0)};
  } else if (family == "lognormal") {
    spec = dist::LogNormal{number_or(node, "mu", path, 0.0), number_or(node, "sigma", path, 1.0)};
  } else if (family == "mv_normal") {
    const std::size_t d = mv_dimension(node, path, "mean");
    spec = dist::MvNormal{vector_param(node["mean"], d, join(path, "mean"), 0.0),
                          matrix_param(node["covariance"], d, join(path, "covariance"))};
  } else if (family == "mv_t1") {
    const std::size_t d = mv_dimension(node, path, "mean");
    spec = dist::MvT1{vector_param(node["mean"], d, join(path, "mean"), 0.0),
                      matrix_param(node["scatter"], d, join(path, "scatter"))};
  } else if (family == "mv_pareto") {
    const std::size_t d = mv_dimension(node, path, "shape");
    spec = dist::MvPareto{vector_param(required(node, "shape", path), d, join(path, "shape"), 1.0),
                          vector_param(required(node, "scale", path), d, join(path, "scale"), 1.0)};
  } else {
    throw ConfigError(join(path, "family"), "unknown family '" + family + "'");
  }
  try {
    validate(spec);
  } catch (const InvalidParameters& e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

std::string format_number(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

}  // namespace

void validate(const PowerStudyConfig& config) {
  if (config.iterations < 100) throw ConfigError("iterations", "must be at least 100");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw ConfigError("alpha", "must lie in (0, 1)");
  }
  if (config.scenarios.empty()) throw ConfigError("scenarios", "must list at least one scenario");
  if (config.tests.empty()) throw ConfigError("tests", "must list at least one test");
  for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
    const auto& sc = config.scenarios[s];
    const std::string path = "scenarios[" + std::to_string(s) + "]";
    if (sc.m == 0) throw ConfigError(path + ".m", "must be at least 1");
    if (sc.n == 0) throw ConfigError(path + ".n", "must be at least 1");
    if (sc.deltas.empty()) throw ConfigError(path + ".delta.values", "must not be empty");
    const std::size_t dim = dimension(sc.x);
    if (dimension(sc.y) != dim) throw ConfigError(path + ".y", "dimension differs from x");
    for (double delta : sc.deltas) {
      try {
        validate(sc.delta_rule ? apply_delta(sc.y, *sc.delta_rule, delta) : sc.y);
      } catch (const InvalidParameters& e) {
        throw ConfigError(path + ".delta", "at delta " + format_number(delta) + ": " + e.what());
      }
    }
    for (std::size_t t = 0; t < config.tests.size(); ++t) {
      const auto stat = config.tests[t].statistic;
      if (dim > 1 && stat != StatisticKind::Energy && stat != StatisticKind::TM) {
        throw ConfigError("tests[" + std::to_string(t) + "]",
                          std::string(to_string(stat)) + " needs univariate data but " +
                              sc.name + " is " + std::to_string(dim) + "-dimensional");
      }
      if (stat == StatisticKind::Tprime && sc.m != sc.n) {
        throw ConfigError("tests[" + std::to_string(t) + "]", "Tprime needs m == n in " + sc.name);
      }
    }
  }
}

PowerStudyConfig parse_power_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<root>", std::string("YAML syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<root>", "expected a map");

  PowerStudyConfig config;
  config.seed = static_cast<std::uint64_t>(count(required(root, "seed", ""), "seed"));
  config.iterations = count(required(root, "iterations", ""), "iterations");
  config.alpha = number_or(root, "alpha", "", 0.05);
  if (const YAML::Node t = root["threads"]) {
    config.threads = static_cast<unsigned>(count(t, "threads"));
  }

  const YAML::Node tests = required(root, "tests", "");
  if (!tests.IsSequence()) throw ConfigError("tests", "expected a list");
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const std::string path = "tests[" + std::to_string(i) + "]";
    TestSpec spec;
    const YAML::Node node = tests[i];
    std::string name;
    std::string null_text = "auto";
    if (node.IsScalar()) {
      name = node.as<std::string>();
    } else if (node.IsMap()) {
      name = scalar_as<std::string>(required(node, "statistic", path), path + ".statistic",
                                    "a statistic name");
      if (node["null"]) {
        null_text = scalar_as<std::string>(node["null"], path + ".null", "a null model");
      }
      if (node["label"]) {
        spec.label = scalar_as<std::string>(node["label"], path + ".label", "a label");
      }
    } else {
      throw ConfigError(path, "expected a statistic name or a map");
    }
    try {
      spec.statistic = parse_statistic(name);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path + ".statistic", e.what());
    }
    try {
      spec.null = NullModel::parse(null_text);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path + ".null", e.what());
    }
    if (spec.label.empty()) spec.label = std::string(to_string(spec.statistic));
    config.tests.push_back(spec);
  }

  const YAML::Node scenarios = required(root, "scenarios", "");
  if (!scenarios.IsSequence()) throw ConfigError("scenarios", "expected a list");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const std::string path = "scenarios[" + std::to_string(i) + "]";
    const YAML::Node node = scenarios[i];
    if (!node.IsMap()) throw ConfigError(path, "expected a map");
    Scenario sc;
    sc.name = node["name"] ? scalar_as<std::string>(node["name"], path + ".name", "a name")
                           : "scenario" + std::to_string(i);
    sc.m = count(required(node, "m", path), path + ".m");
    sc.n = count(required(node, "n", path), path + ".n");
    sc.x = parse_distribution(required(node, "x", path), path + ".x");
    sc.y = parse_distribution(required(node, "y", path), path + ".y");
    if (const YAML::Node delta = node["delta"]) {
      const std::string dpath = path + ".delta";
      if (!delta.IsMap()) throw ConfigError(dpath, "expected a map");
      DeltaRule rule;
      rule.param = scalar_as<std::string>(required(delta, "param", dpath), dpath + ".param",
                                          "a parameter name");
      const std::string mode =
          delta["mode"] ? scalar_as<std::string>(delta["mode"], dpath + ".mode", "add or multiply")
                        : "add";
      if (mode == "add") {
        rule.mode = DeltaRule::Mode::add;
      } else if (mode == "multiply") {
        rule.mode = DeltaRule::Mode::multiply;
      } else {
        throw ConfigError(dpath + ".mode", "expected add or multiply");
      }
      const YAML::Node values = required(delta, "values", dpath);
      if (!values.IsSequence()) throw ConfigError(dpath + ".values", "expected a list");
      sc.deltas.clear();
      for (std::size_t k = 0; k < values.size(); ++k) {
        sc.deltas.push_back(number(values[k], dpath + ".values[" + std::to_string(k) + "]"));
      }
      try {
        (void)apply_delta(sc.y, rule, sc.deltas.empty() ? 0.0 : sc.deltas.front());
      } catch (const InvalidParameters& e) {
        throw ConfigError(dpath + ".param", e.what());
      }
      sc.delta_rule = rule;
    }
    config.scenarios.push_back(std::move(sc));
  }
  validate(config);
  return config;
}

PowerStudyConfig load_power_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_power_config(buffer.str());
}

const PowerCell& PowerStudyResult::at(const std::string& scenario, const std::string& test,
                                      double delta) const {
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.test == test && std::abs(c.delta - delta) < 1e-12) return c;
  }
  throw InvalidArgument("no power cell for " + scenario + "/" + test + " at delta " +
                        format_number(delta));
}

PowerStudyResult run_power_study(const PowerStudyConfig& config) {
  validate(config);
  PowerStudyResult result;
  result.iterations = config.iterations;
  result.seed = config.seed;

  // Null laws depend only on (test, m, n); share them across scenarios.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::shared_ptr<PreparedTest>>
      prepared;
  auto prepare = [&](std::size_t t, std::size_t m, std::size_t n) {
    auto& slot = prepared[{t, m, n}];
    if (!slot) {
      const auto& spec = config.tests[t];
      slot = std::make_shared<PreparedTest>(spec.statistic, spec.null, m, n, config.seed,
                                            config.threads);
    }
    return slot;
  };

  const std::size_t reps = config.iterations;
  constexpr std::size_t kChunk = 16;
  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  std::uint64_t cell_index = 0;

  for (const auto& sc : config.scenarios) {
    std::vector<std::shared_ptr<PreparedTest>> tests;
    for (std::size_t t = 0; t < config.tests.size(); ++t) tests.push_back(prepare(t, sc.m, sc.n));

    for (double delta : sc.deltas) {
      const DistributionSpec y_spec = sc.delta_rule ? apply_delta(sc.y, *sc.delta_rule, delta) : sc.y;
      std::vector<std::vector<std::size_t>> rejections(chunks,
                                                       std::vector<std::size_t>(tests.size(), 0));
      const std::uint64_t cell = cell_index++;
      parallel_for_chunks(chunks, config.threads, [&](std::size_t chunk) {
        const std::size_t end = std::min(reps, (chunk + 1) * kChunk);
        for (std::size_t r = chunk * kChunk; r < end; ++r) {
          try {
            Engine engine = make_stream(config.seed, cell, r);
            const PointSample x = draw_points(sc.x, sc.m, engine);
            const PointSample y = draw_points(y_spec, sc.n, engine);
            const std::uint64_t perm_seed = engine();
            for (std::size_t t = 0; t < tests.size(); ++t) {
              const TestOutcome o = tests[t]->run(x, y, perm_seed + t);
              if (o.p_value <= config.alpha) ++rejections[chunk][t];
            }
          } catch (const Error& e) {
            throw Error("scenario " + sc.name + ", delta " + format_number(delta) +
                        ", replicate " + std::to_string(r) + ": " + e.what());
          }
        }
      });
      for (std::size_t t = 0; t < tests.size(); ++t) {
        PowerCell c;
        c.scenario = sc.name;
        c.test = config.tests[t].label;
        c.delta = delta;
        c.m = sc.m;
        c.n = sc.n;
        for (const auto& part : rejections) c.rejections += part[t];
        c.power = static_cast<double>(c.rejections) / static_cast<double>(reps);
        c.se = std::sqrt(c.power * (1.0 - c.power) / static_cast<double>(reps));
        result.cells.push_back(c);
      }
    }
  }
  return result;
}

void write_power_csv(const PowerStudyResult& result, std::ostream& out) {
  out << "scenario,test,delta,power,se\n";
  char buf[64];
  for (const auto& c : result.cells) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f", c.power, c.se);
    out << c.scenario << ',' << c.test << ',' << format_number(c.delta) << ',' << buf << '\n';
  }
}

}  // namespace rank2s
