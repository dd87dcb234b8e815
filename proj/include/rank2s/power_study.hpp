#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rank2s/simgen.hpp"
#include "rank2s/two_sample.hpp"

namespace rank2s {

struct Scenario {
  std::string name;
  DistributionSpec x;
  DistributionSpec y;
  std::size_t m = 50;
  std::size_t n = 50;
  /// Delta grid; a scenario without a rule runs once at the listed value(s).
  std::vector<double> deltas{0.0};
  std::optional<DeltaRule> delta_rule;
};

struct TestSpec {
  StatisticKind statistic = StatisticKind::T;
  NullModel null;
  std::string label;  // defaults to the statistic name
};

struct PowerStudyConfig {
  std::vector<Scenario> scenarios;
  std::vector<TestSpec> tests;
  std::size_t iterations = 2000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Throws ConfigError with a field path.
void validate(const PowerStudyConfig& config);

/// Parses the YAML config format; errors carry field paths such as
/// "scenarios[1].y.sigma".
PowerStudyConfig load_power_config(const std::filesystem::path& path);
PowerStudyConfig parse_power_config(const std::string& yaml_text);

struct PowerCell {
  std::string scenario;
  std::string test;
  double delta = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  double power = 0.0;
  double se = 0.0;  // sqrt(p (1 - p) / M)
  std::size_t rejections = 0;
};

struct PowerStudyResult {
  std::vector<PowerCell> cells;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when no such cell exists.
  const PowerCell& at(const std::string& scenario, const std::string& test,
                      double delta) const;
};

/// For every scenario, delta and replicate, draws both samples from a stream
/// keyed by (seed, scenario/delta cell, replicate) and applies every test to
/// the same data. Any failing replicate aborts the study.
PowerStudyResult run_power_study(const PowerStudyConfig& config);

/// CSV with columns scenario,test,delta,power,se.
void write_power_csv(const PowerStudyResult& result, std::ostream& out);

}  // namespace rank2s
