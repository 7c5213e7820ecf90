#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsf/evaluation.hpp"
#include "rsf/simgen.hpp"
#include "rsf/split.hpp"

namespace rsf {

/// Linear-interpolation sample quantile (R type 7).
double quantile(std::vector<double> values, double prob);

struct Summary {
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  /// 95% percentile-bootstrap interval of the median.
  double ci_low = 0.0;
  double ci_high = 0.0;
};

Summary summarize(std::span<const double> values, std::uint64_t seed, std::size_t resamples = 2000);

/// Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(std::span<const double> values);

struct DensityTable {
  std::vector<double> grid;
  std::vector<std::vector<double>> density;  // one row of grid values per sample
  std::vector<double> bandwidth;
};

/// Gaussian kernel densities of several samples on a shared grid spanning
/// [min - 3h, max + 3h], h the largest bandwidth.
DensityTable kernel_density(const std::vector<std::vector<double>>& samples, std::size_t points = 512);

struct ThresholdRecord {
  std::size_t replication = 0;
  SplitStatisticKind kind;
  double threshold = 0.0;
};

struct Sim1Result {
  Study1Config config;
  std::vector<SplitStatisticKind> criteria;
  /// Rate of the exponential censoring distribution.
  double censoring_parameter = 0.0;
  double observed_censoring = 0.0;
  /// Ordered by replication, then by criterion as listed in `criteria`.
  std::vector<ThresholdRecord> records;
  DensityTable density;

  std::vector<double> thresholds(const SplitStatisticKind& kind) const;
  /// Fraction of thresholds outside the central (1 - 2 * tail) part of [lo, hi].
  double outer_fraction(const SplitStatisticKind& kind, double lo, double hi, double tail = 0.1) const;
};

/// Root threshold selection on every replication under each criterion.
Sim1Result run_sim1(const Study1Config& config, std::size_t threads = 1,
                    std::vector<SplitStatisticKind> criteria = {SplitStatisticKind::log_rank(),
                                                                SplitStatisticKind::harrell_c()});

struct Sim2Options {
  std::size_t replications = 50;
  std::size_t ntree = 100;
  std::size_t nodesize = 3;
  std::size_t min_child = 1;
  std::optional<std::size_t> mtry;
  std::size_t threads = 1;
  ScoreTies ties = ScoreTies::Strict;
};

struct Sim2Record {
  std::size_t replication = 0;
  double harrell_csplit = 0.0;
  double harrell_logrank = 0.0;
  double uno_csplit = 0.0;
  double uno_logrank = 0.0;
  double learn_censoring = 0.0;
  double test_censoring = 0.0;

  /// Positive when C-based splitting predicts better.
  double harrell_difference() const { return harrell_csplit - harrell_logrank; }
  double uno_difference() const { return uno_csplit - uno_logrank; }
};

struct Sim2Result {
  Study2Config config;
  Sim2Options options;
  std::vector<Sim2Record> records;
  Summary harrell;
  Summary uno;

  std::vector<double> harrell_differences() const;
  std::vector<double> uno_differences() const;
};

/// Per replication: one forest per split rule trained with the same seed on
/// the same learning data, both evaluated on the test data.
Sim2Result run_sim2(const Study2Config& config, const Sim2Options& options);

/// Writes sim1_records.csv, sim1_summary.csv, sim1_density.csv and sim1_config.json.
void write_sim1_outputs(std::span<const Sim1Result> results, const std::string& dir);
/// Writes sim2_records.csv, sim2_summary.csv and sim2_config.json.
void write_sim2_outputs(std::span<const Sim2Result> results, const std::string& dir);

}  // namespace rsf
