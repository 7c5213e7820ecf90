#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rsf/parallel.hpp"
#include "rsf/split.hpp"
#include "rsf/survival.hpp"

namespace rsf {

/// Sampler for the marginal law of the true survival time T.
struct SurvivalModel {
  std::function<double(Rng&)> sample;
  /// T ~ Exp(1); censoring rate then has a closed form.
  bool unit_exponential = false;

  static SurvivalModel standard_exponential();
};

struct CalibrationOptions {
  std::size_t draws = 100000;
  double tolerance = 0.005;
  std::size_t max_iterations = 200;
  std::uint64_t seed = 1;
};

/// Rate c of an exponential censoring time C such that P(C < T) = target.
/// Exp(1) survival: c = q / (1 - q). Otherwise bisection on the Monte-Carlo
/// censoring fraction; throws CalibrationError if it does not converge.
double calibrate_censoring(const SurvivalModel& model, double target_rate, const CalibrationOptions& options = {});

struct Study1Config {
  enum class Variant { A, B };

  /// A: x ~ U[-3, 3] with T ~ Exp(1) independent of x.
  /// B: x ~ U(0, 1) and T = exp(I(x > true_threshold) + eps), eps ~ N(0, 1).
  Variant variant = Variant::A;
  std::size_t n = 1000;
  double true_threshold = 0.25;
  double censoring_rate = 0.5;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;

  static Study1Config variant_a(double censoring_rate = 0.5);
  static Study1Config variant_b(double true_threshold, double censoring_rate);
  void validate() const;
};

/// Rate of the exponential censoring distribution for the configured model.
double study1_censoring_rate(const Study1Config& config);

/// One replication: a single predictor column named "x".
SurvivalDataset gen_study1_replication(const Study1Config& config, std::size_t replication, double censoring_rate);
std::vector<SurvivalDataset> gen_study1(const Study1Config& config, std::size_t threads = 1);

/// Fixed binary tree over the informative variables mapping x to a location
/// parameter in [0, 1]. Rule x_variable <= threshold goes left.
///
/// Text form (JSON):
///   {"format": "location-tree", "version": 1,
///    "nodes": [{"id": 0, "variable": 1, "threshold": 0.0, "left": 1, "right": 2},
///              {"id": 1, "lambda": 0.25}, ...]}
/// `variable` is 1-based (1 = x1). Node 0 is the root and must split.
class LocationTree {
 public:
  struct Node {
    int variable = -1;  // 0-based; -1 marks a terminal node
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double lambda = 0.0;
  };

  LocationTree() = default;
  /// Throws ConfigError unless the nodes form a tree rooted at 0 whose
  /// terminal values lie in [0, 1] and whose root splits.
  explicit LocationTree(std::vector<Node> nodes);

  /// Depth-3 tree: x1 at 0, then x2 (left) / x3 (right) at 0, then x4 at 0,
  /// with terminal values 0, 0.15, 0.3, 0.45, 0.55, 0.7, 0.85, 1 left to right.
  static LocationTree default_tree();
  static LocationTree parse(const std::string& text);
  static LocationTree load(const std::string& path);
  std::string to_text() const;

  double lambda(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Largest 0-based variable index referenced, plus one.
  std::size_t variables_used() const;

 private:
  std::vector<Node> nodes_;
};

struct Study2Config {
  std::size_t n = 100;
  std::size_t p = 10;
  double censoring_rate = 0.5;
  bool dichotomize = false;
  double rho = 0.5;
  std::size_t n_test = 1000;
  /// Noise columns share the informative block's common factor when true;
  /// otherwise they form an independent block with the same correlation.
  bool noise_shares_factor = false;
  std::uint64_t seed = 1;
  LocationTree tree_model = LocationTree::default_tree();

  static constexpr std::size_t informative = 4;
  void validate() const;
};

struct Study2Data {
  SurvivalDataset learn;
  SurvivalDataset test;
  /// Location parameters behind `learn`.
  std::vector<double> lambda;
  double sigma = 0.0;
  double censoring_rate = 0.0;
};

/// ln T = lambda(x) + sigma * eps with eps standard (minimum) extreme value,
/// sigma = empirical SD of the learning lambdas, exponential censoring
/// calibrated to the target rate. Test data share sigma and censoring.
Study2Data gen_study2(const Study2Config& config, std::size_t replication);

/// Argmax midpoint threshold of the single predictor under `kind`. Throws
/// NoValidSplit when no admissible threshold exists.
double select_root_threshold(const SurvivalDataset& data, const SplitStatisticKind& kind);

}  // namespace rsf
