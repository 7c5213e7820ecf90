#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "rsf/survival.hpp"

namespace rsf {

/// Node-split criterion. WeightedLogRank is the Tarone-Ware family with per-time
/// weight Y_k^exponent; exponent 0 is the log-rank statistic, 1 Gehan-Wilcoxon.
struct SplitStatisticKind {
  enum class Type { LogRank, HarrellC, Gehan, WeightedLogRank };

  Type type = Type::LogRank;
  double exponent = 0.0;

  static SplitStatisticKind log_rank() { return {Type::LogRank, 0.0}; }
  static SplitStatisticKind harrell_c() { return {Type::HarrellC, 0.0}; }
  static SplitStatisticKind gehan() { return {Type::Gehan, 1.0}; }
  /// Throws ConfigError unless exponent is in [0, 1].
  static SplitStatisticKind weighted_log_rank(double exponent);

  /// Accepts "logrank", "c", "gehan" and "tarone-ware:<w>".
  static SplitStatisticKind parse(const std::string& text);
  std::string to_string() const;

  /// Exponent applied to Y_k in the weighted log-rank kernel.
  double weight_exponent() const { return type == Type::Gehan ? 1.0 : exponent; }
  bool uses_risk_table() const { return type != Type::HarrellC; }

  friend bool operator==(const SplitStatisticKind&, const SplitStatisticKind&) = default;
};

/// Criterion value on a larger-is-better scale. For HarrellC the value is in
/// [0.5, 1] and `switched` records that the group labels were swapped.
struct SplitEvaluation {
  double value = 0.0;
  bool switched = false;
  std::int64_t cross_pairs = 0;  // N
  std::int64_t pairs0 = 0;       // N0
  std::int64_t pairs1 = 0;       // N1
};

/// Gehan statistic U with the comparable-pair counts used to relate it to
/// the split version of Harrell's C.
struct GehanResult {
  std::int64_t u = 0;
  std::int64_t cross_pairs = 0;
  std::int64_t pairs0 = 0;
  std::int64_t pairs1 = 0;
  /// Cross pairs with the group-0 member outliving the group-1 event.
  std::int64_t concordant_cross = 0;
};

SplitEvaluation logrank_statistic(const RiskTable& table);
SplitEvaluation weighted_logrank_statistic(const RiskTable& table, double exponent);

/// Direct pair scan of the split C with half credit for same-node pairs.
SplitEvaluation harrell_c_split(std::span<const Observation> data, std::span<const std::uint8_t> group);

/// O(n log n) Gehan statistic with G1 the members flagged 1.
GehanResult gehan_u(std::span<const Observation> data, std::span<const std::uint8_t> group);

SplitEvaluation evaluate_split(const SplitStatisticKind& kind, std::span<const Observation> data,
                               std::span<const std::uint8_t> group);

/// Weighted log-rank value from raw per-time counts; nullopt when the split
/// is degenerate. Every log-rank path funnels through here so that a value
/// recomputed from the same counts is bit-identical.
std::optional<double> weighted_logrank_from_counts(std::span<const std::int64_t> d,
                                                   std::span<const std::int64_t> at_risk,
                                                   std::span<const std::int64_t> d1,
                                                   std::span<const std::int64_t> at_risk1, double exponent);

struct OrientedC {
  double value;
  bool switched;
};

/// Split C from twice its numerator (2A + N0 + N1) and the comparable-pair
/// total D; requires D > 0.
OrientedC oriented_c(std::int64_t twice_numerator, std::int64_t comparable);

}  // namespace rsf
