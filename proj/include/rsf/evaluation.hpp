#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsf/forest.hpp"
#include "rsf/survival.hpp"

namespace rsf {

/// value = concordant / comparable. For Uno's C both sums are IPC-weighted.
struct ConcordanceResult {
  double value = 0.0;
  double concordant = 0.0;
  double comparable = 0.0;
};

/// Strict: tied scores earn no credit. Half: tied scores earn 0.5.
enum class ScoreTies { Strict, Half };

/// Harrell's C in O(n log n). A pair (i, j) is comparable when T_i > T_j and
/// j is an event; it is concordant when score_j > score_i. Throws
/// DegenerateEvaluation when no pair is comparable.
ConcordanceResult harrell_c(std::span<const Observation> data, std::span<const double> scores,
                            ScoreTies ties = ScoreTies::Strict);

/// Uno's C: each comparable pair with smaller time T_j is weighted by
/// G(T_j-)^-2, where G is the censoring survival function. Pairs with
/// G(T_j-) = 0 are dropped.
ConcordanceResult uno_c(std::span<const Observation> data, std::span<const double> scores,
                        const StepFunction& censor_survival, ScoreTies ties = ScoreTies::Strict);
/// Uno's C with G estimated by Kaplan-Meier on the censorings of `data`.
ConcordanceResult uno_c(std::span<const Observation> data, std::span<const double> scores,
                        ScoreTies ties = ScoreTies::Strict);

/// Harrell's C over the observations that have a score.
ConcordanceResult harrell_c(std::span<const Observation> data, std::span<const std::optional<double>> scores,
                            ScoreTies ties = ScoreTies::Strict);

struct ImportanceReport {
  std::vector<std::string> variables;
  /// Out-of-bag C minus mean out-of-bag C with the variable permuted.
  std::vector<double> raw;
  /// max(raw, 0) / max(raw); all zero when no raw value is positive.
  std::vector<double> scaled;
  /// 1 = most important; ties go to the lower column index.
  std::vector<std::size_t> rank;
};

struct ImportanceOptions {
  std::size_t repeats = 5;
  std::uint64_t seed = 1;
  ScoreTies ties = ScoreTies::Strict;
  std::size_t threads = 1;
};

/// Permutation importance on out-of-bag predictions of the training data.
/// Variable j uses its own permutation stream derived from (seed, j).
ImportanceReport permutation_importance(const Forest& forest, const SurvivalDataset& data,
                                        const ImportanceOptions& options = {});

}  // namespace rsf
