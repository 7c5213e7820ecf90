#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rsf/parallel.hpp"
#include "rsf/split.hpp"
#include "rsf/survival.hpp"

namespace rsf {

struct ForestConfig {
  std::size_t ntree = 500;
  /// Candidate variables per node; unset means ceil(sqrt(p)).
  std::optional<std::size_t> mtry;
  /// A node is split only while its uncensored count exceeds nodesize.
  std::size_t nodesize = 3;
  /// Smallest admissible child, counted in in-bag members.
  std::size_t min_child = 1;
  SplitStatisticKind split_kind = SplitStatisticKind::log_rank();
  std::uint64_t seed = 1;
  /// Worker threads for training and prediction (0 = all cores). Has no
  /// effect on results.
  std::size_t threads = 1;

  std::size_t resolved_mtry(std::size_t p) const;
  /// Throws ConfigError on ntree, nodesize or min_child of 0, or mtry outside [1, p].
  void validate(std::size_t p) const;

  /// threads is an execution setting and takes no part in equality.
  friend bool operator==(const ForestConfig& a, const ForestConfig& b) {
    return a.ntree == b.ntree && a.mtry == b.mtry && a.nodesize == b.nodesize && a.min_child == b.min_child && a.split_kind == b.split_kind &&
           a.seed == b.seed;
  }
};

/// Rule x[variable] <= threshold sends an observation left.
struct SplitCandidate {
  std::size_t variable = 0;
  double threshold = 0.0;
  double value = 0.0;
  bool switched = false;

  friend bool operator==(const SplitCandidate&, const SplitCandidate&) = default;
};

struct TerminalNode {
  StepFunction chf;
  std::size_t inbag_count = 0;
  std::size_t uncensored_count = 0;
  /// Sum of the CHF over the forest's event grid.
  double score = 0.0;

  friend bool operator==(const TerminalNode&, const TerminalNode&) = default;
};

struct TreeNode {
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t terminal = -1;
  SplitCandidate split;

  bool is_terminal() const { return terminal >= 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class SurvivalTree {
 public:
  SurvivalTree() = default;
  SurvivalTree(std::vector<TreeNode> nodes, std::vector<TerminalNode> terminals);

  /// Index into nodes() of the terminal node reached; get(j) yields x_j.
  template <typename Get>
  std::size_t node_for(Get&& get) const {
    std::size_t id = 0;
    while (!nodes_[id].is_terminal()) {
      const auto& s = nodes_[id].split;
      id = static_cast<std::size_t>(get(s.variable) <= s.threshold ? nodes_[id].left : nodes_[id].right);
    }
    return id;
  }
  std::size_t node_for(std::span<const double> x) const {
    return node_for([&](std::size_t j) { return x[j]; });
  }
  const TerminalNode& terminal_for(std::span<const double> x) const {
    return terminals_[static_cast<std::size_t>(nodes_[node_for(x)].terminal)];
  }
  template <typename Get>
  double score_for(Get&& get) const {
    return terminals_[static_cast<std::size_t>(nodes_[node_for(get)].terminal)].score;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<TerminalNode>& terminals() const { return terminals_; }
  std::size_t depth() const;

  friend bool operator==(const SurvivalTree&, const SurvivalTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<TerminalNode> terminals_;
};

struct Forest {
  std::vector<SurvivalTree> trees;
  /// inbag[b][i]: bootstrap multiplicity of observation i in tree b.
  std::vector<std::vector<std::uint32_t>> inbag;
  std::vector<double> event_grid;
  ForestConfig config;
  std::vector<std::string> variable_names;

  std::size_t p() const { return variable_names.size(); }
  std::size_t ntree() const { return trees.size(); }

  friend bool operator==(const Forest&, const Forest&) = default;
};

/// Best midpoint split of the node formed by `members` (indices into data,
/// repeats allowed) over the candidate variables, scanned in the given order.
/// Ties keep the first candidate found (variable order, then ascending
/// threshold). nullopt means no admissible split exists.
std::optional<SplitCandidate> best_split(const SurvivalDataset& data, std::span<const std::size_t> members,
                                         std::span<const std::size_t> candidate_vars,
                                         const SplitStatisticKind& kind, std::size_t min_child = 1);

/// Members (with multiplicity) in the same order as `inbag` lists them.
std::vector<std::size_t> expand_inbag(std::span<const std::uint32_t> inbag);

/// 1 for members sent left by the split, 0 otherwise.
std::vector<std::uint8_t> left_labels(const SurvivalDataset& data, std::span<const std::size_t> members,
                                      const SplitCandidate& split);

/// Grows one tree on the bootstrap members. Throws TreeDegenerate when the
/// sample contains no event.
SurvivalTree grow_tree(const SurvivalDataset& data, std::span<const std::size_t> members,
                       const ForestConfig& config, std::span<const double> event_grid, Rng& rng);

Forest train(const SurvivalDataset& data, const ForestConfig& config);

/// Ensemble score: mean over trees of the terminal CHF summed over the
/// event grid. Larger means higher risk.
double predict_score(const Forest& forest, std::span<const double> x);
std::vector<double> predict_scores(const Forest& forest, const SurvivalDataset& data);

/// Out-of-bag scores; nullopt for an observation that is in-bag in every tree.
std::vector<std::optional<double>> predict_scores_oob(const Forest& forest, const SurvivalDataset& data);

/// Distinct event times of the data, ascending.
std::vector<double> event_times(std::span<const Observation> data);

}  // namespace rsf
