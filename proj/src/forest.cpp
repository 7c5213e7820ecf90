#include "rsf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsf/detail/fenwick.hpp"
#include "rsf/error.hpp"

namespace rsf {

std::size_t ForestConfig::resolved_mtry(std::size_t p) const {
  if (mtry) return *mtry;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)))));
}

void ForestConfig::validate(std::size_t p) const {
  if (ntree == 0) throw ConfigError("ntree must be at least 1");
  if (nodesize == 0) throw ConfigError("nodesize must be at least 1");
  if (min_child == 0) throw ConfigError("min_child must be at least 1");
  if (p == 0) throw ConfigError("data has no predictor variables");
  const auto m = resolved_mtry(p);
  if (m < 1 || m > p) {
    throw ConfigError("mtry = " + std::to_string(m) + " outside [1, " + std::to_string(p) + "]");
  }
  if (split_kind.type == SplitStatisticKind::Type::WeightedLogRank &&
      !(split_kind.exponent >= 0.0 && split_kind.exponent <= 1.0)) {
    throw ConfigError("tarone-ware exponent must lie in [0, 1]");
  }
}

SurvivalTree::SurvivalTree(std::vector<TreeNode> nodes, std::vector<TerminalNode> terminals)
    : nodes_(std::move(nodes)), terminals_(std::move(terminals)) {
  if (nodes_.empty()) throw FormatError("tree has no nodes");
  for (const auto& n : nodes_) {
    if (n.is_terminal()) {
      if (static_cast<std::size_t>(n.terminal) >= terminals_.size()) throw FormatError("bad terminal index");
    } else if (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= nodes_.size() ||
               static_cast<std::size_t>(n.right) >= nodes_.size()) {
      throw FormatError("bad child index");
    }
  }
}

std::size_t SurvivalTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    deepest = std::max(deepest, level[id]);
    if (!nodes_[id].is_terminal()) {
      level[static_cast<std::size_t>(nodes_[id].left)] = level[id] + 1;
      level[static_cast<std::size_t>(nodes_[id].right)] = level[id] + 1;
    }
  }
  return deepest;
}

std::vector<double> event_times(std::span<const Observation> data) {
  std::vector<double> t;
  for (const auto& o : data) {
    if (o.status == 1) t.push_back(o.time);
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

std::vector<std::size_t> expand_inbag(std::span<const std::uint32_t> inbag) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < inbag.size(); ++i) members.insert(members.end(), inbag[i], i);
  return members;
}

std::vector<std::uint8_t> left_labels(const SurvivalDataset& data, std::span<const std::size_t> members,
                                      const SplitCandidate& split) {
  std::vector<std::uint8_t> labels(members.size());
  const auto col = data.column(split.variable);
  for (std::size_t q = 0; q < members.size(); ++q) labels[q] = col[members[q]] <= split.threshold ? 1 : 0;
  return labels;
}

namespace {

using detail::Fenwick;

// Per-node quantities shared by every candidate variable.
class NodeScanner {
 public:
  NodeScanner(const SurvivalDataset& data, std::span<const std::size_t> members, const SplitStatisticKind& kind,
              std::size_t min_child)
      : data_(data), members_(members), kind_(kind), m_(members.size()), min_child_(static_cast<std::int64_t>(min_child)) {
    if (kind_.uses_risk_table()) {
      prepare_risk_table();
    } else {
      prepare_pairs();
    }
    order_.resize(m_);
    values_.resize(m_);
  }

  // Best admissible threshold of variable j that beats `best_value`.
  void scan(std::size_t j, std::optional<SplitCandidate>& best) {
    if (kind_.uses_risk_table() ? events_total_ == 0 : comparable_ == 0) return;
    const auto col = data_.column(j);
    for (std::size_t q = 0; q < m_; ++q) values_[q] = col[members_[q]];
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
    if (!(values_[order_.front()] < values_[order_.back()])) return;

    reset_left();
    for (std::size_t pos = 0; pos + 1 < m_; ++pos) {
      const std::size_t q = order_[pos];
      move_left(q);
      const double here = values_[q];
      const double next = values_[order_[pos + 1]];
      if (!(here < next)) continue;
      if (left_size_ < min_child_ || static_cast<std::int64_t>(m_) - left_size_ < min_child_) continue;
      const auto value = current_value();
      if (!value) continue;
      if (!best || value->value > best->value) {
        double threshold = here + (next - here) / 2.0;
        if (!(threshold < next)) threshold = here;
        best = SplitCandidate{j, threshold, value->value, value->switched};
      }
    }
  }

 private:
  void prepare_risk_table() {
    std::vector<Observation> obs;
    obs.reserve(m_);
    for (auto i : members_) obs.push_back(data_.observation(i));
    times_ = event_times(obs);
    const std::size_t k_count = times_.size();
    bucket_.assign(m_, -1);
    event_.assign(m_, 0);
    d_.assign(k_count, 0);
    at_risk_.assign(k_count, 0);
    std::vector<std::int64_t> per_bucket(k_count, 0);
    for (std::size_t q = 0; q < m_; ++q) {
      const auto it = std::upper_bound(times_.begin(), times_.end(), obs[q].time);
      bucket_[q] = static_cast<std::int64_t>(it - times_.begin()) - 1;
      event_[q] = obs[q].status;
      if (bucket_[q] >= 0) {
        ++per_bucket[static_cast<std::size_t>(bucket_[q])];
        if (obs[q].status == 1) ++d_[static_cast<std::size_t>(bucket_[q])];
      }
    }
    std::int64_t running = 0;
    for (std::size_t k = k_count; k-- > 0;) {
      running += per_bucket[k];
      at_risk_[k] = running;
    }
    events_total_ = std::accumulate(d_.begin(), d_.end(), std::int64_t{0});
    d1_.assign(k_count, 0);
    left_bucket_.assign(k_count, 0);
    at_risk1_.assign(k_count, 0);
  }

  void prepare_pairs() {
    std::vector<double> t(m_);
    for (std::size_t q = 0; q < m_; ++q) t[q] = data_.observation(members_[q]).time;
    std::vector<double> distinct = t;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const std::size_t r_count = distinct.size();
    rank_.resize(m_);
    event_.resize(m_);
    std::vector<std::int64_t> all_at(r_count, 0), events_at(r_count, 0);
    for (std::size_t q = 0; q < m_; ++q) {
      rank_[q] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), t[q]) - distinct.begin());
      event_[q] = data_.observation(members_[q]).status;
      ++all_at[rank_[q]];
      events_at[rank_[q]] += event_[q];
    }
    events_below_.assign(r_count, 0);
    all_above_.assign(r_count, 0);
    std::int64_t acc = 0;
    for (std::size_t r = 0; r < r_count; ++r) {
      events_below_[r] = acc;
      acc += events_at[r];
    }
    acc = 0;
    for (std::size_t r = r_count; r-- > 0;) {
      all_above_[r] = acc;
      acc += all_at[r];
    }
    comparable_ = 0;
    for (std::size_t q = 0; q < m_; ++q) {
      if (event_[q]) comparable_ += all_above_[rank_[q]];
    }
    left_all_ = Fenwick(r_count);
    left_events_ = Fenwick(r_count);
  }

  void reset_left() {
    left_size_ = 0;
    if (kind_.uses_risk_table()) {
      std::fill(d1_.begin(), d1_.end(), 0);
      std::fill(left_bucket_.begin(), left_bucket_.end(), 0);
    } else {
      left_all_.clear();
      left_events_.clear();
      u_ = 0;
    }
  }

  void move_left(std::size_t q) {
    ++left_size_;
    if (kind_.uses_risk_table()) {
      if (bucket_[q] >= 0) {
        const auto b = static_cast<std::size_t>(bucket_[q]);
        ++left_bucket_[b];
        if (event_[q]) ++d1_[b];
      }
      return;
    }
    // Member q leaves G0 (the right child) and joins G1 (the left child).
    const std::size_t r = rank_[q];
    const std::int64_t delta = event_[q];
    const std::int64_t left_ev_below = left_events_.prefix(r);
    const std::int64_t left_all_above = left_size_ - 1 - left_all_.prefix(r + 1);
    const std::int64_t right_ev_below = events_below_[r] - left_ev_below;
    const std::int64_t right_all_above = all_above_[r] - left_all_above;
    u_ += -(left_ev_below - delta * left_all_above) + (delta * right_all_above - right_ev_below);
    left_all_.add(r, 1);
    if (delta) left_events_.add(r, 1);
  }

  std::optional<OrientedC> current_value() {
    if (kind_.uses_risk_table()) {
      std::int64_t running = 0;
      for (std::size_t k = left_bucket_.size(); k-- > 0;) {
        running += left_bucket_[k];
        at_risk1_[k] = running;
      }
      auto v = weighted_logrank_from_counts(d_, at_risk_, d1_, at_risk1_, kind_.weight_exponent());
      if (!v) return std::nullopt;
      return OrientedC{*v, false};
    }
    return oriented_c(comparable_ + u_, comparable_);
  }

  const SurvivalDataset& data_;
  std::span<const std::size_t> members_;
  SplitStatisticKind kind_;
  std::size_t m_;
  std::int64_t min_child_;
  std::vector<std::size_t> order_;
  std::vector<double> values_;
  std::vector<std::uint8_t> event_;
  std::int64_t left_size_ = 0;

  // Log-rank family.
  std::vector<double> times_;
  std::vector<std::int64_t> bucket_, d_, at_risk_, d1_, left_bucket_, at_risk1_;
  std::int64_t events_total_ = 0;

  // Harrell's C via the Gehan statistic.
  std::vector<std::size_t> rank_;
  std::vector<std::int64_t> events_below_, all_above_;
  std::int64_t comparable_ = 0;
  std::int64_t u_ = 0;
  Fenwick left_all_{0}, left_events_{0};
};

TerminalNode make_terminal(const SurvivalDataset& data, std::span<const std::size_t> members,
                           std::span<const double> grid) {
  const auto obs = data.gather(members);
  TerminalNode leaf;
  leaf.chf = nelson_aalen(obs);
  leaf.inbag_count = members.size();
  leaf.uncensored_count = static_cast<std::size_t>(
      std::count_if(obs.begin(), obs.end(), [](const Observation& o) { return o.status == 1; }));
  const auto& knots = leaf.chf.knots();
  const auto& values = leaf.chf.values();
  std::size_t pos = 0;
  double current = leaf.chf.initial_value();
  double score = 0.0;
  for (double t : grid) {
    while (pos < knots.size() && knots[pos] <= t) current = values[pos++];
    score += current;
  }
  leaf.score = score;
  return leaf;
}

}  // namespace

std::optional<SplitCandidate> best_split(const SurvivalDataset& data, std::span<const std::size_t> members,
                                         std::span<const std::size_t> candidate_vars,
                                         const SplitStatisticKind& kind, std::size_t min_child) {
  if (members.empty()) throw EmptyNode("best split: empty node");
  std::optional<SplitCandidate> best;
  if (members.size() < 2) return best;
  NodeScanner scanner(data, members, kind, min_child);
  for (auto j : candidate_vars) {
    if (j >= data.p()) throw ConfigError("best split: variable index out of range");
    scanner.scan(j, best);
  }
  return best;
}

SurvivalTree grow_tree(const SurvivalDataset& data, std::span<const std::size_t> members,
                       const ForestConfig& config, std::span<const double> event_grid, Rng& rng) {
  const auto has_event = [&](std::span<const std::size_t> idx) {
    return std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return data.observation(i).status == 1; });
  };
  if (members.empty() || !has_event(members)) throw TreeDegenerate("bootstrap sample contains no events");

  const std::size_t p = data.p();
  const std::size_t mtry = config.resolved_mtry(p);
  std::vector<std::size_t> vars(p);
  std::iota(vars.begin(), vars.end(), std::size_t{0});

  std::vector<TreeNode> nodes(1);
  std::vector<TerminalNode> terminals;
  struct Pending {
    std::size_t id;
    std::vector<std::size_t> members;
  };
  std::vector<Pending> stack;
  stack.push_back({0, std::vector<std::size_t>(members.begin(), members.end())});

  while (!stack.empty()) {
    Pending node = std::move(stack.back());
    stack.pop_back();

    const auto uncensored = static_cast<std::size_t>(std::count_if(
        node.members.begin(), node.members.end(), [&](std::size_t i) { return data.observation(i).status == 1; }));
    std::optional<SplitCandidate> split;
    if (uncensored > config.nodesize) {
      for (std::size_t k = 0; k < mtry; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, p - 1);
        std::swap(vars[k], vars[pick(rng)]);
      }
      split = best_split(data, node.members, std::span<const std::size_t>(vars.data(), mtry), config.split_kind, config.min_child);
    }

    if (!split) {
      nodes[node.id].terminal = static_cast<std::int32_t>(terminals.size());
      terminals.push_back(make_terminal(data, node.members, event_grid));
      continue;
    }

    std::vector<std::size_t> left, right;
    const auto col = data.column(split->variable);
    for (auto i : node.members) (col[i] <= split->threshold ? left : right).push_back(i);

    const auto left_id = nodes.size();
    nodes.emplace_back();
    nodes.emplace_back();
    nodes[node.id].left = static_cast<std::int32_t>(left_id);
    nodes[node.id].right = static_cast<std::int32_t>(left_id + 1);
    nodes[node.id].split = *split;
    stack.push_back({left_id + 1, std::move(right)});
    stack.push_back({left_id, std::move(left)});
  }
  return SurvivalTree(std::move(nodes), std::move(terminals));
}

Forest train(const SurvivalDataset& data, const ForestConfig& config) {
  config.validate(data.p());
  if (data.n() < 2) throw ConfigError("training needs at least 2 observations");
  if (data.event_count() == 0) throw ConfigError("training data contain no events");

  Forest forest;
  forest.config = config;
  forest.config.mtry = config.resolved_mtry(data.p());
  forest.variable_names = data.variable_names();
  forest.event_grid = event_times(data.observations());
  forest.trees.resize(config.ntree);
  forest.inbag.resize(config.ntree);

  const std::size_t n = data.n();
  parallel_for(config.ntree, config.threads, [&](std::size_t b) {
    Rng rng = make_stream(config.seed, b);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::uint32_t> counts;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      counts.assign(n, 0);
      for (std::size_t k = 0; k < n; ++k) ++counts[draw(rng)];
      for (std::size_t i = 0; i < n && !ok; ++i) ok = counts[i] > 0 && data.observation(i).status == 1;
    }
    if (!ok) throw TreeDegenerate("no bootstrap sample with an event after 100 draws");
    const auto members = expand_inbag(counts);
    forest.trees[b] = grow_tree(data, members, config, forest.event_grid, rng);
    forest.inbag[b] = std::move(counts);
  });
  return forest;
}

double predict_score(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.p()) {
    throw ConfigError("predictor vector has " + std::to_string(x.size()) + " entries, model expects " +
                      std::to_string(forest.p()));
  }
  double sum = 0.0;
  for (const auto& tree : forest.trees) sum += tree.terminal_for(x).score;
  return sum / static_cast<double>(forest.trees.size());
}

std::vector<double> predict_scores(const Forest& forest, const SurvivalDataset& data) {
  if (data.p() != forest.p()) {
    throw ConfigError("data has " + std::to_string(data.p()) + " predictors, model expects " +
                      std::to_string(forest.p()));
  }
  std::vector<double> out(data.n());
  parallel_for(data.n(), forest.config.threads, [&](std::size_t i) {
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += tree.score_for([&](std::size_t j) { return data.value(i, j); });
    out[i] = sum / static_cast<double>(forest.trees.size());
  });
  return out;
}

std::vector<std::optional<double>> predict_scores_oob(const Forest& forest, const SurvivalDataset& data) {
  if (data.p() != forest.p()) throw ConfigError("data dimension does not match the model");
  for (const auto& inbag : forest.inbag) {
    if (inbag.size() != data.n()) throw ConfigError("out-of-bag prediction needs the training data");
  }
  std::vector<std::optional<double>> out(data.n());
  parallel_for(data.n(), forest.config.threads, [&](std::size_t i) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
      if (forest.inbag[b][i] != 0) continue;
      sum += forest.trees[b].score_for([&](std::size_t j) { return data.value(i, j); });
      ++used;
    }
    if (used > 0) out[i] = sum / static_cast<double>(used);
  });
  return out;
}

}  // namespace rsf
