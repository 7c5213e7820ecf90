#include "rsf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsf/detail/fenwick.hpp"
#include "rsf/error.hpp"
#include "rsf/parallel.hpp"

namespace rsf {

namespace {

// Per-event pair counts: for each event j, the number of observations with a
// strictly larger time (comparable) and twice the concordance credit.
struct EventPairs {
  std::vector<std::size_t> event;
  std::vector<std::int64_t> comparable;
  std::vector<std::int64_t> twice_concordant;
};

EventPairs count_pairs(std::span<const Observation> data, std::span<const double> scores, ScoreTies ties) {
  if (scores.size() != data.size()) throw ConfigError("concordance: scores do not match the observations");
  const std::size_t n = data.size();
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), scores[i]) - distinct.begin());
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].time != data[b].time ? data[a].time > data[b].time : a < b;
  });

  EventPairs out;
  detail::Fenwick seen(distinct.size());
  std::int64_t inserted = 0;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = data[order[pos]].time;
    std::size_t end = pos;
    while (end < n && data[order[end]].time == t) ++end;
    for (std::size_t q = pos; q < end; ++q) {
      const auto j = order[q];
      if (data[j].status != 1 || inserted == 0) continue;
      const std::int64_t lower = seen.prefix(rank[j]);
      const std::int64_t equal = seen.prefix(rank[j] + 1) - lower;
      out.event.push_back(j);
      out.comparable.push_back(inserted);
      out.twice_concordant.push_back(2 * lower + (ties == ScoreTies::Half ? equal : 0));
    }
    for (std::size_t q = pos; q < end; ++q) seen.add(rank[order[q]], 1);
    inserted += static_cast<std::int64_t>(end - pos);
    pos = end;
  }
  return out;
}

}  // namespace

ConcordanceResult harrell_c(std::span<const Observation> data, std::span<const double> scores, ScoreTies ties) {
  const auto pairs = count_pairs(data, scores, ties);
  std::int64_t comparable = 0, twice = 0;
  for (std::size_t k = 0; k < pairs.event.size(); ++k) {
    comparable += pairs.comparable[k];
    twice += pairs.twice_concordant[k];
  }
  if (comparable == 0) throw DegenerateEvaluation("harrell c: no comparable pairs");
  ConcordanceResult r;
  r.concordant = static_cast<double>(twice) / 2.0;
  r.comparable = static_cast<double>(comparable);
  r.value = static_cast<double>(twice) / (2.0 * static_cast<double>(comparable));
  return r;
}

ConcordanceResult uno_c(std::span<const Observation> data, std::span<const double> scores,
                        const StepFunction& censor_survival, ScoreTies ties) {
  const auto pairs = count_pairs(data, scores, ties);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < pairs.event.size(); ++k) {
    const double g = censor_survival.left_limit(data[pairs.event[k]].time);
    if (!(g > 0.0)) continue;
    const double w = 1.0 / (g * g);
    num += w * static_cast<double>(pairs.twice_concordant[k]);
    den += w * static_cast<double>(2 * pairs.comparable[k]);
  }
  if (!(den > 0.0)) throw DegenerateEvaluation("uno c: no comparable pairs with positive censoring weight");
  return ConcordanceResult{num / den, num / 2.0, den / 2.0};
}

ConcordanceResult uno_c(std::span<const Observation> data, std::span<const double> scores, ScoreTies ties) {
  if (data.empty()) throw DegenerateEvaluation("uno c: no observations");
  return uno_c(data, scores, kaplan_meier(data, KmTarget::Censorings), ties);
}

ConcordanceResult harrell_c(std::span<const Observation> data, std::span<const std::optional<double>> scores,
                            ScoreTies ties) {
  if (scores.size() != data.size()) throw ConfigError("concordance: scores do not match the observations");
  std::vector<Observation> kept;
  std::vector<double> kept_scores;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!scores[i]) continue;
    kept.push_back(data[i]);
    kept_scores.push_back(*scores[i]);
  }
  return harrell_c(kept, kept_scores, ties);
}

ImportanceReport permutation_importance(const Forest& forest, const SurvivalDataset& data,
                                        const ImportanceOptions& options) {
  if (data.p() != forest.p()) throw ConfigError("importance: data dimension does not match the model");
  if (options.repeats == 0) throw ConfigError("importance: repeats must be at least 1");
  const auto oob = predict_scores_oob(forest, data);
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  std::vector<std::size_t> rows;
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    if (!oob[i]) continue;
    rows.push_back(i);
    obs.push_back(data.observation(i));
  }
  std::vector<double> baseline_scores;
  for (auto i : rows) baseline_scores.push_back(*oob[i]);
  const double baseline = harrell_c(obs, baseline_scores, options.ties).value;

  ImportanceReport report;
  report.variables = data.variable_names();
  report.raw.assign(p, 0.0);
  parallel_for(p, options.threads, [&](std::size_t j) {
    Rng rng = make_stream(options.seed, j);
    std::vector<std::size_t> perm(n);
    std::vector<double> permuted(rows.size());
    double drop = 0.0;
    for (std::size_t rep = 0; rep < options.repeats; ++rep) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t q = 0; q < rows.size(); ++q) {
        const std::size_t i = rows[q];
        const auto get = [&](std::size_t v) { return v == j ? data.value(perm[i], j) : data.value(i, v); };
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t b = 0; b < forest.trees.size(); ++b) {
          if (forest.inbag[b][i] != 0) continue;
          sum += forest.trees[b].score_for(get);
          ++used;
        }
        permuted[q] = sum / static_cast<double>(used);
      }
      drop += (baseline - harrell_c(obs, permuted, options.ties).value) / static_cast<double>(options.repeats);
    }
    report.raw[j] = drop;
  });

  const double top = p == 0 ? 0.0 : *std::max_element(report.raw.begin(), report.raw.end());
  report.scaled.resize(p);
  for (std::size_t j = 0; j < p; ++j) report.scaled[j] = top > 0.0 ? std::max(report.raw[j], 0.0) / top : 0.0;
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return report.raw[a] > report.raw[b]; });
  report.rank.resize(p);
  for (std::size_t r = 0; r < p; ++r) report.rank[order[r]] = r + 1;
  return report;
}

}  // namespace rsf
