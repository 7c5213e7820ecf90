#include "rsf/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rsf/error.hpp"

namespace rsf {

SplitStatisticKind SplitStatisticKind::weighted_log_rank(double exponent) {
  if (!(exponent >= 0.0 && exponent <= 1.0)) throw ConfigError("tarone-ware exponent must lie in [0, 1]");
  return {Type::WeightedLogRank, exponent};
}

SplitStatisticKind SplitStatisticKind::parse(const std::string& text) {
  if (text == "logrank") return log_rank();
  if (text == "c" || text == "C") return harrell_c();
  if (text == "gehan") return gehan();
  const std::string prefix = "tarone-ware:";
  if (text.rfind(prefix, 0) == 0) {
    const auto arg = text.substr(prefix.size());
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) throw ConfigError("bad tarone-ware exponent '" + arg + "'");
    return weighted_log_rank(w);
  }
  throw ConfigError("unknown split rule '" + text + "' (expected logrank, c, gehan or tarone-ware:<w>)");
}

std::string SplitStatisticKind::to_string() const {
  switch (type) {
    case Type::LogRank: return "logrank";
    case Type::HarrellC: return "c";
    case Type::Gehan: return "gehan";
    case Type::WeightedLogRank: {
      std::string s = std::to_string(exponent);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return "tarone-ware:" + s;
    }
  }
  return "logrank";
}

std::optional<double> weighted_logrank_from_counts(std::span<const std::int64_t> d,
                                                   std::span<const std::int64_t> at_risk,
                                                   std::span<const std::int64_t> d1,
                                                   std::span<const std::int64_t> at_risk1, double exponent) {
  if (d.empty()) return std::nullopt;
  if (at_risk1[0] == 0 || at_risk1[0] == at_risk[0]) return std::nullopt;
  double numerator = 0.0;
  double variance = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double y = static_cast<double>(at_risk[k]);
    const double y1 = static_cast<double>(at_risk1[k]);
    const double y0 = y - y1;
    const double dk = static_cast<double>(d[k]);
    const double weight = exponent == 0.0 ? 1.0 : std::pow(y, exponent);
    numerator += weight * (static_cast<double>(d1[k]) - y1 * dk / y);
    if (at_risk[k] > 1) {
      variance += weight * weight * y1 * y0 * dk * (y - dk) / (y * y * (y - 1.0));
    }
  }
  if (!(variance > 0.0)) return std::nullopt;
  return numerator * numerator / variance;
}

SplitEvaluation weighted_logrank_statistic(const RiskTable& table, double exponent) {
  if (!(exponent >= 0.0 && exponent <= 1.0)) throw ConfigError("tarone-ware exponent must lie in [0, 1]");
  auto value = weighted_logrank_from_counts(table.d, table.at_risk, table.d1, table.at_risk1, exponent);
  if (!value) throw DegenerateSplit("log-rank: one group empty or zero variance");
  return SplitEvaluation{*value, false, 0, 0, 0};
}

SplitEvaluation logrank_statistic(const RiskTable& table) { return weighted_logrank_statistic(table, 0.0); }

OrientedC oriented_c(std::int64_t twice_numerator, std::int64_t comparable) {
  const double denom = 2.0 * static_cast<double>(comparable);
  if (twice_numerator < comparable) {
    return {static_cast<double>(2 * comparable - twice_numerator) / denom, true};
  }
  return {static_cast<double>(twice_numerator) / denom, false};
}

SplitEvaluation harrell_c_split(std::span<const Observation> data, std::span<const std::uint8_t> group) {
  if (group.size() != data.size()) throw ConfigError("harrell c split: labels do not cover the slice");
  std::int64_t concordant = 0, n0 = 0, n1 = 0, cross = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (i == j || data[j].status != 1 || !(data[i].time > data[j].time)) continue;
      if (group[i] == group[j]) {
        (group[i] ? n1 : n0) += 1;
      } else {
        ++cross;
        if (group[i] == 0) ++concordant;
      }
    }
  }
  const std::int64_t comparable = cross + n0 + n1;
  if (comparable == 0) throw DegenerateSplit("harrell c split: no comparable pairs");
  const auto c = oriented_c(2 * concordant + n0 + n1, comparable);
  return SplitEvaluation{c.value, c.switched, cross, n0, n1};
}

GehanResult gehan_u(std::span<const Observation> data, std::span<const std::uint8_t> group) {
  if (group.size() != data.size()) throw ConfigError("gehan: labels do not cover the slice");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a].time > data[b].time; });

  // Walk distinct times from largest to smallest; `later[g]` counts members
  // of group g with strictly larger time than the current block.
  GehanResult r;
  std::int64_t later[2] = {0, 0};
  std::int64_t a = 0, b = 0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = data[order[pos]].time;
    std::size_t end = pos;
    std::int64_t block[2] = {0, 0};
    while (end < order.size() && data[order[end]].time == t) {
      const auto idx = order[end];
      const int g = group[idx] ? 1 : 0;
      ++block[g];
      if (data[idx].status == 1) {
        if (g == 1) {
          a += later[0];
          r.pairs1 += later[1];
        } else {
          b += later[1];
          r.pairs0 += later[0];
        }
      }
      ++end;
    }
    later[0] += block[0];
    later[1] += block[1];
    pos = end;
  }
  r.concordant_cross = a;
  r.cross_pairs = a + b;
  r.u = a - b;
  return r;
}

SplitEvaluation evaluate_split(const SplitStatisticKind& kind, std::span<const Observation> data,
                               std::span<const std::uint8_t> group) {
  if (group.size() != data.size()) throw ConfigError("evaluate split: labels do not cover the slice");
  if (kind.type == SplitStatisticKind::Type::HarrellC) {
    const auto g = gehan_u(data, group);
    const std::int64_t comparable = g.cross_pairs + g.pairs0 + g.pairs1;
    if (comparable == 0) throw DegenerateSplit("harrell c split: no comparable pairs");
    // Twice the C numerator equals U + N + N0 + N1.
    const auto c = oriented_c(g.u + comparable, comparable);
    return SplitEvaluation{c.value, c.switched, g.cross_pairs, g.pairs0, g.pairs1};
  }
  RiskTable table;
  try {
    table = build_risk_table(data, group);
  } catch (const EmptyRiskTable&) {
    throw DegenerateSplit("log-rank: node has no events");
  }
  auto eval = weighted_logrank_statistic(table, kind.weight_exponent());
  if (kind.type == SplitStatisticKind::Type::Gehan) {
    const auto g = gehan_u(data, group);
    eval.cross_pairs = g.cross_pairs;
    eval.pairs0 = g.pairs0;
    eval.pairs1 = g.pairs1;
  }
  return eval;
}

}  // namespace rsf
