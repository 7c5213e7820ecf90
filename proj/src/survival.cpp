#include "rsf/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsf/error.hpp"

namespace rsf {

SurvivalDataset::SurvivalDataset(std::vector<Observation> observations,
                                 std::vector<std::vector<double>> columns,
                                 std::vector<std::string> variable_names)
    : observations_(std::move(observations)), columns_(std::move(columns)), names_(std::move(variable_names)) {
  if (names_.empty()) {
    for (std::size_t j = 0; j < columns_.size(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  if (names_.size() != columns_.size()) {
    throw ConfigError("dataset: " + std::to_string(names_.size()) + " names for " +
                      std::to_string(columns_.size()) + " columns");
  }
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != observations_.size()) {
      throw ConfigError("dataset: column '" + names_[j] + "' has " + std::to_string(columns_[j].size()) +
                        " rows, expected " + std::to_string(observations_.size()));
    }
    for (double v : columns_[j]) {
      if (!std::isfinite(v)) throw ConfigError("dataset: non-finite value in column '" + names_[j] + "'");
    }
  }
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& o = observations_[i];
    if (!(o.time > 0.0) || !std::isfinite(o.time)) {
      throw ConfigError("dataset: observation " + std::to_string(i) + " has non-positive time");
    }
    if (o.status > 1) throw ConfigError("dataset: observation " + std::to_string(i) + " has status not in {0,1}");
  }
}

std::vector<double> SurvivalDataset::row(std::size_t i) const {
  std::vector<double> r(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) r[j] = columns_[j][i];
  return r;
}

std::size_t SurvivalDataset::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(observations_.begin(), observations_.end(), [](const Observation& o) { return o.status == 1; }));
}

std::vector<Observation> SurvivalDataset::gather(std::span<const std::size_t> indices) const {
  std::vector<Observation> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(observations_[i]);
  return out;
}

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values, double initial_value)
    : knots_(std::move(knots)), values_(std::move(values)), initial_(initial_value) {
  if (knots_.size() != values_.size()) throw ConfigError("step function: knots and values differ in length");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k - 1] < knots_[k])) throw ConfigError("step function: knots must be strictly increasing");
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

namespace {

std::vector<std::size_t> time_order(std::span<const Observation> data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a].time < data[b].time; });
  return order;
}

// Shared pass over distinct times in ascending order. The callback receives
// (time, events, group-1 events, at risk, group-1 at risk) for every distinct
// time with at least one event.
template <typename Fn>
void for_each_event_time(std::span<const Observation> data, std::span<const std::uint8_t> group, Fn&& fn) {
  auto order = time_order(data);
  std::int64_t at_risk = static_cast<std::int64_t>(data.size());
  std::int64_t at_risk1 = 0;
  for (std::size_t i = 0; i < data.size(); ++i) at_risk1 += group.empty() ? 0 : (group[i] != 0);

  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = data[order[pos]].time;
    std::int64_t events = 0, events1 = 0, leaving = 0, leaving1 = 0;
    std::size_t end = pos;
    while (end < order.size() && data[order[end]].time == t) {
      const auto idx = order[end];
      const bool in1 = !group.empty() && group[idx] != 0;
      ++leaving;
      leaving1 += in1;
      if (data[idx].status == 1) {
        ++events;
        events1 += in1;
      }
      ++end;
    }
    if (events > 0) fn(t, events, events1, at_risk, at_risk1);
    at_risk -= leaving;
    at_risk1 -= leaving1;
    pos = end;
  }
}

}  // namespace

RiskTable build_risk_table(std::span<const Observation> data, std::span<const std::uint8_t> group) {
  if (!group.empty() && group.size() != data.size()) {
    throw ConfigError("risk table: group labels do not cover the slice");
  }
  RiskTable table;
  for_each_event_time(data, group, [&](double t, std::int64_t d, std::int64_t d1, std::int64_t y, std::int64_t y1) {
    table.event_times.push_back(t);
    table.d.push_back(d);
    table.d1.push_back(d1);
    table.at_risk.push_back(y);
    table.at_risk1.push_back(y1);
  });
  if (table.size() == 0) throw EmptyRiskTable("risk table: slice contains no events");
  return table;
}

RiskTable build_risk_table(std::span<const Observation> data) { return build_risk_table(data, {}); }

StepFunction nelson_aalen(std::span<const Observation> data) {
  if (data.empty()) throw EmptyNode("nelson-aalen: empty slice");
  std::vector<double> knots, values;
  double chf = 0.0;
  for_each_event_time(data, {}, [&](double t, std::int64_t d, std::int64_t, std::int64_t y, std::int64_t) {
    chf += static_cast<double>(d) / static_cast<double>(y);
    knots.push_back(t);
    values.push_back(chf);
  });
  return StepFunction(std::move(knots), std::move(values), 0.0);
}

StepFunction kaplan_meier(std::span<const Observation> data, KmTarget target) {
  if (data.empty()) throw EmptyNode("kaplan-meier: empty slice");
  std::vector<Observation> flipped;
  std::span<const Observation> use = data;
  if (target == KmTarget::Censorings) {
    flipped.assign(data.begin(), data.end());
    for (auto& o : flipped) o.status = static_cast<std::uint8_t>(1 - o.status);
    use = flipped;
  }
  std::vector<double> knots, values;
  double surv = 1.0;
  for_each_event_time(use, {}, [&](double t, std::int64_t d, std::int64_t, std::int64_t y, std::int64_t) {
    surv *= 1.0 - static_cast<double>(d) / static_cast<double>(y);
    knots.push_back(t);
    values.push_back(surv);
  });
  return StepFunction(std::move(knots), std::move(values), 1.0);
}

}  // namespace rsf
