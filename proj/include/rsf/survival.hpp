#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rsf {

/// One possibly right-censored survival time. status is 1 for an observed
/// event and 0 for a censored time.
struct Observation {
  double time = 0.0;
  std::uint8_t status = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Observations plus an n x p predictor matrix stored column-major.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;

  /// Throws ConfigError if the shapes disagree, a time is not positive and
  /// finite, a status is not 0/1, or a predictor value is not finite.
  SurvivalDataset(std::vector<Observation> observations, std::vector<std::vector<double>> columns,
                  std::vector<std::string> variable_names = {});

  std::size_t n() const { return observations_.size(); }
  std::size_t p() const { return columns_.size(); }

  const std::vector<Observation>& observations() const { return observations_; }
  const Observation& observation(std::size_t i) const { return observations_[i]; }
  std::span<const double> column(std::size_t j) const { return columns_[j]; }
  const std::vector<std::vector<double>>& columns() const { return columns_; }
  double value(std::size_t i, std::size_t j) const { return columns_[j][i]; }
  std::vector<double> row(std::size_t i) const;
  const std::vector<std::string>& variable_names() const { return names_; }

  std::size_t event_count() const;

  /// Observations at the given indices, in index order (repeats allowed).
  std::vector<Observation> gather(std::span<const std::size_t> indices) const;

  friend bool operator==(const SurvivalDataset&, const SurvivalDataset&) = default;

 private:
  std::vector<Observation> observations_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::string> names_;
};

/// Counts at each distinct event time of a two-group partition. Group 1 is
/// the group flagged 1 in the label vector passed to build_risk_table.
struct RiskTable {
  std::vector<double> event_times;
  std::vector<std::int64_t> d;
  std::vector<std::int64_t> at_risk;
  std::vector<std::int64_t> d1;
  std::vector<std::int64_t> at_risk1;

  std::size_t size() const { return event_times.size(); }
  std::int64_t d0(std::size_t k) const { return d[k] - d1[k]; }
  std::int64_t at_risk0(std::size_t k) const { return at_risk[k] - at_risk1[k]; }
};

/// Right-continuous piecewise-constant function of time.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double initial_value);

  /// Value at the largest knot <= t, or the initial value before the first knot.
  double operator()(double t) const;
  /// Value at the largest knot < t.
  double left_limit(double t) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double initial_value() const { return initial_; }

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double initial_ = 0.0;
};

/// Ties: events precede censorings at the same time (both are at risk), and
/// tied events pool into one row. Throws EmptyRiskTable when there is no event.
RiskTable build_risk_table(std::span<const Observation> data, std::span<const std::uint8_t> group);
RiskTable build_risk_table(std::span<const Observation> data);

/// Nelson-Aalen cumulative hazard. Throws EmptyNode on an empty slice; an
/// all-censored slice yields the zero function.
StepFunction nelson_aalen(std::span<const Observation> data);

enum class KmTarget { Events, Censorings };

/// Product-limit survival estimate. With KmTarget::Censorings the status
/// indicator is flipped, giving the censoring survival function.
StepFunction kaplan_meier(std::span<const Observation> data, KmTarget target = KmTarget::Events);

}  // namespace rsf
