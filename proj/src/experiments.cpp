#include "rsf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "rsf/csv.hpp"
#include "rsf/error.hpp"
#include "rsf/forest.hpp"

namespace rsf {

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values, std::uint64_t seed, std::size_t resamples) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  s.median = quantile(v, 0.5);
  s.q1 = quantile(v, 0.25);
  s.q3 = quantile(v, 0.75);
  Rng rng(derive_seed(seed, 0xB007));
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> medians(resamples), draw(v.size());
  for (auto& m : medians) {
    for (auto& d : draw) d = v[pick(rng)];
    m = quantile(draw, 0.5);
  }
  s.ci_low = quantile(medians, 0.025);
  s.ci_high = quantile(medians, 0.975);
  return s;
}

double silverman_bandwidth(std::span<const double> values) {
  if (values.size() < 2) return 1.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> v(values.begin(), values.end());
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : (std::abs(v.front()) > 0.0 ? std::abs(v.front()) : 1.0);
  return 0.9 * spread * std::pow(n, -0.2);
}

DensityTable kernel_density(const std::vector<std::vector<double>>& samples, std::size_t points) {
  DensityTable table;
  double lo = INFINITY, hi = -INFINITY, h_max = 0.0;
  for (const auto& s : samples) {
    const double h = silverman_bandwidth(s);
    table.bandwidth.push_back(h);
    h_max = std::max(h_max, h);
    for (double x : s) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (samples.empty() || !(lo <= hi) || points < 2) return table;
  lo -= 3.0 * h_max;
  hi += 3.0 * h_max;
  table.grid.resize(points);
  for (std::size_t g = 0; g < points; ++g) {
    table.grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1);
  }
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const double h = table.bandwidth[k];
    std::vector<double> dens(points, 0.0);
    for (std::size_t g = 0; g < points; ++g) {
      double sum = 0.0;
      for (double x : s) {
        const double z = (table.grid[g] - x) / h;
        sum += std::exp(-0.5 * z * z);
      }
      dens[g] = s.empty() ? 0.0 : norm * sum / (static_cast<double>(s.size()) * h);
    }
    table.density.push_back(std::move(dens));
  }
  return table;
}

std::vector<double> Sim1Result::thresholds(const SplitStatisticKind& kind) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.kind == kind) out.push_back(r.threshold);
  }
  return out;
}

double Sim1Result::outer_fraction(const SplitStatisticKind& kind, double lo, double hi, double tail) const {
  const auto t = thresholds(kind);
  if (t.empty()) return 0.0;
  const double width = hi - lo;
  const auto outer = std::count_if(t.begin(), t.end(), [&](double x) {
    return x < lo + tail * width || x > hi - tail * width;
  });
  return static_cast<double>(outer) / static_cast<double>(t.size());
}

Sim1Result run_sim1(const Study1Config& config, std::size_t threads, std::vector<SplitStatisticKind> criteria) {
  config.validate();
  if (criteria.empty()) throw ConfigError("sim1: no split criteria");
  Sim1Result result;
  result.config = config;
  result.criteria = criteria;
  result.censoring_parameter = study1_censoring_rate(config);

  const std::size_t reps = config.replications;
  const std::size_t kinds = criteria.size();
  std::vector<double> chosen(reps * kinds);
  std::vector<double> censored(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto data = gen_study1_replication(config, r, result.censoring_parameter);
    censored[r] = 1.0 - static_cast<double>(data.event_count()) / static_cast<double>(data.n());
    for (std::size_t k = 0; k < kinds; ++k) chosen[r * kinds + k] = select_root_threshold(data, criteria[k]);
  });
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t k = 0; k < kinds; ++k) result.records.push_back({r, criteria[k], chosen[r * kinds + k]});
  }
  result.observed_censoring = std::accumulate(censored.begin(), censored.end(), 0.0) / static_cast<double>(reps);
  std::vector<std::vector<double>> samples;
  for (const auto& k : criteria) samples.push_back(result.thresholds(k));
  result.density = kernel_density(samples);
  return result;
}

std::vector<double> Sim2Result::harrell_differences() const {
  std::vector<double> d;
  for (const auto& r : records) d.push_back(r.harrell_difference());
  return d;
}

std::vector<double> Sim2Result::uno_differences() const {
  std::vector<double> d;
  for (const auto& r : records) d.push_back(r.uno_difference());
  return d;
}

Sim2Result run_sim2(const Study2Config& config, const Sim2Options& options) {
  config.validate();
  if (options.replications == 0) throw ConfigError("sim2: replications must be at least 1");
  Sim2Result result;
  result.config = config;
  result.options = options;
  result.records.resize(options.replications);

  parallel_for(options.replications, options.threads, [&](std::size_t r) {
    const auto data = gen_study2(config, r);
    ForestConfig fc;
    fc.ntree = options.ntree;
    fc.nodesize = options.nodesize;
    fc.min_child = options.min_child;
    fc.mtry = options.mtry;
    fc.seed = derive_seed(config.seed, 0x5EED0000ULL + r);
    fc.threads = 1;

    const auto& test_obs = data.test.observations();
    const auto censor_survival = kaplan_meier(test_obs, KmTarget::Censorings);
    auto evaluate = [&](const SplitStatisticKind& kind, double& harrell, double& uno) {
      fc.split_kind = kind;
      const auto forest = train(data.learn, fc);
      const auto scores = predict_scores(forest, data.test);
      harrell = harrell_c(test_obs, scores, options.ties).value;
      uno = uno_c(test_obs, scores, censor_survival, options.ties).value;
    };
    auto& rec = result.records[r];
    rec.replication = r;
    evaluate(SplitStatisticKind::harrell_c(), rec.harrell_csplit, rec.uno_csplit);
    evaluate(SplitStatisticKind::log_rank(), rec.harrell_logrank, rec.uno_logrank);
    rec.learn_censoring = 1.0 - static_cast<double>(data.learn.event_count()) / static_cast<double>(data.learn.n());
    rec.test_censoring = 1.0 - static_cast<double>(data.test.event_count()) / static_cast<double>(data.test.n());
  });

  const auto dh = result.harrell_differences();
  const auto du = result.uno_differences();
  result.harrell = summarize(dh, derive_seed(config.seed, 1));
  result.uno = summarize(du, derive_seed(config.seed, 2));
  return result;
}

namespace {

std::ofstream open_in(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw OutputError("cannot open '" + path + "' for writing");
  return out;
}

const char* variant_name(Study1Config::Variant v) { return v == Study1Config::Variant::A ? "a" : "b"; }

void write_summary_row(std::ostream& out, const Summary& s) {
  out << s.count << ',' << format_real(s.median) << ',' << format_real(s.q1) << ',' << format_real(s.q3) << ','
      << format_real(s.ci_low) << ',' << format_real(s.ci_high);
}

}  // namespace

void write_sim1_outputs(std::span<const Sim1Result> results, const std::string& dir) {
  auto records = open_in(dir, "sim1_records.csv");
  records << "variant,n,true_threshold,censoring,replication,criterion,threshold\n";
  auto summary = open_in(dir, "sim1_summary.csv");
  summary << "variant,true_threshold,censoring,criterion,count,median,q1,q3,ci_low,ci_high,outer20_fraction\n";
  auto density = open_in(dir, "sim1_density.csv");
  density << "# kernel=gaussian bandwidth=silverman(0.9*min(sd,iqr/1.34)*n^-0.2) points=512\n";
  density << "variant,true_threshold,censoring,criterion,bandwidth,x,density\n";
  nlohmann::json cells = nlohmann::json::array();

  for (const auto& res : results) {
    const auto& c = res.config;
    const std::string cell = std::string(variant_name(c.variant)) + ',' +
                             (c.variant == Study1Config::Variant::B ? format_real(c.true_threshold) : std::string()) +
                             ',' + format_real(c.censoring_rate);
    for (const auto& r : res.records) {
      records << variant_name(c.variant) << ',' << c.n << ','
              << (c.variant == Study1Config::Variant::B ? format_real(c.true_threshold) : std::string()) << ','
              << format_real(c.censoring_rate) << ',' << r.replication << ',' << r.kind.to_string() << ','
              << format_real(r.threshold) << '\n';
    }
    const double lo = c.variant == Study1Config::Variant::A ? -3.0 : 0.0;
    const double hi = c.variant == Study1Config::Variant::A ? 3.0 : 1.0;
    std::vector<double> first;
    for (std::size_t k = 0; k < res.criteria.size(); ++k) {
      const auto t = res.thresholds(res.criteria[k]);
      summary << cell << ',' << res.criteria[k].to_string() << ',';
      write_summary_row(summary, summarize(t, derive_seed(c.seed, 10 + k)));
      summary << ',' << format_real(res.outer_fraction(res.criteria[k], lo, hi)) << '\n';
      if (k == 0) {
        first = t;
      } else {
        std::vector<double> diff(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) diff[i] = t[i] - first[i];
        summary << cell << ',' << res.criteria[k].to_string() << "-minus-" << res.criteria[0].to_string() << ',';
        write_summary_row(summary, summarize(diff, derive_seed(c.seed, 100 + k)));
        summary << ",\n";
      }
    }
    nlohmann::json bw = nlohmann::json::object();
    for (std::size_t k = 0; k < res.criteria.size() && k < res.density.density.size(); ++k) {
      bw[res.criteria[k].to_string()] = res.density.bandwidth[k];
      for (std::size_t g = 0; g < res.density.grid.size(); ++g) {
        density << cell << ',' << res.criteria[k].to_string() << ',' << format_real(res.density.bandwidth[k]) << ','
                << format_real(res.density.grid[g]) << ',' << format_real(res.density.density[k][g]) << '\n';
      }
    }
    cells.push_back({{"variant", variant_name(c.variant)},
                     {"n", c.n},
                     {"true_threshold", c.true_threshold},
                     {"censoring_target", c.censoring_rate},
                     {"censoring_parameter", res.censoring_parameter},
                     {"observed_censoring", res.observed_censoring},
                     {"replications", c.replications},
                     {"seed", c.seed},
                     {"kde_bandwidth", bw}});
  }
  auto sidecar = open_in(dir, "sim1_config.json");
  sidecar << nlohmann::json{{"experiment", "sim1"}, {"cells", cells}}.dump(2) << '\n';
}

void write_sim2_outputs(std::span<const Sim2Result> results, const std::string& dir) {
  auto records = open_in(dir, "sim2_records.csv");
  records << "n,p,censoring,dichotomize,replication,harrell_csplit,harrell_logrank,harrell_diff,"
             "uno_csplit,uno_logrank,uno_diff,learn_censoring,test_censoring\n";
  auto summary = open_in(dir, "sim2_summary.csv");
  summary << "n,p,censoring,dichotomize,metric,count,median,q1,q3,ci_low,ci_high\n";
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& res : results) {
    const auto& c = res.config;
    const std::string cell = std::to_string(c.n) + ',' + std::to_string(c.p) + ',' + format_real(c.censoring_rate) +
                             ',' + (c.dichotomize ? "1" : "0");
    for (const auto& r : res.records) {
      records << cell << ',' << r.replication << ',' << format_real(r.harrell_csplit) << ','
              << format_real(r.harrell_logrank) << ',' << format_real(r.harrell_difference()) << ','
              << format_real(r.uno_csplit) << ',' << format_real(r.uno_logrank) << ','
              << format_real(r.uno_difference()) << ',' << format_real(r.learn_censoring) << ','
              << format_real(r.test_censoring) << '\n';
    }
    summary << cell << ",harrell,";
    write_summary_row(summary, res.harrell);
    summary << '\n' << cell << ",uno,";
    write_summary_row(summary, res.uno);
    summary << '\n';
    cells.push_back({{"n", c.n},
                     {"p", c.p},
                     {"censoring_target", c.censoring_rate},
                     {"dichotomize", c.dichotomize},
                     {"rho", c.rho},
                     {"n_test", c.n_test},
                     {"noise_shares_factor", c.noise_shares_factor},
                     {"seed", c.seed},
                     {"replications", res.options.replications},
                     {"ntree", res.options.ntree},
                     {"nodesize", res.options.nodesize},
                     {"min_child", res.options.min_child},
                     {"mtry", res.options.mtry ? nlohmann::json(*res.options.mtry) : nlohmann::json("sqrt(p)")},
                     {"score_ties", res.options.ties == ScoreTies::Half ? "half" : "strict"},
                     {"bootstrap_resamples", 2000},
                     {"location_tree", nlohmann::json::parse(c.tree_model.to_text())}});
  }
  auto sidecar = open_in(dir, "sim2_config.json");
  sidecar << nlohmann::json{{"experiment", "sim2"}, {"cells", cells}}.dump(2) << '\n';
}

}  // namespace rsf
