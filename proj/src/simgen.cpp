#include "rsf/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "rsf/error.hpp"
#include "rsf/forest.hpp"

namespace rsf {

namespace {

// Stream indices reserved for calibration draws, disjoint from replication indices.
constexpr std::uint64_t kCalibrationStream = 0xCA11B000000000ULL;

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double round_tenth(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

SurvivalModel SurvivalModel::standard_exponential() {
  return SurvivalModel{[](Rng& rng) { return std::exponential_distribution<double>(1.0)(rng); }, true};
}

double calibrate_censoring(const SurvivalModel& model, double target_rate, const CalibrationOptions& options) {
  if (!(target_rate > 0.0 && target_rate < 1.0)) throw ConfigError("censoring rate must lie in (0, 1)");
  if (model.unit_exponential) return target_rate / (1.0 - target_rate);
  if (!model.sample) throw ConfigError("calibration: survival model has no sampler");

  // C = E / c with E ~ Exp(1), so an observation is censored iff E < c * T.
  Rng rng(derive_seed(options.seed, kCalibrationStream));
  std::exponential_distribution<double> unit(1.0);
  std::vector<double> t(options.draws), e(options.draws);
  for (std::size_t i = 0; i < options.draws; ++i) {
    t[i] = model.sample(rng);
    e[i] = unit(rng);
  }
  const auto fraction = [&](double c) {
    std::size_t censored = 0;
    for (std::size_t i = 0; i < t.size(); ++i) censored += e[i] < c * t[i];
    return static_cast<double>(censored) / static_cast<double>(t.size());
  };

  double lo = 0.0, hi = 1.0;
  std::size_t iterations = 0;
  while (fraction(hi) < target_rate) {
    lo = hi;
    hi *= 2.0;
    if (++iterations >= options.max_iterations) throw CalibrationError("calibration: could not bracket the rate");
  }
  while (iterations++ < options.max_iterations) {
    const double mid = lo + (hi - lo) / 2.0;
    const double f = fraction(mid);
    if (std::abs(f - target_rate) <= options.tolerance) return mid;
    (f < target_rate ? lo : hi) = mid;
  }
  throw CalibrationError("calibration: bisection did not converge in " + std::to_string(options.max_iterations) +
                         " iterations");
}

Study1Config Study1Config::variant_a(double censoring_rate) {
  Study1Config c;
  c.variant = Variant::A;
  c.n = 1000;
  c.censoring_rate = censoring_rate;
  return c;
}

Study1Config Study1Config::variant_b(double true_threshold, double censoring_rate) {
  Study1Config c;
  c.variant = Variant::B;
  c.n = 100;
  c.true_threshold = true_threshold;
  c.censoring_rate = censoring_rate;
  return c;
}

void Study1Config::validate() const {
  if (n < 2) throw ConfigError("study 1: n must be at least 2");
  if (!(censoring_rate > 0.0 && censoring_rate < 1.0)) throw ConfigError("study 1: censoring rate must lie in (0, 1)");
  if (replications == 0) throw ConfigError("study 1: replications must be at least 1");
}

namespace {

double study1_time(const Study1Config& config, double x, Rng& rng) {
  if (config.variant == Study1Config::Variant::A) return std::exponential_distribution<double>(1.0)(rng);
  const double eps = std::normal_distribution<double>(0.0, 1.0)(rng);
  return std::exp((x > config.true_threshold ? 1.0 : 0.0) + eps);
}

double study1_x(const Study1Config& config, Rng& rng) {
  if (config.variant == Study1Config::Variant::A) return std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

double study1_censoring_rate(const Study1Config& config) {
  config.validate();
  if (config.variant == Study1Config::Variant::A) {
    return calibrate_censoring(SurvivalModel::standard_exponential(), config.censoring_rate);
  }
  SurvivalModel model{[config](Rng& rng) {
                        const double x = study1_x(config, rng);
                        return study1_time(config, x, rng);
                      },
                      false};
  CalibrationOptions options;
  options.seed = config.seed;
  return calibrate_censoring(model, config.censoring_rate, options);
}

SurvivalDataset gen_study1_replication(const Study1Config& config, std::size_t replication, double censoring_rate) {
  Rng rng = make_stream(config.seed, replication);
  std::exponential_distribution<double> censor(censoring_rate);
  std::vector<Observation> obs(config.n);
  std::vector<double> x(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    x[i] = study1_x(config, rng);
    const double t = study1_time(config, x[i], rng);
    const double c = censor(rng);
    obs[i] = Observation{std::min(t, c), static_cast<std::uint8_t>(t <= c ? 1 : 0)};
  }
  return SurvivalDataset(std::move(obs), {std::move(x)}, {"x"});
}

std::vector<SurvivalDataset> gen_study1(const Study1Config& config, std::size_t threads) {
  const double rate = study1_censoring_rate(config);
  std::vector<SurvivalDataset> out(config.replications);
  parallel_for(config.replications, threads,
               [&](std::size_t r) { out[r] = gen_study1_replication(config, r, rate); });
  return out;
}

LocationTree::LocationTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConfigError("location tree: no nodes");
  if (nodes_[0].variable < 0) throw ConfigError("location tree: root must split on a variable");
  const int count = static_cast<int>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  for (int id = 0; id < count; ++id) {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.variable < 0) {
      if (!(n.lambda >= 0.0 && n.lambda <= 1.0)) {
        throw ConfigError("location tree: terminal value of node " + std::to_string(id) + " outside [0, 1]");
      }
      continue;
    }
    if (!std::isfinite(n.threshold)) throw ConfigError("location tree: non-finite threshold");
    for (int child : {n.left, n.right}) {
      if (child <= id || child >= count) {
        throw ConfigError("location tree: node " + std::to_string(id) + " has an invalid child");
      }
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  for (int id = 1; id < count; ++id) {
    if (parents[static_cast<std::size_t>(id)] != 1) {
      throw ConfigError("location tree: node " + std::to_string(id) + " must have exactly one parent");
    }
  }
}

LocationTree LocationTree::default_tree() {
  const double lambdas[8] = {0.0, 0.15, 0.3, 0.45, 0.55, 0.7, 0.85, 1.0};
  std::vector<Node> nodes(15);
  nodes[0] = {0, 0.0, 1, 2, 0.0};
  nodes[1] = {1, 0.0, 3, 4, 0.0};
  nodes[2] = {2, 0.0, 5, 6, 0.0};
  for (int k = 0; k < 4; ++k) nodes[static_cast<std::size_t>(3 + k)] = {3, 0.0, 7 + 2 * k, 8 + 2 * k, 0.0};
  for (int k = 0; k < 8; ++k) nodes[static_cast<std::size_t>(7 + k)] = {-1, 0.0, -1, -1, lambdas[k]};
  return LocationTree(std::move(nodes));
}

LocationTree LocationTree::parse(const std::string& text) {
  using nlohmann::json;
  try {
    const auto doc = json::parse(text);
    if (doc.value("format", std::string()) != "location-tree") throw ConfigError("location tree: bad format tag");
    if (doc.value("version", 0) != 1) throw ConfigError("location tree: unsupported version");
    const auto& list = doc.at("nodes");
    std::vector<Node> nodes(list.size());
    std::vector<bool> seen(list.size(), false);
    for (const auto& item : list) {
      const auto id = item.at("id").get<std::size_t>();
      if (id >= nodes.size() || seen[id]) throw ConfigError("location tree: bad or duplicate node id");
      seen[id] = true;
      Node n;
      if (item.contains("lambda")) {
        n.lambda = item.at("lambda").get<double>();
      } else {
        const int v = item.at("variable").get<int>();
        if (v < 1) throw ConfigError("location tree: variable indices are 1-based");
        n.variable = v - 1;
        n.threshold = item.at("threshold").get<double>();
        n.left = item.at("left").get<int>();
        n.right = item.at("right").get<int>();
      }
      nodes[id] = n;
    }
    return LocationTree(std::move(nodes));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("location tree: ") + e.what());
  }
}

LocationTree LocationTree::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("location tree: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string LocationTree::to_text() const {
  using nlohmann::json;
  json list = json::array();
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    if (n.variable < 0) {
      list.push_back({{"id", id}, {"lambda", n.lambda}});
    } else {
      list.push_back({{"id", id}, {"variable", n.variable + 1}, {"threshold", n.threshold}, {"left", n.left},
                      {"right", n.right}});
    }
  }
  return json{{"format", "location-tree"}, {"version", 1}, {"nodes", std::move(list)}}.dump(2);
}

double LocationTree::lambda(std::span<const double> x) const {
  std::size_t id = 0;
  while (nodes_[id].variable >= 0) {
    const auto& n = nodes_[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(n.variable)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[id].lambda;
}

std::size_t LocationTree::variables_used() const {
  int top = -1;
  for (const auto& n : nodes_) top = std::max(top, n.variable);
  return static_cast<std::size_t>(top + 1);
}

void Study2Config::validate() const {
  if (n < 2 || n_test < 2) throw ConfigError("study 2: sample sizes must be at least 2");
  if (p < informative) throw ConfigError("study 2: p must be at least 4");
  if (!(censoring_rate > 0.0 && censoring_rate < 1.0)) throw ConfigError("study 2: censoring rate must lie in (0, 1)");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("study 2: correlation must lie in [0, 1)");
  if (tree_model.nodes().empty()) throw ConfigError("study 2: missing location tree");
  if (tree_model.variables_used() > informative) {
    throw ConfigError("study 2: location tree may only use x1..x4");
  }
}

namespace {

// Equicorrelated standard normal block: sqrt(rho) * shared + sqrt(1 - rho) * own.
void fill_block(std::vector<std::vector<double>>& columns, std::size_t from, std::size_t to, std::size_t row,
                double shared, double rho, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = std::sqrt(rho), b = std::sqrt(1.0 - rho);
  for (std::size_t j = from; j < to; ++j) columns[j][row] = round_tenth(a * shared + b * normal(rng));
}

struct Sample {
  std::vector<std::vector<double>> columns;
  std::vector<double> lambda;
};

Sample draw_predictors(const Study2Config& config, std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = Study2Config::informative;
  Sample s;
  s.columns.assign(config.p, std::vector<double>(n));
  s.lambda.resize(n);
  double x[Study2Config::informative];
  for (std::size_t i = 0; i < n; ++i) {
    const double shared = normal(rng);
    fill_block(s.columns, 0, k, i, shared, config.rho, rng);
    const double noise_shared = config.noise_shares_factor ? shared : normal(rng);
    fill_block(s.columns, k, config.p, i, noise_shared, config.rho, rng);
    for (std::size_t j = 0; j < k; ++j) x[j] = s.columns[j][i];
    s.lambda[i] = config.tree_model.lambda(std::span<const double>(x, k));
  }
  return s;
}

SurvivalDataset realize(const Study2Config& config, Sample sample, double sigma, double rate, Rng& rng) {
  std::exponential_distribution<double> unit(1.0);
  std::exponential_distribution<double> censor(rate);
  const std::size_t n = sample.lambda.size();
  std::vector<Observation> obs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = std::log(unit(rng));
    const double t = std::exp(sample.lambda[i] + sigma * eps);
    const double c = censor(rng);
    obs[i] = Observation{std::min(t, c), static_cast<std::uint8_t>(t <= c ? 1 : 0)};
  }
  if (config.dichotomize) {
    for (auto& col : sample.columns) {
      for (auto& v : col) v = v > 0.0 ? 1.0 : 0.0;
    }
  }
  return SurvivalDataset(std::move(obs), std::move(sample.columns));
}

}  // namespace

Study2Data gen_study2(const Study2Config& config, std::size_t replication) {
  config.validate();
  Rng rng = make_stream(config.seed, replication);
  Study2Data out;

  auto learn = draw_predictors(config, config.n, rng);
  out.lambda = learn.lambda;
  out.sigma = sample_sd(learn.lambda);

  const double sigma = out.sigma;
  Study2Config informative_only = config;
  informative_only.p = Study2Config::informative;
  SurvivalModel model{[&informative_only, sigma](Rng& r) {
                        auto one = draw_predictors(informative_only, 1, r);
                        const double eps = std::log(std::exponential_distribution<double>(1.0)(r));
                        return std::exp(one.lambda[0] + sigma * eps);
                      },
                      false};
  CalibrationOptions options;
  options.seed = derive_seed(config.seed, replication);
  out.censoring_rate = calibrate_censoring(model, config.censoring_rate, options);

  out.learn = realize(config, std::move(learn), sigma, out.censoring_rate, rng);
  auto test = draw_predictors(config, config.n_test, rng);
  out.test = realize(config, std::move(test), sigma, out.censoring_rate, rng);
  return out;
}

double select_root_threshold(const SurvivalDataset& data, const SplitStatisticKind& kind) {
  if (data.p() != 1) throw ConfigError("threshold selection expects a single predictor");
  std::vector<std::size_t> members(data.n());
  std::iota(members.begin(), members.end(), std::size_t{0});
  const std::size_t var = 0;
  const auto split = best_split(data, members, std::span<const std::size_t>(&var, 1), kind);
  if (!split) throw NoValidSplit("no admissible threshold");
  return split->threshold;
}

}  // namespace rsf
