#include "cli.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rsf/csv.hpp"
#include "rsf/error.hpp"
#include "rsf/evaluation.hpp"
#include "rsf/experiments.hpp"
#include "rsf/forest.hpp"
#include "rsf/serialize.hpp"
#include "rsf/simgen.hpp"

namespace rsf::cli {

namespace fs = std::filesystem;

namespace {

struct ForestFlags {
  std::size_t ntree = 500;
  std::optional<std::size_t> mtry;
  std::size_t nodesize = 3;
  std::size_t min_child = 1;
  std::string splitrule = "logrank";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

void add_forest_flags(CLI::App& app, ForestFlags& f, bool with_rule) {
  app.add_option("--ntree", f.ntree, "Number of trees")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--mtry", f.mtry, "Candidate variables per node (default ceil(sqrt(p)))")->check(CLI::PositiveNumber);
  app.add_option("--nodesize", f.nodesize, "Split only while a node has more uncensored members than this")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--min-child", f.min_child, "Smallest admissible child size in in-bag members")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  if (with_rule) {
    app.add_option("--splitrule", f.splitrule, "logrank | c | gehan | tarone-ware:<w>")->capture_default_str();
  }
}

ScoreTies parse_ties(const std::string& s) { return s == "half" ? ScoreTies::Half : ScoreTies::Strict; }

void check_input(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw LoadError(std::string(what) + ": no such file '" + path + "'");
}

void check_output_file(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw OutputError("output directory '" + parent.string() + "' does not exist");
  }
  if (fs::is_directory(path)) throw OutputError("output path '" + path + "' is a directory");
}

void prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory '" + dir + "'");
}

/// Prediction data must carry the training predictors in the same order.
void check_columns(const Forest& forest, const SurvivalDataset& data) {
  if (data.p() != forest.p()) {
    throw ConfigError("data has " + std::to_string(data.p()) + " predictor columns, model expects " +
                      std::to_string(forest.p()));
  }
  for (std::size_t j = 0; j < data.p(); ++j) {
    if (data.variable_names()[j] != forest.variable_names[j]) {
      throw ConfigError("predictor column " + std::to_string(j + 1) + " is '" + data.variable_names()[j] +
                        "', model expects '" + forest.variable_names[j] + "'");
    }
  }
}

int exit_code_for(const std::exception_ptr& e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const LoadError& x) {
    err << "load error: " << x.what() << '\n';
    return kLoadError;
  } catch (const ConfigError& x) {
    err << "configuration error: " << x.what() << '\n';
    return kConfigError;
  } catch (const DegenerateEvaluation& x) {
    err << "degenerate evaluation: " << x.what() << '\n';
    return kDegenerateEvaluation;
  } catch (const DegenerateSplit& x) {
    err << "degenerate split: " << x.what() << '\n';
    return kSplitError;
  } catch (const NoValidSplit& x) {
    err << "no valid split: " << x.what() << '\n';
    return kSplitError;
  } catch (const TreeDegenerate& x) {
    err << "degenerate tree: " << x.what() << '\n';
    return kSplitError;
  } catch (const EmptyNode& x) {
    err << "empty node: " << x.what() << '\n';
    return kSplitError;
  } catch (const EmptyRiskTable& x) {
    err << "empty risk table: " << x.what() << '\n';
    return kSplitError;
  } catch (const CalibrationError& x) {
    err << "calibration error: " << x.what() << '\n';
    return kCalibrationError;
  } catch (const FormatError& x) {
    err << "model format error: " << x.what() << '\n';
    return kFormatError;
  } catch (const OutputError& x) {
    err << "output error: " << x.what() << '\n';
    return kOutputError;
  } catch (const fs::filesystem_error& x) {
    err << "output error: " << x.what() << '\n';
    return kOutputError;
  } catch (const std::exception& x) {
    err << "internal error: " << x.what() << '\n';
    return kInternal;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random survival forests with log-rank and concordance-based splitting"};
  app.name("rsf");
  app.require_subcommand(1);
  app.allow_extras(false);

  // train
  ForestFlags train_flags;
  std::string train_data, train_out;
  auto* train_cmd = app.add_subcommand("train", "Grow a forest on a CSV data set and save it");
  train_cmd->add_option("data", train_data, "Input CSV (time, status, predictors)")->required();
  train_cmd->add_option("--out", train_out, "Model file to write")->required();
  add_forest_flags(*train_cmd, train_flags, true);
  train_cmd->add_option("--seed", train_flags.seed)->capture_default_str();
  train_cmd->add_option("--threads", train_flags.threads, "Worker threads (0 = all cores)")->capture_default_str();

  // predict
  std::string predict_model, predict_data, predict_out;
  bool predict_oob = false;
  std::size_t predict_threads = 1;
  auto* predict_cmd = app.add_subcommand("predict", "Write one ensemble score per row");
  predict_cmd->add_option("data", predict_data, "Input CSV with the training predictors")->required();
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--out", predict_out, "Score CSV to write")->required();
  predict_cmd->add_flag("--oob", predict_oob, "Out-of-bag scores (data must be the training file)");
  predict_cmd->add_option("--threads", predict_threads)->capture_default_str();

  // evaluate
  std::string eval_data, eval_scores, eval_metric = "harrell", eval_ties = "strict", eval_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Concordance of a score file against observed outcomes");
  evaluate_cmd->add_option("data", eval_data, "CSV with time and status")->required();
  evaluate_cmd->add_option("--scores", eval_scores, "Score CSV from predict")->required();
  evaluate_cmd->add_option("--metric", eval_metric)->check(CLI::IsMember({"harrell", "uno"}))->capture_default_str();
  evaluate_cmd->add_option("--ties", eval_ties, "Credit for tied scores")
      ->check(CLI::IsMember({"strict", "half"}))
      ->capture_default_str();
  evaluate_cmd->add_option("--out", eval_out, "Also write the result as JSON to this file");

  // importance
  std::string imp_model, imp_data, imp_out, imp_ties = "strict";
  std::size_t imp_reps = 5, imp_threads = 1;
  std::uint64_t imp_seed = 1;
  auto* importance_cmd = app.add_subcommand("importance", "Out-of-bag permutation importance");
  importance_cmd->add_option("data", imp_data, "Training CSV of the model")->required();
  importance_cmd->add_option("--model", imp_model, "Model file")->required();
  importance_cmd->add_option("--out", imp_out, "Importance CSV to write")->required();
  importance_cmd->add_option("--reps", imp_reps, "Permutations per variable")->check(CLI::PositiveNumber)->capture_default_str();
  importance_cmd->add_option("--seed", imp_seed)->capture_default_str();
  importance_cmd->add_option("--ties", imp_ties)->check(CLI::IsMember({"strict", "half"}))->capture_default_str();
  importance_cmd->add_option("--threads", imp_threads)->capture_default_str();

  // sim1
  std::string s1_variant = "a", s1_out;
  std::optional<std::size_t> s1_n;
  std::size_t s1_reps = 1000, s1_threads = 1;
  std::vector<double> s1_censoring, s1_thresholds{0.25, 0.75};
  std::uint64_t s1_seed = 1;
  auto* sim1_cmd = app.add_subcommand("sim1", "Root threshold selection study");
  sim1_cmd->add_option("--variant", s1_variant, "a: null predictor on [-3,3]; b: step at a true threshold")
      ->check(CLI::IsMember({"a", "b"}))
      ->capture_default_str();
  sim1_cmd->add_option("--n", s1_n, "Sample size (default 1000 for a, 100 for b)")->check(CLI::PositiveNumber);
  sim1_cmd->add_option("--reps", s1_reps)->check(CLI::PositiveNumber)->capture_default_str();
  sim1_cmd->add_option("--censoring", s1_censoring, "Comma-separated censoring rates (default 0.5 for a, 0.25,0.5,0.75 for b)")
      ->delimiter(',');
  sim1_cmd->add_option("--threshold", s1_thresholds, "Comma-separated true thresholds (variant b)")->delimiter(',');
  sim1_cmd->add_option("--seed", s1_seed)->capture_default_str();
  sim1_cmd->add_option("--threads", s1_threads)->capture_default_str();
  sim1_cmd->add_option("--out", s1_out, "Output directory")->required();

  // sim2
  Study2Config s2;
  Sim2Options s2_opts;
  std::vector<double> s2_censoring{0.5};
  std::string s2_tree, s2_out, s2_ties = "strict";
  auto* sim2_cmd = app.add_subcommand("sim2", "Prediction accuracy study: C-based versus log-rank splitting");
  sim2_cmd->add_option("--n", s2.n, "Learning sample size")->check(CLI::PositiveNumber)->capture_default_str();
  sim2_cmd->add_option("--n-test", s2.n_test, "Test sample size")->check(CLI::PositiveNumber)->capture_default_str();
  sim2_cmd->add_option("--p", s2.p, "Total predictors (4 informative)")->capture_default_str();
  sim2_cmd->add_option("--censoring", s2_censoring, "Comma-separated censoring rates")->delimiter(',');
  sim2_cmd->add_option("--rho", s2.rho, "Within-block predictor correlation")->capture_default_str();
  sim2_cmd->add_flag("--dichotomize", s2.dichotomize, "Replace predictors by I(x > 0) after computing lambda");
  sim2_cmd->add_flag("--noise-shares-factor", s2.noise_shares_factor, "Correlate noise with the informative block");
  sim2_cmd->add_option("--tree-model", s2_tree, "Location tree JSON (default: built-in depth-3 tree)");
  sim2_cmd->add_option("--reps", s2_opts.replications)->check(CLI::PositiveNumber)->capture_default_str();
  sim2_cmd->add_option("--ntree", s2_opts.ntree)->check(CLI::PositiveNumber)->capture_default_str();
  sim2_cmd->add_option("--mtry", s2_opts.mtry)->check(CLI::PositiveNumber);
  sim2_cmd->add_option("--nodesize", s2_opts.nodesize)->check(CLI::PositiveNumber)->capture_default_str();
  sim2_cmd->add_option("--min-child", s2_opts.min_child)->check(CLI::PositiveNumber)->capture_default_str();
  sim2_cmd->add_option("--ties", s2_ties)->check(CLI::IsMember({"strict", "half"}))->capture_default_str();
  sim2_cmd->add_option("--seed", s2.seed)->capture_default_str();
  sim2_cmd->add_option("--threads", s2_opts.threads)->capture_default_str();
  sim2_cmd->add_option("--out", s2_out, "Output directory")->required();

  // generate
  std::string gen_study = "2", gen_tree, gen_out;
  std::size_t gen_rep = 0;
  std::optional<std::size_t> gen_n;
  std::size_t gen_p = 10;
  double gen_censoring = 0.5, gen_threshold = 0.25;
  bool gen_dichotomize = false;
  std::uint64_t gen_seed = 1;
  auto* generate_cmd = app.add_subcommand("generate", "Export one simulated replication as CSV");
  generate_cmd->add_option("--study", gen_study)->check(CLI::IsMember({"1a", "1b", "2"}))->capture_default_str();
  generate_cmd->add_option("--rep", gen_rep, "Replication index")->capture_default_str();
  generate_cmd->add_option("--n", gen_n, "Learning sample size")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--p", gen_p, "Total predictors (study 2)")->capture_default_str();
  generate_cmd->add_option("--censoring", gen_censoring)->capture_default_str();
  generate_cmd->add_option("--threshold", gen_threshold, "True threshold (study 1b)")->capture_default_str();
  generate_cmd->add_flag("--dichotomize", gen_dichotomize);
  generate_cmd->add_option("--tree-model", gen_tree);
  generate_cmd->add_option("--seed", gen_seed)->capture_default_str();
  generate_cmd->add_option("--out", gen_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) {
      check_input(train_data, "data");
      check_output_file(train_out);
      const auto data = load_csv(train_data);
      ForestConfig config;
      config.ntree = train_flags.ntree;
      config.mtry = train_flags.mtry;
      config.nodesize = train_flags.nodesize;
      config.min_child = train_flags.min_child;
      config.split_kind = SplitStatisticKind::parse(train_flags.splitrule);
      config.seed = train_flags.seed;
      config.threads = train_flags.threads;
      config.validate(data.p());
      const auto forest = train(data, config);
      save_forest(forest, train_out);
      out << "trained " << forest.ntree() << " trees on " << data.n() << " observations, " << data.p()
          << " predictors\n";
    } else if (predict_cmd->parsed()) {
      check_input(predict_data, "data");
      check_input(predict_model, "model");
      check_output_file(predict_out);
      auto forest = load_forest(predict_model);
      forest.config.threads = predict_threads;
      const auto data = load_csv(predict_data);
      check_columns(forest, data);
      std::vector<double> scores;
      if (predict_oob) {
        if (data.n() != forest.inbag.front().size()) {
          throw ConfigError("--oob needs the training data: model was trained on " +
                            std::to_string(forest.inbag.front().size()) + " rows, data has " +
                            std::to_string(data.n()));
        }
        for (const auto& s : predict_scores_oob(forest, data)) {
          if (!s) throw ConfigError("an observation is in-bag in every tree and has no out-of-bag score");
          scores.push_back(*s);
        }
      } else {
        scores = predict_scores(forest, data);
      }
      write_scores_csv(scores, predict_out);
    } else if (evaluate_cmd->parsed()) {
      check_input(eval_data, "data");
      check_input(eval_scores, "scores");
      if (!eval_out.empty()) check_output_file(eval_out);
      const auto data = load_csv(eval_data);
      const auto scores = load_scores_csv(eval_scores);
      if (scores.size() != data.n()) {
        throw ConfigError("score file has " + std::to_string(scores.size()) + " rows, data has " +
                          std::to_string(data.n()));
      }
      if (std::adjacent_find(scores.begin(), scores.end(), std::not_equal_to<>()) == scores.end()) {
        throw DegenerateEvaluation(
            "all scores are equal, so no pair can be ordered and the concordance index carries no information");
      }
      const auto ties = parse_ties(eval_ties);
      const auto r = eval_metric == "uno" ? uno_c(data.observations(), scores, ties)
                                          : harrell_c(data.observations(), scores, ties);
      const nlohmann::json j{{"metric", eval_metric},
                             {"ties", eval_ties},
                             {"value", r.value},
                             {"concordant", r.concordant},
                             {"comparable", r.comparable}};
      out << j.dump() << '\n';
      if (!eval_out.empty()) {
        std::ofstream f(eval_out);
        if (!f) throw OutputError("cannot open '" + eval_out + "' for writing");
        f << j.dump(2) << '\n';
      }
    } else if (importance_cmd->parsed()) {
      check_input(imp_data, "data");
      check_input(imp_model, "model");
      check_output_file(imp_out);
      auto forest = load_forest(imp_model);
      const auto data = load_csv(imp_data);
      check_columns(forest, data);
      if (data.n() != forest.inbag.front().size()) {
        throw ConfigError("importance needs the training data of the model");
      }
      ImportanceOptions opts;
      opts.repeats = imp_reps;
      opts.seed = imp_seed;
      opts.ties = parse_ties(imp_ties);
      opts.threads = imp_threads;
      write_importance_csv(permutation_importance(forest, data, opts), imp_out);
    } else if (sim1_cmd->parsed()) {
      prepare_output_dir(s1_out);
      const bool a = s1_variant == "a";
      if (s1_censoring.empty()) s1_censoring = a ? std::vector<double>{0.5} : std::vector<double>{0.25, 0.5, 0.75};
      std::vector<Study1Config> configs;
      for (const double q : s1_censoring) {
        if (a) {
          configs.push_back(Study1Config::variant_a(q));
        } else {
          for (const double t : s1_thresholds) configs.push_back(Study1Config::variant_b(t, q));
        }
      }
      for (auto& c : configs) {
        if (s1_n) c.n = *s1_n;
        c.replications = s1_reps;
        c.seed = s1_seed;
        c.validate();
      }
      std::vector<Sim1Result> results;
      for (const auto& c : configs) results.push_back(run_sim1(c, s1_threads));
      write_sim1_outputs(results, s1_out);
      for (const auto& r : results) {
        out << "variant " << s1_variant;
        if (!a) out << " threshold " << r.config.true_threshold;
        out << " censoring " << r.config.censoring_rate << ": median logrank "
            << quantile(r.thresholds(SplitStatisticKind::log_rank()), 0.5) << ", median c "
            << quantile(r.thresholds(SplitStatisticKind::harrell_c()), 0.5) << '\n';
      }
    } else if (sim2_cmd->parsed()) {
      if (!s2_tree.empty()) check_input(s2_tree, "tree model");
      prepare_output_dir(s2_out);
      if (!s2_tree.empty()) s2.tree_model = LocationTree::load(s2_tree);
      s2_opts.ties = parse_ties(s2_ties);
      std::vector<Sim2Result> results;
      for (const double q : s2_censoring) {
        auto c = s2;
        c.censoring_rate = q;
        c.validate();
        results.push_back(run_sim2(c, s2_opts));
      }
      write_sim2_outputs(results, s2_out);
      for (const auto& r : results) {
        out << "p " << r.config.p << " censoring " << r.config.censoring_rate << ": median difference harrell "
            << r.harrell.median << " [" << r.harrell.ci_low << ", " << r.harrell.ci_high << "], uno " << r.uno.median
            << '\n';
      }
    } else if (generate_cmd->parsed()) {
      if (!gen_tree.empty()) check_input(gen_tree, "tree model");
      prepare_output_dir(gen_out);
      const auto dir = fs::path(gen_out);
      if (gen_study == "2") {
        Study2Config c;
        if (gen_n) c.n = *gen_n;
        c.p = gen_p;
        c.censoring_rate = gen_censoring;
        c.dichotomize = gen_dichotomize;
        c.seed = gen_seed;
        if (!gen_tree.empty()) c.tree_model = LocationTree::load(gen_tree);
        c.validate();
        const auto d = gen_study2(c, gen_rep);
        write_csv(d.learn, (dir / "learn.csv").string());
        write_csv(d.test, (dir / "test.csv").string());
      } else {
        auto c = gen_study == "1a" ? Study1Config::variant_a(gen_censoring)
                                   : Study1Config::variant_b(gen_threshold, gen_censoring);
        if (gen_n) c.n = *gen_n;
        c.seed = gen_seed;
        c.validate();
        write_csv(gen_study1_replication(c, gen_rep, study1_censoring_rate(c)), (dir / "learn.csv").string());
      }
    }
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
  return kOk;
}

}  // namespace rsf::cli
