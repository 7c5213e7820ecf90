#include "rsf/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rsf/error.hpp"

namespace rsf {

using nlohmann::json;

namespace {

json tree_to_json(const SurvivalTree& tree, const std::vector<std::uint32_t>& inbag) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back({n.left, n.right, n.terminal, n.split.variable, n.split.threshold, n.split.value,
                     n.split.switched});
  }
  json terminals = json::array();
  for (const auto& t : tree.terminals()) {
    terminals.push_back({{"knots", t.chf.knots()},
                         {"values", t.chf.values()},
                         {"inbag", t.inbag_count},
                         {"uncensored", t.uncensored_count},
                         {"score", t.score}});
  }
  return {{"inbag", inbag}, {"nodes", std::move(nodes)}, {"terminals", std::move(terminals)}};
}

SurvivalTree tree_from_json(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& row : j.at("nodes")) {
    if (!row.is_array() || row.size() != 7) throw FormatError("model: node record must have 7 fields");
    TreeNode n;
    n.left = row[0].get<std::int32_t>();
    n.right = row[1].get<std::int32_t>();
    n.terminal = row[2].get<std::int32_t>();
    n.split.variable = row[3].get<std::size_t>();
    n.split.threshold = row[4].get<double>();
    n.split.value = row[5].get<double>();
    n.split.switched = row[6].get<bool>();
    nodes.push_back(n);
  }
  std::vector<TerminalNode> terminals;
  for (const auto& t : j.at("terminals")) {
    TerminalNode leaf;
    leaf.chf = StepFunction(t.at("knots").get<std::vector<double>>(), t.at("values").get<std::vector<double>>(), 0.0);
    leaf.inbag_count = t.at("inbag").get<std::size_t>();
    leaf.uncensored_count = t.at("uncensored").get<std::size_t>();
    leaf.score = t.at("score").get<double>();
    terminals.push_back(std::move(leaf));
  }
  return SurvivalTree(std::move(nodes), std::move(terminals));
}

}  // namespace

void save_forest(const Forest& forest, std::ostream& out) {
  json config = {{"ntree", forest.config.ntree},
                 {"mtry", forest.config.resolved_mtry(forest.p())},
                 {"nodesize", forest.config.nodesize},
                 {"min_child", forest.config.min_child},
                 {"split_rule", forest.config.split_kind.to_string()},
                 {"seed", forest.config.seed}};
  json doc = {{"config", std::move(config)}, {"variables", forest.variable_names}, {"event_grid", forest.event_grid}};
  json trees = json::array();
  for (std::size_t b = 0; b < forest.trees.size(); ++b) trees.push_back(tree_to_json(forest.trees[b], forest.inbag[b]));
  doc["trees"] = std::move(trees);
  out << kForestMagic << ' ' << kForestFormatVersion << '\n' << doc.dump() << '\n';
  if (!out) throw FormatError("model: write failed");
}

void save_forest(const Forest& forest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("model: cannot open '" + path + "' for writing");
  save_forest(forest, out);
}

Forest load_forest(std::istream& in) {
  std::string magic_line;
  if (!std::getline(in, magic_line)) throw FormatError("model: empty file");
  std::istringstream header(magic_line);
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != kForestMagic) throw FormatError("model: missing RSF-FOREST header");
  if (version != kForestFormatVersion) {
    throw FormatError("model: unsupported format version " + std::to_string(version));
  }
  Forest forest;
  try {
    const json doc = json::parse(in);
    const auto& c = doc.at("config");
    forest.config.ntree = c.at("ntree").get<std::size_t>();
    forest.config.mtry = c.at("mtry").get<std::size_t>();
    forest.config.nodesize = c.at("nodesize").get<std::size_t>();
    forest.config.min_child = c.value("min_child", std::size_t{1});
    forest.config.split_kind = SplitStatisticKind::parse(c.at("split_rule").get<std::string>());
    forest.config.seed = c.at("seed").get<std::uint64_t>();
    forest.variable_names = doc.at("variables").get<std::vector<std::string>>();
    forest.event_grid = doc.at("event_grid").get<std::vector<double>>();
    for (const auto& t : doc.at("trees")) {
      forest.inbag.push_back(t.at("inbag").get<std::vector<std::uint32_t>>());
      forest.trees.push_back(tree_from_json(t));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: malformed body: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  if (forest.trees.size() != forest.config.ntree) throw FormatError("model: tree count does not match ntree");
  for (const auto& tree : forest.trees) {
    for (const auto& n : tree.nodes()) {
      if (!n.is_terminal() && n.split.variable >= forest.p()) throw FormatError("model: split variable out of range");
    }
  }
  return forest;
}

Forest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("model: cannot open '" + path + "'");
  return load_forest(in);
}

}  // namespace rsf
