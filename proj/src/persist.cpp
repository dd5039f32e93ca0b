#include "screenlab/persist.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "screenlab/error.hpp"

namespace screenlab {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "screenlab-model";

json schema_to_json(const Schema& schema) {
  json columns = json::array();
  for (const auto& c : schema.columns()) {
    json column{{"name", c.name}, {"kind", std::string(to_string(c.kind))}};
    if (!c.group.empty()) {
      column["group"] = c.group;
      column["category"] = c.category;
    }
    columns.push_back(std::move(column));
  }
  return columns;
}

Schema schema_from_json(const json& j) {
  std::vector<Column> columns;
  for (const auto& c : j) {
    Column column;
    column.name = c.at("name").get<std::string>();
    column.kind = parse_column_kind(c.at("kind").get<std::string>());
    column.group = c.value("group", "");
    column.category = c.value("category", "");
    columns.push_back(std::move(column));
  }
  return Schema(std::move(columns));
}

std::string_view to_string(SplitKind kind) {
  switch (kind) {
    case SplitKind::Threshold: return "threshold";
    case SplitKind::Binary: return "binary";
    case SplitKind::Categorical: return "categorical";
  }
  return "?";
}

SplitKind parse_split_kind(const std::string& text) {
  if (text == "threshold") return SplitKind::Threshold;
  if (text == "binary") return SplitKind::Binary;
  if (text == "categorical") return SplitKind::Categorical;
  throw PersistError("unknown split kind '" + text + "'");
}

json tree_params_to_json(const TreeParams& p) {
  json j{{"criterion", p.criterion == Criterion::Gini ? "gini" : "gain_ratio"},
         {"min_leaf", p.min_leaf},
         {"prune", p.prune},
         {"prune_confidence", p.prune_confidence}};
  j["max_depth"] = p.max_depth ? json(*p.max_depth) : json(nullptr);
  return j;
}

TreeParams tree_params_from_json(const json& j) {
  TreeParams p;
  const auto criterion = j.at("criterion").get<std::string>();
  if (criterion != "gini" && criterion != "gain_ratio") throw PersistError("unknown criterion '" + criterion + "'");
  p.criterion = criterion == "gini" ? Criterion::Gini : Criterion::GainRatio;
  p.min_leaf = j.at("min_leaf").get<std::size_t>();
  p.prune = j.at("prune").get<bool>();
  p.prune_confidence = j.at("prune_confidence").get<double>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<std::size_t>();
  return p;
}

json nodes_to_json(const TreeModel& tree) {
  json nodes = json::array();
  for (const auto& node : tree.nodes) {
    json n{{"counts", {node.counts[0], node.counts[1]}},
           {"predicted", std::string(to_string(node.predicted))}};
    if (node.split) {
      const SplitRule& s = *node.split;
      json split{{"kind", std::string(to_string(s.kind))}, {"column", s.column}};
      if (s.kind == SplitKind::Threshold) split["threshold"] = s.threshold;
      if (s.kind == SplitKind::Categorical) {
        split["branch_columns"] = s.branch_columns;
        split["default_branch"] = s.default_branch;
      }
      n["split"] = std::move(split);
      n["children"] = node.children;
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

TreeModel tree_from_json(const json& nodes, const Schema& schema, const TreeParams& params) {
  TreeModel tree;
  tree.schema = schema;
  tree.params = params;
  for (const auto& n : nodes) {
    TreeNode node;
    node.counts = {n.at("counts").at(0).get<std::size_t>(), n.at("counts").at(1).get<std::size_t>()};
    node.predicted = parse_label(n.at("predicted").get<std::string>());
    if (n.contains("split")) {
      const json& s = n.at("split");
      SplitRule rule;
      rule.kind = parse_split_kind(s.at("kind").get<std::string>());
      rule.column = s.at("column").get<std::size_t>();
      if (rule.kind == SplitKind::Threshold) rule.threshold = s.at("threshold").get<double>();
      if (rule.kind == SplitKind::Categorical) {
        rule.branch_columns = s.at("branch_columns").get<std::vector<std::size_t>>();
        rule.default_branch = s.at("default_branch").get<std::size_t>();
      }
      node.split = std::move(rule);
      node.children = n.at("children").get<std::vector<std::size_t>>();
    }
    tree.nodes.push_back(std::move(node));
  }
  // Structural checks so a hand-edited file cannot send prediction out of bounds.
  if (tree.nodes.empty()) throw PersistError("tree has no nodes");
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (node.total() == 0) throw PersistError("tree node " + std::to_string(i) + " has no training rows");
    if (!node.split) continue;
    if (node.children.size() != node.split->branch_count() || node.children.size() < 2) {
      throw PersistError("tree node " + std::to_string(i) + " has a bad child list");
    }
    for (std::size_t child : node.children) {
      if (child <= i || child >= tree.nodes.size()) {
        throw PersistError("tree node " + std::to_string(i) + " references node " + std::to_string(child));
      }
    }
    const auto check_column = [&](std::size_t c) {
      if (c >= schema.size()) throw PersistError("tree node " + std::to_string(i) + " splits on a missing column");
    };
    check_column(node.split->column);
    for (std::size_t c : node.split->branch_columns) check_column(c);
    if (node.split->kind == SplitKind::Categorical &&
        node.split->default_branch >= node.split->branch_columns.size()) {
      throw PersistError("tree node " + std::to_string(i) + " has a bad default branch");
    }
  }
  return tree;
}

json model_body(const TreeModel& tree) {
  return {{"params", tree_params_to_json(tree.params)}, {"nodes", nodes_to_json(tree)}};
}

json model_body(const EnsembleModel& ensemble) {
  const EnsembleParams& p = ensemble.params;
  json params{{"n_trees", p.n_trees}, {"seed", p.seed}, {"bootstrap", p.bootstrap},
              {"base", tree_params_to_json(p.base)}};
  params["mtry"] = p.mtry ? json(*p.mtry) : json(nullptr);
  json trees = json::array();
  for (const auto& tree : ensemble.trees) trees.push_back(nodes_to_json(tree));
  json body{{"params", std::move(params)}, {"trees", std::move(trees)}};
  body["oob_accuracy"] = ensemble.oob_accuracy ? json(*ensemble.oob_accuracy) : json(nullptr);
  return body;
}

json model_body(const MlpModel& mlp) {
  const TrainParams& p = mlp.params;
  json params{{"algorithm", p.algorithm == TrainAlgorithm::Rprop ? "rprop" : "gradient_descent"},
              {"hidden", p.hidden},
              {"threshold", p.threshold},
              {"max_epochs", p.max_epochs},
              {"seed", p.seed},
              {"restarts", p.restarts},
              {"initial_step", p.initial_step},
              {"step_min", p.step_min},
              {"step_max", p.step_max},
              {"eta_plus", p.eta_plus},
              {"eta_minus", p.eta_minus},
              {"learning_rate", p.learning_rate}};
  json layers = json::array();
  for (const auto& layer : mlp.layers) {
    layers.push_back({{"inputs", layer.inputs},
                      {"outputs", layer.outputs},
                      {"weights", layer.weights},
                      {"biases", layer.biases}});
  }
  return {{"params", std::move(params)},
          {"normalization", {{"min", mlp.normalizer.min}, {"max", mlp.normalizer.max}}},
          {"layers", std::move(layers)},
          {"activation", "logistic"},
          {"converged", mlp.converged},
          {"final_error", mlp.final_error},
          {"final_max_gradient", mlp.final_max_gradient},
          {"epochs", mlp.epochs},
          {"init_seed", mlp.init_seed}};
}

MlpModel mlp_from_json(const json& body, const Schema& schema) {
  MlpModel mlp;
  mlp.schema = schema;
  const json& p = body.at("params");
  const auto algorithm = p.at("algorithm").get<std::string>();
  if (algorithm != "rprop" && algorithm != "gradient_descent") {
    throw PersistError("unknown training algorithm '" + algorithm + "'");
  }
  mlp.params.algorithm = algorithm == "rprop" ? TrainAlgorithm::Rprop : TrainAlgorithm::GradientDescent;
  mlp.params.hidden = p.at("hidden").get<std::vector<std::size_t>>();
  mlp.params.threshold = p.at("threshold").get<double>();
  mlp.params.max_epochs = p.at("max_epochs").get<std::size_t>();
  mlp.params.seed = p.at("seed").get<std::uint64_t>();
  mlp.params.restarts = p.at("restarts").get<std::size_t>();
  mlp.params.initial_step = p.at("initial_step").get<double>();
  mlp.params.step_min = p.at("step_min").get<double>();
  mlp.params.step_max = p.at("step_max").get<double>();
  mlp.params.eta_plus = p.at("eta_plus").get<double>();
  mlp.params.eta_minus = p.at("eta_minus").get<double>();
  mlp.params.learning_rate = p.at("learning_rate").get<double>();
  mlp.normalizer.min = body.at("normalization").at("min").get<std::vector<double>>();
  mlp.normalizer.max = body.at("normalization").at("max").get<std::vector<double>>();
  if (body.value("activation", "logistic") != "logistic") throw PersistError("only logistic activation is supported");
  for (const auto& l : body.at("layers")) {
    Layer layer;
    layer.inputs = l.at("inputs").get<std::size_t>();
    layer.outputs = l.at("outputs").get<std::size_t>();
    layer.weights = l.at("weights").get<std::vector<double>>();
    layer.biases = l.at("biases").get<std::vector<double>>();
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.biases.size() != layer.outputs) {
      throw PersistError("network layer shape does not match its weights");
    }
    mlp.layers.push_back(std::move(layer));
  }
  if (mlp.layers.empty() || mlp.layers.front().inputs != schema.size() ||
      mlp.normalizer.min.size() != schema.size() || mlp.normalizer.max.size() != schema.size() ||
      mlp.layers.back().outputs != 1) {
    throw PersistError("network shape does not match the schema");
  }
  for (std::size_t l = 1; l < mlp.layers.size(); ++l) {
    if (mlp.layers[l].inputs != mlp.layers[l - 1].outputs) throw PersistError("network layers do not chain");
  }
  mlp.converged = body.at("converged").get<bool>();
  mlp.final_error = body.at("final_error").get<double>();
  mlp.final_max_gradient = body.at("final_max_gradient").get<double>();
  mlp.epochs = body.at("epochs").get<std::size_t>();
  mlp.init_seed = body.at("init_seed").get<std::uint64_t>();
  return mlp;
}

}  // namespace

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string serialize(const AnyModel& model, const ModelMetadata& metadata) {
  json doc;
  doc["format"] = kFormatTag;
  doc["format_version"] = kModelFormatVersion;
  doc["model_kind"] = std::string(to_string(kind_of(model)));
  doc["schema"] = schema_to_json(schema_of(model));
  doc["metadata"] = metadata;
  doc["model"] = std::visit([](const auto& m) { return model_body(m); }, model);
  return doc.dump(1) + "\n";
}

void save(const AnyModel& model, const std::string& path, const ModelMetadata& metadata) {
  const std::string text = serialize(model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PersistError("cannot write model file " + path);
  out << text;
  out.flush();
  if (!out) throw PersistError("failed writing model file " + path);
}

LoadedModel deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& error) {
    throw PersistError(std::string("model file parse error: ") + error.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormatTag) {
      throw PersistError("not a screenlab model file");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw PersistError("unsupported model format_version " + std::to_string(version) +
                         " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
    }
    const std::string kind_text = doc.at("model_kind").get<std::string>();
    ModelKind kind;
    try {
      kind = parse_model_kind(kind_text);
    } catch (const ValidationError&) {
      throw PersistError("unknown model kind '" + kind_text + "'");
    }
    const Schema schema = schema_from_json(doc.at("schema"));
    const json& body = doc.at("model");

    LoadedModel loaded{TreeModel{}, {}, fnv1a_hex(text)};
    loaded.metadata = doc.at("metadata").get<ModelMetadata>();
    switch (kind) {
      case ModelKind::Cart:
      case ModelKind::C45:
        loaded.model = tree_from_json(body.at("nodes"), schema, tree_params_from_json(body.at("params")));
        break;
      case ModelKind::BaggedCart:
      case ModelKind::RandomForest: {
        EnsembleModel ensemble;
        ensemble.schema = schema;
        const json& p = body.at("params");
        ensemble.params.n_trees = p.at("n_trees").get<std::size_t>();
        ensemble.params.seed = p.at("seed").get<std::uint64_t>();
        ensemble.params.bootstrap = p.at("bootstrap").get<bool>();
        ensemble.params.base = tree_params_from_json(p.at("base"));
        if (!p.at("mtry").is_null()) ensemble.params.mtry = p.at("mtry").get<std::size_t>();
        for (const auto& nodes : body.at("trees")) {
          ensemble.trees.push_back(tree_from_json(nodes, schema, ensemble.params.base));
        }
        if (ensemble.trees.size() != ensemble.params.n_trees || ensemble.trees.empty()) {
          throw PersistError("ensemble tree count does not match n_trees");
        }
        if (!body.at("oob_accuracy").is_null()) ensemble.oob_accuracy = body.at("oob_accuracy").get<double>();
        loaded.model = std::move(ensemble);
        break;
      }
      case ModelKind::Mlp:
        loaded.model = mlp_from_json(body, schema);
        break;
    }
    if (to_string(kind_of(loaded.model)) != kind_text) {
      throw PersistError("model_kind '" + kind_text + "' disagrees with the stored parameters");
    }
    return loaded;
  } catch (const json::exception& error) {
    throw PersistError(std::string("malformed model file: ") + error.what());
  } catch (const ValidationError& error) {
    throw PersistError(std::string("invalid model file: ") + error.what());
  }
}

LoadedModel load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistError("cannot open model file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

LoadedModel load(const std::string& path, const Schema& expected) {
  LoadedModel loaded = load(path);
  require_same_schema(expected, loaded.schema());
  return loaded;
}

}  // namespace screenlab
