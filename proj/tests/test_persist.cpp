#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "screenlab/error.hpp"
#include "screenlab/persist.hpp"
#include "support.hpp"

using namespace screenlab;
using screenlab::testing::oracle_data;

namespace {

ModelSpec quick_spec(ModelKind kind) {
  ModelSpec spec = ModelSpec::defaults(kind);
  spec.n_trees = 15;
  spec.mlp.max_epochs = 400;
  return spec;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const std::size_t at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("screenlab_persist_" + name)).string();
}

const ModelKind kAllKinds[] = {ModelKind::Cart, ModelKind::C45, ModelKind::BaggedCart, ModelKind::RandomForest,
                               ModelKind::Mlp};

}  // namespace

TEST_CASE("round trip keeps every prediction bit for bit") {
  const FeatureMatrix probe = oracle_data(100, 999);
  for (std::uint64_t run = 0; run < 10; ++run) {
    // Label noise makes the trees non-trivial.
    FeatureMatrix train = oracle_data(150, run + 1);
    Rng noise(run);
    for (auto& label : train.labels) {
      if (noise.bernoulli(0.1)) label = other(label);
    }
    for (ModelKind kind : kAllKinds) {
      CAPTURE(run);
      CAPTURE(to_string(kind));
      const AnyModel model = train_model(quick_spec(kind), train, 100 + run);
      const std::string text = serialize(model, {{"seed", std::to_string(100 + run)}});
      const LoadedModel loaded = deserialize(text);
      CHECK(kind_of(loaded.model) == kind);
      CHECK(loaded.metadata.at("seed") == std::to_string(100 + run));
      CHECK(loaded.schema() == schema_of(model));
      CHECK(serialize(loaded.model, loaded.metadata) == text);
      for (std::size_t r = 0; r < probe.rows(); ++r) {
        const Prediction a = predict(model, probe.row(r));
        const Prediction b = predict(loaded.model, probe.row(r));
        CHECK(a.label == b.label);
        CHECK(same_bits(a.score, b.score));
      }
    }
  }
}

TEST_CASE("structures survive the round trip exactly") {
  const FeatureMatrix train = oracle_data(200, 3);
  const AnyModel tree = train_model(quick_spec(ModelKind::C45), train, 1);
  CHECK(std::get<TreeModel>(deserialize(serialize(tree)).model) == std::get<TreeModel>(tree));
  const AnyModel forest = train_model(quick_spec(ModelKind::RandomForest), train, 1);
  const auto& original = std::get<EnsembleModel>(forest);
  const LoadedModel forest_back = deserialize(serialize(forest));
  const auto& back = std::get<EnsembleModel>(forest_back.model);
  CHECK(back.trees == original.trees);
  CHECK(back.oob_accuracy == original.oob_accuracy);
  CHECK(back.params.mtry == original.params.mtry);
  const AnyModel net = train_model(quick_spec(ModelKind::Mlp), train, 1);
  const auto& mlp = std::get<MlpModel>(net);
  const LoadedModel net_back = deserialize(serialize(net));
  const auto& mlp_back = std::get<MlpModel>(net_back.model);
  CHECK(mlp_back.layers == mlp.layers);
  CHECK(mlp_back.normalizer == mlp.normalizer);
  CHECK(mlp_back.converged == mlp.converged);
  CHECK(mlp_back.epochs == mlp.epochs);
}

TEST_CASE("document header and identity") {
  const AnyModel model = train_model(quick_spec(ModelKind::Cart), oracle_data(80, 4), 2);
  const std::string text = serialize(model);
  CHECK(text.find("\"format\": \"screenlab-model\"") != std::string::npos);
  CHECK(text.find("\"format_version\": 1") != std::string::npos);
  CHECK(text.find("\"model_kind\": \"cart\"") != std::string::npos);
  CHECK(deserialize(text).model_id == fnv1a_hex(text));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("files on disk") {
  const FeatureMatrix train = oracle_data(120, 5);
  const AnyModel model = train_model(quick_spec(ModelKind::C45), train, 3);
  const std::string path = temp_path("c45.json");
  save(model, path, {{"data_rows", "120"}});
  const LoadedModel loaded = load(path, train.schema);
  CHECK(loaded.metadata.at("data_rows") == "120");
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(loaded.model_id == fnv1a_hex(text));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load(path), PersistError);
  CHECK_THROWS_AS(save(model, "/nonexistent-dir/model.json"), PersistError);
}

TEST_CASE("schema mismatch names the first differing column") {
  const FeatureMatrix a = oracle_data(200, 6);
  const AnyModel model = train_model(quick_spec(ModelKind::C45), a, 4);
  const std::string path = temp_path("schema.json");
  save(model, path);
  std::vector<Column> columns = a.schema.columns();
  columns[11].name = "sex_female";
  try {
    load(path, Schema(columns));
    FAIL("expected a schema mismatch");
  } catch (const SchemaMismatch& error) {
    CHECK(std::string(error.what()).find("sex_female") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("bad documents are rejected") {
  const std::string text = serialize(train_model(quick_spec(ModelKind::Mlp), oracle_data(60, 7), 5));
  CHECK_NOTHROW(deserialize(text));

  try {
    deserialize(replace_once(text, "\"format_version\": 1", "\"format_version\": 2"));
    FAIL("expected a version error");
  } catch (const PersistError& error) {
    CHECK(std::string(error.what()).find("format_version 2") != std::string::npos);
  }

  try {
    deserialize(text.substr(0, text.size() / 2));
    FAIL("expected a parse error");
  } catch (const PersistError& error) {
    CHECK(std::string(error.what()).find("line") != std::string::npos);
  }

  try {
    deserialize(replace_once(text, "\"model_kind\": \"mlp\"", "\"model_kind\": \"svm\""));
    FAIL("expected an unknown kind");
  } catch (const PersistError& error) {
    CHECK(std::string(error.what()).find("svm") != std::string::npos);
  }

  CHECK_THROWS_AS(deserialize(replace_once(text, "\"model_kind\": \"mlp\"", "\"model_kind\": \"rf\"")),
                  PersistError);
  CHECK_THROWS_AS(deserialize(replace_once(text, "screenlab-model", "other-model")), PersistError);
  CHECK_THROWS_AS(deserialize("[]"), PersistError);
  CHECK_THROWS_AS(deserialize(""), PersistError);
}

TEST_CASE("metadata never carries training rows") {
  const FeatureMatrix train = oracle_data(50, 8);
  const std::string text = serialize(train_model(quick_spec(ModelKind::RandomForest), train, 6));
  CHECK(text.find("\"labels\"") == std::string::npos);
  CHECK(text.find("\"values\"") == std::string::npos);
  CHECK(text.find("\"rows\"") == std::string::npos);
}
