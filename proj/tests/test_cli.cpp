#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "screenlab/cli.hpp"
#include "screenlab/ingest.hpp"
#include "screenlab/serve.hpp"

using namespace screenlab;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "screenlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A scratch directory holding a synthetic dataset of the public file's size.
struct Workspace {
  fs::path dir;
  std::string data;

  Workspace() {
    dir = fs::temp_directory_path() / ("screenlab_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    data = path("data.csv");
    const Run made = cli({"synth", "--n", "1054", "--seed", "5", "--out", data});
    REQUIRE(made.code == 0);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

std::string trained_model(const std::string& kind, const std::string& name) {
  Workspace& w = workspace();
  const std::string file = w.path(name);
  if (!fs::exists(file)) {
    const Run r = cli({"train", "--data", w.data, "--model", kind, "--trees", "30", "--seed", "7", "--out", file});
    REQUIRE(r.code == 0);
  }
  return file;
}

const char* kRequest = R"({"answers": ["Never","Never","Never","Never","Never","Never","Never","Never","Never","Never"],
  "age_months": 20, "sex": "Female", "ethnicity": "asian", "jaundice": "no", "family_asd": false,
  "respondent": "family member"})";

}  // namespace

TEST_CASE("synth writes a valid dataset") {
  const IngestResult back = read_csv_text(slurp(workspace().data));
  CHECK(back.errors.empty());
  CHECK(back.records.size() == 1054);
  const Run to_stdout = cli({"synth", "--n", "5", "--seed", "1"});
  CHECK(to_stdout.code == 0);
  CHECK(read_csv_text(to_stdout.out).records.size() == 5);
  CHECK(to_stdout.err.find("5 records") != std::string::npos);
}

TEST_CASE("ingest reports a clean file and writes the log") {
  const Run r = cli({"ingest", "--data", workspace().data, "--log", workspace().path("ingest.log")});
  CHECK(r.code == 0);
  CHECK(r.out.find("rows read: 1054") != std::string::npos);
  CHECK(slurp(workspace().path("ingest.log")).find("label_mismatch=0") != std::string::npos);
}

TEST_CASE("train on the full-size dataset splits 739 / 315") {
  const std::string file = workspace().path("c45_a.json");
  const Run r = cli({"train", "--data", workspace().data, "--model", "c45", "--seed", "11", "--out", file});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("739 train / 315 test") != std::string::npos);
  CHECK(r.out.find("model c45, seed 11") != std::string::npos);
  CHECK(r.out.find("training accuracy") != std::string::npos);
  const LoadedModel loaded = load(file);
  CHECK(loaded.metadata.at("train_rows") == "739");
  CHECK(loaded.metadata.at("test_rows") == "315");
  CHECK(loaded.metadata.at("seed") == "11");
}

TEST_CASE("the same seed writes byte-identical model files") {
  for (const std::string kind : {"c45", "rf", "mlp"}) {
    const std::string a = workspace().path(kind + "_same_a.json");
    const std::string b = workspace().path(kind + "_same_b.json");
    for (const auto& file : {a, b}) {
      const Run r = cli({"train", "--data", workspace().data, "--model", kind, "--trees", "20", "--threads", "4",
                         "--seed", "21", "--out", file});
      REQUIRE(r.code == 0);
    }
    CAPTURE(kind);
    CHECK(slurp(a) == slurp(b));
  }
}

TEST_CASE("a missing seed is generated and logged") {
  const Run r = cli({"train", "--data", workspace().data, "--model", "cart", "--out", workspace().path("x.json")});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("generated; pass --seed") != std::string::npos);
}

TEST_CASE("evaluate prints the report block in order") {
  const std::string model = trained_model("rf", "rf.json");
  const Run r = cli({"evaluate", "--data", workspace().data, "--model-file", model, "--out",
                     workspace().path("eval.kv")});
  REQUIRE(r.code == 0);
  std::size_t at = 0;
  for (const char* field : {"Confusion Matrix and Statistics", "Accuracy :", "95% CI :", "No Information Rate :",
                            "Kappa :", "Sensitivity :", "Specificity :", "Balanced Accuracy :",
                            "'Positive' Class : Yes"}) {
    CAPTURE(field);
    const std::size_t found = r.out.find(field, at);
    REQUIRE(found != std::string::npos);
    at = found;
  }
  CHECK(slurp(workspace().path("eval.kv")).find("tp=") == 0);

  const Run flipped = cli({"evaluate", "--data", workspace().data, "--model-file", model, "--positive", "No"});
  CHECK(flipped.code == 0);
  CHECK(flipped.out.find("'Positive' Class : No") != std::string::npos);
}

TEST_CASE("roc writes points and the area") {
  const std::string model = trained_model("mlp", "mlp.json");
  const Run r = cli({"roc", "--data", workspace().data, "--model-file", model, "--out", workspace().path("roc.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("AUC ") != std::string::npos);
  CHECK(slurp(workspace().path("roc.csv")).rfind("fpr,tpr,threshold\n", 0) == 0);
}

TEST_CASE("cv reports five folds") {
  const Run r = cli({"cv", "--data", workspace().data, "--model", "cart", "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("5-fold cross-validation on 739 training rows") != std::string::npos);
  CHECK(r.out.find("fold 5") != std::string::npos);
  CHECK(r.out.find("mean ") != std::string::npos);
}

TEST_CASE("compare prints the three-model table") {
  const Run r = cli({"compare", "--data", workspace().data, "--seed", "9", "--out", workspace().path("compare.kv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("739 train / 315 test") != std::string::npos);
  CHECK(r.out.find("Accuracy") != std::string::npos);
  CHECK(r.out.find("Sensitivity") != std::string::npos);
  CHECK(r.out.find("Specificity") != std::string::npos);
  CHECK(r.out.find("C4.5") != std::string::npos);
  const std::string kv = slurp(workspace().path("compare.kv"));
  for (const char* key : {"c45.accuracy=", "rf.sensitivity=", "mlp.specificity="}) {
    CHECK(kv.find(key) != std::string::npos);
  }
}

TEST_CASE("predict agrees with the service on the same model file") {
  const std::string input = workspace().path("request.json");
  std::ofstream(input) << kRequest;
  for (const auto& name : {std::pair{"c45", "c45.json"}, std::pair{"rf", "rf.json"}, std::pair{"mlp", "mlp.json"}}) {
    const std::string model = trained_model(name.first, name.second);
    const std::string result = workspace().path(std::string(name.first) + "_predict.json");
    const Run r = cli({"predict", "--model-file", model, "--input", input, "--out", result});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("qchat_score 9\n") != std::string::npos);
    CHECK(r.out.find("rule label Yes\n") != std::string::npos);

    ScreeningService service;
    service.set_model(load(model));
    const auto from_service = nlohmann::json::parse(service.predict(kRequest).body);
    const auto from_cli = nlohmann::json::parse(slurp(result));
    CHECK(from_cli.at("label") == from_service.at("label"));
    CHECK(from_cli.at("score") == from_service.at("score"));
    CHECK(from_cli.at("model_id") == from_service.at("model_id"));
    CHECK(r.out.find("model label " + from_service.at("label").get<std::string>()) != std::string::npos);
  }
}

TEST_CASE("the data path falls back to the environment") {
  ::setenv("SCREENLAB_DATA", workspace().data.c_str(), 1);
  const Run r = cli({"eda"});
  ::unsetenv("SCREENLAB_DATA");
  CHECK(r.code == 0);
  CHECK(r.out.find("Records: 1054") != std::string::npos);
  CHECK(cli({"eda"}).code == 1);
}

TEST_CASE("config file supplies subcommand options by section") {
  const std::string config = workspace().path("run.ini");
  std::ofstream(config) << "[cv]\ndata = " << workspace().data << "\nseed = 4\n";
  const Run r = cli({"--config", config, "cv", "--model", "cart", "--k", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("3-fold") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"train", "--bogus"}).code == 1);
  CHECK(cli({"eda", "--data", workspace().path("missing.csv")}).code == 1);
  CHECK(cli({"evaluate", "--data", workspace().data, "--model-file", workspace().path("missing.json")}).code == 1);

  // A malformed row fails ingest with a located message.
  const std::string bad = workspace().path("bad.csv");
  std::string text = slurp(workspace().data);
  const std::size_t second_line = text.find('\n') + 1;
  text.replace(second_line, 1, "7");
  std::ofstream(bad) << text;
  const Run ingest = cli({"ingest", "--data", bad, "--out", workspace().path("accepted.csv")});
  CHECK(ingest.code == 1);
  CHECK(ingest.out.find("rows accepted: 1053") != std::string::npos);
  CHECK(read_csv_text(slurp(workspace().path("accepted.csv"))).records.size() == 1053);
  CHECK(ingest.err.find("row 1") != std::string::npos);
  CHECK(cli({"ingest", "--data", bad, "--strict"}).code == 1);

  // Invalid request bodies and unknown model kinds are validation failures.
  const std::string input = workspace().path("bad_request.json");
  std::ofstream(input) << R"({"answers": []})";
  const Run predict = cli({"predict", "--model-file", trained_model("c45", "c45.json"), "--input", input});
  CHECK(predict.code == 1);
  CHECK(predict.err.find("answers") != std::string::npos);
  CHECK(cli({"train", "--data", workspace().data, "--model", "svm", "--out", workspace().path("y.json")}).code == 1);

  // Failures outside validation, such as an unwritable output, exit with 2.
  CHECK(cli({"synth", "--n", "3", "--seed", "1", "--out", "/nonexistent-dir/x.csv"}).code == 2);
}
