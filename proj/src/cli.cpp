#include "screenlab/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "screenlab/error.hpp"
#include "screenlab/eval.hpp"
#include "screenlab/ingest.hpp"
#include "screenlab/persist.hpp"
#include "screenlab/pipeline.hpp"
#include "screenlab/random.hpp"
#include "screenlab/serve.hpp"
#include "screenlab/synth.hpp"

namespace screenlab {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop_requested{false};

extern "C" void request_stop(int) { g_stop_requested = true; }

struct DataOptions {
  std::string data;
  std::string headers;
  bool strict = false;
};

struct SplitOptions {
  double train_fraction = 0.7;
  bool unstratified = false;
};

struct ModelOptions {
  std::string model = "c45";
  std::optional<std::size_t> min_leaf;
  std::optional<std::size_t> max_depth;
  bool no_prune = false;
  std::optional<double> confidence;
  std::optional<std::size_t> trees;
  std::optional<std::size_t> mtry;
  std::vector<std::size_t> hidden;
  std::optional<double> threshold;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> restarts;
  std::string algorithm = "rprop";
  std::optional<double> learning_rate;
  std::size_t threads = 0;
};

struct Options {
  DataOptions data;
  SplitOptions split;
  ModelOptions model;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string log;
  std::string model_file;
  std::string input;
  std::string positive = "Yes";
  std::size_t k = 5;
  std::size_t n = 1054;
  double prevalence = 0.69;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string cors_origin;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fixed(double value, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << value;
  return s.str();
}

std::string exact(double value) {
  std::ostringstream s;
  s.precision(17);
  s << value;
  return s.str();
}

Label parse_positive(const std::string& text) { return parse_label(text); }

class Command {
 public:
  Command(const Options& options, std::ostream& out, std::ostream& err)
      : options_(options), out_(out), err_(err) {}

  std::string data_path() const {
    if (!options_.data.data.empty()) return options_.data.data;
    if (const char* env = std::getenv("SCREENLAB_DATA"); env && *env) return env;
    throw ValidationError("no dataset given: pass --data or set SCREENLAB_DATA");
  }

  HeaderMap header_map() const {
    return options_.data.headers.empty() ? HeaderMap::defaults() : HeaderMap::load(options_.data.headers);
  }

  struct Dataset {
    std::vector<ScreeningRecord> records;
    std::string id;
  };

  Dataset load_records() const {
    const std::string path = data_path();
    const std::string text = read_text(path);
    IngestResult result = read_csv_text(text, header_map(), {options_.data.strict});
    report_quarantine(result);
    if (result.records.empty()) throw ValidationError(path + " has no valid rows");
    return {std::move(result.records), fnv1a_hex(text)};
  }

  void report_quarantine(const IngestResult& result) const {
    if (result.errors.empty()) return;
    err_ << "quarantined " << result.errors.size() << " of " << result.rows_read << " rows\n";
    constexpr std::size_t kShown = 10;
    for (std::size_t i = 0; i < result.errors.size() && i < kShown; ++i) {
      const RowError& e = result.errors[i];
      err_ << "  row " << e.row << (e.column.empty() ? "" : " column '" + e.column + "'") << ": "
           << e.message << "\n";
    }
    if (result.errors.size() > kShown) err_ << "  ...\n";
  }

  std::uint64_t seed() const {
    if (options_.seed) return *options_.seed;
    std::random_device device;
    const std::uint64_t generated = (static_cast<std::uint64_t>(device()) << 32) ^ device();
    err_ << "seed " << generated << " (generated; pass --seed " << generated << " to reproduce)\n";
    return generated;
  }

  SplitSpec split_spec(std::uint64_t seed) const {
    SplitSpec spec;
    spec.train_fraction = options_.split.train_fraction;
    spec.seed = seed;
    spec.stratified = !options_.split.unstratified;
    return spec;
  }

  ModelSpec model_spec() const {
    const ModelOptions& m = options_.model;
    ModelSpec spec = ModelSpec::defaults(parse_model_kind(m.model));
    TreeParams& tree = (spec.kind == ModelKind::BaggedCart || spec.kind == ModelKind::RandomForest)
                           ? spec.forest_tree
                           : spec.tree;
    if (m.min_leaf) tree.min_leaf = *m.min_leaf;
    if (m.max_depth) tree.max_depth = *m.max_depth;
    if (m.no_prune) tree.prune = false;
    if (m.confidence) tree.prune_confidence = *m.confidence;
    spec.n_trees = m.trees;
    spec.mtry = m.mtry;
    spec.threads = m.threads;
    if (!m.hidden.empty()) spec.mlp.hidden = m.hidden;
    if (m.threshold) spec.mlp.threshold = *m.threshold;
    if (m.max_epochs) spec.mlp.max_epochs = *m.max_epochs;
    if (m.restarts) spec.mlp.restarts = *m.restarts;
    if (m.algorithm == "rprop") {
      spec.mlp.algorithm = TrainAlgorithm::Rprop;
    } else if (m.algorithm == "gd") {
      spec.mlp.algorithm = TrainAlgorithm::GradientDescent;
    } else {
      throw ValidationError("unknown --algorithm '" + m.algorithm + "' (expected rprop or gd)");
    }
    if (m.learning_rate) spec.mlp.learning_rate = *m.learning_rate;
    tree.validate();
    spec.mlp.validate();
    return spec;
  }

  void emit(const std::string& machine_readable) const {
    if (!options_.out.empty()) write_text(options_.out, machine_readable);
  }

  int ingest() const {
    const std::string path = data_path();
    const IngestResult result = read_csv(path, header_map(), {options_.data.strict});
    report_quarantine(result);
    const ConsistencyReport report = validate_consistency(result.records);
    out_ << "rows read: " << result.rows_read << "\n"
         << "rows accepted: " << result.records.size() << "\n"
         << "rows quarantined: " << result.errors.size() << "\n"
         << format_consistency(report);
    if (!options_.out.empty()) write_csv(options_.out, result.records, header_map());
    if (!options_.log.empty()) {
      std::ostringstream text;
      text << "rows_read=" << result.rows_read << "\nrows_quarantined=" << result.errors.size() << "\n"
           << format_consistency(report);
      for (const RowError& e : result.errors) {
        text << "quarantine=" << e.row << "," << e.column << "," << e.message << "\n";
      }
      write_text(options_.log, text.str());
    }
    // Accepted rows are still written; the exit code flags that some were set aside.
    return result.errors.empty() && report.clean() ? kExitOk : kExitValidation;
  }

  int eda() const {
    const Dataset data = load_records();
    const EdaSummary summary = eda_summary(data.records);
    out_ << format_eda(summary);
    emit(format_eda_key_values(summary));
    return kExitOk;
  }

  int train() const {
    const ModelSpec spec = model_spec();
    if (options_.out.empty()) throw ValidationError("train needs --out for the model file");
    const Dataset data = load_records();
    const std::uint64_t master = seed();
    const SplitSpec split = split_spec(master);
    const PreparedData prepared = prepare(data.records, split);

    std::ostringstream log;
    log << prepared.train.rows() << " train / " << prepared.test.rows() << " test\n";
    const auto start = std::chrono::steady_clock::now();
    const AnyModel model = train_model(spec, prepared.train, model_seed(master));
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const MetricsReport fit = evaluate(model, prepared.train);
    log << "model " << to_string(spec.kind) << ", seed " << master << "\n"
        << "training accuracy " << fixed(*fit.accuracy) << "\n";
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
      log << "network " << (mlp->converged ? "converged" : "did not converge") << " after "
          << mlp->epochs << " epochs, error " << exact(mlp->final_error) << "\n";
    }
    if (const auto* ensemble = std::get_if<EnsembleModel>(&model); ensemble && ensemble->oob_accuracy) {
      log << "out-of-bag accuracy " << fixed(*ensemble->oob_accuracy) << "\n";
    }
    out_ << log.str();
    err_ << "trained in " << fixed(seconds, 2) << " s\n";

    ModelMetadata metadata{{"seed", std::to_string(master)},
                           {"train_fraction", exact(split.train_fraction)},
                           {"stratified", split.stratified ? "true" : "false"},
                           {"data_rows", std::to_string(data.records.size())},
                           {"data_id", data.id},
                           {"train_rows", std::to_string(prepared.train.rows())},
                           {"test_rows", std::to_string(prepared.test.rows())},
                           {"training_accuracy", exact(*fit.accuracy)}};
    save(model, options_.out, metadata);
    if (!options_.log.empty()) write_text(options_.log, log.str());
    return kExitOk;
  }

  int cv() const {
    const ModelSpec spec = model_spec();
    if (options_.k < 2) throw ValidationError("--k must be at least 2");
    const Dataset data = load_records();
    const std::uint64_t master = seed();
    const PreparedData prepared = prepare(data.records, split_spec(master));
    const CvResult result = cross_validate(prepared.train, spec, options_.k, derive_seed(master, 2));
    std::ostringstream human;
    std::ostringstream machine;
    human << to_string(spec.kind) << " " << options_.k << "-fold cross-validation on "
          << prepared.train.rows() << " training rows\n";
    for (std::size_t f = 0; f < result.fold_accuracies.size(); ++f) {
      human << "fold " << f + 1 << "  " << fixed(result.fold_accuracies[f]) << "\n";
      machine << "fold" << f + 1 << "=" << exact(result.fold_accuracies[f]) << "\n";
    }
    human << "mean " << fixed(result.mean) << "  sd " << fixed(result.sd) << "\n";
    machine << "mean=" << exact(result.mean) << "\nsd=" << exact(result.sd) << "\nseed=" << result.seed
            << "\n";
    out_ << human.str();
    emit(machine.str());
    return kExitOk;
  }

  struct Evaluation {
    LoadedModel model;
    FeatureMatrix test;
  };

  // Rebuilds the held-out rows from the split recorded in the model file.
  Evaluation held_out() const {
    if (options_.model_file.empty()) throw ValidationError("--model-file is required");
    LoadedModel loaded = load(options_.model_file);
    const Dataset data = load_records();
    auto field = [&](const std::string& key) -> const std::string& {
      auto it = loaded.metadata.find(key);
      if (it == loaded.metadata.end()) {
        throw ValidationError("model file has no '" + key + "' metadata; cannot rebuild its test set");
      }
      return it->second;
    };
    SplitSpec split;
    try {
      split.seed = std::stoull(field("seed"));
      split.train_fraction = std::stod(field("train_fraction"));
    } catch (const std::logic_error&) {
      throw ValidationError("model file has malformed split metadata");
    }
    split.stratified = field("stratified") == "true";
    if (auto it = loaded.metadata.find("data_id"); it != loaded.metadata.end() && it->second != data.id) {
      err_ << "warning: dataset differs from the one the model was trained on\n";
    }
    PreparedData prepared = prepare(data.records, split);
    require_same_schema(loaded.schema(), prepared.test.schema);
    return {std::move(loaded), std::move(prepared.test)};
  }

  int evaluate_model() const {
    const Label positive = parse_positive(options_.positive);
    const Evaluation e = held_out();
    const MetricsReport report = evaluate(e.model.model, e.test, positive);
    out_ << format_report(report);
    emit(format_key_values(report));
    return kExitOk;
  }

  int roc_curve() const {
    const Label positive = parse_positive(options_.positive);
    const Evaluation e = held_out();
    const ScoredSet scored = score_all(e.model.model, e.test);
    std::vector<double> scores = scored.scores;
    if (positive == Label::No) {
      for (double& s : scores) s = 1.0 - s;
    }
    const RocCurve curve = roc(scored.labels, scores, positive);
    out_ << "points " << curve.points.size() << "\nAUC " << fixed(curve.auc) << "\n";
    if (options_.out.empty()) {
      out_ << format_roc_csv(curve);
    } else {
      write_text(options_.out, format_roc_csv(curve));
    }
    return kExitOk;
  }

  int compare() const {
    const Label positive = parse_positive(options_.positive);
    const Dataset data = load_records();
    const std::uint64_t master = seed();
    const PreparedData prepared = prepare(data.records, split_spec(master));
    out_ << prepared.train.rows() << " train / " << prepared.test.rows() << " test\n";
    const auto results = compare_candidates(prepared, master, options_.model.threads);
    std::vector<ComparisonRow> rows;
    std::ostringstream machine;
    for (const auto& r : results) {
      const MetricsReport report = positive == r.report.positive_class ? r.report : metrics(r.report.cm.flipped());
      rows.push_back({r.name, report});
      const std::string key(to_string(r.kind));
      auto value = [](const std::optional<double>& v) { return v ? exact(*v) : std::string("NA"); };
      machine << key << ".accuracy=" << value(report.accuracy) << "\n"
              << key << ".sensitivity=" << value(report.sensitivity) << "\n"
              << key << ".specificity=" << value(report.specificity) << "\n";
    }
    out_ << format_comparison(rows);
    emit(machine.str());
    return kExitOk;
  }

  int predict_record() const {
    if (options_.model_file.empty()) throw ValidationError("--model-file is required");
    if (options_.input.empty()) throw ValidationError("--input is required (a JSON file, or - for stdin)");
    std::string body;
    if (options_.input == "-") {
      std::ostringstream buffer;
      buffer << std::cin.rdbuf();
      body = buffer.str();
    } else {
      body = read_text(options_.input);
    }
    const ParsedRequest parsed = parse_screening_request(body);
    if (!parsed.ok()) {
      for (const auto& e : parsed.errors) err_ << e.field << ": " << e.message << "\n";
      for (const auto& e : parsed.semantic_errors) err_ << e.field << ": " << e.message << "\n";
      return kExitValidation;
    }
    const LoadedModel model = load(options_.model_file);
    const ScreeningOutcome outcome = screen(model, parsed.record);
    out_ << "qchat_score " << outcome.qchat_score << "\n"
         << "rule label " << to_string(outcome.rule_label) << "\n"
         << "model label " << to_string(outcome.model.label) << "\n"
         << "model score " << fixed(outcome.model.score) << "\n";
    for (const auto& w : outcome.warnings) err_ << "warning: " << w << "\n";
    emit(outcome_json(outcome, model) + "\n");
    return kExitOk;
  }

  int synth() const {
    const std::uint64_t master = seed();
    const auto records = generate({options_.n, master, options_.prevalence});
    std::size_t yes = 0;
    for (const auto& r : records) yes += r.label == Label::Yes;
    err_ << records.size() << " records, " << yes << " Yes\n";
    if (options_.out.empty()) {
      write_csv(out_, records, header_map());
    } else {
      write_csv(options_.out, records, header_map());
    }
    return kExitOk;
  }

  int serve() const {
    if (options_.model_file.empty()) throw ValidationError("--model-file is required");
    ScreeningService service;
    ServeOptions serve_options{options_.host, options_.port, options_.cors_origin};
    HttpServer server(service, serve_options);
    const int port = server.start();
    err_ << "listening on " << options_.host << ":" << port << "\n";
    LoadedModel model = load(options_.model_file);
    err_ << "model " << model.model_id << " loaded\n";
    service.set_model(std::move(model));
    std::signal(SIGINT, request_stop);
    std::signal(SIGTERM, request_stop);
    while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return kExitOk;
  }

 private:
  const Options& options_;
  std::ostream& out_;
  std::ostream& err_;
};

void add_data_options(CLI::App* app, Options& o) {
  app->add_option("--data", o.data.data, "Dataset CSV (default: $SCREENLAB_DATA)");
  app->add_option("--headers", o.data.headers, "Header map file (field = column lines)");
  app->add_flag("--strict", o.data.strict, "Fail on the first malformed row");
}

void add_split_options(CLI::App* app, Options& o) {
  app->add_option("--train-frac", o.split.train_fraction, "Training share of each class")
      ->check(CLI::Range(0.0, 1.0));
  app->add_flag("--unstratified", o.split.unstratified, "Split without regard to class");
}

void add_seed_option(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Master seed; a generated one is logged when absent");
}

void add_model_options(CLI::App* app, Options& o) {
  ModelOptions& m = o.model;
  app->add_option("--model", m.model, "cart, c45, bagcart, rf or mlp")->capture_default_str();
  app->add_option("--min-leaf", m.min_leaf, "Minimum rows per leaf");
  app->add_option("--max-depth", m.max_depth, "Depth limit");
  app->add_flag("--no-prune", m.no_prune, "Skip pessimistic pruning (c45)");
  app->add_option("--confidence", m.confidence, "Pruning confidence factor (c45)");
  app->add_option("--trees", m.trees, "Ensemble size");
  app->add_option("--mtry", m.mtry, "Columns tried per split (rf)");
  app->add_option("--hidden", m.hidden, "Hidden layer widths (mlp)")->delimiter(',');
  app->add_option("--threshold", m.threshold, "Gradient stopping threshold (mlp)");
  app->add_option("--max-epochs", m.max_epochs, "Epoch limit (mlp)");
  app->add_option("--restarts", m.restarts, "Random initializations tried (mlp)");
  app->add_option("--algorithm", m.algorithm, "rprop or gd (mlp)");
  app->add_option("--learning-rate", m.learning_rate, "Step size for gd (mlp)");
  app->add_option("--threads", m.threads, "Worker threads for ensembles; 0 = all cores");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Toddler autism-trait screening: data checks, model training and evaluation"};
  app.name("screenlab");
  app.set_config("--config", "", "INI/TOML file with flag values");
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Validate a dataset CSV and report consistency");
  add_data_options(ingest, o);
  ingest->add_option("--out", o.out, "Write the accepted rows as CSV");
  ingest->add_option("--log", o.log, "Write the consistency report and quarantined rows");

  auto* eda = app.add_subcommand("eda", "Class, sex and ethnicity proportions");
  add_data_options(eda, o);
  eda->add_option("--out", o.out, "Write key=value proportions");

  auto* train = app.add_subcommand("train", "Train one model on the training split");
  add_data_options(train, o);
  add_split_options(train, o);
  add_seed_option(train, o);
  add_model_options(train, o);
  train->add_option("--out", o.out, "Model file to write")->required();
  train->add_option("--log", o.log, "Write the training log");

  auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation on the training split");
  add_data_options(cv, o);
  add_split_options(cv, o);
  add_seed_option(cv, o);
  add_model_options(cv, o);
  cv->add_option("--k", o.k, "Number of folds")->capture_default_str();
  cv->add_option("--out", o.out, "Write key=value fold accuracies");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics of a model file on its held-out rows");
  add_data_options(evaluate, o);
  evaluate->add_option("--model-file", o.model_file, "Model file")->required();
  evaluate->add_option("--positive", o.positive, "Positive class, Yes or No")->capture_default_str();
  evaluate->add_option("--out", o.out, "Write key=value metrics");

  auto* roc = app.add_subcommand("roc", "ROC points and AUC of a model file on its held-out rows");
  add_data_options(roc, o);
  roc->add_option("--model-file", o.model_file, "Model file")->required();
  roc->add_option("--positive", o.positive, "Positive class, Yes or No")->capture_default_str();
  roc->add_option("--out", o.out, "Write the points as CSV (default: standard output)");

  auto* compare = app.add_subcommand("compare", "Train C4.5, random forest and network; compare on the test split");
  add_data_options(compare, o);
  add_split_options(compare, o);
  add_seed_option(compare, o);
  compare->add_option("--positive", o.positive, "Positive class, Yes or No")->capture_default_str();
  compare->add_option("--threads", o.model.threads, "Worker threads for the forest");
  compare->add_option("--out", o.out, "Write key=value results");

  auto* predict = app.add_subcommand("predict", "Screen one questionnaire with a model file");
  predict->add_option("--model-file", o.model_file, "Model file")->required();
  predict->add_option("--input", o.input, "Request JSON file, or - for standard input")->required();
  predict->add_option("--out", o.out, "Write the JSON result");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_seed_option(synth, o);
  synth->add_option("--n", o.n, "Records")->capture_default_str();
  synth->add_option("--prevalence", o.prevalence, "Target share of Yes labels")->capture_default_str();
  synth->add_option("--headers", o.data.headers, "Header map for the written columns");
  synth->add_option("--out", o.out, "CSV to write (default: standard output)");

  auto* serve = app.add_subcommand("serve", "Serve predictions over HTTP");
  serve->add_option("--model-file", o.model_file, "Model file")->required();
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port; 0 picks a free one")->capture_default_str();
  serve->add_option("--cors-origin", o.cors_origin, "Allowed browser origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const Command command(o, out, err);
  try {
    if (*ingest) return command.ingest();
    if (*eda) return command.eda();
    if (*train) return command.train();
    if (*cv) return command.cv();
    if (*evaluate) return command.evaluate_model();
    if (*roc) return command.roc_curve();
    if (*compare) return command.compare();
    if (*predict) return command.predict_record();
    if (*synth) return command.synth();
    if (*serve) return command.serve();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const SchemaMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const PersistError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace screenlab
