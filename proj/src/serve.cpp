#include "screenlab/serve.hpp"

#include <httplib.h>

#include <json.hpp>

#include "screenlab/error.hpp"
#include "screenlab/model.hpp"

namespace screenlab {

using nlohmann::json;

namespace {

std::string errors_json(const std::vector<FieldError>& errors) {
  json list = json::array();
  for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  return json{{"errors", std::move(list)}}.dump();
}

void parse_flag(const json& body, const char* field, bool& target, std::vector<FieldError>& errors) {
  if (!body.contains(field)) {
    errors.push_back({field, "required"});
    return;
  }
  const json& value = body.at(field);
  if (value.is_boolean()) {
    target = value.get<bool>();
  } else if (value.is_string()) {
    try {
      target = parse_yes_no(value.get<std::string>());
    } catch (const ValidationError& e) {
      errors.push_back({field, e.what()});
    }
  } else {
    errors.push_back({field, "expected a boolean or \"yes\"/\"no\""});
  }
}

void parse_category(const json& body, const char* field, std::string& target,
                    std::vector<FieldError>& errors) {
  if (!body.contains(field)) {
    errors.push_back({field, "required"});
  } else if (!body.at(field).is_string() || body.at(field).get<std::string>().empty()) {
    errors.push_back({field, "expected a non-empty string"});
  } else {
    target = body.at(field).get<std::string>();
  }
}

}  // namespace

ParsedRequest parse_screening_request(std::string_view json_body) {
  ParsedRequest parsed;
  json body;
  try {
    body = json::parse(json_body);
  } catch (const json::parse_error& e) {
    parsed.errors.push_back({"body", std::string("invalid JSON: ") + e.what()});
    return parsed;
  }
  if (!body.is_object()) {
    parsed.errors.push_back({"body", "expected a JSON object"});
    return parsed;
  }

  ScreeningRecord& record = parsed.record;
  if (!body.contains("answers")) {
    parsed.errors.push_back({"answers", "required"});
  } else if (!body.at("answers").is_array() || body.at("answers").size() != kItemCount) {
    parsed.errors.push_back({"answers", "expected an array of 10 answers"});
  } else {
    for (std::size_t i = 0; i < kItemCount; ++i) {
      const json& answer = body.at("answers").at(i);
      const std::string field = "answers[" + std::to_string(i) + "]";
      if (answer.is_string()) {
        try {
          record.items[i] = score_item(static_cast<int>(i) + 1, parse_likert(answer.get<std::string>()));
        } catch (const ValidationError& e) {
          parsed.errors.push_back({field, e.what()});
        }
      } else if (answer.is_number_integer() && (answer.get<int>() == 0 || answer.get<int>() == 1)) {
        record.items[i] = answer.get<int>();
      } else {
        parsed.errors.push_back({field, "expected a Likert answer or a 0/1 item score"});
      }
    }
  }

  if (!body.contains("age_months")) {
    parsed.errors.push_back({"age_months", "required"});
  } else if (!body.at("age_months").is_number_integer()) {
    parsed.errors.push_back({"age_months", "expected an integer number of months"});
  } else {
    const auto age = body.at("age_months").get<long long>();
    if (age <= 0) {
      parsed.semantic_errors.push_back({"age_months", "must be at least 1 month"});
    } else if (age > 1200) {
      parsed.semantic_errors.push_back({"age_months", "implausibly large"});
    } else {
      record.age_months = static_cast<int>(age);
    }
  }

  if (!body.contains("sex")) {
    parsed.errors.push_back({"sex", "required"});
  } else if (!body.at("sex").is_string()) {
    parsed.errors.push_back({"sex", "expected \"Male\" or \"Female\""});
  } else {
    try {
      record.sex = parse_sex(body.at("sex").get<std::string>());
    } catch (const ValidationError& e) {
      parsed.errors.push_back({"sex", e.what()});
    }
  }

  parse_category(body, "ethnicity", record.ethnicity, parsed.errors);
  parse_category(body, "respondent", record.respondent, parsed.errors);
  parse_flag(body, "jaundice", record.jaundice, parsed.errors);
  parse_flag(body, "family_asd", record.family_asd, parsed.errors);

  if (parsed.errors.empty()) {
    record.qchat_score = qchat_score(record.items);
    record.label = derive_label(record.qchat_score);
  }
  return parsed;
}

ScreeningOutcome screen(const LoadedModel& model, const ScreeningRecord& record) {
  ScreeningOutcome outcome;
  outcome.qchat_score = qchat_score(record.items);
  outcome.rule_label = derive_label(outcome.qchat_score);
  const auto row = encode_row(model.schema(), record, &outcome.warnings);
  outcome.model = predict(model.model, row);
  if (!outcome.agrees()) {
    outcome.warnings.push_back("model prediction disagrees with the Q-chat rule outcome");
  }
  return outcome;
}

std::string outcome_json(const ScreeningOutcome& outcome, const LoadedModel& model) {
  json out{{"qchat_score", outcome.qchat_score},
           {"rule_label", std::string(to_string(outcome.rule_label))},
           {"label", std::string(to_string(outcome.model.label))},
           {"score", outcome.model.score},
           {"agrees_with_rule", outcome.agrees()},
           {"model_kind", std::string(to_string(kind_of(model.model)))},
           {"model_id", model.model_id},
           {"warnings", outcome.warnings}};
  return out.dump();
}

void ScreeningService::set_model(LoadedModel model) {
  auto shared = std::make_shared<const LoadedModel>(std::move(model));
  std::lock_guard lock(mutex_);
  model_ = std::move(shared);
}

std::shared_ptr<const LoadedModel> ScreeningService::current() const {
  std::lock_guard lock(mutex_);
  return model_;
}

bool ScreeningService::ready() const { return current() != nullptr; }

HttpResponse ScreeningService::health() const {
  if (!ready()) return {503, json{{"status", "loading"}}.dump()};
  return {200, json{{"status", "ok"}}.dump()};
}

HttpResponse ScreeningService::model_info() const {
  const auto model = current();
  if (!model) return {503, json{{"status", "loading"}}.dump()};
  const Schema& schema = model->schema();
  json columns = json::array();
  json groups = json::object();
  for (const auto& c : schema.columns()) {
    columns.push_back(c.name);
    if (c.kind == ColumnKind::OneHot) groups[c.group].push_back(c.category);
  }
  json out{{"model_kind", std::string(to_string(kind_of(model->model)))},
           {"model_id", model->model_id},
           {"format_version", kModelFormatVersion},
           {"schema", {{"column_count", schema.size()}, {"columns", columns}, {"categories", groups}}},
           {"training", model->metadata}};
  return {200, out.dump()};
}

HttpResponse ScreeningService::predict(std::string_view body) const {
  const auto model = current();
  if (!model) return {503, json{{"status", "loading"}}.dump()};
  const ParsedRequest parsed = parse_screening_request(body);
  if (!parsed.errors.empty()) return {400, errors_json(parsed.errors)};
  if (!parsed.semantic_errors.empty()) return {422, errors_json(parsed.semantic_errors)};
  try {
    return {200, outcome_json(screen(*model, parsed.record), *model)};
  } catch (const ValidationError& e) {
    return {400, errors_json({{"body", e.what()}})};
  }
}

HttpServer::HttpServer(ScreeningService& service, ServeOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  server_->set_payload_max_length(64 * 1024);
  const std::string origin = options_.cors_origin;
  auto reply = [origin](httplib::Response& res, const HttpResponse& response) {
    res.status = response.status;
    if (!origin.empty()) res.set_header("Access-Control-Allow-Origin", origin);
    res.set_content(response.body, "application/json");
  };
  server_->Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.health());
  });
  server_->Get("/api/v1/model", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.model_info());
  });
  server_->Post("/api/v1/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.predict(req.body));
  });
  server_->Options(R"(/.*)", [origin](const httplib::Request&, httplib::Response& res) {
    if (!origin.empty()) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
    res.status = 204;
  });
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(json{{"errors", {{{"field", "server"}, {"message", "internal error"}}}}}.dump(),
                    "application/json");
  });
}

int HttpServer::start() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else if (server_->bind_to_port(options_.host, options_.port)) {
    port_ = options_.port;
  } else {
    port_ = -1;
  }
  if (port_ < 0) throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace screenlab
