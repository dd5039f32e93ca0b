#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "screenlab/data_model.hpp"
#include "screenlab/persist.hpp"

namespace httplib {
class Server;
}

namespace screenlab {

struct FieldError {
  std::string field;
  std::string message;
};

/// A questionnaire submission turned into a record. `errors` are malformed
/// fields (HTTP 400), `semantic_errors` well-formed but impossible values (422).
struct ParsedRequest {
  ScreeningRecord record;
  std::vector<FieldError> errors;
  std::vector<FieldError> semantic_errors;

  bool ok() const { return errors.empty() && semantic_errors.empty(); }
};

/// Body fields: answers (ten Likert words or 0/1 item scores), age_months,
/// sex, ethnicity, jaundice, family_asd, respondent.
ParsedRequest parse_screening_request(std::string_view json_body);

/// Rule-based Q-chat outcome next to the model's call on the same record.
struct ScreeningOutcome {
  int qchat_score = 0;
  Label rule_label = Label::No;
  Prediction model;
  std::vector<std::string> warnings;

  bool agrees() const { return rule_label == model.label; }
};

ScreeningOutcome screen(const LoadedModel& model, const ScreeningRecord& record);
/// The JSON object returned by POST /api/v1/predict.
std::string outcome_json(const ScreeningOutcome& outcome, const LoadedModel& model);

struct HttpResponse {
  int status = 200;
  std::string body;
};

/// Request handling, independent of the transport. The model is set once and
/// shared read-only afterwards.
class ScreeningService {
 public:
  void set_model(LoadedModel model);
  bool ready() const;

  HttpResponse health() const;
  HttpResponse model_info() const;
  HttpResponse predict(std::string_view body) const;

 private:
  std::shared_ptr<const LoadedModel> current() const;

  mutable std::mutex mutex_;
  std::shared_ptr<const LoadedModel> model_;
};

struct ServeOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  /// Sent as Access-Control-Allow-Origin when non-empty.
  std::string cors_origin;
};

/// HTTP front end over a ScreeningService.
class HttpServer {
 public:
  HttpServer(ScreeningService& service, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start();
  /// Blocks until the server thread exits (after stop()).
  void wait();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  ScreeningService& service_;
  ServeOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace screenlab
