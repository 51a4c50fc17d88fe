#pragma once

// HTTP JSON API under /v1/. Api::handle is transport-free so it can be
// exercised directly; Service binds it to an httplib server.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "casegraph/case.hpp"
#include "casegraph/codec.hpp"
#include "casegraph/error.hpp"

namespace casegraph {

struct ServiceConfig {
  std::string listen_address = "127.0.0.1:8080";
  std::filesystem::path data_root;
  CaseId case_id{"default"};
  /// Only "header-identity" is supported.
  std::string auth_mode = "header-identity";

  std::string host() const;
  int port() const;
};

/// Reads a config file ({listenAddress, dataRootPath, caseId, authMode}).
/// CASEGRAPH_DATA_ROOT, when set, overrides dataRootPath. Throws ConfigError.
ServiceConfig load_config(const std::filesystem::path& file);
ServiceConfig config_from_json(const json& j);
/// Applies the CASEGRAPH_DATA_ROOT override.
void apply_environment(ServiceConfig& config);

/// Exactly one HTTP status per engine error code.
int http_status(ErrorCode code) noexcept;
json error_body(const Error& error);

struct HttpRequest {
  std::string method;
  /// Path without the query string.
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  json json_body() const { return json::parse(body); }
};

class Api {
 public:
  /// Creates the data root if it does not exist; throws ConfigError if it
  /// is not a writable directory.
  explicit Api(ServiceConfig config, Case::Clock clock = Document::system_clock());

  HttpResponse handle(const HttpRequest& request);
  /// Convenience for tests: `target` may carry a query string.
  HttpResponse handle(const std::string& method, const std::string& target, const json& body = nullptr,
                      const std::string& user = {}, std::map<std::string, std::string> headers = {});

  Case& workspace(const std::optional<CaseId>& id = std::nullopt);
  const ServiceConfig& config() const noexcept { return config_; }
  std::vector<LoadWarning> warnings();

 private:
  HttpResponse route(const HttpRequest& request, const UserId& user, Case& ws);

  ServiceConfig config_;
  Case::Clock clock_;
  std::mutex cases_mutex_;
  std::map<CaseId, std::unique_ptr<Case>> cases_;
  std::mutex idempotency_mutex_;
  std::map<std::string, json> idempotent_commits_;
};

/// Running HTTP server. Destruction stops it.
class Service {
 public:
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Api& api() noexcept { return *api_; }
  int port() const noexcept { return port_; }
  void stop();
  /// Blocks until stop() is called.
  void wait();

 private:
  friend std::unique_ptr<Service> start_service(const ServiceConfig& config);
  Service() = default;

  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::unique_ptr<Api> api_;
  std::thread thread_;
  int port_ = 0;
};

/// Loads the store and starts listening; port 0 picks a free port. Throws
/// BindFailure or ConfigError.
std::unique_ptr<Service> start_service(const ServiceConfig& config);

}  // namespace casegraph
