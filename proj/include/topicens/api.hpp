#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "json.hpp"
#include "topicens/project.hpp"

namespace topicens {

struct ApiRequest {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent implementation of the workbench HTTP API over a
/// single project. GET handlers take a shared lock; group mutations take an
/// exclusive lock, check the echoed project revision (409 on mismatch) and,
/// when a save path is set, persist before committing.
///
/// Routes:
///   GET    /api/project
///   GET    /api/topics            (filter query parameters, see README)
///   GET    /api/topics/{m}/{t}
///   GET    /api/topics/{m}/{t}/documents?limit=20
///   GET    /api/similarity?anchor=m,t&best_per_model=bool&min=s
///   GET    /api/heatmap?refs=m/t,m/t&top_n=N
///   GET    /api/documents/{id}?model=m&rule=contextual|global
///   GET    /api/embedding
///   GET    /api/vocabulary
///   GET    /api/groups
///   POST   /api/groups
///   PUT    /api/groups/{id}
///   DELETE /api/groups/{id}?revision=R
class Api {
 public:
  explicit Api(Project project, std::optional<std::filesystem::path> save_path = std::nullopt);

  ApiResponse handle(const ApiRequest& request);

  /// Snapshot of the current project (copy taken under the shared lock).
  Project project() const;

 private:
  ApiResponse get(const ApiRequest& request);
  ApiResponse mutate(const ApiRequest& request);

  Project project_;
  std::optional<std::filesystem::path> save_path_;
  mutable std::shared_mutex mutex_;
};

/// HTTP/1.1 transport for an Api.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host`; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Accepts connections until stop(). Blocking.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Default port: $TOPICENS_PORT if set, otherwise 8080.
int default_port();

}  // namespace topicens
