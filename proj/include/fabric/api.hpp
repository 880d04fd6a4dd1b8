#pragma once

#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "fabric/system.hpp"

namespace fabric {

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON text followed by a newline
  std::string content_type = "application/json";
};

/// Transport-independent request router over a System. Safe to call from
/// several threads; all calls serialize on one lock.
class Api {
 public:
  using Query = std::map<std::string, std::string>;

  explicit Api(System& system) : system_(system) {}

  ApiResponse handle(const std::string& method, const std::string& path,
                     const Query& query = {}, const std::string& body = "");

  System& system() { return system_; }
  std::mutex& mutex() { return mu_; }

 private:
  ApiResponse route(const std::string& method, const std::string& path, const Query& query,
                    const nlohmann::json& body);

  System& system_;
  std::mutex mu_;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);
nlohmann::json error_body(const Error& e);

}  // namespace fabric
