#pragma once

#include <memory>
#include <string>
#include <thread>

#include "fabric/api.hpp"

namespace fabric {

/// HTTP front end for an Api. GET /events streams JSON lines until the
/// client disconnects (or returns the backlog only with follow=0).
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool listen();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace fabric
