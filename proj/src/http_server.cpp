#include "fabric/http_server.hpp"

#include <atomic>
#include <chrono>

#include <httplib.h>

namespace fabric {

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;
  std::atomic<bool> stopping{false};

  explicit Impl(Api& a) : api(a) {}

  static Api::Query query_of(const httplib::Request& req) {
    Api::Query q;
    for (const auto& [k, v] : req.params) q[k] = v;
    return q;
  }

  void forward(const httplib::Request& req, httplib::Response& res) {
    auto out = api.handle(req.method, req.path, query_of(req), req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  }

  void stream_events(const httplib::Request& req, httplib::Response& res) {
    auto q = query_of(req);
    if (q.count("follow") && q["follow"] == "0") return forward(req, res);
    std::int64_t since = 0;
    if (auto it = q.find("since"); it != q.end()) {
      try {
        since = std::stoll(it->second);
      } catch (const std::exception&) {
        since = 0;
      }
    }
    const EventLog& log = api.system().events();
    if (since < 0 || static_cast<std::uint64_t>(since) > log.last_seq()) since = 0;
    auto cursor = std::make_shared<std::uint64_t>(static_cast<std::uint64_t>(since));
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, &log, cursor](std::size_t, httplib::DataSink& sink) {
          for (const auto& e : log.since(static_cast<std::int64_t>(*cursor))) {
            auto line = e.dump() + "\n";
            if (!sink.write(line.data(), line.size())) return false;
            *cursor = e["seq"].get<std::uint64_t>();
          }
          if (stopping) {
            sink.done();
            return true;
          }
          log.wait_newer(*cursor, std::chrono::milliseconds(200));
          return sink.is_writable();
        });
  }
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {
  auto& s = impl_->server;
  auto fwd = [this](const httplib::Request& req, httplib::Response& res) {
    impl_->forward(req, res);
  };
  s.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->stream_events(req, res);
  });
  s.Get(".*", fwd);
  s.Post(".*", fwd);
  s.Delete(".*", fwd);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace fabric
