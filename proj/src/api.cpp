#include "fabric/api.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "fabric/error.hpp"

namespace fabric {

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::int64_t to_int(const std::string& s, ErrorCode code) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw Error(code, s);
  return v;
}

ApiResponse json_response(int status, const nlohmann::json& j) {
  return {status, j.dump() + "\n"};
}

}  // namespace

int http_status(ErrorCode code) {
  if (is_rejection(code)) return 422;
  switch (code) {
    case ErrorCode::NoQuorum: return 503;
    case ErrorCode::UnknownDevice:
    case ErrorCode::UnknownVfc:
    case ErrorCode::UnknownPort:
    case ErrorCode::UnknownLink:
    case ErrorCode::UnknownEndpoint:
    case ErrorCode::UnknownService:
    case ErrorCode::UnknownCircuit:
    case ErrorCode::UnknownReplica:
    case ErrorCode::UnknownCorrelation:
    case ErrorCode::UnknownDomain: return 404;
    case ErrorCode::WrongState:
    case ErrorCode::AlreadyTerminal:
    case ErrorCode::DuplicateName:
    case ErrorCode::DuplicateId: return 409;
    default: return 400;
  }
}

nlohmann::json error_body(const Error& e) {
  if (is_rejection(e.code()))
    return {{"error", "Rejected"}, {"reason", to_string(e.code())}, {"message", e.detail()}};
  return {{"error", to_string(e.code())}, {"message", e.detail()}};
}

ApiResponse Api::handle(const std::string& method, const std::string& path, const Query& query,
                        const std::string& body) {
  std::lock_guard lock(mu_);
  try {
    nlohmann::json parsed = nlohmann::json::object();
    if (!body.empty() && body.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        parsed = nlohmann::json::parse(body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::BadRequest, std::string("invalid JSON body: ") + e.what());
      }
      if (!parsed.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
    }
    return route(method, path, query, parsed);
  } catch (const Error& e) {
    return json_response(http_status(e.code()), error_body(e));
  } catch (const nlohmann::json::exception& e) {
    return json_response(400, {{"error", "BadRequest"}, {"message", e.what()}});
  }
}

ApiResponse Api::route(const std::string& method, const std::string& path, const Query& query,
                       const nlohmann::json& body) {
  const auto parts = split_path(path);
  const auto n = parts.size();
  auto q = [&](const std::string& key) {
    auto it = query.find(key);
    return it == query.end() ? std::string() : it->second;
  };
  const std::string dom = body.contains("domain") && body["domain"].is_string()
                              ? body["domain"].get<std::string>()
                              : q("domain");
  auto op = [&](const std::string& name, nlohmann::json args) {
    args["op"] = name;
    if (!dom.empty()) args["domain"] = dom;
    return system_.execute(args);
  };
  auto is = [&](std::initializer_list<const char*> want) {
    if (want.size() != n) return false;
    std::size_t i = 0;
    for (const char* w : want) {
      if (std::string(w) != "*" && parts[i] != w) return false;
      ++i;
    }
    return true;
  };
  const bool get = method == "GET", post = method == "POST", del = method == "DELETE";

  if (get && is({"topology"})) return json_response(200, system_.topology(dom));
  if (is({"bod", "services"})) {
    if (get) return json_response(200, system_.bod_services(dom));
    if (post) return json_response(201, op("bod.request", body));
  }
  if (is({"bod", "services", "*"})) {
    const auto id = to_int(parts[2], ErrorCode::UnknownService);
    if (get) return json_response(200, system_.bod_service(static_cast<std::uint64_t>(id), dom));
    if (del) return json_response(200, op("bod.cancel", {{"id", id}}));
  }
  if (is({"sdxl2", "circuits"})) {
    if (get) return json_response(200, system_.circuits(dom));
    if (post) return json_response(201, op("l2.create", body));
  }
  if (del && is({"sdxl2", "circuits", "*"}))
    return json_response(200, op("l2.remove", {{"name", parts[2]}}));
  if (post && is({"events", "link"})) {
    if (body.contains("link_id")) return json_response(200, op("topo.link", body));
    return json_response(200, op("topo.port", body));
  }
  if (get && is({"events"})) {
    std::int64_t since = 0;
    if (auto s = q("since"); !s.empty()) {
      try {
        since = to_int(s, ErrorCode::BadRequest);
      } catch (const Error&) {
        since = 0;
      }
    }
    std::string out;
    for (const auto& e : system_.events().since(since)) out += e.dump() + "\n";
    return {200, out, "application/x-ndjson"};
  }
  if (post && is({"clock", "advance"})) return json_response(200, op("clock.advance", body));
  if (post && is({"dataplane", "inject"})) return json_response(200, op("dataplane.inject", body));
  if (get && is({"dataplane", "rules"})) return json_response(200, system_.rules(dom));
  if (get && is({"cluster"})) return json_response(200, system_.cluster_status(dom));
  if (post && (is({"cluster", "*", "kill"}) || is({"cluster", "*", "revive"}))) {
    const auto id = to_int(parts[1], ErrorCode::UnknownReplica);
    return json_response(200, op("cluster." + parts[2], {{"id", id}}));
  }
  if (post && is({"nsi", "reserve"})) return json_response(201, op("nsi.reserve", body));
  if (get && is({"nsi"})) return json_response(200, system_.nsi_reservations());
  if (get && is({"nsi", "trace"})) {
    std::string out;
    for (const auto& line : system_.nsi_trace()) out += line + "\n";
    return {200, out, "text/plain"};
  }
  if (post && n == 3 && parts[0] == "nsi" &&
      (parts[2] == "commit" || parts[2] == "provision" || parts[2] == "release"))
    return json_response(200, op("nsi." + parts[2], {{"correlation_id", parts[1]}}));
  if (get && is({"nsi", "*"})) return json_response(200, system_.nsi_reservation(parts[1]));
  if (get && is({"state", "hash"})) return json_response(200, system_.hashes());
  if (get && is({"session"})) {
    std::string out;
    for (const auto& s : system_.session()) out += s.dump() + "\n";
    return {200, out, "application/x-ndjson"};
  }
  return json_response(404, {{"error", "NotFound"}, {"message", method + " " + path}});
}

}  // namespace fabric
