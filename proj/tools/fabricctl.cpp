// fabricctl: operator CLI and server for the fabric controller.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fabric/api.hpp"
#include "fabric/error.hpp"
#include "fabric/http_server.hpp"
#include "fabric/system.hpp"

using nlohmann::json;

namespace {

struct Request {
  std::string method;
  std::string path;
  std::string body;
  fabric::Api::Query query;
};

struct Options {
  bool json_out = false;
  bool local = false;
  std::string addr;
  std::string topology;
  std::string peer_topology;
  std::string session;
  std::size_t replicas = 3;
};

std::string default_addr() {
  const char* env = std::getenv("FABRIC_BOD_ADDR");
  return env && *env ? env : "127.0.0.1:8640";
}

std::pair<std::string, int> split_addr(std::string addr) {
  if (auto p = addr.find("://"); p != std::string::npos) addr = addr.substr(p + 3);
  if (!addr.empty() && addr.back() == '/') addr.pop_back();
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) return {addr, 8640};
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

fabric::SystemConfig load_config(const std::string& topo, const std::string& peer,
                                 std::size_t replicas) {
  fabric::SystemConfig cfg;
  cfg.topologies.push_back(fabric::read_json_file(topo));
  if (!peer.empty()) cfg.topologies.push_back(fabric::read_json_file(peer));
  cfg.replicas = replicas;
  return cfg;
}

std::vector<json> read_session(const std::string& path) {
  std::vector<json> ops;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ops.push_back(json::parse(line));
  return ops;
}

void write_session(const std::string& path, const std::vector<json>& ops) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& op : ops) out << op.dump() << '\n';
}

// Returns {status, body}; status 0 means the transport failed.
std::pair<int, std::string> perform(const Options& opt, const Request& req) {
  if (opt.local) {
    if (opt.topology.empty()) throw CLI::ValidationError("--local needs --topology");
    fabric::System system(load_config(opt.topology, opt.peer_topology, opt.replicas));
    if (!opt.session.empty()) system.replay(read_session(opt.session));
    fabric::Api api(system);
    auto res = api.handle(req.method, req.path, req.query, req.body);
    if (!opt.session.empty()) write_session(opt.session, system.session());
    return {res.status, res.body};
  }
  auto [host, port] = split_addr(opt.addr);
  httplib::Client cli(host, port);
  cli.set_connection_timeout(3);
  cli.set_read_timeout(30);
  std::string path = req.path;
  if (!req.query.empty()) {
    httplib::Params params(req.query.begin(), req.query.end());
    path = httplib::append_query_params(path, params);
  }
  httplib::Result r;
  if (req.method == "GET") r = cli.Get(path);
  else if (req.method == "DELETE") r = cli.Delete(path);
  else r = cli.Post(path, req.body, "application/json");
  if (!r) return {0, httplib::to_string(r.error())};
  return {r->status, r->body};
}

std::string vlan_text(const json& v) { return v.is_null() ? "untagged" : std::to_string(v.get<int>()); }

std::string join(const json& arr, const char* sep = ",") {
  std::string out;
  for (const auto& x : arr) {
    if (!out.empty()) out += sep;
    out += x.is_string() ? x.get<std::string>() : x.dump();
  }
  return out.empty() ? "-" : out;
}

void print_service(const json& s) {
  std::cout << "service " << s["id"] << " " << s["state"].get<std::string>() << "  "
            << s["src"].get<std::string>() << "(" << vlan_text(s["src_vlan"]) << ") -> "
            << s["dst"].get<std::string>() << "(" << vlan_text(s["dst_vlan"]) << ")  "
            << s["mbps"] << " Mb/s  [" << s["start"] << "," << s["end"] << ")\n"
            << "  path " << join(s["path"]) << "\n  link_vlans " << join(s["link_vlans"]) << "\n";
}

void print_circuit(const json& c) {
  std::cout << "circuit " << c["name"].get<std::string>() << " " << c["state"].get<std::string>()
            << "  " << c["ep1"]["endpoint"].get<std::string>() << "(" << vlan_text(c["ep1"]["vlan"])
            << ") <-> " << c["ep2"]["endpoint"].get<std::string>() << "("
            << vlan_text(c["ep2"]["vlan"]) << ")\n  path " << join(c["path"])
            << "\n  link_vlans " << join(c["link_vlans"]) << "\n";
}

void print_event(const json& e, const std::string& indent = "") {
  std::cout << indent << e.value("kind", "?");
  for (const auto& [k, v] : e.items()) {
    if (k == "kind" || k == "events" || k == "entries" || k == "service" || k == "circuit") continue;
    std::cout << " " << k << "=" << (v.is_string() ? v.get<std::string>() : v.dump());
  }
  std::cout << "\n";
  if (e.contains("entries"))
    for (const auto& r : e["entries"])
      std::cout << indent << "  " << r["kind"].get<std::string>() << " " << r["id"].get<std::string>()
                << " " << r["outcome"].get<std::string>() << " " << join(r["old_path"]) << " => "
                << join(r["new_path"]) << "\n";
}

void print_nsi(const json& r) {
  std::cout << r["correlation_id"].get<std::string>() << " " << r["state"].get<std::string>()
            << "  stitch_vlan " << vlan_text(r["stitch_vlan"]) << "\n";
  for (const auto& s : r["segments"])
    std::cout << "  " << s["domain"].get<std::string>() << " " << s["state"].get<std::string>() << "\n";
  if (!r["reason"].get<std::string>().empty())
    std::cout << "  reason " << r["reason"].get<std::string>() << "\n";
}

void print_cluster(const json& c) {
  std::cout << "term " << c["term"] << "  leader "
            << (c["leader"].is_null() ? "none" : c["leader"].dump()) << "  quorum "
            << (c["quorum"].get<bool>() ? "yes" : "no") << "\n";
  for (const auto& r : c["replicas"])
    std::cout << "  replica " << r["id"] << " " << r["status"].get<std::string>() << " applied "
              << r["applied_index"] << "/" << r["log_length"] << "\n";
  if (c.contains("events"))
    for (const auto& e : c["events"]) print_event(e, "  ");
}

void print_topology(const json& t) {
  std::cout << "domain " << t["domain"].get<std::string>() << "  now " << t["now"] << "\n";
  for (const auto& v : t["vfcs"])
    std::cout << "vfc " << v["id"].get<std::string>() << " " << v["overlay"].get<std::string>()
              << " on " << v["device"].get<std::string>() << "\n";
  for (const auto& l : t["links"])
    std::cout << "link " << l["id"].get<std::string>() << " " << l["a"]["vfc"].get<std::string>()
              << " <-> " << l["b"]["vfc"].get<std::string>() << " " << l["capacity_mbps"]
              << " Mb/s " << l.value("state", "Up") << "\n";
  for (const auto& e : t["endpoints"])
    std::cout << "endpoint " << e["id"].get<std::string>() << " at " << e["vfc"].get<std::string>()
              << ":" << e["port"].get<std::string>() << "\n";
}

using Printer = std::function<void(const json&)>;

int run(const Options& opt, const Request& req, const Printer& printer) {
  std::pair<int, std::string> res;
  try {
    res = perform(opt, req);
  } catch (const fabric::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  auto [status, body] = res;
  if (status == 0) {
    std::cerr << "error: cannot reach " << opt.addr << ": " << body << "\n";
    return 3;
  }
  if (opt.json_out) {
    std::cout << body;
    return status < 400 ? 0 : 2;
  }
  if (status >= 400) {
    auto j = json::parse(body, nullptr, false);
    if (j.is_object() && j.value("error", "") == "Rejected")
      std::cerr << "Rejected(" << j.value("reason", "") << "): " << j.value("message", "") << "\n";
    else if (j.is_object())
      std::cerr << j.value("error", "Error") << ": " << j.value("message", "") << "\n";
    else
      std::cerr << body;
    return 2;
  }
  if (printer) {
    auto j = json::parse(body, nullptr, false);
    if (!j.is_discarded()) {
      printer(j);
      return 0;
    }
  }
  std::cout << body;
  return 0;
}

std::optional<fabric::HttpServer*> g_server;

int serve(const Options& opt, int port, const std::string& host, const std::string& trace,
          const std::string& nsi_trace, const std::string& record, const std::string& replay) {
  fabric::System system(load_config(opt.topology, opt.peer_topology, opt.replicas));
  std::ofstream trace_out, nsi_out;
  if (!trace.empty()) {
    trace_out.open(trace);
    system.set_frame_trace(&trace_out);
  }
  if (!nsi_trace.empty()) {
    nsi_out.open(nsi_trace);
    system.set_nsi_trace(&nsi_out);
  }
  if (!replay.empty()) system.replay(read_session(replay));
  fabric::Api api(system);
  fabric::HttpServer server(api);
  if (server.bind(host, port) < 0) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, [](int) { (*g_server)->stop(); });
  std::signal(SIGTERM, [](int) { (*g_server)->stop(); });
  std::cerr << "serving " << system.domains().size() << " domain(s) on " << host << ":" << port
            << "\n";
  server.listen();
  if (!record.empty()) write_session(record, system.session());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fabricctl: bandwidth-on-demand and SDX-L2 controller"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  opt.addr = default_addr();
  app.add_flag("--json", opt.json_out, "Print the raw JSON response body");
  app.add_option("--addr", opt.addr, "Service address host:port (env FABRIC_BOD_ADDR)");
  app.add_flag("--local", opt.local, "Run against an in-process instance");
  app.add_option("--topology", opt.topology, "Topology file (local mode and serve)");
  app.add_option("--peer-topology", opt.peer_topology, "Second domain topology");
  app.add_option("--session", opt.session, "Session file replayed and extended in local mode");
  app.add_option("--replicas", opt.replicas, "Controller replicas per domain")->check(CLI::Range(1, 15));
  std::string domain;
  app.add_option("--domain", domain, "Target domain");

  Request req;
  Printer printer;
  auto with_domain = [&](json body) {
    if (!domain.empty()) body["domain"] = domain;
    return body.dump();
  };

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  int port = 8640;
  std::string host = "127.0.0.1", trace, nsi_trace, record, replay;
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--trace", trace, "Write the per-hop frame trace to this file");
  serve_cmd->add_option("--nsi-trace", nsi_trace, "Write the NSI message trace to this file");
  serve_cmd->add_option("--record", record, "Write the session log here on shutdown");
  serve_cmd->add_option("--replay", replay, "Replay a session log at startup");

  app.add_subcommand("topo", "Show the topology")->callback([&] {
    req = {"GET", "/topology", "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = print_topology;
  });

  // bod
  auto* bod = app.add_subcommand("bod", "Bandwidth-on-demand services");
  bod->require_subcommand(1);
  auto* bod_req = bod->add_subcommand("request", "Request a service");
  std::string src, dst;
  long long mbps = 0, start = 0, end = 0;
  std::optional<int> src_vlan, dst_vlan;
  bod_req->add_option("--src", src)->required();
  bod_req->add_option("--dst", dst)->required();
  bod_req->add_option("--mbps", mbps)->required();
  bod_req->add_option("--start", start)->required();
  bod_req->add_option("--end", end)->required();
  bod_req->add_option("--src-vlan", src_vlan);
  bod_req->add_option("--dst-vlan", dst_vlan);
  bod_req->callback([&] {
    json b = {{"src", src}, {"dst", dst}, {"mbps", mbps}, {"start", start}, {"end", end}};
    if (src_vlan) b["src_vlan"] = *src_vlan;
    if (dst_vlan) b["dst_vlan"] = *dst_vlan;
    req = {"POST", "/bod/services", with_domain(b), {}};
    printer = print_service;
  });
  bod->add_subcommand("list", "List services")->callback([&] {
    req = {"GET", "/bod/services", "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = [](const json& j) {
      for (const auto& s : j) print_service(s);
    };
  });
  std::uint64_t service_id = 0;
  auto* bod_show = bod->add_subcommand("show", "Show one service");
  bod_show->add_option("id", service_id)->required();
  bod_show->callback([&] {
    req = {"GET", "/bod/services/" + std::to_string(service_id), "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = print_service;
  });
  auto* bod_cancel = bod->add_subcommand("cancel", "Cancel a service");
  bod_cancel->add_option("id", service_id)->required();
  bod_cancel->callback([&] {
    req = {"DELETE", "/bod/services/" + std::to_string(service_id), "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = [](const json& s) {
      print_service(s);
      std::cout << "  rules_removed " << s["rules_removed"] << "\n";
    };
  });

  // circuits
  auto* circ = app.add_subcommand("circuits", "SDX-L2 point-to-point circuits");
  circ->require_subcommand(1);
  auto* circ_create = circ->add_subcommand("create", "Create a circuit");
  std::string name, ep1, ep2;
  std::optional<int> vlan1, vlan2;
  circ_create->add_option("name", name)->required();
  circ_create->add_option("--ep1", ep1)->required();
  circ_create->add_option("--ep2", ep2)->required();
  circ_create->add_option("--vlan1", vlan1);
  circ_create->add_option("--vlan2", vlan2);
  circ_create->callback([&] {
    auto edge = [](const std::string& ep, std::optional<int> v) {
      return json{{"endpoint", ep}, {"vlan", v ? json(*v) : json(nullptr)}};
    };
    req = {"POST", "/sdxl2/circuits",
           with_domain({{"name", name}, {"ep1", edge(ep1, vlan1)}, {"ep2", edge(ep2, vlan2)}}), {}};
    printer = print_circuit;
  });
  circ->add_subcommand("list", "List circuits")->callback([&] {
    req = {"GET", "/sdxl2/circuits", "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = [](const json& j) {
      for (const auto& c : j) print_circuit(c);
    };
  });
  auto* circ_rm = circ->add_subcommand("remove", "Withdraw a circuit");
  circ_rm->add_option("name", name)->required();
  circ_rm->callback([&] {
    req = {"DELETE", "/sdxl2/circuits/" + name, "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = print_circuit;
  });

  // fail
  auto* fail = app.add_subcommand("fail", "Inject topology failures");
  fail->require_subcommand(1);
  bool up = false;
  std::string link_id, vfc, port_id;
  auto topo_printer = [](const json& j) {
    std::cout << j["vfc"].get<std::string>() << ":" << j["port"].get<std::string>() << " "
              << j["state"].get<std::string>() << "\n";
    for (const auto& e : j["events"]) print_event(e, "  ");
    for (auto r : j["recovery"]) {
      r["kind"] = "RecoveryReport";
      print_event(r, "  ");
    }
  };
  auto* fail_link = fail->add_subcommand("link", "Take a link down (its first port)");
  fail_link->add_option("id", link_id)->required();
  fail_link->add_flag("--up", up, "Bring it back up instead");
  fail_link->callback([&] {
    req = {"POST", "/events/link", with_domain({{"link_id", link_id}, {"state", up ? "Up" : "Down"}}), {}};
    printer = topo_printer;
  });
  auto* fail_port = fail->add_subcommand("port", "Set a logical port state");
  fail_port->add_option("vfc", vfc)->required();
  fail_port->add_option("port", port_id)->required();
  fail_port->add_flag("--up", up, "Bring it back up instead");
  fail_port->callback([&] {
    req = {"POST", "/events/link",
           with_domain({{"vfc", vfc}, {"port", port_id}, {"state", up ? "Up" : "Down"}}), {}};
    printer = topo_printer;
  });

  // clock
  auto* clock = app.add_subcommand("clock", "Virtual clock");
  clock->require_subcommand(1);
  long long ticks = 0;
  auto* adv = clock->add_subcommand("advance", "Advance the clock");
  adv->add_option("ticks", ticks)->required();
  adv->callback([&] {
    req = {"POST", "/clock/advance", json{{"ticks", ticks}}.dump(), {}};
    printer = [](const json& j) {
      std::cout << "now " << j["now"] << "\n";
      for (const auto& r : j["reports"])
        for (const auto& e : r["events"])
          print_event(e, "  tick " + r["tick"].dump() + " ");
    };
  });

  // inject
  auto* inj = app.add_subcommand("inject", "Inject frames at a client endpoint");
  std::string endpoint;
  std::optional<int> vlan;
  long long bits = 1000, count = 1;
  inj->add_option("--endpoint", endpoint)->required();
  inj->add_option("--vlan", vlan);
  inj->add_option("--bits", bits, "Frame size in bits");
  inj->add_option("--count", count);
  inj->callback([&] {
    json b = {{"endpoint", endpoint}, {"size_bits", bits}, {"count", count}};
    if (vlan) b["vlan"] = *vlan;
    req = {"POST", "/dataplane/inject", with_domain(b), {}};
    printer = [](const json& j) {
      std::cout << "sent " << j["sent"] << " delivered " << j["delivered"] << " dropped "
                << j["dropped"] << "\n";
      for (const auto& [reason, n] : j["drops"].items()) std::cout << "  drop " << reason << " " << n << "\n";
      for (const auto& d : j["delivered_at"])
        std::cout << "  at " << d["domain"].get<std::string>() << "/" << d["endpoint"].get<std::string>()
                  << " vlan " << vlan_text(d["vlan"]) << " frames " << d["frames"] << "\n";
      std::cout << "  hops " << join(j["first"]["hops"], " ") << "\n";
    };
  });

  // cluster
  auto* cl = app.add_subcommand("cluster", "Controller cluster");
  cl->require_subcommand(1);
  std::size_t replica = 0;
  cl->add_subcommand("status", "Show replicas")->callback([&] {
    req = {"GET", "/cluster", "", {}};
    if (!domain.empty()) req.query["domain"] = domain;
    printer = print_cluster;
  });
  for (const char* action : {"kill", "revive"}) {
    auto* sub = cl->add_subcommand(action, std::string(action) + " a replica");
    sub->add_option("id", replica)->required();
    sub->callback([&, action] {
      req = {"POST", "/cluster/" + std::to_string(replica) + "/" + action, "", {}};
      if (!domain.empty()) req.query["domain"] = domain;
      printer = print_cluster;
    });
  }

  // nsi
  auto* nsi = app.add_subcommand("nsi", "Inter-domain reservations");
  nsi->require_subcommand(1);
  auto* nsi_res = nsi->add_subcommand("reserve", "Reserve across domains");
  nsi_res->add_option("--src", src)->required();
  nsi_res->add_option("--dst", dst)->required();
  nsi_res->add_option("--mbps", mbps)->required();
  nsi_res->add_option("--start", start)->required();
  nsi_res->add_option("--end", end)->required();
  nsi_res->add_option("--src-vlan", src_vlan);
  nsi_res->add_option("--dst-vlan", dst_vlan);
  nsi_res->callback([&] {
    json b = {{"src", src}, {"dst", dst}, {"mbps", mbps}, {"start", start}, {"end", end}};
    if (src_vlan) b["src_vlan"] = *src_vlan;
    if (dst_vlan) b["dst_vlan"] = *dst_vlan;
    req = {"POST", "/nsi/reserve", with_domain(b), {}};
    printer = print_nsi;
  });
  std::string cid;
  for (const char* step : {"commit", "provision", "release"}) {
    auto* sub = nsi->add_subcommand(step, std::string(step) + " a reservation");
    sub->add_option("correlation_id", cid)->required();
    sub->callback([&, step] {
      req = {"POST", "/nsi/" + cid + "/" + step, "", {}};
      printer = print_nsi;
    });
  }
  nsi->add_subcommand("list", "List reservations")->callback([&] {
    req = {"GET", "/nsi", "", {}};
    printer = [](const json& j) {
      for (const auto& r : j) print_nsi(r);
    };
  });

  // events
  auto* ev = app.add_subcommand("events", "Print the event feed backlog");
  long long since = 0;
  ev->add_option("--since", since);
  ev->callback([&] {
    req = {"GET", "/events", "", {{"since", std::to_string(since)}, {"follow", "0"}}};
  });

  app.add_subcommand("hash", "Show state hashes")->callback([&] {
    req = {"GET", "/state/hash", "", {}};
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (serve_cmd->parsed()) {
      if (opt.topology.empty()) {
        std::cerr << "serve needs --topology\n";
        return 1;
      }
      return serve(opt, port, host, trace, nsi_trace, record, replay);
    }
    return run(opt, req, printer);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const fabric::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
