#include "fabric/controller.hpp"

namespace fabric {

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::BadRequest, std::string("missing field ") + key);
  return *it;
}

std::string str_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw Error(ErrorCode::BadRequest, std::string(key) + " must be a string");
  return v.get<std::string>();
}

std::int64_t int_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer())
    throw Error(ErrorCode::BadRequest, std::string(key) + " must be an integer");
  return v.get<std::int64_t>();
}

CalendarBook make_calendars(const Fabric& f) {
  CalendarBook book;
  for (const auto& l : f.links()) book.add_link(l.id, l.capacity);
  for (const auto& e : f.endpoints()) book.add_endpoint(e.id, e.access_speed);
  return book;
}

nlohmann::json edge_json(const EdgeSpec& e) {
  return {{"endpoint", e.endpoint},
          {"vlan", e.vlan ? nlohmann::json(*e.vlan) : nlohmann::json(nullptr)}};
}

}  // namespace

PortState port_state_from_string(std::string_view s) {
  if (s == "Up" || s == "up") return PortState::Up;
  if (s == "Down" || s == "down") return PortState::Down;
  throw Error(ErrorCode::BadRequest, "state must be Up or Down");
}

nlohmann::json CommandResult::to_json() const {
  nlohmann::json j = {{"ok", ok}, {"body", body}, {"events", nlohmann::json::array()}};
  for (const auto& e : events) j["events"].push_back(e.to_json());
  if (error) {
    j["error"] = to_string(*error);
    j["message"] = message;
  }
  return j;
}

const CommandResult& CommandResult::check() const {
  if (!ok) throw Error(*error, message);
  return *this;
}

Controller::Controller(Fabric fabric, VlanRange vlans)
    : fabric_(std::move(fabric)),
      calendars_(make_calendars(fabric_)),
      bod_(fabric_, calendars_, flows_, vlans),
      sdx_(fabric_, calendars_, flows_, vlans),
      failover_(fabric_, bod_, sdx_),
      nsi_(fabric_, calendars_, bod_) {}

CommandResult Controller::apply(const nlohmann::json& command) {
  CommandResult result;
  try {
    if (!command.is_object()) throw Error(ErrorCode::BadRequest, "command must be an object");
    result.body = dispatch(str_field(command, "op"), command, result);
  } catch (const Error& e) {
    result = CommandResult{};
    result.ok = false;
    result.error = e.code();
    result.message = e.detail();
  }
  return result;
}

nlohmann::json Controller::dispatch(const std::string& op, const nlohmann::json& c,
                                    CommandResult& result) {
  auto& ev = result.events;
  if (op == "bod.request")
    return to_json(bod_.request_service(bod_request_from_json(c), now_, &ev));
  if (op == "bod.cancel") {
    const auto id = static_cast<std::uint64_t>(int_field(c, "id"));
    const auto removed = bod_.cancel_service(id, now_, &ev);
    auto j = to_json(bod_.require_service(id));
    j["rules_removed"] = removed;
    return j;
  }
  if (op == "l2.create")
    return to_json(sdx_.create_circuit(str_field(c, "name"), edge_from_json(field(c, "ep1")),
                                       edge_from_json(field(c, "ep2")), now_, &ev));
  if (op == "l2.remove") {
    const auto name = str_field(c, "name");
    const auto removed = sdx_.remove_circuit(name, &ev);
    auto j = to_json(*sdx_.circuit(name));
    j["rules_removed"] = removed;
    return j;
  }
  if (op == "topo.port")
    return port_change({str_field(c, "vfc"), str_field(c, "port")},
                       port_state_from_string(str_field(c, "state")), result);
  if (op == "topo.link") {
    const auto& link = fabric_.require_link(str_field(c, "link_id"));
    auto body = port_change(link.end_a, port_state_from_string(str_field(c, "state")), result);
    body["link_id"] = link.id;
    return body;
  }
  if (op == "clock.advance") return advance(int_field(c, "ticks"), result);
  if (op == "nsi.reserve")
    return nsi_.reserve(nsi_request_from_json(c), now_, result.outbound, ev).to_json();
  if (op == "nsi.commit")
    return nsi_.commit(str_field(c, "correlation_id"), result.outbound, ev).to_json();
  if (op == "nsi.provision")
    return nsi_.provision(str_field(c, "correlation_id"), now_, result.outbound, ev).to_json();
  if (op == "nsi.release")
    return nsi_.release(str_field(c, "correlation_id"), now_, result.outbound, ev).to_json();
  if (op == "nsi.deliver") {
    auto msg = NsiMessage::from_json(field(c, "message"));
    nsi_.deliver(msg, now_, result.outbound, ev);
    return nsi_.require(msg.correlation_id).to_json();
  }
  throw Error(ErrorCode::BadRequest, "unknown op " + op);
}

nlohmann::json Controller::port_change(const PortRef& port, PortState state,
                                       CommandResult& result) {
  fabric_.require_port(port);
  if (auto* sb = flows_.southbound()) sb->set_port_state(port, state);
  nlohmann::json body = {{"vfc", port.vfc},
                         {"port", port.port},
                         {"state", to_string(state)},
                         {"events", nlohmann::json::array()},
                         {"recovery", nlohmann::json::array()}};
  for (const auto& te : fabric_.set_port_state(port, state)) {
    Event e{std::string(to_string(te.kind)),
            {{"vfc", te.port.vfc}, {"port", te.port.port}}};
    if (!te.link.empty()) e.body["link"] = te.link;
    result.events.push_back(e);
    body["events"].push_back(e.to_json());
    if (te.kind == TopologyEvent::Kind::LinkDown) {
      auto report = failover_.handle_link_down(te.link, now_).to_json();
      result.events.emplace_back("RecoveryReport", report);
      body["recovery"].push_back(report);
    } else if (te.kind == TopologyEvent::Kind::LinkUp) {
      failover_.handle_link_up(te.link);
    }
  }
  return body;
}

nlohmann::json Controller::advance(Tick ticks, CommandResult& result) {
  if (ticks < 0) throw Error(ErrorCode::BadRequest, "ticks must be >= 0");
  nlohmann::json reports = nlohmann::json::array();
  for (Tick i = 0; i < ticks; ++i) {
    ++now_;
    if (auto* sb = flows_.southbound()) sb->tick();
    TickReport report{now_, bod_.on_tick(now_)};
    nsi_.tick_hold_timeouts(now_, result.outbound, report.events);
    // Quiet ticks are folded away except the last one, which marks where
    // the clock stopped.
    if (report.events.empty() && i + 1 < ticks) continue;
    auto j = report.to_json();
    reports.push_back(j);
    j.erase("kind");
    result.events.emplace_back("TickReport", j);
  }
  return {{"now", now_}, {"reports", reports}};
}

nlohmann::json Controller::state_json() const {
  nlohmann::json flows = nlohmann::json::object();
  for (const auto& [cookie, n] : flows_.by_cookie()) flows[cookie] = n;
  return {{"now", now_},
          {"fabric", fabric_.to_json()},
          {"calendars", calendars_.to_json()},
          {"bod", bod_.to_json()},
          {"sdxl2", sdx_.to_json()},
          {"nsi", nsi_.to_json()},
          {"flows", flows}};
}

std::uint64_t Controller::state_hash() const { return fnv1a(state_json().dump()); }

namespace cmd {

nlohmann::json bod_request(const BodRequest& r) {
  auto j = to_json(r);
  j["op"] = "bod.request";
  return j;
}
nlohmann::json bod_cancel(std::uint64_t id) { return {{"op", "bod.cancel"}, {"id", id}}; }
nlohmann::json l2_create(const std::string& name, const EdgeSpec& ep1, const EdgeSpec& ep2) {
  return {{"op", "l2.create"}, {"name", name}, {"ep1", edge_json(ep1)}, {"ep2", edge_json(ep2)}};
}
nlohmann::json l2_remove(const std::string& name) { return {{"op", "l2.remove"}, {"name", name}}; }
nlohmann::json port_state(const PortRef& port, PortState state) {
  return {{"op", "topo.port"}, {"vfc", port.vfc}, {"port", port.port}, {"state", to_string(state)}};
}
nlohmann::json link_state(const std::string& link, PortState state) {
  return {{"op", "topo.link"}, {"link_id", link}, {"state", to_string(state)}};
}
nlohmann::json advance(Tick ticks) { return {{"op", "clock.advance"}, {"ticks", ticks}}; }
nlohmann::json nsi_reserve(const NsiGlobalRequest& r) {
  auto j = to_json(BodRequest{r.src, r.dst, r.bandwidth, r.window, r.src_vlan, r.dst_vlan});
  j["op"] = "nsi.reserve";
  return j;
}
nlohmann::json nsi_step(const std::string& op, const std::string& cid) {
  return {{"op", "nsi." + op}, {"correlation_id", cid}};
}
nlohmann::json nsi_deliver(const NsiMessage& m) {
  return {{"op", "nsi.deliver"}, {"message", m.to_json()}};
}

}  // namespace cmd

}  // namespace fabric
