#include "fabric/sdxl2.hpp"

#include <algorithm>

#include "fabric/error.hpp"
#include "fabric/pathfinder.hpp"

namespace fabric {

std::string_view to_string(CircuitState state) {
  switch (state) {
    case CircuitState::Installed: return "Installed";
    case CircuitState::Rerouting: return "Rerouting";
    case CircuitState::Failed: return "Failed";
    case CircuitState::Withdrawn: return "Withdrawn";
  }
  return "?";
}

Sdxl2::Sdxl2(const Fabric& fabric, CalendarBook& calendars, FlowProgrammer& flows,
             VlanRange vlans)
    : fabric_(fabric), calendars_(calendars), flows_(flows), vlans_(vlans) {}

std::optional<PointToPointIntent> Sdxl2::route(const EdgeSpec& ep1, const EdgeSpec& ep2,
                                               Window window,
                                               const std::set<std::string>& excluded) const {
  const auto& a = fabric_.require_endpoint(ep1.endpoint);
  const auto& b = fabric_.require_endpoint(ep2.endpoint);
  PathQuery q{kOverlaySdxl2, a.attachment.vfc, b.attachment.vfc, 0, window, excluded, vlans_};
  auto path = compute_path(fabric_, calendars_, q);
  if (!path) return std::nullopt;
  PointToPointIntent intent{a.attachment, b.attachment, *path, {}};
  for (const auto& id : intent.path)
    intent.link_vlans.push_back(*calendars_.link(id).lowest_free_vlan(window, vlans_));
  return intent;
}

void Sdxl2::hold_links(const L2Circuit& c, Window window) {
  for (std::size_t i = 0; i < c.intent.path.size(); ++i)
    calendars_.link(c.intent.path[i])
        .hold_vlan({window, c.intent.link_vlans[i], c.cookie, true});
}

const L2Circuit& Sdxl2::create_circuit(const std::string& name, const EdgeSpec& ep1,
                                       const EdgeSpec& ep2, Tick now,
                                       std::vector<Event>* events) {
  if (name.empty()) throw Error(ErrorCode::BadRequest, "circuit name is empty");
  if (auto it = circuits_.find(name);
      it != circuits_.end() && it->second.state != CircuitState::Withdrawn)
    throw Error(ErrorCode::DuplicateName, name);
  if (ep1.endpoint == ep2.endpoint)
    throw Error(ErrorCode::BadRequest, "circuit endpoints must differ");
  for (const auto* ep : {&ep1, &ep2}) {
    const auto& e = fabric_.require_endpoint(ep->endpoint);
    if (fabric_.require_vfc(e.attachment.vfc).overlay != kOverlaySdxl2)
      throw Error(ErrorCode::UnknownEndpoint, e.id + " is not an SDX-L2 endpoint");
    if (ep->vlan && (*ep->vlan < 1 || *ep->vlan > 4094))
      throw Error(ErrorCode::InvalidVlan, std::to_string(*ep->vlan));
  }
  const Window window{now, kForever};
  for (const auto* ep : {&ep1, &ep2})
    if (!calendars_.endpoint(ep->endpoint).vlan_free(ep->vlan.value_or(0), window))
      throw Error(ErrorCode::EndpointBusy,
                  ep->endpoint + (ep->vlan ? " vlan " + std::to_string(*ep->vlan)
                                           : " untagged"));
  auto intent = route(ep1, ep2, window, {});
  if (!intent)
    throw Error(ErrorCode::Infeasible, "no path " + ep1.endpoint + " -> " + ep2.endpoint);

  L2Circuit c{name, ep1, ep2, *intent, CircuitState::Installed, "l2:" + name};
  for (const auto* ep : {&ep1, &ep2})
    calendars_.endpoint(ep->endpoint).hold_vlan({window, ep->vlan.value_or(0), c.cookie, true});
  hold_links(c, window);
  const auto n = flows_.install(c.cookie, compile(c));
  auto& stored = circuits_.insert_or_assign(name, std::move(c)).first->second;
  if (events)
    events->emplace_back("CircuitInstalled",
                         nlohmann::json{{"circuit", fabric::to_json(stored)}, {"rules_installed", n}});
  return stored;
}

std::size_t Sdxl2::remove_circuit(const std::string& name, std::vector<Event>* events) {
  auto it = circuits_.find(name);
  if (it == circuits_.end() || it->second.state == CircuitState::Withdrawn)
    throw Error(ErrorCode::UnknownCircuit, name);
  auto& c = it->second;
  const auto n = flows_.remove(c.cookie);
  calendars_.release(c.cookie);
  c.state = CircuitState::Withdrawn;
  if (events)
    events->emplace_back("CircuitWithdrawn",
                         nlohmann::json{{"name", name}, {"rules_removed", n}});
  return n;
}

std::vector<const L2Circuit*> Sdxl2::list_circuits() const {
  std::vector<const L2Circuit*> out;
  for (const auto& [name, c] : circuits_) out.push_back(&c);
  return out;
}

std::vector<std::string> Sdxl2::installed_on_link(const std::string& link_id) const {
  std::vector<std::string> names;
  for (const auto& [name, c] : circuits_)
    if (c.state == CircuitState::Installed &&
        std::find(c.intent.path.begin(), c.intent.path.end(), link_id) != c.intent.path.end())
      names.push_back(name);
  return names;
}

RerouteOutcome Sdxl2::reroute(const std::string& name, const std::string& dead_link,
                              Tick now) {
  auto it = circuits_.find(name);
  if (it == circuits_.end()) throw Error(ErrorCode::UnknownCircuit, name);
  auto& c = it->second;
  if (c.state != CircuitState::Installed)
    throw Error(ErrorCode::WrongState, name + " is not Installed");

  c.state = CircuitState::Rerouting;
  RerouteOutcome out;
  out.old_path = c.intent.path;
  out.rules_removed = flows_.remove(c.cookie);
  calendars_.release_links(c.cookie);
  const Window window{now, kForever};
  auto intent = route(c.ep1, c.ep2, window, {dead_link});
  if (!intent) {
    calendars_.release(c.cookie);
    c.state = CircuitState::Failed;
    return out;
  }
  c.intent = *intent;
  hold_links(c, window);
  out.rules_installed = flows_.install(c.cookie, compile(c));
  out.new_path = c.intent.path;
  out.rerouted = true;
  c.state = CircuitState::Installed;
  return out;
}

const L2Circuit* Sdxl2::circuit(const std::string& name) const {
  auto it = circuits_.find(name);
  return it == circuits_.end() ? nullptr : &it->second;
}

CompiledService Sdxl2::compile(const L2Circuit& c) const {
  return compile_service(fabric_, c.cookie, c.ep1, c.ep2, c.intent.path,
                         c.intent.link_vlans, std::nullopt);
}

nlohmann::json Sdxl2::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [name, c] : circuits_) j.push_back(fabric::to_json(c));
  return j;
}

namespace {
nlohmann::json edge_json(const EdgeSpec& e) {
  return {{"endpoint", e.endpoint},
          {"vlan", e.vlan ? nlohmann::json(*e.vlan) : nlohmann::json(nullptr)}};
}
}  // namespace

nlohmann::json to_json(const L2Circuit& c) {
  return {{"name", c.name},
          {"ep1", edge_json(c.ep1)},
          {"ep2", edge_json(c.ep2)},
          {"path", c.intent.path},
          {"link_vlans", c.intent.link_vlans},
          {"state", to_string(c.state)},
          {"cookie", c.cookie}};
}

EdgeSpec edge_from_json(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>(), std::nullopt};
  if (!j.is_object() || !j.contains("endpoint") || !j["endpoint"].is_string())
    throw Error(ErrorCode::BadRequest, "edge needs an endpoint");
  EdgeSpec e{j["endpoint"].get<std::string>(), std::nullopt};
  if (auto it = j.find("vlan"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw Error(ErrorCode::BadRequest, "vlan must be an integer");
    auto v = it->get<std::int64_t>();
    if (v < 1 || v > 4094) throw Error(ErrorCode::InvalidVlan, std::to_string(v));
    e.vlan = static_cast<Vlan>(v);
  }
  return e;
}

}  // namespace fabric
