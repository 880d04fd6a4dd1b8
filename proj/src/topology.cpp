#include "fabric/topology.hpp"

#include <algorithm>
#include <set>

#include "fabric/error.hpp"

namespace fabric {

namespace {

bool valid_speed(Mbps speed) {
  return speed == 1000 || speed == 10000 || speed == 100000;
}

std::string describe(const PortRef& ref) { return ref.vfc + ":" + ref.port; }

}  // namespace

std::string_view to_string(TopologyEvent::Kind kind) {
  switch (kind) {
    case TopologyEvent::Kind::PortDown: return "PortDown";
    case TopologyEvent::Kind::PortUp: return "PortUp";
    case TopologyEvent::Kind::LinkDown: return "LinkDown";
    case TopologyEvent::Kind::LinkUp: return "LinkUp";
  }
  return "?";
}

std::string_view to_string(PortState state) {
  return state == PortState::Up ? "Up" : "Down";
}

std::string_view to_string(LinkState state) {
  return state == LinkState::Up ? "Up" : "Down";
}

const PhysicalPort* PhysicalDevice::port(const std::string& port_id) const {
  auto it = std::find_if(ports.begin(), ports.end(),
                         [&](const PhysicalPort& p) { return p.id == port_id; });
  return it == ports.end() ? nullptr : &*it;
}

const LogicalPort* Vfc::port(const std::string& port_id) const {
  auto it = std::find_if(logical_ports.begin(), logical_ports.end(),
                         [&](const LogicalPort& p) { return p.id == port_id; });
  return it == logical_ports.end() ? nullptr : &*it;
}

const PortRef* Link::end_at(const std::string& vfc) const {
  if (end_a.vfc == vfc) return &end_a;
  if (end_b.vfc == vfc) return &end_b;
  return nullptr;
}

const PortRef& Link::peer_of(const PortRef& end) const {
  return end == end_a ? end_b : end_a;
}

const PhysicalDevice& Fabric::add_device(const std::string& id,
                                         std::vector<PhysicalPort> ports) {
  if (id.empty()) throw Error(ErrorCode::BadRequest, "device id is empty");
  if (device_index_.count(id))
    throw Error(ErrorCode::DuplicateId, "device " + id);
  std::set<std::string> seen;
  for (const auto& p : ports) {
    if (!valid_speed(p.speed))
      throw Error(ErrorCode::InvalidSpeed,
                  "port " + p.id + " speed " + std::to_string(p.speed));
    if (!seen.insert(p.id).second)
      throw Error(ErrorCode::DuplicateId, "port " + p.id + " on " + id);
  }
  device_index_[id] = devices_.size();
  devices_.push_back({id, std::move(ports), 0});
  return devices_.back();
}

void Fabric::check_backings(const PhysicalDevice& dev,
                            const std::vector<LogicalPortSpec>& ports) const {
  // Occupancy of every physical port on this device, existing VFCs first.
  struct Usage {
    bool physical = false;
    std::set<Vlan> tunnels;
  };
  std::map<std::string, Usage> usage;
  for (const auto& v : vfcs_) {
    if (v.device != dev.id) continue;
    for (const auto& lp : v.logical_ports) {
      auto& u = usage[lp.backing.physical_port];
      if (lp.backing.kind == BackingKind::Physical)
        u.physical = true;
      else
        u.tunnels.insert(lp.backing.tunnel_vlan);
    }
  }
  for (const auto& spec : ports) {
    const auto& b = spec.backing;
    if (!dev.port(b.physical_port))
      throw Error(ErrorCode::UnknownPort,
                  "physical port " + b.physical_port + " on " + dev.id);
    auto& u = usage[b.physical_port];
    if (b.kind == BackingKind::Physical) {
      if (u.physical || !u.tunnels.empty())
        throw Error(ErrorCode::PhysicalPortAlreadyDedicated,
                    dev.id + ":" + b.physical_port);
      u.physical = true;
    } else {
      if (b.tunnel_vlan < kMinServiceVlan || b.tunnel_vlan > kMaxServiceVlan)
        throw Error(ErrorCode::InvalidVlan,
                    "tunnel vlan " + std::to_string(b.tunnel_vlan));
      if (u.physical)
        throw Error(ErrorCode::PhysicalPortAlreadyDedicated,
                    dev.id + ":" + b.physical_port);
      if (!u.tunnels.insert(b.tunnel_vlan).second)
        throw Error(ErrorCode::TunnelVlanConflict,
                    dev.id + ":" + b.physical_port + " vlan " +
                        std::to_string(b.tunnel_vlan));
    }
  }
}

const Vfc& Fabric::carve_vfc(const std::string& device_id,
                             const std::string& vfc_id,
                             const std::string& overlay,
                             std::vector<LogicalPortSpec> ports) {
  auto dit = device_index_.find(device_id);
  if (dit == device_index_.end())
    throw Error(ErrorCode::UnknownDevice, device_id);
  auto& dev = devices_[dit->second];
  if (vfc_id.empty()) throw Error(ErrorCode::BadRequest, "vfc id is empty");
  if (vfc_index_.count(vfc_id))
    throw Error(ErrorCode::DuplicateId, "vfc " + vfc_id);
  if (dev.vfc_count >= kMaxVfcsPerDevice)
    throw Error(ErrorCode::VfcLimitExceeded,
                device_id + " already hosts " + std::to_string(dev.vfc_count));
  std::set<std::string> ids;
  for (const auto& p : ports)
    if (!ids.insert(p.id).second)
      throw Error(ErrorCode::DuplicatePort, vfc_id + ":" + p.id);
  check_backings(dev, ports);

  Vfc vfc{vfc_id, device_id, overlay, {}};
  for (auto& p : ports)
    vfc.logical_ports.push_back({std::move(p.id), std::move(p.backing),
                                 PortState::Up});
  ++dev.vfc_count;
  vfc_index_[vfc_id] = vfcs_.size();
  vfcs_.push_back(std::move(vfc));
  return vfcs_.back();
}

void Fabric::remove_vfc(const std::string& vfc_id) {
  auto it = vfc_index_.find(vfc_id);
  if (it == vfc_index_.end()) throw Error(ErrorCode::UnknownVfc, vfc_id);
  const Vfc& v = vfcs_[it->second];
  for (const auto& lp : v.logical_ports) {
    PortRef ref{vfc_id, lp.id};
    if (port_links_.count(ref) || port_endpoints_.count(ref))
      throw Error(ErrorCode::PortInUse, describe(ref));
  }
  devices_[device_index_.at(v.device)].vfc_count--;
  vfcs_.erase(vfcs_.begin() + static_cast<std::ptrdiff_t>(it->second));
  vfc_index_.clear();
  for (std::size_t i = 0; i < vfcs_.size(); ++i) vfc_index_[vfcs_[i].id] = i;
}

const Link& Fabric::add_link(const std::string& id, const PortRef& a,
                             const PortRef& b, Mbps capacity_mbps) {
  std::string link_id = id.empty() ? "link-" + std::to_string(links_.size() + 1) : id;
  if (link_index_.count(link_id))
    throw Error(ErrorCode::DuplicateId, "link " + link_id);
  if (a == b) throw Error(ErrorCode::SelfLink, describe(a));
  const auto& va = require_vfc(a.vfc);
  const auto& vb = require_vfc(b.vfc);
  require_port(a);
  require_port(b);
  if (capacity_mbps <= 0)
    throw Error(ErrorCode::InvalidCapacity, std::to_string(capacity_mbps));
  for (const auto* end : {&a, &b})
    if (port_links_.count(*end) || port_endpoints_.count(*end))
      throw Error(ErrorCode::PortInUse, describe(*end));
  if (va.overlay != vb.overlay)
    throw Error(ErrorCode::CrossOverlayLink,
                va.overlay + " vs " + vb.overlay);

  Link link{link_id, a, b, capacity_mbps, LinkState::Up};
  link.state = derived_state(link);
  port_links_[a] = link_id;
  port_links_[b] = link_id;
  link_index_[link_id] = links_.size();
  links_.push_back(std::move(link));
  return links_.back();
}

const ClientEndpoint& Fabric::add_endpoint(const std::string& id,
                                           const PortRef& attachment,
                                           Mbps access_mbps) {
  if (id.empty()) throw Error(ErrorCode::BadRequest, "endpoint id is empty");
  if (endpoint_index_.count(id))
    throw Error(ErrorCode::DuplicateId, "endpoint " + id);
  require_port(attachment);
  if (access_mbps <= 0)
    throw Error(ErrorCode::InvalidCapacity, std::to_string(access_mbps));
  if (port_links_.count(attachment) || port_endpoints_.count(attachment))
    throw Error(ErrorCode::PortInUse, describe(attachment));
  port_endpoints_[attachment] = id;
  endpoint_index_[id] = endpoints_.size();
  endpoints_.push_back({id, attachment, access_mbps});
  return endpoints_.back();
}

void Fabric::add_interdomain_link(InterDomainLink link) {
  require_endpoint(link.endpoint);
  if (link.peer_domain.empty() || link.peer_endpoint.empty())
    throw Error(ErrorCode::BadRequest, "interdomain link needs a peer");
  for (const auto& l : interdomain_)
    if (l.id == link.id || l.endpoint == link.endpoint)
      throw Error(ErrorCode::DuplicateId, "interdomain link " + link.id);
  interdomain_.push_back(std::move(link));
}

std::vector<TopologyEvent> Fabric::set_port_state(const PortRef& ref,
                                                  PortState state) {
  LogicalPort* port = mutable_port(ref);
  if (!port) throw Error(ErrorCode::UnknownPort, describe(ref));
  std::vector<TopologyEvent> events;
  if (port->state == state) return events;
  port->state = state;
  events.push_back({state == PortState::Down ? TopologyEvent::Kind::PortDown
                                             : TopologyEvent::Kind::PortUp,
                    ref, {}});
  if (auto it = port_links_.find(ref); it != port_links_.end()) {
    Link& link = links_[link_index_.at(it->second)];
    LinkState next = derived_state(link);
    if (next != link.state) {
      link.state = next;
      events.push_back({next == LinkState::Down ? TopologyEvent::Kind::LinkDown
                                                : TopologyEvent::Kind::LinkUp,
                        ref, link.id});
    }
  }
  return events;
}

LinkState Fabric::derived_state(const Link& link) const {
  const auto* a = port(link.end_a);
  const auto* b = port(link.end_b);
  bool up = a && b && a->state == PortState::Up && b->state == PortState::Up;
  return up ? LinkState::Up : LinkState::Down;
}

const PhysicalDevice* Fabric::device(const std::string& id) const {
  auto it = device_index_.find(id);
  return it == device_index_.end() ? nullptr : &devices_[it->second];
}

const Vfc* Fabric::vfc(const std::string& id) const {
  auto it = vfc_index_.find(id);
  return it == vfc_index_.end() ? nullptr : &vfcs_[it->second];
}

const Link* Fabric::link(const std::string& id) const {
  auto it = link_index_.find(id);
  return it == link_index_.end() ? nullptr : &links_[it->second];
}

const ClientEndpoint* Fabric::endpoint(const std::string& id) const {
  auto it = endpoint_index_.find(id);
  return it == endpoint_index_.end() ? nullptr : &endpoints_[it->second];
}

const LogicalPort* Fabric::port(const PortRef& ref) const {
  const Vfc* v = vfc(ref.vfc);
  return v ? v->port(ref.port) : nullptr;
}

LogicalPort* Fabric::mutable_port(const PortRef& ref) {
  auto it = vfc_index_.find(ref.vfc);
  if (it == vfc_index_.end()) return nullptr;
  auto& ports = vfcs_[it->second].logical_ports;
  auto pit = std::find_if(ports.begin(), ports.end(),
                          [&](const LogicalPort& p) { return p.id == ref.port; });
  return pit == ports.end() ? nullptr : &*pit;
}

const PhysicalDevice& Fabric::require_device(const std::string& id) const {
  if (const auto* d = device(id)) return *d;
  throw Error(ErrorCode::UnknownDevice, id);
}

const Vfc& Fabric::require_vfc(const std::string& id) const {
  if (const auto* v = vfc(id)) return *v;
  throw Error(ErrorCode::UnknownVfc, id);
}

const Link& Fabric::require_link(const std::string& id) const {
  if (const auto* l = link(id)) return *l;
  throw Error(ErrorCode::UnknownLink, id);
}

const ClientEndpoint& Fabric::require_endpoint(const std::string& id) const {
  if (const auto* e = endpoint(id)) return *e;
  throw Error(ErrorCode::UnknownEndpoint, id);
}

const LogicalPort& Fabric::require_port(const PortRef& ref) const {
  if (const auto* p = port(ref)) return *p;
  throw Error(ErrorCode::UnknownPort, describe(ref));
}

const Link* Fabric::link_at(const PortRef& ref) const {
  auto it = port_links_.find(ref);
  return it == port_links_.end() ? nullptr : link(it->second);
}

const ClientEndpoint* Fabric::endpoint_at(const PortRef& ref) const {
  auto it = port_endpoints_.find(ref);
  return it == port_endpoints_.end() ? nullptr : endpoint(it->second);
}

const InterDomainLink* Fabric::interdomain_at(const std::string& ep) const {
  for (const auto& l : interdomain_)
    if (l.endpoint == ep) return &l;
  return nullptr;
}

nlohmann::json Fabric::to_json() const {
  using nlohmann::json;
  json doc = {{"domain", domain_},
              {"devices", json::array()},
              {"vfcs", json::array()},
              {"links", json::array()},
              {"endpoints", json::array()}};
  for (const auto& d : devices_) {
    json ports = json::array();
    for (const auto& p : d.ports)
      ports.push_back({{"id", p.id}, {"speed_mbps", p.speed}});
    doc["devices"].push_back(
        {{"id", d.id}, {"ports", ports}, {"vfc_count", d.vfc_count}});
  }
  for (const auto& v : vfcs_) {
    json ports = json::array();
    for (const auto& p : v.logical_ports) {
      json backing = {{"kind", p.backing.kind == BackingKind::Physical
                                   ? "physical"
                                   : "tunnel"},
                      {"physical_port", p.backing.physical_port}};
      if (p.backing.kind == BackingKind::VlanTunnel)
        backing["tunnel_vlan"] = p.backing.tunnel_vlan;
      ports.push_back({{"id", p.id},
                       {"backing", backing},
                       {"state", to_string(p.state)}});
    }
    doc["vfcs"].push_back({{"id", v.id},
                           {"device", v.device},
                           {"overlay", v.overlay},
                           {"ports", ports}});
  }
  for (const auto& l : links_)
    doc["links"].push_back(
        {{"id", l.id},
         {"a", {{"vfc", l.end_a.vfc}, {"port", l.end_a.port}}},
         {"b", {{"vfc", l.end_b.vfc}, {"port", l.end_b.port}}},
         {"capacity_mbps", l.capacity},
         {"state", to_string(l.state)}});
  for (const auto& e : endpoints_)
    doc["endpoints"].push_back({{"id", e.id},
                                {"vfc", e.attachment.vfc},
                                {"port", e.attachment.port},
                                {"access_mbps", e.access_speed}});
  if (!interdomain_.empty()) {
    doc["interdomain_links"] = json::array();
    for (const auto& l : interdomain_)
      doc["interdomain_links"].push_back({{"id", l.id},
                                          {"endpoint", l.endpoint},
                                          {"peer_domain", l.peer_domain},
                                          {"peer_endpoint", l.peer_endpoint}});
  }
  return doc;
}

}  // namespace fabric
