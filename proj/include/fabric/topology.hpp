#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/types.hpp"

namespace fabric {

inline constexpr std::size_t kMaxVfcsPerDevice = 256;

struct PhysicalPort {
  std::string id;
  Mbps speed = 0;
};

struct PhysicalDevice {
  std::string id;
  std::vector<PhysicalPort> ports;
  std::size_t vfc_count = 0;

  const PhysicalPort* port(const std::string& port_id) const;
};

enum class BackingKind { Physical, VlanTunnel };

/// What a VFC logical port rides on: a whole physical port, or one VLAN
/// tunnel carved out of it.
struct PortBacking {
  BackingKind kind = BackingKind::Physical;
  std::string physical_port;
  Vlan tunnel_vlan = 0;

  static PortBacking physical(std::string port) {
    return {BackingKind::Physical, std::move(port), 0};
  }
  static PortBacking tunnel(std::string port, Vlan vlan) {
    return {BackingKind::VlanTunnel, std::move(port), vlan};
  }
};

enum class PortState { Up, Down };
enum class LinkState { Up, Down };

struct LogicalPortSpec {
  std::string id;
  PortBacking backing;
};

struct LogicalPort {
  std::string id;
  PortBacking backing;
  PortState state = PortState::Up;
};

struct Vfc {
  std::string id;
  std::string device;
  std::string overlay;
  std::vector<LogicalPort> logical_ports;

  const LogicalPort* port(const std::string& port_id) const;
};

struct Link {
  std::string id;
  PortRef end_a;
  PortRef end_b;
  Mbps capacity = 0;
  LinkState state = LinkState::Up;

  /// The end of this link attached to `vfc`; nullptr if it does not touch it.
  const PortRef* end_at(const std::string& vfc) const;
  const PortRef& peer_of(const PortRef& end) const;
};

struct ClientEndpoint {
  std::string id;
  PortRef attachment;
  Mbps access_speed = 0;
};

/// A boundary towards a neighbouring domain: frames delivered to `endpoint`
/// continue at `peer_endpoint` inside `peer_domain`.
struct InterDomainLink {
  std::string id;
  std::string endpoint;
  std::string peer_domain;
  std::string peer_endpoint;
};

struct TopologyEvent {
  enum class Kind { PortDown, PortUp, LinkDown, LinkUp };
  Kind kind;
  PortRef port;
  std::string link;  // set for LinkDown/LinkUp
};

std::string_view to_string(TopologyEvent::Kind kind);
std::string_view to_string(PortState state);
std::string_view to_string(LinkState state);

/// Devices, their VFCs, inter-VFC links and client attachments. All
/// containers keep insertion order so that iteration is deterministic.
class Fabric {
 public:
  Fabric() = default;

  const PhysicalDevice& add_device(const std::string& id,
                                   std::vector<PhysicalPort> ports);
  const Vfc& carve_vfc(const std::string& device_id, const std::string& vfc_id,
                       const std::string& overlay,
                       std::vector<LogicalPortSpec> ports);
  /// Removes a VFC whose logical ports carry no link or endpoint.
  void remove_vfc(const std::string& vfc_id);
  /// An empty id is replaced by "link-<n>".
  const Link& add_link(const std::string& id, const PortRef& a,
                       const PortRef& b, Mbps capacity_mbps);
  const ClientEndpoint& add_endpoint(const std::string& id,
                                     const PortRef& attachment,
                                     Mbps access_mbps);
  void add_interdomain_link(InterDomainLink link);

  /// Idempotent: an unchanged state produces no events.
  std::vector<TopologyEvent> set_port_state(const PortRef& port,
                                            PortState state);

  const PhysicalDevice* device(const std::string& id) const;
  const Vfc* vfc(const std::string& id) const;
  const Link* link(const std::string& id) const;
  const ClientEndpoint* endpoint(const std::string& id) const;
  const LogicalPort* port(const PortRef& ref) const;

  const PhysicalDevice& require_device(const std::string& id) const;
  const Vfc& require_vfc(const std::string& id) const;
  const Link& require_link(const std::string& id) const;
  const ClientEndpoint& require_endpoint(const std::string& id) const;
  const LogicalPort& require_port(const PortRef& ref) const;

  const std::vector<PhysicalDevice>& devices() const { return devices_; }
  const std::vector<Vfc>& vfcs() const { return vfcs_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<ClientEndpoint>& endpoints() const { return endpoints_; }
  const std::vector<InterDomainLink>& interdomain_links() const {
    return interdomain_;
  }

  const Link* link_at(const PortRef& port) const;
  const ClientEndpoint* endpoint_at(const PortRef& port) const;
  const InterDomainLink* interdomain_at(const std::string& endpoint) const;

  /// Link state recomputed from its two port states.
  LinkState derived_state(const Link& link) const;

  const std::string& domain() const { return domain_; }
  void set_domain(std::string name) { domain_ = std::move(name); }

  /// Topology document (same schema as the loader) plus live states.
  nlohmann::json to_json() const;

 private:
  LogicalPort* mutable_port(const PortRef& ref);
  void check_backings(const PhysicalDevice& dev,
                      const std::vector<LogicalPortSpec>& ports) const;

  std::string domain_ = "local";
  std::vector<PhysicalDevice> devices_;
  std::vector<Vfc> vfcs_;
  std::vector<Link> links_;
  std::vector<ClientEndpoint> endpoints_;
  std::vector<InterDomainLink> interdomain_;
  std::map<std::string, std::size_t> device_index_;
  std::map<std::string, std::size_t> vfc_index_;
  std::map<std::string, std::size_t> link_index_;
  std::map<std::string, std::size_t> endpoint_index_;
  // logical port -> id of the link or endpoint occupying it
  std::map<PortRef, std::string> port_links_;
  std::map<PortRef, std::string> port_endpoints_;
};

/// Builds a fabric from a topology document. Structural problems and
/// constructor failures are reported as ParseError naming the entry
/// (e.g. "links[2]").
Fabric load_topology(const nlohmann::json& document);
Fabric load_topology_text(const std::string& text);
Fabric load_topology_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);

}  // namespace fabric
