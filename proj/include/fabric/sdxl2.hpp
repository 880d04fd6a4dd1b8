#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/calendar.hpp"
#include "fabric/event.hpp"
#include "fabric/flows.hpp"
#include "fabric/scheduler.hpp"
#include "fabric/topology.hpp"

namespace fabric {

struct PointToPointIntent {
  PortRef src;
  PortRef dst;
  Path path;
  std::vector<Vlan> link_vlans;
};

enum class CircuitState { Installed, Rerouting, Failed, Withdrawn };
std::string_view to_string(CircuitState state);

struct L2Circuit {
  std::string name;
  EdgeSpec ep1;
  EdgeSpec ep2;
  PointToPointIntent intent;
  CircuitState state = CircuitState::Installed;
  std::string cookie;
};

/// Best-effort point-to-point layer-2 circuits on the SDXL2 overlay.
/// Unmetered; plain-Ethernet edges get a transport tag pushed and popped.
class Sdxl2 {
 public:
  Sdxl2(const Fabric& fabric, CalendarBook& calendars, FlowProgrammer& flows,
        VlanRange vlans = {});

  const L2Circuit& create_circuit(const std::string& name, const EdgeSpec& ep1,
                                  const EdgeSpec& ep2, Tick now,
                                  std::vector<Event>* events = nullptr);
  /// Returns rules removed.
  std::size_t remove_circuit(const std::string& name,
                             std::vector<Event>* events = nullptr);
  /// Stable name order, including withdrawn circuits.
  std::vector<const L2Circuit*> list_circuits() const;

  std::vector<std::string> installed_on_link(const std::string& link_id) const;
  RerouteOutcome reroute(const std::string& name, const std::string& dead_link,
                         Tick now);

  const L2Circuit* circuit(const std::string& name) const;
  CompiledService compile(const L2Circuit& circuit) const;

  nlohmann::json to_json() const;

 private:
  std::optional<PointToPointIntent> route(const EdgeSpec& ep1, const EdgeSpec& ep2,
                                          Window window,
                                          const std::set<std::string>& excluded) const;
  void hold_links(const L2Circuit& c, Window window);

  const Fabric& fabric_;
  CalendarBook& calendars_;
  FlowProgrammer& flows_;
  VlanRange vlans_;
  std::map<std::string, L2Circuit> circuits_;
};

nlohmann::json to_json(const L2Circuit& circuit);
EdgeSpec edge_from_json(const nlohmann::json& j);

}  // namespace fabric
