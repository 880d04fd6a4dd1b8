#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/calendar.hpp"
#include "fabric/event.hpp"
#include "fabric/flows.hpp"
#include "fabric/topology.hpp"
#include "fabric/types.hpp"

namespace fabric {

struct BodRequest {
  std::string src;
  std::string dst;
  Mbps bandwidth = 0;
  Window window;
  std::optional<Vlan> src_vlan;
  std::optional<Vlan> dst_vlan;
};

enum class ServiceState { Scheduled, Active, Expired, Cancelled, Failed };
std::string_view to_string(ServiceState state);

struct BodService {
  std::uint64_t id = 0;
  std::string cookie;
  BodRequest request;
  Path path;
  std::vector<Vlan> link_vlans;
  ServiceState state = ServiceState::Scheduled;
  Mbps meter_rate = 0;
  /// Window currently held on the path links (shrinks on reroute).
  Window link_window;

  bool terminal() const {
    return state == ServiceState::Expired || state == ServiceState::Cancelled ||
           state == ServiceState::Failed;
  }
};

/// A path plus VLANs that passed admission.
struct Admission {
  Path path;
  std::vector<Vlan> link_vlans;
};

/// Resources reserved but not yet turned into a service (NSI two-phase).
struct Hold {
  std::string owner;
  BodRequest request;
  Admission admission;
  bool firm = false;
};

struct RerouteOutcome {
  bool rerouted = false;
  Path old_path;
  Path new_path;
  std::size_t rules_removed = 0;
  std::size_t rules_installed = 0;
};

/// Time-windowed bandwidth admission over per-link calendars, and service
/// activation/expiry on the virtual clock.
class BodScheduler {
 public:
  BodScheduler(const Fabric& fabric, CalendarBook& calendars,
               FlowProgrammer& flows, VlanRange vlans = {});

  /// Admits and records a service. Rejections throw Error with
  /// Infeasible / BadWindow / EndpointBusy; nothing is written on failure.
  const BodService& request_service(const BodRequest& request, Tick now,
                                    std::vector<Event>* events = nullptr);
  /// Returns the number of rules removed.
  std::size_t cancel_service(std::uint64_t id, Tick now,
                             std::vector<Event>* events = nullptr);
  std::vector<Event> on_tick(Tick t);

  /// Feasibility check without recording anything.
  Admission admit(const BodRequest& request, Tick now,
                  const std::set<std::string>& excluded = {}) const;

  const Hold& hold(const BodRequest& request, const std::string& owner, Tick now);
  void commit_hold(const std::string& owner);
  void release_hold(const std::string& owner);
  const BodService& provision_hold(const std::string& owner, Tick now,
                                   std::vector<Event>* events = nullptr);
  const Hold* find_hold(const std::string& owner) const;

  /// Active services whose path uses `link_id`, ascending id.
  std::vector<std::uint64_t> active_on_link(const std::string& link_id) const;
  /// Re-admits an Active service avoiding `dead_link`; Failed (and fully
  /// released) when no path remains.
  RerouteOutcome reroute(std::uint64_t id, const std::string& dead_link, Tick now);

  CompiledService compile(const BodService& service) const;

  const BodService* service(std::uint64_t id) const;
  const BodService& require_service(std::uint64_t id) const;
  const std::map<std::uint64_t, BodService>& services() const { return services_; }
  const std::map<std::string, Hold>& holds() const { return holds_; }
  VlanRange vlan_range() const { return vlans_; }

  nlohmann::json to_json() const;

 private:
  void validate(const BodRequest& request, Tick now) const;
  void write(const std::string& owner, const BodRequest& request,
             const Admission& admission, bool firm);
  void write_links(const std::string& owner, const Admission& admission,
                   Window window, Mbps bandwidth, bool firm);
  void activate(BodService& svc, Tick now, std::vector<Event>& events);
  BodService& new_service(const BodRequest& request, const Admission& admission);

  const Fabric& fabric_;
  CalendarBook& calendars_;
  FlowProgrammer& flows_;
  VlanRange vlans_;
  std::map<std::uint64_t, BodService> services_;
  std::map<std::string, Hold> holds_;
  std::uint64_t next_id_ = 1;
};

nlohmann::json to_json(const BodService& service);
nlohmann::json to_json(const BodRequest& request);
BodRequest bod_request_from_json(const nlohmann::json& j);

}  // namespace fabric
