#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/calendar.hpp"
#include "fabric/error.hpp"
#include "fabric/event.hpp"
#include "fabric/failover.hpp"
#include "fabric/flows.hpp"
#include "fabric/nsi.hpp"
#include "fabric/scheduler.hpp"
#include "fabric/sdxl2.hpp"
#include "fabric/topology.hpp"

namespace fabric {

/// Outcome of applying one command. Failed commands carry the error and
/// leave the state untouched.
struct CommandResult {
  bool ok = true;
  nlohmann::json body = nlohmann::json::object();
  std::vector<Event> events;
  std::vector<NsiMessage> outbound;
  std::optional<ErrorCode> error;
  std::string message;

  nlohmann::json to_json() const;
  /// Throws the recorded Error when !ok.
  const CommandResult& check() const;
};

/// The replicated state machine: fabric view, calendars, services,
/// circuits and NSI records. Every mutation is a JSON command with an "op".
class Controller {
 public:
  explicit Controller(Fabric fabric, VlanRange vlans = {});
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  CommandResult apply(const nlohmann::json& command);

  void attach(Southbound* sb) { flows_.attach(sb); }
  Southbound* southbound() const { return flows_.southbound(); }

  Tick now() const { return now_; }
  const Fabric& fabric() const { return fabric_; }
  const CalendarBook& calendars() const { return calendars_; }
  const BodScheduler& bod() const { return bod_; }
  const Sdxl2& sdxl2() const { return sdx_; }
  const NsiAgent& nsi() const { return nsi_; }
  const FlowProgrammer& flows() const { return flows_; }

  nlohmann::json state_json() const;
  std::uint64_t state_hash() const;

 private:
  nlohmann::json dispatch(const std::string& op, const nlohmann::json& cmd,
                          CommandResult& result);
  nlohmann::json port_change(const PortRef& port, PortState state, CommandResult& result);
  nlohmann::json advance(Tick ticks, CommandResult& result);

  Fabric fabric_;
  CalendarBook calendars_;
  FlowProgrammer flows_;
  BodScheduler bod_;
  Sdxl2 sdx_;
  Failover failover_;
  NsiAgent nsi_;
  Tick now_ = 0;
};

/// Command builders, shared by the API, CLI, bindings and tests.
namespace cmd {
nlohmann::json bod_request(const BodRequest& r);
nlohmann::json bod_cancel(std::uint64_t id);
nlohmann::json l2_create(const std::string& name, const EdgeSpec& ep1, const EdgeSpec& ep2);
nlohmann::json l2_remove(const std::string& name);
nlohmann::json port_state(const PortRef& port, PortState state);
nlohmann::json link_state(const std::string& link, PortState state);
nlohmann::json advance(Tick ticks);
nlohmann::json nsi_reserve(const NsiGlobalRequest& r);
nlohmann::json nsi_step(const std::string& op, const std::string& cid);
nlohmann::json nsi_deliver(const NsiMessage& m);
}  // namespace cmd

PortState port_state_from_string(std::string_view s);

}  // namespace fabric
