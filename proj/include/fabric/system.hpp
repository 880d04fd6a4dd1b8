#pragma once

#include <deque>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/cluster.hpp"
#include "fabric/dataplane.hpp"
#include "fabric/event_log.hpp"
#include "fabric/nsi.hpp"

namespace fabric {

struct SystemConfig {
  /// One topology document per domain; the first is the default domain.
  std::vector<nlohmann::json> topologies;
  std::size_t replicas = 3;
  VlanRange vlans{};
};

/// One administrative domain: a controller cluster driving its own
/// simulated data plane.
struct Domain {
  std::string name;
  std::unique_ptr<Dataplane> dataplane;
  std::unique_ptr<DataplaneSouthbound> southbound;
  std::unique_ptr<Cluster> cluster;
};

/// Everything the operator talks to: domains, the NSI message bus, the
/// event feed and the session log. Every mutation goes through execute(),
/// which records it so a session can be replayed.
class System {
 public:
  explicit System(SystemConfig config);
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  /// Runs one operation ({"op": ..., "domain"?: ..., ...}). Throws Error.
  nlohmann::json execute(const nlohmann::json& op);
  /// Replays a session (one operation per element); errors are recorded
  /// like in the original run.
  void replay(const std::vector<nlohmann::json>& session);

  nlohmann::json topology(const std::string& domain = "") const;
  nlohmann::json bod_services(const std::string& domain = "") const;
  nlohmann::json bod_service(std::uint64_t id, const std::string& domain = "") const;
  nlohmann::json circuits(const std::string& domain = "") const;
  nlohmann::json cluster_status(const std::string& domain = "") const;
  nlohmann::json nsi_reservations() const;
  nlohmann::json nsi_reservation(const std::string& cid) const;
  nlohmann::json rules(const std::string& domain = "") const;
  nlohmann::json hashes() const;

  const EventLog& events() const { return events_; }
  const std::vector<nlohmann::json>& session() const { return session_; }
  const std::vector<std::string>& nsi_trace() const { return nsi_trace_; }

  Domain& domain(const std::string& name = "");
  const Domain& domain(const std::string& name = "") const;
  const std::vector<std::unique_ptr<Domain>>& domains() const { return domains_; }

  void set_frame_trace(std::ostream* out);
  void set_nsi_trace(std::ostream* out) { nsi_out_ = out; }

 private:
  nlohmann::json dispatch(const std::string& op, const nlohmann::json& args);
  nlohmann::json submit(Domain& d, const nlohmann::json& command);
  void log_events(const std::string& domain, const std::vector<Event>& events);
  void pump();
  nlohmann::json advance(Tick ticks);
  nlohmann::json inject(Domain& d, const nlohmann::json& args);
  Domain* find_domain(const std::string& name);
  Domain& aggregator_of(const std::string& cid);
  SegmentState nsi_global(const std::string& cid) const;

  std::vector<std::unique_ptr<Domain>> domains_;
  EventLog events_;
  std::deque<NsiMessage> bus_;
  std::vector<nlohmann::json> session_;
  std::vector<std::string> nsi_trace_;
  std::ostream* nsi_out_ = nullptr;
};

}  // namespace fabric
