#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/calendar.hpp"
#include "fabric/event.hpp"
#include "fabric/scheduler.hpp"
#include "fabric/topology.hpp"

namespace fabric {

inline constexpr Tick kNsiHoldTicks = 50;

enum class SegmentState { Checking, Held, Committed, Provisioned, Released, Failed };
std::string_view to_string(SegmentState state);
SegmentState segment_state_from_string(std::string_view s);

/// Folds two segment states into the reservation's global state.
SegmentState global_state(SegmentState a, SegmentState b);

enum class NsiKind {
  Reserve, ReserveConfirmed, ReserveFailed,
  Commit, Committed, Provision, Provisioned, Release, Released
};
std::string_view to_string(NsiKind kind);
NsiKind nsi_kind_from_string(std::string_view s);

struct NsiMessage {
  NsiKind kind = NsiKind::Reserve;
  std::string correlation_id;
  std::string from;
  std::string to;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static NsiMessage from_json(const nlohmann::json& j);
};

struct NsiSegment {
  std::string domain;
  SegmentState state = SegmentState::Checking;
  std::optional<Tick> hold_deadline;
  std::optional<std::uint64_t> service_id;
};

struct NsiGlobalRequest {
  std::string src;  // in the aggregator domain
  std::string dst;  // in the peer domain
  Mbps bandwidth = 0;
  Window window;
  std::optional<Vlan> src_vlan;
  std::optional<Vlan> dst_vlan;
};

struct NsiReservation {
  std::string correlation_id;
  bool aggregator = false;
  NsiGlobalRequest request;
  std::optional<Vlan> stitch_vlan;
  std::string boundary_endpoint;  // local side
  NsiSegment local;
  /// What this side knows about the other domain's segment.
  NsiSegment remote;
  std::string reason;

  SegmentState global() const { return global_state(local.state, remote.state); }
  nlohmann::json to_json() const;
};

/// One domain's half of the simplified NSI Connection Service. Requests that
/// originate here make this side the aggregator; inbound Reserve messages
/// create peer-side records.
class NsiAgent {
 public:
  NsiAgent(const Fabric& fabric, const CalendarBook& calendars, BodScheduler& bod);

  /// Outbound messages are appended to `out`.
  const NsiReservation& reserve(const NsiGlobalRequest& request, Tick now,
                                std::vector<NsiMessage>& out,
                                std::vector<Event>& events);
  const NsiReservation& commit(const std::string& cid, std::vector<NsiMessage>& out,
                               std::vector<Event>& events);
  const NsiReservation& provision(const std::string& cid, Tick now,
                                  std::vector<NsiMessage>& out,
                                  std::vector<Event>& events);
  const NsiReservation& release(const std::string& cid, Tick now,
                                std::vector<NsiMessage>& out,
                                std::vector<Event>& events);
  void deliver(const NsiMessage& msg, Tick now, std::vector<NsiMessage>& out,
               std::vector<Event>& events);
  /// Held segments whose deadline has passed release and fail. Returns the
  /// expired correlation ids.
  std::vector<std::string> tick_hold_timeouts(Tick t, std::vector<NsiMessage>& out,
                                              std::vector<Event>& events);

  const NsiReservation* find(const std::string& cid) const;
  const NsiReservation& require(const std::string& cid) const;
  const std::map<std::string, NsiReservation>& reservations() const { return records_; }

  nlohmann::json to_json() const;

 private:
  NsiReservation& mutable_require(const std::string& cid);
  std::string owner(const std::string& cid) const { return "nsi:" + cid; }
  void release_local(NsiReservation& r, Tick now);
  NsiMessage message(NsiKind kind, const NsiReservation& r,
                     nlohmann::json payload = nlohmann::json::object()) const;
  void note(std::vector<Event>& events, const NsiReservation& r) const;

  const Fabric& fabric_;
  const CalendarBook& calendars_;
  BodScheduler& bod_;
  std::map<std::string, NsiReservation> records_;
  std::uint64_t next_ = 1;
};

NsiGlobalRequest nsi_request_from_json(const nlohmann::json& j);

}  // namespace fabric
