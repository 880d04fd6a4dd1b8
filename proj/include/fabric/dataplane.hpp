#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/event.hpp"
#include "fabric/topology.hpp"
#include "fabric/types.hpp"

namespace fabric {

inline constexpr std::size_t kMaxHops = 32;

struct VlanMatch {
  enum class Kind { Untagged, Tagged, Any };
  Kind kind = Kind::Any;
  Vlan vlan = 0;

  static VlanMatch untagged() { return {Kind::Untagged, 0}; }
  static VlanMatch tagged(Vlan v) { return {Kind::Tagged, v}; }
  static VlanMatch any() { return {Kind::Any, 0}; }

  bool matches(std::optional<Vlan> tag) const;
  friend bool operator==(const VlanMatch&, const VlanMatch&) = default;
};

struct Match {
  std::string in_port;
  VlanMatch vlan;
  friend bool operator==(const Match&, const Match&) = default;
};

namespace action {
struct Meter {
  std::string meter_id;
  friend bool operator==(const Meter&, const Meter&) = default;
};
struct PushVlan {
  Vlan vlan;
  friend bool operator==(const PushVlan&, const PushVlan&) = default;
};
struct SetVlan {
  Vlan vlan;
  friend bool operator==(const SetVlan&, const SetVlan&) = default;
};
struct PopVlan {
  friend bool operator==(const PopVlan&, const PopVlan&) = default;
};
struct Output {
  std::string port;
  friend bool operator==(const Output&, const Output&) = default;
};
}  // namespace action

using Action = std::variant<action::Meter, action::PushVlan, action::SetVlan,
                            action::PopVlan, action::Output>;

struct FlowRule {
  std::string cookie;
  std::string vfc;
  int priority = 0;
  Match match;
  std::vector<Action> actions;
  friend bool operator==(const FlowRule&, const FlowRule&) = default;
};

/// Checks the action-list shape: one Output, last; VLAN edits legal for
/// the tag state at that point. Throws InvalidRule / InvalidVlan.
void validate_actions(const FlowRule& rule);

struct MeterSpec {
  std::string id;
  std::string cookie;
  Mbps rate = 0;
  Bits burst = 0;
};

/// Token bucket. Refilled by rate x 1 tick at each tick boundary.
struct Meter {
  std::string id;
  std::string cookie;
  Mbps rate = 0;
  Bits burst = 0;
  Bits tokens = 0;
};

struct InstalledRule {
  std::uint64_t seq = 0;
  FlowRule rule;
};

struct Frame {
  std::string ingress;
  std::optional<Vlan> vlan;
  Bits size = 0;
  Tick inject_tick = 0;
};

enum class DropReason { NoMatch, MeterExceeded, PortDown, LoopLimit };
std::string_view to_string(DropReason reason);

struct Delivered {
  std::string endpoint;
  std::optional<Vlan> vlan;
  friend bool operator==(const Delivered&, const Delivered&) = default;
};

struct Dropped {
  DropReason reason;
  friend bool operator==(const Dropped&, const Dropped&) = default;
};

struct DeliveryResult {
  std::variant<Delivered, Dropped> outcome;
  std::vector<std::string> hops;

  bool delivered() const { return std::holds_alternative<Delivered>(outcome); }
  const Delivered* delivery() const { return std::get_if<Delivered>(&outcome); }
  std::optional<DropReason> drop_reason() const;
  friend bool operator==(const DeliveryResult&, const DeliveryResult&) = default;
};

using TickObserver = std::function<std::vector<Event>(Tick)>;

/// Flow tables, meters and frame forwarding over a fabric, driven by a
/// discrete virtual clock. Single-threaded and deterministic.
class Dataplane {
 public:
  explicit Dataplane(Fabric fabric);

  const Fabric& fabric() const { return fabric_; }
  std::vector<TopologyEvent> set_port_state(const PortRef& port,
                                            PortState state);

  void install_rules(const std::string& vfc, std::vector<FlowRule> rules,
                     std::vector<MeterSpec> meters = {});
  /// Removes every rule and meter owned by `cookie`; returns rules removed.
  std::size_t remove_rules(const std::string& cookie);

  DeliveryResult inject_frame(Frame frame);

  std::vector<TickReport> advance_clock(Tick ticks);
  /// Observers run once per tick, in registration order, after refill.
  void add_tick_observer(std::string name, TickObserver observer);
  Tick now() const { return now_; }

  /// Rules of one VFC in insertion order.
  std::vector<InstalledRule> rules(const std::string& vfc) const;
  std::size_t rule_count() const;
  std::size_t rule_count(const std::string& cookie) const;
  const Meter* meter(const std::string& vfc, const std::string& id) const;
  /// The rule `inject_frame` would fire for this lookup key.
  const InstalledRule* lookup(const std::string& vfc, const std::string& in_port,
                              std::optional<Vlan> vlan) const;

  std::uint64_t rule_table_hash() const;
  std::uint64_t state_hash() const;
  nlohmann::json rules_json() const;

  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  struct Table {
    std::vector<InstalledRule> rules;  // insertion order
    // in_port -> indices into `rules`, ordered by (priority desc, seq asc)
    std::map<std::string, std::vector<std::size_t>> by_port;
    std::map<std::string, Meter> meters;
    void reindex();
  };

  nlohmann::json tables_json(bool include_runtime) const;
  void trace_hop(std::uint64_t frame_id, const std::string& vfc,
                 const InstalledRule* rule, const std::string& summary) const;

  Fabric fabric_;
  std::map<std::string, Table> tables_;
  std::vector<std::pair<std::string, TickObserver>> observers_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_frame_ = 1;
  std::ostream* trace_ = nullptr;
};

nlohmann::json to_json(const FlowRule& rule);
nlohmann::json to_json(const Action& action);
nlohmann::json to_json(const DeliveryResult& result);
std::string summarize(const std::vector<Action>& actions);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace fabric
