#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/types.hpp"

namespace fabric {

struct Allocation {
  Window window;
  Mbps bandwidth = 0;
  std::string owner;
  bool firm = true;
};

/// Untagged client traffic is held as vlan 0 on endpoint calendars.
struct VlanHold {
  Window window;
  Vlan vlan = 0;
  std::string owner;
  bool firm = true;
};

/// Time-interval ledger of bandwidth allocations and VLAN occupancy for one
/// link (or one client access port).
class ReservationCalendar {
 public:
  explicit ReservationCalendar(Mbps capacity = 0) : capacity_(capacity) {}

  Mbps capacity() const { return capacity_; }
  /// Maximum concurrent allocated bandwidth at any tick of `window`.
  Mbps peak_usage(const Window& window) const;
  Mbps residual(const Window& window) const {
    return capacity_ - peak_usage(window);
  }
  bool vlan_free(Vlan vlan, const Window& window) const;
  std::optional<Vlan> lowest_free_vlan(const Window& window,
                                       VlanRange range) const;

  void allocate(Allocation a) { allocations_.push_back(std::move(a)); }
  void hold_vlan(VlanHold h) { holds_.push_back(std::move(h)); }
  /// Drops every allocation and hold of `owner`; returns entries removed.
  std::size_t release(std::string_view owner);
  void set_firm(std::string_view owner, bool firm);
  void rename_owner(std::string_view from, const std::string& to);

  const std::vector<Allocation>& allocations() const { return allocations_; }
  const std::vector<VlanHold>& vlan_holds() const { return holds_; }
  bool empty() const { return allocations_.empty() && holds_.empty(); }

  nlohmann::json to_json() const;

 private:
  Mbps capacity_;
  std::vector<Allocation> allocations_;
  std::vector<VlanHold> holds_;
};

/// Calendars for every link and every client endpoint of a fabric.
class CalendarBook {
 public:
  ReservationCalendar& link(const std::string& id);
  const ReservationCalendar& link(const std::string& id) const;
  ReservationCalendar& endpoint(const std::string& id);
  const ReservationCalendar& endpoint(const std::string& id) const;

  void add_link(const std::string& id, Mbps capacity);
  void add_endpoint(const std::string& id, Mbps capacity);

  std::size_t release(std::string_view owner);
  std::size_t release_links(std::string_view owner);
  void set_firm(std::string_view owner, bool firm);
  void rename_owner(std::string_view from, const std::string& to);

  /// Whether anything at all is recorded for `owner`.
  bool holds_anything(std::string_view owner) const;

  const std::map<std::string, ReservationCalendar>& links() const { return links_; }
  const std::map<std::string, ReservationCalendar>& endpoints() const {
    return endpoints_;
  }

  nlohmann::json to_json() const;

 private:
  std::map<std::string, ReservationCalendar> links_;
  std::map<std::string, ReservationCalendar> endpoints_;
};

}  // namespace fabric
