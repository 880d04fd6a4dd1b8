#include "fabric/calendar.hpp"

#include <algorithm>
#include <set>

#include "fabric/error.hpp"

namespace fabric {

Mbps ReservationCalendar::peak_usage(const Window& window) const {
  if (window.empty()) return 0;
  // Sweep over clipped breakpoints; releases sort before starts at one tick
  // because windows are half-open.
  std::vector<std::pair<Tick, Mbps>> deltas;
  for (const auto& a : allocations_) {
    if (!a.window.overlaps(window)) continue;
    deltas.emplace_back(std::max(a.window.start, window.start), a.bandwidth);
    deltas.emplace_back(std::min(a.window.end, window.end), -a.bandwidth);
  }
  std::sort(deltas.begin(), deltas.end());
  Mbps current = 0;
  Mbps peak = 0;
  for (const auto& [t, d] : deltas) {
    current += d;
    peak = std::max(peak, current);
  }
  return peak;
}

bool ReservationCalendar::vlan_free(Vlan vlan, const Window& window) const {
  return std::none_of(holds_.begin(), holds_.end(), [&](const VlanHold& h) {
    return h.vlan == vlan && h.window.overlaps(window);
  });
}

std::optional<Vlan> ReservationCalendar::lowest_free_vlan(const Window& window,
                                                          VlanRange range) const {
  std::set<Vlan> busy;
  for (const auto& h : holds_)
    if (h.window.overlaps(window)) busy.insert(h.vlan);
  for (unsigned v = range.low; v <= range.high; ++v)
    if (!busy.count(static_cast<Vlan>(v))) return static_cast<Vlan>(v);
  return std::nullopt;
}

std::size_t ReservationCalendar::release(std::string_view owner) {
  auto n = std::erase_if(allocations_,
                         [&](const Allocation& a) { return a.owner == owner; });
  n += std::erase_if(holds_, [&](const VlanHold& h) { return h.owner == owner; });
  return n;
}

void ReservationCalendar::set_firm(std::string_view owner, bool firm) {
  for (auto& a : allocations_)
    if (a.owner == owner) a.firm = firm;
  for (auto& h : holds_)
    if (h.owner == owner) h.firm = firm;
}

void ReservationCalendar::rename_owner(std::string_view from,
                                       const std::string& to) {
  for (auto& a : allocations_)
    if (a.owner == from) a.owner = to;
  for (auto& h : holds_)
    if (h.owner == from) h.owner = to;
}

nlohmann::json ReservationCalendar::to_json() const {
  nlohmann::json j = {{"capacity_mbps", capacity_},
                      {"allocations", nlohmann::json::array()},
                      {"vlan_holds", nlohmann::json::array()}};
  for (const auto& a : allocations_)
    j["allocations"].push_back({{"start", a.window.start},
                                {"end", a.window.end},
                                {"mbps", a.bandwidth},
                                {"owner", a.owner},
                                {"firm", a.firm}});
  for (const auto& h : holds_)
    j["vlan_holds"].push_back({{"start", h.window.start},
                               {"end", h.window.end},
                               {"vlan", h.vlan},
                               {"owner", h.owner},
                               {"firm", h.firm}});
  return j;
}

ReservationCalendar& CalendarBook::link(const std::string& id) {
  auto it = links_.find(id);
  if (it == links_.end()) throw Error(ErrorCode::UnknownLink, id);
  return it->second;
}

const ReservationCalendar& CalendarBook::link(const std::string& id) const {
  auto it = links_.find(id);
  if (it == links_.end()) throw Error(ErrorCode::UnknownLink, id);
  return it->second;
}

ReservationCalendar& CalendarBook::endpoint(const std::string& id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) throw Error(ErrorCode::UnknownEndpoint, id);
  return it->second;
}

const ReservationCalendar& CalendarBook::endpoint(const std::string& id) const {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) throw Error(ErrorCode::UnknownEndpoint, id);
  return it->second;
}

void CalendarBook::add_link(const std::string& id, Mbps capacity) {
  links_.try_emplace(id, capacity);
}

void CalendarBook::add_endpoint(const std::string& id, Mbps capacity) {
  endpoints_.try_emplace(id, capacity);
}

std::size_t CalendarBook::release(std::string_view owner) {
  std::size_t n = release_links(owner);
  for (auto& [id, c] : endpoints_) n += c.release(owner);
  return n;
}

std::size_t CalendarBook::release_links(std::string_view owner) {
  std::size_t n = 0;
  for (auto& [id, c] : links_) n += c.release(owner);
  return n;
}

void CalendarBook::set_firm(std::string_view owner, bool firm) {
  for (auto& [id, c] : links_) c.set_firm(owner, firm);
  for (auto& [id, c] : endpoints_) c.set_firm(owner, firm);
}

void CalendarBook::rename_owner(std::string_view from, const std::string& to) {
  for (auto& [id, c] : links_) c.rename_owner(from, to);
  for (auto& [id, c] : endpoints_) c.rename_owner(from, to);
}

bool CalendarBook::holds_anything(std::string_view owner) const {
  auto owns = [&](const ReservationCalendar& c) {
    return std::any_of(c.allocations().begin(), c.allocations().end(),
                       [&](const Allocation& a) { return a.owner == owner; }) ||
           std::any_of(c.vlan_holds().begin(), c.vlan_holds().end(),
                       [&](const VlanHold& h) { return h.owner == owner; });
  };
  for (const auto& [id, c] : links_)
    if (owns(c)) return true;
  for (const auto& [id, c] : endpoints_)
    if (owns(c)) return true;
  return false;
}

nlohmann::json CalendarBook::to_json() const {
  nlohmann::json j = {{"links", nlohmann::json::object()},
                      {"endpoints", nlohmann::json::object()}};
  for (const auto& [id, c] : links_) j["links"][id] = c.to_json();
  for (const auto& [id, c] : endpoints_) j["endpoints"][id] = c.to_json();
  return j;
}

}  // namespace fabric
