#include "fabric/failover.hpp"

#include <algorithm>

#include "fabric/error.hpp"

namespace fabric {

std::size_t RecoveryReport::rerouted() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const auto& e) { return e.rerouted; }));
}

std::size_t RecoveryReport::failed() const { return entries.size() - rerouted(); }

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j = {{"link", link}, {"tick", tick}, {"entries", nlohmann::json::array()}};
  for (const auto& e : entries)
    j["entries"].push_back({{"kind", e.kind},
                            {"id", e.id},
                            {"outcome", e.rerouted ? "Rerouted" : "Failed"},
                            {"old_path", e.old_path},
                            {"new_path", e.new_path},
                            {"rules_removed", e.rules_removed},
                            {"rules_installed", e.rules_installed}});
  // Recovery runs synchronously with the link-down event, so no tick passes
  // between loss and repair.
  j["disruption_ticks"] = 0;
  return j;
}

RecoveryReport Failover::handle_link_down(const std::string& link_id, Tick now) {
  fabric_.require_link(link_id);
  RecoveryReport report{link_id, now, {}};
  for (auto id : bod_.active_on_link(link_id)) {
    auto out = bod_.reroute(id, link_id, now);
    report.entries.push_back({"bod", std::to_string(id), out.rerouted, out.old_path,
                              out.new_path, out.rules_removed, out.rules_installed});
  }
  for (const auto& name : sdx_.installed_on_link(link_id)) {
    auto out = sdx_.reroute(name, link_id, now);
    report.entries.push_back({"circuit", name, out.rerouted, out.old_path, out.new_path,
                              out.rules_removed, out.rules_installed});
  }
  return report;
}

void Failover::handle_link_up(const std::string& link_id) {
  fabric_.require_link(link_id);
}

}  // namespace fabric
