#pragma once

#include <optional>
#include <set>
#include <string>

#include "fabric/calendar.hpp"
#include "fabric/topology.hpp"
#include "fabric/types.hpp"

namespace fabric {

struct PathQuery {
  std::string overlay = kOverlayBod;
  std::string src_vfc;
  std::string dst_vfc;
  Mbps demand = 0;
  Window window;
  std::set<std::string> excluded_links;
  VlanRange vlans{};
};

/// Whether a link may carry the query: right overlay, Up, not excluded,
/// enough residual over the window and at least one VLAN free throughout.
bool link_admissible(const Fabric& fabric, const CalendarBook& calendars,
                     const Link& link, const PathQuery& query);

/// Minimum-hop path over admissible links; among equal-hop paths, the
/// lexicographically smallest sequence of link ids. nullopt if none.
/// Same source and destination VFC yields an empty path.
std::optional<Path> compute_path(const Fabric& fabric,
                                 const CalendarBook& calendars,
                                 const PathQuery& query);

/// VFC sequence visited by `path` starting at `src_vfc`.
std::vector<std::string> path_vfcs(const Fabric& fabric,
                                   const std::string& src_vfc,
                                   const Path& path);

}  // namespace fabric
