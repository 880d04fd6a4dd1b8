#include "fabric/pathfinder.hpp"

#include <deque>
#include <map>

#include "fabric/error.hpp"

namespace fabric {

bool link_admissible(const Fabric& fabric, const CalendarBook& calendars,
                     const Link& link, const PathQuery& query) {
  const auto* a = fabric.vfc(link.end_a.vfc);
  if (!a || a->overlay != query.overlay) return false;
  if (link.state != LinkState::Up) return false;
  if (query.excluded_links.count(link.id)) return false;
  const auto& cal = calendars.link(link.id);
  if (cal.residual(query.window) < query.demand) return false;
  return cal.lowest_free_vlan(query.window, query.vlans).has_value();
}

std::optional<Path> compute_path(const Fabric& fabric,
                                 const CalendarBook& calendars,
                                 const PathQuery& query) {
  for (const auto* id : {&query.src_vfc, &query.dst_vfc}) {
    const Vfc& v = fabric.require_vfc(*id);
    if (v.overlay != query.overlay)
      throw Error(ErrorCode::UnknownVfc, *id + " is not in overlay " + query.overlay);
  }
  if (query.src_vfc == query.dst_vfc) return Path{};

  // Admissible adjacency: vfc -> (link id, neighbour), ordered by link id.
  std::map<std::string, std::map<std::string, std::string>> adj;
  for (const auto& link : fabric.links()) {
    if (!link_admissible(fabric, calendars, link, query)) continue;
    adj[link.end_a.vfc][link.id] = link.end_b.vfc;
    adj[link.end_b.vfc][link.id] = link.end_a.vfc;
  }

  // BFS distances towards the destination.
  std::map<std::string, std::size_t> dist{{query.dst_vfc, 0}};
  std::deque<std::string> queue{query.dst_vfc};
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    for (const auto& [link, next] : adj[v])
      if (dist.emplace(next, dist[v] + 1).second) queue.push_back(next);
  }
  if (!dist.count(query.src_vfc)) return std::nullopt;

  // Walk from the source choosing, at every step, the smallest link id that
  // stays on a shortest path; this yields the lexicographic minimum.
  Path path;
  std::string at = query.src_vfc;
  while (at != query.dst_vfc) {
    const std::size_t want = dist.at(at) - 1;
    for (const auto& [link, next] : adj[at]) {
      auto it = dist.find(next);
      if (it != dist.end() && it->second == want) {
        path.push_back(link);
        at = next;
        break;
      }
    }
  }
  return path;
}

std::vector<std::string> path_vfcs(const Fabric& fabric,
                                   const std::string& src_vfc,
                                   const Path& path) {
  std::vector<std::string> vfcs{src_vfc};
  for (const auto& id : path) {
    const Link& l = fabric.require_link(id);
    const PortRef* here = l.end_at(vfcs.back());
    if (!here) throw Error(ErrorCode::UnknownLink, id + " is not contiguous");
    vfcs.push_back(l.peer_of(*here).vfc);
  }
  return vfcs;
}

}  // namespace fabric
