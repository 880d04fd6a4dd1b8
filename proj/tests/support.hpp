#pragma once

#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/topology.hpp"

namespace fabric::fx {

inline std::string data_path(const std::string& name) {
  return std::string(FABRIC_DATA_DIR) + "/" + name;
}

inline nlohmann::json topology_doc(const std::string& name) {
  return read_json_file(data_path(name));
}

inline Fabric pilot() { return load_topology_file(data_path("pilot.topo")); }

/// A random connected BoD fabric with `n` VFCs ("V0".."Vn-1"), one client
/// endpoint per VFC ("c0".."cn-1"). Extra edges are added on top of a
/// random spanning tree.
inline nlohmann::json random_topology(std::mt19937& rng, int n, int extra_edges,
                                      Mbps link_capacity, Mbps access = 100000) {
  nlohmann::json doc = {{"devices", nlohmann::json::array()},
                        {"vfcs", nlohmann::json::array()},
                        {"links", nlohmann::json::array()},
                        {"endpoints", nlohmann::json::array()}};
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
  for (int k = 0; k < extra_edges; ++k) {
    int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::vector<nlohmann::json> ports(n, nlohmann::json::array());
  std::vector<int> next_port(n, 0);
  auto new_port = [&](int v) {
    std::string id = "p" + std::to_string(next_port[v]++);
    ports[v].push_back({{"id", id}, {"backing", {{"kind", "physical"}, {"physical_port", id}}}});
    return id;
  };
  std::vector<std::string> client(n);
  for (int v = 0; v < n; ++v) client[v] = new_port(v);
  int li = 0;
  for (auto [a, b] : edges) {
    auto pa = new_port(a), pb = new_port(b);
    char id[32];
    std::snprintf(id, sizeof id, "L%02d", li++);
    doc["links"].push_back({{"id", id},
                            {"a", {{"vfc", "V" + std::to_string(a)}, {"port", pa}}},
                            {"b", {{"vfc", "V" + std::to_string(b)}, {"port", pb}}},
                            {"capacity_mbps", link_capacity}});
  }
  for (int v = 0; v < n; ++v) {
    nlohmann::json phys = nlohmann::json::array();
    for (int p = 0; p < next_port[v]; ++p)
      phys.push_back({{"id", "p" + std::to_string(p)}, {"speed_mbps", 100000}});
    doc["devices"].push_back({{"id", "d" + std::to_string(v)}, {"ports", phys}});
    doc["vfcs"].push_back({{"id", "V" + std::to_string(v)},
                           {"device", "d" + std::to_string(v)},
                           {"overlay", "BOD"},
                           {"ports", ports[v]}});
    doc["endpoints"].push_back({{"id", "c" + std::to_string(v)},
                                {"vfc", "V" + std::to_string(v)},
                                {"port", client[v]},
                                {"access_mbps", access}});
  }
  return doc;
}

}  // namespace fabric::fx
