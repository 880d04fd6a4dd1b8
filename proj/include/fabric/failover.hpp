#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/scheduler.hpp"
#include "fabric/sdxl2.hpp"
#include "fabric/topology.hpp"

namespace fabric {

struct RecoveryEntry {
  std::string kind;  // "bod" or "circuit"
  std::string id;
  bool rerouted = false;
  Path old_path;
  Path new_path;
  std::size_t rules_removed = 0;
  std::size_t rules_installed = 0;
};

struct RecoveryReport {
  std::string link;
  Tick tick = 0;
  std::vector<RecoveryEntry> entries;

  std::size_t rerouted() const;
  std::size_t failed() const;
  nlohmann::json to_json() const;
};

/// Reactive rerouting on link loss. BoD services are processed first in
/// ascending id, then circuits in name order.
class Failover {
 public:
  Failover(const Fabric& fabric, BodScheduler& bod, Sdxl2& sdx)
      : fabric_(fabric), bod_(bod), sdx_(sdx) {}

  RecoveryReport handle_link_down(const std::string& link_id, Tick now);
  /// The link is usable again for new admissions; existing paths stay.
  void handle_link_up(const std::string& link_id);

 private:
  const Fabric& fabric_;
  BodScheduler& bod_;
  Sdxl2& sdx_;
};

}  // namespace fabric
