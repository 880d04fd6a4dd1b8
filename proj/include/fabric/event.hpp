#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/types.hpp"

namespace fabric {

/// A typed notification emitted by a controller module. The body carries
/// kind-specific fields; `kind` names the event (ServiceActivated,
/// LinkDown, LeaderChanged, ...).
struct Event {
  std::string kind;
  nlohmann::json body = nlohmann::json::object();

  Event() = default;
  Event(std::string k, nlohmann::json b = nlohmann::json::object())
      : kind(std::move(k)), body(std::move(b)) {}

  nlohmann::json to_json() const {
    nlohmann::json j = body;
    j["kind"] = kind;
    return j;
  }
};

/// Events emitted during one virtual-clock tick.
struct TickReport {
  Tick tick = 0;
  std::vector<Event> events;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"tick", tick}, {"events", nlohmann::json::array()}};
    for (const auto& e : events) j["events"].push_back(e.to_json());
    return j;
  }
};

}  // namespace fabric
