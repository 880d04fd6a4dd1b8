#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/event.hpp"

namespace fabric {

/// Totally ordered, append-only event feed. Sequence numbers start at 1.
class EventLog {
 public:
  std::uint64_t append(const std::string& domain, const Event& event);

  /// Entries with seq > `since`. A cursor beyond the end replays from 0.
  std::vector<nlohmann::json> since(std::int64_t since) const;
  /// Blocks until an entry newer than `since` exists or `timeout` passes.
  bool wait_newer(std::uint64_t since, std::chrono::milliseconds timeout) const;
  std::uint64_t last_seq() const;
  /// Hash of the whole feed.
  std::uint64_t hash() const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<nlohmann::json> entries_;
};

}  // namespace fabric
