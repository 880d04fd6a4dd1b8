#include "fabric/event_log.hpp"

#include "fabric/dataplane.hpp"

namespace fabric {

std::uint64_t EventLog::append(const std::string& domain, const Event& event) {
  std::lock_guard lock(mu_);
  const auto seq = entries_.size() + 1;
  nlohmann::json j = event.body;
  j["seq"] = seq;
  j["domain"] = domain;
  j["kind"] = event.kind;
  entries_.push_back(std::move(j));
  cv_.notify_all();
  return seq;
}

std::vector<nlohmann::json> EventLog::since(std::int64_t since) const {
  std::lock_guard lock(mu_);
  if (since < 0 || static_cast<std::uint64_t>(since) > entries_.size()) since = 0;
  return {entries_.begin() + since, entries_.end()};
}

bool EventLog::wait_newer(std::uint64_t since, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return entries_.size() > since; });
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::uint64_t EventLog::hash() const {
  std::lock_guard lock(mu_);
  std::string all;
  for (const auto& e : entries_) all += e.dump() + "\n";
  return fnv1a(all);
}

}  // namespace fabric
