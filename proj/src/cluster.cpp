#include "fabric/cluster.hpp"

#include <algorithm>

#include "fabric/error.hpp"

namespace fabric {

std::string_view to_string(ReplicaStatus status) {
  return status == ReplicaStatus::Alive ? "Alive" : "Dead";
}

Cluster::Cluster(std::size_t n, Factory factory, Southbound* southbound)
    : southbound_(southbound) {
  if (n == 0) throw Error(ErrorCode::BadRequest, "a cluster needs at least one replica");
  for (std::size_t i = 0; i < n; ++i) {
    Replica r;
    r.id = i;
    r.state = factory();
    replicas_.push_back(std::move(r));
  }
  std::vector<Event> ignored;
  elect(ignored);
}

bool Cluster::quorate() const {
  const auto alive = std::count_if(replicas_.begin(), replicas_.end(), [](const auto& r) {
    return r.status == ReplicaStatus::Alive;
  });
  return static_cast<std::size_t>(alive) * 2 > replicas_.size();
}

Replica& Cluster::require(std::size_t id) {
  if (id >= replicas_.size())
    throw Error(ErrorCode::UnknownReplica, "replica " + std::to_string(id));
  return replicas_[id];
}

const Replica& Cluster::replica(std::size_t id) const {
  if (id >= replicas_.size())
    throw Error(ErrorCode::UnknownReplica, "replica " + std::to_string(id));
  return replicas_[id];
}

const Replica* Cluster::most_advanced() const {
  const Replica* best = nullptr;
  for (const auto& r : replicas_)
    if (r.status == ReplicaStatus::Alive && (!best || r.log.size() > best->log.size()))
      best = &r;
  return best;
}

void Cluster::catch_up(Replica& r, const Replica& source) {
  for (std::size_t i = r.log.size(); i < source.log.size(); ++i) r.log.push_back(source.log[i]);
  while (r.applied_index < r.log.size()) r.state->apply(r.log[r.applied_index++].payload);
}

void Cluster::elect(std::vector<Event>& events) {
  const auto previous = leader_;
  if (previous) replicas_[*previous].state->attach(nullptr);
  leader_.reset();
  if (!quorate()) return;
  ++term_;
  if (const auto* src = most_advanced())
    for (auto& r : replicas_)
      if (r.status == ReplicaStatus::Alive && &r != src) catch_up(r, *src);
  for (auto& r : replicas_) {
    if (r.status != ReplicaStatus::Alive) continue;
    r.term = term_;
    if (!leader_) leader_ = r.id;
  }
  replicas_[*leader_].state->attach(southbound_);
  by_term_[term_] = *leader_;
  nlohmann::json body = {{"term", term_}, {"leader", *leader_}};
  body["previous"] = previous ? nlohmann::json(*previous) : nlohmann::json(nullptr);
  events.emplace_back("LeaderChanged", body);
}

CommandResult Cluster::submit(const nlohmann::json& payload) {
  if (!leader_) throw Error(ErrorCode::NoQuorum, "no quorum of alive replicas");
  auto& lead = replicas_[*leader_];
  ReplicatedCommand entry{lead.log.size() + 1, term_, payload};
  for (auto& r : replicas_)
    if (r.status == ReplicaStatus::Alive) r.log.push_back(entry);
  // Committed: a majority holds the entry. The leader applies first so the
  // southbound sees each change once.
  auto result = lead.state->apply(entry.payload);
  lead.applied_index = lead.log.size();
  for (auto& r : replicas_)
    if (r.status == ReplicaStatus::Alive && r.id != lead.id) catch_up(r, lead);
  return result;
}

std::vector<Event> Cluster::kill_replica(std::size_t id) {
  auto& r = require(id);
  std::vector<Event> events;
  if (r.status == ReplicaStatus::Dead) return events;
  r.status = ReplicaStatus::Dead;
  events.emplace_back("ReplicaKilled", nlohmann::json{{"id", id}});
  const bool was_leader = leader_ == id;
  if (was_leader || !quorate()) {
    elect(events);
    if (!leader_) events.emplace_back("QuorumLost", nlohmann::json{{"term", term_}});
  }
  return events;
}

std::vector<Event> Cluster::revive_replica(std::size_t id) {
  auto& r = require(id);
  std::vector<Event> events;
  if (r.status == ReplicaStatus::Alive) return events;
  const auto* src = most_advanced();
  r.status = ReplicaStatus::Alive;
  if (src) catch_up(r, *src);
  r.term = term_;
  events.emplace_back("ReplicaRevived",
                      nlohmann::json{{"id", id}, {"applied_index", r.applied_index}});
  if (!leader_) elect(events);
  return events;
}

const Controller& Cluster::read_model() const {
  if (leader_) return *replicas_[*leader_].state;
  const Replica* best = most_advanced();
  if (!best)
    for (const auto& r : replicas_)
      if (!best || r.applied_index > best->applied_index) best = &r;
  return *best->state;
}

const std::vector<ReplicatedCommand>& Cluster::log() const {
  if (leader_) return replicas_[*leader_].log;
  const Replica* best = most_advanced();
  return (best ? *best : replicas_.front()).log;
}

bool Cluster::prefix_agreement() const {
  for (const auto& a : replicas_)
    for (const auto& b : replicas_) {
      if (a.id >= b.id || a.status != ReplicaStatus::Alive || b.status != ReplicaStatus::Alive)
        continue;
      const auto n = std::min(a.applied_index, b.applied_index);
      if (!std::equal(a.log.begin(), a.log.begin() + n, b.log.begin())) return false;
    }
  return true;
}

nlohmann::json Cluster::status_json() const {
  nlohmann::json j = {{"term", term_}, {"quorum", quorate()}, {"replicas", nlohmann::json::array()}};
  j["leader"] = leader_ ? nlohmann::json(*leader_) : nlohmann::json(nullptr);
  for (const auto& r : replicas_)
    j["replicas"].push_back({{"id", r.id},
                             {"status", to_string(r.status)},
                             {"term", r.term},
                             {"log_length", r.log.size()},
                             {"applied_index", r.applied_index},
                             {"state_hash", r.state->state_hash()}});
  return j;
}

}  // namespace fabric
