#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fabric/controller.hpp"
#include "fabric/event.hpp"

namespace fabric {

struct ReplicatedCommand {
  std::uint64_t index = 0;
  std::uint64_t term = 0;
  nlohmann::json payload;

  friend bool operator==(const ReplicatedCommand&, const ReplicatedCommand&) = default;
};

enum class ReplicaStatus { Alive, Dead };
std::string_view to_string(ReplicaStatus status);

struct Replica {
  std::size_t id = 0;
  ReplicaStatus status = ReplicaStatus::Alive;
  std::vector<ReplicatedCommand> log;
  std::size_t applied_index = 0;
  std::uint64_t term = 0;
  std::unique_ptr<Controller> state;
};

/// N controller replicas over a synchronous, loss-free control network.
/// The smallest Alive id leads while a majority is Alive; commits need a
/// majority; only the leader drives the southbound.
class Cluster {
 public:
  using Factory = std::function<std::unique_ptr<Controller>()>;

  Cluster(std::size_t replicas, Factory factory, Southbound* southbound = nullptr);

  /// Throws Error(NoQuorum) without touching any replica when no leader
  /// exists. Operation failures come back inside the result.
  CommandResult submit(const nlohmann::json& payload);

  std::vector<Event> kill_replica(std::size_t id);
  std::vector<Event> revive_replica(std::size_t id);

  std::optional<std::size_t> leader() const { return leader_; }
  std::uint64_t term() const { return term_; }
  bool quorate() const;
  std::size_t size() const { return replicas_.size(); }
  const Replica& replica(std::size_t id) const;

  /// Leader state, or the most up-to-date Alive replica otherwise.
  const Controller& read_model() const;
  /// The leader's (or most advanced replica's) log.
  const std::vector<ReplicatedCommand>& log() const;

  /// Any two Alive replicas agree on every index up to their common
  /// applied prefix.
  bool prefix_agreement() const;
  const std::map<std::uint64_t, std::size_t>& leaders_by_term() const { return by_term_; }

  nlohmann::json status_json() const;

 private:
  Replica& require(std::size_t id);
  const Replica* most_advanced() const;
  void catch_up(Replica& r, const Replica& source);
  void elect(std::vector<Event>& events);

  std::vector<Replica> replicas_;
  Southbound* southbound_;
  std::optional<std::size_t> leader_;
  std::uint64_t term_ = 0;
  std::map<std::uint64_t, std::size_t> by_term_;
};

}  // namespace fabric
