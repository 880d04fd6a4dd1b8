#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fabric/dataplane.hpp"
#include "fabric/topology.hpp"
#include "fabric/types.hpp"

namespace fabric {

inline constexpr int kServicePriority = 100;

/// A service edge: client endpoint plus the client-facing tag (none means
/// plain Ethernet).
struct EdgeSpec {
  std::string endpoint;
  std::optional<Vlan> vlan;
};

/// Rules and meters destined for one VFC.
struct RuleBatch {
  std::string vfc;
  std::vector<FlowRule> rules;
  std::vector<MeterSpec> meters;
};

struct CompiledService {
  std::vector<RuleBatch> forward;
  std::vector<RuleBatch> reverse;

  std::size_t rule_count() const;
};

/// Translates a path with per-link VLANs into per-VFC rules for both
/// directions. Ingress tags (or pushes) the first link VLAN, transit VFCs
/// swap tags hop by hop, egress rewrites (or pops) to the client tag. When
/// `meter_rate` is set each direction gets one meter at its ingress rule,
/// with a burst of one tick at that rate.
CompiledService compile_service(const Fabric& fabric, const std::string& cookie,
                                const EdgeSpec& src, const EdgeSpec& dst,
                                const Path& path,
                                const std::vector<Vlan>& link_vlans,
                                std::optional<Mbps> meter_rate);

/// The controller's view of its southbound: where compiled rules, clock
/// ticks and port-state injections go. Only the cluster leader has one.
class Southbound {
 public:
  virtual ~Southbound() = default;
  virtual void install(const RuleBatch& batch) = 0;
  virtual std::size_t remove(const std::string& cookie) = 0;
  virtual void tick() = 0;
  virtual void set_port_state(const PortRef& port, PortState state) = 0;
};

/// Southbound backed by an in-process simulator.
class DataplaneSouthbound : public Southbound {
 public:
  explicit DataplaneSouthbound(Dataplane& dp) : dp_(dp) {}
  void install(const RuleBatch& batch) override;
  std::size_t remove(const std::string& cookie) override;
  void tick() override;
  void set_port_state(const PortRef& port, PortState state) override;

 private:
  Dataplane& dp_;
};

/// Tracks which services have rules programmed and forwards to the
/// southbound when one is attached. Counts come from the compiled intent,
/// so every replica computes the same numbers.
class FlowProgrammer {
 public:
  void attach(Southbound* sb) { sb_ = sb; }
  Southbound* southbound() const { return sb_; }

  std::size_t install(const std::string& cookie, const CompiledService& svc);
  std::size_t remove(const std::string& cookie);

  std::size_t installed(const std::string& cookie) const;
  std::size_t total() const;
  const std::map<std::string, std::size_t>& by_cookie() const { return counts_; }

 private:
  Southbound* sb_ = nullptr;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace fabric
