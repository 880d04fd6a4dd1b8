#include "fabric/flows.hpp"

#include "fabric/error.hpp"
#include "fabric/pathfinder.hpp"

namespace fabric {

namespace {

VlanMatch match_for(std::optional<Vlan> tag) {
  return tag ? VlanMatch::tagged(*tag) : VlanMatch::untagged();
}

// Tag rewrite taking a frame from tag state `from` to `to`.
void retag(std::vector<Action>& actions, std::optional<Vlan> from,
           std::optional<Vlan> to) {
  if (from && to) {
    actions.push_back(action::SetVlan{*to});
  } else if (!from && to) {
    actions.push_back(action::PushVlan{*to});
  } else if (from && !to) {
    actions.push_back(action::PopVlan{});
  }
}

std::vector<RuleBatch> compile_direction(const Fabric& fabric,
                                         const std::string& cookie,
                                         const EdgeSpec& src, const EdgeSpec& dst,
                                         const Path& path,
                                         const std::vector<Vlan>& link_vlans,
                                         std::optional<Mbps> meter_rate,
                                         const std::string& meter_id) {
  const auto& src_ep = fabric.require_endpoint(src.endpoint);
  const auto& dst_ep = fabric.require_endpoint(dst.endpoint);
  const auto vfcs = path_vfcs(fabric, src_ep.attachment.vfc, path);
  if (vfcs.back() != dst_ep.attachment.vfc)
    throw Error(ErrorCode::BadRequest, "path does not reach " + dst.endpoint);

  std::vector<RuleBatch> batches;
  for (std::size_t i = 0; i < vfcs.size(); ++i) {
    const std::string& vfc = vfcs[i];
    std::string in_port;
    std::optional<Vlan> in_tag;
    if (i == 0) {
      in_port = src_ep.attachment.port;
      in_tag = src.vlan;
    } else {
      const Link& prev = fabric.require_link(path[i - 1]);
      in_port = prev.end_at(vfc)->port;
      in_tag = link_vlans[i - 1];
    }
    std::string out_port;
    std::optional<Vlan> out_tag;
    if (i + 1 == vfcs.size()) {
      out_port = dst_ep.attachment.port;
      out_tag = dst.vlan;
    } else {
      const Link& next = fabric.require_link(path[i]);
      out_port = next.end_at(vfc)->port;
      out_tag = link_vlans[i];
    }

    RuleBatch batch{vfc, {}, {}};
    FlowRule rule{cookie, vfc, kServicePriority, {in_port, match_for(in_tag)}, {}};
    if (i == 0 && meter_rate) {
      rule.actions.push_back(action::Meter{meter_id});
      batch.meters.push_back(
          {meter_id, cookie, *meter_rate, *meter_rate * kBitsPerMbpsTick});
    }
    retag(rule.actions, in_tag, out_tag);
    rule.actions.push_back(action::Output{out_port});
    batch.rules.push_back(std::move(rule));
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace

std::size_t CompiledService::rule_count() const {
  std::size_t n = 0;
  for (const auto* dir : {&forward, &reverse})
    for (const auto& b : *dir) n += b.rules.size();
  return n;
}

CompiledService compile_service(const Fabric& fabric, const std::string& cookie,
                                const EdgeSpec& src, const EdgeSpec& dst,
                                const Path& path,
                                const std::vector<Vlan>& link_vlans,
                                std::optional<Mbps> meter_rate) {
  if (link_vlans.size() != path.size())
    throw Error(ErrorCode::BadRequest, "one VLAN per path link is required");
  CompiledService out;
  out.forward = compile_direction(fabric, cookie, src, dst, path, link_vlans,
                                  meter_rate, cookie + "/fwd");
  Path back(path.rbegin(), path.rend());
  std::vector<Vlan> back_vlans(link_vlans.rbegin(), link_vlans.rend());
  out.reverse = compile_direction(fabric, cookie, dst, src, back, back_vlans,
                                  meter_rate, cookie + "/rev");
  return out;
}

void DataplaneSouthbound::install(const RuleBatch& batch) {
  dp_.install_rules(batch.vfc, batch.rules, batch.meters);
}

std::size_t DataplaneSouthbound::remove(const std::string& cookie) {
  return dp_.remove_rules(cookie);
}

void DataplaneSouthbound::tick() { dp_.advance_clock(1); }

void DataplaneSouthbound::set_port_state(const PortRef& port, PortState state) {
  dp_.set_port_state(port, state);
}

std::size_t FlowProgrammer::install(const std::string& cookie,
                                    const CompiledService& svc) {
  if (sb_) {
    for (const auto* dir : {&svc.forward, &svc.reverse})
      for (const auto& b : *dir) sb_->install(b);
  }
  const auto n = svc.rule_count();
  counts_[cookie] += n;
  return n;
}

std::size_t FlowProgrammer::remove(const std::string& cookie) {
  if (sb_) sb_->remove(cookie);
  auto it = counts_.find(cookie);
  if (it == counts_.end()) return 0;
  auto n = it->second;
  counts_.erase(it);
  return n;
}

std::size_t FlowProgrammer::installed(const std::string& cookie) const {
  auto it = counts_.find(cookie);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t FlowProgrammer::total() const {
  std::size_t n = 0;
  for (const auto& [c, k] : counts_) n += k;
  return n;
}

}  // namespace fabric
