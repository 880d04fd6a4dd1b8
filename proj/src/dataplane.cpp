#include "fabric/dataplane.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "fabric/error.hpp"

namespace fabric {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool valid_tag(Vlan v) { return v >= 1 && v <= 4094; }

}  // namespace

bool VlanMatch::matches(std::optional<Vlan> tag) const {
  switch (kind) {
    case Kind::Any: return true;
    case Kind::Untagged: return !tag.has_value();
    case Kind::Tagged: return tag.has_value() && *tag == vlan;
  }
  return false;
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::NoMatch: return "NoMatch";
    case DropReason::MeterExceeded: return "MeterExceeded";
    case DropReason::PortDown: return "PortDown";
    case DropReason::LoopLimit: return "LoopLimit";
  }
  return "?";
}

std::optional<DropReason> DeliveryResult::drop_reason() const {
  if (const auto* d = std::get_if<Dropped>(&outcome)) return d->reason;
  return std::nullopt;
}

void validate_actions(const FlowRule& rule) {
  if (rule.priority < 0)
    throw Error(ErrorCode::InvalidRule, "negative priority");
  if (rule.actions.empty() ||
      !std::holds_alternative<action::Output>(rule.actions.back()))
    throw Error(ErrorCode::InvalidRule, "Output must be the last action");
  // Tag state after the match: known tagged, known untagged, or unknown (Any).
  enum class Tag { Yes, No, Unknown };
  Tag tag = rule.match.vlan.kind == VlanMatch::Kind::Tagged     ? Tag::Yes
            : rule.match.vlan.kind == VlanMatch::Kind::Untagged ? Tag::No
                                                                : Tag::Unknown;
  if (rule.match.vlan.kind == VlanMatch::Kind::Tagged &&
      !valid_tag(rule.match.vlan.vlan))
    throw Error(ErrorCode::InvalidVlan, "match vlan");
  std::size_t outputs = 0;
  for (const auto& a : rule.actions) {
    std::visit(
        overloaded{
            [&](const action::Meter& m) {
              if (m.meter_id.empty())
                throw Error(ErrorCode::InvalidRule, "empty meter id");
            },
            [&](const action::PushVlan& p) {
              if (tag != Tag::No)
                throw Error(ErrorCode::InvalidRule, "PushVlan needs an untagged frame");
              if (!valid_tag(p.vlan)) throw Error(ErrorCode::InvalidVlan, "push");
              tag = Tag::Yes;
            },
            [&](const action::SetVlan& s) {
              if (tag != Tag::Yes)
                throw Error(ErrorCode::InvalidRule, "SetVlan needs a tagged frame");
              if (!valid_tag(s.vlan)) throw Error(ErrorCode::InvalidVlan, "set");
            },
            [&](const action::PopVlan&) {
              if (tag != Tag::Yes)
                throw Error(ErrorCode::InvalidRule, "PopVlan needs a tagged frame");
              tag = Tag::No;
            },
            [&](const action::Output&) { ++outputs; },
        },
        a);
  }
  if (outputs != 1)
    throw Error(ErrorCode::InvalidRule, "exactly one Output is required");
}

void Dataplane::Table::reindex() {
  by_port.clear();
  for (std::size_t i = 0; i < rules.size(); ++i)
    by_port[rules[i].rule.match.in_port].push_back(i);
  for (auto& [port, idx] : by_port)
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      const auto& a = rules[x];
      const auto& b = rules[y];
      if (a.rule.priority != b.rule.priority)
        return a.rule.priority > b.rule.priority;
      return a.seq < b.seq;
    });
}

Dataplane::Dataplane(Fabric fabric) : fabric_(std::move(fabric)) {}

std::vector<TopologyEvent> Dataplane::set_port_state(const PortRef& port,
                                                     PortState state) {
  return fabric_.set_port_state(port, state);
}

void Dataplane::install_rules(const std::string& vfc_id,
                              std::vector<FlowRule> rules,
                              std::vector<MeterSpec> meters) {
  const Vfc& vfc = fabric_.require_vfc(vfc_id);
  auto& table = tables_[vfc_id];

  std::set<std::string> new_meters;
  for (const auto& m : meters) {
    if (m.rate <= 0 || m.burst <= 0)
      throw Error(ErrorCode::InvalidRule, "meter " + m.id + " needs rate and burst");
    if (table.meters.count(m.id) || !new_meters.insert(m.id).second)
      throw Error(ErrorCode::DuplicateId, "meter " + m.id);
  }
  for (auto& r : rules) {
    if (r.vfc.empty()) r.vfc = vfc_id;
    if (r.vfc != vfc_id)
      throw Error(ErrorCode::InvalidRule, "rule targets " + r.vfc);
    if (!vfc.port(r.match.in_port))
      throw Error(ErrorCode::UnknownPort, vfc_id + ":" + r.match.in_port);
    validate_actions(r);
    for (const auto& a : r.actions) {
      if (const auto* out = std::get_if<action::Output>(&a)) {
        if (!vfc.port(out->port))
          throw Error(ErrorCode::UnknownPort, vfc_id + ":" + out->port);
      } else if (const auto* m = std::get_if<action::Meter>(&a)) {
        if (!new_meters.count(m->meter_id) && !table.meters.count(m->meter_id))
          throw Error(ErrorCode::DanglingMeterRef, m->meter_id);
      }
    }
  }

  for (auto& m : meters)
    table.meters[m.id] = Meter{m.id, m.cookie, m.rate, m.burst, m.burst};
  for (auto& r : rules) table.rules.push_back({next_seq_++, std::move(r)});
  table.reindex();
}

std::size_t Dataplane::remove_rules(const std::string& cookie) {
  std::size_t removed = 0;
  for (auto& [vfc, table] : tables_) {
    auto before = table.rules.size();
    std::erase_if(table.rules,
                  [&](const InstalledRule& r) { return r.rule.cookie == cookie; });
    removed += before - table.rules.size();
    std::erase_if(table.meters,
                  [&](const auto& kv) { return kv.second.cookie == cookie; });
    table.reindex();
  }
  return removed;
}

const InstalledRule* Dataplane::lookup(const std::string& vfc,
                                       const std::string& in_port,
                                       std::optional<Vlan> vlan) const {
  auto tit = tables_.find(vfc);
  if (tit == tables_.end()) return nullptr;
  const auto& table = tit->second;
  auto pit = table.by_port.find(in_port);
  if (pit == table.by_port.end()) return nullptr;
  for (std::size_t i : pit->second)
    if (table.rules[i].rule.match.vlan.matches(vlan)) return &table.rules[i];
  return nullptr;
}

void Dataplane::trace_hop(std::uint64_t frame_id, const std::string& vfc,
                          const InstalledRule* rule,
                          const std::string& summary) const {
  if (!trace_) return;
  *trace_ << now_ << '\t' << frame_id << '\t' << vfc << '\t'
          << (rule ? std::to_string(rule->seq) : std::string("-")) << '\t'
          << summary << '\n';
}

DeliveryResult Dataplane::inject_frame(Frame frame) {
  const ClientEndpoint& ingress = fabric_.require_endpoint(frame.ingress);
  if (frame.size <= 0) throw Error(ErrorCode::BadRequest, "frame size must be > 0");
  if (frame.vlan && !valid_tag(*frame.vlan))
    throw Error(ErrorCode::InvalidVlan, std::to_string(*frame.vlan));
  frame.inject_tick = now_;
  const std::uint64_t frame_id = next_frame_++;

  DeliveryResult result{Dropped{DropReason::PortDown}, {}};
  auto drop = [&](DropReason reason) {
    result.outcome = Dropped{reason};
    return result;
  };

  PortRef at = ingress.attachment;
  if (fabric_.require_port(at).state == PortState::Down) {
    trace_hop(frame_id, at.vfc, nullptr, "drop:PortDown");
    return drop(DropReason::PortDown);
  }
  std::optional<Vlan> vlan = frame.vlan;

  while (true) {
    if (result.hops.size() >= kMaxHops) return drop(DropReason::LoopLimit);
    result.hops.push_back(at.vfc);
    const InstalledRule* rule = lookup(at.vfc, at.port, vlan);
    if (!rule) {
      trace_hop(frame_id, at.vfc, nullptr, "drop:NoMatch");
      return drop(DropReason::NoMatch);
    }
    std::string summary = summarize(rule->rule.actions);

    std::optional<PortRef> out;
    for (const auto& a : rule->rule.actions) {
      if (const auto* m = std::get_if<action::Meter>(&a)) {
        auto& meters = tables_[at.vfc].meters;
        auto mit = meters.find(m->meter_id);
        if (mit == meters.end()) {
          trace_hop(frame_id, at.vfc, rule, summary + ",drop:NoMatch");
          return drop(DropReason::NoMatch);
        }
        if (mit->second.tokens < frame.size) {
          trace_hop(frame_id, at.vfc, rule, summary + ",drop:MeterExceeded");
          return drop(DropReason::MeterExceeded);
        }
        mit->second.tokens -= frame.size;
      } else if (const auto* p = std::get_if<action::PushVlan>(&a)) {
        vlan = p->vlan;
      } else if (const auto* s = std::get_if<action::SetVlan>(&a)) {
        vlan = s->vlan;
      } else if (std::holds_alternative<action::PopVlan>(a)) {
        vlan.reset();
      } else if (const auto* o = std::get_if<action::Output>(&a)) {
        out = PortRef{at.vfc, o->port};
      }
    }

    const LogicalPort* egress = fabric_.port(*out);
    if (!egress || egress->state == PortState::Down) {
      trace_hop(frame_id, at.vfc, rule, summary + ",drop:PortDown");
      return drop(DropReason::PortDown);
    }
    if (const auto* ep = fabric_.endpoint_at(*out)) {
      trace_hop(frame_id, at.vfc, rule, summary + ",deliver:" + ep->id);
      result.outcome = Delivered{ep->id, vlan};
      return result;
    }
    const Link* link = fabric_.link_at(*out);
    if (!link || link->state == LinkState::Down) {
      trace_hop(frame_id, at.vfc, rule, summary + ",drop:PortDown");
      return drop(DropReason::PortDown);
    }
    trace_hop(frame_id, at.vfc, rule, summary);
    at = link->peer_of(*out);
  }
}

std::vector<TickReport> Dataplane::advance_clock(Tick ticks) {
  if (ticks < 0) throw Error(ErrorCode::BadRequest, "ticks must be >= 0");
  std::vector<TickReport> reports;
  reports.reserve(static_cast<std::size_t>(std::min<Tick>(ticks, 1 << 16)));
  for (Tick i = 0; i < ticks; ++i) {
    ++now_;
    for (auto& [vfc, table] : tables_)
      for (auto& [id, m] : table.meters)
        m.tokens = std::min(m.burst, m.tokens + m.rate * kBitsPerMbpsTick);
    TickReport report{now_, {}};
    for (auto& [name, observer] : observers_) {
      auto events = observer(now_);
      report.events.insert(report.events.end(),
                           std::make_move_iterator(events.begin()),
                           std::make_move_iterator(events.end()));
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

void Dataplane::add_tick_observer(std::string name, TickObserver observer) {
  observers_.emplace_back(std::move(name), std::move(observer));
}

std::vector<InstalledRule> Dataplane::rules(const std::string& vfc) const {
  auto it = tables_.find(vfc);
  return it == tables_.end() ? std::vector<InstalledRule>{} : it->second.rules;
}

std::size_t Dataplane::rule_count() const {
  std::size_t n = 0;
  for (const auto& [vfc, t] : tables_) n += t.rules.size();
  return n;
}

std::size_t Dataplane::rule_count(const std::string& cookie) const {
  std::size_t n = 0;
  for (const auto& [vfc, t] : tables_)
    n += static_cast<std::size_t>(std::count_if(
        t.rules.begin(), t.rules.end(),
        [&](const InstalledRule& r) { return r.rule.cookie == cookie; }));
  return n;
}

const Meter* Dataplane::meter(const std::string& vfc, const std::string& id) const {
  auto it = tables_.find(vfc);
  if (it == tables_.end()) return nullptr;
  auto mit = it->second.meters.find(id);
  return mit == it->second.meters.end() ? nullptr : &mit->second;
}

nlohmann::json Dataplane::tables_json(bool include_runtime) const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [vfc, t] : tables_) {
    if (t.rules.empty() && t.meters.empty()) continue;
    auto& tj = j[vfc];
    tj["rules"] = nlohmann::json::array();
    for (const auto& r : t.rules) {
      auto rj = to_json(r.rule);
      rj["seq"] = r.seq;
      tj["rules"].push_back(rj);
    }
    tj["meters"] = nlohmann::json::array();
    for (const auto& [id, m] : t.meters) {
      nlohmann::json mj = {{"id", id}, {"cookie", m.cookie},
                           {"rate_mbps", m.rate}, {"burst_bits", m.burst}};
      if (include_runtime) mj["tokens"] = m.tokens;
      tj["meters"].push_back(mj);
    }
  }
  return j;
}

nlohmann::json Dataplane::rules_json() const { return tables_json(true); }

std::uint64_t Dataplane::rule_table_hash() const {
  return fnv1a(tables_json(false).dump());
}

std::uint64_t Dataplane::state_hash() const {
  nlohmann::json j = {{"now", now_},
                      {"tables", tables_json(true)},
                      {"fabric", fabric_.to_json()},
                      {"frames", next_frame_}};
  return fnv1a(j.dump());
}

nlohmann::json to_json(const Action& a) {
  return std::visit(
      overloaded{
          [](const action::Meter& m) -> nlohmann::json {
            return {{"type", "meter"}, {"meter", m.meter_id}};
          },
          [](const action::PushVlan& p) -> nlohmann::json {
            return {{"type", "push_vlan"}, {"vlan", p.vlan}};
          },
          [](const action::SetVlan& s) -> nlohmann::json {
            return {{"type", "set_vlan"}, {"vlan", s.vlan}};
          },
          [](const action::PopVlan&) -> nlohmann::json {
            return {{"type", "pop_vlan"}};
          },
          [](const action::Output& o) -> nlohmann::json {
            return {{"type", "output"}, {"port", o.port}};
          },
      },
      a);
}

nlohmann::json to_json(const FlowRule& r) {
  nlohmann::json vlan;
  switch (r.match.vlan.kind) {
    case VlanMatch::Kind::Any: vlan = "any"; break;
    case VlanMatch::Kind::Untagged: vlan = "untagged"; break;
    case VlanMatch::Kind::Tagged: vlan = r.match.vlan.vlan; break;
  }
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : r.actions) actions.push_back(to_json(a));
  return {{"cookie", r.cookie},
          {"vfc", r.vfc},
          {"priority", r.priority},
          {"match", {{"in_port", r.match.in_port}, {"vlan", vlan}}},
          {"actions", actions}};
}

nlohmann::json to_json(const DeliveryResult& r) {
  nlohmann::json j;
  if (const auto* d = r.delivery()) {
    j["outcome"] = "Delivered";
    j["endpoint"] = d->endpoint;
    j["vlan"] = d->vlan ? nlohmann::json(*d->vlan) : nlohmann::json(nullptr);
  } else {
    j["outcome"] = "Dropped";
    j["reason"] = to_string(*r.drop_reason());
  }
  j["hops"] = r.hops;
  return j;
}

std::string summarize(const std::vector<Action>& actions) {
  std::string out;
  for (const auto& a : actions) {
    if (!out.empty()) out += ',';
    std::visit(overloaded{
                   [&](const action::Meter& m) { out += "meter:" + m.meter_id; },
                   [&](const action::PushVlan& p) {
                     out += "push_vlan:" + std::to_string(p.vlan);
                   },
                   [&](const action::SetVlan& s) {
                     out += "set_vlan:" + std::to_string(s.vlan);
                   },
                   [&](const action::PopVlan&) { out += "pop_vlan"; },
                   [&](const action::Output& o) { out += "output:" + o.port; },
               },
               a);
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fabric
