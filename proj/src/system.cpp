#include "fabric/system.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <tuple>
#include <ostream>

#include "fabric/error.hpp"

namespace fabric {

namespace {

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string domain_arg(const nlohmann::json& args) {
  auto it = args.find("domain");
  return it != args.end() && it->is_string() ? it->get<std::string>() : "";
}

std::int64_t int_arg(const nlohmann::json& args, const char* key) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_number_integer())
    throw Error(ErrorCode::BadRequest, std::string("missing integer field ") + key);
  return it->get<std::int64_t>();
}

std::string str_arg(const nlohmann::json& args, const char* key) {
  auto it = args.find(key);
  if (it == args.end() || !it->is_string())
    throw Error(ErrorCode::BadRequest, std::string("missing string field ") + key);
  return it->get<std::string>();
}

nlohmann::json segment_view(const NsiSegment& s) {
  nlohmann::json j = {{"domain", s.domain}, {"state", to_string(s.state)}};
  j["hold_deadline"] = s.hold_deadline ? nlohmann::json(*s.hold_deadline) : nlohmann::json(nullptr);
  j["service_id"] = s.service_id ? nlohmann::json(*s.service_id) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

System::System(SystemConfig config) {
  if (config.topologies.empty()) throw Error(ErrorCode::BadRequest, "no topology given");
  for (const auto& doc : config.topologies) {
    Fabric fabric = load_topology(doc);
    if (find_domain(fabric.domain()))
      throw Error(ErrorCode::DuplicateId, "domain " + fabric.domain());
    auto d = std::make_unique<Domain>();
    d->name = fabric.domain();
    d->dataplane = std::make_unique<Dataplane>(fabric);
    d->southbound = std::make_unique<DataplaneSouthbound>(*d->dataplane);
    const auto vlans = config.vlans;
    d->cluster = std::make_unique<Cluster>(
        config.replicas,
        [fabric, vlans] { return std::make_unique<Controller>(fabric, vlans); },
        d->southbound.get());
    domains_.push_back(std::move(d));
  }
}

Domain* System::find_domain(const std::string& name) {
  for (auto& d : domains_)
    if (d->name == name) return d.get();
  return nullptr;
}

Domain& System::domain(const std::string& name) {
  if (name.empty()) return *domains_.front();
  if (auto* d = find_domain(name)) return *d;
  throw Error(ErrorCode::UnknownDomain, name);
}

const Domain& System::domain(const std::string& name) const {
  return const_cast<System*>(this)->domain(name);
}

void System::set_frame_trace(std::ostream* out) {
  for (auto& d : domains_) d->dataplane->set_trace(out);
}

nlohmann::json System::execute(const nlohmann::json& op) {
  session_.push_back(op);
  if (!op.is_object()) throw Error(ErrorCode::BadRequest, "operation must be an object");
  return dispatch(str_arg(op, "op"), op);
}

void System::replay(const std::vector<nlohmann::json>& session) {
  for (const auto& op : session) {
    try {
      execute(op);
    } catch (const Error&) {
    }
  }
}

void System::log_events(const std::string& domain, const std::vector<Event>& events) {
  for (const auto& e : events) events_.append(domain, e);
}

nlohmann::json System::submit(Domain& d, const nlohmann::json& command) {
  auto result = d.cluster->submit(command);
  log_events(d.name, result.events);
  for (auto& m : result.outbound) bus_.push_back(std::move(m));
  pump();
  result.check();
  return result.body;
}

void System::pump() {
  while (!bus_.empty()) {
    Domain* target = find_domain(bus_.front().to);
    if (target && !target->cluster->leader()) return;  // retried after the next command
    NsiMessage msg = std::move(bus_.front());
    bus_.pop_front();
    std::string state_after = "Undeliverable";
    Tick tick = 0;
    if (target) {
      auto result = target->cluster->submit(cmd::nsi_deliver(msg));
      log_events(target->name, result.events);
      for (auto& m : result.outbound) bus_.push_back(std::move(m));
      tick = target->cluster->read_model().now();
      state_after = result.ok ? std::string(to_string(nsi_global(msg.correlation_id)))
                              : "Error";
    }
    auto line = std::to_string(tick) + " " + msg.from + "->" + msg.to + " " +
                std::string(to_string(msg.kind)) + " " + msg.correlation_id + " " + state_after;
    nsi_trace_.push_back(line);
    if (nsi_out_) *nsi_out_ << line << '\n';
    auto body = msg.to_json();
    body["state_after"] = state_after;
    body["tick"] = tick;
    body.erase("kind");
    body["message"] = to_string(msg.kind);
    events_.append(target ? target->name : msg.to, Event{"NsiMessage", body});
  }
}

nlohmann::json System::dispatch(const std::string& op, const nlohmann::json& args) {
  static const std::set<std::string> passthrough = {"bod.request", "bod.cancel", "l2.create",
                                                    "l2.remove",   "topo.port",  "topo.link"};
  if (passthrough.count(op)) {
    auto command = args;
    command.erase("domain");
    return submit(domain(domain_arg(args)), command);
  }
  if (op == "clock.advance") return advance(int_arg(args, "ticks"));
  if (op == "dataplane.inject") return inject(domain(domain_arg(args)), args);
  if (op == "cluster.kill" || op == "cluster.revive") {
    auto& d = domain(domain_arg(args));
    const auto id = int_arg(args, "id");
    if (id < 0) throw Error(ErrorCode::UnknownReplica, std::to_string(id));
    auto events = op == "cluster.kill" ? d.cluster->kill_replica(static_cast<std::size_t>(id))
                                       : d.cluster->revive_replica(static_cast<std::size_t>(id));
    log_events(d.name, events);
    pump();
    auto body = d.cluster->status_json();
    body["events"] = nlohmann::json::array();
    for (const auto& e : events) body["events"].push_back(e.to_json());
    return body;
  }
  if (op == "nsi.reserve") {
    auto command = args;
    command.erase("domain");
    auto body = submit(domain(domain_arg(args)), command);
    return nsi_reservation(body.at("correlation_id").get<std::string>());
  }
  if (op == "nsi.commit" || op == "nsi.provision" || op == "nsi.release") {
    const auto cid = str_arg(args, "correlation_id");
    submit(aggregator_of(cid), cmd::nsi_step(op.substr(4), cid));
    return nsi_reservation(cid);
  }
  throw Error(ErrorCode::BadRequest, "unknown operation " + op);
}

nlohmann::json System::advance(Tick ticks) {
  if (ticks < 0) throw Error(ErrorCode::BadRequest, "ticks must be >= 0");
  if (domains_.size() == 1) return submit(*domains_.front(), cmd::advance(ticks));
  for (const auto& d : domains_)
    if (!d->cluster->leader()) throw Error(ErrorCode::NoQuorum, "domain " + d->name);
  // Domains advance in lockstep so NSI messages see consistent clocks.
  nlohmann::json reports = nlohmann::json::array();
  for (Tick t = 0; t < ticks; ++t)
    for (auto& d : domains_) {
      auto body = submit(*d, cmd::advance(1));
      for (auto r : body["reports"]) {
        if (r["events"].empty() && t + 1 < ticks) continue;
        r["domain"] = d->name;
        reports.push_back(std::move(r));
      }
    }
  return {{"now", domains_.front()->cluster->read_model().now()}, {"reports", reports}};
}

nlohmann::json System::inject(Domain& d, const nlohmann::json& args) {
  const auto endpoint = str_arg(args, "endpoint");
  const Bits size = int_arg(args, "size_bits");
  const auto count = args.contains("count") ? int_arg(args, "count") : 1;
  if (count < 1 || count > 1'000'000) throw Error(ErrorCode::BadRequest, "count out of range");
  std::optional<Vlan> vlan;
  if (auto it = args.find("vlan"); it != args.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 1 || it->get<std::int64_t>() > 4094)
      throw Error(ErrorCode::InvalidVlan, it->dump());
    vlan = it->get<Vlan>();
  }
  d.dataplane->fabric().require_endpoint(endpoint);

  std::int64_t delivered = 0;
  std::map<std::string, std::int64_t> reasons;
  std::map<std::tuple<std::string, std::string, int>, std::int64_t> sinks;
  nlohmann::json first;
  for (std::int64_t i = 0; i < count; ++i) {
    Domain* at = &d;
    auto result = at->dataplane->inject_frame({endpoint, vlan, size, 0});
    std::vector<std::string> hops = result.hops;
    // A frame leaving through a boundary endpoint continues in the peer.
    for (int crossing = 0; crossing < 2 && result.delivered(); ++crossing) {
      const auto* idl = at->dataplane->fabric().interdomain_at(result.delivery()->endpoint);
      Domain* peer = idl ? find_domain(idl->peer_domain) : nullptr;
      if (!peer) break;
      auto next = peer->dataplane->inject_frame({idl->peer_endpoint, result.delivery()->vlan, size, 0});
      hops.insert(hops.end(), next.hops.begin(), next.hops.end());
      result = std::move(next);
      at = peer;
    }
    result.hops = hops;
    if (const auto* del = result.delivery()) {
      ++delivered;
      ++sinks[{at->name, del->endpoint, del->vlan ? int(*del->vlan) : -1}];
    } else {
      ++reasons[std::string(to_string(*result.drop_reason()))];
    }
    if (i == 0) {
      first = to_json(result);
      first["domain"] = at->name;
    }
  }
  nlohmann::json at_json = nlohmann::json::array();
  for (const auto& [key, n] : sinks) {
    const auto& [dom, ep, tag] = key;
    at_json.push_back({{"domain", dom},
                       {"endpoint", ep},
                       {"vlan", tag < 0 ? nlohmann::json(nullptr) : nlohmann::json(tag)},
                       {"frames", n}});
  }
  return {{"sent", count},
          {"delivered", delivered},
          {"dropped", count - delivered},
          {"delivered_bits", delivered * size},
          {"drops", reasons},
          {"delivered_at", at_json},
          {"first", first},
          {"tick", d.dataplane->now()}};
}

Domain& System::aggregator_of(const std::string& cid) {
  for (auto& d : domains_)
    if (const auto* r = d->cluster->read_model().nsi().find(cid); r && r->aggregator) return *d;
  throw Error(ErrorCode::UnknownCorrelation, cid);
}

SegmentState System::nsi_global(const std::string& cid) const {
  const auto& agg = const_cast<System*>(this)->aggregator_of(cid);
  const auto& rec = agg.cluster->read_model().nsi().require(cid);
  SegmentState peer = rec.remote.state;
  for (const auto& d : domains_)
    if (d->name == rec.remote.domain)
      if (const auto* pr = d->cluster->read_model().nsi().find(cid)) peer = pr->local.state;
  return global_state(rec.local.state, peer);
}

nlohmann::json System::nsi_reservation(const std::string& cid) const {
  const auto& agg = const_cast<System*>(this)->aggregator_of(cid);
  const auto& rec = agg.cluster->read_model().nsi().require(cid);
  nlohmann::json segments = nlohmann::json::array({segment_view(rec.local)});
  nlohmann::json peer = segment_view(rec.remote);
  for (const auto& d : domains_)
    if (d->name == rec.remote.domain)
      if (const auto* pr = d->cluster->read_model().nsi().find(cid)) peer = segment_view(pr->local);
  segments.push_back(peer);
  auto j = rec.to_json();
  j.erase("local");
  j.erase("remote");
  j.erase("aggregator");
  j["segments"] = segments;
  j["state"] = to_string(nsi_global(cid));
  return j;
}

nlohmann::json System::nsi_reservations() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : domains_)
    for (const auto& [cid, r] : d->cluster->read_model().nsi().reservations())
      if (r.aggregator) out.push_back(nsi_reservation(cid));
  return out;
}

nlohmann::json System::topology(const std::string& name) const {
  const auto& d = domain(name);
  auto j = d.cluster->read_model().fabric().to_json();
  j["domain"] = d.name;
  j["now"] = d.cluster->read_model().now();
  return j;
}

nlohmann::json System::bod_services(const std::string& name) const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, s] : domain(name).cluster->read_model().bod().services())
    out.push_back(to_json(s));
  return out;
}

nlohmann::json System::bod_service(std::uint64_t id, const std::string& name) const {
  return to_json(domain(name).cluster->read_model().bod().require_service(id));
}

nlohmann::json System::circuits(const std::string& name) const {
  return domain(name).cluster->read_model().sdxl2().to_json();
}

nlohmann::json System::cluster_status(const std::string& name) const {
  auto j = domain(name).cluster->status_json();
  j["domain"] = domain(name).name;
  return j;
}

nlohmann::json System::rules(const std::string& name) const {
  return domain(name).dataplane->rules_json();
}

nlohmann::json System::hashes() const {
  nlohmann::json j = {{"events", hex(events_.hash())}, {"domains", nlohmann::json::object()}};
  for (const auto& d : domains_)
    j["domains"][d->name] = {{"controller", hex(d->cluster->read_model().state_hash())},
                             {"rule_table", hex(d->dataplane->rule_table_hash())},
                             {"dataplane", hex(d->dataplane->state_hash())}};
  return j;
}

}  // namespace fabric
