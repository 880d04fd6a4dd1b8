#include "fabric/nsi.hpp"

#include <algorithm>
#include <array>

#include "fabric/error.hpp"

namespace fabric {

namespace {

constexpr std::array<std::string_view, 6> kSegmentNames = {
    "Checking", "Held", "Committed", "Provisioned", "Released", "Failed"};
constexpr std::array<std::string_view, 9> kKindNames = {
    "Reserve", "ReserveConfirmed", "ReserveFailed", "Commit", "Committed",
    "Provision", "Provisioned", "Release", "Released"};

nlohmann::json opt(std::optional<Vlan> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<Vlan> opt_vlan(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<Vlan>();
}

nlohmann::json segment_json(const NsiSegment& s) {
  nlohmann::json j = {{"domain", s.domain}, {"state", to_string(s.state)}};
  j["hold_deadline"] = s.hold_deadline ? nlohmann::json(*s.hold_deadline) : nlohmann::json(nullptr);
  j["service_id"] = s.service_id ? nlohmann::json(*s.service_id) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

std::string_view to_string(SegmentState state) {
  return kSegmentNames[static_cast<std::size_t>(state)];
}

SegmentState segment_state_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSegmentNames.size(); ++i)
    if (kSegmentNames[i] == s) return static_cast<SegmentState>(i);
  throw Error(ErrorCode::BadRequest, "unknown segment state " + std::string(s));
}

SegmentState global_state(SegmentState a, SegmentState b) {
  if (a == SegmentState::Failed || b == SegmentState::Failed) return SegmentState::Failed;
  return std::min(a, b);
}

std::string_view to_string(NsiKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

NsiKind nsi_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<NsiKind>(i);
  throw Error(ErrorCode::BadRequest, "unknown NSI message kind " + std::string(s));
}

nlohmann::json NsiMessage::to_json() const {
  return {{"kind", to_string(kind)},
          {"correlation_id", correlation_id},
          {"from", from},
          {"to", to},
          {"payload", payload}};
}

NsiMessage NsiMessage::from_json(const nlohmann::json& j) {
  try {
    NsiMessage m;
    m.kind = nsi_kind_from_string(j.at("kind").get<std::string>());
    m.correlation_id = j.at("correlation_id").get<std::string>();
    m.from = j.value("from", "");
    m.to = j.value("to", "");
    m.payload = j.value("payload", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("bad NSI message: ") + e.what());
  }
}

nlohmann::json NsiReservation::to_json() const {
  return {{"correlation_id", correlation_id},
          {"aggregator", aggregator},
          {"request",
           {{"src", request.src},
            {"dst", request.dst},
            {"mbps", request.bandwidth},
            {"start", request.window.start},
            {"end", request.window.end},
            {"src_vlan", opt(request.src_vlan)},
            {"dst_vlan", opt(request.dst_vlan)}}},
          {"stitch_vlan", opt(stitch_vlan)},
          {"boundary_endpoint", boundary_endpoint},
          {"local", segment_json(local)},
          {"remote", segment_json(remote)},
          {"state", to_string(global())},
          {"reason", reason}};
}

NsiAgent::NsiAgent(const Fabric& fabric, const CalendarBook& calendars, BodScheduler& bod)
    : fabric_(fabric), calendars_(calendars), bod_(bod) {}

NsiMessage NsiAgent::message(NsiKind kind, const NsiReservation& r,
                             nlohmann::json payload) const {
  return {kind, r.correlation_id, fabric_.domain(), r.remote.domain, std::move(payload)};
}

void NsiAgent::note(std::vector<Event>& events, const NsiReservation& r) const {
  events.emplace_back("NsiStateChanged", nlohmann::json{{"correlation_id", r.correlation_id},
                                                        {"domain", fabric_.domain()},
                                                        {"segment", to_string(r.local.state)},
                                                        {"global", to_string(r.global())}});
}

NsiReservation& NsiAgent::mutable_require(const std::string& cid) {
  auto it = records_.find(cid);
  if (it == records_.end()) throw Error(ErrorCode::UnknownCorrelation, cid);
  return it->second;
}

const NsiReservation* NsiAgent::find(const std::string& cid) const {
  auto it = records_.find(cid);
  return it == records_.end() ? nullptr : &it->second;
}

const NsiReservation& NsiAgent::require(const std::string& cid) const {
  if (const auto* r = find(cid)) return *r;
  throw Error(ErrorCode::UnknownCorrelation, cid);
}

void NsiAgent::release_local(NsiReservation& r, Tick now) {
  if (r.local.service_id) {
    const auto& svc = bod_.require_service(*r.local.service_id);
    if (!svc.terminal()) bod_.cancel_service(svc.id, now);
  }
  if (bod_.find_hold(owner(r.correlation_id))) bod_.release_hold(owner(r.correlation_id));
  r.local.hold_deadline.reset();
}

const NsiReservation& NsiAgent::reserve(const NsiGlobalRequest& req, Tick now,
                                        std::vector<NsiMessage>& out,
                                        std::vector<Event>& events) {
  if (req.bandwidth <= 0) throw Error(ErrorCode::BadRequest, "bandwidth must be > 0");
  if (req.window.start < 0 || req.window.end <= req.window.start || req.window.end <= now)
    throw Error(ErrorCode::BadWindow, "invalid reservation window");
  fabric_.require_endpoint(req.src);

  NsiReservation r;
  r.correlation_id = fabric_.domain() + "-nsi-" + std::to_string(next_);
  r.aggregator = true;
  r.request = req;
  r.local.domain = fabric_.domain();

  const InterDomainLink* idl = nullptr;
  for (const auto& l : fabric_.interdomain_links()) {
    const auto& ep = fabric_.require_endpoint(l.endpoint);
    if (fabric_.require_port(ep.attachment).state == PortState::Up) {
      idl = &l;
      break;
    }
  }
  auto fail = [&](std::string reason) -> const NsiReservation& {
    ++next_;
    r.local.state = SegmentState::Failed;
    r.remote.state = SegmentState::Failed;
    r.reason = std::move(reason);
    auto& stored = records_.emplace(r.correlation_id, std::move(r)).first->second;
    note(events, stored);
    return stored;
  };
  if (!idl) {
    if (!fabric_.interdomain_links().empty())
      r.remote.domain = fabric_.interdomain_links().front().peer_domain;
    return fail("no inter-domain link Up");
  }
  r.boundary_endpoint = idl->endpoint;
  r.remote.domain = idl->peer_domain;
  r.stitch_vlan = calendars_.endpoint(idl->endpoint).lowest_free_vlan(req.window, bod_.vlan_range());
  if (!r.stitch_vlan) return fail("no free stitching VLAN at " + idl->endpoint);

  try {
    bod_.hold({req.src, idl->endpoint, req.bandwidth, req.window, req.src_vlan, r.stitch_vlan},
              owner(r.correlation_id), now);
  } catch (const Error& e) {
    if (!is_rejection(e.code())) throw;
    return fail(e.what());
  }
  ++next_;
  r.local.state = SegmentState::Held;
  r.local.hold_deadline = now + kNsiHoldTicks;
  r.remote.state = SegmentState::Checking;
  auto& stored = records_.emplace(r.correlation_id, std::move(r)).first->second;
  out.push_back(message(NsiKind::Reserve, stored,
                        {{"src", idl->peer_endpoint},
                         {"dst", req.dst},
                         {"mbps", req.bandwidth},
                         {"start", req.window.start},
                         {"end", req.window.end},
                         {"stitch_vlan", *stored.stitch_vlan},
                         {"dst_vlan", opt(req.dst_vlan)}}));
  note(events, stored);
  return stored;
}

const NsiReservation& NsiAgent::commit(const std::string& cid, std::vector<NsiMessage>& out,
                                       std::vector<Event>& events) {
  auto& r = mutable_require(cid);
  if (!r.aggregator) throw Error(ErrorCode::WrongState, cid + " is driven by its aggregator");
  if (r.global() != SegmentState::Held)
    throw Error(ErrorCode::WrongState,
                "commit needs Held, reservation is " + std::string(to_string(r.global())));
  bod_.commit_hold(owner(cid));
  r.local.state = SegmentState::Committed;
  r.local.hold_deadline.reset();
  out.push_back(message(NsiKind::Commit, r));
  note(events, r);
  return r;
}

const NsiReservation& NsiAgent::provision(const std::string& cid, Tick now,
                                          std::vector<NsiMessage>& out,
                                          std::vector<Event>& events) {
  auto& r = mutable_require(cid);
  if (!r.aggregator) throw Error(ErrorCode::WrongState, cid + " is driven by its aggregator");
  if (r.global() != SegmentState::Committed)
    throw Error(ErrorCode::WrongState,
                "provision needs Committed, reservation is " + std::string(to_string(r.global())));
  r.local.service_id = bod_.provision_hold(owner(cid), now, &events).id;
  r.local.state = SegmentState::Provisioned;
  out.push_back(message(NsiKind::Provision, r));
  note(events, r);
  return r;
}

const NsiReservation& NsiAgent::release(const std::string& cid, Tick now,
                                        std::vector<NsiMessage>& out,
                                        std::vector<Event>& events) {
  auto& r = mutable_require(cid);
  if (!r.aggregator) throw Error(ErrorCode::WrongState, cid + " is driven by its aggregator");
  if (r.global() == SegmentState::Released)
    throw Error(ErrorCode::WrongState, cid + " is already Released");
  release_local(r, now);
  r.local.state = SegmentState::Released;
  const bool contacted = r.stitch_vlan && r.remote.state != SegmentState::Failed;
  if (contacted || r.remote.state == SegmentState::Checking)
    out.push_back(message(NsiKind::Release, r));
  else
    r.remote.state = SegmentState::Released;
  note(events, r);
  return r;
}

void NsiAgent::deliver(const NsiMessage& msg, Tick now, std::vector<NsiMessage>& out,
                       std::vector<Event>& events) {
  const auto& cid = msg.correlation_id;
  if (msg.kind == NsiKind::Reserve) {
    if (records_.count(cid)) throw Error(ErrorCode::BadRequest, "duplicate Reserve " + cid);
    const auto& p = msg.payload;
    NsiReservation r;
    r.correlation_id = cid;
    r.request = {p.value("src", ""), p.value("dst", ""), p.value("mbps", Mbps{0}),
                 {p.value("start", Tick{0}), p.value("end", Tick{0})},
                 opt_vlan(p, "stitch_vlan"), opt_vlan(p, "dst_vlan")};
    r.stitch_vlan = r.request.src_vlan;
    r.boundary_endpoint = r.request.src;
    r.local.domain = fabric_.domain();
    r.remote = {msg.from, SegmentState::Held, std::nullopt, std::nullopt};
    try {
      const auto& ep = fabric_.require_endpoint(r.boundary_endpoint);
      if (fabric_.require_port(ep.attachment).state != PortState::Up)
        throw Error(ErrorCode::Infeasible, "boundary " + ep.id + " is down");
      bod_.hold({r.request.src, r.request.dst, r.request.bandwidth, r.request.window,
                 r.request.src_vlan, r.request.dst_vlan},
                owner(cid), now);
      r.local.state = SegmentState::Held;
      r.local.hold_deadline = now + kNsiHoldTicks;
    } catch (const Error& e) {
      r.local.state = SegmentState::Failed;
      r.reason = e.what();
    }
    auto& stored = records_.emplace(cid, std::move(r)).first->second;
    if (stored.local.state == SegmentState::Held)
      out.push_back(message(NsiKind::ReserveConfirmed, stored,
                            {{"hold_deadline", *stored.local.hold_deadline}}));
    else
      out.push_back(message(NsiKind::ReserveFailed, stored, {{"reason", stored.reason}}));
    note(events, stored);
    return;
  }

  auto& r = mutable_require(cid);
  auto refuse = [&](std::string reason) {
    out.push_back(message(NsiKind::ReserveFailed, r, {{"reason", std::move(reason)}}));
  };
  switch (msg.kind) {
    case NsiKind::ReserveConfirmed:
      r.remote.state = SegmentState::Held;
      r.remote.hold_deadline = msg.payload.value("hold_deadline", Tick{0});
      break;
    case NsiKind::ReserveFailed:
      r.remote.state = SegmentState::Failed;
      r.remote.hold_deadline.reset();
      if (r.reason.empty()) r.reason = msg.payload.value("reason", "peer failed");
      if (r.local.state != SegmentState::Released && r.local.state != SegmentState::Failed) {
        release_local(r, now);
        r.local.state = SegmentState::Failed;
      }
      break;
    case NsiKind::Commit:
      if (r.local.state != SegmentState::Held) {
        refuse("commit in state " + std::string(to_string(r.local.state)));
        break;
      }
      bod_.commit_hold(owner(cid));
      r.local.state = SegmentState::Committed;
      r.local.hold_deadline.reset();
      r.remote.state = SegmentState::Committed;
      out.push_back(message(NsiKind::Committed, r));
      break;
    case NsiKind::Committed:
      r.remote.state = SegmentState::Committed;
      r.remote.hold_deadline.reset();
      break;
    case NsiKind::Provision:
      if (r.local.state != SegmentState::Committed) {
        refuse("provision in state " + std::string(to_string(r.local.state)));
        break;
      }
      r.local.service_id = bod_.provision_hold(owner(cid), now, &events).id;
      r.local.state = SegmentState::Provisioned;
      r.remote.state = SegmentState::Provisioned;
      out.push_back(message(NsiKind::Provisioned, r));
      break;
    case NsiKind::Provisioned:
      r.remote.state = SegmentState::Provisioned;
      break;
    case NsiKind::Release:
      release_local(r, now);
      r.local.state = SegmentState::Released;
      r.remote.state = SegmentState::Released;
      out.push_back(message(NsiKind::Released, r));
      break;
    case NsiKind::Released:
      r.remote.state = SegmentState::Released;
      break;
    case NsiKind::Reserve:
      break;
  }
  note(events, r);
}

std::vector<std::string> NsiAgent::tick_hold_timeouts(Tick t, std::vector<NsiMessage>& out,
                                                      std::vector<Event>& events) {
  std::vector<std::string> expired;
  for (auto& [cid, r] : records_) {
    if (r.local.state != SegmentState::Held || !r.local.hold_deadline ||
        *r.local.hold_deadline > t)
      continue;
    release_local(r, t);
    r.local.state = SegmentState::Failed;
    r.reason = "hold timeout at tick " + std::to_string(t);
    expired.push_back(cid);
    if (r.aggregator) {
      if (r.remote.state != SegmentState::Failed && r.remote.state != SegmentState::Released)
        out.push_back(message(NsiKind::Release, r));
    } else {
      out.push_back(message(NsiKind::ReserveFailed, r, {{"reason", r.reason}}));
    }
    events.emplace_back("NsiHoldExpired",
                        nlohmann::json{{"correlation_id", cid}, {"domain", fabric_.domain()}});
    note(events, r);
  }
  return expired;
}

nlohmann::json NsiAgent::to_json() const {
  nlohmann::json j = {{"next", next_}, {"reservations", nlohmann::json::array()}};
  for (const auto& [cid, r] : records_) j["reservations"].push_back(r.to_json());
  return j;
}

NsiGlobalRequest nsi_request_from_json(const nlohmann::json& j) {
  auto b = bod_request_from_json(j);
  return {b.src, b.dst, b.bandwidth, b.window, b.src_vlan, b.dst_vlan};
}

}  // namespace fabric
