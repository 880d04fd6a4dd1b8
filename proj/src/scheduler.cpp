#include "fabric/scheduler.hpp"

#include <algorithm>

#include "fabric/error.hpp"
#include "fabric/pathfinder.hpp"

namespace fabric {

namespace {

Vlan client_key(std::optional<Vlan> tag) { return tag.value_or(0); }

nlohmann::json opt_vlan(std::optional<Vlan> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<Vlan> vlan_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer())
    throw Error(ErrorCode::BadRequest, std::string(key) + " must be an integer");
  auto v = it->get<std::int64_t>();
  if (v < 1 || v > 4094) throw Error(ErrorCode::InvalidVlan, std::to_string(v));
  return static_cast<Vlan>(v);
}

}  // namespace

std::string_view to_string(ServiceState state) {
  switch (state) {
    case ServiceState::Scheduled: return "Scheduled";
    case ServiceState::Active: return "Active";
    case ServiceState::Expired: return "Expired";
    case ServiceState::Cancelled: return "Cancelled";
    case ServiceState::Failed: return "Failed";
  }
  return "?";
}

BodScheduler::BodScheduler(const Fabric& fabric, CalendarBook& calendars,
                           FlowProgrammer& flows, VlanRange vlans)
    : fabric_(fabric), calendars_(calendars), flows_(flows), vlans_(vlans) {}

void BodScheduler::validate(const BodRequest& r, Tick now) const {
  if (r.bandwidth <= 0) throw Error(ErrorCode::BadRequest, "bandwidth must be > 0");
  if (r.src == r.dst) throw Error(ErrorCode::BadRequest, "src and dst are equal");
  if (r.window.start < 0 || r.window.end <= r.window.start)
    throw Error(ErrorCode::BadWindow, "window must satisfy 0 <= start < end");
  if (r.window.end <= now)
    throw Error(ErrorCode::BadWindow, "window ends at or before now");
  for (auto tag : {r.src_vlan, r.dst_vlan})
    if (tag && (*tag < 1 || *tag > 4094))
      throw Error(ErrorCode::InvalidVlan, std::to_string(*tag));
}

namespace {

// Path and per-link VLANs for links only; endpoints are checked separately.
std::optional<Admission> admit_links(const Fabric& fabric,
                                     const CalendarBook& calendars,
                                     const std::string& src_vfc,
                                     const std::string& dst_vfc, Mbps demand,
                                     Window window,
                                     const std::set<std::string>& excluded,
                                     VlanRange vlans) {
  PathQuery q{kOverlayBod, src_vfc, dst_vfc, demand, window, excluded, vlans};
  auto path = compute_path(fabric, calendars, q);
  if (!path) return std::nullopt;
  Admission adm{*path, {}};
  for (const auto& id : adm.path)
    adm.link_vlans.push_back(*calendars.link(id).lowest_free_vlan(window, vlans));
  return adm;
}

}  // namespace

Admission BodScheduler::admit(const BodRequest& r, Tick now,
                              const std::set<std::string>& excluded) const {
  validate(r, now);
  const auto& src = fabric_.require_endpoint(r.src);
  const auto& dst = fabric_.require_endpoint(r.dst);
  for (const auto* ep : {&src, &dst})
    if (fabric_.require_vfc(ep->attachment.vfc).overlay != kOverlayBod)
      throw Error(ErrorCode::UnknownEndpoint, ep->id + " is not a BoD endpoint");

  for (const auto& [ep, tag] : {std::pair{&src, r.src_vlan}, std::pair{&dst, r.dst_vlan}}) {
    const auto& cal = calendars_.endpoint(ep->id);
    if (cal.residual(r.window) < r.bandwidth)
      throw Error(ErrorCode::Infeasible, "access capacity exhausted at " + ep->id);
    if (!cal.vlan_free(client_key(tag), r.window))
      throw Error(ErrorCode::EndpointBusy,
                  ep->id + (tag ? " vlan " + std::to_string(*tag) : " untagged"));
  }

  auto adm = admit_links(fabric_, calendars_, src.attachment.vfc,
                         dst.attachment.vfc, r.bandwidth, r.window, excluded,
                         vlans_);
  if (!adm) throw Error(ErrorCode::Infeasible, "no feasible path " + r.src + " -> " + r.dst);
  return *adm;
}

void BodScheduler::write_links(const std::string& owner, const Admission& adm,
                               Window window, Mbps bandwidth, bool firm) {
  for (std::size_t i = 0; i < adm.path.size(); ++i) {
    auto& cal = calendars_.link(adm.path[i]);
    cal.allocate({window, bandwidth, owner, firm});
    cal.hold_vlan({window, adm.link_vlans[i], owner, firm});
  }
}

void BodScheduler::write(const std::string& owner, const BodRequest& r,
                         const Admission& adm, bool firm) {
  for (const auto& [ep, tag] : {std::pair{&r.src, r.src_vlan}, std::pair{&r.dst, r.dst_vlan}}) {
    auto& cal = calendars_.endpoint(*ep);
    cal.allocate({r.window, r.bandwidth, owner, firm});
    cal.hold_vlan({r.window, client_key(tag), owner, firm});
  }
  write_links(owner, adm, r.window, r.bandwidth, firm);
}

BodService& BodScheduler::new_service(const BodRequest& r, const Admission& adm) {
  const auto id = next_id_++;
  BodService svc;
  svc.id = id;
  svc.cookie = "bod-" + std::to_string(id);
  svc.request = r;
  svc.path = adm.path;
  svc.link_vlans = adm.link_vlans;
  svc.state = ServiceState::Scheduled;
  svc.meter_rate = r.bandwidth;
  svc.link_window = r.window;
  return services_.emplace(id, std::move(svc)).first->second;
}

const BodService& BodScheduler::request_service(const BodRequest& r, Tick now,
                                                std::vector<Event>* events) {
  Admission adm = admit(r, now);
  BodService& svc = new_service(r, adm);
  write(svc.cookie, r, adm, true);
  std::vector<Event> local;
  local.emplace_back("ServiceScheduled", nlohmann::json{{"service", fabric::to_json(svc)}});
  if (r.window.contains(now)) activate(svc, now, local);
  if (events) events->insert(events->end(), local.begin(), local.end());
  return svc;
}

CompiledService BodScheduler::compile(const BodService& svc) const {
  return compile_service(fabric_, svc.cookie,
                         {svc.request.src, svc.request.src_vlan},
                         {svc.request.dst, svc.request.dst_vlan}, svc.path,
                         svc.link_vlans, svc.meter_rate);
}

void BodScheduler::activate(BodService& svc, Tick now, std::vector<Event>& events) {
  const bool path_alive = std::all_of(svc.path.begin(), svc.path.end(), [&](const auto& id) {
    return fabric_.require_link(id).state == LinkState::Up;
  });
  if (!path_alive) {
    calendars_.release_links(svc.cookie);
    Window remaining{std::max(now, svc.request.window.start), svc.request.window.end};
    const auto& src = fabric_.require_endpoint(svc.request.src);
    const auto& dst = fabric_.require_endpoint(svc.request.dst);
    auto adm = admit_links(fabric_, calendars_, src.attachment.vfc,
                           dst.attachment.vfc, svc.request.bandwidth, remaining,
                           {}, vlans_);
    if (!adm) {
      calendars_.release(svc.cookie);
      svc.state = ServiceState::Failed;
      events.emplace_back("ServiceFailed",
                          nlohmann::json{{"id", svc.id}, {"reason", "Infeasible"}});
      return;
    }
    svc.path = adm->path;
    svc.link_vlans = adm->link_vlans;
    svc.link_window = remaining;
    write_links(svc.cookie, *adm, remaining, svc.request.bandwidth, true);
  }
  const auto n = flows_.install(svc.cookie, compile(svc));
  svc.state = ServiceState::Active;
  events.emplace_back("ServiceActivated", nlohmann::json{{"id", svc.id},
                                                         {"rules_installed", n},
                                                         {"path", svc.path}});
}

std::vector<Event> BodScheduler::on_tick(Tick t) {
  std::vector<Event> events;
  for (auto& [id, svc] : services_) {
    if (svc.state == ServiceState::Active && svc.request.window.end <= t) {
      const auto n = flows_.remove(svc.cookie);
      calendars_.release(svc.cookie);
      svc.state = ServiceState::Expired;
      events.emplace_back("ServiceExpired",
                          nlohmann::json{{"id", id}, {"rules_removed", n}});
    }
  }
  for (auto& [id, svc] : services_) {
    if (svc.state != ServiceState::Scheduled) continue;
    if (svc.request.window.end <= t) {
      calendars_.release(svc.cookie);
      svc.state = ServiceState::Expired;
      events.emplace_back("ServiceExpired", nlohmann::json{{"id", id}, {"rules_removed", 0}});
    } else if (svc.request.window.start <= t) {
      activate(svc, t, events);
    }
  }
  return events;
}

std::size_t BodScheduler::cancel_service(std::uint64_t id, Tick,
                                         std::vector<Event>* events) {
  auto it = services_.find(id);
  if (it == services_.end())
    throw Error(ErrorCode::UnknownService, std::to_string(id));
  auto& svc = it->second;
  if (svc.terminal())
    throw Error(ErrorCode::AlreadyTerminal,
                "service " + std::to_string(id) + " is " + std::string(to_string(svc.state)));
  std::size_t removed = 0;
  if (svc.state == ServiceState::Active) removed = flows_.remove(svc.cookie);
  calendars_.release(svc.cookie);
  svc.state = ServiceState::Cancelled;
  if (events)
    events->emplace_back("ServiceCancelled",
                         nlohmann::json{{"id", id}, {"rules_removed", removed}});
  return removed;
}

const Hold& BodScheduler::hold(const BodRequest& r, const std::string& owner, Tick now) {
  if (holds_.count(owner)) throw Error(ErrorCode::DuplicateId, "hold " + owner);
  Admission adm = admit(r, now);
  write(owner, r, adm, false);
  return holds_.emplace(owner, Hold{owner, r, adm, false}).first->second;
}

void BodScheduler::commit_hold(const std::string& owner) {
  auto it = holds_.find(owner);
  if (it == holds_.end()) throw Error(ErrorCode::UnknownCorrelation, owner);
  calendars_.set_firm(owner, true);
  it->second.firm = true;
}

void BodScheduler::release_hold(const std::string& owner) {
  calendars_.release(owner);
  holds_.erase(owner);
}

const Hold* BodScheduler::find_hold(const std::string& owner) const {
  auto it = holds_.find(owner);
  return it == holds_.end() ? nullptr : &it->second;
}

const BodService& BodScheduler::provision_hold(const std::string& owner, Tick now,
                                               std::vector<Event>* events) {
  auto it = holds_.find(owner);
  if (it == holds_.end()) throw Error(ErrorCode::UnknownCorrelation, owner);
  if (!it->second.firm) throw Error(ErrorCode::WrongState, owner + " is not committed");
  Hold h = std::move(it->second);
  holds_.erase(it);
  BodService& svc = new_service(h.request, h.admission);
  calendars_.rename_owner(owner, svc.cookie);
  std::vector<Event> local;
  local.emplace_back("ServiceScheduled", nlohmann::json{{"service", fabric::to_json(svc)}});
  if (h.request.window.end <= now) {
    calendars_.release(svc.cookie);
    svc.state = ServiceState::Expired;
  } else if (h.request.window.contains(now)) {
    activate(svc, now, local);
  }
  if (events) events->insert(events->end(), local.begin(), local.end());
  return svc;
}

std::vector<std::uint64_t> BodScheduler::active_on_link(const std::string& link_id) const {
  std::vector<std::uint64_t> ids;
  for (const auto& [id, svc] : services_)
    if (svc.state == ServiceState::Active &&
        std::find(svc.path.begin(), svc.path.end(), link_id) != svc.path.end())
      ids.push_back(id);
  return ids;
}

RerouteOutcome BodScheduler::reroute(std::uint64_t id, const std::string& dead_link,
                                     Tick now) {
  auto it = services_.find(id);
  if (it == services_.end()) throw Error(ErrorCode::UnknownService, std::to_string(id));
  auto& svc = it->second;
  if (svc.state != ServiceState::Active)
    throw Error(ErrorCode::WrongState, "service " + std::to_string(id) + " is not Active");

  RerouteOutcome out;
  out.old_path = svc.path;
  out.rules_removed = flows_.remove(svc.cookie);
  calendars_.release_links(svc.cookie);

  Window remaining{std::max(now, svc.request.window.start), svc.request.window.end};
  const auto& src = fabric_.require_endpoint(svc.request.src);
  const auto& dst = fabric_.require_endpoint(svc.request.dst);
  auto adm = admit_links(fabric_, calendars_, src.attachment.vfc, dst.attachment.vfc,
                         svc.request.bandwidth, remaining, {dead_link}, vlans_);
  if (!adm) {
    calendars_.release(svc.cookie);
    svc.state = ServiceState::Failed;
    return out;
  }
  svc.path = adm->path;
  svc.link_vlans = adm->link_vlans;
  svc.link_window = remaining;
  write_links(svc.cookie, *adm, remaining, svc.request.bandwidth, true);
  out.rules_installed = flows_.install(svc.cookie, compile(svc));
  out.new_path = svc.path;
  out.rerouted = true;
  return out;
}

const BodService* BodScheduler::service(std::uint64_t id) const {
  auto it = services_.find(id);
  return it == services_.end() ? nullptr : &it->second;
}

const BodService& BodScheduler::require_service(std::uint64_t id) const {
  if (const auto* s = service(id)) return *s;
  throw Error(ErrorCode::UnknownService, std::to_string(id));
}

nlohmann::json BodScheduler::to_json() const {
  nlohmann::json j = {{"services", nlohmann::json::array()},
                      {"holds", nlohmann::json::array()},
                      {"next_id", next_id_}};
  for (const auto& [id, s] : services_) j["services"].push_back(fabric::to_json(s));
  for (const auto& [owner, h] : holds_)
    j["holds"].push_back({{"owner", owner},
                          {"request", fabric::to_json(h.request)},
                          {"path", h.admission.path},
                          {"link_vlans", h.admission.link_vlans},
                          {"firm", h.firm}});
  return j;
}

nlohmann::json to_json(const BodRequest& r) {
  return {{"src", r.src},
          {"dst", r.dst},
          {"mbps", r.bandwidth},
          {"start", r.window.start},
          {"end", r.window.end},
          {"src_vlan", opt_vlan(r.src_vlan)},
          {"dst_vlan", opt_vlan(r.dst_vlan)}};
}

nlohmann::json to_json(const BodService& s) {
  nlohmann::json j = to_json(s.request);
  j["id"] = s.id;
  j["cookie"] = s.cookie;
  j["path"] = s.path;
  j["link_vlans"] = s.link_vlans;
  j["state"] = to_string(s.state);
  j["meter_rate_mbps"] = s.meter_rate;
  return j;
}

BodRequest bod_request_from_json(const nlohmann::json& j) {
  auto str = [&](const char* k) {
    auto it = j.find(k);
    if (it == j.end() || !it->is_string())
      throw Error(ErrorCode::BadRequest, std::string("missing string field ") + k);
    return it->get<std::string>();
  };
  auto num = [&](const char* k) {
    auto it = j.find(k);
    if (it == j.end() || !it->is_number_integer())
      throw Error(ErrorCode::BadRequest, std::string("missing integer field ") + k);
    return it->get<std::int64_t>();
  };
  BodRequest r;
  r.src = str("src");
  r.dst = str("dst");
  r.bandwidth = num("mbps");
  r.window = {num("start"), num("end")};
  r.src_vlan = vlan_field(j, "src_vlan");
  r.dst_vlan = vlan_field(j, "dst_vlan");
  return r;
}

}  // namespace fabric
