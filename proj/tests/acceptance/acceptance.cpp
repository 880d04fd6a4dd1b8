// One PASS/FAIL line per headline property of the system.

#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "fabric/cluster.hpp"
#include "fabric/controller.hpp"
#include "fabric/error.hpp"
#include "fabric/flows.hpp"
#include "fabric/system.hpp"
#include "../oracles.hpp"
#include "../support.hpp"

using namespace fabric;
using nlohmann::json;

namespace {

struct Failure {
  std::string what;
};

void expect(bool cond, const std::string& what) {
  if (!cond) throw Failure{what};
}

template <typename A, typename B>
void expect_eq(const A& got, const B& want, const std::string& what) {
  if (!(got == want)) {
    std::ostringstream os;
    os << what << ": got " << json(got).dump() << ", want " << json(want).dump();
    throw Failure{os.str()};
  }
}

SystemConfig config(std::vector<std::string> topos, std::size_t replicas = 3) {
  SystemConfig c;
  for (const auto& t : topos) c.topologies.push_back(fx::topology_doc(t));
  c.replicas = replicas;
  return c;
}

json request(const std::string& src, const std::string& dst, Mbps mbps, Tick start, Tick end,
             std::optional<Vlan> sv = {}, std::optional<Vlan> dv = {}) {
  return cmd::bod_request({src, dst, mbps, {start, end}, sv, dv});
}

json inject(const std::string& ep, int count, std::optional<Vlan> vlan = {}, const std::string& domain = "") {
  json j = {{"op", "dataplane.inject"}, {"endpoint", ep}, {"size_bits", 1000}, {"count", count}};
  if (vlan) j["vlan"] = *vlan;
  if (!domain.empty()) j["domain"] = domain;
  return j;
}

json advance(Tick n) { return {{"op", "clock.advance"}, {"ticks", n}}; }

std::optional<ErrorCode> error_of(System& s, const json& op) {
  try {
    s.execute(op);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string calendars(const System& s, const std::string& d) {
  return s.domain(d).cluster->read_model().calendars().to_json().dump();
}

void scenario_lifecycle() {
  System sys(config({"pilot.topo"}));
  auto svc = sys.execute(request("client-mil", "client-pra", 500, 10, 100));
  const auto& fabric = sys.domain().dataplane->fabric();
  const std::size_t n = compile_service(fabric, "x", {"client-mil", std::nullopt}, {"client-pra", std::nullopt},
                                        svc["path"].get<Path>(), svc["link_vlans"].get<std::vector<Vlan>>(), 500)
                            .rule_count();
  expect(n > 0, "compiled rule count is zero");
  auto& dp = *sys.domain().dataplane;
  sys.execute(advance(9));
  auto at9 = sys.execute(inject("client-mil", 3));
  expect_eq(at9["drops"].value("NoMatch", 0), 3, "tick 9 NoMatch drops");
  expect_eq(dp.rule_count(), std::size_t{0}, "tick 9 rule count");
  sys.execute(advance(1));
  expect_eq(sys.execute(inject("client-mil", 3))["delivered"], 3, "tick 10 deliveries");
  expect_eq(sys.execute(inject("client-pra", 3))["delivered"], 3, "tick 10 reverse deliveries");
  expect_eq(dp.rule_count(), n, "tick 10 rule count");
  sys.execute(advance(89));
  expect_eq(sys.execute(inject("client-mil", 1))["delivered"], 1, "tick 99 delivery");
  sys.execute(advance(1));
  auto at100 = sys.execute(inject("client-mil", 3));
  expect_eq(at100["drops"].value("NoMatch", 0), 3, "tick 100 NoMatch drops");
  expect_eq(dp.rule_count(), std::size_t{0}, "tick 100 rule count");
}

void meter_enforcement() {
  {
    System sys(config({"pilot.topo"}));
    sys.execute(request("client-mil", "client-pra", 100, 0, 1000));
    auto r = sys.execute(inject("client-mil", 200));
    expect_eq(r["delivered"], 100, "one-tick deliveries");
    expect_eq(r["drops"].value("MeterExceeded", 0), 100, "one-tick meter drops");
  }
  System sys(config({"pilot.topo"}));
  sys.execute(request("client-mil", "client-pra", 100, 0, 1000));
  const Mbps rate = 100;
  const Bits burst = rate * kBitsPerMbpsTick;
  Bits delivered = 0;
  // 200 Mb/s offered at every tick boundary from 0 through 10.
  for (Tick t = 0; t <= 10; ++t) {
    delivered += sys.execute(inject("client-mil", 200))["delivered_bits"].get<Bits>();
    if (t < 10) sys.execute(advance(1));
  }
  expect_eq(delivered, rate * kBitsPerMbpsTick * 10 + burst, "delivered bits over 10 ticks");
}

void admission_conservation() {
  constexpr Tick kHorizon = 50;
  const VlanRange vlans{2, 5};
  std::mt19937 rng(4242);
  std::size_t cases = 0;
  for (int round = 0; round < 20; ++round) {
    const int n = 3 + static_cast<int>(rng() % 6);
    Fabric fabric = load_topology(fx::random_topology(rng, n, static_cast<int>(rng() % 5), 300 + 100 * (rng() % 4), 600));
    Controller ctl(fabric, vlans);
    oracle::AdmissionLedger ledger(fabric, kHorizon, vlans);
    std::uint64_t next_id = 1;
    for (int step = 0; step < 200; ++step) {
      const auto live = ledger.live();
      if (!live.empty() && rng() % 4 == 0) {
        const auto id = live[rng() % live.size()];
        expect(ctl.apply(cmd::bod_cancel(id)).ok, "cancel refused");
        ledger.cancel(id);
      } else {
        const int a = static_cast<int>(rng() % n);
        const int b = (a + 1 + static_cast<int>(rng() % (n - 1))) % n;
        const Tick s = static_cast<Tick>(rng() % (kHorizon - 1));
        const Tick e = s + 1 + static_cast<Tick>(rng() % (kHorizon - s));
        auto tag = [&]() -> std::optional<Vlan> {
          auto k = rng() % 4;
          return k == 0 ? std::nullopt : std::optional<Vlan>(static_cast<Vlan>(k + 1));
        };
        BodRequest req{"c" + std::to_string(a), "c" + std::to_string(b), 20 + static_cast<Mbps>(rng() % 250),
                       {s, e}, tag(), tag()};
        const auto want = ledger.judge(req);
        const auto got = ctl.apply(cmd::bod_request(req));
        ++cases;
        expect_eq(got.ok, !want.error, "decision for " + cmd::bod_request(req).dump());
        if (want.error) {
          expect_eq(std::string(to_string(*got.error)), std::string(to_string(*want.error)), "rejection code");
        } else {
          const auto& svc = ctl.bod().require_service(next_id);
          expect_eq(svc.path, want.path, "admitted path");
          expect_eq(svc.link_vlans, want.link_vlans, "admitted vlans");
          ledger.book(next_id++, req, want);
        }
      }
      for (const auto& [id, cal] : ctl.calendars().links())
        for (Tick t : oracle::breakpoints(cal.allocations(), {0, kHorizon})) {
          expect(oracle::usage_at(cal.allocations(), t) <= cal.capacity(), "over capacity on " + id);
          expect_eq(oracle::usage_at(cal.allocations(), t), ledger.usage(id, t), "usage of " + id);
        }
    }
  }
  expect(cases > 2000, "too few admission cases");
}

void vlan_translation() {
  System sys(config({"pilot.topo"}));
  auto& ctl0 = sys.domain().cluster->read_model();
  sys.execute(cmd::l2_create("warm", {"sdx-mil", Vlan{5}}, {"sdx-ams", Vlan{6}}));
  // Lowest free VLAN per link by scanning the holds.
  auto lowest = [&](const std::string& link) {
    const auto& holds = ctl0.calendars().link(link).vlan_holds();
    for (int v = kMinServiceVlan; v <= kMaxServiceVlan; ++v) {
      bool used = false;
      for (const auto& h : holds) used |= h.vlan == v && h.window.overlaps({0, kForever});
      if (!used) return static_cast<Vlan>(v);
    }
    return Vlan{0};
  };
  std::map<std::string, Vlan> expected;
  for (const auto& l : ctl0.fabric().links()) expected[l.id] = lowest(l.id);
  auto c = sys.execute(cmd::l2_create("c1", {"sdx-mil", Vlan{100}}, {"sdx-ams", Vlan{200}}));
  const auto path = c["path"].get<Path>();
  const auto vl = c["link_vlans"].get<std::vector<Vlan>>();
  for (std::size_t i = 0; i < path.size(); ++i) expect_eq(vl[i], expected[path[i]], "vlan on " + path[i]);
  auto fwd = sys.execute(inject("sdx-mil", 5, Vlan{100}));
  expect_eq(fwd["delivered_at"], json::array({{{"domain", "geant-pilot"}, {"endpoint", "sdx-ams"}, {"vlan", 200}, {"frames", 5}}}), "forward translation");
  auto rev = sys.execute(inject("sdx-ams", 5, Vlan{200}));
  expect_eq(rev["delivered_at"], json::array({{{"domain", "geant-pilot"}, {"endpoint", "sdx-mil"}, {"vlan", 100}, {"frames", 5}}}), "reverse translation");
}

void failure_recovery() {
  System sys(config({"pilot.topo"}));
  for (Vlan tag = 10; tag < 13; ++tag) {
    auto s = sys.execute(request("client-mil", "client-ams", 200, 0, 1000, tag, tag));
    expect_eq(s["path"], json({"MIL-AMS"}), "initial chord path");
  }
  auto r = sys.execute({{"op", "topo.port"}, {"vfc", "MIL"}, {"port", "to-AMS"}, {"state", "Down"}});
  bool derived = false;
  for (const auto& e : r["events"]) derived |= e["kind"] == "LinkDown" && e["link"] == "MIL-AMS";
  expect(derived, "LinkDown not derived");
  const auto& fabric = sys.domain().cluster->read_model().fabric();
  auto ring = oracle::best_path(fabric, "MIL", "AMS", [&](const Link& l) {
    return fabric.require_vfc(l.end_a.vfc).overlay == kOverlayBod && l.state == LinkState::Up;
  });
  expect(ring.has_value(), "oracle found no ring path");
  const auto& entries = r["recovery"].at(0)["entries"];
  expect_eq(entries.size(), std::size_t{3}, "recovery entries");
  for (const auto& e : entries) {
    expect_eq(e["outcome"], "Rerouted", "outcome");
    expect_eq(e["new_path"].get<Path>(), *ring, "rerouted path");
  }
  for (Vlan tag = 10; tag < 13; ++tag) {
    auto d = sys.execute(inject("client-mil", 10, tag));
    expect_eq(d["delivered"], 10, "post-recovery delivery");
    expect_eq(d["delivered_at"][0]["vlan"], tag, "post-recovery tag");
  }

  System line(config({"line.topo"}));
  const auto before = calendars(line, "");
  line.execute(request("client-t1", "client-t3", 300, 0, 500));
  line.execute(request("client-t1", "client-t3", 300, 0, 500, 4, 4));
  auto cut = line.execute({{"op", "topo.link"}, {"link_id", "T2-T3"}, {"state", "Down"}});
  for (const auto& e : cut["recovery"][0]["entries"]) expect_eq(e["outcome"], "Failed", "bridge outcome");
  for (const auto& s : line.bod_services()) expect_eq(s["state"], "Failed", "bridge service state");
  expect_eq(calendars(line, ""), before, "residuals after bridge cut");
  expect_eq(line.domain().dataplane->rule_count(), std::size_t{0}, "rules after bridge cut");
}

std::vector<json> random_commands(std::mt19937& rng, int n) {
  const std::vector<std::string> eps = {"client-mil", "client-lon", "client-ams", "client-par", "client-pra"};
  const std::vector<std::string> links = {"MIL-LON", "LON-AMS", "AMS-PAR", "PAR-PRA", "PRA-MIL", "MIL-AMS"};
  std::vector<json> out;
  for (int i = 0; i < n; ++i) {
    switch (rng() % 6) {
      case 0:
      case 1: {
        Tick s = static_cast<Tick>(rng() % 20);
        std::optional<Vlan> tag;
        if (rng() % 2) tag = static_cast<Vlan>(2 + rng() % 6);
        out.push_back(request(eps[rng() % 5], eps[rng() % 5], 100 + static_cast<Mbps>(rng() % 700), s,
                              s + 1 + static_cast<Tick>(rng() % 30), tag, tag));
        break;
      }
      case 2: out.push_back(cmd::bod_cancel(1 + rng() % 10)); break;
      case 3: out.push_back(cmd::advance(static_cast<Tick>(rng() % 5))); break;
      case 4:
        out.push_back(cmd::link_state(links[rng() % 6], rng() % 2 ? PortState::Down : PortState::Up));
        break;
      default:
        out.push_back(cmd::l2_create("c" + std::to_string(rng() % 3), {"sdx-lon", Vlan(10 + rng() % 3)},
                                     {"sdx-pra", Vlan(10 + rng() % 3)}));
    }
  }
  return out;
}

void cluster_transparency() {
  System sys(config({"pilot.topo"}));
  sys.execute(request("client-mil", "client-pra", 200, 0, 1000));
  sys.execute(request("client-lon", "client-par", 200, 0, 1000));
  auto& dp = *sys.domain().dataplane;
  const auto rules = dp.rule_table_hash();
  auto k = sys.execute({{"op", "cluster.kill"}, {"id", 0}});
  expect_eq(k["leader"], 1, "new leader");
  expect_eq(dp.rule_table_hash(), rules, "rule table across election");
  sys.execute(request("client-ams", "client-pra", 100, 0, 1000, 7, 7));
  expect_eq(sys.bod_service(3)["state"], "Active", "post-election request");
  sys.execute({{"op", "cluster.kill"}, {"id", 1}});
  const auto frozen = dp.rule_table_hash();
  expect(error_of(sys, request("client-par", "client-pra", 10, 0, 10, 9, 9)) == ErrorCode::NoQuorum,
         "mutation accepted without quorum");
  expect(error_of(sys, cmd::bod_cancel(1)) == ErrorCode::NoQuorum, "cancel accepted without quorum");
  expect_eq(dp.rule_table_hash(), frozen, "rule table without quorum");
  expect_eq(sys.execute(inject("client-mil", 4))["delivered"], 4, "forwarding without quorum");

  std::mt19937 rng(99);
  std::size_t compared = 0;
  for (int round = 0; round < 10; ++round) {
    Fabric f = fx::pilot();
    Controller single(f);
    Cluster c(3, [f] { return std::make_unique<Controller>(f); });
    std::size_t i = 0;
    for (const auto& command : random_commands(rng, 100)) {
      if (i % 13 == 4) c.kill_replica(*c.leader());
      if (i % 13 == 9)
        for (std::size_t id = 0; id < 3; ++id)
          if (c.replica(id).status == ReplicaStatus::Dead) c.revive_replica(id);
      ++i;
      expect_eq(c.submit(command).to_json(), single.apply(command).to_json(), "cluster vs singleton");
      ++compared;
    }
    expect_eq(c.read_model().state_hash(), single.state_hash(), "final state hash");
  }
  expect_eq(compared, std::size_t{1000}, "compared results");
}

void nsi_lifecycle() {
  json reserve = {{"op", "nsi.reserve"}, {"src", "client-a"}, {"dst", "client-b"}, {"mbps", 200},
                  {"start", 5},          {"end", 80}};
  {
    System sys(config({"nsi-geant.topo", "nsi-nren.topo"}));
    const std::string cid = sys.execute(reserve)["correlation_id"];
    expect_eq(sys.execute({{"op", "nsi.commit"}, {"correlation_id", cid}})["state"], "Committed", "commit");
    expect_eq(sys.execute({{"op", "nsi.provision"}, {"correlation_id", cid}})["state"], "Provisioned", "provision");
    sys.execute(advance(5));
    auto d = sys.execute(inject("client-a", 5));
    expect_eq(d["delivered_at"], json::array({{{"domain", "nren"}, {"endpoint", "client-b"}, {"vlan", nullptr}, {"frames", 5}}}), "end-to-end delivery");
    auto back = sys.execute(inject("client-b", 5, std::nullopt, "nren"));
    expect_eq(back["delivered"], 5, "reverse end-to-end delivery");
  }
  System sys(config({"nsi-geant.topo", "nsi-nren.topo"}));
  const auto g0 = calendars(sys, "geant"), n0 = calendars(sys, "nren");
  reserve["start"] = 0;
  const std::string cid = sys.execute(reserve)["correlation_id"];
  expect(calendars(sys, "geant") != g0 && calendars(sys, "nren") != n0, "hold not written");
  sys.execute(advance(49));
  expect_eq(sys.nsi_reservation(cid)["state"], "Held", "state at tick 49");
  sys.execute(advance(1));
  expect_eq(sys.nsi_reservation(cid)["state"], "Failed", "state at tick 50");
  expect_eq(calendars(sys, "geant"), g0, "geant calendars after timeout");
  expect_eq(calendars(sys, "nren"), n0, "nren calendars after timeout");
}

void determinism() {
  std::mt19937 rng(5);
  auto session = random_commands(rng, 300);
  for (std::size_t i = 0; i < session.size(); i += 7) session.insert(session.begin() + static_cast<long>(i), inject("client-lon", 3));
  session.push_back({{"op", "cluster.kill"}, {"id", 0}});
  session.push_back(advance(50));
  System original(config({"pilot.topo"}));
  original.replay(session);
  std::vector<std::pair<json, std::vector<json>>> runs;
  for (int k = 0; k < 2; ++k) {
    System s(config({"pilot.topo"}));
    s.replay(original.session());
    runs.emplace_back(s.hashes(), s.events().since(0));
  }
  expect_eq(runs[0].first, runs[1].first, "state hashes");
  expect(runs[0].second == runs[1].second, "event streams differ");
  expect_eq(runs[0].first, original.hashes(), "hashes vs original run");

  json nsi = {{"op", "nsi.reserve"}, {"src", "client-a"}, {"dst", "client-b"}, {"mbps", 10}, {"start", 0}, {"end", 20}};
  std::vector<json> two = {nsi, {{"op", "nsi.commit"}, {"correlation_id", "geant-nsi-1"}}, nsi, advance(60),
                           {{"op", "nsi.provision"}, {"correlation_id", "geant-nsi-1"}}};
  std::vector<std::pair<json, std::vector<std::string>>> multi;
  for (int k = 0; k < 2; ++k) {
    System s(config({"nsi-geant.topo", "nsi-nren.topo"}));
    s.replay(two);
    multi.emplace_back(s.hashes(), s.nsi_trace());
  }
  expect(multi[0] == multi[1], "two-domain replay differs");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> checks = {
      {"bod-lifecycle-scenario", scenario_lifecycle},
      {"meter-enforcement", meter_enforcement},
      {"admission-conservation", admission_conservation},
      {"vlan-translation", vlan_translation},
      {"failure-recovery", failure_recovery},
      {"cluster-transparency", cluster_transparency},
      {"nsi-lifecycle", nsi_lifecycle},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : checks) {
    try {
      check();
      std::printf("PASS %s\n", name);
    } catch (const Failure& f) {
      ++failed;
      std::printf("FAIL %s: %s\n", name, f.what.c_str());
    } catch (const std::exception& e) {
      ++failed;
      std::printf("FAIL %s: exception %s\n", name, e.what());
    }
  }
  return failed ? 1 : 0;
}
