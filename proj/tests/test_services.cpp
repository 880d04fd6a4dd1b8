#include <random>

#include <gtest/gtest.h>

#include "fabric/controller.hpp"
#include "fabric/pathfinder.hpp"
#include "oracles.hpp"
#include "rig.hpp"
#include "support.hpp"

using namespace fabric;
using fx::bod;
using fx::Rig;

namespace {

const BodService& svc(const Rig& r, std::uint64_t id) { return r.ctl.bod().require_service(id); }

std::size_t allocations_of(const CalendarBook& book, const std::string& owner) {
  std::size_t n = 0;
  for (const auto* m : {&book.links(), &book.endpoints()})
    for (const auto& [id, cal] : *m) {
      for (const auto& a : cal.allocations()) n += a.owner == owner;
      for (const auto& h : cal.vlan_holds()) n += h.owner == owner;
    }
  return n;
}

}  // namespace

TEST(Bod, ActivatesAtStartAndExpiresAtEnd) {
  Rig r(fx::pilot());
  auto res = r.ok(cmd::bod_request(bod("client-mil", "client-pra", 500, 10, 100)));
  EXPECT_EQ(res.body["state"], "Scheduled");
  EXPECT_EQ(res.body["path"], nlohmann::json({"PRA-MIL"}));
  EXPECT_EQ(res.body["link_vlans"], nlohmann::json({2}));
  EXPECT_EQ(r.ctl.calendars().link("PRA-MIL").residual({10, 100}), 9500);

  r.ok(cmd::advance(9));
  EXPECT_EQ(svc(r, 1).state, ServiceState::Scheduled);
  EXPECT_EQ(r.dp.rule_count(), 0u);
  EXPECT_EQ(r.send("client-mil", std::nullopt).drop_reason(), DropReason::NoMatch);

  auto tick = r.ok(cmd::advance(1));
  ASSERT_EQ(tick.body["reports"].size(), 1u);
  EXPECT_EQ(tick.body["reports"][0]["events"][0]["kind"], "ServiceActivated");
  EXPECT_EQ(tick.body["reports"][0]["events"][0]["rules_installed"], 4);
  EXPECT_EQ(svc(r, 1).state, ServiceState::Active);
  EXPECT_EQ(r.dp.rule_count(), 4u);
  EXPECT_EQ(r.send("client-mil", std::nullopt).delivery()->endpoint, "client-pra");
  EXPECT_EQ(r.send("client-pra", std::nullopt).delivery()->endpoint, "client-mil");

  r.ok(cmd::advance(89));
  EXPECT_EQ(svc(r, 1).state, ServiceState::Active);
  auto end = r.ok(cmd::advance(1));
  EXPECT_EQ(end.events.at(0).body["events"][0]["kind"], "ServiceExpired");
  EXPECT_EQ(svc(r, 1).state, ServiceState::Expired);
  EXPECT_EQ(r.dp.rule_count(), 0u);
  EXPECT_EQ(allocations_of(r.ctl.calendars(), "bod-1"), 0u);
}

TEST(Bod, StartingNowActivatesImmediately) {
  Rig r(fx::pilot());
  auto res = r.ok(cmd::bod_request(bod("client-lon", "client-ams", 100, 0, 5)));
  EXPECT_EQ(res.body["state"], "Active");
  ASSERT_EQ(res.events.size(), 2u);
  EXPECT_EQ(res.events[1].kind, "ServiceActivated");
  EXPECT_TRUE(r.send("client-lon", std::nullopt).delivered());
}

TEST(Bod, Rejections) {
  Rig r(fx::pilot());
  r.ok(cmd::bod_request(bod("client-mil", "client-pra", 500, 10, 100)));
  const auto before = r.ctl.state_hash();
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-pra", 100, 50, 60))), ErrorCode::EndpointBusy);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-pra", 600, 50, 60, 7, 7))), ErrorCode::Infeasible);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-pra", 10, 60, 50))), ErrorCode::BadWindow);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-pra", 10, 5, 5))), ErrorCode::BadWindow);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-zzz", 10, 5, 6))), ErrorCode::UnknownEndpoint);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "sdx-ams", 10, 5, 6))), ErrorCode::UnknownEndpoint);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-mil", 10, 5, 6))), ErrorCode::BadRequest);
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-mil", "client-pra", 0, 5, 6))), ErrorCode::BadRequest);
  EXPECT_EQ(r.fails({{"op", "bod.request"}, {"src", "client-mil"}}), ErrorCode::BadRequest);
  EXPECT_EQ(r.ctl.state_hash(), before);

  // Disjoint windows and distinct tags share the endpoint.
  r.ok(cmd::bod_request(bod("client-mil", "client-pra", 500, 100, 200)));
  r.ok(cmd::bod_request(bod("client-mil", "client-pra", 400, 50, 60, 7, 8)));
  r.ok(cmd::advance(10));
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-lon", "client-ams", 10, 0, 10))), ErrorCode::BadWindow);
}

TEST(Bod, CancelReleasesEverything) {
  Rig r(fx::pilot());
  r.ok(cmd::bod_request(bod("client-mil", "client-par", 300, 0, 100)));
  r.ok(cmd::bod_request(bod("client-lon", "client-ams", 300, 50, 100)));
  EXPECT_EQ(r.dp.rule_count(), 6u);
  auto c1 = r.ok(cmd::bod_cancel(1));
  EXPECT_EQ(c1.body["state"], "Cancelled");
  EXPECT_EQ(c1.body["rules_removed"], 6);
  EXPECT_EQ(r.dp.rule_count(), 0u);
  auto c2 = r.ok(cmd::bod_cancel(2));
  EXPECT_EQ(c2.body["rules_removed"], 0);
  EXPECT_TRUE(r.ctl.calendars().link("MIL-AMS").empty());
  EXPECT_TRUE(r.ctl.calendars().endpoint("client-mil").empty());
  EXPECT_EQ(r.fails(cmd::bod_cancel(1)), ErrorCode::AlreadyTerminal);
  EXPECT_EQ(r.fails(cmd::bod_cancel(42)), ErrorCode::UnknownService);
}

TEST(Bod, LinkVlansAreLowestFree) {
  Rig r(fx::pilot());
  for (Vlan tag = 10; tag < 13; ++tag)
    r.ok(cmd::bod_request(bod("client-mil", "client-ams", 100, 0, 50, tag, tag)));
  for (std::uint64_t id = 1; id <= 3; ++id) {
    EXPECT_EQ(svc(r, id).path, Path{"MIL-AMS"});
    EXPECT_EQ(svc(r, id).link_vlans, std::vector<Vlan>{static_cast<Vlan>(id + 1)});
  }
  r.ok(cmd::bod_cancel(2));
  r.ok(cmd::bod_request(bod("client-mil", "client-ams", 100, 0, 50, 20, 20)));
  EXPECT_EQ(svc(r, 4).link_vlans, std::vector<Vlan>{3});
}

TEST(Bod, AdmissionMatchesPerTickOracle) {
  constexpr Tick kHorizon = 40;
  const VlanRange vlans{2, 4};
  std::mt19937 rng(2024);
  int accepted = 0, rejected = 0;
  for (int round = 0; round < 25; ++round) {
    const int n = 4 + static_cast<int>(rng() % 4);
    Fabric fabric = load_topology(fx::random_topology(rng, n, 3, 400, 500));
    Controller ctl(fabric, vlans);
    oracle::AdmissionLedger ledger(fabric, kHorizon, vlans);
    std::uint64_t next_id = 1;

    for (int step = 0; step < 40; ++step) {
      const auto live = ledger.live();
      if (!live.empty() && rng() % 5 == 0) {
        const auto id = live[rng() % live.size()];
        ASSERT_TRUE(ctl.apply(cmd::bod_cancel(id)).ok);
        ledger.cancel(id);
        continue;
      }
      const int a = static_cast<int>(rng() % n);
      int b = static_cast<int>(rng() % n);
      if (a == b) b = (b + 1) % n;
      const Tick s = static_cast<Tick>(rng() % (kHorizon - 1));
      const Tick e = s + 1 + static_cast<Tick>(rng() % (kHorizon - s));
      auto tag = [&]() -> std::optional<Vlan> {
        auto k = rng() % 3;
        return k == 0 ? std::nullopt : std::optional<Vlan>(static_cast<Vlan>(k + 1));
      };
      BodRequest req = bod("c" + std::to_string(a), "c" + std::to_string(b),
                           50 + static_cast<Mbps>(rng() % 200), s, e, tag(), tag());
      const auto want = ledger.judge(req);
      auto res = ctl.apply(cmd::bod_request(req));
      ASSERT_EQ(res.ok, !want.error) << res.message;
      if (want.error) {
        ASSERT_EQ(*res.error, *want.error);
        ++rejected;
        continue;
      }
      ++accepted;
      const auto& got = ctl.bod().require_service(next_id);
      ASSERT_EQ(got.path, want.path);
      ASSERT_EQ(got.link_vlans, want.link_vlans);
      ledger.book(next_id++, req, want);
    }

    for (const auto* m : {&ctl.calendars().links(), &ctl.calendars().endpoints()})
      for (const auto& [id, c] : *m)
        for (Tick t = 0; t < kHorizon; ++t) {
          ASSERT_LE(oracle::usage_at(c.allocations(), t), c.capacity()) << id << "@" << t;
          ASSERT_EQ(oracle::usage_at(c.allocations(), t), ledger.usage(id, t)) << id << "@" << t;
        }
  }
  EXPECT_GT(accepted, 100);
  EXPECT_GT(rejected, 50);
}

TEST(Sdxl2, TranslatesBetweenEdgeTags) {
  Rig r(fx::pilot());
  auto res = r.ok(cmd::l2_create("c1", {"sdx-mil", Vlan{100}}, {"sdx-ams", Vlan{200}}));
  EXPECT_EQ(res.body["state"], "Installed");
  EXPECT_EQ(res.body["cookie"], "l2:c1");
  EXPECT_EQ(res.events.at(0).kind, "CircuitInstalled");
  EXPECT_EQ(r.dp.rule_count(), 4u);
  auto fwd = r.send("sdx-mil", Vlan{100});
  ASSERT_TRUE(fwd.delivered());
  EXPECT_EQ(*fwd.delivery(), (Delivered{"sdx-ams", Vlan{200}}));
  auto rev = r.send("sdx-ams", Vlan{200});
  EXPECT_EQ(*rev.delivery(), (Delivered{"sdx-mil", Vlan{100}}));
  EXPECT_EQ(r.send("sdx-mil", Vlan{101}).drop_reason(), DropReason::NoMatch);
  // Unmetered: an oversized burst goes through.
  for (int i = 0; i < 50; ++i) ASSERT_TRUE(r.send("sdx-mil", Vlan{100}, 1'000'000).delivered());
}

TEST(Sdxl2, UntaggedEdgesAndLifecycle) {
  Rig r(fx::pilot());
  r.ok(cmd::l2_create("u", {"sdx-lon", std::nullopt}, {"sdx-pra", Vlan{30}}));
  auto d = r.send("sdx-lon", std::nullopt);
  ASSERT_TRUE(d.delivered());
  EXPECT_EQ(*d.delivery(), (Delivered{"sdx-pra", Vlan{30}}));
  EXPECT_EQ(*r.send("sdx-pra", Vlan{30}).delivery(), (Delivered{"sdx-lon", std::nullopt}));

  EXPECT_EQ(r.fails(cmd::l2_create("u", {"sdx-mil", Vlan{1}}, {"sdx-ams", Vlan{2}})), ErrorCode::DuplicateName);
  EXPECT_EQ(r.fails(cmd::l2_create("v", {"sdx-lon", std::nullopt}, {"sdx-ams", Vlan{2}})), ErrorCode::EndpointBusy);
  EXPECT_EQ(r.fails(cmd::l2_create("w", {"client-mil", std::nullopt}, {"sdx-ams", Vlan{2}})), ErrorCode::UnknownEndpoint);
  EXPECT_EQ(r.fails(cmd::l2_create("x", {"sdx-ams", Vlan{2}}, {"sdx-ams", Vlan{3}})), ErrorCode::BadRequest);

  auto rm = r.ok(cmd::l2_remove("u"));
  EXPECT_EQ(rm.body["state"], "Withdrawn");
  EXPECT_EQ(rm.body["rules_removed"], 6);
  EXPECT_EQ(r.dp.rule_count(), 0u);
  EXPECT_EQ(r.fails(cmd::l2_remove("u")), ErrorCode::UnknownCircuit);
  EXPECT_EQ(r.fails(cmd::l2_remove("nope")), ErrorCode::UnknownCircuit);
  ASSERT_EQ(r.ctl.sdxl2().list_circuits().size(), 1u);
  // The edge is reusable once withdrawn.
  r.ok(cmd::l2_create("v", {"sdx-lon", std::nullopt}, {"sdx-ams", Vlan{2}}));
}

TEST(Failover, ReroutesEveryAffectedService) {
  Rig r(fx::pilot());
  for (Vlan tag = 10; tag < 13; ++tag)
    r.ok(cmd::bod_request(bod("client-mil", "client-ams", 200, 0, 1000, tag, tag)));
  r.ok(cmd::bod_request(bod("client-lon", "client-par", 100, 0, 1000)));
  const Path lon_par = svc(r, 4).path;

  auto res = r.ok(cmd::link_state("MIL-AMS", PortState::Down));
  ASSERT_EQ(res.body["recovery"].size(), 1u);
  const auto& rep = res.body["recovery"][0];
  EXPECT_EQ(rep["link"], "MIL-AMS");
  ASSERT_EQ(rep["entries"].size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rep["entries"][i]["id"], std::to_string(i + 1));
    EXPECT_EQ(rep["entries"][i]["outcome"], "Rerouted");
    EXPECT_EQ(rep["entries"][i]["rules_removed"], 4);
  }
  for (std::uint64_t id = 1; id <= 3; ++id) {
    const auto& s = svc(r, id);
    EXPECT_EQ(s.state, ServiceState::Active);
    EXPECT_EQ(s.path, (Path{"MIL-LON", "LON-AMS"}));
    for (const auto& l : s.path) EXPECT_NE(l, "MIL-AMS");
    auto d = r.send("client-mil", static_cast<Vlan>(9 + id));
    ASSERT_TRUE(d.delivered());
    EXPECT_EQ(*d.delivery(), (Delivered{"client-ams", static_cast<Vlan>(9 + id)}));
    EXPECT_EQ(d.hops, (std::vector<std::string>{"MIL", "LON", "AMS"}));
  }
  EXPECT_EQ(svc(r, 4).path, lon_par);
  EXPECT_TRUE(r.ctl.calendars().link("MIL-AMS").empty());
  EXPECT_EQ(r.ctl.calendars().link("LON-AMS").residual({0, 1000}), 10000 - 700);
  // Distinct services keep distinct link VLANs after the move.
  std::set<Vlan> used;
  for (std::uint64_t id = 1; id <= 3; ++id) used.insert(svc(r, id).link_vlans[0]);
  EXPECT_EQ(used.size(), 3u);

  // The link coming back does not move anything.
  r.ok(cmd::link_state("MIL-AMS", PortState::Up));
  EXPECT_EQ(svc(r, 1).path, (Path{"MIL-LON", "LON-AMS"}));
  r.ok(cmd::bod_request(bod("client-mil", "client-ams", 200, 0, 1000, 20, 20)));
  EXPECT_EQ(svc(r, 5).path, Path{"MIL-AMS"});
}

TEST(Failover, BridgeCutFailsAndReleases) {
  Rig r(load_topology_file(fx::data_path("line.topo")));
  r.ok(cmd::bod_request(bod("client-t1", "client-t3", 100, 0, 500)));
  r.ok(cmd::bod_request(bod("client-t1", "client-t3", 100, 100, 500, 5, 5)));
  EXPECT_EQ(r.dp.rule_count(), 6u);
  auto res = r.ok(cmd::link_state("T1-T2", PortState::Down));
  const auto& rep = res.body["recovery"][0];
  ASSERT_EQ(rep["entries"].size(), 1u);
  EXPECT_EQ(rep["entries"][0]["outcome"], "Failed");
  EXPECT_EQ(svc(r, 1).state, ServiceState::Failed);
  EXPECT_EQ(r.dp.rule_count(), 0u);
  EXPECT_EQ(allocations_of(r.ctl.calendars(), "bod-1"), 0u);
  EXPECT_EQ(r.send("client-t1", std::nullopt).drop_reason(), DropReason::NoMatch);

  // The scheduled one fails when its start arrives with the bridge still cut.
  auto t = r.ok(cmd::advance(100));
  EXPECT_EQ(t.body["reports"][0]["events"][0]["kind"], "ServiceFailed");
  EXPECT_EQ(svc(r, 2).state, ServiceState::Failed);
  EXPECT_EQ(allocations_of(r.ctl.calendars(), "bod-2"), 0u);
  for (const auto* m : {&r.ctl.calendars().links(), &r.ctl.calendars().endpoints()})
    for (const auto& [id, cal] : *m) EXPECT_TRUE(cal.empty()) << id;
  EXPECT_EQ(r.fails(cmd::bod_request(bod("client-t1", "client-t3", 1, 200, 300))), ErrorCode::Infeasible);
}

TEST(Failover, ScheduledServiceReadmitsOnActivation) {
  Rig r(fx::pilot());
  r.ok(cmd::bod_request(bod("client-mil", "client-pra", 100, 5, 50)));
  r.ok(cmd::link_state("PRA-MIL", PortState::Down));
  EXPECT_EQ(svc(r, 1).path, Path{"PRA-MIL"});
  r.ok(cmd::advance(5));
  EXPECT_EQ(svc(r, 1).state, ServiceState::Active);
  EXPECT_EQ(svc(r, 1).path, (Path{"MIL-AMS", "AMS-PAR", "PAR-PRA"}));
  EXPECT_TRUE(r.send("client-mil", std::nullopt).delivered());
}

TEST(Failover, CircuitsReroute) {
  Rig r(fx::pilot());
  r.ok(cmd::l2_create("c1", {"sdx-mil", Vlan{100}}, {"sdx-ams", Vlan{200}}));
  r.ok(cmd::bod_request(bod("client-mil", "client-ams", 100, 0, 50)));
  auto res = r.ok(cmd::port_state({"SDX-AMS", "to-MIL"}, PortState::Down));
  const auto& rep = res.body["recovery"];
  ASSERT_EQ(rep.size(), 1u);
  EXPECT_EQ(rep[0]["link"], "SDX-MIL-AMS");
  EXPECT_EQ(rep[0]["entries"][0]["kind"], "circuit");
  EXPECT_EQ(rep[0]["entries"][0]["outcome"], "Rerouted");
  EXPECT_EQ(r.ctl.sdxl2().circuit("c1")->intent.path, (Path{"SDX-MIL-LON", "SDX-LON-AMS"}));
  EXPECT_EQ(*r.send("sdx-mil", Vlan{100}).delivery(), (Delivered{"sdx-ams", Vlan{200}}));
  // The BoD service shares the trunk but not the overlay link.
  EXPECT_EQ(svc(r, 1).path, Path{"MIL-AMS"});
  EXPECT_TRUE(r.send("client-mil", std::nullopt).delivered());
  // Idempotent port state changes emit nothing.
  EXPECT_TRUE(r.ok(cmd::port_state({"SDX-AMS", "to-MIL"}, PortState::Down)).events.empty());
}
