#include <random>

#include <gtest/gtest.h>

#include "fabric/cluster.hpp"
#include "fabric/system.hpp"
#include "rig.hpp"
#include "support.hpp"

using namespace fabric;
using fx::bod;
using nlohmann::json;

namespace {

std::unique_ptr<Cluster> pilot_cluster(std::size_t n, Southbound* sb = nullptr) {
  Fabric f = fx::pilot();
  return std::make_unique<Cluster>(n, [f] { return std::make_unique<Controller>(f); }, sb);
}

SystemConfig pilot_config(std::size_t replicas = 3) {
  SystemConfig c;
  c.topologies = {fx::topology_doc("pilot.topo")};
  c.replicas = replicas;
  return c;
}

SystemConfig nsi_config() {
  SystemConfig c;
  c.topologies = {fx::topology_doc("nsi-geant.topo"), fx::topology_doc("nsi-nren.topo")};
  return c;
}

json nsi_reserve(Tick start, Tick end, Mbps mbps = 200) {
  return {{"op", "nsi.reserve"}, {"src", "client-a"}, {"dst", "client-b"}, {"mbps", mbps},
          {"start", start},      {"end", end}};
}

json step(const std::string& op, const std::string& cid) {
  return {{"op", "nsi." + op}, {"correlation_id", cid}};
}

json inject(const std::string& ep, int count = 1, const std::string& domain = "") {
  json j = {{"op", "dataplane.inject"}, {"endpoint", ep}, {"size_bits", 1000}, {"count", count}};
  if (!domain.empty()) j["domain"] = domain;
  return j;
}

ErrorCode exec_error(System& s, const json& op) {
  return fx::code_of([&] { s.execute(op); });
}

/// Random but mostly valid command stream over the pilot.
std::vector<json> random_commands(std::mt19937& rng, int n) {
  const std::vector<std::string> bod_eps = {"client-mil", "client-lon", "client-ams", "client-par", "client-pra"};
  const std::vector<std::string> sdx_eps = {"sdx-mil", "sdx-lon", "sdx-ams", "sdx-pra"};
  const std::vector<std::string> links = {"MIL-LON", "LON-AMS", "AMS-PAR", "PAR-PRA", "PRA-MIL", "MIL-AMS"};
  std::vector<json> out;
  for (int i = 0; i < n; ++i) {
    switch (rng() % 7) {
      case 0:
      case 1: {
        auto a = bod_eps[rng() % 5], b = bod_eps[rng() % 5];
        Tick s = static_cast<Tick>(rng() % 30);
        std::optional<Vlan> tag;
        if (rng() % 2) tag = static_cast<Vlan>(2 + rng() % 5);
        out.push_back(cmd::bod_request(bod(a, b, 100 + static_cast<Mbps>(rng() % 600), s,
                                           s + 1 + static_cast<Tick>(rng() % 40), tag, tag)));
        break;
      }
      case 2: out.push_back(cmd::bod_cancel(1 + rng() % 8)); break;
      case 3: out.push_back(cmd::advance(static_cast<Tick>(rng() % 6))); break;
      case 4:
        out.push_back(cmd::link_state(links[rng() % links.size()],
                                      rng() % 2 ? PortState::Down : PortState::Up));
        break;
      case 5:
        out.push_back(cmd::l2_create("c" + std::to_string(rng() % 4), {sdx_eps[rng() % 4], Vlan(10 + rng() % 3)},
                                     {sdx_eps[rng() % 4], Vlan(10 + rng() % 3)}));
        break;
      default: out.push_back(cmd::l2_remove("c" + std::to_string(rng() % 4)));
    }
  }
  return out;
}

}  // namespace

TEST(Cluster, ElectionAndTerms) {
  auto c = pilot_cluster(3);
  EXPECT_EQ(c->leader(), 0u);
  EXPECT_EQ(c->term(), 1u);
  auto ev = c->kill_replica(1);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, "ReplicaKilled");
  EXPECT_EQ(c->leader(), 0u);
  EXPECT_EQ(c->term(), 1u);
  c->revive_replica(1);
  ev = c->kill_replica(0);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[1].kind, "LeaderChanged");
  EXPECT_EQ(ev[1].body, (json{{"term", 2}, {"leader", 1}, {"previous", 0}}));
  EXPECT_EQ(c->leader(), 1u);
  // A revived smaller id does not take over.
  c->revive_replica(0);
  EXPECT_EQ(c->leader(), 1u);
  EXPECT_TRUE(c->kill_replica(0).size() == 1);
  EXPECT_TRUE(c->kill_replica(0).empty());
  EXPECT_EQ(fx::code_of([&] { c->kill_replica(7); }), ErrorCode::UnknownReplica);
  EXPECT_EQ(c->leaders_by_term(), (std::map<std::uint64_t, std::size_t>{{1, 0}, {2, 1}}));
}

TEST(Cluster, NoQuorumRejectsAndRestores) {
  auto c = pilot_cluster(3);
  c->submit(cmd::bod_request(bod("client-mil", "client-pra", 100, 0, 50))).check();
  c->kill_replica(0);
  auto ev = c->kill_replica(1);
  EXPECT_EQ(ev.back().kind, "QuorumLost");
  EXPECT_FALSE(c->leader());
  EXPECT_FALSE(c->quorate());
  const auto log_len = c->replica(2).log.size();
  EXPECT_EQ(fx::code_of([&] { c->submit(cmd::advance(1)); }), ErrorCode::NoQuorum);
  EXPECT_EQ(c->replica(2).log.size(), log_len);
  EXPECT_EQ(c->read_model().bod().services().size(), 1u);

  ev = c->revive_replica(0);
  EXPECT_EQ(ev.back().kind, "LeaderChanged");
  EXPECT_EQ(c->leader(), 0u);
  EXPECT_EQ(c->replica(0).applied_index, log_len);
  c->submit(cmd::advance(1)).check();
  EXPECT_TRUE(c->prefix_agreement());
}

TEST(Cluster, RevivedReplicaCatchesUp) {
  auto c = pilot_cluster(5);
  c->kill_replica(3);
  for (int i = 0; i < 5; ++i) c->submit(cmd::advance(1)).check();
  EXPECT_EQ(c->replica(3).log.size(), 0u);
  c->revive_replica(3);
  EXPECT_EQ(c->replica(3).log.size(), 5u);
  EXPECT_EQ(c->replica(3).applied_index, 5u);
  EXPECT_EQ(c->replica(3).state->state_hash(), c->replica(0).state->state_hash());
  EXPECT_EQ(c->replica(3).state->now(), 5);
}

TEST(Cluster, MatchesSingletonOracle) {
  std::mt19937 rng(7);
  for (int round = 0; round < 6; ++round) {
    Controller single(fx::pilot());
    auto c = pilot_cluster(3);
    const auto commands = random_commands(rng, 120);
    std::size_t step = 0;
    for (const auto& command : commands) {
      // Kill and revive followers and leaders along the way, never losing quorum.
      if (step % 17 == 5) c->kill_replica(*c->leader());
      if (step % 17 == 11)
        for (std::size_t id = 0; id < 3; ++id)
          if (c->replica(id).status == ReplicaStatus::Dead) c->revive_replica(id);
      ++step;
      auto want = single.apply(command);
      auto got = c->submit(command);
      ASSERT_EQ(got.to_json(), want.to_json()) << command.dump();
      ASSERT_TRUE(c->prefix_agreement());
    }
    EXPECT_EQ(c->read_model().state_hash(), single.state_hash());
    // Re-applying the committed log from scratch reproduces the state.
    Controller replayed(fx::pilot());
    for (const auto& e : c->log()) replayed.apply(e.payload);
    EXPECT_EQ(replayed.state_hash(), single.state_hash());
    for (std::size_t id = 0; id < 3; ++id)
      if (c->replica(id).status == ReplicaStatus::Alive)
        EXPECT_EQ(c->replica(id).state->state_hash(), single.state_hash());
  }
}

TEST(Cluster, TransparentToTheDataplane) {
  System sys(pilot_config());
  sys.execute({{"op", "bod.request"}, {"src", "client-mil"}, {"dst", "client-pra"}, {"mbps", 100}, {"start", 0}, {"end", 500}});
  sys.execute(json(cmd::l2_create("c1", {"sdx-mil", Vlan{100}}, {"sdx-ams", Vlan{200}})));
  auto& d = sys.domain();
  const auto rules = d.dataplane->rule_table_hash();
  const auto circuits = sys.circuits();
  auto killed = sys.execute({{"op", "cluster.kill"}, {"id", 0}});
  EXPECT_EQ(killed["leader"], 1);
  EXPECT_EQ(killed["term"], 2);
  EXPECT_EQ(d.dataplane->rule_table_hash(), rules);
  EXPECT_EQ(sys.circuits(), circuits);
  EXPECT_EQ(sys.execute(inject("client-mil"))["delivered"], 1);
  sys.execute({{"op", "bod.request"}, {"src", "client-lon"}, {"dst", "client-ams"}, {"mbps", 100}, {"start", 0}, {"end", 500}});
  EXPECT_EQ(sys.execute(inject("client-lon"))["delivered"], 1);
  // The newly elected leader drives the southbound: clock ticks refill meters.
  sys.execute({{"op", "clock.advance"}, {"ticks", 1}});
  EXPECT_EQ(d.dataplane->now(), 1);

  int leader_changes = 0;
  for (const auto& e : sys.events().since(0)) leader_changes += e["kind"] == "LeaderChanged";
  EXPECT_EQ(leader_changes, 1);

  auto lost = sys.execute({{"op", "cluster.kill"}, {"id", 1}});
  EXPECT_TRUE(lost["leader"].is_null());
  EXPECT_FALSE(lost["quorum"]);
  const auto frozen = d.dataplane->rule_table_hash();
  EXPECT_EQ(exec_error(sys, cmd::bod_cancel(1)), ErrorCode::NoQuorum);
  EXPECT_EQ(exec_error(sys, {{"op", "clock.advance"}, {"ticks", 1}}), ErrorCode::NoQuorum);
  EXPECT_EQ(d.dataplane->rule_table_hash(), frozen);
  EXPECT_EQ(sys.execute(inject("client-mil"))["delivered"], 1);
  EXPECT_EQ(sys.execute(inject("sdx-mil"))["delivered"], 0);
  json tagged = inject("sdx-mil");
  tagged["vlan"] = 100;
  EXPECT_EQ(sys.execute(tagged)["delivered_at"][0]["vlan"], 200);
  EXPECT_EQ(sys.bod_services().size(), 2u);
  EXPECT_EQ(sys.cluster_status()["replicas"][2]["status"], "Alive");
}

TEST(Nsi, LifecycleDeliversEndToEnd) {
  System sys(nsi_config());
  auto r = sys.execute(nsi_reserve(10, 100));
  const std::string cid = r["correlation_id"];
  EXPECT_EQ(cid, "geant-nsi-1");
  EXPECT_EQ(r["state"], "Held");
  EXPECT_EQ(r["stitch_vlan"], 2);
  EXPECT_EQ(r["segments"][0]["domain"], "geant");
  EXPECT_EQ(r["segments"][1]["domain"], "nren");
  EXPECT_EQ(r["segments"][1]["state"], "Held");
  EXPECT_EQ(r["segments"][0]["hold_deadline"], 50);

  EXPECT_EQ(exec_error(sys, step("provision", cid)), ErrorCode::WrongState);
  EXPECT_EQ(sys.execute(step("commit", cid))["state"], "Committed");
  EXPECT_EQ(exec_error(sys, step("commit", cid)), ErrorCode::WrongState);
  auto p = sys.execute(step("provision", cid));
  EXPECT_EQ(p["state"], "Provisioned");
  EXPECT_EQ(p["segments"][0]["service_id"], 1);
  EXPECT_EQ(p["segments"][1]["service_id"], 1);

  EXPECT_EQ(sys.execute(inject("client-a"))["delivered"], 0);
  sys.execute({{"op", "clock.advance"}, {"ticks", 10}});
  auto there = sys.execute(inject("client-a"));
  EXPECT_EQ(there["delivered"], 1);
  EXPECT_EQ(there["delivered_at"][0], (json{{"domain", "nren"}, {"endpoint", "client-b"}, {"vlan", nullptr}, {"frames", 1}}));
  EXPECT_EQ(there["first"]["hops"], (json{"A1", "A2", "B1", "B2"}));
  auto back = sys.execute(inject("client-b", 1, "nren"));
  EXPECT_EQ(back["delivered_at"][0]["endpoint"], "client-a");
  EXPECT_EQ(back["delivered_at"][0]["domain"], "geant");

  EXPECT_EQ(sys.execute(step("release", cid))["state"], "Released");
  EXPECT_EQ(sys.execute(inject("client-a"))["delivered"], 0);
  EXPECT_EQ(exec_error(sys, step("release", cid)), ErrorCode::WrongState);
  EXPECT_EQ(exec_error(sys, step("commit", "nope")), ErrorCode::UnknownCorrelation);

  const std::vector<std::string> kinds = {"Reserve", "ReserveConfirmed", "Commit", "Committed",
                                          "Provision", "Provisioned", "Release", "Released"};
  ASSERT_EQ(sys.nsi_trace().size(), kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i)
    EXPECT_NE(sys.nsi_trace()[i].find(" " + kinds[i] + " "), std::string::npos) << sys.nsi_trace()[i];
  EXPECT_EQ(sys.nsi_trace()[0], "0 geant->nren Reserve geant-nsi-1 Held");
}

TEST(Nsi, IdleHoldTimesOutAtFifty) {
  System sys(nsi_config());
  const auto g0 = sys.domain("geant").cluster->read_model().calendars().to_json().dump();
  const auto n0 = sys.domain("nren").cluster->read_model().calendars().to_json().dump();
  const std::string cid = sys.execute(nsi_reserve(0, 1000))["correlation_id"];
  EXPECT_NE(sys.domain("geant").cluster->read_model().calendars().to_json().dump(), g0);
  sys.execute({{"op", "clock.advance"}, {"ticks", 49}});
  EXPECT_EQ(sys.nsi_reservation(cid)["state"], "Held");
  sys.execute({{"op", "clock.advance"}, {"ticks", 1}});
  auto r = sys.nsi_reservation(cid);
  EXPECT_EQ(r["state"], "Failed");
  EXPECT_NE(r["reason"].get<std::string>().find("timeout"), std::string::npos);
  EXPECT_EQ(sys.domain("geant").cluster->read_model().calendars().to_json().dump(), g0);
  EXPECT_EQ(sys.domain("nren").cluster->read_model().calendars().to_json().dump(), n0);
  EXPECT_EQ(exec_error(sys, step("commit", cid)), ErrorCode::WrongState);
  int expired = 0;
  for (const auto& e : sys.events().since(0))
    if (e["kind"] == "TickReport")
      for (const auto& inner : e["events"]) expired += inner["kind"] == "NsiHoldExpired";
  EXPECT_GE(expired, 1);
}

TEST(Nsi, CommitStopsTheTimer) {
  System sys(nsi_config());
  const std::string cid = sys.execute(nsi_reserve(100, 200))["correlation_id"];
  sys.execute(step("commit", cid));
  sys.execute({{"op", "clock.advance"}, {"ticks", 80}});
  EXPECT_EQ(sys.nsi_reservation(cid)["state"], "Committed");
}

TEST(Nsi, PeerRefusalFailsTheReservation) {
  System sys(nsi_config());
  const auto g0 = sys.domain("geant").cluster->read_model().calendars().to_json().dump();
  // nren's client access is 1000 Mb/s: fill it first.
  sys.execute({{"op", "bod.request"}, {"domain", "nren"}, {"src", "stp-b"}, {"dst", "client-b"},
               {"mbps", 900}, {"start", 0}, {"end", 100}, {"src_vlan", 9}});
  auto r = sys.execute(nsi_reserve(0, 100, 500));
  EXPECT_EQ(r["state"], "Failed");
  EXPECT_EQ(r["segments"][1]["state"], "Failed");
  EXPECT_NE(r["reason"].get<std::string>().find("Infeasible"), std::string::npos);
  EXPECT_EQ(sys.domain("geant").cluster->read_model().calendars().to_json().dump(), g0);
  EXPECT_EQ(exec_error(sys, step("commit", r["correlation_id"])), ErrorCode::WrongState);
}

TEST(Nsi, NoUpInterdomainLink) {
  System sys(nsi_config());
  sys.execute({{"op", "topo.port"}, {"vfc", "A2"}, {"port", "client"}, {"state", "Down"}});
  auto r = sys.execute(nsi_reserve(0, 100));
  EXPECT_EQ(r["state"], "Failed");
  EXPECT_EQ(r["reason"], "no inter-domain link Up");
  EXPECT_TRUE(sys.nsi_trace().empty());
  EXPECT_EQ(sys.execute(step("release", r["correlation_id"]))["state"], "Released");
}

TEST(Nsi, PeerLeaderlessDefersDelivery) {
  System sys(nsi_config());
  sys.execute({{"op", "cluster.kill"}, {"domain", "nren"}, {"id", 0}});
  sys.execute({{"op", "cluster.kill"}, {"domain", "nren"}, {"id", 1}});
  const std::string cid = sys.execute(nsi_reserve(0, 100))["correlation_id"];
  EXPECT_EQ(sys.nsi_reservation(cid)["segments"][1]["state"], "Checking");
  sys.execute({{"op", "cluster.revive"}, {"domain", "nren"}, {"id", 1}});
  EXPECT_EQ(sys.nsi_reservation(cid)["state"], "Held");
}

TEST(System, ReplayIsDeterministic) {
  std::mt19937 rng(11);
  auto cmds = random_commands(rng, 150);
  std::vector<json> session;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    session.push_back(cmds[i]);
    if (i % 9 == 0) session.push_back(inject("client-mil", 5));
    if (i % 31 == 3) session.push_back({{"op", "cluster.kill"}, {"id", int(i % 3)}});
    if (i % 31 == 20) session.push_back({{"op", "cluster.revive"}, {"id", int((i - 17) % 3)}});
  }
  std::vector<std::pair<json, std::vector<json>>> runs;
  for (int k = 0; k < 2; ++k) {
    System sys(pilot_config());
    sys.replay(session);
    EXPECT_EQ(sys.session(), session);
    runs.emplace_back(sys.hashes(), sys.events().since(0));
  }
  EXPECT_EQ(runs[0].first, runs[1].first);
  EXPECT_EQ(runs[0].second, runs[1].second);
  EXPECT_GT(runs[0].second.size(), 50u);
}

TEST(System, BadOperations) {
  System sys(pilot_config());
  EXPECT_EQ(exec_error(sys, json::array()), ErrorCode::BadRequest);
  EXPECT_EQ(exec_error(sys, {{"op", "warp"}}), ErrorCode::BadRequest);
  EXPECT_EQ(exec_error(sys, {{"op", "clock.advance"}, {"ticks", -1}}), ErrorCode::BadRequest);
  EXPECT_EQ(exec_error(sys, {{"op", "bod.cancel"}, {"id", 1}, {"domain", "mars"}}), ErrorCode::UnknownDomain);
  EXPECT_EQ(exec_error(sys, {{"op", "cluster.kill"}, {"id", 9}}), ErrorCode::UnknownReplica);
  EXPECT_EQ(exec_error(sys, inject("nobody")), ErrorCode::UnknownEndpoint);
  EXPECT_EQ(sys.session().size(), 6u);
  SystemConfig dup;
  dup.topologies = {fx::topology_doc("pilot.topo"), fx::topology_doc("pilot.topo")};
  EXPECT_EQ(fx::code_of([&] { System s(dup); }), ErrorCode::DuplicateId);
}

TEST(EventLog, SinceAndCursor) {
  EventLog log;
  for (int i = 0; i < 5; ++i) log.append("d", Event{"E", {{"i", i}}});
  EXPECT_EQ(log.last_seq(), 5u);
  auto tail = log.since(3);
  ASSERT_EQ(tail.size(), 2u);
  EXPECT_EQ(tail[0]["seq"], 4);
  EXPECT_EQ(tail[0]["domain"], "d");
  EXPECT_EQ(tail[0]["i"], 3);
  EXPECT_TRUE(log.since(5).empty());
  EXPECT_EQ(log.since(99).size(), 5u);
  EXPECT_EQ(log.since(-4).size(), 5u);
  EXPECT_FALSE(log.wait_newer(5, std::chrono::milliseconds(1)));
  EXPECT_TRUE(log.wait_newer(4, std::chrono::milliseconds(1)));
}
