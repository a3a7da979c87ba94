#include <doctest.h>

#include "ptnet/fixtures.hpp"
#include "ptnet/network.hpp"
#include "ptnet/scenario.hpp"
#include "ptnet/trajectory.hpp"
#include "support.hpp"

#include <filesystem>

using namespace ptnet;

TEST_SUITE_BEGIN("network");

namespace {

const char* kTinyNet = R"({
  "horizon": 100,
  "nodes": [1, 2, 3, 4],
  "links": [
    {"from": 1, "to": 2, "fftt": 10, "sat_rate_vph": 1800, "lanes": 2},
    {"from": 2, "to": 3, "fftt": 12, "sat_rate_vph": 1800, "lanes": 2, "storage": 5},
    {"from": 3, "to": 4, "fftt": 10, "sat_rate_vph": 3600, "lanes": 1}
  ]
})";

}  // namespace

TEST_CASE("load: valid scenario, unit conversion, unbounded storage") {
  auto r = load_scenario(kTinyNet, R"({"vehicles": [
    {"vid": 1, "t0": 0, "nodes": [1, 2, 3, 4]}]})");
  REQUIRE(r.ok());
  CHECK(r.net.links[0].sat_rate == doctest::Approx(1.0));  // 1800*2/3600
  CHECK(r.net.links[2].sat_rate == doctest::Approx(1.0));
  CHECK_FALSE(r.net.links[0].has_storage_limit());
  CHECK(r.net.links[1].storage == 5);
  CHECK(r.vehicles.size() == 1);
  CHECK(r.vehicles[0].links == std::vector<int>{0, 1, 2});
}

TEST_CASE("load: empty vehicle list is a valid scenario") {
  auto r = load_scenario(kTinyNet, R"({"vehicles": []})");
  CHECK(r.ok());
  CHECK(r.vehicles.empty());
}

TEST_CASE("load: non-adjacent path nodes are rejected naming the pair") {
  auto r = load_scenario(kTinyNet, R"({"vehicles": [
    {"vid": 1, "t0": 0, "nodes": [1, 3]}]})");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors[0].find("no link 1->3") != std::string::npos);
}

TEST_CASE("load: error aggregation with field locations") {
  auto r = load_scenario(R"({
    "horizon": 5,
    "nodes": [1, 2],
    "links": [
      {"from": 1, "to": 9, "fftt": 0, "sat_rate_vph": 0, "lanes": 1},
      {"from": 1, "to": 2, "fftt": 3, "sat_rate_vph": 1800, "lanes": 2, "storage": 0}
    ]})",
                         R"({"vehicles": [
      {"vid": 1, "t0": 4, "nodes": [1, 2]}]})");
  REQUIRE_FALSE(r.ok());
  // unknown node, nonpositive fftt, nonpositive rate, bad storage, horizon
  CHECK(r.errors.size() >= 5);
  bool has_unknown = false, has_horizon = false;
  for (auto& e : r.errors) {
    if (e.find("unknown node 9") != std::string::npos) has_unknown = true;
    if (e.find("horizon too short") != std::string::npos) has_horizon = true;
  }
  CHECK(has_unknown);
  CHECK(has_horizon);
}

TEST_CASE("load: duplicate links rejected") {
  auto r = load_scenario(R"({
    "horizon": 50, "nodes": [1, 2],
    "links": [
      {"from": 1, "to": 2, "fftt": 1, "sat_rate_vph": 1800, "lanes": 1},
      {"from": 1, "to": 2, "fftt": 2, "sat_rate_vph": 1800, "lanes": 1}
    ]})",
                         R"({"vehicles": []})");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors[0].find("duplicate link 1->2") != std::string::npos);
}

TEST_CASE("derive_path_aux: earliest entries and last-link path time") {
  auto r = load_scenario(kTinyNet, R"({"vehicles": [
    {"vid": 7, "t0": 0, "nodes": [1, 2, 3, 4]}]})");
  REQUIRE(r.ok());
  PathAux aux = derive_path_aux(r.net, r.vehicles);
  CHECK(aux.earliest_entry[0] == std::vector<int>{0, 10, 22});
  CHECK(aux.ff_path_time[0] == 32);
  CHECK(aux.last_link[0] == 2);
}

TEST_CASE("derive_path_aux: FIFO on shared links, ties by vid") {
  auto r = load_scenario(kTinyNet, R"({"vehicles": [
    {"vid": 1, "t0": 0, "nodes": [1, 2, 3, 4]},
    {"vid": 2, "t0": 5, "nodes": [1, 2, 3, 4]},
    {"vid": 3, "t0": 0, "nodes": [3, 4]}]})");
  REQUIRE(r.ok());
  PathAux aux = derive_path_aux(r.net, r.vehicles);
  for (int lid = 0; lid < 3; ++lid) {
    CHECK(aux.fifo_before(1, 2, lid));
    CHECK_FALSE(aux.fifo_before(2, 1, lid));
  }
  // vid 3 enters link 2 at t=0, before both: e(3)=0 < e(1)=22
  CHECK(aux.fifo_before(3, 1, 2));
  // disjoint: vid 3 never uses link 0
  CHECK_FALSE(aux.fifo_before(3, 1, 0));
  CHECK_FALSE(aux.fifo_before(1, 3, 0));

  // determinism: derived twice, identical
  PathAux aux2 = derive_path_aux(r.net, r.vehicles);
  CHECK(aux.fifo_chain == aux2.fifo_chain);
  CHECK(aux.earliest_entry == aux2.earliest_entry);
}

TEST_CASE("derive_path_aux: e-values strictly increasing along each path") {
  for (unsigned seed = 0; seed < 25; ++seed) {
    Scenario sc = ptnet::testing::random_instance(seed);
    for (size_t v = 0; v < sc.vehicles.size(); ++v)
      for (size_t k = 1; k < sc.aux.earliest_entry[v].size(); ++k)
        REQUIRE(sc.aux.earliest_entry[v][k] > sc.aux.earliest_entry[v][k - 1]);
  }
}

TEST_CASE("occupancy: single vehicle occupies [entry, exit)") {
  TrajectorySet ts;
  VehicleTrajectory tv;
  tv.vid = 1;
  tv.legs.push_back({0, 3, 13});
  tv.arrival = 13;
  ts.vehicles.push_back(tv);
  CHECK(occupancy(ts, 0, 2) == 0);
  CHECK(occupancy(ts, 0, 3) == 1);
  CHECK(occupancy(ts, 0, 12) == 1);
  CHECK(occupancy(ts, 0, 13) == 0);
}

TEST_CASE("occupancy: empty trajectory set is zero everywhere") {
  TrajectorySet ts;
  for (int t = 0; t < 20; ++t) CHECK(occupancy(ts, 0, t) == 0);
}

TEST_CASE("experiment-one fixture: 28 nodes, 14 regular + 8 controlled, 20 vehicles") {
  auto dir = std::filesystem::temp_directory_path() / "ptnet_fixture_net";
  scaffold_fixture("exp1-s1", dir.string());
  auto r = load_scenario_dir(dir.string());
  REQUIRE(r.ok());
  const Scenario& sc = *r.scenario;
  CHECK(sc.net.nodes.size() == 28);
  int ctrl = 0, reg = 0;
  for (const auto& l : sc.net.links) (l.controlled() ? ctrl : reg)++;
  CHECK(ctrl == 8);
  CHECK(reg == 14);
  CHECK(sc.vehicles.size() == 20);
  CHECK(sc.pset.phases.size() == 4);
}

TEST_SUITE_END();
