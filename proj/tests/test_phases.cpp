#include <doctest.h>

#include <set>

#include "ptnet/phases.hpp"
#include "support.hpp"

using namespace ptnet;

TEST_SUITE_BEGIN("phases");

namespace {

IntersectionPhases uniform_intersection(int id, int n_phases, int gmin = 5,
                                        int gmax = 50, int yellow = 4,
                                        int allred = 3) {
  IntersectionPhases ix;
  ix.id = id;
  for (int p = 1; p <= n_phases; ++p)
    ix.phases.push_back({p, gmin, gmax, yellow, allred, {}});
  return ix;
}

}  // namespace

TEST_CASE("two intersections with 2 local phases give 4 generalized phases") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 2), uniform_intersection(2, 2)});
  CHECK(ps.phases.size() == 4);
  // deterministic ordering by index vector
  CHECK(ps.phases[0].locals == std::vector<int>{1, 1});
  CHECK(ps.phases[1].locals == std::vector<int>{1, 2});
  CHECK(ps.phases[2].locals == std::vector<int>{2, 1});
  CHECK(ps.phases[3].locals == std::vector<int>{2, 2});
}

TEST_CASE("4x2x2x4 local phases give 64 generalized phases") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 4), uniform_intersection(2, 2),
       uniform_intersection(3, 2), uniform_intersection(5, 4)});
  CHECK(ps.phases.size() == 64);
}

TEST_CASE("attribute derivation: min gmin, min gmax, max yellow, max allred") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 1, 5, 50, 4, 3),
       uniform_intersection(2, 1, 5, 50, 4, 3)});
  REQUIRE(ps.phases.size() == 1);
  CHECK(ps.phases[0].gmin == 5);
  CHECK(ps.phases[0].gmax == 50);
  CHECK(ps.phases[0].yellow == 4);
  CHECK(ps.phases[0].allred == 3);

  PhaseSet mixed = generate_generalized_phases(
      {uniform_intersection(1, 1, 5, 30, 2, 1),
       uniform_intersection(2, 1, 8, 50, 4, 3)});
  REQUIRE(mixed.phases.size() == 1);
  CHECK(mixed.phases[0].gmin == 5);
  CHECK(mixed.phases[0].gmax == 30);
  CHECK(mixed.phases[0].yellow == 4);
  CHECK(mixed.phases[0].allred == 3);
}

TEST_CASE("products with derived gmin > gmax are dropped with a diagnostic") {
  // Mixed bounds that stay feasible under the min/min rule are kept.
  PhaseSet ok = generate_generalized_phases(
      {uniform_intersection(1, 1, 20, 25, 0, 0),
       uniform_intersection(2, 1, 5, 10, 0, 0)});
  CHECK(ok.phases.size() == 1);
  CHECK(ok.dropped.empty());

  // An ill-formed local (gmin > gmax) poisons its products; the combination
  // is dropped with a diagnostic instead of failing the build.
  IntersectionPhases d = uniform_intersection(1, 1, 20, 50, 0, 0);
  IntersectionPhases e = uniform_intersection(2, 1, 15, 12, 0, 0);
  PhaseSet bad = generate_generalized_phases({d, e});
  CHECK(bad.phases.empty());
  REQUIRE(bad.dropped.size() == 1);
  CHECK(bad.dropped[0].find("gmin") != std::string::npos);
}

TEST_CASE("mapping matrix: protected 1, other-phase 0, permissive delta") {
  Scenario sc = ptnet::testing::mini_crossing();
  sc.rebuild_derived();
  // link 1 (mainline crossing) is served protected by local 1
  int main_link = 1, side_link = 4;
  int phi_main = sc.pset.index_of({1});
  int phi_side = sc.pset.index_of({2});
  CHECK(sc.map.at(main_link, phi_main) == 1.0);
  CHECK(sc.map.at(main_link, phi_side) == 0.0);
  CHECK(sc.map.at(side_link, phi_side) == 1.0);

  // permissive service maps to delta
  sc.net.links[side_link].served_by = {{2, Protection::Permissive}};
  sc.doc.intersections[0].phases[1].served_links = {
      {side_link, Protection::Permissive}};
  sc.doc.delta = 0.5;
  sc.rebuild_derived();
  CHECK(sc.map.at(side_link, phi_side) == 0.5);
}

TEST_CASE("successors: fully adaptive counts (64 phases -> 4032 pairs)") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 4), uniform_intersection(2, 2),
       uniform_intersection(3, 2), uniform_intersection(5, 4)});
  TransitionPolicy full;
  full.mode = TransitionPolicy::Mode::FullyAdaptive;
  int total = 0;
  for (int p = 0; p < 64; ++p) {
    auto succ = successors(ps, p, full);
    CHECK(succ.size() == 63);
    for (int q : succ) CHECK(q != p);
    total += static_cast<int>(succ.size());
  }
  CHECK(total == 4032);
}

TEST_CASE("successors: semi-adaptive stay-or-advance (15 each, 960 total)") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 4), uniform_intersection(2, 2),
       uniform_intersection(3, 2), uniform_intersection(5, 4)});
  TransitionPolicy semi;
  semi.mode = TransitionPolicy::Mode::SemiAdaptive;
  semi.sequences = {{1, 2, 3, 4}, {1, 2}, {1, 2}, {1, 2, 3, 4}};
  TransitionPolicy full;
  full.mode = TransitionPolicy::Mode::FullyAdaptive;

  int total = 0;
  for (int p = 0; p < 64; ++p) {
    auto succ = successors(ps, p, semi);
    CHECK(succ.size() == 15);  // 2^4 stay/advance combinations minus identity
    total += static_cast<int>(succ.size());
    // subset of the fully adaptive successor set, never p itself
    auto fsucc = successors(ps, p, full);
    std::set<int> fset(fsucc.begin(), fsucc.end());
    for (int q : succ) {
      CHECK(fset.count(q) == 1);
      CHECK(q != p);
    }
  }
  CHECK(total == 960);
}

TEST_CASE("successors: single intersection, two phases, fully adaptive") {
  PhaseSet ps = generate_generalized_phases({uniform_intersection(1, 2)});
  TransitionPolicy full;
  full.mode = TransitionPolicy::Mode::FullyAdaptive;
  CHECK(successors(ps, 0, full) == std::vector<int>{1});
  CHECK(successors(ps, 1, full) == std::vector<int>{0});
}

TEST_CASE("phase groups: scripted blocks are atomic, frees restricted to entry") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 2), uniform_intersection(2, 2)});
  TransitionPolicy groups;
  groups.mode = TransitionPolicy::Mode::PhaseGroups;
  groups.blocks = {{{1, 1}, {30, 6}}, {{1, 2}, {6}}, {{2, 1}, {6}}};
  // phase <2,2> stays free
  PolicyGraph g = build_policy_graph(ps, groups);
  REQUIRE(g.n_states() == 4);  // 3 slots + 1 free
  // slot 0 -> slot 1 -> slot 2 -> {slot 0, free}
  CHECK(g.succ[0] == std::vector<int>{1});
  CHECK(g.succ[1] == std::vector<int>{2});
  CHECK(g.succ[2].size() == 2);
  CHECK(g.fixed_durations[0] == std::vector<int>{30, 6});
  CHECK(g.fixed_durations[1] == std::vector<int>{6});
  // the free phase may re-enter only at the block head
  int free_state = 3;
  CHECK(g.states[free_state].slot == -1);
  CHECK(g.succ[free_state] == std::vector<int>{0});
}

TEST_CASE("every generalized phase activates one local per intersection") {
  PhaseSet ps = generate_generalized_phases(
      {uniform_intersection(1, 3), uniform_intersection(2, 2)});
  CHECK(ps.phases.size() == 6);
  for (const auto& gp : ps.phases) {
    REQUIRE(gp.locals.size() == 2);
    CHECK(ps.intersections[0].find(gp.locals[0]) != nullptr);
    CHECK(ps.intersections[1].find(gp.locals[1]) != nullptr);
  }
}

TEST_SUITE_END();
