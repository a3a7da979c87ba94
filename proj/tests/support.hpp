#pragma once

// Shared scenario builders and the seeded random-instance generator used by
// the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "ptnet/ptgraph.hpp"
#include "ptnet/scenario.hpp"

namespace ptnet::testing {

/// One signalized crossing: EB mainline 1->2->[2->3]->3->4 and a side street
/// 5->[5->6... ] wired through the same intersection. Small and hand-checkable.
inline Scenario mini_crossing(int horizon = 60) {
  Scenario sc;
  sc.net.horizon = horizon;
  sc.net.nodes = {1, 2, 3, 4, 5, 6, 7, 8};
  auto reg = [&](NodeId a, NodeId b, int fftt, int storage) {
    Link l;
    l.from = a, l.to = b, l.fftt = fftt;
    l.sat_rate = 1.0;
    l.storage = storage;
    sc.net.links.push_back(l);
  };
  auto ctl = [&](NodeId a, NodeId b) {
    Link l;
    l.from = a, l.to = b, l.fftt = 2;
    l.sat_rate = 1.0;
    l.storage = 2;
    l.intersection = 1;
    sc.net.links.push_back(l);
  };
  reg(1, 2, 2, kNoStorageLimit);  // mainline approach
  ctl(2, 3);                      // mainline crossing
  reg(3, 4, 2, kNoStorageLimit);  // mainline exit
  reg(5, 6, 2, kNoStorageLimit);  // side approach
  ctl(6, 7);                      // side crossing
  reg(7, 8, 2, kNoStorageLimit);  // side exit
  sc.net.rebuild_index();

  IntersectionPhases ix;
  ix.id = 1;
  LocalPhase main{1, 2, 20, 0, 1, {{1, Protection::Protected}}};
  LocalPhase side{2, 2, 20, 0, 1, {{4, Protection::Protected}}};
  ix.phases = {main, side};
  sc.doc.intersections = {ix};
  sc.doc.policy.mode = TransitionPolicy::Mode::FullyAdaptive;
  sc.net.links[1].served_by = {{1, Protection::Protected}};
  sc.net.links[4].served_by = {{2, Protection::Protected}};
  return sc;
}

inline VehiclePath path_of(const RoadNetwork& net, int vid, int t0,
                           std::vector<NodeId> nodes) {
  VehiclePath v;
  v.vid = vid;
  v.t0 = t0;
  v.nodes = std::move(nodes);
  for (size_t k = 0; k + 1 < v.nodes.size(); ++k)
    v.links.push_back(net.link_between(v.nodes[k], v.nodes[k + 1]));
  return v;
}

/// Seeded random tiny instance: 1-2 intersections in series on a mainline
/// with one side street each, 2 local phases per intersection,
/// integral gamma-scaled rates, and a handful of vehicles.
inline Scenario random_instance(unsigned seed, int max_vehicles = 6,
                                int horizon = 60) {
  std::mt19937 rng(seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  int n_ix = pick(1, 2);
  Scenario sc;
  sc.net.horizon = horizon;
  double sr = pick(1, 2);  // veh/s, integral so per-second caps are exact

  // Mainline: 1 -> 2 -> [ctl] -> 3 (-> 4 -> [ctl] -> 5) -> exit
  // Side street per intersection: 100+i -> [ctl] -> 200+i
  NodeId next_node = 1;
  std::vector<NodeId> mainline;
  mainline.push_back(next_node++);
  auto add_link = [&](NodeId a, NodeId b, int fftt, int storage, int ix) {
    Link l;
    l.from = a;
    l.to = b;
    l.fftt = fftt;
    l.sat_rate = sr;
    l.storage = storage;
    l.intersection = ix;
    sc.net.links.push_back(l);
  };
  std::vector<int> main_ctl, side_ctl;
  for (int i = 0; i < n_ix; ++i) {
    NodeId a = mainline.back();
    NodeId b = next_node++;
    add_link(a, b, pick(1, 3), pick(0, 1) ? kNoStorageLimit : pick(2, 6), -1);
    mainline.push_back(b);
    NodeId c = next_node++;
    main_ctl.push_back(static_cast<int>(sc.net.links.size()));
    add_link(b, c, pick(1, 2), kNoStorageLimit, i + 1);
    mainline.push_back(c);
  }
  NodeId exit_node = next_node++;
  add_link(mainline.back(), exit_node, pick(1, 3), kNoStorageLimit, -1);
  mainline.push_back(exit_node);

  std::vector<std::vector<NodeId>> side_paths;
  for (int i = 0; i < n_ix; ++i) {
    NodeId a = next_node++, b = next_node++, c = next_node++;
    add_link(a, b, pick(1, 2), kNoStorageLimit, -1);
    side_ctl.push_back(static_cast<int>(sc.net.links.size()));
    add_link(b, c, pick(1, 2), kNoStorageLimit, i + 1);
    NodeId d = next_node++;
    add_link(c, d, pick(1, 2), kNoStorageLimit, -1);
    side_paths.push_back({a, b, c, d});
  }
  for (NodeId n = 1; n < next_node; ++n) sc.net.nodes.push_back(n);
  sc.net.rebuild_index();

  for (int i = 0; i < n_ix; ++i) {
    IntersectionPhases ix;
    ix.id = i + 1;
    int gmin = pick(2, 4);
    int gmax = gmin + pick(1, 4);
    int allred = pick(0, 2);
    LocalPhase pm{1, gmin, gmax, 0, allred, {{main_ctl[i], Protection::Protected}}};
    LocalPhase ps{2, gmin, gmax, 0, allred, {{side_ctl[i], Protection::Protected}}};
    ix.phases = {pm, ps};
    sc.doc.intersections.push_back(ix);
    sc.net.links[main_ctl[i]].served_by = {{1, Protection::Protected}};
    sc.net.links[side_ctl[i]].served_by = {{2, Protection::Protected}};
  }
  sc.doc.policy.mode = TransitionPolicy::Mode::FullyAdaptive;

  // Departures no earlier than any phase can first turn green for them
  // (min green + clearance from the initial phase), so every priced entry
  // second is coverable by some plan.
  int n_veh = pick(1, max_vehicles);
  for (int v = 0; v < n_veh; ++v) {
    bool on_main = pick(0, 2) > 0;  // mainline-heavy
    std::vector<NodeId> nodes =
        on_main ? mainline : side_paths[pick(0, n_ix - 1)];
    sc.vehicles.push_back(path_of(sc.net, v + 1, pick(8, 18), nodes));
  }
  sc.rebuild_derived();
  return sc;
}

/// Random feasible plan: a seeded random walk through the policy graph.
inline SignalPlan random_walk_plan(const Scenario& sc, std::mt19937& rng) {
  SignalPlan plan;
  plan.horizon = sc.net.horizon;
  int s = sc.pgraph.state_for_phase(sc.initial_phase);
  int t = 0;
  std::uniform_int_distribution<int> coin(0, 3);
  while (coin(rng) != 0) {
    const auto& succ = sc.pgraph.succ[s];
    if (succ.empty()) break;
    int p = sc.pgraph.states[s].phase;
    const GeneralizedPhase& gp = sc.pset.phases[p];
    std::uniform_int_distribution<int> pick_s(0,
                                              static_cast<int>(succ.size()) - 1);
    std::uniform_int_distribution<int> pick_g(gp.gmin, gp.gmax);
    int s2 = succ[pick_s(rng)];
    int g = pick_g(rng);
    int h = t + g + gp.clearance();
    if (h > plan.horizon) break;
    PhaseTimeArc a;
    a.p = p;
    a.p_next = sc.pgraph.states[s2].phase;
    a.tau = t;
    a.green_end = t + g;
    a.yellow_end = a.green_end + gp.yellow;
    a.h = h;
    plan.arcs.push_back(a);
    s = s2;
    t = h;
  }
  if (t < plan.horizon) {
    PhaseTimeArc tail;
    tail.p = sc.pgraph.states[s].phase;
    tail.p_next = -1;
    tail.tau = t;
    tail.green_end = plan.horizon;
    tail.yellow_end = plan.horizon;
    tail.h = plan.horizon;
    tail.tail = true;
    plan.arcs.push_back(tail);
  }
  return plan;
}

}  // namespace ptnet::testing
