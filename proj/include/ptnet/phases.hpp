#pragma once

#include <string>
#include <vector>

#include "ptnet/network.hpp"

namespace ptnet {

struct LocalPhase {
  int id = 0;  // n_i, unique within its intersection
  int gmin = 1;
  int gmax = 1;
  int yellow = 0;
  int allred = 0;
  // (link id, protection) pairs this local phase serves.
  std::vector<std::pair<int, Protection>> served_links;
};

struct IntersectionPhases {
  int id = 0;
  std::vector<LocalPhase> phases;

  const LocalPhase* find(int local_id) const;
};

/// One local phase per intersection; attributes derived by the
/// min-gmin / min-gmax / max-yellow / max-allred rule.
struct GeneralizedPhase {
  std::vector<int> locals;  // local phase id per intersection, in order
  int gmin = 0;
  int gmax = 0;
  int yellow = 0;
  int allred = 0;

  int clearance() const { return yellow + allred; }
};

struct PhaseSet {
  std::vector<IntersectionPhases> intersections;
  std::vector<GeneralizedPhase> phases;  // ordered by index vector
  std::vector<std::string> dropped;      // diagnostics for gmin>gmax products

  int index_of(const std::vector<int>& locals) const;  // -1 if absent
  std::string label(int phase) const;                  // "<1,2>"
};

/// Product of the local phase lists (one pass per intersection in order).
/// Combinations whose derived gmin exceeds gmax are dropped with a diagnostic.
PhaseSet generate_generalized_phases(
    const std::vector<IntersectionPhases>& locals);

/// m(link, phase) in {0, delta, 1} for every controlled link.
struct MappingMatrix {
  std::vector<int> ctrl_links;   // link ids, ascending
  std::vector<int> ctrl_index;   // link id -> position in ctrl_links, or -1
  int n_phases = 0;
  double delta = 0.5;
  std::vector<double> m;  // [ctrl][phase]

  double at(int link_id, int phase) const {
    int c = ctrl_index[link_id];
    return c < 0 ? 0.0 : m[c * n_phases + phase];
  }
  double at_ctrl(int ctrl, int phase) const { return m[ctrl * n_phases + phase]; }
  int n_ctrl() const { return static_cast<int>(ctrl_links.size()); }
};

MappingMatrix build_mapping(const PhaseSet& pset, const RoadNetwork& net,
                            double delta);

struct PhaseGroupBlock {
  std::vector<int> phase_locals;  // index vector of the scripted phase
  std::vector<int> durations;     // allowed green durations, seconds
};

struct TransitionPolicy {
  enum class Mode { FullyAdaptive, SemiAdaptive, PhaseGroups };
  Mode mode = Mode::FullyAdaptive;
  // SemiAdaptive: per intersection (in order), local phase ids in cyclic
  // sequence; every local phase appears exactly once.
  std::vector<std::vector<int>> sequences;
  // PhaseGroups: ordered scripted blocks; phases absent from every block are
  // free.
  std::vector<PhaseGroupBlock> blocks;
};

/// Feasible next phases of p under the policy; never contains p. For
/// PhaseGroups the phase is resolved to its first block slot (blocks are
/// atomic), free phases follow the FullyAdaptive rule restricted to block
/// entry points.
std::vector<int> successors(const PhaseSet& pset, int phase,
                            const TransitionPolicy& policy);

/// Search-state expansion of a policy: one state per free phase plus one per
/// block slot, so a phase scripted twice in a group is tracked by position.
struct PolicyGraph {
  struct State {
    int phase = 0;
    int slot = -1;  // block slot index, -1 for free states
  };
  std::vector<State> states;
  std::vector<std::vector<int>> succ;            // state -> successor states
  std::vector<std::vector<int>> fixed_durations;  // per state; empty = [gmin,gmax]
  // Minimal time to finish the block suffix from each slot state (blocks are
  // atomic); 0 for free states.
  std::vector<int> min_completion;

  int state_for_phase(int phase) const;  // first matching state, -1 if none
  int n_states() const { return static_cast<int>(states.size()); }
  /// A plan may green-rest to the horizon from this state at time t only if
  /// the state is free or its block cannot complete within the horizon.
  bool tail_allowed(int state, int t, int horizon) const {
    return states[state].slot < 0 || t + min_completion[state] > horizon;
  }
};

PolicyGraph build_policy_graph(const PhaseSet& pset,
                               const TransitionPolicy& policy);

}  // namespace ptnet
