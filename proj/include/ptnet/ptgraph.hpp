#pragma once

#include <vector>

#include "ptnet/phases.hpp"

namespace ptnet {

class WorkerPool;

/// Capacity discount factors per signal state. rho_g and rho_ar are pinned by
/// the model (1 and 0); rho_y is configurable in (0,1).
struct WindowFactors {
  double rho_g = 1.0;
  double rho_y = 0.5;
  double rho_ar = 0.0;
};

/// One edge of the phase-time network: phase p turns green at tau and hands
/// over to p_next at h. The green window is [tau, h-y-ar), yellow
/// [h-y-ar, h-ar), all-red [h-ar, h). A tail arc green-rests p to the horizon
/// with no transition.
struct PhaseTimeArc {
  int p = 0;
  int p_next = -1;  // -1 on tail arcs
  int tau = 0;
  int h = 0;
  int green_end = 0;   // tau + green duration
  int yellow_end = 0;  // green_end + yellow
  bool tail = false;
};

enum class Window { Green, Yellow, AllRed };

/// Effective capacity factor of a controlled link during one arc second,
/// including the shared-link continuation: a link served by both p and p'
/// keeps its green factor through the clearance.
inline double window_factor(Window w, double m_p, double m_pn,
                            const WindowFactors& f) {
  switch (w) {
    case Window::Green:
      return f.rho_g * m_p;
    case Window::Yellow:
      return f.rho_y * m_p * (1.0 - m_pn) + f.rho_g * m_p * m_pn;
    case Window::AllRed:
      return f.rho_ar * m_p * (1.0 - m_pn) + f.rho_g * m_p * m_pn;
  }
  return 0.0;
}

/// Source-to-sink path through the phase-time network; arcs chain and their
/// spans partition [0, H).
struct SignalPlan {
  int horizon = 0;
  std::vector<PhaseTimeArc> arcs;  // last arc is the tail

  int transition_count() const;
  /// Arc covering second t (arcs partition [0,H)).
  const PhaseTimeArc& arc_at(int t) const;
  int phase_at(int t) const { return arc_at(t).p; }
  bool chains() const;
};

/// Lagrangian prices on controlled links over time.
struct MultiplierField {
  int n_ctrl = 0;
  int horizon = 0;
  std::vector<double> lam;  // [ctrl][t]

  MultiplierField() = default;
  MultiplierField(int n, int h) : n_ctrl(n), horizon(h), lam(n * h, 0.0) {}
  double& at(int c, int t) { return lam[c * horizon + t]; }
  double at(int c, int t) const { return lam[c * horizon + t]; }
};

/// Cost of one phase-time arc: a unit transition penalty minus the priced
/// capacity the arc opens on controlled links (tail arcs carry no penalty).
double arc_cost(const PhaseTimeArc& arc, const MultiplierField& lam,
                const MappingMatrix& map, const RoadNetwork& net,
                const WindowFactors& factors);

enum class MaxGreenMode { Enforce, Ignore };

struct ShortestPlanResult {
  bool feasible = false;
  SignalPlan plan;
  double cost = 0.0;  // L1^2 value of the plan
  std::string error;
};

/// Forward labeling scan over the phase-time network (tau = 0..H-1). With
/// MaxGreenMode::Enforce each label carries the running green duration of
/// every local phase and is kept only while each stays within its local gmax.
/// Arc costs are evaluated through the given pool when provided.
ShortestPlanResult shortest_plan(const PhaseSet& pset, const PolicyGraph& policy,
                                 const MappingMatrix& map, const RoadNetwork& net,
                                 const MultiplierField& lam,
                                 const WindowFactors& factors, int horizon,
                                 int initial_phase, MaxGreenMode max_green,
                                 WorkerPool* pool = nullptr);

/// Open/close field gamma(link, t). Regular links are always 1; controlled
/// links follow the covering arc's window factors.
struct GammaField {
  int horizon = 0;
  std::vector<int> ctrl_index;  // link id -> row, -1 for regular
  std::vector<double> g;        // [ctrl][t]

  double at(int link_id, int t) const {
    int c = ctrl_index[link_id];
    return c < 0 ? 1.0 : g[c * horizon + t];
  }
};

/// Expand a plan into gamma. Throws std::invalid_argument on coverage gaps or
/// overlaps.
GammaField plan_to_gamma(const SignalPlan& plan, const MappingMatrix& map,
                         const RoadNetwork& net, const WindowFactors& factors);

/// Fully materialized arc set of the phase-time network (for oracle checks
/// and the MILP export; the labeling scan itself never materializes).
std::vector<PhaseTimeArc> enumerate_arcs(const PhaseSet& pset,
                                         const PolicyGraph& policy, int horizon,
                                         bool include_tails);

/// Independent generic shortest-path oracle (Bellman-Ford over the
/// materialized graph). Used to cross-check the labeling scan.
ShortestPlanResult generic_shortest_plan(const PhaseSet& pset,
                                         const PolicyGraph& policy,
                                         const MappingMatrix& map,
                                         const RoadNetwork& net,
                                         const MultiplierField& lam,
                                         const WindowFactors& factors,
                                         int horizon, int initial_phase);

}  // namespace ptnet
