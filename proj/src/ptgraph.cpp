#include "ptnet/ptgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ptnet/parallel.hpp"

namespace ptnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Arc cost evaluation backed by per-link prefix sums of the multipliers, so
/// every caller (labeling scan, generic oracle, public arc_cost) sees
/// bit-identical values for the same arc.
struct ArcCostModel {
  int horizon = 0;
  const MappingMatrix* map = nullptr;
  WindowFactors f;
  std::vector<double> prefix;  // [ctrl][t], prefix[c][t] = sum_{u<t} lam(c,u)
  std::vector<double> sr;      // saturation rate per ctrl link

  ArcCostModel(const MultiplierField& lam, const MappingMatrix& m,
               const RoadNetwork& net, const WindowFactors& factors)
      : horizon(lam.horizon), map(&m), f(factors) {
    int nc = m.n_ctrl();
    prefix.assign(static_cast<size_t>(nc) * (horizon + 1), 0.0);
    sr.resize(nc);
    for (int c = 0; c < nc; ++c) {
      sr[c] = net.links[m.ctrl_links[c]].sat_rate;
      double acc = 0.0;
      for (int t = 0; t < horizon; ++t) {
        prefix[c * (horizon + 1) + t] = acc;
        acc += lam.at(c, t);
      }
      prefix[c * (horizon + 1) + horizon] = acc;
    }
  }

  double window_sum(int c, int a, int b) const {
    return prefix[c * (horizon + 1) + b] - prefix[c * (horizon + 1) + a];
  }

  double cost(const PhaseTimeArc& arc) const {
    double total = arc.tail ? 0.0 : 1.0;
    int nc = map->n_ctrl();
    for (int c = 0; c < nc; ++c) {
      double m_p = map->at_ctrl(c, arc.p);
      if (m_p == 0.0) continue;
      double credit = f.rho_g * m_p * window_sum(c, arc.tau, arc.green_end);
      if (!arc.tail) {
        double m_pn = map->at_ctrl(c, arc.p_next);
        double fy = f.rho_y * m_p * (1.0 - m_pn) + f.rho_g * m_p * m_pn;
        double far = f.rho_ar * m_p * (1.0 - m_pn) + f.rho_g * m_p * m_pn;
        credit += fy * window_sum(c, arc.green_end, arc.yellow_end);
        credit += far * window_sum(c, arc.yellow_end, arc.h);
      }
      total -= credit * sr[c];
    }
    return total;
  }
};

PhaseTimeArc make_transition_arc(const GeneralizedPhase& gp, int p, int p_next,
                                 int tau, int green) {
  PhaseTimeArc a;
  a.p = p;
  a.p_next = p_next;
  a.tau = tau;
  a.green_end = tau + green;
  a.yellow_end = a.green_end + gp.yellow;
  a.h = a.yellow_end + gp.allred;
  a.tail = false;
  return a;
}

PhaseTimeArc make_tail_arc(int p, int tau, int horizon) {
  PhaseTimeArc a;
  a.p = p;
  a.p_next = -1;
  a.tau = tau;
  a.green_end = horizon;
  a.yellow_end = horizon;
  a.h = horizon;
  a.tail = true;
  return a;
}

std::vector<int> state_durations(const PhaseSet& pset, const PolicyGraph& policy,
                                 int state) {
  const auto& fixed = policy.fixed_durations[state];
  if (!fixed.empty()) return fixed;
  const GeneralizedPhase& gp = pset.phases[policy.states[state].phase];
  std::vector<int> out;
  for (int g = gp.gmin; g <= gp.gmax; ++g) out.push_back(g);
  return out;
}

}  // namespace

int SignalPlan::transition_count() const {
  int n = 0;
  for (const auto& a : arcs)
    if (!a.tail) ++n;
  return n;
}

const PhaseTimeArc& SignalPlan::arc_at(int t) const {
  for (const auto& a : arcs)
    if (t >= a.tau && t < a.h) return a;
  throw std::out_of_range("no arc covers second " + std::to_string(t));
}

bool SignalPlan::chains() const {
  if (arcs.empty()) return false;
  if (arcs.front().tau != 0) return false;
  for (size_t k = 0; k + 1 < arcs.size(); ++k) {
    if (arcs[k].tail) return false;
    if (arcs[k].h != arcs[k + 1].tau) return false;
    if (arcs[k].p_next != arcs[k + 1].p) return false;
  }
  return arcs.back().h == horizon;
}

double arc_cost(const PhaseTimeArc& arc, const MultiplierField& lam,
                const MappingMatrix& map, const RoadNetwork& net,
                const WindowFactors& factors) {
  if (arc.h > lam.horizon || arc.tau < 0)
    throw std::out_of_range("arc outside horizon");
  ArcCostModel model(lam, map, net, factors);
  return model.cost(arc);
}

ShortestPlanResult shortest_plan(const PhaseSet& pset, const PolicyGraph& policy,
                                 const MappingMatrix& map, const RoadNetwork& net,
                                 const MultiplierField& lam,
                                 const WindowFactors& factors, int horizon,
                                 int initial_phase, MaxGreenMode max_green,
                                 WorkerPool* pool) {
  ShortestPlanResult out;
  if (pset.phases.empty()) {
    out.error = "empty phase set";
    return out;
  }
  if (horizon <= 0) {
    out.error = "horizon must be positive";
    return out;
  }
  int s0 = policy.state_for_phase(initial_phase);
  if (s0 < 0) {
    out.error = "initial phase unreachable under the policy";
    return out;
  }
  const int S = policy.n_states();
  const int T = horizon;
  const int M = static_cast<int>(pset.intersections.size());
  ArcCostModel model(lam, map, net, factors);

  // Per-state successor/duration tables and the flat arc-cost table layout.
  std::vector<std::vector<int>> durs(S);
  std::vector<size_t> base(S + 1, 0);
  for (int s = 0; s < S; ++s) {
    durs[s] = state_durations(pset, policy, s);
    base[s + 1] = base[s] + policy.succ[s].size() * durs[s].size();
  }
  const size_t arcs_per_tau = base[S];
  std::vector<double> cost_table(arcs_per_tau * T, 0.0);
  auto fill_tau = [&](size_t tau) {
    for (int s = 0; s < S; ++s) {
      int p = policy.states[s].phase;
      const GeneralizedPhase& gp = pset.phases[p];
      size_t slot = tau * arcs_per_tau + base[s];
      for (size_t j = 0; j < policy.succ[s].size(); ++j) {
        int pn = policy.states[policy.succ[s][j]].phase;
        for (int g : durs[s]) {
          int h = static_cast<int>(tau) + g + gp.clearance();
          cost_table[slot++] =
              h <= T ? model.cost(make_transition_arc(gp, p, pn, tau, g)) : 0.0;
        }
      }
    }
  };
  if (pool) {
    pool->parallel_for(static_cast<size_t>(T), fill_tau);
  } else {
    for (int tau = 0; tau < T; ++tau) fill_tau(tau);
  }

  // Labels. R carries each intersection's running green duration.
  std::vector<double> lc(static_cast<size_t>(S) * (T + 1), kInf);
  std::vector<std::pair<int, int>> pred(static_cast<size_t>(S) * (T + 1),
                                        {-1, -1});
  std::vector<int> run;  // [state][t][ix]
  const bool enforce = max_green == MaxGreenMode::Enforce;
  if (enforce) run.assign(static_cast<size_t>(S) * (T + 1) * M, 0);
  auto idx = [T](int s, int t) { return static_cast<size_t>(s) * (T + 1) + t; };

  // Local gmax per (intersection position, local id present in phase p).
  auto local_gmax = [&](int ix, int local_id) {
    return pset.intersections[ix].find(local_id)->gmax;
  };

  lc[idx(s0, 0)] = 0.0;
  std::vector<int> next_run(M);
  for (int tau = 0; tau < T; ++tau) {
    for (int s = 0; s < S; ++s) {
      double here = lc[idx(s, tau)];
      if (here == kInf) continue;
      int p = policy.states[s].phase;
      const GeneralizedPhase& gp = pset.phases[p];
      size_t slot = tau * arcs_per_tau + base[s];
      for (size_t j = 0; j < policy.succ[s].size(); ++j) {
        int s2 = policy.succ[s][j];
        int pn = policy.states[s2].phase;
        const auto& pn_locals = pset.phases[pn].locals;
        const auto& p_locals = gp.locals;
        for (int g : durs[s]) {
          double c = cost_table[slot++];
          int h = tau + g + gp.clearance();
          if (h > T) continue;
          if (lc[idx(s2, h)] > here + c) {
            if (enforce) {
              bool ok = true;
              for (int ix = 0; ix < M; ++ix) {
                if (p_locals[ix] == pn_locals[ix]) {
                  next_run[ix] = run[idx(s, tau) * M + ix] + g;
                  if (next_run[ix] > local_gmax(ix, pn_locals[ix])) ok = false;
                } else {
                  next_run[ix] = 0;
                }
              }
              if (!ok) continue;
              for (int ix = 0; ix < M; ++ix)
                run[idx(s2, h) * M + ix] = next_run[ix];
            }
            lc[idx(s2, h)] = here + c;
            pred[idx(s2, h)] = {s, tau};
          }
        }
      }
    }
  }

  // Close every label with a tail arc (green rest to the horizon). Mid-block
  // labels may only terminate when the horizon truncates the group.
  double best = kInf;
  int best_s = -1, best_t = -1;
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      double c = lc[idx(s, t)];
      if (c == kInf) continue;
      if (t < T && !policy.tail_allowed(s, t, T)) continue;
      if (t < T) c += model.cost(make_tail_arc(policy.states[s].phase, t, T));
      if (c < best) {
        best = c;
        best_s = s;
        best_t = t;
      }
    }
  }
  if (best_s < 0) {
    out.error = "no feasible plan within the horizon";
    return out;
  }

  // Reconstruct.
  std::vector<std::pair<int, int>> chain;  // (state, start time)
  for (int s = best_s, t = best_t; s >= 0;) {
    chain.push_back({s, t});
    auto [ps, pt] = pred[idx(s, t)];
    s = ps;
    t = pt;
  }
  std::reverse(chain.begin(), chain.end());
  out.plan.horizon = T;
  for (size_t k = 0; k + 1 < chain.size(); ++k) {
    int p = policy.states[chain[k].first].phase;
    int pn = policy.states[chain[k + 1].first].phase;
    const GeneralizedPhase& gp = pset.phases[p];
    int green = chain[k + 1].second - chain[k].second - gp.clearance();
    out.plan.arcs.push_back(
        make_transition_arc(gp, p, pn, chain[k].second, green));
  }
  if (best_t < T)
    out.plan.arcs.push_back(
        make_tail_arc(policy.states[best_s].phase, best_t, T));
  out.feasible = true;
  out.cost = best;
  return out;
}

GammaField plan_to_gamma(const SignalPlan& plan, const MappingMatrix& map,
                         const RoadNetwork& net, const WindowFactors& factors) {
  (void)net;
  if (!plan.chains())
    throw std::invalid_argument("plan has a gap or overlap in coverage");
  GammaField gf;
  gf.horizon = plan.horizon;
  gf.ctrl_index = map.ctrl_index;
  gf.g.assign(static_cast<size_t>(map.n_ctrl()) * plan.horizon, 0.0);
  for (const auto& arc : plan.arcs) {
    for (int c = 0; c < map.n_ctrl(); ++c) {
      double m_p = map.at_ctrl(c, arc.p);
      double m_pn = arc.tail ? 0.0 : map.at_ctrl(c, arc.p_next);
      for (int t = arc.tau; t < arc.h && t < plan.horizon; ++t) {
        Window w = t < arc.green_end   ? Window::Green
                   : t < arc.yellow_end ? Window::Yellow
                                        : Window::AllRed;
        gf.g[c * plan.horizon + t] = window_factor(w, m_p, m_pn, factors);
      }
    }
  }
  return gf;
}

std::vector<PhaseTimeArc> enumerate_arcs(const PhaseSet& pset,
                                         const PolicyGraph& policy, int horizon,
                                         bool include_tails) {
  std::vector<PhaseTimeArc> arcs;
  for (int tau = 0; tau < horizon; ++tau) {
    for (int s = 0; s < policy.n_states(); ++s) {
      int p = policy.states[s].phase;
      const GeneralizedPhase& gp = pset.phases[p];
      for (int s2 : policy.succ[s]) {
        int pn = policy.states[s2].phase;
        for (int g : state_durations(pset, policy, s)) {
          int h = tau + g + gp.clearance();
          if (h <= horizon)
            arcs.push_back(make_transition_arc(gp, p, pn, tau, g));
        }
      }
      if (include_tails && policy.tail_allowed(s, tau, horizon))
        arcs.push_back(make_tail_arc(p, tau, horizon));
    }
  }
  return arcs;
}

ShortestPlanResult generic_shortest_plan(const PhaseSet& pset,
                                         const PolicyGraph& policy,
                                         const MappingMatrix& map,
                                         const RoadNetwork& net,
                                         const MultiplierField& lam,
                                         const WindowFactors& factors,
                                         int horizon, int initial_phase) {
  ShortestPlanResult out;
  int s0 = policy.state_for_phase(initial_phase);
  if (s0 < 0 || horizon <= 0) {
    out.error = "no source vertex";
    return out;
  }
  ArcCostModel model(lam, map, net, factors);

  // Vertex ids: (state, t) -> s*(H+1)+t, plus one sink.
  const int S = policy.n_states();
  const int T = horizon;
  const int sink = S * (T + 1);
  struct Edge {
    int from, to;
    double cost;
    PhaseTimeArc arc;
  };
  std::vector<Edge> edges;
  for (int tau = 0; tau < T; ++tau) {
    for (int s = 0; s < S; ++s) {
      int p = policy.states[s].phase;
      const GeneralizedPhase& gp = pset.phases[p];
      for (int s2 : policy.succ[s]) {
        for (int g : state_durations(pset, policy, s)) {
          int h = tau + g + gp.clearance();
          if (h > T) continue;
          PhaseTimeArc a =
              make_transition_arc(gp, p, policy.states[s2].phase, tau, g);
          edges.push_back({s * (T + 1) + tau, s2 * (T + 1) + h, model.cost(a), a});
        }
      }
      if (policy.tail_allowed(s, tau, T)) {
        PhaseTimeArc tail = make_tail_arc(p, tau, T);
        edges.push_back({s * (T + 1) + tau, sink, model.cost(tail), tail});
      }
    }
  }
  // Zero-cost closure for paths arriving exactly at the horizon.
  for (int s = 0; s < S; ++s) {
    PhaseTimeArc tail = make_tail_arc(policy.states[s].phase, T, T);
    edges.push_back({s * (T + 1) + T, sink, 0.0, tail});
  }

  std::vector<double> dist(sink + 1, kInf);
  std::vector<int> pred_edge(sink + 1, -1);
  dist[s0 * (T + 1)] = 0.0;
  bool changed = true;
  for (int pass = 0; pass <= sink && changed; ++pass) {
    changed = false;
    for (size_t e = 0; e < edges.size(); ++e) {
      const Edge& ed = edges[e];
      if (dist[ed.from] == kInf) continue;
      double cand = dist[ed.from] + ed.cost;
      if (cand < dist[ed.to]) {
        dist[ed.to] = cand;
        pred_edge[ed.to] = static_cast<int>(e);
        changed = true;
      }
    }
  }
  if (dist[sink] == kInf) {
    out.error = "sink unreachable";
    return out;
  }
  out.feasible = true;
  out.cost = dist[sink];
  out.plan.horizon = T;
  std::vector<PhaseTimeArc> rev;
  for (int v = sink; pred_edge[v] >= 0;) {
    const Edge& ed = edges[pred_edge[v]];
    if (!(ed.arc.tail && ed.arc.tau == ed.arc.h)) rev.push_back(ed.arc);
    v = ed.from;
  }
  std::reverse(rev.begin(), rev.end());
  out.plan.arcs = std::move(rev);
  return out;
}

}  // namespace ptnet
