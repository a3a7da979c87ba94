#include "ptnet/lagrangian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "ptnet/parallel.hpp"
#include "ptnet/scenario.hpp"

namespace ptnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

MultiplierField subgradient(const TrajectorySet& customized,
                            const SignalPlan& plan, const MappingMatrix& map,
                            const RoadNetwork& net,
                            const WindowFactors& factors, WorkerPool* pool) {
  const int H = plan.horizon;
  const int nc = map.n_ctrl();
  MultiplierField grad(nc, H);

  // Controlled-link entry counts of the customized loading.
  std::vector<int> entries(static_cast<size_t>(nc) * H, 0);
  for (const auto& tv : customized.vehicles) {
    for (const auto& leg : tv.legs) {
      int c = map.ctrl_index[leg.link];
      if (c >= 0 && leg.entry < H) entries[c * H + leg.entry]++;
    }
  }

  auto cell = [&](size_t i) {
    int c = static_cast<int>(i) / H;
    int t = static_cast<int>(i) % H;
    const PhaseTimeArc& arc = plan.arc_at(t);
    double m_p = map.at_ctrl(c, arc.p);
    double m_pn = arc.tail ? 0.0 : map.at_ctrl(c, arc.p_next);
    Window w = t < arc.green_end   ? Window::Green
               : t < arc.yellow_end ? Window::Yellow
                                    : Window::AllRed;
    double capacity = window_factor(w, m_p, m_pn, factors) *
                      net.links[map.ctrl_links[c]].sat_rate;
    grad.lam[i] = entries[i] - capacity;
  };
  // Fanning out pays only for fields big enough to beat the wakeup cost.
  if (pool && grad.lam.size() >= 16384)
    pool->parallel_for(grad.lam.size(), cell);
  else
    for (size_t i = 0; i < grad.lam.size(); ++i) cell(i);
  return grad;
}

MultiplierField update_multipliers(const MultiplierField& lam,
                                   const MultiplierField& grad, int n,
                                   UpdateRule rule, WorkerPool* pool) {
  MultiplierField out = lam;
  const double theta = 1.0 / (n + 1);
  auto cell = [&](size_t i) {
    if (rule == UpdateRule::Monotone)
      out.lam[i] = lam.lam[i] + std::max(0.0, theta * grad.lam[i]);
    else
      out.lam[i] = std::max(0.0, lam.lam[i] + theta * grad.lam[i]);
  };
  if (pool && out.lam.size() >= 16384)
    pool->parallel_for(out.lam.size(), cell);
  else
    for (size_t i = 0; i < out.lam.size(); ++i) cell(i);
  return out;
}

namespace {

// Feasibility completion of a signal plan: green rest lasts only while no
// competing demand waits. The rest is cut and handed over to a successor
// serving stranded queues; candidate cut times are "when the links the
// target drops are last used" and "when the target's queues formed". A small
// deterministic search over those candidates keeps the best feasible result.
struct Completion {
  const Scenario& sc;
  int budget;  // loading runs
  double best_obj = std::numeric_limits<double>::infinity();
  SignalPlan best;

  void search(SignalPlan plan) {
    if (budget-- <= 0) return;
    LoadingResult run =
        standard_dnl(sc.net, sc.vehicles, sc.aux, plan, sc.map, sc.factors);
    if (run.feasible) {
      MoeReport moe =
          compute_moe(run.traj, plan, sc.net, sc.map, sc.vehicles, sc.aux);
      if (moe.objective < best_obj) {
        best_obj = moe.objective;
        best = plan;
      }
      return;
    }
    const PhaseTimeArc tail = plan.arcs.back();
    if (!tail.tail) return;  // ends exactly at the horizon
    int cur = tail.p;
    int cur_state = sc.pgraph.state_for_phase(cur);
    if (cur_state < 0 || sc.pgraph.succ[cur_state].empty()) return;
    const GeneralizedPhase& gp = sc.pset.phases[cur];

    // Stranded queues: (link each stuck vehicle waits to enter, since when).
    std::map<int, int> slot;
    for (size_t v = 0; v < sc.vehicles.size(); ++v)
      slot[sc.vehicles[v].vid] = static_cast<int>(v);
    std::map<int, std::pair<int, int>> queue;  // link -> (count, min ready)
    for (int vid : run.stuck) {
      const auto& tv = run.traj.vehicles[slot.at(vid)];
      const VehiclePath& veh = sc.vehicles[slot.at(vid)];
      size_t k = tv.legs.size();
      if (k >= veh.links.size()) continue;
      int ready = k == 0 ? veh.t0
                         : tv.legs.back().entry +
                               sc.net.links[tv.legs.back().link].fftt;
      auto it = queue.find(veh.links[k]);
      if (it == queue.end())
        queue[veh.links[k]] = {1, ready};
      else {
        it->second.first++;
        it->second.second = std::min(it->second.second, ready);
      }
    }
    if (queue.empty()) return;

    // Rank successors by how many stranded vehicles they serve.
    std::vector<std::pair<int, int>> targets;  // (-served, phase)
    for (int s2 : sc.pgraph.succ[cur_state]) {
      int p2 = sc.pgraph.states[s2].phase;
      int served = 0;
      for (auto& [lid, q] : queue)
        if (sc.map.at(lid, p2) > 0.0) served += q.first;
      targets.push_back({-served, p2});
    }
    std::sort(targets.begin(), targets.end());
    if (targets.empty() || -targets[0].first == 0) return;
    targets.resize(std::min<size_t>(3, targets.size()));

    const int H = sc.net.horizon;
    for (auto& [neg_served, p2] : targets) {
      if (neg_served == 0) continue;
      // Cut A: after the last use of every link this handover drops.
      int drop_need = tail.tau + gp.gmin - 1;
      for (int c = 0; c < sc.map.n_ctrl(); ++c) {
        int lid = sc.map.ctrl_links[c];
        if (sc.map.at(lid, cur) > 0.0 && sc.map.at(lid, p2) == 0.0)
          for (const auto& tv : run.traj.vehicles)
            for (const auto& leg : tv.legs)
              if (leg.link == lid && leg.entry >= tail.tau)
                drop_need = std::max(drop_need, leg.entry);
      }
      // Cut B: as soon as the target's earliest queue formed.
      int early = tail.tau + gp.gmin;
      for (auto& [lid, q] : queue)
        if (sc.map.at(lid, p2) > 0.0)
          early = std::max(early, std::min(q.second, drop_need + 1));
      std::vector<int> cuts = {drop_need + 1, early};
      if (cuts[0] == cuts[1]) cuts.pop_back();
      for (int cut : cuts) {
        int green_end =
            std::min(std::max(cut, tail.tau + gp.gmin), tail.tau + gp.gmax);
        int h = green_end + gp.clearance();
        if (h + 1 >= H) continue;
        SignalPlan next = plan;
        PhaseTimeArc arc;
        arc.p = cur;
        arc.p_next = p2;
        arc.tau = tail.tau;
        arc.green_end = green_end;
        arc.yellow_end = green_end + gp.yellow;
        arc.h = h;
        next.arcs.back() = arc;
        PhaseTimeArc rest;
        rest.p = p2;
        rest.p_next = -1;
        rest.tau = h;
        rest.green_end = H;
        rest.yellow_end = H;
        rest.h = H;
        rest.tail = true;
        next.arcs.push_back(rest);
        search(std::move(next));
        if (budget <= 0) return;
      }
    }
  }
};

SignalPlan complete_plan(const Scenario& sc, const SignalPlan& raw) {
  Completion c{sc, 300, std::numeric_limits<double>::infinity(), {}};
  c.search(raw);
  return std::isfinite(c.best_obj) ? c.best : raw;
}

double plan_objective(const Scenario& sc, const SignalPlan& plan) {
  LoadingResult run =
      standard_dnl(sc.net, sc.vehicles, sc.aux, plan, sc.map, sc.factors);
  if (!run.feasible) return std::numeric_limits<double>::infinity();
  return compute_moe(run.traj, plan, sc.net, sc.map, sc.vehicles, sc.aux)
      .objective;
}

// Shift greens k..j-1 of the plan by delta, growing green k and (when j is a
// transition) shrinking green j to keep everything afterwards in place.
// Returns false when a bound or the horizon is violated.
bool shift_greens(const Scenario& sc, SignalPlan& plan, size_t k, size_t j,
                  int delta) {
  const GeneralizedPhase& gpk = sc.pset.phases[plan.arcs[k].p];
  int gk = plan.arcs[k].green_end - plan.arcs[k].tau + delta;
  if (gk < gpk.gmin || gk > gpk.gmax) return false;
  if (j < plan.arcs.size() && !plan.arcs[j].tail) {
    const GeneralizedPhase& gpj = sc.pset.phases[plan.arcs[j].p];
    int gj = plan.arcs[j].green_end - plan.arcs[j].tau - delta;
    if (gj < gpj.gmin || gj > gpj.gmax) return false;
  }
  plan.arcs[k].green_end += delta;
  plan.arcs[k].yellow_end += delta;
  plan.arcs[k].h += delta;
  for (size_t i = k + 1; i < j && i < plan.arcs.size(); ++i) {
    plan.arcs[i].tau += delta;
    if (!plan.arcs[i].tail) {
      plan.arcs[i].green_end += delta;
      plan.arcs[i].yellow_end += delta;
      plan.arcs[i].h += delta;
    }
  }
  if (j < plan.arcs.size()) plan.arcs[j].tau += delta;
  for (const auto& a : plan.arcs)
    if (a.h > sc.net.horizon || a.tau >= sc.net.horizon ||
        a.tau >= a.h)
      return false;
  return plan.arcs.back().h == sc.net.horizon;
}

// Same phase sequence with every green compressed to its minimum; a second
// descent start for the polish below.
SignalPlan gmin_retime(const Scenario& sc, const SignalPlan& plan) {
  SignalPlan out;
  out.horizon = plan.horizon;
  int t = 0;
  for (const auto& a : plan.arcs) {
    if (a.tail) break;
    const GeneralizedPhase& gp = sc.pset.phases[a.p];
    PhaseTimeArc arc = a;
    arc.tau = t;
    arc.green_end = t + gp.gmin;
    arc.yellow_end = arc.green_end + gp.yellow;
    arc.h = arc.yellow_end + gp.allred;
    out.arcs.push_back(arc);
    t = arc.h;
  }
  if (t < out.horizon) {
    PhaseTimeArc tail;
    tail.p = out.arcs.empty() ? plan.arcs.back().p : out.arcs.back().p_next;
    tail.p_next = -1;
    tail.tau = t;
    tail.green_end = out.horizon;
    tail.yellow_end = out.horizon;
    tail.h = out.horizon;
    tail.tail = true;
    out.arcs.push_back(tail);
  }
  return out;
}

// First-improvement descent over the green durations of a feasible plan:
// stretch or shrink one green (shifting the rest of the plan), or trade
// duration between two greens leaving the remainder untouched.
SignalPlan polish_plan(const Scenario& sc, const SignalPlan& incumbent,
                       double& objective, int budget = 800) {
  SignalPlan plan = incumbent;
  const size_t n = plan.arcs.size();
  bool improved = true;
  while (improved && budget > 0) {
    improved = false;
    for (size_t k = 0; k + 1 < n && !improved; ++k) {
      for (size_t j = k + 1; j < n && !improved; ++j) {
        // j == n-1 with a tail means a pure suffix shift.
        for (int delta : {-2, -1, 1, 2}) {
          SignalPlan cand = plan;
          if (!shift_greens(sc, cand, k, j, delta)) continue;
          if (--budget <= 0) break;
          double obj = plan_objective(sc, cand);
          if (obj < objective) {
            objective = obj;
            plan = std::move(cand);
            improved = true;
            break;
          }
        }
      }
    }
  }
  return plan;
}

}  // namespace

SolveResult solve(const Scenario& sc, const SolveConfig& cfg) {
  SolveResult res;
  WorkerPool pool(cfg.workers);
  MultiplierField lam(sc.map.n_ctrl(), sc.net.horizon);
  res.best_ub = kInf;
  res.max_lb = -kInf;
  std::set<std::string> polished;  // one polish per distinct feasible plan
  auto signature = [](const SignalPlan& plan) {
    std::string s;
    for (const auto& a : plan.arcs)
      s += std::to_string(a.p) + ":" + std::to_string(a.tau) + ":" +
           std::to_string(a.h) + ";";
    return s;
  };

  for (int n = 0; n < cfg.max_iter; ++n) {
    IterationRecord rec;
    rec.n = n;
    rec.theta = 1.0 / (n + 1);
    double t0 = now_ms();

    // Task 1: vehicle subproblem (customized DNL under current prices).
    LoadingResult lower = customized_dnl(sc.net, sc.vehicles, sc.aux, lam, sc.map);
    rec.l11 = l11_value(lower, sc.vehicles, sc.aux);

    // Task 2: signal subproblem (least-cost path in the phase-time network).
    ShortestPlanResult spr =
        shortest_plan(sc.pset, sc.pgraph, sc.map, sc.net, lam, sc.factors,
                      sc.net.horizon, sc.initial_phase, cfg.max_green, &pool);
    rec.l12 = spr.feasible ? spr.cost : kInf;
    rec.lb = rec.l11 + rec.l12;
    if (std::isfinite(rec.lb)) res.max_lb = std::max(res.max_lb, rec.lb);
    if (n == 0) res.lb_at_lambda0 = rec.lb;

    // Task 4 numbering per the iteration's parallel tasks: feasible loading
    // under the translated strategy gives the upper bound. Translation keeps
    // the scheduled transitions and lets the green rest yield to waiting
    // demand (scripted phase groups already cycle on their own).
    SignalPlan ub_plan =
        sc.doc.policy.mode == TransitionPolicy::Mode::PhaseGroups
            ? spr.plan
            : complete_plan(sc, spr.plan);
    LoadingResult upper = standard_dnl(sc.net, sc.vehicles, sc.aux, ub_plan,
                                       sc.map, sc.factors);
    if (upper.feasible) {
      MoeReport moe = compute_moe(upper.traj, ub_plan, sc.net, sc.map,
                                  sc.vehicles, sc.aux);
      rec.ub = moe.objective;
      // Polish each distinct feasible plan's green durations once; the dual
      // oscillates over a handful of attractors, each a separate basin.
      bool fresh = polished.insert(signature(ub_plan)).second &&
                   polished.size() <= 40 &&
                   sc.doc.policy.mode != TransitionPolicy::Mode::PhaseGroups;
      double obj = rec.ub;
      SignalPlan refined = ub_plan;
      if (fresh) {
        refined = polish_plan(sc, ub_plan, obj);
        // Second start: the same sequence compressed to minimum greens.
        SignalPlan squeezed = gmin_retime(sc, ub_plan);
        double obj2 = plan_objective(sc, squeezed);
        if (std::isfinite(obj2) || !squeezed.arcs.empty()) {
          SignalPlan alt = polish_plan(sc, squeezed, obj2);
          if (obj2 < obj) {
            obj = obj2;
            refined = alt;
          }
        }
      }
      if (obj < res.best_ub) {
        LoadingResult run = standard_dnl(sc.net, sc.vehicles, sc.aux, refined,
                                         sc.map, sc.factors);
        res.best_ub = obj;
        res.best_plan = refined;
        res.best_traj = run.traj;
        res.best_moe = compute_moe(run.traj, refined, sc.net, sc.map,
                                   sc.vehicles, sc.aux);
        res.has_solution = true;
      }
    } else {
      rec.ub = kInf;
    }
    rec.best_ub = res.best_ub;
    rec.gap = res.best_ub - res.max_lb;

    // Task 3: subgradient step on the prices.
    MultiplierField grad =
        subgradient(lower.traj, spr.plan, sc.map, sc.net, sc.factors, &pool);
    lam = update_multipliers(lam, grad, n, cfg.rule, &pool);

    rec.ms_per_task = (now_ms() - t0) / 4.0;
    res.history.push_back(rec);

    if (std::isfinite(res.best_ub) &&
        rec.gap <= cfg.gap_tol * std::max(1.0, std::abs(res.best_ub)))
      break;
  }
  res.multipliers = lam;
  return res;
}

}  // namespace ptnet
