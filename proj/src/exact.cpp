#include "ptnet/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace ptnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_num(double x) {
  if (x == std::floor(x) && std::abs(x) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", x);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

// Remaining free-flow time from the start of hop k to the destination.
std::vector<int> remaining_fftt(const RoadNetwork& net, const VehiclePath& v) {
  std::vector<int> rem(v.links.size() + 1, 0);
  for (int k = static_cast<int>(v.links.size()) - 1; k >= 0; --k)
    rem[k] = rem[k + 1] + net.links[v.links[k]].fftt;
  return rem;
}

struct ArcVar {
  PhaseTimeArc arc;
  int src_state = 0;
  int dst_state = -1;  // -1 for tails
};

// Reachable transition and tail arcs of the phase-time network under the
// policy, scanning forward from (s0, 0).
std::vector<ArcVar> reachable_arcs(const Scenario& sc, int horizon, int s0) {
  const PolicyGraph& pg = sc.pgraph;
  const int S = pg.n_states();
  std::vector<std::vector<char>> reach(S, std::vector<char>(horizon + 1, 0));
  reach[s0][0] = 1;
  std::vector<ArcVar> arcs;
  for (int t = 0; t < horizon; ++t) {
    for (int s = 0; s < S; ++s) {
      if (!reach[s][t]) continue;
      int p = pg.states[s].phase;
      const GeneralizedPhase& gp = sc.pset.phases[p];
      std::vector<int> durs = pg.fixed_durations[s];
      if (durs.empty())
        for (int g = gp.gmin; g <= gp.gmax; ++g) durs.push_back(g);
      for (int s2 : pg.succ[s]) {
        for (int g : durs) {
          int h = t + g + gp.clearance();
          if (h > horizon) continue;
          PhaseTimeArc a;
          a.p = p;
          a.p_next = pg.states[s2].phase;
          a.tau = t;
          a.green_end = t + g;
          a.yellow_end = a.green_end + gp.yellow;
          a.h = h;
          arcs.push_back({a, s, s2});
          reach[s2][h] = 1;
        }
      }
    }
  }
  // Tail (green rest) arcs from every reachable vertex, including t == H
  // where the tail is a zero-length closure. Mid-block vertices may only
  // close when the horizon truncates their group.
  for (int t = 0; t <= horizon; ++t)
    for (int s = 0; s < S; ++s)
      if (reach[s][t] && (t == horizon || pg.tail_allowed(s, t, horizon))) {
        PhaseTimeArc a;
        a.p = pg.states[s].phase;
        a.p_next = -1;
        a.tau = t;
        a.green_end = horizon;
        a.yellow_end = horizon;
        a.h = horizon;
        a.tail = true;
        arcs.push_back({a, s, -1});
      }
  return arcs;
}

}  // namespace

MilpCounts MilpInstance::counts() const {
  MilpCounts c;
  c.cols = static_cast<int>(vars.size());
  c.rows = static_cast<int>(rows.size());
  for (const auto& r : rows) {
    c.nonzeros += static_cast<long long>(r.terms.size());
    auto& fam = c.by_family[r.family];
    fam.first++;
    fam.second += static_cast<long long>(r.terms.size());
  }
  return c;
}

MilpBuild build_milp(const Scenario& sc, int horizon, long long var_cap) {
  MilpBuild out;
  const RoadNetwork& net = sc.net;
  const auto& vehicles = sc.vehicles;
  const int H = horizon;
  int s0 = sc.pgraph.state_for_phase(sc.initial_phase);
  if (s0 < 0) {
    out.refusal = "initial phase has no policy state";
    return out;
  }

  std::vector<ArcVar> arcs = reachable_arcs(sc, H, s0);

  // Projected size check before allocating anything big.
  long long projected = static_cast<long long>(arcs.size());
  for (const auto& v : vehicles) {
    auto rem = remaining_fftt(net, v);
    for (size_t k = 0; k < v.links.size(); ++k) {
      int e = sc.aux.earliest_entry[&v - &vehicles[0]][k];
      int tmax = H - rem[k];
      if (tmax >= e) projected += tmax - e + 1;           // traversals
      if (k > 0 && tmax - 1 >= e) projected += tmax - e;  // waits at entry node
    }
    projected += std::max(0, (H - rem[0]) - v.t0);  // origin waits
  }
  if (projected > var_cap) {
    out.refusal = "projected variable count " + std::to_string(projected) +
                  " exceeds cap " + std::to_string(var_cap);
    return out;
  }

  MilpInstance& inst = out.instance;
  inst.horizon = H;
  auto add_var = [&](MilpVar v) {
    int idx = static_cast<int>(inst.vars.size());
    inst.var_index[v.name] = idx;
    inst.vars.push_back(std::move(v));
    inst.objective.push_back(0.0);
    return idx;
  };

  // x / w variables per vehicle, restricted by omega and the entry windows.
  // x_idx[v][k][t - e] and w_idx[v][k][t - e] (w at the entry node of hop k;
  // k == 0 is the origin).
  std::vector<std::vector<std::vector<int>>> x_idx(vehicles.size());
  std::vector<std::vector<std::vector<int>>> w_idx(vehicles.size());
  for (size_t v = 0; v < vehicles.size(); ++v) {
    const VehiclePath& veh = vehicles[v];
    auto rem = remaining_fftt(net, veh);
    x_idx[v].resize(veh.links.size());
    w_idx[v].resize(veh.links.size());
    for (size_t k = 0; k < veh.links.size(); ++k) {
      int e = sc.aux.earliest_entry[v][k];
      int tmax = H - rem[k];
      const Link& link = net.links[veh.links[k]];
      for (int t = e; t <= tmax; ++t) {
        MilpVar var;
        var.kind = 'x';
        var.vehicle = static_cast<int>(v);
        var.link = veh.links[k];
        var.t = t;
        var.name = "x_v" + std::to_string(veh.vid) + "_" +
                   std::to_string(link.from) + "_" + std::to_string(link.to) +
                   "_t" + std::to_string(t);
        x_idx[v][k].push_back(add_var(var));
      }
      int wlo = k == 0 ? veh.t0 : e;
      for (int t = wlo; t <= tmax - 1; ++t) {
        MilpVar var;
        var.kind = 'w';
        var.vehicle = static_cast<int>(v);
        var.node = veh.nodes[k];
        var.t = t;
        var.name = "w_v" + std::to_string(veh.vid) + "_n" +
                   std::to_string(veh.nodes[k]) + "_t" + std::to_string(t);
        w_idx[v][k].push_back(add_var(var));
      }
      if (k + 1 == veh.links.size()) {
        // Objective: delay accrued by entering the last link at t.
        for (int t = e; t <= tmax; ++t)
          inst.objective[x_idx[v][k][t - e]] = t - e;
      }
    }
  }

  // y / z variables.
  std::vector<int> arc_var(arcs.size());
  for (size_t a = 0; a < arcs.size(); ++a) {
    const ArcVar& av = arcs[a];
    MilpVar var;
    var.kind = av.arc.tail ? 'z' : 'y';
    var.t = av.arc.tau;
    var.arc = static_cast<int>(inst.arcs.size());
    std::string slot = sc.pgraph.states[av.src_state].slot >= 0
                           ? "_k" + std::to_string(sc.pgraph.states[av.src_state].slot)
                           : "";
    if (av.arc.tail) {
      var.name = "z_p" + std::to_string(av.arc.p) + slot + "_t" +
                 std::to_string(av.arc.tau);
    } else {
      var.name = "y_p" + std::to_string(av.arc.p) + slot + "_t" +
                 std::to_string(av.arc.tau) + "_p" +
                 std::to_string(av.arc.p_next) + "_h" + std::to_string(av.arc.h);
    }
    arc_var[a] = add_var(var);
    if (!av.arc.tail) inst.objective[arc_var[a]] = 1.0;  // transition penalty
    inst.arcs.push_back(av.arc);
    inst.arc_state.push_back(av.src_state);
  }

  auto x_at = [&](size_t v, size_t k, int t) -> int {
    int e = sc.aux.earliest_entry[v][k];
    if (t < e || t - e >= static_cast<int>(x_idx[v][k].size())) return -1;
    return x_idx[v][k][t - e];
  };
  auto w_at = [&](size_t v, size_t k, int t) -> int {
    int wlo = k == 0 ? vehicles[v].t0 : sc.aux.earliest_entry[v][k];
    if (t < wlo || t - wlo >= static_cast<int>(w_idx[v][k].size())) return -1;
    return w_idx[v][k][t - wlo];
  };

  // (7) vehicle flow conservation over the space-time nodes of each path.
  for (size_t v = 0; v < vehicles.size(); ++v) {
    const VehiclePath& veh = vehicles[v];
    auto rem = remaining_fftt(net, veh);
    for (size_t k = 0; k < veh.links.size(); ++k) {
      int e = sc.aux.earliest_entry[v][k];
      int tmax = H - rem[k];
      int tlo = k == 0 ? veh.t0 : e;
      for (int t = tlo; t <= tmax; ++t) {
        MilpRow row;
        row.family = "vconserve7";
        row.name = "vconserve7_v" + std::to_string(veh.vid) + "_n" +
                   std::to_string(veh.nodes[k]) + "_t" + std::to_string(t);
        row.sense = 'E';
        row.rhs = (k == 0 && t == veh.t0) ? 1.0 : 0.0;
        int xo = x_at(v, k, t);
        if (xo >= 0) row.terms.push_back({xo, 1.0});
        int wo = w_at(v, k, t);
        if (wo >= 0) row.terms.push_back({wo, 1.0});
        int wi = w_at(v, k, t - 1);
        if (wi >= 0) row.terms.push_back({wi, -1.0});
        if (k > 0) {
          int fftt_prev = net.links[veh.links[k - 1]].fftt;
          int xi = x_at(v, k - 1, t - fftt_prev);
          if (xi >= 0) row.terms.push_back({xi, -1.0});
        }
        if (!row.terms.empty()) inst.rows.push_back(std::move(row));
      }
    }
    // Destination: exactly one last-link traversal.
    MilpRow dst;
    dst.family = "vconserve7";
    dst.name = "vconserve7_v" + std::to_string(veh.vid) + "_dst";
    dst.sense = 'E';
    dst.rhs = 1.0;
    size_t kl = veh.links.size() - 1;
    for (int idx : x_idx[v][kl]) dst.terms.push_back({idx, 1.0});
    inst.rows.push_back(std::move(dst));
  }

  // Entry lists per (link, t) for the capacity and storage rows.
  std::vector<std::map<int, std::vector<int>>> entering(net.links.size());
  for (size_t v = 0; v < vehicles.size(); ++v)
    for (size_t k = 0; k < vehicles[v].links.size(); ++k)
      for (size_t s = 0; s < x_idx[v][k].size(); ++s)
        entering[vehicles[v].links[k]][sc.aux.earliest_entry[v][k] +
                                       static_cast<int>(s)]
            .push_back(x_idx[v][k][s]);

  // Arcs covering each second, for the (3') rows.
  std::vector<std::vector<int>> covering(H);
  for (size_t a = 0; a < arcs.size(); ++a)
    for (int t = arcs[a].arc.tau; t < arcs[a].arc.h; ++t)
      covering[t].push_back(static_cast<int>(a));

  for (size_t lid = 0; lid < net.links.size(); ++lid) {
    const Link& link = net.links[lid];
    for (auto& [t, xs] : entering[lid]) {
      if (!link.controlled()) {
        MilpRow row;
        row.family = "cap4";
        row.name = "cap4_l" + std::to_string(link.from) + "_" +
                   std::to_string(link.to) + "_t" + std::to_string(t);
        row.sense = 'L';
        row.rhs = link.sat_rate;
        row.link = static_cast<int>(lid);
        row.t = t;
        for (int x : xs) row.terms.push_back({x, 1.0});
        inst.rows.push_back(std::move(row));
        continue;
      }
      MilpRow row;
      row.family = "cap3p";
      row.name = "cap3p_l" + std::to_string(link.from) + "_" +
                 std::to_string(link.to) + "_t" + std::to_string(t);
      row.sense = 'L';
      row.rhs = 0.0;
      row.link = static_cast<int>(lid);
      row.t = t;
      for (int x : xs) row.terms.push_back({x, 1.0});
      for (int a : covering[t]) {
        const PhaseTimeArc& arc = arcs[a].arc;
        double m_p = sc.map.at(static_cast<int>(lid), arc.p);
        if (m_p == 0.0) continue;
        double m_pn = arc.tail ? 0.0 : sc.map.at(static_cast<int>(lid), arc.p_next);
        Window w = t < arc.green_end   ? Window::Green
                   : t < arc.yellow_end ? Window::Yellow
                                        : Window::AllRed;
        double f = window_factor(w, m_p, m_pn, sc.factors);
        if (f != 0.0) row.terms.push_back({arc_var[a], -f * link.sat_rate});
      }
      inst.rows.push_back(std::move(row));
    }
  }

  // (5) storage rows, emitted only where the limit could bind.
  for (size_t lid = 0; lid < net.links.size(); ++lid) {
    const Link& link = net.links[lid];
    if (!link.has_storage_limit()) continue;
    // Vehicles that can already be on the link at t.
    std::vector<int> e_sorted;
    for (size_t v = 0; v < vehicles.size(); ++v) {
      int k = vehicles[v].hop_of_link(static_cast<int>(lid));
      if (k >= 0) e_sorted.push_back(sc.aux.earliest_entry[v][k]);
    }
    std::sort(e_sorted.begin(), e_sorted.end());
    for (int t = 0; t < H; ++t) {
      int possible = static_cast<int>(
          std::upper_bound(e_sorted.begin(), e_sorted.end(), t) -
          e_sorted.begin());
      if (possible <= link.storage) continue;
      MilpRow row;
      row.family = "storage5";
      row.name = "storage5_l" + std::to_string(link.from) + "_" +
                 std::to_string(link.to) + "_t" + std::to_string(t);
      row.sense = 'L';
      row.rhs = link.storage;
      row.link = static_cast<int>(lid);
      row.t = t;
      for (size_t v = 0; v < vehicles.size(); ++v) {
        const VehiclePath& veh = vehicles[v];
        int k = veh.hop_of_link(static_cast<int>(lid));
        if (k < 0) continue;
        // A-curve: entries up to t.
        for (size_t s = 0; s < x_idx[v][k].size(); ++s) {
          int te = sc.aux.earliest_entry[v][k] + static_cast<int>(s);
          if (te <= t) row.terms.push_back({x_idx[v][k][s], 1.0});
        }
        // D-curve: entries into the vehicle's next link, or its arrival.
        if (k + 1 < static_cast<int>(veh.links.size())) {
          for (size_t s = 0; s < x_idx[v][k + 1].size(); ++s) {
            int te = sc.aux.earliest_entry[v][k + 1] + static_cast<int>(s);
            if (te <= t) row.terms.push_back({x_idx[v][k + 1][s], -1.0});
          }
        } else {
          for (size_t s = 0; s < x_idx[v][k].size(); ++s) {
            int te = sc.aux.earliest_entry[v][k] + static_cast<int>(s);
            if (te + link.fftt <= t)
              row.terms.push_back({x_idx[v][k][s], -1.0});
          }
        }
      }
      inst.rows.push_back(std::move(row));
    }
  }

  // (6) FIFO rows for consecutive pairs of each link's chain.
  std::map<int, int> vid_pos;
  for (size_t v = 0; v < vehicles.size(); ++v) vid_pos[vehicles[v].vid] = static_cast<int>(v);
  for (size_t lid = 0; lid < net.links.size(); ++lid) {
    const auto& chain = sc.aux.fifo_chain[lid];
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
      int va = vid_pos.at(chain[i]);
      int vb = vid_pos.at(chain[i + 1]);
      int ka = vehicles[va].hop_of_link(static_cast<int>(lid));
      int kb = vehicles[vb].hop_of_link(static_cast<int>(lid));
      MilpRow row;
      row.family = "fifo6";
      row.name = "fifo6_l" + std::to_string(net.links[lid].from) + "_" +
                 std::to_string(net.links[lid].to) + "_v" +
                 std::to_string(chain[i]) + "_v" + std::to_string(chain[i + 1]);
      row.sense = 'L';
      row.rhs = 0.0;
      row.link = static_cast<int>(lid);
      for (size_t s = 0; s < x_idx[va][ka].size(); ++s)
        row.terms.push_back(
            {x_idx[va][ka][s],
             static_cast<double>(sc.aux.earliest_entry[va][ka] + s)});
      for (size_t s = 0; s < x_idx[vb][kb].size(); ++s)
        row.terms.push_back(
            {x_idx[vb][kb][s],
             -static_cast<double>(sc.aux.earliest_entry[vb][kb] + s)});
      inst.rows.push_back(std::move(row));
    }
  }

  // (8) phase-time flow conservation.
  {
    std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> vertex;
    for (size_t a = 0; a < arcs.size(); ++a) {
      const ArcVar& av = arcs[a];
      vertex[{av.src_state, av.arc.tau}].push_back({arc_var[a], 1.0});
      if (!av.arc.tail)
        vertex[{av.dst_state, av.arc.h}].push_back({arc_var[a], -1.0});
    }
    for (auto& [key, terms] : vertex) {
      MilpRow row;
      row.family = "pconserve8";
      row.name = "pconserve8_s" + std::to_string(key.first) + "_t" +
                 std::to_string(key.second);
      row.sense = 'E';
      row.rhs = (key.first == s0 && key.second == 0) ? 1.0 : 0.0;
      row.terms = std::move(terms);
      row.t = key.second;
      inst.rows.push_back(std::move(row));
    }
    MilpRow sink;
    sink.family = "pconserve8";
    sink.name = "pconserve8_sink";
    sink.sense = 'E';
    sink.rhs = 1.0;
    for (size_t a = 0; a < arcs.size(); ++a)
      if (arcs[a].arc.tail) sink.terms.push_back({arc_var[a], 1.0});
    inst.rows.push_back(std::move(sink));
  }

  out.ok = true;
  return out;
}

std::string to_lp_text(const MilpInstance& inst) {
  std::ostringstream os;
  os << "\\ centralized signal control MILP export\n";
  os << "\\ cols=" << inst.vars.size() << " rows=" << inst.rows.size() << "\n";
  os << "Minimize\n obj:";
  int n_on_line = 0;
  bool lead = true;
  for (size_t i = 0; i < inst.vars.size(); ++i) {
    double c = inst.objective[i];
    if (c == 0.0) continue;
    os << (c < 0 ? " - " : (lead ? " " : " + ")) << fmt_num(std::abs(c)) << " "
       << inst.vars[i].name;
    lead = false;
    if (++n_on_line % 8 == 0) os << "\n ";
  }
  if (lead) os << " 0 " << (inst.vars.empty() ? "x_none" : inst.vars[0].name);
  os << "\nSubject To\n";
  for (const auto& row : inst.rows) {
    os << " " << row.name << ":";
    n_on_line = 0;
    lead = true;
    for (const auto& [idx, coef] : row.terms) {
      os << (coef < 0 ? " - " : (lead ? " " : " + ")) << fmt_num(std::abs(coef))
         << " " << inst.vars[idx].name;
      lead = false;
      if (++n_on_line % 8 == 0) os << "\n   ";
    }
    os << (row.sense == 'E' ? " = " : " <= ") << fmt_num(row.rhs) << "\n";
  }
  os << "Binaries\n";
  n_on_line = 0;
  for (const auto& v : inst.vars) {
    os << " " << v.name;
    if (++n_on_line % 8 == 0) os << "\n";
  }
  os << "\nEnd\n";
  return os.str();
}

CheckResult check_solution(const MilpInstance& inst,
                           const std::vector<double>& assignment) {
  CheckResult out;
  if (assignment.size() != inst.vars.size())
    throw std::invalid_argument("assignment does not cover the registry");
  for (size_t i = 0; i < inst.vars.size(); ++i)
    out.objective += inst.objective[i] * assignment[i];
  constexpr double kTol = 1e-6;
  for (const auto& row : inst.rows) {
    double lhs = 0.0;
    for (const auto& [idx, coef] : row.terms) lhs += coef * assignment[idx];
    bool bad = row.sense == 'E' ? std::abs(lhs - row.rhs) > kTol
                                : lhs > row.rhs + kTol;
    if (!bad) continue;
    Violation v;
    v.constraint = row.family;
    v.link = row.link;
    v.t = row.t;
    v.detail = row.name + ": lhs " + fmt_num(lhs) + " vs rhs " + fmt_num(row.rhs);
    for (const auto& [idx, coef] : row.terms)
      if (inst.vars[idx].kind == 'x' && assignment[idx] > 0.5)
        v.vehicles.push_back(inst.vars[idx].vehicle);
    out.violations.push_back(std::move(v));
  }
  return out;
}

std::vector<double> encode_solution(const MilpInstance& inst,
                                    const Scenario& sc,
                                    const TrajectorySet& traj,
                                    const SignalPlan& plan) {
  std::vector<double> a(inst.vars.size(), 0.0);
  auto set1 = [&](const std::string& name) {
    auto it = inst.var_index.find(name);
    if (it == inst.var_index.end())
      throw std::invalid_argument("no registered variable " + name);
    a[it->second] = 1.0;
  };

  for (const auto& tv : traj.vehicles) {
    // Origin wait, then per leg: traversal + downstream waits.
    if (!tv.legs.empty())
      for (int t = tv.t0; t < tv.legs.front().entry; ++t)
        set1("w_v" + std::to_string(tv.vid) + "_n" +
             std::to_string(sc.net.links[tv.legs.front().link].from) + "_t" +
             std::to_string(t));
    for (const auto& leg : tv.legs) {
      const Link& link = sc.net.links[leg.link];
      set1("x_v" + std::to_string(tv.vid) + "_" + std::to_string(link.from) +
           "_" + std::to_string(link.to) + "_t" + std::to_string(leg.entry));
      for (int t = leg.entry + link.fftt; t < leg.exit; ++t)
        set1("w_v" + std::to_string(tv.vid) + "_n" + std::to_string(link.to) +
             "_t" + std::to_string(t));
    }
  }

  // Resolve the plan's arcs to policy states along the policy graph.
  int s = sc.pgraph.state_for_phase(plan.arcs.empty() ? sc.initial_phase
                                                      : plan.arcs.front().p);
  if (s < 0) throw std::invalid_argument("plan start has no policy state");
  auto slot_tag = [&](int state) {
    return sc.pgraph.states[state].slot >= 0
               ? "_k" + std::to_string(sc.pgraph.states[state].slot)
               : "";
  };
  int end_t = 0;
  for (const auto& arc : plan.arcs) {
    if (arc.tail) {
      set1("z_p" + std::to_string(arc.p) + slot_tag(s) + "_t" +
           std::to_string(arc.tau));
      end_t = -1;
      break;
    }
    set1("y_p" + std::to_string(arc.p) + slot_tag(s) + "_t" +
         std::to_string(arc.tau) + "_p" + std::to_string(arc.p_next) + "_h" +
         std::to_string(arc.h));
    int next = -1;
    for (int s2 : sc.pgraph.succ[s])
      if (sc.pgraph.states[s2].phase == arc.p_next) {
        next = s2;
        break;
      }
    if (next < 0) throw std::invalid_argument("plan violates the policy");
    s = next;
    end_t = arc.h;
  }
  if (end_t >= 0)  // plan ended with a transition landing exactly at H
    set1("z_p" + std::to_string(sc.pgraph.states[s].phase) + slot_tag(s) +
         "_t" + std::to_string(end_t));
  return a;
}

namespace {

// Prefix simulation summary used by the oracle's pruning and dominance memo.
struct PrefixInfo {
  int delay_before = 0;    // waiting seconds accrued strictly before tau
  bool all_arrived = true;
  bool complete_feasible = false;
  int complete_delay = 0;  // of prefix + green rest, when feasible
  std::string sim_key;     // vehicle positions at tau
};

PrefixInfo analyze_prefix(const Scenario& sc, const SignalPlan& candidate,
                          int tau) {
  PrefixInfo info;
  LoadingResult run = standard_dnl(sc.net, sc.vehicles, sc.aux, candidate,
                                   sc.map, sc.factors);
  info.complete_feasible = run.feasible;
  std::ostringstream key;
  for (size_t v = 0; v < sc.vehicles.size(); ++v) {
    const auto& tv = run.traj.vehicles[v];
    const VehiclePath& veh = sc.vehicles[v];
    if (!tv.legs.empty())
      info.delay_before +=
          std::max(0, std::min(tv.legs.front().entry, tau) - veh.t0);
    else if (veh.t0 < tau)
      info.delay_before += tau - veh.t0;
    for (const auto& leg : tv.legs) {
      int wait_from = leg.entry + sc.net.links[leg.link].fftt;
      info.delay_before += std::max(0, std::min(leg.exit, tau) - wait_from);
    }
    if (tv.arrived()) {
      info.complete_delay += tv.arrival - veh.t0 - sc.aux.ff_path_time[v];
      if (tv.arrival > tau) info.all_arrived = false;
    } else {
      info.all_arrived = false;
    }
    // Position at tau: (hop, seconds until ready), or done.
    if (tv.arrived() && tv.arrival <= tau) {
      key << "d,";
      continue;
    }
    int hop = -1, ready_in = 0;
    if (tv.legs.empty() || tv.legs.front().entry > tau) {
      hop = -1;
      ready_in = std::max(0, veh.t0 - tau);
    } else {
      for (size_t k = 0; k < tv.legs.size(); ++k)
        if (tv.legs[k].entry <= tau &&
            (tau < tv.legs[k].exit || k + 1 == tv.legs.size()))
          hop = static_cast<int>(k);
      int entry = tv.legs[hop].entry;
      ready_in = std::max(0, entry + sc.net.links[tv.legs[hop].link].fftt - tau);
    }
    key << hop << ":" << ready_in << ",";
  }
  info.sim_key = key.str();
  return info;
}

struct OracleSearch {
  const Scenario& sc;
  int horizon;
  const OracleLimits& limits;
  MaxGreenMode max_green;
  bool memo_usable = false;
  long long nodes = 0;
  bool hit_cap = false;
  double best = kInf;
  std::vector<PhaseTimeArc> best_arcs;
  int best_tail_tau = -1;
  int best_tail_state = -1;
  std::unordered_map<std::string, double> memo;

  std::vector<PhaseTimeArc> prefix;

  void dfs(int state, int tau, int transitions, const std::vector<int>& run);
};

void OracleSearch::dfs(int state, int tau, int transitions,
                       const std::vector<int>& run) {
  if (hit_cap) return;
  if (++nodes > limits.node_cap) {
    hit_cap = true;
    return;
  }
  // Candidate: close with a green rest to the horizon (forbidden mid-block
  // unless the horizon truncates the group).
  SignalPlan candidate;
  candidate.horizon = horizon;
  candidate.arcs = prefix;
  bool may_close = tau >= horizon || sc.pgraph.tail_allowed(state, tau, horizon);
  if (tau < horizon) {
    PhaseTimeArc tail;
    tail.p = sc.pgraph.states[state].phase;
    tail.p_next = -1;
    tail.tau = tau;
    tail.green_end = horizon;
    tail.yellow_end = horizon;
    tail.h = horizon;
    tail.tail = true;
    candidate.arcs.push_back(tail);
  }
  PrefixInfo info = analyze_prefix(sc, candidate, tau);
  if (info.complete_feasible && may_close) {
    double obj = info.complete_delay + transitions;
    if (obj < best) {
      best = obj;
      best_arcs = candidate.arcs;
    }
  }
  double partial = info.delay_before + transitions;
  if (partial >= best) return;
  // Once everyone has arrived, deeper plans only add transitions -- but a
  // mid-block prefix must still run its group to completion.
  if (info.all_arrived && may_close) return;
  if (tau >= horizon) return;

  if (memo_usable) {
    std::string key = std::to_string(state) + "@" + std::to_string(tau) + "|" +
                      info.sim_key;
    auto it = memo.find(key);
    if (it != memo.end() && it->second <= partial) return;
    memo[key] = partial;
  }

  int p = sc.pgraph.states[state].phase;
  const GeneralizedPhase& gp = sc.pset.phases[p];
  std::vector<int> durs = sc.pgraph.fixed_durations[state];
  if (durs.empty())
    for (int g = gp.gmin; g <= gp.gmax; ++g) durs.push_back(g);

  const int M = static_cast<int>(sc.pset.intersections.size());
  for (int s2 : sc.pgraph.succ[state]) {
    int pn = sc.pgraph.states[s2].phase;
    for (int g : durs) {
      int h = tau + g + gp.clearance();
      if (h > horizon) continue;
      std::vector<int> run2(M, 0);
      if (max_green == MaxGreenMode::Enforce) {
        bool ok = true;
        for (int ix = 0; ix < M; ++ix) {
          int cur = sc.pset.phases[p].locals[ix];
          int nxt = sc.pset.phases[pn].locals[ix];
          if (cur == nxt) {
            run2[ix] = run[ix] + g;
            if (run2[ix] > sc.pset.intersections[ix].find(nxt)->gmax) ok = false;
          }
        }
        if (!ok) continue;
      }
      PhaseTimeArc a;
      a.p = p;
      a.p_next = pn;
      a.tau = tau;
      a.green_end = tau + g;
      a.yellow_end = a.green_end + gp.yellow;
      a.h = h;
      prefix.push_back(a);
      dfs(s2, h, transitions + 1, run2);
      prefix.pop_back();
      if (hit_cap) return;
    }
  }
}

// Dominance on vehicle positions is sound only when credits are always whole
// at second boundaries, i.e. every gamma-scaled rate is integral.
bool rates_integral(const Scenario& sc) {
  auto integral = [](double x) { return x == std::floor(x); };
  for (const Link& l : sc.net.links) {
    if (!integral(l.sat_rate)) return false;
    if (!l.controlled()) continue;
    int c = sc.map.ctrl_index[&l - &sc.net.links[0]];
    for (int p = 0; p < static_cast<int>(sc.pset.phases.size()); ++p) {
      double m_p = sc.map.at_ctrl(c, p);
      for (int q = 0; q < static_cast<int>(sc.pset.phases.size()); ++q) {
        double m_q = sc.map.at_ctrl(c, q);
        for (Window w : {Window::Green, Window::Yellow, Window::AllRed})
          if (!integral(window_factor(w, m_p, m_q, sc.factors) * l.sat_rate))
            return false;
      }
    }
  }
  return true;
}

}  // namespace

OracleResult brute_force_optimum(const Scenario& sc, int horizon,
                                 const OracleLimits& limits,
                                 MaxGreenMode max_green) {
  OracleResult out;
  int P = static_cast<int>(sc.pset.phases.size());
  int V = static_cast<int>(sc.vehicles.size());
  if (P > limits.max_phases || horizon > limits.max_horizon ||
      V > limits.max_vehicles) {
    out.status = OracleResult::Status::Refused;
    out.reason = "instance exceeds limits: phases " + std::to_string(P) + "/" +
                 std::to_string(limits.max_phases) + ", horizon " +
                 std::to_string(horizon) + "/" +
                 std::to_string(limits.max_horizon) + ", vehicles " +
                 std::to_string(V) + "/" + std::to_string(limits.max_vehicles);
    return out;
  }
  // The oracle runs on a copy clamped to the requested horizon.
  Scenario local = sc;
  local.net.horizon = horizon;
  int s0 = local.pgraph.state_for_phase(local.initial_phase);
  if (s0 < 0) {
    out.status = OracleResult::Status::Infeasible;
    out.reason = "initial phase has no policy state";
    return out;
  }

  OracleSearch search{local, horizon, limits, max_green, false, 0,    false,
                      kInf,  {},      -1,     -1,        {},    {}};
  search.memo_usable = rates_integral(local);
  std::vector<int> run(local.pset.intersections.size(), 0);
  search.dfs(s0, 0, 0, run);
  out.nodes = search.nodes;
  if (search.hit_cap) {
    out.status = OracleResult::Status::Refused;
    out.reason = "node cap " + std::to_string(limits.node_cap) +
                 " exceeded after " + std::to_string(search.nodes) + " nodes";
    return out;
  }
  if (search.best == kInf) {
    out.status = OracleResult::Status::Infeasible;
    out.reason = "no plan loads every vehicle within the horizon";
    return out;
  }
  out.status = OracleResult::Status::Ok;
  out.objective = search.best;
  out.plan.horizon = horizon;
  out.plan.arcs = search.best_arcs;
  out.transitions = out.plan.transition_count();
  out.delay = static_cast<int>(search.best) - out.transitions;
  return out;
}

}  // namespace ptnet
