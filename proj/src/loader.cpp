#include "ptnet/loader.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ptnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCreditEps = 1e-9;

struct VehState {
  int hop = -1;        // -1: not yet on the first link
  int entered = 0;     // entry second into the current link
  bool arrived = false;
};

// Shared engine for both loaders. rate(link, t) returns the per-second
// discharge credit accrual; +inf removes the entry cap entirely.
template <typename RateFn, typename PriceFn>
LoadingResult run_dnl(const RoadNetwork& net,
                      const std::vector<VehiclePath>& vehicles,
                      const PathAux& aux, RateFn rate, PriceFn price) {
  const int H = net.horizon;
  const int L = static_cast<int>(net.links.size());
  LoadingResult out;
  out.traj.vehicles.resize(vehicles.size());

  std::map<int, int> by_vid;
  for (size_t v = 0; v < vehicles.size(); ++v) {
    by_vid[vehicles[v].vid] = static_cast<int>(v);
    out.traj.vehicles[v].vid = vehicles[v].vid;
    out.traj.vehicles[v].t0 = vehicles[v].t0;
  }

  std::vector<VehState> st(vehicles.size());
  std::vector<double> credit(L, 0.0);
  std::vector<int> occ(L, 0);
  std::vector<size_t> chain_ptr(L, 0);
  const std::vector<int> order = net.discharge_order();

  // arrivals[t]: vehicles reaching their destination at second t
  std::vector<std::vector<int>> arrivals(H + 1);
  auto schedule_arrival = [&](int v, int t) {
    if (t <= H) arrivals[t].push_back(v);
  };

  for (int t = 0; t <= H; ++t) {
    for (int v : arrivals[t]) {
      const VehiclePath& p = vehicles[v];
      st[v].arrived = true;
      occ[p.links.back()]--;
      out.traj.vehicles[v].legs.push_back({p.links.back(), st[v].entered, t});
      out.traj.vehicles[v].arrival = t;
    }
    if (t == H) break;

    for (int lid : order) {
      double r = rate(lid, t);
      bool capped = r != kInf;
      if (capped) credit[lid] += r;
      const Link& link = net.links[lid];
      auto& chain = aux.fifo_chain[lid];
      while (chain_ptr[lid] < chain.size()) {
        int v = by_vid.at(chain[chain_ptr[lid]]);
        const VehiclePath& p = vehicles[v];
        int next_hop = st[v].hop + 1;
        // Strict FIFO: while the chain's next vehicle is still upstream of
        // this link, nobody may enter it.
        if (st[v].arrived || p.links[next_hop] != lid) break;
        // Ready: departed and done traversing the current link.
        bool ready;
        if (st[v].hop < 0) {
          ready = p.t0 <= t;
        } else {
          ready = st[v].entered + net.links[p.links[st[v].hop]].fftt <= t;
        }
        if (!ready) break;
        if (capped && credit[lid] < 1.0 - kCreditEps) break;
        if (link.has_storage_limit() && occ[lid] >= link.storage) break;
        // Admit.
        if (st[v].hop >= 0) {
          int cur = p.links[st[v].hop];
          out.traj.vehicles[v].legs.push_back({cur, st[v].entered, t});
          occ[cur]--;
        }
        st[v].hop = next_hop;
        st[v].entered = t;
        occ[lid]++;
        if (capped) credit[lid] = std::max(0.0, credit[lid] - 1.0);
        out.price_sum += price(lid, t);
        if (next_hop + 1 == static_cast<int>(p.links.size()))
          schedule_arrival(v, t + link.fftt);
        chain_ptr[lid]++;
      }
      // Unused whole credits expire; the fractional remainder carries over.
      if (capped && credit[lid] >= 1.0)
        credit[lid] -= std::floor(credit[lid]);
    }
  }

  for (size_t v = 0; v < vehicles.size(); ++v) {
    if (!st[v].arrived) {
      out.stuck.push_back(vehicles[v].vid);
      if (st[v].hop >= 0)  // open leg: still on the link through the horizon
        out.traj.vehicles[v].legs.push_back(
            {vehicles[v].links[st[v].hop], st[v].entered, H});
    }
  }
  out.feasible = out.stuck.empty();
  return out;
}

}  // namespace

int occupancy(const TrajectorySet& traj, int link_id, int t) {
  int n = 0;
  for (const auto& v : traj.vehicles)
    for (const auto& leg : v.legs)
      if (leg.link == link_id && leg.entry <= t && t < leg.exit) ++n;
  return n;
}

LoadingResult standard_dnl(const RoadNetwork& net,
                           const std::vector<VehiclePath>& vehicles,
                           const PathAux& aux, const SignalPlan& plan,
                           const MappingMatrix& map,
                           const WindowFactors& factors) {
  GammaField gamma = plan_to_gamma(plan, map, net, factors);
  auto rate = [&](int lid, int t) {
    return gamma.at(lid, t) * net.links[lid].sat_rate;
  };
  auto price = [](int, int) { return 0.0; };
  return run_dnl(net, vehicles, aux, rate, price);
}

LoadingResult customized_dnl(const RoadNetwork& net,
                             const std::vector<VehiclePath>& vehicles,
                             const PathAux& aux, const MultiplierField& lam,
                             const MappingMatrix& map) {
  auto rate = [&](int lid, int) {
    return net.links[lid].controlled() ? kInf : net.links[lid].sat_rate;
  };
  auto price = [&](int lid, int t) {
    int c = map.ctrl_index[lid];
    return c < 0 ? 0.0 : lam.at(c, t);
  };
  return run_dnl(net, vehicles, aux, rate, price);
}

double l11_value(const LoadingResult& loading,
                 const std::vector<VehiclePath>& vehicles, const PathAux& aux) {
  if (!loading.feasible) return kInf;
  double delay = 0.0;
  for (size_t v = 0; v < vehicles.size(); ++v)
    delay += loading.traj.vehicles[v].arrival - vehicles[v].t0 -
             aux.ff_path_time[v];
  return delay + loading.price_sum;
}

namespace {

// Entry during the clearance of an arc counts as a green arrival when the
// link is shared by both phases (continuous long green).
bool green_arrival(const PhaseTimeArc& arc, int t, double m_p, double m_pn) {
  if (m_p <= 0.0) return false;
  if (t < arc.green_end) return true;
  return !arc.tail && m_pn > 0.0;
}

}  // namespace

MoeReport compute_moe(const TrajectorySet& traj, const SignalPlan& plan,
                      const RoadNetwork& net, const MappingMatrix& map,
                      const std::vector<VehiclePath>& vehicles,
                      const PathAux& aux) {
  MoeReport moe;
  moe.transitions = plan.transition_count();

  std::map<int, IntersectionMoe> per_ix;
  for (const Link& l : net.links)
    if (l.controlled()) per_ix[l.intersection].id = l.intersection;

  for (size_t v = 0; v < traj.vehicles.size(); ++v) {
    const auto& tv = traj.vehicles[v];
    int delay = tv.arrived()
                    ? tv.arrival - vehicles[v].t0 - aux.ff_path_time[v]
                    : net.horizon - vehicles[v].t0 - aux.ff_path_time[v];
    moe.total_travel_time += (tv.arrived() ? tv.arrival : net.horizon) -
                             vehicles[v].t0;
    moe.total_delay += delay;
    moe.per_vehicle_delay.push_back({tv.vid, delay});
    moe.max_delay = std::max(moe.max_delay, delay);
    for (const auto& leg : tv.legs) {
      const Link& l = net.links[leg.link];
      if (!l.controlled()) continue;
      const PhaseTimeArc& arc = plan.arc_at(leg.entry);
      double m_p = map.at(leg.link, arc.p);
      double m_pn = arc.tail ? 0.0 : map.at(leg.link, arc.p_next);
      if (green_arrival(arc, leg.entry, m_p, m_pn))
        per_ix[l.intersection].arrivals_during_green++;
      else
        per_ix[l.intersection].arrivals_during_non_green++;
    }
  }
  for (auto& [id, im] : per_ix) moe.per_intersection.push_back(im);
  moe.objective = moe.total_delay + moe.transitions;
  return moe;
}

std::vector<Violation> validate_feasible(
    const TrajectorySet& traj, const SignalPlan& plan, const RoadNetwork& net,
    const PathAux& aux, const MappingMatrix& map, const WindowFactors& factors,
    const std::vector<VehiclePath>& vehicles) {
  std::vector<Violation> out;
  const int H = net.horizon;
  const int L = static_cast<int>(net.links.size());
  GammaField gamma = plan_to_gamma(plan, map, net, factors);

  std::map<int, int> by_vid;
  for (size_t v = 0; v < vehicles.size(); ++v)
    by_vid[vehicles[v].vid] = static_cast<int>(v);

  // Conservation / contiguity per vehicle.
  std::vector<std::vector<std::pair<int, int>>> entries(L);  // (t, vid)
  std::vector<std::vector<int>> exits(L);
  for (const auto& tv : traj.vehicles) {
    auto it = by_vid.find(tv.vid);
    if (it == by_vid.end()) {
      out.push_back({"vconserve7", -1, -1, {tv.vid}, "unknown vehicle"});
      continue;
    }
    const VehiclePath& p = vehicles[it->second];
    bool ok = tv.legs.size() <= p.links.size();
    for (size_t k = 0; ok && k < tv.legs.size(); ++k) {
      const TrajLeg& leg = tv.legs[k];
      if (leg.link != p.links[k]) ok = false;
      if (k == 0 && leg.entry < p.t0) ok = false;
      if (k > 0 && leg.entry != tv.legs[k - 1].exit) ok = false;
      if (leg.exit - leg.entry < net.links[leg.link].fftt &&
          leg.exit != H)  // open legs are cut off at the horizon
        ok = false;
    }
    if (tv.arrived() &&
        (tv.legs.size() != p.links.size() || tv.legs.back().exit != tv.arrival))
      ok = false;
    if (!ok) {
      out.push_back({"vconserve7", -1, -1, {tv.vid},
                     "trajectory does not follow the declared path"});
      continue;
    }
    for (const auto& leg : tv.legs) {
      entries[leg.link].push_back({leg.entry, tv.vid});
      exits[leg.link].push_back(leg.exit);
    }
  }

  for (int lid = 0; lid < L; ++lid) {
    const Link& link = net.links[lid];
    auto ent = entries[lid];
    std::sort(ent.begin(), ent.end());

    // FIFO order along the link's chain.
    std::map<int, int> entry_of;
    for (auto& [t, vid] : ent)
      if (!entry_of.count(vid)) entry_of[vid] = t;
    int prev_t = -1, prev_vid = -1;
    for (int vid : aux.fifo_chain[lid]) {
      auto it = entry_of.find(vid);
      if (it == entry_of.end()) continue;
      if (prev_vid >= 0 && it->second < prev_t)
        out.push_back({"fifo6", lid, it->second, {prev_vid, vid},
                       "entered before its FIFO predecessor"});
      prev_t = it->second;
      prev_vid = vid;
    }

    // Capacity: replay the credit accumulator against observed entries.
    double credit = 0.0;
    size_t e = 0;
    for (int t = 0; t < H && e < ent.size(); ++t) {
      double r = link.controlled() ? gamma.at(lid, t) * link.sat_rate
                                   : link.sat_rate;
      credit += r;
      int n = 0;
      std::vector<int> vids;
      while (e < ent.size() && ent[e].first == t) {
        vids.push_back(ent[e].second);
        ++n;
        ++e;
      }
      if (n > std::floor(credit + kCreditEps)) {
        out.push_back({link.controlled() ? "cap3p" : "cap4", lid, t, vids,
                       "entries exceed per-second capacity credit"});
        credit = 0.0;
      } else {
        credit -= n;
      }
      if (credit >= 1.0) credit -= std::floor(credit);
    }

    // Storage.
    if (link.has_storage_limit()) {
      std::vector<int> delta(H + 2, 0);
      for (auto& [t, vid] : ent) delta[std::min(t, H)]++;
      for (int x : exits[lid]) delta[std::min(x, H)]--;
      int occ = 0;
      for (int t = 0; t <= H; ++t) {
        occ += delta[t];
        if (occ > link.storage) {
          out.push_back({"storage5", lid, t, {},
                         "occupancy " + std::to_string(occ) + " exceeds " +
                             std::to_string(link.storage)});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace ptnet
