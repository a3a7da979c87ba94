#include "ptnet/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace ptnet {

using nlohmann::json;

namespace {

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json phase_vec(const PhaseSet& pset, int phase) {
  return json(pset.phases[phase].locals);
}

}  // namespace

std::string history_csv(const std::vector<IterationRecord>& history) {
  std::ostringstream os;
  os << "n,L11,L12,LB,UB,best_UB,gap,ms_per_task\n";
  for (const auto& r : history)
    os << r.n << "," << num(r.l11) << "," << num(r.l12) << "," << num(r.lb)
       << "," << num(r.ub) << "," << num(r.best_ub) << "," << num(r.gap) << ","
       << num(r.ms_per_task) << "\n";
  return os.str();
}

std::string history_content(const std::vector<IterationRecord>& history) {
  std::ostringstream os;
  for (const auto& r : history)
    os << r.n << "," << num(r.l11) << "," << num(r.l12) << "," << num(r.lb)
       << "," << num(r.ub) << "," << num(r.best_ub) << "," << num(r.gap)
       << "\n";
  return os.str();
}

std::string trajectories_csv(const TrajectorySet& traj, const RoadNetwork& net,
                             const std::vector<VehiclePath>& vehicles) {
  std::ostringstream os;
  os << "vid,link_from,link_to,entry_t,exit_t\n";
  std::map<int, const VehiclePath*> by_vid;
  for (const auto& v : vehicles) by_vid[v.vid] = &v;
  for (const auto& tv : traj.vehicles) {
    // Origin wait encoded as a from==to row.
    if (!tv.legs.empty() && tv.legs.front().entry > tv.t0) {
      int o = by_vid.at(tv.vid)->nodes.front();
      os << tv.vid << "," << o << "," << o << "," << tv.t0 << ","
         << tv.legs.front().entry << "\n";
    }
    for (const auto& leg : tv.legs)
      os << tv.vid << "," << net.links[leg.link].from << ","
         << net.links[leg.link].to << "," << leg.entry << "," << leg.exit
         << "\n";
  }
  return os.str();
}

TrajectorySet parse_trajectories_csv(const std::string& text,
                                     const RoadNetwork& net,
                                     const std::vector<VehiclePath>& vehicles) {
  TrajectorySet out;
  std::map<int, int> slot;
  for (size_t v = 0; v < vehicles.size(); ++v) {
    slot[vehicles[v].vid] = static_cast<int>(v);
    VehicleTrajectory tv;
    tv.vid = vehicles[v].vid;
    tv.t0 = vehicles[v].t0;
    out.vehicles.push_back(tv);
  }
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int vid, from, to, entry, exit;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d", &vid, &from, &to, &entry,
                    &exit) != 5)
      throw std::invalid_argument("bad trajectory row: " + line);
    if (from == to) continue;  // origin wait row
    auto it = slot.find(vid);
    if (it == slot.end())
      throw std::invalid_argument("unknown vid in trajectories: " + line);
    int lid = net.link_between(from, to);
    if (lid < 0) throw std::invalid_argument("unknown link in row: " + line);
    out.vehicles[it->second].legs.push_back({lid, entry, exit});
  }
  for (auto& tv : out.vehicles) {
    auto& veh = vehicles[slot.at(tv.vid)];
    if (tv.legs.size() == veh.links.size() && !tv.legs.empty())
      tv.arrival = tv.legs.back().exit;
  }
  return out;
}

std::string plan_json(const SignalPlan& plan, const PhaseSet& pset) {
  json arcs = json::array();
  for (const auto& a : plan.arcs) {
    json ja{{"p", phase_vec(pset, a.p)},
            {"tau", a.tau},
            {"h", a.h},
            {"green_end", a.green_end},
            {"yellow_end", a.yellow_end},
            {"tail", a.tail}};
    ja["p_next"] = a.tail ? json(nullptr) : phase_vec(pset, a.p_next);
    arcs.push_back(ja);
  }
  return json{{"horizon", plan.horizon}, {"arcs", arcs}}.dump(2) + "\n";
}

SignalPlan parse_plan_json(const std::string& text, const PhaseSet& pset) {
  json j = json::parse(text);
  SignalPlan plan;
  plan.horizon = j.value("horizon", 0);
  for (const auto& ja : j.value("arcs", json::array())) {
    PhaseTimeArc a;
    a.p = pset.index_of(ja["p"].get<std::vector<int>>());
    a.tail = ja.value("tail", false);
    a.p_next = a.tail ? -1 : pset.index_of(ja["p_next"].get<std::vector<int>>());
    a.tau = ja.value("tau", 0);
    a.h = ja.value("h", 0);
    a.green_end = ja.value("green_end", 0);
    a.yellow_end = ja.value("yellow_end", 0);
    if (a.p < 0 || (!a.tail && a.p_next < 0))
      throw std::invalid_argument("plan names an unknown phase vector");
    plan.arcs.push_back(a);
  }
  return plan;
}

std::string moe_json(const MoeReport& moe) {
  json per_ix = json::array();
  for (const auto& im : moe.per_intersection)
    per_ix.push_back({{"id", im.id},
                      {"arrivals_during_green", im.arrivals_during_green},
                      {"arrivals_during_non_green", im.arrivals_during_non_green}});
  json per_veh = json::array();
  for (const auto& [vid, d] : moe.per_vehicle_delay)
    per_veh.push_back({{"vid", vid}, {"delay", d}});
  return json{{"total_travel_time", moe.total_travel_time},
              {"total_delay", moe.total_delay},
              {"transitions", moe.transitions},
              {"objective", moe.objective},
              {"per_intersection", per_ix},
              {"per_vehicle", per_veh},
              {"max_delay", moe.max_delay}}
             .dump(2) +
         "\n";
}

std::string gamma_csv(const GammaField& gamma, const RoadNetwork& net) {
  std::ostringstream os;
  os << "link_from,link_to,t,factor\n";
  for (size_t lid = 0; lid < net.links.size(); ++lid) {
    if (gamma.ctrl_index[lid] < 0) continue;
    for (int t = 0; t < gamma.horizon; ++t)
      os << net.links[lid].from << "," << net.links[lid].to << "," << t << ","
         << num(gamma.at(static_cast<int>(lid), t)) << "\n";
  }
  return os.str();
}

std::string counts_json(const MilpCounts& counts) {
  json fam = json::object();
  for (const auto& [name, rc] : counts.by_family)
    fam[name] = {{"rows", rc.first}, {"nonzeros", rc.second}};
  return json{{"rows", counts.rows},
              {"cols", counts.cols},
              {"nonzeros", counts.nonzeros},
              {"families", fam}}
             .dump(2) +
         "\n";
}

std::string oracle_json(const OracleResult& r) {
  std::string status = r.status == OracleResult::Status::Ok ? "ok"
                       : r.status == OracleResult::Status::Refused
                           ? "refused"
                           : "infeasible";
  return json{{"status", status},
              {"objective", r.objective},
              {"delay", r.delay},
              {"transitions", r.transitions},
              {"nodes", r.nodes},
              {"reason", r.reason}}
             .dump(2) +
         "\n";
}

namespace {

const char* band_color(Window w, double m_p, double m_pn, bool tail) {
  if (m_p <= 0.0) return "#d33";                  // red
  if (w == Window::Green) return "#2a2";           // green
  if (!tail && m_pn > 0.0) return "#2a2";          // continuation
  return w == Window::Yellow ? "#fc3" : "#d33";
}

}  // namespace

std::vector<TimeSpaceDiagram> time_space_diagrams(const Scenario& sc,
                                                  const SignalPlan& plan,
                                                  const TrajectorySet& traj) {
  std::vector<TimeSpaceDiagram> out;
  // Group vehicles by identical node path.
  std::map<std::vector<NodeId>, std::vector<int>> groups;
  for (size_t v = 0; v < sc.vehicles.size(); ++v)
    groups[sc.vehicles[v].nodes].push_back(static_cast<int>(v));

  const int H = plan.horizon;
  const double px_t = 6.0, px_d = 8.0;
  for (const auto& [nodes, members] : groups) {
    const VehiclePath& proto = sc.vehicles[members.front()];
    bool signalized = false;
    for (int lid : proto.links)
      if (sc.net.links[lid].controlled()) signalized = true;
    if (!signalized) continue;

    // Cumulative distance (free-flow seconds) per node along the path.
    std::vector<int> dist(nodes.size(), 0);
    for (size_t k = 0; k < proto.links.size(); ++k)
      dist[k + 1] = dist[k] + sc.net.links[proto.links[k]].fftt;
    int total = dist.back();

    std::ostringstream svg, csv;
    csv << "kind,id,t,value\n";
    double width = H * px_t + 60, height = total * px_d + 40;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
        << "' height='" << height << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    // Signal bands at each controlled link's stop bar.
    for (size_t k = 0; k < proto.links.size(); ++k) {
      int lid = proto.links[k];
      if (!sc.net.links[lid].controlled()) continue;
      double y = height - 30 - dist[k] * px_d;
      for (const auto& arc : plan.arcs) {
        for (int t = arc.tau; t < arc.h; ++t) {
          Window w = t < arc.green_end   ? Window::Green
                     : t < arc.yellow_end ? Window::Yellow
                                          : Window::AllRed;
          double m_p = sc.map.at(lid, arc.p);
          double m_pn = arc.tail ? 0.0 : sc.map.at(lid, arc.p_next);
          svg << "<rect x='" << 40 + t * px_t << "' y='" << y - 2
              << "' width='" << px_t << "' height='4' fill='"
              << band_color(w, m_p, m_pn, arc.tail) << "'/>\n";
          csv << "band," << sc.net.links[lid].from << "-"
              << sc.net.links[lid].to << "," << t << ","
              << band_color(w, m_p, m_pn, arc.tail) << "\n";
        }
      }
    }
    // Vehicle polylines.
    for (int v : members) {
      const auto& tv = traj.vehicles[v];
      std::ostringstream pts;
      auto add = [&](double t, double d) {
        pts << 40 + t * px_t << "," << height - 30 - d * px_d << " ";
      };
      add(tv.t0, 0);
      for (const auto& leg : tv.legs) {
        int k = sc.vehicles[v].hop_of_link(leg.link);
        add(leg.entry, dist[k]);
        int fftt = sc.net.links[leg.link].fftt;
        add(leg.entry + fftt, dist[k + 1]);
        if (leg.exit > leg.entry + fftt) add(leg.exit, dist[k + 1]);
        csv << "veh," << tv.vid << "," << leg.entry << "," << dist[k] << "\n";
      }
      svg << "<polyline fill='none' stroke='#06c' stroke-width='1.2' points='"
          << pts.str() << "'/>\n";
    }
    svg << "</svg>\n";

    TimeSpaceDiagram d;
    d.key = std::to_string(nodes.front()) + "-" + std::to_string(nodes.back());
    d.svg = svg.str();
    d.csv = csv.str();
    out.push_back(std::move(d));
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace ptnet
