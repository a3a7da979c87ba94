#include "ptnet/network.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ptnet {

using nlohmann::json;

int RoadNetwork::link_between(NodeId from, NodeId to) const {
  auto it = index_.find({from, to});
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> RoadNetwork::controlled_link_ids() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    if (links[i].controlled()) out.push_back(i);
  return out;
}

void RoadNetwork::rebuild_index() {
  index_.clear();
  for (int i = 0; i < static_cast<int>(links.size()); ++i)
    index_[{links[i].from, links[i].to}] = i;
}

std::vector<int> RoadNetwork::discharge_order() const {
  // Kahn's algorithm over nodes; links sorted by descending topological rank
  // of their tail node so a link is processed after its downstream links.
  std::map<NodeId, int> indeg;
  std::map<NodeId, std::vector<NodeId>> out;
  for (NodeId n : nodes) indeg[n] = 0;
  for (const Link& l : links) {
    out[l.from].push_back(l.to);
    indeg[l.to]++;
  }
  std::vector<NodeId> order;
  std::set<NodeId> ready;
  for (auto& [n, d] : indeg)
    if (d == 0) ready.insert(n);
  while (!ready.empty()) {
    NodeId n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (NodeId m : out[n])
      if (--indeg[m] == 0) ready.insert(m);
  }
  std::vector<int> link_order(links.size());
  for (size_t i = 0; i < links.size(); ++i) link_order[i] = static_cast<int>(i);
  if (order.size() != nodes.size()) return link_order;  // cyclic: id order
  std::map<NodeId, int> rank;
  for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  std::stable_sort(link_order.begin(), link_order.end(), [&](int a, int b) {
    return rank[links[a].from] > rank[links[b].from];
  });
  return link_order;
}

int VehiclePath::hop_of_link(int link_id) const {
  for (size_t k = 0; k < links.size(); ++k)
    if (links[k] == link_id) return static_cast<int>(k);
  return -1;
}

bool PathAux::fifo_before(int vid, int vid_other, int link_id) const {
  if (link_id < 0 || link_id >= static_cast<int>(fifo_chain.size())) return false;
  const auto& chain = fifo_chain[link_id];
  int pa = -1, pb = -1;
  for (size_t i = 0; i < chain.size(); ++i) {
    if (chain[i] == vid) pa = static_cast<int>(i);
    if (chain[i] == vid_other) pb = static_cast<int>(i);
  }
  return pa >= 0 && pb >= 0 && pa < pb;
}

namespace {

std::string loc(const std::string& doc, size_t i, const std::string& field) {
  std::ostringstream os;
  os << doc << "[" << i << "]." << field;
  return os.str();
}

}  // namespace

ScenarioLoad load_scenario(const std::string& network_doc,
                           const std::string& vehicles_doc) {
  ScenarioLoad out;
  json jn, jv;
  try {
    jn = json::parse(network_doc);
  } catch (const json::exception& e) {
    out.errors.push_back(std::string("network.json: ") + e.what());
    return out;
  }
  try {
    jv = json::parse(vehicles_doc);
  } catch (const json::exception& e) {
    out.errors.push_back(std::string("vehicles.json: ") + e.what());
    return out;
  }

  RoadNetwork& net = out.net;
  net.horizon = jn.value("horizon", 0);
  if (net.horizon <= 0)
    out.errors.push_back("network.horizon: must be a positive integer");
  if (jn.contains("time_step") && jn["time_step"].get<int>() != 1)
    out.errors.push_back("network.time_step: only 1-second steps are supported");

  std::set<NodeId> node_set;
  for (const auto& n : jn.value("nodes", json::array())) {
    NodeId id = n.get<NodeId>();
    if (!node_set.insert(id).second)
      out.errors.push_back("network.nodes: duplicate node " + std::to_string(id));
    net.nodes.push_back(id);
  }

  std::set<std::pair<NodeId, NodeId>> seen_pairs;
  const auto& jlinks = jn.value("links", json::array());
  for (size_t i = 0; i < jlinks.size(); ++i) {
    const auto& jl = jlinks[i];
    Link l;
    l.from = jl.value("from", 0);
    l.to = jl.value("to", 0);
    l.fftt = jl.value("fftt", 0);
    double vph = jl.value("sat_rate_vph", 0.0);
    int lanes = jl.value("lanes", 1);
    l.sat_rate = vph * lanes / 3600.0;
    if (jl.contains("storage") && !jl["storage"].is_null())
      l.storage = jl["storage"].get<int>();
    if (jl.contains("control")) {
      l.intersection = jl["control"].value("intersection", -1);
      if (l.intersection < 0)
        out.errors.push_back(loc("network.links", i, "control.intersection") +
                             ": missing intersection id");
    }
    if (!node_set.count(l.from))
      out.errors.push_back(loc("network.links", i, "from") + ": unknown node " +
                           std::to_string(l.from));
    if (!node_set.count(l.to))
      out.errors.push_back(loc("network.links", i, "to") + ": unknown node " +
                           std::to_string(l.to));
    if (l.fftt < 1)
      out.errors.push_back(loc("network.links", i, "fftt") +
                           ": must be >= 1 second");
    if (l.sat_rate <= 0.0)
      out.errors.push_back(loc("network.links", i, "sat_rate_vph") +
                           ": saturation rate must be positive");
    if (l.has_storage_limit() && l.storage < 1)
      out.errors.push_back(loc("network.links", i, "storage") +
                           ": must be >= 1 vehicle or null for unbounded");
    if (!seen_pairs.insert({l.from, l.to}).second)
      out.errors.push_back(loc("network.links", i, "from/to") +
                           ": duplicate link " + std::to_string(l.from) + "->" +
                           std::to_string(l.to));
    net.links.push_back(l);
  }
  net.rebuild_index();

  const auto& jvehicles = jv.value("vehicles", json::array());
  std::set<int> vids;
  for (size_t i = 0; i < jvehicles.size(); ++i) {
    const auto& jveh = jvehicles[i];
    VehiclePath v;
    v.vid = jveh.value("vid", 0);
    v.t0 = jveh.value("t0", -1);
    for (const auto& n : jveh.value("nodes", json::array()))
      v.nodes.push_back(n.get<NodeId>());
    if (!vids.insert(v.vid).second)
      out.errors.push_back(loc("vehicles", i, "vid") + ": duplicate id " +
                           std::to_string(v.vid));
    if (v.t0 < 0)
      out.errors.push_back(loc("vehicles", i, "t0") + ": must be >= 0");
    if (v.nodes.size() < 2) {
      out.errors.push_back(loc("vehicles", i, "nodes") +
                           ": path needs at least two nodes");
      out.vehicles.push_back(std::move(v));
      continue;
    }
    int ff = 0;
    bool path_ok = true;
    for (size_t k = 0; k + 1 < v.nodes.size(); ++k) {
      if (!node_set.count(v.nodes[k]))
        out.errors.push_back(loc("vehicles", i, "nodes") + ": unknown node " +
                             std::to_string(v.nodes[k]));
      int lid = net.link_between(v.nodes[k], v.nodes[k + 1]);
      if (lid < 0) {
        out.errors.push_back(loc("vehicles", i, "nodes") + ": no link " +
                             std::to_string(v.nodes[k]) + "->" +
                             std::to_string(v.nodes[k + 1]));
        path_ok = false;
        continue;
      }
      v.links.push_back(lid);
      ff += net.links[lid].fftt;
    }
    if (path_ok && !v.links.empty()) {
      if (net.links[v.links.back()].controlled())
        out.errors.push_back(loc("vehicles", i, "nodes") +
                             ": last path link must not be controlled");
      if (net.horizon > 0 && v.t0 + ff > net.horizon)
        out.errors.push_back(loc("vehicles", i, "t0") + ": horizon too short (" +
                             std::to_string(v.t0 + ff) + " > " +
                             std::to_string(net.horizon) + ")");
    }
    out.vehicles.push_back(std::move(v));
  }
  return out;
}

PathAux derive_path_aux(const RoadNetwork& net,
                        const std::vector<VehiclePath>& vehicles) {
  PathAux aux;
  aux.earliest_entry.resize(vehicles.size());
  aux.last_link.assign(vehicles.size(), -1);
  aux.ff_path_time.assign(vehicles.size(), 0);
  aux.fifo_chain.assign(net.links.size(), {});

  for (size_t v = 0; v < vehicles.size(); ++v) {
    const VehiclePath& p = vehicles[v];
    int t = p.t0;
    for (int lid : p.links) {
      aux.earliest_entry[v].push_back(t);
      t += net.links[lid].fftt;
    }
    if (!p.links.empty()) {
      aux.last_link[v] = p.links.back();
      aux.ff_path_time[v] = t - p.t0;
    }
  }

  // FIFO chain per link: order by earliest entry, ties by smaller vid.
  for (size_t lid = 0; lid < net.links.size(); ++lid) {
    std::vector<std::pair<int, int>> entries;  // (e, vid)
    for (size_t v = 0; v < vehicles.size(); ++v) {
      int hop = vehicles[v].hop_of_link(static_cast<int>(lid));
      if (hop >= 0)
        entries.push_back({aux.earliest_entry[v][hop], vehicles[v].vid});
    }
    std::sort(entries.begin(), entries.end());
    for (auto& [e, vid] : entries) aux.fifo_chain[lid].push_back(vid);
  }
  return aux;
}

}  // namespace ptnet
