#include "ptnet/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ptnet {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path, std::vector<std::string>& errs) {
  std::ifstream in(path);
  if (!in) {
    errs.push_back("cannot open " + path);
    return "";
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::vector<std::string> apply_phase_doc(const std::string& phases_doc,
                                         RoadNetwork& net, PhaseDoc& out) {
  std::vector<std::string> errs;
  json j;
  try {
    j = json::parse(phases_doc);
  } catch (const json::exception& e) {
    errs.push_back(std::string("phases.json: ") + e.what());
    return errs;
  }
  out.delta = j.value("delta", 0.5);
  out.rho_yellow = j.value("rho_yellow", 0.5);
  if (out.delta <= 0.0 || out.delta >= 1.0)
    errs.push_back("phases.delta: must lie strictly between 0 and 1");
  if (out.rho_yellow <= 0.0 || out.rho_yellow >= 1.0)
    errs.push_back("phases.rho_yellow: must lie strictly between 0 and 1");

  for (Link& l : net.links) l.served_by.clear();

  std::set<int> ix_ids;
  for (const auto& jix : j.value("intersections", json::array())) {
    IntersectionPhases ix;
    ix.id = jix.value("id", -1);
    if (!ix_ids.insert(ix.id).second)
      errs.push_back("phases.intersections: duplicate id " +
                     std::to_string(ix.id));
    for (const auto& jp : jix.value("phases", json::array())) {
      LocalPhase lp;
      lp.id = jp.value("id", 0);
      lp.gmin = jp.value("gmin", 1);
      lp.gmax = jp.value("gmax", lp.gmin);
      lp.yellow = jp.value("yellow", 0);
      lp.allred = jp.value("allred", 0);
      if (lp.gmin < 1 || lp.gmin > lp.gmax)
        errs.push_back("intersection " + std::to_string(ix.id) + " phase " +
                       std::to_string(lp.id) + ": need 1 <= gmin <= gmax");
      if (lp.yellow < 0 || lp.allred < 0)
        errs.push_back("intersection " + std::to_string(ix.id) + " phase " +
                       std::to_string(lp.id) + ": negative clearance");
      for (const auto& js : jp.value("serves", json::array())) {
        auto ends = js.value("link", std::vector<NodeId>{});
        std::string prot = js.value("protection", "protected");
        if (ends.size() != 2) {
          errs.push_back("intersection " + std::to_string(ix.id) +
                         ": serves.link must be [from, to]");
          continue;
        }
        int lid = net.link_between(ends[0], ends[1]);
        if (lid < 0) {
          errs.push_back("intersection " + std::to_string(ix.id) +
                         ": serves unknown link " + std::to_string(ends[0]) +
                         "->" + std::to_string(ends[1]));
          continue;
        }
        if (!net.links[lid].controlled() ||
            net.links[lid].intersection != ix.id) {
          errs.push_back("intersection " + std::to_string(ix.id) +
                         ": link " + std::to_string(ends[0]) + "->" +
                         std::to_string(ends[1]) +
                         " is not controlled by this intersection");
          continue;
        }
        Protection p = prot == "permissive" ? Protection::Permissive
                                            : Protection::Protected;
        lp.served_links.push_back({lid, p});
        net.links[lid].served_by.push_back({lp.id, p});
      }
      ix.phases.push_back(std::move(lp));
    }
    if (ix.phases.empty())
      errs.push_back("intersection " + std::to_string(ix.id) +
                     ": needs at least one local phase");
    out.intersections.push_back(std::move(ix));
  }

  // Every controlled link must be claimed by its intersection's phases.
  for (const Link& l : net.links) {
    if (!l.controlled()) continue;
    if (!ix_ids.count(l.intersection))
      errs.push_back("link " + std::to_string(l.from) + "->" +
                     std::to_string(l.to) + ": intersection " +
                     std::to_string(l.intersection) + " has no phase config");
    else if (l.served_by.empty())
      errs.push_back("link " + std::to_string(l.from) + "->" +
                     std::to_string(l.to) +
                     ": no local phase of its intersection serves it");
  }

  const json& jpol = j.contains("policy") ? j["policy"] : json::object();
  std::string mode = jpol.value("mode", "full");
  if (mode == "full") {
    out.policy.mode = TransitionPolicy::Mode::FullyAdaptive;
  } else if (mode == "semi") {
    out.policy.mode = TransitionPolicy::Mode::SemiAdaptive;
    for (const auto& ix : out.intersections) {
      std::string key = std::to_string(ix.id);
      std::vector<int> seq;
      if (jpol.contains("sequences") && jpol["sequences"].contains(key))
        seq = jpol["sequences"][key].get<std::vector<int>>();
      else
        for (const auto& p : ix.phases) seq.push_back(p.id);  // declared order
      std::set<int> seen(seq.begin(), seq.end());
      if (seq.size() != ix.phases.size() ||
          seen.size() != ix.phases.size())
        errs.push_back("policy.sequences[" + key +
                       "]: must cover every local phase exactly once");
      for (int id : seq)
        if (!ix.find(id))
          errs.push_back("policy.sequences[" + key + "]: unknown local phase " +
                         std::to_string(id));
      out.policy.sequences.push_back(std::move(seq));
    }
  } else if (mode == "groups") {
    out.policy.mode = TransitionPolicy::Mode::PhaseGroups;
    for (const auto& jb : jpol.value("blocks", json::array())) {
      PhaseGroupBlock b;
      b.phase_locals = jb.value("phase", std::vector<int>{});
      if (jb.contains("durations"))
        b.durations = jb["durations"].get<std::vector<int>>();
      else if (jb.contains("duration"))
        b.durations = {jb["duration"].get<int>()};
      if (b.durations.empty())
        errs.push_back("policy.blocks: block needs a duration");
      for (int d : b.durations)
        if (d < 1) errs.push_back("policy.blocks: nonpositive duration");
      out.policy.blocks.push_back(std::move(b));
    }
    if (out.policy.blocks.empty())
      errs.push_back("policy.blocks: phase-group policy needs blocks");
  } else {
    errs.push_back("policy.mode: unknown mode '" + mode + "'");
  }

  if (j.contains("initial_phase"))
    out.initial_phase_locals = j["initial_phase"].get<std::vector<int>>();
  return errs;
}

void Scenario::rebuild_derived() {
  aux = derive_path_aux(net, vehicles);
  pset = generate_generalized_phases(doc.intersections);
  map = build_mapping(pset, net, doc.delta);
  factors.rho_y = doc.rho_yellow;
  pgraph = build_policy_graph(pset, doc.policy);
  if (!doc.initial_phase_locals.empty()) {
    int p0 = pset.index_of(doc.initial_phase_locals);
    if (p0 < 0) throw std::invalid_argument("initial_phase names no phase");
    initial_phase = p0;
  } else {
    initial_phase = 0;
  }
}

ScenarioResult load_scenario_dir(const std::string& dir,
                                 const ScenarioOverrides& ov) {
  namespace fs = std::filesystem;
  ScenarioResult out;
  std::string ndoc = read_file((fs::path(dir) / "network.json").string(),
                               out.errors);
  std::string vdoc = read_file((fs::path(dir) / "vehicles.json").string(),
                               out.errors);
  std::string pdoc = read_file((fs::path(dir) / "phases.json").string(),
                               out.errors);
  if (!out.errors.empty()) return out;

  ScenarioLoad base = load_scenario(ndoc, vdoc);
  out.errors = base.errors;

  Scenario sc;
  sc.net = std::move(base.net);
  sc.vehicles = std::move(base.vehicles);

  if (ov.policy_mode) {
    // Rewrite the policy mode before parsing so mode-specific validation runs.
    try {
      json j = json::parse(pdoc);
      if (!j.contains("policy")) j["policy"] = json::object();
      j["policy"]["mode"] = *ov.policy_mode;
      pdoc = j.dump();
    } catch (const json::exception&) {
      // fall through; apply_phase_doc reports the parse error
    }
  }
  auto perrs = apply_phase_doc(pdoc, sc.net, sc.doc);
  out.errors.insert(out.errors.end(), perrs.begin(), perrs.end());
  if (ov.delta) sc.doc.delta = *ov.delta;
  if (ov.rho_yellow) sc.doc.rho_yellow = *ov.rho_yellow;
  if (!out.errors.empty()) return out;

  try {
    sc.rebuild_derived();
  } catch (const std::exception& e) {
    out.errors.push_back(e.what());
    return out;
  }
  if (sc.pset.phases.empty()) {
    out.errors.push_back("no feasible generalized phases");
    return out;
  }
  out.scenario = std::move(sc);
  return out;
}

}  // namespace ptnet
