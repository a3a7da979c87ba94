#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ptnet/network.hpp"
#include "ptnet/phases.hpp"
#include "ptnet/ptgraph.hpp"

namespace ptnet {

/// phases.json content.
struct PhaseDoc {
  std::vector<IntersectionPhases> intersections;
  TransitionPolicy policy;
  double delta = 0.5;
  double rho_yellow = 0.5;
  std::vector<int> initial_phase_locals;  // empty: first generated phase
};

/// A fully loaded and validated scenario: network, vehicles, derived path
/// quantities, generated phase set, mapping matrix and policy graph.
struct Scenario {
  RoadNetwork net;
  std::vector<VehiclePath> vehicles;
  PathAux aux;
  PhaseDoc doc;
  PhaseSet pset;
  MappingMatrix map;
  WindowFactors factors;
  PolicyGraph pgraph;
  int initial_phase = 0;

  void rebuild_derived();  // pset/map/pgraph/aux from net+vehicles+doc
};

struct ScenarioResult {
  std::optional<Scenario> scenario;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

struct ScenarioOverrides {
  std::optional<std::string> policy_mode;  // "full" | "semi" | "groups"
  std::optional<double> delta;
  std::optional<double> rho_yellow;
};

/// Parse phases.json and cross-validate against the network (serving links
/// exist, are controlled, and belong to the named intersection); attaches
/// served_by to the network's links.
std::vector<std::string> apply_phase_doc(const std::string& phases_doc,
                                         RoadNetwork& net, PhaseDoc& out);

/// Load network.json, vehicles.json and phases.json from a directory.
ScenarioResult load_scenario_dir(const std::string& dir,
                                 const ScenarioOverrides& ov = {});

}  // namespace ptnet
