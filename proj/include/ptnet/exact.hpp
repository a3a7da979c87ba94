#pragma once

#include <map>
#include <string>
#include <vector>

#include "ptnet/loader.hpp"
#include "ptnet/scenario.hpp"

namespace ptnet {

struct MilpVar {
  std::string name;
  char kind = 'x';  // 'x' traversal, 'w' waiting, 'y' transition arc, 'z' tail
  int vehicle = -1;  // index into the vehicle list (x, w)
  int link = -1;     // x
  int node = -1;     // w
  int t = -1;        // x: entry second; w: waiting second; y/z: tau
  int arc = -1;      // y/z: index into MilpInstance::arcs
};

struct MilpRow {
  std::string family;  // cap3p cap4 storage5 fifo6 vconserve7 pconserve8
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (var index, coefficient)
  char sense = 'L';                           // 'L' (<=) or 'E' (=)
  double rhs = 0.0;
  int link = -1;
  int t = -1;
};

struct MilpCounts {
  int rows = 0;
  int cols = 0;
  long long nonzeros = 0;
  std::map<std::string, std::pair<int, long long>> by_family;  // rows, nnz
};

/// Variable registry, objective and constraint rows of the full formulation.
/// x variables are instantiated only on each vehicle's own path links within
/// its feasible time window.
struct MilpInstance {
  std::vector<MilpVar> vars;
  std::map<std::string, int> var_index;
  std::vector<double> objective;  // per variable
  std::vector<MilpRow> rows;
  std::vector<PhaseTimeArc> arcs;  // y/z arc definitions
  std::vector<int> arc_state;      // source policy state per arc
  int horizon = 0;

  MilpCounts counts() const;
};

struct MilpBuild {
  bool ok = false;
  MilpInstance instance;
  std::string refusal;  // set when the projected size exceeds the cap
};

/// Assemble the MILP over the scenario at the given horizon. Refuses (with
/// projected counts) when the variable count would exceed var_cap.
MilpBuild build_milp(const Scenario& sc, int horizon,
                     long long var_cap = 2'000'000);

/// CPLEX-LP text; byte-identical for identical scenarios.
std::string to_lp_text(const MilpInstance& inst);

struct CheckResult {
  std::vector<Violation> violations;
  double objective = 0.0;
};

/// Residual check of every row against a full assignment.
CheckResult check_solution(const MilpInstance& inst,
                           const std::vector<double>& assignment);

/// Encode a loading + plan into an assignment over the instance's registry.
/// Throws std::invalid_argument if the solution uses a variable outside the
/// registry (e.g. a trajectory that violates its own time windows).
std::vector<double> encode_solution(const MilpInstance& inst,
                                    const Scenario& sc,
                                    const TrajectorySet& traj,
                                    const SignalPlan& plan);

struct OracleLimits {
  int max_phases = 4;
  int max_horizon = 60;
  int max_vehicles = 8;
  long long node_cap = 5'000'000;
};

struct OracleResult {
  enum class Status { Ok, Refused, Infeasible } status = Status::Refused;
  double objective = 0.0;  // delay + transitions
  int delay = 0;
  int transitions = 0;
  SignalPlan plan;
  long long nodes = 0;
  std::string reason;
};

/// Exhaustive search over all signal plans (depth-first in lexicographic
/// order, with sound lower-bound and dominance pruning), each candidate
/// evaluated by the standard loading. Exact within the configured limits.
OracleResult brute_force_optimum(const Scenario& sc, int horizon,
                                 const OracleLimits& limits = {},
                                 MaxGreenMode max_green = MaxGreenMode::Ignore);

}  // namespace ptnet
