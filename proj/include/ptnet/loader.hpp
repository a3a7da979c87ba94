#pragma once

#include <string>
#include <vector>

#include "ptnet/network.hpp"
#include "ptnet/ptgraph.hpp"
#include "ptnet/trajectory.hpp"

namespace ptnet {

struct LoadingResult {
  bool feasible = false;
  TrajectorySet traj;
  std::vector<int> stuck;      // vids not at their destination by H
  double price_sum = 0.0;      // accrued lambda prices (customized loading)
};

/// Feasible dynamic network loading under a signal plan: per second, each
/// link admits vehicles in FIFO order against its gamma-scaled saturation
/// credit and the downstream storage. Vehicles blocked by red or by a full
/// link wait in place.
LoadingResult standard_dnl(const RoadNetwork& net,
                           const std::vector<VehiclePath>& vehicles,
                           const PathAux& aux, const SignalPlan& plan,
                           const MappingMatrix& map,
                           const WindowFactors& factors);

/// Vehicle-subproblem loading: controlled links lose their capacity limit and
/// instead charge lambda(link, t) per entry; regular capacity, storage and
/// FIFO still bind.
LoadingResult customized_dnl(const RoadNetwork& net,
                             const std::vector<VehiclePath>& vehicles,
                             const PathAux& aux, const MultiplierField& lam,
                             const MappingMatrix& map);

/// L1^1 value of a customized loading: total path delay plus accrued prices.
/// +inf when the loading is infeasible.
double l11_value(const LoadingResult& loading,
                 const std::vector<VehiclePath>& vehicles, const PathAux& aux);

struct IntersectionMoe {
  int id = 0;
  int arrivals_during_green = 0;
  int arrivals_during_non_green = 0;
};

struct MoeReport {
  int total_travel_time = 0;
  int total_delay = 0;
  int transitions = 0;
  double objective = 0.0;  // total_delay + transitions
  std::vector<IntersectionMoe> per_intersection;
  std::vector<std::pair<int, int>> per_vehicle_delay;  // (vid, delay)
  int max_delay = 0;
};

MoeReport compute_moe(const TrajectorySet& traj, const SignalPlan& plan,
                      const RoadNetwork& net, const MappingMatrix& map,
                      const std::vector<VehiclePath>& vehicles,
                      const PathAux& aux);

struct Violation {
  std::string constraint;  // cap3p | cap4 | storage5 | fifo6 | vconserve7
  int link = -1;
  int t = -1;
  std::vector<int> vehicles;
  std::string detail;
};

/// Checks capacity (gamma*SR per second, aggregated by the same credit rule
/// the loaders use), storage, FIFO and path conservation. Violations are
/// data, not errors.
std::vector<Violation> validate_feasible(const TrajectorySet& traj,
                                         const SignalPlan& plan,
                                         const RoadNetwork& net,
                                         const PathAux& aux,
                                         const MappingMatrix& map,
                                         const WindowFactors& factors,
                                         const std::vector<VehiclePath>& vehicles);

}  // namespace ptnet
