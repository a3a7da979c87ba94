#pragma once

#include <string>
#include <vector>

#include "ptnet/exact.hpp"
#include "ptnet/lagrangian.hpp"
#include "ptnet/loader.hpp"
#include "ptnet/scenario.hpp"

namespace ptnet {

std::string history_csv(const std::vector<IterationRecord>& history);
/// history.csv rows with the timing column stripped (solution content only;
/// identical across worker counts).
std::string history_content(const std::vector<IterationRecord>& history);

std::string trajectories_csv(const TrajectorySet& traj, const RoadNetwork& net,
                             const std::vector<VehiclePath>& vehicles);
TrajectorySet parse_trajectories_csv(const std::string& text,
                                     const RoadNetwork& net,
                                     const std::vector<VehiclePath>& vehicles);

std::string plan_json(const SignalPlan& plan, const PhaseSet& pset);
SignalPlan parse_plan_json(const std::string& text, const PhaseSet& pset);

std::string moe_json(const MoeReport& moe);
std::string gamma_csv(const GammaField& gamma, const RoadNetwork& net);
std::string counts_json(const MilpCounts& counts);
std::string oracle_json(const OracleResult& r);

/// Time-space diagram (one per distinct vehicle path crossing a signal):
/// signal bands at each stop bar plus vehicle trajectories.
struct TimeSpaceDiagram {
  std::string key;  // "origin-destination"
  std::string svg;
  std::string csv;
};
std::vector<TimeSpaceDiagram> time_space_diagrams(
    const Scenario& sc, const SignalPlan& plan, const TrajectorySet& traj);

void write_file(const std::string& path, const std::string& content);
std::string read_file_or_throw(const std::string& path);

}  // namespace ptnet
