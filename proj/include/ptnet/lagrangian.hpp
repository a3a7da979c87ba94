#pragma once

#include <vector>

#include "ptnet/loader.hpp"
#include "ptnet/phases.hpp"
#include "ptnet/ptgraph.hpp"

namespace ptnet {

class WorkerPool;
struct Scenario;

enum class UpdateRule {
  Monotone,          // lam += max(0, theta * grad): nondecreasing
  ProjectedSubgradient,  // lam = max(0, lam + theta * grad)
};

/// grad(link, t) = controlled-link entries of the customized loading at t
/// minus the plan-implied capacity at t (window factor, with the shared-link
/// continuation, times the saturation rate).
MultiplierField subgradient(const TrajectorySet& customized,
                            const SignalPlan& plan, const MappingMatrix& map,
                            const RoadNetwork& net,
                            const WindowFactors& factors,
                            WorkerPool* pool = nullptr);

/// One step-7 update with theta = 1/(n+1).
MultiplierField update_multipliers(const MultiplierField& lam,
                                   const MultiplierField& grad, int n,
                                   UpdateRule rule, WorkerPool* pool = nullptr);

struct IterationRecord {
  int n = 0;
  double l11 = 0.0;
  double l12 = 0.0;
  double lb = 0.0;
  double ub = 0.0;       // +inf when the loading exhausted the horizon
  double best_ub = 0.0;  // nonincreasing
  double gap = 0.0;      // best_ub - max LB so far
  double theta = 0.0;
  double ms_per_task = 0.0;  // mean wall ms of the iteration's four tasks
};

struct SolveConfig {
  int max_iter = 200;
  double gap_tol = 0.01;  // relative to best_ub, absolute floor 1 s
  UpdateRule rule = UpdateRule::ProjectedSubgradient;
  int workers = 1;
  MaxGreenMode max_green = MaxGreenMode::Ignore;
};

struct SolveResult {
  bool has_solution = false;  // some iteration produced a feasible loading
  SignalPlan best_plan;
  TrajectorySet best_traj;
  MoeReport best_moe;
  double best_ub = 0.0;
  double max_lb = 0.0;
  std::vector<IterationRecord> history;
  MultiplierField multipliers;
  // The reported LB is approximate (the vehicle subproblem is loaded
  // greedily); the lambda=0 iteration's LB is the certified floor.
  double lb_at_lambda0 = 0.0;
};

SolveResult solve(const Scenario& sc, const SolveConfig& cfg);

}  // namespace ptnet
