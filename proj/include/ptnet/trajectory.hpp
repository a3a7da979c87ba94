#pragma once

#include <vector>

namespace ptnet {

/// One link traversal: the vehicle occupies the link during [entry, exit);
/// exit - entry - fftt seconds of that span are spent waiting at the
/// downstream end.
struct TrajLeg {
  int link = -1;
  int entry = 0;
  int exit = 0;
};

struct VehicleTrajectory {
  int vid = 0;
  int t0 = 0;
  std::vector<TrajLeg> legs;
  int arrival = -1;  // second the destination is reached; -1 if stuck

  bool arrived() const { return arrival >= 0; }
  /// Wait at the origin node before the first link admits the vehicle.
  int origin_wait() const {
    return legs.empty() ? 0 : legs.front().entry - t0;
  }
};

struct TrajectorySet {
  std::vector<VehicleTrajectory> vehicles;
};

/// Vehicles physically on the link at second t, including vehicles waiting at
/// its downstream end.
int occupancy(const TrajectorySet& traj, int link_id, int t);

}  // namespace ptnet
