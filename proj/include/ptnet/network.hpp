#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ptnet {

using NodeId = int;

/// Sentinel for links without a storage limit.
inline constexpr int kNoStorageLimit = -1;

enum class Protection { Protected, Permissive };

/// Reference from a controlled link to a local phase granting it right of way.
struct ServingPhase {
  int local_phase = 0;
  Protection protection = Protection::Protected;
};

struct Link {
  NodeId from = 0;
  NodeId to = 0;
  int fftt = 1;           // free-flow travel time, whole seconds
  double sat_rate = 0.0;  // vehicles per second
  int storage = kNoStorageLimit;
  int intersection = -1;  // controlling intersection id, -1 for regular links
  std::vector<ServingPhase> served_by;  // filled in from the phase config

  bool controlled() const { return intersection >= 0; }
  bool has_storage_limit() const { return storage != kNoStorageLimit; }
};

/// Physical road graph plus the optimization horizon. Time is discretized to
/// 1-second steps; every time index below refers to whole seconds in [0, H).
struct RoadNetwork {
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  int horizon = 0;  // H

  /// Index of the link from->to, or -1.
  int link_between(NodeId from, NodeId to) const;
  std::vector<int> controlled_link_ids() const;
  /// Link processing order for the loaders: downstream before upstream when
  /// the road graph is acyclic, fixed id order otherwise.
  std::vector<int> discharge_order() const;
  void rebuild_index();

 private:
  std::map<std::pair<NodeId, NodeId>, int> index_;
};

struct VehiclePath {
  int vid = 0;
  int t0 = 0;                  // departure second
  std::vector<NodeId> nodes;   // origin ... destination
  std::vector<int> links;      // derived link ids, one per hop

  int hop_of_link(int link_id) const;  // -1 if the path does not use it
};

/// Auxiliary quantities derived from the fixed paths: earliest entries,
/// last-link markers, free-flow path times and the per-link FIFO order.
struct PathAux {
  // Indexed by position of the vehicle in the scenario's vehicle list.
  std::vector<std::vector<int>> earliest_entry;  // e(v, hop)
  std::vector<int> last_link;                    // link id carrying phi(v)=1
  std::vector<int> ff_path_time;                 // c(v), seconds
  // Per link id: vids ordered by (earliest entry, vid). Empty for links no
  // vehicle uses.
  std::vector<std::vector<int>> fifo_chain;

  /// f(v, v', link): true when both vehicles traverse the link and v is
  /// ordered before v'.
  bool fifo_before(int vid, int vid_other, int link_id) const;
};

struct ScenarioLoad {
  RoadNetwork net;
  std::vector<VehiclePath> vehicles;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Parse and validate network/vehicles documents (JSON text). All violations
/// are aggregated into ScenarioLoad::errors with field locations.
ScenarioLoad load_scenario(const std::string& network_doc,
                           const std::string& vehicles_doc);

PathAux derive_path_aux(const RoadNetwork& net,
                        const std::vector<VehiclePath>& vehicles);

}  // namespace ptnet
