#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbm/room.hpp"

namespace sbm::metrics {

// ---------------------------------------------------------------------------
// Coverage: inventory satisfaction over weighted required items and mutually
// exclusive alternative groups, minus an extraneous-category penalty.
// ---------------------------------------------------------------------------

struct InventoryItem {
  int required = 0;
  int cap = 0;        // counts above the cap are penalized (cap >= required)
  double weight = 0;  // 0 for optional items: allowed but not scored
};

struct InventoryGroup {
  std::map<int, int> alternatives;  // category -> required count
  double weight = 1.0;
};

struct InventorySpec {
  std::map<int, InventoryItem> items;  // category -> spec
  std::vector<InventoryGroup> groups;
  double gamma_extra = 0.05;  // penalty per extraneous category
  double gamma_over = 0.5;    // overfill penalty slope

  void validate() const;  // throws std::invalid_argument
};

// Default per-room-type inventory derived from the furniture programs:
// required items carry weight 2, optional ones weight 0, groups weight 2.
InventorySpec default_inventory(int room_type);

// Cov = (sum_i w_i s_i + sum_g w_g s_g - p_extra) / (sum_i w_i + sum_g w_g),
// clamped to [0, 1].
double coverage(const std::vector<Entity>& layout, const InventorySpec& spec);

// ---------------------------------------------------------------------------
// Navigability: door-to-target reachability on an inflated occupancy grid.
// ---------------------------------------------------------------------------

struct NavConfig {
  double resolution = 0.05;      // grid resolution, meters
  double agent_clearance = 0.25; // obstacle/wall inflation radius, meters
  double lambda = 0.25;          // detour weight in Nav = 100 (SR - lambda DF)
  bool targets_from_entities = true;  // default target rule: entity fronts
};

struct NavResult {
  double success_rate = 1.0;  // SR in [0,1]
  double detour_factor = 1.0; // DF >= 1 over reachable pairs
  double nav = 0.0;           // 100 * (SR - lambda * DF)
  int pairs = 0;
  int reachable = 0;
};

// A* over the 8-connected inflated grid (octile heuristic, sqrt(2) diagonal
// cost). Requires at least one door; with no targets the vacuous convention
// SR = 1, DF = 1 applies.
NavResult navigability(const RoomEnvelope& room, const std::vector<Entity>& layout,
                       const NavConfig& cfg);

// Grid path length between two world points; +inf when unreachable.
double astar_path_length(const geom::OccupancyGrid& grid, geom::Point2 start,
                         geom::Point2 goal);

// ---------------------------------------------------------------------------
// Overlap & clearance: spatial violations from exact polygon geometry.
// ---------------------------------------------------------------------------

struct OCWeights {
  double w_eof = 0.25;
  double w_goa = 0.25;
  double w_dci = 0.25;
  double w_wbv = 0.25;
  double door_clearance_depth = 0.9;  // meters, extruded into the room
};

struct OCResult {
  double eof = 0.0;  // fraction of entities intersecting another entity
  double goa = 0.0;  // total pairwise overlap area / room area
  double dci = 0.0;  // entity area inside door clearance rects, normalized
  double wbv = 0.0;  // entity area outside the room / total entity area
  double oc = 0.0;   // weighted sum, reported x100 as percent
};

OCResult overlap_clearance(const RoomEnvelope& room,
                           const std::vector<Entity>& layout,
                           const OCWeights& w);

// ---------------------------------------------------------------------------
// Batch scorer: per-room metrics plus aggregate mean and std, shaped like
// the benchmark table columns (Coverage, Nav, SR, DF, OC, latency).
// ---------------------------------------------------------------------------

struct LayoutScore {
  double coverage = 0.0;
  NavResult nav;
  OCResult oc;
};

LayoutScore score_layout(const RoomEnvelope& room,
                         const std::vector<Entity>& layout,
                         const InventorySpec& inventory, const NavConfig& nav_cfg,
                         const OCWeights& oc_weights);

nlohmann::ordered_json score_report(const std::vector<LayoutScore>& scores,
                                    const std::vector<double>& latencies = {});

}  // namespace sbm::metrics
