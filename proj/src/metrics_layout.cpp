#include "sbm/metrics_layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace sbm::metrics {

using geom::OccupancyGrid;
using geom::OrientedRect;
using geom::Point2;

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

void InventorySpec::validate() const {
  double total = 0.0;
  for (const auto& [cat, item] : items) {
    (void)cat;
    if (item.weight < 0.0)
      throw std::invalid_argument("InventorySpec: negative item weight");
    if (item.cap < item.required)
      throw std::invalid_argument("InventorySpec: cap below required");
    total += item.weight;
  }
  for (const auto& g : groups) {
    if (g.weight < 0.0)
      throw std::invalid_argument("InventorySpec: negative group weight");
    total += g.weight;
  }
  if (total <= 0.0)
    throw std::invalid_argument("InventorySpec: all weights zero");
  if (gamma_extra < 0.0 || gamma_over < 0.0)
    throw std::invalid_argument("InventorySpec: negative penalty rate");
}

InventorySpec default_inventory(int room_type) {
  const FurnitureProgram& program = furniture_program(room_type);
  InventorySpec spec;
  for (const ProgramItem& item : program.items) {
    InventoryItem inv;
    inv.required = item.required ? std::max(1, item.min_count) : 0;
    inv.cap = std::max(item.max_count, inv.required);
    inv.weight = item.required ? 2.0 : 0.0;
    spec.items[item.category] = inv;
  }
  for (const ProgramGroup& g : program.groups) {
    InventoryGroup group;
    for (int cat : g.alternatives) group.alternatives[cat] = g.count;
    group.weight = 2.0;
    spec.groups.push_back(group);
  }
  return spec;
}

double coverage(const std::vector<Entity>& layout, const InventorySpec& spec) {
  spec.validate();
  std::map<int, int> counts;
  for (const Entity& e : layout) counts[e.category] += 1;

  double weight_sum = 0.0;
  double score_sum = 0.0;
  for (const auto& [cat, item] : spec.items) {
    weight_sum += item.weight;
    if (item.weight == 0.0) continue;
    int n = counts.count(cat) ? counts.at(cat) : 0;
    double s = 0.0;
    if (item.required > 0) {
      s = static_cast<double>(std::min(n, item.required)) / item.required;
      s -= spec.gamma_over * std::max(0, n - item.cap) /
           static_cast<double>(item.required);
    } else {
      s = 1.0 - spec.gamma_over * std::max(0, n - item.cap);
    }
    score_sum += item.weight * std::clamp(s, 0.0, 1.0);
  }
  for (const InventoryGroup& g : spec.groups) {
    weight_sum += g.weight;
    double best = 0.0;
    for (const auto& [cat, req] : g.alternatives) {
      int n = counts.count(cat) ? counts.at(cat) : 0;
      double s = req > 0 ? static_cast<double>(std::min(n, req)) / req : 1.0;
      best = std::max(best, s);
    }
    score_sum += g.weight * std::clamp(best, 0.0, 1.0);
  }

  // extraneous categories: not in items and not a group alternative
  std::set<int> known;
  for (const auto& [cat, item] : spec.items) {
    (void)item;
    known.insert(cat);
  }
  for (const auto& g : spec.groups)
    for (const auto& [cat, req] : g.alternatives) {
      (void)req;
      known.insert(cat);
    }
  int extras = 0;
  for (const auto& [cat, n] : counts) {
    (void)n;
    if (!known.count(cat)) ++extras;
  }
  double p_extra = spec.gamma_extra * extras;

  double cov = (score_sum - p_extra) / weight_sum;
  return std::clamp(cov, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Navigability
// ---------------------------------------------------------------------------

double astar_path_length(const OccupancyGrid& grid, Point2 start, Point2 goal) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int sx, sy, gx, gy;
  if (!grid.locate(start, sx, sy) || !grid.locate(goal, gx, gy)) return kInf;
  if (grid.is_blocked(sx, sy) || grid.is_blocked(gx, gy)) return kInf;

  const int nx = grid.nx, ny = grid.ny;
  auto idx = [nx](int x, int y) { return y * nx + x; };
  std::vector<double> g_cost(static_cast<size_t>(nx) * ny, kInf);
  std::vector<uint8_t> closed(static_cast<size_t>(nx) * ny, 0);

  auto octile = [&](int x, int y) {
    double dx = std::abs(x - gx), dy = std::abs(y - gy);
    return std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy);
  };

  // (f, g, cell) with deterministic tie-breaking on g then cell index
  using Item = std::tuple<double, double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
  g_cost[idx(sx, sy)] = 0.0;
  open.emplace(octile(sx, sy), 0.0, idx(sx, sy));

  static const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    auto [f, g, cell] = open.top();
    open.pop();
    (void)f;
    if (closed[cell]) continue;
    closed[cell] = 1;
    int cx = cell % nx, cy = cell / nx;
    if (cx == gx && cy == gy) return g * grid.resolution;
    for (int k = 0; k < 8; ++k) {
      int x = cx + dx8[k], y = cy + dy8[k];
      if (x < 0 || x >= nx || y < 0 || y >= ny) continue;
      if (grid.is_blocked(x, y)) continue;
      bool diagonal = k >= 4;
      if (diagonal &&
          (grid.is_blocked(cx + dx8[k], cy) || grid.is_blocked(cx, cy + dy8[k])))
        continue;  // no corner cutting
      double step = diagonal ? std::sqrt(2.0) : 1.0;
      double ng = g + step;
      if (ng < g_cost[idx(x, y)] - 1e-12) {
        g_cost[idx(x, y)] = ng;
        open.emplace(ng + octile(x, y), ng, idx(x, y));
      }
    }
  }
  return kInf;
}

namespace {

// Door start point: door center pushed into the room past the inflated wall
// band. Entity target: front-center point, one clearance off the footprint.
Point2 door_start_point(const geom::Polygon& poly, const Opening& door,
                        const NavConfig& cfg) {
  OrientedRect probe = geom::rect_from_wall_frame(
      poly, door.edge_index, door.t,
      cfg.agent_clearance + 2.0 * cfg.resolution, 0.1, 0.1, 0.0);
  return probe.center;
}

Point2 entity_target_point(const geom::Polygon& poly, const Entity& e,
                           const NavConfig& cfg) {
  OrientedRect rect = geom::rect_from_wall_frame(poly, e.edge_index, e.t,
                                                 e.delta, e.width, e.depth,
                                                 e.rho);
  double a = rect.angle;
  Point2 front{-std::sin(a), std::cos(a)};  // local +depth direction
  double offset = 0.5 * rect.depth + cfg.agent_clearance + 2.0 * cfg.resolution;
  return rect.center + front * offset;
}

}  // namespace

NavResult navigability(const RoomEnvelope& room, const std::vector<Entity>& layout,
                       const NavConfig& cfg) {
  if (room.doors.empty())
    throw std::invalid_argument("navigability: room has no door");
  geom::Polygon poly = room.polygon();

  std::vector<OrientedRect> obstacles;
  for (const Entity& e : layout) obstacles.push_back(entity_rect(room, e));
  OccupancyGrid grid =
      geom::rasterize(poly, obstacles, cfg.resolution, cfg.agent_clearance);
  // straight-line fallback grid: same room, no obstacles
  OccupancyGrid empty_grid =
      geom::rasterize(poly, {}, cfg.resolution, cfg.agent_clearance);

  std::vector<Point2> starts;
  for (const Opening& d : room.doors) starts.push_back(door_start_point(poly, d, cfg));
  std::vector<Point2> targets;
  if (cfg.targets_from_entities)
    for (const Entity& e : layout)
      targets.push_back(entity_target_point(poly, e, cfg));

  NavResult res;
  res.pairs = static_cast<int>(starts.size() * targets.size());
  if (res.pairs == 0) {  // vacuous convention
    res.success_rate = 1.0;
    res.detour_factor = 1.0;
    res.nav = 100.0 * (1.0 - cfg.lambda * 1.0);
    return res;
  }

  double df_sum = 0.0;
  for (const Point2& s : starts) {
    for (const Point2& t : targets) {
      double len = astar_path_length(grid, s, t);
      if (!std::isfinite(len)) continue;
      ++res.reachable;
      double straight;
      if (geom::segment_inside_polygon(s, t, poly)) {
        straight = geom::distance(s, t);
      } else {
        straight = astar_path_length(empty_grid, s, t);
        if (!std::isfinite(straight)) straight = geom::distance(s, t);
      }
      if (straight < cfg.resolution) straight = cfg.resolution;
      df_sum += std::max(1.0, len / straight);
    }
  }
  res.success_rate = static_cast<double>(res.reachable) / res.pairs;
  res.detour_factor = res.reachable > 0 ? df_sum / res.reachable : 1.0;
  res.nav = 100.0 * (res.success_rate - cfg.lambda * res.detour_factor);
  return res;
}

// ---------------------------------------------------------------------------
// Overlap & clearance
// ---------------------------------------------------------------------------

OCResult overlap_clearance(const RoomEnvelope& room,
                           const std::vector<Entity>& layout,
                           const OCWeights& w) {
  OCResult res;
  geom::Polygon poly = room.polygon();
  double room_area = geom::polygon_area(poly);

  std::vector<OrientedRect> rects;
  for (const Entity& e : layout) rects.push_back(entity_rect(room, e));
  size_t n = rects.size();

  // EOF + GOA from pairwise intersections
  std::vector<bool> hit(n, false);
  double overlap_area = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double a = geom::rect_intersection_area(rects[i], rects[j]);
      if (a > geom::kEps) {
        hit[i] = hit[j] = true;
        overlap_area += a;
      }
    }
  }
  if (n > 0) {
    int hits = 0;
    for (bool h : hit) hits += h ? 1 : 0;
    res.eof = static_cast<double>(hits) / static_cast<double>(n);
  }
  res.goa = std::clamp(overlap_area / room_area, 0.0, 1.0);

  // DCI: entity area inside door clearance rectangles
  double clearance_area_sum = 0.0;
  double intrusion = 0.0;
  for (const Opening& d : room.doors) {
    OrientedRect clearance = geom::rect_from_wall_frame(
        poly, d.edge_index, d.t, w.door_clearance_depth / 2.0, d.width,
        w.door_clearance_depth, 0.0);
    clearance_area_sum += clearance.area();
    for (const OrientedRect& r : rects)
      intrusion += geom::rect_intersection_area(r, clearance);
  }
  if (clearance_area_sum > 0.0)
    res.dci = std::clamp(intrusion / clearance_area_sum, 0.0, 1.0);

  // WBV: entity area outside the room polygon
  double entity_area_sum = 0.0;
  double outside = 0.0;
  for (const OrientedRect& r : rects) {
    entity_area_sum += r.area();
    outside += geom::rect_outside_polygon_area(r, poly);
  }
  if (entity_area_sum > 0.0)
    res.wbv = std::clamp(outside / entity_area_sum, 0.0, 1.0);

  res.oc = 100.0 * (w.w_eof * res.eof + w.w_goa * res.goa + w.w_dci * res.dci +
                    w.w_wbv * res.wbv);
  return res;
}

// ---------------------------------------------------------------------------
// Batch scoring
// ---------------------------------------------------------------------------

LayoutScore score_layout(const RoomEnvelope& room,
                         const std::vector<Entity>& layout,
                         const InventorySpec& inventory, const NavConfig& nav_cfg,
                         const OCWeights& oc_weights) {
  LayoutScore s;
  s.coverage = coverage(layout, inventory);
  s.nav = navigability(room, layout, nav_cfg);
  s.oc = overlap_clearance(room, layout, oc_weights);
  return s;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  if (xs.empty()) return ms;
  for (double x : xs) ms.mean += x;
  ms.mean /= xs.size();
  for (double x : xs) ms.stddev += (x - ms.mean) * (x - ms.mean);
  ms.stddev = std::sqrt(ms.stddev / xs.size());
  return ms;
}

nlohmann::ordered_json stat_json(const std::vector<double>& xs) {
  MeanStd ms = mean_std(xs);
  return nlohmann::ordered_json{{"mean", ms.mean}, {"std", ms.stddev}};
}

}  // namespace

nlohmann::ordered_json score_report(const std::vector<LayoutScore>& scores,
                                    const std::vector<double>& latencies) {
  std::vector<double> cov, nav, sr, df, oc;
  nlohmann::ordered_json rooms = nlohmann::ordered_json::array();
  for (const LayoutScore& s : scores) {
    cov.push_back(s.coverage);
    nav.push_back(s.nav.nav);
    sr.push_back(s.nav.success_rate);
    df.push_back(s.nav.detour_factor);
    oc.push_back(s.oc.oc);
    rooms.push_back(nlohmann::ordered_json{
        {"coverage", s.coverage},
        {"nav", s.nav.nav},
        {"sr", s.nav.success_rate},
        {"df", s.nav.detour_factor},
        {"eof", s.oc.eof},
        {"goa", s.oc.goa},
        {"dci", s.oc.dci},
        {"wbv", s.oc.wbv},
        {"oc", s.oc.oc},
    });
  }
  nlohmann::ordered_json report;
  report["n_rooms"] = scores.size();
  report["coverage"] = stat_json(cov);
  report["nav"] = stat_json(nav);
  report["sr"] = stat_json(sr);
  report["df"] = stat_json(df);
  report["oc"] = stat_json(oc);
  if (!latencies.empty()) report["latency_seconds"] = stat_json(latencies);
  report["rooms"] = rooms;
  return report;
}

}  // namespace sbm::metrics
