#include "sbm/room.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sbm {

using geom::kEps;
using geom::Point2;

const std::vector<std::string>& room_type_names() {
  static const std::vector<std::string> names = {
      "bedroom", "bathroom", "kitchen", "living",
      "dining",  "office",   "pantry",  "garage"};
  return names;
}

const std::vector<std::string>& entity_category_names() {
  static const std::vector<std::string> names = {
      "bed",          "nightstand",  "dresser",      "desk",
      "chair",        "sofa",        "coffee_table", "armchair",
      "bookshelf",    "tv_stand",    "dining_table", "wardrobe",
      "floor_lamp",   "plant",       "base_cabinet", "wall_cabinet",
      "tall_cabinet", "kitchen_island", "counter",   "vanity",
      "toilet",       "bathtub",     "shower",       "shelf_unit"};
  return names;
}

const std::vector<std::string>& wall_condition_names() {
  static const std::vector<std::string> names = {"interior", "exterior",
                                                 "load_bearing", "partition"};
  return names;
}

const std::vector<std::string>& door_family_names() {
  static const std::vector<std::string> names = {
      "single_swing", "double_swing", "sliding", "pocket", "french", "garage"};
  return names;
}

const std::vector<std::string>& window_family_names() {
  static const std::vector<std::string> names = {"fixed", "single_hung",
                                                 "casement", "sliding"};
  return names;
}

const std::vector<std::string>& door_swing_names() {
  static const std::vector<std::string> names = {"left_in", "left_out",
                                                 "right_in", "right_out"};
  return names;
}

const std::vector<std::string>& entity_extra_names() {
  static const std::vector<std::string> names = {"standard", "premium",
                                                 "custom", "builtin"};
  return names;
}

EntityKind category_kind(int category) {
  return category >= kFirstCaseworkCategory ? EntityKind::kCasework
                                            : EntityKind::kProp;
}

const CategorySize& category_size(int category) {
  static const std::vector<CategorySize> sizes = {
      {1.40, 1.80, 1.90, 2.10},  // bed
      {0.40, 0.55, 0.35, 0.50},  // nightstand
      {1.00, 1.40, 0.45, 0.55},  // dresser
      {1.10, 1.50, 0.55, 0.75},  // desk
      {0.45, 0.55, 0.45, 0.55},  // chair
      {1.80, 2.30, 0.85, 1.00},  // sofa
      {0.90, 1.20, 0.55, 0.70},  // coffee_table
      {0.70, 0.90, 0.70, 0.90},  // armchair
      {0.80, 1.00, 0.30, 0.40},  // bookshelf
      {1.20, 1.60, 0.40, 0.50},  // tv_stand
      {1.40, 1.80, 0.85, 1.00},  // dining_table
      {1.00, 1.40, 0.55, 0.65},  // wardrobe
      {0.30, 0.40, 0.30, 0.40},  // floor_lamp
      {0.35, 0.50, 0.35, 0.50},  // plant
      {0.60, 0.90, 0.58, 0.62},  // base_cabinet
      {0.60, 0.90, 0.30, 0.35},  // wall_cabinet
      {0.60, 0.80, 0.58, 0.62},  // tall_cabinet
      {1.20, 1.60, 0.80, 1.00},  // kitchen_island
      {1.20, 1.80, 0.58, 0.62},  // counter
      {0.80, 1.20, 0.50, 0.60},  // vanity
      {0.38, 0.45, 0.65, 0.75},  // toilet
      {1.50, 1.70, 0.70, 0.80},  // bathtub
      {0.80, 1.00, 0.80, 1.00},  // shower
      {0.70, 1.00, 0.35, 0.45},  // shelf_unit
  };
  return sizes.at(category);
}

geom::Polygon RoomEnvelope::polygon() const {
  std::vector<Point2> verts;
  verts.reserve(walls.size());
  for (const Wall& w : walls) verts.push_back(w.x1);
  return geom::Polygon(verts);
}

namespace {

void check_opening(const RoomEnvelope& env, const Opening& o, const char* what,
                   int idx, std::vector<Violation>& out) {
  std::ostringstream field;
  field << what << "[" << idx << "]";
  int n_edges = static_cast<int>(env.walls.size());
  if (o.edge_index < 0 || o.edge_index >= n_edges) {
    out.push_back({field.str() + ".edge_index", "out of [0, N_E)"});
    return;
  }
  if (o.t < 0.0 || o.t > 1.0)
    out.push_back({field.str() + ".t", "out of [0,1]"});
  if (!(o.width > 0.0)) out.push_back({field.str() + ".width", "must be > 0"});
  const Wall& w = env.walls[o.edge_index];
  double len = geom::distance(w.x1, w.x2);
  double lo = o.t * len - 0.5 * o.width;
  double hi = o.t * len + 0.5 * o.width;
  if (lo < -kEps || hi > len + kEps)
    out.push_back({field.str(), "opening span exceeds edge length"});
  int max_family = o.kind == OpeningKind::kDoor ? kNumDoorFamilies
                                                : kNumWindowFamilies;
  if (o.family < 0 || o.family >= max_family)
    out.push_back({field.str() + ".family", "unknown family id"});
  if (o.kind == OpeningKind::kDoor && (o.swing < 0 || o.swing >= kNumDoorSwings))
    out.push_back({field.str() + ".swing", "unknown swing id"});
}

}  // namespace

std::vector<Violation> validate_room(const Room& r) {
  std::vector<Violation> out;
  const RoomEnvelope& env = r.envelope;

  if (env.room_type < 0 || env.room_type >= kNumRoomTypes)
    out.push_back({"envelope.room_type", "unknown room type id"});
  if (env.walls.size() < 3) {
    out.push_back({"envelope.walls", "need at least 3 walls"});
    return out;
  }

  int n = static_cast<int>(env.walls.size());
  for (int i = 0; i < n; ++i) {
    const Wall& w = env.walls[i];
    std::ostringstream field;
    field << "walls[" << i << "]";
    if (geom::distance(w.x1, w.x2) < kEps)
      out.push_back({field.str(), "zero-length wall"});
    if (w.thickness_in < 0.0 || w.thickness_out < 0.0)
      out.push_back({field.str() + ".thickness", "must be >= 0"});
    if (w.condition < 0 || w.condition >= kNumWallConditions)
      out.push_back({field.str() + ".condition", "unknown condition id"});
    const Wall& next = env.walls[(i + 1) % n];
    if (geom::distance(w.x2, next.x1) > kEps)
      out.push_back({field.str(), "wall loop not closed at this wall"});
  }

  std::vector<Point2> verts;
  for (const Wall& w : env.walls) verts.push_back(w.x1);
  double area = geom::signed_area(verts);
  if (std::abs(area) < kEps) {
    out.push_back({"envelope.walls", "degenerate polygon"});
  } else if (area < 0.0) {
    out.push_back({"envelope.walls", "walls must be counter-clockwise"});
  } else {
    try {
      geom::Polygon poly(verts);
      LayoutScalars expect = derive_layout_scalars(env);
      auto close = [](double a, double b) { return std::abs(a - b) < 1e-6; };
      if (!close(expect.area, env.layout.area) ||
          !close(expect.perimeter, env.layout.perimeter) ||
          !close(expect.n_edges, env.layout.n_edges) ||
          !close(expect.aspect_ratio, env.layout.aspect_ratio) ||
          !close(expect.compactness, env.layout.compactness))
        out.push_back({"envelope.layout", "inconsistent with wall geometry"});
    } catch (const std::exception& e) {
      out.push_back({"envelope.walls", e.what()});
    }
  }

  for (size_t i = 0; i < env.doors.size(); ++i)
    check_opening(env, env.doors[i], "doors", static_cast<int>(i), out);
  for (size_t i = 0; i < env.windows.size(); ++i)
    check_opening(env, env.windows[i], "windows", static_cast<int>(i), out);

  for (size_t i = 0; i < r.entities.size(); ++i) {
    const Entity& e = r.entities[i];
    std::ostringstream field;
    field << "entities[" << i << "]";
    if (e.edge_index < 0 || e.edge_index >= n)
      out.push_back({field.str() + ".edge_index", "out of [0, N_E)"});
    if (e.t < 0.0 || e.t > 1.0)
      out.push_back({field.str() + ".t", "out of [0,1]"});
    if (!(e.width > 0.0) || !(e.depth > 0.0))
      out.push_back({field.str() + ".size", "must be > 0"});
    if (e.category < 0 || e.category >= kNumEntityCategories) {
      out.push_back({field.str() + ".category", "unknown category id"});
    } else if (category_kind(e.category) != e.kind) {
      out.push_back({field.str() + ".kind", "kind does not match category"});
    }
    if (e.kind == EntityKind::kCasework && e.rho != 0.0)
      out.push_back({field.str() + ".rho", "rho must be 0 for casework"});
    if (e.extra < 0 || e.extra >= kNumEntityExtras)
      out.push_back({field.str() + ".extra", "unknown extra id"});
  }
  return out;
}

LayoutScalars derive_layout_scalars(const RoomEnvelope& env) {
  geom::Polygon poly = env.polygon();
  LayoutScalars s;
  s.area = geom::polygon_area(poly);
  s.perimeter = 0.0;
  for (const Wall& w : env.walls) s.perimeter += geom::distance(w.x1, w.x2);
  s.n_edges = static_cast<double>(env.walls.size());
  geom::Point2 lo, hi;
  geom::polygon_bbox(poly, lo, hi);
  double w = hi.x - lo.x;
  double h = hi.y - lo.y;
  double long_side = std::max(w, h);
  double short_side = std::min(w, h);
  if (short_side < kEps)
    throw std::invalid_argument("derive_layout_scalars: degenerate bbox");
  s.aspect_ratio = long_side / short_side;
  s.compactness = geom::compactness(poly);
  return s;
}

Room normalize_room(const Room& r, NormalizationRecord& record) {
  geom::Polygon poly = r.envelope.polygon();
  Point2 lo, hi;
  geom::polygon_bbox(poly, lo, hi);
  double long_side = std::max(hi.x - lo.x, hi.y - lo.y);
  if (long_side < kEps)
    throw std::invalid_argument("normalize_room: degenerate bounding box");
  record.translation = lo;
  record.scale = 1.0 / long_side;

  Room out = r;
  double s = record.scale;
  for (Wall& w : out.envelope.walls) {
    w.x1 = (w.x1 - lo) * s;
    w.x2 = (w.x2 - lo) * s;
    w.thickness_in *= s;
    w.thickness_out *= s;
  }
  for (Opening& o : out.envelope.doors) o.width *= s;
  for (Opening& o : out.envelope.windows) o.width *= s;
  for (Entity& e : out.entities) {
    e.delta *= s;
    e.width *= s;
    e.depth *= s;
  }
  out.envelope.layout = derive_layout_scalars(out.envelope);
  return out;
}

Room denormalize_room(const Room& r, const NormalizationRecord& record) {
  Room out = r;
  double s = 1.0 / record.scale;
  Point2 t = record.translation;
  for (Wall& w : out.envelope.walls) {
    w.x1 = w.x1 * s + t;
    w.x2 = w.x2 * s + t;
    w.thickness_in *= s;
    w.thickness_out *= s;
  }
  for (Opening& o : out.envelope.doors) o.width *= s;
  for (Opening& o : out.envelope.windows) o.width *= s;
  for (Entity& e : out.entities) {
    e.delta *= s;
    e.width *= s;
    e.depth *= s;
  }
  out.envelope.layout = derive_layout_scalars(out.envelope);
  return out;
}

std::vector<Entity> canonical_entity_order(const std::vector<Entity>& entities) {
  std::vector<Entity> out = entities;
  std::stable_sort(out.begin(), out.end(), [](const Entity& a, const Entity& b) {
    bool a_prop = a.kind == EntityKind::kProp;
    bool b_prop = b.kind == EntityKind::kProp;
    if (a_prop != b_prop) return !a_prop;  // casework first
    if (a.edge_index != b.edge_index) return a.edge_index < b.edge_index;
    if (a.t != b.t) return a.t < b.t;
    if (a.category != b.category) return a.category < b.category;
    return a.delta < b.delta;
  });
  return out;
}

geom::OrientedRect entity_rect(const RoomEnvelope& env, const Entity& e) {
  return geom::rect_from_wall_frame(env.polygon(), e.edge_index, e.t, e.delta,
                                    e.width, e.depth, e.rho);
}

const FurnitureProgram& furniture_program(int room_type) {
  using C = EntityCategory;
  auto c = [](C cat) { return static_cast<int>(cat); };
  static const std::vector<FurnitureProgram> programs = [&] {
    std::vector<FurnitureProgram> p(kNumRoomTypes);
    // bedroom
    p[0].items = {{c(C::kBed), 1, 1, true},
                  {c(C::kNightstand), 1, 2, true},
                  {c(C::kDresser), 0, 1, false},
                  {c(C::kDesk), 0, 1, false},
                  {c(C::kWardrobe), 0, 1, false},
                  {c(C::kPlant), 0, 1, false}};
    // bathroom
    p[1].items = {{c(C::kToilet), 1, 1, true},
                  {c(C::kVanity), 1, 1, true},
                  {c(C::kShelfUnit), 0, 1, false}};
    p[1].groups = {{{c(C::kBathtub), c(C::kShower)}, 1}};
    // kitchen
    p[2].items = {{c(C::kBaseCabinet), 2, 4, true},
                  {c(C::kCounter), 1, 1, true},
                  {c(C::kWallCabinet), 0, 2, false},
                  {c(C::kTallCabinet), 0, 1, false}};
    // living
    p[3].items = {{c(C::kSofa), 1, 1, true},
                  {c(C::kCoffeeTable), 1, 1, true},
                  {c(C::kTvStand), 0, 1, false},
                  {c(C::kArmchair), 0, 2, false},
                  {c(C::kBookshelf), 0, 1, false},
                  {c(C::kFloorLamp), 0, 1, false}};
    // dining
    p[4].items = {{c(C::kDiningTable), 1, 1, true},
                  {c(C::kChair), 2, 4, true},
                  {c(C::kShelfUnit), 0, 1, false},
                  {c(C::kPlant), 0, 1, false}};
    // office
    p[5].items = {{c(C::kDesk), 1, 1, true},
                  {c(C::kChair), 1, 1, true},
                  {c(C::kBookshelf), 0, 2, false},
                  {c(C::kShelfUnit), 0, 1, false},
                  {c(C::kPlant), 0, 1, false}};
    // pantry
    p[6].items = {{c(C::kShelfUnit), 1, 2, true},
                  {c(C::kBaseCabinet), 0, 1, false},
                  {c(C::kWallCabinet), 0, 1, false}};
    // garage
    p[7].items = {{c(C::kShelfUnit), 1, 1, true},
                  {c(C::kBaseCabinet), 0, 2, false},
                  {c(C::kTallCabinet), 0, 1, false}};
    return p;
  }();
  return programs.at(room_type);
}

}  // namespace sbm
