#include "sbm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sbm/geometry.hpp"
#include "sbm/rng.hpp"

namespace sbm::data {

using geom::Point2;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON conversion
// ---------------------------------------------------------------------------

namespace {

ordered_json point_to_json(Point2 p) { return ordered_json::array({p.x, p.y}); }

Point2 point_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

ordered_json room_to_json(const Room& r) {
  ordered_json j;
  j["room_type"] = r.envelope.room_type;
  ordered_json walls = ordered_json::array();
  for (const Wall& w : r.envelope.walls) {
    ordered_json jw;
    jw["x1"] = point_to_json(w.x1);
    jw["x2"] = point_to_json(w.x2);
    jw["thickness_in"] = w.thickness_in;
    jw["thickness_out"] = w.thickness_out;
    jw["condition"] = w.condition;
    jw["edge_id"] = w.edge_id;
    walls.push_back(jw);
  }
  j["walls"] = walls;
  auto opening_to_json = [](const Opening& o) {
    ordered_json jo;
    jo["edge_index"] = o.edge_index;
    jo["t"] = o.t;
    jo["width"] = o.width;
    jo["family"] = o.family;
    if (o.kind == OpeningKind::kDoor) jo["swing"] = o.swing;
    return jo;
  };
  ordered_json doors = ordered_json::array();
  for (const Opening& o : r.envelope.doors) doors.push_back(opening_to_json(o));
  j["doors"] = doors;
  ordered_json windows = ordered_json::array();
  for (const Opening& o : r.envelope.windows)
    windows.push_back(opening_to_json(o));
  j["windows"] = windows;
  ordered_json layout;
  layout["area"] = r.envelope.layout.area;
  layout["perimeter"] = r.envelope.layout.perimeter;
  layout["n_edges"] = r.envelope.layout.n_edges;
  layout["aspect_ratio"] = r.envelope.layout.aspect_ratio;
  layout["compactness"] = r.envelope.layout.compactness;
  j["layout"] = layout;
  ordered_json ents = ordered_json::array();
  for (const Entity& e : r.entities) {
    ordered_json je;
    je["kind"] = e.kind == EntityKind::kProp ? "prop" : "casework";
    je["category"] = e.category;
    je["edge_index"] = e.edge_index;
    je["t"] = e.t;
    je["delta"] = e.delta;
    je["width"] = e.width;
    je["depth"] = e.depth;
    je["rho"] = e.rho;
    je["extra"] = e.extra;
    ents.push_back(je);
  }
  j["entities"] = ents;
  return j;
}

Room room_from_json(const json& j) {
  Room r;
  r.envelope.room_type = j.at("room_type").get<int>();
  for (const auto& jw : j.at("walls")) {
    Wall w;
    w.x1 = point_from_json(jw.at("x1"));
    w.x2 = point_from_json(jw.at("x2"));
    w.thickness_in = jw.at("thickness_in").get<double>();
    w.thickness_out = jw.at("thickness_out").get<double>();
    w.condition = jw.at("condition").get<int>();
    w.edge_id = jw.at("edge_id").get<int>();
    r.envelope.walls.push_back(w);
  }
  auto opening_from_json = [](const json& jo, OpeningKind kind) {
    Opening o;
    o.kind = kind;
    o.edge_index = jo.at("edge_index").get<int>();
    o.t = jo.at("t").get<double>();
    o.width = jo.at("width").get<double>();
    o.family = jo.at("family").get<int>();
    if (kind == OpeningKind::kDoor) o.swing = jo.at("swing").get<int>();
    return o;
  };
  for (const auto& jo : j.at("doors"))
    r.envelope.doors.push_back(opening_from_json(jo, OpeningKind::kDoor));
  for (const auto& jo : j.at("windows"))
    r.envelope.windows.push_back(opening_from_json(jo, OpeningKind::kWindow));
  const auto& jl = j.at("layout");
  r.envelope.layout.area = jl.at("area").get<double>();
  r.envelope.layout.perimeter = jl.at("perimeter").get<double>();
  r.envelope.layout.n_edges = jl.at("n_edges").get<double>();
  r.envelope.layout.aspect_ratio = jl.at("aspect_ratio").get<double>();
  r.envelope.layout.compactness = jl.at("compactness").get<double>();
  for (const auto& je : j.at("entities")) {
    Entity e;
    e.kind = je.at("kind").get<std::string>() == "prop" ? EntityKind::kProp
                                                        : EntityKind::kCasework;
    e.category = je.at("category").get<int>();
    e.edge_index = je.at("edge_index").get<int>();
    e.t = je.at("t").get<double>();
    e.delta = je.at("delta").get<double>();
    e.width = je.at("width").get<double>();
    e.depth = je.at("depth").get<double>();
    e.rho = je.at("rho").get<double>();
    e.extra = je.at("extra").get<int>();
    r.entities.push_back(e);
  }
  return r;
}

ordered_json record_to_json(const RoomRecord& rec) {
  ordered_json j;
  j["schema_version"] = rec.schema_version;
  j["split"] = rec.split;
  j["seed"] = rec.seed;
  j["room"] = room_to_json(rec.room);
  return j;
}

RoomRecord record_from_json(const json& j) {
  RoomRecord rec;
  rec.schema_version = j.at("schema_version").get<int>();
  if (rec.schema_version != kSchemaVersion)
    throw std::runtime_error("unknown schema_version " +
                             std::to_string(rec.schema_version));
  rec.split = j.at("split").get<std::string>();
  rec.seed = j.at("seed").get<uint64_t>();
  rec.room = room_from_json(j.at("room"));
  return rec;
}

void save_rooms(const std::vector<RoomRecord>& records,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_rooms: cannot open " + path);
  for (const RoomRecord& rec : records) out << record_to_json(rec).dump() << "\n";
  if (!out) throw std::runtime_error("save_rooms: write failed for " + path);
}

std::vector<RoomRecord> load_rooms(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_rooms: cannot open " + path);
  std::vector<RoomRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      out.push_back(record_from_json(j));
    } catch (const std::exception& e) {
      throw std::runtime_error("load_rooms: " + path + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SynthConfig
// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
  if (type_weights.size() != static_cast<size_t>(kNumRoomTypes))
    throw std::invalid_argument("SynthConfig: need one weight per room type");
  double total = 0.0;
  for (double w : type_weights) {
    if (w < 0.0) throw std::invalid_argument("SynthConfig: negative weight");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("SynthConfig: all type weights zero");
  if (rect_weight < 0.0 || l_shape_weight < 0.0 ||
      rect_weight + l_shape_weight <= 0.0)
    throw std::invalid_argument("SynthConfig: bad shape weights");
  if (min_side > max_side || min_side <= 0.0)
    throw std::invalid_argument("SynthConfig: bad side range");
  if (optional_item_prob < 0.0 || optional_item_prob > 1.0)
    throw std::invalid_argument("SynthConfig: bad optional_item_prob");
}

void to_json(ordered_json& j, const SynthConfig& cfg) {
  j["type_weights"] = cfg.type_weights;
  j["rect_weight"] = cfg.rect_weight;
  j["l_shape_weight"] = cfg.l_shape_weight;
  j["min_side"] = cfg.min_side;
  j["max_side"] = cfg.max_side;
  j["optional_item_prob"] = cfg.optional_item_prob;
  j["door_clearance_depth"] = cfg.door_clearance_depth;
  j["seed"] = cfg.seed;
}

void from_json(const json& j, SynthConfig& cfg) {
  cfg.type_weights = j.value("type_weights", cfg.type_weights);
  cfg.rect_weight = j.value("rect_weight", cfg.rect_weight);
  cfg.l_shape_weight = j.value("l_shape_weight", cfg.l_shape_weight);
  cfg.min_side = j.value("min_side", cfg.min_side);
  cfg.max_side = j.value("max_side", cfg.max_side);
  cfg.optional_item_prob = j.value("optional_item_prob", cfg.optional_item_prob);
  cfg.door_clearance_depth =
      j.value("door_clearance_depth", cfg.door_clearance_depth);
  cfg.seed = j.value("seed", cfg.seed);
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

namespace {

struct SideRange {
  double lo, hi;
};

SideRange type_side_range(int room_type) {
  static const SideRange ranges[kNumRoomTypes] = {
      {3.0, 4.6},  // bedroom
      {2.0, 3.2},  // bathroom
      {3.0, 4.6},  // kitchen
      {4.0, 6.2},  // living
      {3.0, 4.6},  // dining
      {2.6, 4.0},  // office
      {1.8, 2.6},  // pantry
      {5.0, 6.5},  // garage
  };
  return ranges[room_type];
}

int pick_weighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double x = uniform(rng, 0.0, total);
  for (size_t i = 0; i < weights.size(); ++i) {
    x -= weights[i];
    if (x <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

std::vector<Point2> make_outline(Rng& rng, const SynthConfig& cfg,
                                 int room_type) {
  SideRange r = type_side_range(room_type);
  double lo = std::max(r.lo, cfg.min_side);
  double hi = std::min(r.hi, cfg.max_side);
  if (lo > hi) {
    lo = cfg.min_side;
    hi = cfg.max_side;
  }
  double w = uniform(rng, lo, hi);
  double h = uniform(rng, lo, hi);
  double ox = uniform(rng, 0.0, 8.0);  // exercise position normalization
  double oy = uniform(rng, 0.0, 8.0);
  bool l_shape =
      uniform(rng, 0.0, cfg.rect_weight + cfg.l_shape_weight) >= cfg.rect_weight;
  std::vector<Point2> pts;
  if (!l_shape || w < 2.4 || h < 2.4) {
    pts = {{ox, oy}, {ox + w, oy}, {ox + w, oy + h}, {ox, oy + h}};
  } else {
    // notch cut from the top-right corner
    double cx = w * uniform(rng, 0.35, 0.55);
    double cy = h * uniform(rng, 0.35, 0.55);
    pts = {{ox, oy},           {ox + w, oy},      {ox + w, oy + h - cy},
           {ox + w - cx, oy + h - cy}, {ox + w - cx, oy + h}, {ox, oy + h}};
  }
  return pts;
}

struct Placer {
  const RoomEnvelope& env;
  geom::Polygon poly;
  std::vector<geom::OrientedRect> placed;
  std::vector<geom::OrientedRect> keepout;  // door clearances
  std::vector<double> cursor;               // per-edge fill position, meters

  Placer(const RoomEnvelope& e, double clearance_depth)
      : env(e), poly(e.polygon()) {
    cursor.assign(env.walls.size(), 0.0);
    for (const Opening& d : env.doors) {
      const Wall& w = env.walls[d.edge_index];
      double len = geom::distance(w.x1, w.x2);
      keepout.push_back(geom::rect_from_wall_frame(
          poly, d.edge_index, d.t, clearance_depth / 2.0,
          d.width + 0.1, clearance_depth, 0.0));
      (void)len;
    }
  }

  bool collides(const geom::OrientedRect& r) const {
    if (geom::rect_outside_polygon_area(r, poly) > 1e-9) return true;
    for (const auto& other : placed)
      if (geom::rect_intersection_area(r, other) > 1e-12) return true;
    for (const auto& other : keepout)
      if (geom::rect_intersection_area(r, other) > 1e-12) return true;
    return false;
  }

  // Sequential packing along walls: entities fill each edge left to right
  // with a random gap, skipping door clearances. Returns false when no edge
  // can host the entity.
  bool place(Rng& rng, Entity& e) {
    double w = e.width, d = e.depth;
    // half-extents of the rotated footprint in the wall frame
    double c = std::abs(std::cos(e.rho)), s = std::abs(std::sin(e.rho));
    double half_along = 0.5 * (w * c + d * s);
    double half_into = 0.5 * (w * s + d * c);
    double gap = uniform(rng, 0.06, 0.25);
    double wall_gap = e.kind == EntityKind::kCasework
                          ? 0.0
                          : uniform(rng, 0.02, 0.12);
    int n_edges = static_cast<int>(env.walls.size());
    int start = uniform_int(rng, 0, n_edges - 1);
    for (int k = 0; k < n_edges; ++k) {
      int j = (start + k) % n_edges;
      const Wall& wall = env.walls[j];
      double len = geom::distance(wall.x1, wall.x2);
      double pos = std::max(cursor[j], 0.08) + half_along;
      for (int tries = 0; tries < 8; ++tries) {
        if (pos + half_along > len - 0.08) break;
        double t = pos / len;
        double delta = half_into + wall_gap;
        geom::OrientedRect rect =
            geom::rect_from_wall_frame(poly, j, t, delta, w, d, e.rho);
        if (!collides(rect)) {
          e.edge_index = j;
          e.t = t;
          e.delta = delta;
          placed.push_back(rect);
          cursor[j] = pos + half_along + gap;
          return true;
        }
        pos += std::max(0.3, half_along);  // step past the obstruction
      }
    }
    return false;
  }
};

// One attempt at a full room; empty optional on placement failure.
bool try_make_room(Rng& rng, const SynthConfig& cfg, int room_type, Room& out) {
  std::vector<Point2> outline = make_outline(rng, cfg, room_type);
  RoomEnvelope env;
  env.room_type = room_type;
  int n = static_cast<int>(outline.size());
  for (int i = 0; i < n; ++i) {
    Wall w;
    w.x1 = outline[i];
    w.x2 = outline[(i + 1) % n];
    w.thickness_in = uniform(rng, 0.0, 1.0) < 0.5 ? 0.09 : 0.12;
    w.thickness_out = uniform(rng, 0.0, 1.0) < 0.5 ? 0.12 : 0.20;
    w.condition = uniform_int(rng, 0, kNumWallConditions - 1);
    w.edge_id = i;
    env.walls.push_back(w);
  }

  // doors (>= 1), then windows; spans kept inside their edge
  auto place_opening = [&](OpeningKind kind, int family, double width,
                           int swing) -> bool {
    for (int attempt = 0; attempt < 50; ++attempt) {
      int j = uniform_int(rng, 0, n - 1);
      const Wall& w = env.walls[j];
      double len = geom::distance(w.x1, w.x2);
      if (len < width + 0.3) continue;
      double margin = (width / 2.0 + 0.1) / len;
      double t = uniform(rng, margin, 1.0 - margin);
      // avoid overlapping another opening on the same edge
      bool clash = false;
      auto spans_clash = [&](const Opening& o) {
        if (o.edge_index != j) return false;
        double lo1 = (t - 0.5 * width / len), hi1 = (t + 0.5 * width / len);
        double lo2 = o.t - 0.5 * o.width / len, hi2 = o.t + 0.5 * o.width / len;
        return hi1 + 0.05 > lo2 && hi2 + 0.05 > lo1;
      };
      for (const Opening& o : env.doors) clash = clash || spans_clash(o);
      for (const Opening& o : env.windows) clash = clash || spans_clash(o);
      if (clash) continue;
      Opening o;
      o.kind = kind;
      o.edge_index = j;
      o.t = t;
      o.width = width;
      o.family = family;
      o.swing = kind == OpeningKind::kDoor ? swing : 0;
      (kind == OpeningKind::kDoor ? env.doors : env.windows).push_back(o);
      return true;
    }
    return false;
  };

  bool garage = room_type == static_cast<int>(RoomType::kGarage);
  double door_w = garage ? uniform(rng, 2.4, 3.0) : uniform(rng, 0.8, 1.0);
  int door_family = garage ? 5 : uniform_int(rng, 0, kNumDoorFamilies - 2);
  if (!place_opening(OpeningKind::kDoor, door_family, door_w,
                     uniform_int(rng, 0, kNumDoorSwings - 1)))
    return false;
  if (!garage && uniform(rng, 0.0, 1.0) < 0.35)
    place_opening(OpeningKind::kDoor, uniform_int(rng, 0, kNumDoorFamilies - 2),
                  uniform(rng, 0.8, 1.0), uniform_int(rng, 0, kNumDoorSwings - 1));
  int n_windows = uniform_int(rng, 0, 2);
  for (int i = 0; i < n_windows; ++i)
    place_opening(OpeningKind::kWindow, uniform_int(rng, 0, kNumWindowFamilies - 1),
                  uniform(rng, 0.6, 1.4), 0);

  env.layout = derive_layout_scalars(env);

  // entity program: required items, groups, then optional items
  const FurnitureProgram& program = furniture_program(room_type);
  std::vector<int> categories;
  for (const ProgramItem& item : program.items) {
    int count = 0;
    if (item.required) {
      count = uniform_int(rng, std::max(1, item.min_count), item.max_count);
    } else if (uniform(rng, 0.0, 1.0) < cfg.optional_item_prob) {
      count = uniform_int(rng, std::max(1, item.min_count), item.max_count);
    }
    for (int c = 0; c < count; ++c) categories.push_back(item.category);
  }
  for (const ProgramGroup& grp : program.groups) {
    int pick = grp.alternatives[uniform_int(
        rng, 0, static_cast<int>(grp.alternatives.size()) - 1)];
    for (int c = 0; c < grp.count; ++c) categories.push_back(pick);
  }

  Placer placer(env, cfg.door_clearance_depth);
  Room room;
  room.envelope = env;
  // casework first (flush against walls), then props; matches canonical order
  std::stable_sort(categories.begin(), categories.end(), [](int a, int b) {
    bool ac = category_kind(a) == EntityKind::kCasework;
    bool bc = category_kind(b) == EntityKind::kCasework;
    return ac > bc;
  });
  for (int cat : categories) {
    Entity e;
    e.kind = category_kind(cat);
    e.category = cat;
    const CategorySize& cs = category_size(cat);
    e.width = uniform(rng, cs.width_min, cs.width_max);
    e.depth = uniform(rng, cs.depth_min, cs.depth_max);
    e.rho = 0.0;
    if (e.kind == EntityKind::kProp && uniform(rng, 0.0, 1.0) < 0.15)
      e.rho = uniform(rng, -0.3, 0.3);
    e.extra = uniform_int(rng, 0, kNumEntityExtras - 1);
    if (!placer.place(rng, e)) return false;
    room.entities.push_back(e);
  }
  room.entities = canonical_entity_order(room.entities);
  out = std::move(room);
  return true;
}

}  // namespace

std::vector<RoomRecord> synth_generate(const SynthConfig& cfg, int n) {
  cfg.validate();
  std::vector<RoomRecord> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    uint64_t room_seed = derive_seed(cfg.seed, static_cast<uint64_t>(i));
    Room room;
    bool ok = false;
    // regenerate with fresh derived seeds until a placement succeeds
    for (int retry = 0; retry < 1000 && !ok; ++retry) {
      Rng rng = make_rng(splitmix64(room_seed + retry));
      int room_type = pick_weighted(rng, cfg.type_weights);
      ok = try_make_room(rng, cfg, room_type, room);
    }
    if (!ok)
      throw std::runtime_error("synth_generate: placement failed for room " +
                               std::to_string(i));
    RoomRecord rec;
    rec.seed = room_seed;
    int bucket = static_cast<int>(derive_seed(cfg.seed ^ 0x5eedULL,
                                              static_cast<uint64_t>(i)) % 10);
    rec.split = bucket < 8 ? "train" : (bucket == 8 ? "val" : "test");
    rec.room = std::move(room);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string serialize_room_text(const Room& r) {
  const RoomEnvelope& env = r.envelope;
  std::ostringstream os;
  os << "room_type: " << room_type_names().at(env.room_type) << "\n";
  os << "layout: area=" << fmt(env.layout.area)
     << " perimeter=" << fmt(env.layout.perimeter)
     << " edges=" << static_cast<int>(env.layout.n_edges)
     << " aspect=" << fmt(env.layout.aspect_ratio)
     << " compactness=" << fmt(env.layout.compactness) << "\n";
  os << "walls:\n";
  for (size_t i = 0; i < env.walls.size(); ++i) {
    const Wall& w = env.walls[i];
    os << "  " << i << ": (" << fmt(w.x1.x) << "," << fmt(w.x1.y) << ")->("
       << fmt(w.x2.x) << "," << fmt(w.x2.y) << ") thickness=("
       << fmt(w.thickness_in) << "," << fmt(w.thickness_out)
       << ") condition=" << wall_condition_names().at(w.condition) << "\n";
  }
  auto dump_openings = [&](const char* label, const std::vector<Opening>& os_,
                           bool doors) {
    os << label << ":";
    if (os_.empty()) {
      os << " none\n";
      return;
    }
    os << "\n";
    for (size_t i = 0; i < os_.size(); ++i) {
      const Opening& o = os_[i];
      os << "  " << i << ": edge=" << o.edge_index << " t=" << fmt(o.t)
         << " width=" << fmt(o.width) << " family="
         << (doors ? door_family_names().at(o.family)
                   : window_family_names().at(o.family));
      if (doors) os << " swing=" << door_swing_names().at(o.swing);
      os << "\n";
    }
  };
  dump_openings("doors", env.doors, true);
  dump_openings("windows", env.windows, false);
  os << "entities:";
  if (r.entities.empty()) {
    os << " none\n";
    return os.str();
  }
  os << "\n";
  for (const Entity& e : canonical_entity_order(r.entities)) {
    os << "  " << (e.kind == EntityKind::kProp ? "prop" : "casework") << " "
       << entity_category_names().at(e.category) << " edge=" << e.edge_index
       << " t=" << fmt(e.t) << " delta=" << fmt(e.delta) << " size=("
       << fmt(e.width) << "," << fmt(e.depth) << ") rho=" << fmt(e.rho)
       << " extra=" << entity_extra_names().at(e.extra) << "\n";
  }
  return os.str();
}

}  // namespace sbm::data
