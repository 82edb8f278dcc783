#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sbm/geometry.hpp"

namespace sbm {

// ---------------------------------------------------------------------------
// Fixed categorical vocabularies. These are shipped as part of the artifact
// so that tokenizer schemas and prediction heads are well-defined.
// ---------------------------------------------------------------------------

enum class RoomType : int {
  kBedroom = 0,
  kBathroom,
  kKitchen,
  kLiving,
  kDining,
  kOffice,
  kPantry,
  kGarage,
};
constexpr int kNumRoomTypes = 8;

enum class EntityKind : int { kProp = 0, kCasework = 1 };

// 24 entity categories: 14 props (free furniture, rotatable) followed by
// 10 casework (wall-fixed fixtures and cabinetry).
enum class EntityCategory : int {
  kBed = 0,
  kNightstand,
  kDresser,
  kDesk,
  kChair,
  kSofa,
  kCoffeeTable,
  kArmchair,
  kBookshelf,
  kTvStand,
  kDiningTable,
  kWardrobe,
  kFloorLamp,
  kPlant,
  kBaseCabinet,  // casework starts here
  kWallCabinet,
  kTallCabinet,
  kKitchenIsland,
  kCounter,
  kVanity,
  kToilet,
  kBathtub,
  kShower,
  kShelfUnit,
};
constexpr int kNumEntityCategories = 24;
constexpr int kFirstCaseworkCategory = 14;

constexpr int kNumWallConditions = 4;   // interior, exterior, load_bearing, partition
constexpr int kNumDoorFamilies = 6;     // single_swing, double_swing, sliding, pocket, french, garage
constexpr int kNumWindowFamilies = 4;   // fixed, single_hung, casement, sliding
constexpr int kNumDoorSwings = 4;       // left_in, left_out, right_in, right_out
constexpr int kNumEntityExtras = 4;     // standard, premium, custom, builtin

const std::vector<std::string>& room_type_names();
const std::vector<std::string>& entity_category_names();
const std::vector<std::string>& wall_condition_names();
const std::vector<std::string>& door_family_names();
const std::vector<std::string>& window_family_names();
const std::vector<std::string>& door_swing_names();
const std::vector<std::string>& entity_extra_names();

EntityKind category_kind(int category);

// Typical footprint (width, depth) in meters per category, used by the
// synthetic generator and for sanity ranges at decode time.
struct CategorySize {
  double width_min, width_max;
  double depth_min, depth_max;
};
const CategorySize& category_size(int category);

// ---------------------------------------------------------------------------
// Domain objects
// ---------------------------------------------------------------------------

struct Wall {
  geom::Point2 x1;
  geom::Point2 x2;
  double thickness_in = 0.1;
  double thickness_out = 0.1;
  int condition = 0;  // wall condition id
  int edge_id = 0;    // discrete edge identifier (index within the room)
};

enum class OpeningKind : int { kDoor = 0, kWindow = 1 };

struct Opening {
  OpeningKind kind = OpeningKind::kDoor;
  int edge_index = 0;
  double t = 0.5;      // normalized position along the edge
  double width = 0.9;  // meters
  int family = 0;      // door family or window family id
  int swing = 0;       // doors only
};

struct Entity {
  EntityKind kind = EntityKind::kProp;
  int category = 0;
  int edge_index = 0;
  double t = 0.5;      // normalized position along the supporting edge
  double delta = 0.0;  // signed lateral offset from the wall into the room
  double width = 1.0;  // along the wall direction
  double depth = 1.0;  // along the interior normal
  double rho = 0.0;    // in-plane rotation, props only (0 for casework)
  int extra = 0;       // additional categorical attribute
};

struct LayoutScalars {
  double area = 0.0;
  double perimeter = 0.0;
  double n_edges = 0.0;
  double aspect_ratio = 1.0;
  double compactness = 1.0;
};

struct RoomEnvelope {
  int room_type = 0;
  std::vector<Wall> walls;
  std::vector<Opening> doors;
  std::vector<Opening> windows;
  LayoutScalars layout;

  // Room polygon induced by the wall loop (throws if the loop is invalid).
  geom::Polygon polygon() const;
};

struct Room {
  RoomEnvelope envelope;
  std::vector<Entity> entities;
};

struct Violation {
  std::string field;
  std::string rule;
};

// Empty iff all type invariants hold; violations are data, not errors.
std::vector<Violation> validate_room(const Room& r);

struct NormalizationRecord {
  geom::Point2 translation;  // subtracted before scaling
  double scale = 1.0;        // multiplier applied after translation
};

// Translates the bounding-box minimum to the origin and scales the longest
// bounding-box side to 1. All lengths (coordinates, widths, depths, delta,
// thicknesses) scale uniformly; t and rho are unchanged.
Room normalize_room(const Room& r, NormalizationRecord& record);
Room denormalize_room(const Room& r, const NormalizationRecord& record);

LayoutScalars derive_layout_scalars(const RoomEnvelope& env);

// Canonical entity order: casework before props, then by (edge_index, t,
// category, delta). Decoder targets and round-trip tests assume this order.
std::vector<Entity> canonical_entity_order(const std::vector<Entity>& entities);

// World-frame footprint of an entity within its room.
geom::OrientedRect entity_rect(const RoomEnvelope& env, const Entity& e);

// ---------------------------------------------------------------------------
// Furniture programs: per room type, the required and optional entity
// categories with count ranges. The synthetic generator draws from these and
// the layout metrics build their default inventory specs from the same table.
// ---------------------------------------------------------------------------

struct ProgramItem {
  int category = 0;
  int min_count = 0;
  int max_count = 0;
  bool required = false;
};

struct ProgramGroup {
  // Mutually exclusive alternatives; exactly one is drawn when generating.
  std::vector<int> alternatives;
  int count = 1;
};

struct FurnitureProgram {
  std::vector<ProgramItem> items;
  std::vector<ProgramGroup> groups;
};

const FurnitureProgram& furniture_program(int room_type);

}  // namespace sbm
