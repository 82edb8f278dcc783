#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbm/room.hpp"

namespace sbm::data {

constexpr int kSchemaVersion = 1;

struct RoomRecord {
  int schema_version = kSchemaVersion;
  std::string split = "train";
  uint64_t seed = 0;
  Room room;
};

nlohmann::ordered_json room_to_json(const Room& r);
Room room_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const RoomRecord& rec);
RoomRecord record_from_json(const nlohmann::json& j);

// JSON Lines persistence, one record per line. Round trips are byte-stable
// (doubles use shortest round-trip formatting). Malformed lines raise an
// error naming the line number; unknown schema versions are rejected.
void save_rooms(const std::vector<RoomRecord>& records, const std::string& path);
std::vector<RoomRecord> load_rooms(const std::string& path);

// Synthetic corpus configuration; the stand-in for the proprietary dataset.
struct SynthConfig {
  std::vector<double> type_weights = std::vector<double>(kNumRoomTypes, 1.0);
  double rect_weight = 0.75;
  double l_shape_weight = 0.25;
  double min_side = 1.8;   // clamps the per-type side ranges, meters
  double max_side = 6.5;
  double optional_item_prob = 0.35;
  double door_clearance_depth = 0.9;  // kept free of entities by construction
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

void to_json(nlohmann::ordered_json& j, const SynthConfig& cfg);
void from_json(const nlohmann::json& j, SynthConfig& cfg);

// Generates n rooms, each passing validate_room, with collision-free
// entities, at least one door, and door clearances kept empty. Deterministic
// in cfg.seed. Splits are assigned 80/10/10 by hash of (seed, index).
std::vector<RoomRecord> synth_generate(const SynthConfig& cfg, int n);

// Deterministic human-readable description of a room (stable key order).
std::string serialize_room_text(const Room& r);

}  // namespace sbm::data
