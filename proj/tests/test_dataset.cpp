#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "sbm/dataset.hpp"
#include "sbm/geometry.hpp"
#include "sbm/metrics_layout.hpp"
#include "test_util.hpp"

using namespace sbm;
using namespace sbm::data;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/sbm_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("jsonl round trip of 100 synthetic rooms is identity") {
  SynthConfig cfg;
  cfg.seed = 31337;
  auto records = synth_generate(cfg, 100);
  TempFile f("roundtrip.jsonl");
  save_rooms(records, f.path);
  auto loaded = load_rooms(f.path);
  REQUIRE(loaded.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(record_to_json(loaded[i]).dump() == record_to_json(records[i]).dump());
    CHECK(loaded[i].split == records[i].split);
  }
  // saving again produces byte-identical content
  TempFile f2("roundtrip2.jsonl");
  save_rooms(loaded, f2.path);
  std::ifstream a(f.path), b(f2.path);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("empty file loads as empty list") {
  TempFile f("empty.jsonl");
  std::ofstream(f.path).close();
  CHECK(load_rooms(f.path).empty());
}

TEST_CASE("truncated json line raises an error naming the line") {
  TempFile f("broken.jsonl");
  {
    auto records = synth_generate(SynthConfig{}, 1);
    save_rooms(records, f.path);
    std::ofstream out(f.path, std::ios::app);
    out << "{\"schema_version\": 1, \"split\": \"tr\n";
  }
  CHECK_THROWS_WITH_AS(load_rooms(f.path), doctest::Contains("line 2"),
                       std::runtime_error);
}

TEST_CASE("unknown schema version is rejected") {
  TempFile f("version.jsonl");
  {
    auto records = synth_generate(SynthConfig{}, 1);
    auto j = record_to_json(records[0]);
    j["schema_version"] = 99;
    std::ofstream out(f.path);
    out << j.dump() << "\n";
  }
  CHECK_THROWS_WITH_AS(load_rooms(f.path), doctest::Contains("schema_version"),
                       std::runtime_error);
}

TEST_CASE("same seed produces identical corpora") {
  SynthConfig cfg;
  cfg.seed = 777;
  auto a = synth_generate(cfg, 50);
  auto b = synth_generate(cfg, 50);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(record_to_json(a[i]).dump() == record_to_json(b[i]).dump());
}

TEST_CASE("n=0 yields empty corpus") {
  CHECK(synth_generate(SynthConfig{}, 0).empty());
}

TEST_CASE("invalid config rejected") {
  SynthConfig cfg;
  cfg.type_weights.assign(kNumRoomTypes, 0.0);
  CHECK_THROWS_AS(synth_generate(cfg, 1), std::invalid_argument);
  SynthConfig cfg2;
  cfg2.min_side = 5.0;
  cfg2.max_side = 2.0;
  CHECK_THROWS_AS(synth_generate(cfg2, 1), std::invalid_argument);
}

TEST_CASE("1000 synthetic rooms: all valid, no entity overlaps, has door") {
  SynthConfig cfg;
  cfg.seed = 9001;
  auto records = synth_generate(cfg, 1000);
  int overlap_pairs = 0;
  for (const auto& rec : records) {
    CHECK(validate_room(rec.room).empty());
    CHECK(rec.room.envelope.doors.size() >= 1);
    // brute-force pairwise overlap check
    std::vector<geom::OrientedRect> rects;
    for (const Entity& e : rec.room.entities)
      rects.push_back(entity_rect(rec.room.envelope, e));
    for (size_t i = 0; i < rects.size(); ++i)
      for (size_t j = i + 1; j < rects.size(); ++j)
        if (geom::rect_intersection_area(rects[i], rects[j]) > 1e-9)
          ++overlap_pairs;
    // entities stay inside the room
    auto poly = rec.room.envelope.polygon();
    for (const auto& r : rects)
      CHECK(geom::rect_outside_polygon_area(r, poly) < 1e-9);
  }
  CHECK(overlap_pairs == 0);
}

TEST_CASE("ground-truth coverage of generated rooms is >= 0.95") {
  SynthConfig cfg;
  cfg.seed = 424242;
  auto records = synth_generate(cfg, 200);
  for (const auto& rec : records) {
    auto spec = metrics::default_inventory(rec.room.envelope.room_type);
    double cov = metrics::coverage(rec.room.entities, spec);
    CHECK(cov >= 0.95);
  }
}

TEST_CASE("splits are roughly 80/10/10") {
  SynthConfig cfg;
  cfg.seed = 5150;
  auto records = synth_generate(cfg, 1000);
  int train = 0, val = 0, test = 0;
  for (const auto& rec : records) {
    if (rec.split == "train") ++train;
    if (rec.split == "val") ++val;
    if (rec.split == "test") ++test;
  }
  CHECK(train + val + test == 1000);
  CHECK(train > 700);
  CHECK(val > 50);
  CHECK(test > 50);
}

TEST_CASE("text serialization is deterministic and mentions every entity") {
  Room r = testutil::sample_room();
  std::string a = serialize_room_text(r);
  std::string b = serialize_room_text(r);
  CHECK(a == b);
  // count category mentions
  auto count = [](const std::string& hay, const std::string& needle) {
    int n = 0;
    for (size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + 1))
      ++n;
    return n;
  };
  CHECK(count(a, "bed ") == 1);
  CHECK(count(a, "nightstand") == 1);
  CHECK(a.find("room_type: bedroom") != std::string::npos);

  Room empty = r;
  empty.entities.clear();
  CHECK(serialize_room_text(empty).find("entities: none") != std::string::npos);
}
