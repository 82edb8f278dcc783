#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbm/dataset.hpp"
#include "sbm/tokenizer.hpp"
#include "test_util.hpp"

using namespace sbm;
using namespace sbm::tok;

namespace {

int row_of(const FeatureSchema& s, const std::string& name) {
  for (int f = 0; f < s.feature_count(); ++f)
    if (s.rows[f].name == name) return s.row_offset(f);
  FAIL("row not found: ", name);
  return -1;
}

const FeatureRow& feature_of(const FeatureSchema& s, const std::string& name) {
  for (const auto& r : s.rows)
    if (r.name == name) return r;
  FAIL("feature not found: ", name);
  static FeatureRow dummy;
  return dummy;
}

}  // namespace

TEST_CASE("default schemas: generic identifier rows come first") {
  auto enc = default_encoder_schema();
  auto dec = default_decoder_schema();
  CHECK(enc.rows[0].name == "token_type_id");
  CHECK(enc.rows[1].name == "token_id");
  CHECK(dec.rows[0].name == "token_type_id");
  CHECK(dec.rows[1].name == "token_id");
  for (int t = 0; t < kNumEncTokenTypes; ++t) {
    CHECK(enc.rows[0].applies_to(t));
    CHECK(enc.rows[1].applies_to(t));
  }
  CHECK(enc.fingerprint() != dec.fingerprint());
}

TEST_CASE("LAYOUT has area active, edge_endpoints inactive") {
  auto enc = default_encoder_schema();
  int layout = static_cast<int>(EncTokenType::kLayout);
  CHECK(feature_of(enc, "area").applies_to(layout));
  CHECK_FALSE(feature_of(enc, "edge_endpoints").applies_to(layout));
}

TEST_CASE("DOOR active feature set matches the schema definition") {
  auto enc = default_encoder_schema();
  int door = static_cast<int>(EncTokenType::kDoor);
  std::vector<std::string> expected = {
      "token_type_id", "token_id",       "edge_index",
      "opening_family", "opening_t",     "opening_width",
      "opening_corner_dist", "door_swing"};
  for (const auto& row : enc.rows) {
    bool should = false;
    for (const auto& name : expected) should = should || row.name == name;
    CHECK_MESSAGE(row.applies_to(door) == should, "feature ", row.name);
  }
}

TEST_CASE("encode_envelope column layout") {
  Room r = testutil::sample_room();  // 4 walls, 1 door, 1 window
  auto m = encode_envelope(r.envelope, 16);
  CHECK(m.seq_len == 16);
  CHECK(m.active_length() == 10);  // CLS TOPO LAYOUT 4xEDGE DOOR WINDOW EOS
  CHECK(encoder_active_columns(r.envelope) == 10);
  CHECK(m.token_type(0) == static_cast<int>(EncTokenType::kCls));
  CHECK(m.token_type(1) == static_cast<int>(EncTokenType::kTopo));
  CHECK(m.token_type(2) == static_cast<int>(EncTokenType::kLayout));
  CHECK(m.token_type(3) == static_cast<int>(EncTokenType::kEdge));
  CHECK(m.token_type(7) == static_cast<int>(EncTokenType::kDoor));
  CHECK(m.token_type(8) == static_cast<int>(EncTokenType::kWindow));
  CHECK(m.token_type(9) == static_cast<int>(EncTokenType::kEos));
  CHECK(m.token_type(15) == static_cast<int>(EncTokenType::kPad));
  // CLS column: only the two identifier rows are non-sentinel
  auto enc = default_encoder_schema();
  for (int vr = 2; vr < enc.num_value_rows(); ++vr)
    CHECK(m.at(vr, 0) == kSentinel);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(1, 0) == 0.0);
  // token_id enumerates instances within each type
  CHECK(m.at(row_of(enc, "token_id"), 3) == 0.0);
  CHECK(m.at(row_of(enc, "token_id"), 6) == 3.0);
  // attention mask covers exactly the active columns
  for (int s = 0; s < 16; ++s) CHECK(m.attn_mask[s] == (s < 10 ? 1 : 0));
}

TEST_CASE("room with no openings still has TOPO, LAYOUT, EDGE, EOS") {
  RoomEnvelope env = testutil::box_envelope(3.0, 2.0);
  auto m = encode_envelope(env, 32);
  CHECK(m.active_length() == 8);  // 4 + N_E with no openings
  CHECK(m.token_type(7) == static_cast<int>(EncTokenType::kEos));
}

TEST_CASE("sequence overflow names the required length") {
  Room r = testutil::sample_room();
  CHECK_THROWS_WITH_AS(encode_envelope(r.envelope, 8), doctest::Contains("10"),
                       std::invalid_argument);
}

TEST_CASE("encode_entities layout and shift rule") {
  Room r;
  r.envelope = testutil::box_envelope(4.0, 4.0);
  r.envelope.doors.push_back(testutil::door_at(0, 0.5));
  r.envelope.layout = derive_layout_scalars(r.envelope);
  r.entities = {
      testutil::entity_of(EntityCategory::kBaseCabinet, 0, 0.2, 0.3, 0.6, 0.6),
      testutil::entity_of(EntityCategory::kBaseCabinet, 1, 0.4, 0.3, 0.6, 0.6),
      testutil::entity_of(EntityCategory::kBed, 2, 0.5, 1.0, 1.5, 2.0, 0.1),
  };
  auto dm = encode_entities(r, 8);
  const auto& m = dm.seq;
  CHECK(m.token_type(0) == static_cast<int>(DecTokenType::kSos));
  CHECK(m.token_type(1) == static_cast<int>(DecTokenType::kCasework));
  CHECK(m.token_type(2) == static_cast<int>(DecTokenType::kCasework));
  CHECK(m.token_type(3) == static_cast<int>(DecTokenType::kProp));
  CHECK(m.token_type(4) == static_cast<int>(DecTokenType::kEos));
  CHECK(m.token_type(5) == static_cast<int>(DecTokenType::kPad));
  CHECK(dm.input_length() == 4);  // SOS + 3 entities; EOS is target-only

  auto dec = default_decoder_schema();
  // rho is active only for the PROP column
  int r_rho = row_of(dec, "rho");
  CHECK(m.at(r_rho, 1) == kSentinel);
  CHECK(m.at(r_rho, 2) == kSentinel);
  CHECK(m.at(r_rho, 3) == doctest::Approx(0.1));
  // token_id counts within each type
  int r_id = row_of(dec, "token_id");
  CHECK(m.at(r_id, 1) == 0.0);
  CHECK(m.at(r_id, 2) == 1.0);
  CHECK(m.at(r_id, 3) == 0.0);
}

TEST_CASE("room with no entities: SOS then EOS") {
  Room r;
  r.envelope = testutil::box_envelope(4.0, 4.0);
  auto dm = encode_entities(r, 8);
  CHECK(dm.seq.token_type(0) == static_cast<int>(DecTokenType::kSos));
  CHECK(dm.seq.token_type(1) == static_cast<int>(DecTokenType::kEos));
  CHECK(dm.input_length() == 1);
  CHECK(decode_entities(dm, r.envelope).empty());
}

TEST_CASE("decode rejects bad sequences") {
  Room r = testutil::sample_room();
  auto dm = encode_entities(r, 16);
  SUBCASE("missing EOS") {
    // overwrite EOS with PAD
    int eos_col = static_cast<int>(r.entities.size()) + 1;
    dm.seq.at(0, eos_col) = static_cast<int>(DecTokenType::kPad);
    CHECK_THROWS_AS(decode_entities(dm, r.envelope), std::invalid_argument);
  }
  SUBCASE("edge index out of range") {
    auto dec = default_decoder_schema();
    dm.seq.at(row_of(dec, "edge_index"), 1) = 4.0;  // N_E == 4
    CHECK_THROWS_WITH_AS(decode_entities(dm, r.envelope),
                         doctest::Contains("edge index"),
                         std::invalid_argument);
  }
}

TEST_CASE("round trip on 1000 synthetic rooms is identity") {
  data::SynthConfig cfg;
  cfg.seed = 2024;
  auto records = data::synth_generate(cfg, 1000);
  for (const auto& rec : records) {
    auto enc = encode_envelope(rec.room.envelope);
    CHECK(enc.active_length() == encoder_active_columns(rec.room.envelope));
    auto dm = encode_entities(rec.room);
    auto decoded = decode_entities(dm, rec.room.envelope);
    auto expect = canonical_entity_order(rec.room.entities);
    REQUIRE(decoded.size() == expect.size());
    for (size_t i = 0; i < decoded.size(); ++i) {
      CHECK(decoded[i].kind == expect[i].kind);
      CHECK(decoded[i].category == expect[i].category);
      CHECK(decoded[i].edge_index == expect[i].edge_index);
      CHECK(decoded[i].extra == expect[i].extra);
      CHECK(std::abs(decoded[i].t - expect[i].t) < 1e-9);
      CHECK(std::abs(decoded[i].delta - expect[i].delta) < 1e-9);
      CHECK(std::abs(decoded[i].width - expect[i].width) < 1e-9);
      CHECK(std::abs(decoded[i].depth - expect[i].depth) < 1e-9);
      CHECK(std::abs(decoded[i].rho - expect[i].rho) < 1e-9);
    }
  }
}

TEST_CASE("tokenization is bit-identical across runs") {
  Room r = testutil::sample_room();
  auto a = encode_envelope(r.envelope);
  auto b = encode_envelope(r.envelope);
  CHECK(a.values == b.values);
  auto da = encode_entities(r);
  auto db = encode_entities(r);
  CHECK(da.seq.values == db.seq.values);
}

TEST_CASE("csv dump shows sentinels") {
  Room r = testutil::sample_room();
  auto m = encode_envelope(r.envelope, 12);
  std::string csv = m.to_csv();
  CHECK(csv.find("-100") != std::string::npos);
  CHECK(csv.find("token_type_id") != std::string::npos);
  CHECK(csv.find("CLS") != std::string::npos);
}

TEST_CASE("matrix validation catches sentinel violations") {
  Room r = testutil::sample_room();
  auto m = encode_envelope(r.envelope, 12);
  m.validate();
  auto enc = default_encoder_schema();
  m.at(row_of(enc, "area"), 0) = 3.0;  // area on a CLS column
  CHECK_THROWS_AS(m.validate(), std::runtime_error);
}
