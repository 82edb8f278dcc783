#include "sbm/tokenizer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sbm::tok {

namespace {

uint32_t mask_of(std::initializer_list<int> types) {
  uint32_t m = 0;
  for (int t : types) m |= 1u << t;
  return m;
}

uint32_t all_enc() {
  uint32_t m = 0;
  for (int t = 0; t < kNumEncTokenTypes; ++t) m |= 1u << t;
  return m;
}

uint32_t all_dec() {
  uint32_t m = 0;
  for (int t = 0; t < kNumDecTokenTypes; ++t) m |= 1u << t;
  return m;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int clamp_token_id(int id) { return id < kMaskTokenId ? id : kMaskTokenId - 1; }

}  // namespace

const std::vector<std::string>& enc_token_type_names() {
  static const std::vector<std::string> names = {
      "CLS", "TOPO", "LAYOUT", "EDGE", "DOOR", "WINDOW", "EOS", "PAD"};
  return names;
}

const std::vector<std::string>& dec_token_type_names() {
  static const std::vector<std::string> names = {"SOS", "PROP", "CASEWORK",
                                                 "EOS", "PAD"};
  return names;
}

int FeatureSchema::num_value_rows() const {
  int n = 0;
  for (const FeatureRow& r : rows) n += r.arity;
  return n;
}

int FeatureSchema::row_offset(int feature) const {
  int off = 0;
  for (int f = 0; f < feature; ++f) off += rows[f].arity;
  return off;
}

std::string FeatureSchema::describe() const {
  std::ostringstream os;
  os << (is_encoder ? "encoder" : "decoder") << ";";
  for (const FeatureRow& r : rows)
    os << r.name << "|" << static_cast<int>(r.kind) << "|" << r.arity << "|"
       << r.vocab << "|" << r.applicable_mask << ";";
  return os.str();
}

uint64_t FeatureSchema::fingerprint() const { return fnv1a(describe()); }

FeatureSchema default_encoder_schema() {
  using E = EncTokenType;
  auto t = [](E e) { return static_cast<int>(e); };
  FeatureSchema s;
  s.is_encoder = true;
  uint32_t openings = mask_of({t(E::kDoor), t(E::kWindow)});
  s.rows = {
      {"token_type_id", FeatureKind::kCategorical, 1, kNumEncTokenTypes, all_enc()},
      {"token_id", FeatureKind::kCategorical, 1, kTokenIdVocab, all_enc()},
      {"room_type", FeatureKind::kCategorical, 1, kNumRoomTypes,
       mask_of({t(E::kTopo)})},
      {"area", FeatureKind::kScalar, 1, 0, mask_of({t(E::kLayout)})},
      {"perimeter", FeatureKind::kScalar, 1, 0, mask_of({t(E::kLayout)})},
      {"n_edges", FeatureKind::kScalar, 1, 0, mask_of({t(E::kLayout)})},
      {"aspect_ratio", FeatureKind::kScalar, 1, 0, mask_of({t(E::kLayout)})},
      {"compactness", FeatureKind::kScalar, 1, 0, mask_of({t(E::kLayout)})},
      {"edge_endpoints", FeatureKind::kGroup, 4, 0, mask_of({t(E::kEdge)})},
      {"edge_length", FeatureKind::kScalar, 1, 0, mask_of({t(E::kEdge)})},
      {"edge_rel_length", FeatureKind::kScalar, 1, 0, mask_of({t(E::kEdge)})},
      {"edge_thickness", FeatureKind::kGroup, 2, 0, mask_of({t(E::kEdge)})},
      {"wall_condition", FeatureKind::kCategorical, 1, kNumWallConditions,
       mask_of({t(E::kEdge)})},
      {"edge_index", FeatureKind::kCategorical, 1, kMaxEdges, openings},
      {"opening_family", FeatureKind::kCategorical, 1,
       kNumDoorFamilies + kNumWindowFamilies, openings},
      {"opening_t", FeatureKind::kScalar, 1, 0, openings},
      {"opening_width", FeatureKind::kScalar, 1, 0, openings},
      {"opening_corner_dist", FeatureKind::kGroup, 2, 0, openings},
      {"door_swing", FeatureKind::kCategorical, 1, kNumDoorSwings,
       mask_of({t(E::kDoor)})},
  };
  return s;
}

FeatureSchema default_decoder_schema() {
  using D = DecTokenType;
  auto t = [](D e) { return static_cast<int>(e); };
  FeatureSchema s;
  s.is_encoder = false;
  uint32_t entities = mask_of({t(D::kProp), t(D::kCasework)});
  s.rows = {
      {"token_type_id", FeatureKind::kCategorical, 1, kNumDecTokenTypes, all_dec()},
      {"token_id", FeatureKind::kCategorical, 1, kTokenIdVocab, all_dec()},
      {"entity_category", FeatureKind::kCategorical, 1, kNumEntityCategories,
       entities},
      {"edge_index", FeatureKind::kCategorical, 1, kMaxEdges, entities},
      {"t", FeatureKind::kScalar, 1, 0, entities},
      {"delta", FeatureKind::kScalar, 1, 0, entities},
      {"size", FeatureKind::kGroup, 2, 0, entities},
      {"rho", FeatureKind::kScalar, 1, 0, mask_of({t(D::kProp)})},
      {"extra", FeatureKind::kCategorical, 1, kNumEntityExtras, entities},
  };
  return s;
}

int TokenMatrix::active_length() const {
  int n = 0;
  for (uint8_t m : attn_mask) n += m ? 1 : 0;
  return n;
}

void TokenMatrix::validate() const {
  if (!schema) throw std::runtime_error("TokenMatrix: no schema");
  int pad = schema->pad_type();
  for (int s = 0; s < seq_len; ++s) {
    int tt = token_type(s);
    if (tt < 0 || tt >= schema->num_token_types())
      throw std::runtime_error("TokenMatrix: bad token type at column " +
                               std::to_string(s));
    bool is_pad = tt == pad;
    if (attn_mask[s] == (is_pad ? 1 : 0))
      throw std::runtime_error("TokenMatrix: attention mask wrong at column " +
                               std::to_string(s));
    for (int f = 0; f < schema->feature_count(); ++f) {
      const FeatureRow& row = schema->rows[f];
      int off = schema->row_offset(f);
      bool active = row.applies_to(tt) && !(is_pad && f != 0);
      for (int k = 0; k < row.arity; ++k) {
        double v = at(off + k, s);
        if (active && v == kSentinel && f != 0)
          throw std::runtime_error("TokenMatrix: active entry is sentinel at " +
                                   row.name + ", column " + std::to_string(s));
        if (!active && v != kSentinel)
          throw std::runtime_error(
              "TokenMatrix: inactive entry not sentinel at " + row.name +
              ", column " + std::to_string(s));
      }
    }
  }
}

std::string TokenMatrix::to_csv() const {
  const auto& type_names =
      schema->is_encoder ? enc_token_type_names() : dec_token_type_names();
  std::ostringstream os;
  os << "feature";
  for (int s = 0; s < seq_len; ++s) os << "," << type_names[token_type(s)];
  os << "\n";
  for (int f = 0; f < schema->feature_count(); ++f) {
    const FeatureRow& row = schema->rows[f];
    int off = schema->row_offset(f);
    for (int k = 0; k < row.arity; ++k) {
      os << row.name;
      if (row.arity > 1) os << "[" << k << "]";
      for (int s = 0; s < seq_len; ++s) os << "," << at(off + k, s);
      os << "\n";
    }
  }
  return os.str();
}

namespace {

TokenMatrix blank_matrix(const FeatureSchema& schema, int seq_len) {
  TokenMatrix m;
  m.schema = &schema;
  m.seq_len = seq_len;
  m.values.assign(static_cast<size_t>(schema.num_value_rows()) * seq_len,
                  kSentinel);
  m.attn_mask.assign(seq_len, 0);
  return m;
}

// The schemas handed out by encode_* live for the whole process.
const FeatureSchema& shared_encoder_schema() {
  static const FeatureSchema s = default_encoder_schema();
  return s;
}
const FeatureSchema& shared_decoder_schema() {
  static const FeatureSchema s = default_decoder_schema();
  return s;
}

struct RowIndex {
  const FeatureSchema& schema;
  int operator()(const char* name) const {
    for (int f = 0; f < schema.feature_count(); ++f)
      if (schema.rows[f].name == name) return schema.row_offset(f);
    throw std::logic_error(std::string("schema row not found: ") + name);
  }
};

}  // namespace

int encoder_active_columns(const RoomEnvelope& env) {
  return 4 + static_cast<int>(env.walls.size()) +
         static_cast<int>(env.doors.size()) +
         static_cast<int>(env.windows.size());
}

EncMatrix encode_envelope(const RoomEnvelope& env, int s_enc) {
  const FeatureSchema& schema = shared_encoder_schema();
  int need = encoder_active_columns(env);
  if (need > s_enc)
    throw std::invalid_argument("encode_envelope: room needs " +
                                std::to_string(need) + " columns, S_enc is " +
                                std::to_string(s_enc));
  if (static_cast<int>(env.walls.size()) > kMaxEdges)
    throw std::invalid_argument("encode_envelope: more than kMaxEdges walls");

  EncMatrix m = blank_matrix(schema, s_enc);
  RowIndex row{schema};
  const int r_type = row("token_type_id");
  const int r_id = row("token_id");
  using E = EncTokenType;
  auto set_header = [&](int col, E type, int token_id) {
    m.at(r_type, col) = static_cast<double>(static_cast<int>(type));
    m.at(r_id, col) = static_cast<double>(clamp_token_id(token_id));
    if (type != E::kPad) m.attn_mask[col] = 1;
  };

  int col = 0;
  set_header(col++, E::kCls, 0);

  set_header(col, E::kTopo, 0);
  m.at(row("room_type"), col) = env.room_type;
  ++col;

  set_header(col, E::kLayout, 0);
  m.at(row("area"), col) = env.layout.area;
  m.at(row("perimeter"), col) = env.layout.perimeter;
  m.at(row("n_edges"), col) = env.layout.n_edges;
  m.at(row("aspect_ratio"), col) = env.layout.aspect_ratio;
  m.at(row("compactness"), col) = env.layout.compactness;
  ++col;

  const int r_endpoints = row("edge_endpoints");
  const int r_elen = row("edge_length");
  const int r_rel = row("edge_rel_length");
  const int r_thick = row("edge_thickness");
  const int r_cond = row("wall_condition");
  for (size_t j = 0; j < env.walls.size(); ++j, ++col) {
    const Wall& w = env.walls[j];
    set_header(col, E::kEdge, static_cast<int>(j));
    m.at(r_endpoints + 0, col) = w.x1.x;
    m.at(r_endpoints + 1, col) = w.x1.y;
    m.at(r_endpoints + 2, col) = w.x2.x;
    m.at(r_endpoints + 3, col) = w.x2.y;
    double len = geom::distance(w.x1, w.x2);
    m.at(r_elen, col) = len;
    m.at(r_rel, col) = len / env.layout.perimeter;
    m.at(r_thick + 0, col) = w.thickness_in;
    m.at(r_thick + 1, col) = w.thickness_out;
    m.at(r_cond, col) = w.condition;
  }

  const int r_edge_idx = row("edge_index");
  const int r_family = row("opening_family");
  const int r_ot = row("opening_t");
  const int r_ow = row("opening_width");
  const int r_corner = row("opening_corner_dist");
  const int r_swing = row("door_swing");
  auto put_opening = [&](const Opening& o, E type, int token_id) {
    set_header(col, type, token_id);
    const Wall& w = env.walls[o.edge_index];
    double len = geom::distance(w.x1, w.x2);
    m.at(r_edge_idx, col) = o.edge_index;
    m.at(r_family, col) =
        o.kind == OpeningKind::kDoor ? o.family : kNumDoorFamilies + o.family;
    m.at(r_ot, col) = o.t;
    m.at(r_ow, col) = o.width;
    m.at(r_corner + 0, col) = o.t * len;
    m.at(r_corner + 1, col) = (1.0 - o.t) * len;
    if (type == E::kDoor) m.at(r_swing, col) = o.swing;
    ++col;
  };
  for (size_t k = 0; k < env.doors.size(); ++k)
    put_opening(env.doors[k], E::kDoor, static_cast<int>(k));
  for (size_t k = 0; k < env.windows.size(); ++k)
    put_opening(env.windows[k], E::kWindow, static_cast<int>(k));

  set_header(col++, E::kEos, 0);
  for (; col < s_enc; ++col)
    m.at(r_type, col) = static_cast<double>(static_cast<int>(E::kPad));

  m.validate();
  return m;
}

DecMatrix encode_entities(const Room& room, int s_dec) {
  const FeatureSchema& schema = shared_decoder_schema();
  std::vector<Entity> ents = canonical_entity_order(room.entities);
  int need = static_cast<int>(ents.size()) + 2;
  if (need > s_dec)
    throw std::invalid_argument("encode_entities: room needs " +
                                std::to_string(need) + " columns, S_dec is " +
                                std::to_string(s_dec));

  TokenMatrix m = blank_matrix(schema, s_dec);
  RowIndex row{schema};
  const int r_type = row("token_type_id");
  const int r_id = row("token_id");
  using D = DecTokenType;
  auto set_header = [&](int col, D type, int token_id) {
    m.at(r_type, col) = static_cast<double>(static_cast<int>(type));
    m.at(r_id, col) = static_cast<double>(clamp_token_id(token_id));
    if (type != D::kPad) m.attn_mask[col] = 1;
  };

  int col = 0;
  set_header(col++, D::kSos, 0);
  const int r_cat = row("entity_category");
  const int r_edge = row("edge_index");
  const int r_t = row("t");
  const int r_delta = row("delta");
  const int r_size = row("size");
  const int r_rho = row("rho");
  const int r_extra = row("extra");
  int prop_count = 0, casework_count = 0;
  for (const Entity& e : ents) {
    bool is_prop = e.kind == EntityKind::kProp;
    set_header(col, is_prop ? D::kProp : D::kCasework,
               is_prop ? prop_count++ : casework_count++);
    m.at(r_cat, col) = e.category;
    m.at(r_edge, col) = e.edge_index;
    m.at(r_t, col) = e.t;
    m.at(r_delta, col) = e.delta;
    m.at(r_size + 0, col) = e.width;
    m.at(r_size + 1, col) = e.depth;
    if (is_prop) m.at(r_rho, col) = e.rho;
    m.at(r_extra, col) = e.extra;
    ++col;
  }
  set_header(col++, D::kEos, 0);
  for (; col < s_dec; ++col)
    m.at(r_type, col) = static_cast<double>(static_cast<int>(D::kPad));

  m.validate();
  return DecMatrix{std::move(m)};
}

std::vector<Entity> decode_entities(const DecMatrix& dm,
                                    const RoomEnvelope& env) {
  const TokenMatrix& m = dm.seq;
  using D = DecTokenType;
  if (m.seq_len < 2 || m.token_type(0) != static_cast<int>(D::kSos))
    throw std::invalid_argument("decode_entities: sequence must start with SOS");

  std::vector<EntityTokenValues> seq;
  RowIndex row{*m.schema};
  const int r_cat = row("entity_category");
  const int r_edge = row("edge_index");
  const int r_t = row("t");
  const int r_delta = row("delta");
  const int r_size = row("size");
  const int r_rho = row("rho");
  const int r_extra = row("extra");
  bool saw_eos = false;
  for (int col = 1; col < m.seq_len; ++col) {
    int tt = m.token_type(col);
    if (tt == static_cast<int>(D::kEos)) {
      saw_eos = true;
      break;
    }
    if (tt == static_cast<int>(D::kPad))
      break;  // PAD before EOS -> missing EOS, caught below
    if (tt != static_cast<int>(D::kProp) && tt != static_cast<int>(D::kCasework))
      throw std::invalid_argument("decode_entities: unexpected token type " +
                                  std::to_string(tt));
    EntityTokenValues v;
    v.token_type = tt;
    v.category = static_cast<int>(m.at(r_cat, col));
    v.edge_index = static_cast<int>(m.at(r_edge, col));
    v.t = m.at(r_t, col);
    v.delta = m.at(r_delta, col);
    v.width = m.at(r_size + 0, col);
    v.depth = m.at(r_size + 1, col);
    v.rho = tt == static_cast<int>(D::kProp) ? m.at(r_rho, col) : 0.0;
    v.extra = static_cast<int>(m.at(r_extra, col));
    seq.push_back(v);
  }
  if (!saw_eos)
    throw std::invalid_argument("decode_entities: missing EOS token");
  return decode_token_values(seq, env);
}

std::vector<Entity> decode_token_values(
    const std::vector<EntityTokenValues>& seq, const RoomEnvelope& env) {
  int n_edges = static_cast<int>(env.walls.size());
  std::vector<Entity> out;
  out.reserve(seq.size());
  for (const EntityTokenValues& v : seq) {
    if (v.edge_index < 0 || v.edge_index >= n_edges)
      throw std::invalid_argument("decode: edge index " +
                                  std::to_string(v.edge_index) +
                                  " out of range for " +
                                  std::to_string(n_edges) + " walls");
    Entity e;
    e.kind = v.token_type == static_cast<int>(DecTokenType::kProp)
                 ? EntityKind::kProp
                 : EntityKind::kCasework;
    e.category = v.category;
    e.edge_index = v.edge_index;
    e.t = v.t;
    e.delta = v.delta;
    e.width = v.width;
    e.depth = v.depth;
    e.rho = e.kind == EntityKind::kProp ? v.rho : 0.0;
    e.extra = v.extra;
    out.push_back(e);
  }
  return out;
}

}  // namespace sbm::tok
