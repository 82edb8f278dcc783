#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbm/room.hpp"

namespace sbm::tok {

// Sentinel marking non-applicable entries of attribute-feature matrices.
constexpr double kSentinel = -100.0;

// token_id indexes each semantic instance within its type, capped at 64;
// id 64 is the reserved MASK id used by the masked-token objective.
constexpr int kTokenIdVocab = 65;
constexpr int kMaskTokenId = 64;
constexpr int kMaxEdges = 32;

// Encoder and decoder token types live in disjoint namespaces.
enum class EncTokenType : int {
  kCls = 0,
  kTopo,
  kLayout,
  kEdge,
  kDoor,
  kWindow,
  kEos,
  kPad,
};
constexpr int kNumEncTokenTypes = 8;

enum class DecTokenType : int {
  kSos = 0,
  kProp,
  kCasework,
  kEos,
  kPad,
};
constexpr int kNumDecTokenTypes = 5;

const std::vector<std::string>& enc_token_type_names();
const std::vector<std::string>& dec_token_type_names();

enum class FeatureKind : int { kCategorical = 0, kScalar, kGroup };

struct FeatureRow {
  std::string name;
  FeatureKind kind = FeatureKind::kScalar;
  int arity = 1;       // group size (1 for categorical/scalar)
  int vocab = 0;       // categorical vocabulary size
  uint32_t applicable_mask = 0;  // bit per token type id

  bool applies_to(int token_type) const {
    return (applicable_mask >> token_type) & 1u;
  }
};

struct FeatureSchema {
  bool is_encoder = true;
  std::vector<FeatureRow> rows;

  int num_value_rows() const;  // total matrix rows (groups expand by arity)
  int row_offset(int feature) const;
  int feature_count() const { return static_cast<int>(rows.size()); }
  int num_token_types() const {
    return is_encoder ? kNumEncTokenTypes : kNumDecTokenTypes;
  }
  int pad_type() const {
    return is_encoder ? static_cast<int>(EncTokenType::kPad)
                      : static_cast<int>(DecTokenType::kPad);
  }
  // Stable hash of the schema layout; checkpoints refuse mismatches.
  uint64_t fingerprint() const;
  std::string describe() const;
};

// Fixed feature tables. The first two rows of both schemas are the generic
// token_type_id / token_id categorical identifiers present for every token.
FeatureSchema default_encoder_schema();
FeatureSchema default_decoder_schema();

// Attribute-feature matrix: fixed feature rows x sequence columns. Every
// entry is either a valid feature value or exactly kSentinel; an entry is
// non-sentinel iff its feature applies to the column's token type (PAD
// columns are all-sentinel except token_type_id).
struct TokenMatrix {
  const FeatureSchema* schema = nullptr;
  int seq_len = 0;                 // S (columns)
  std::vector<double> values;      // row-major, num_value_rows x seq_len
  std::vector<uint8_t> attn_mask;  // true for non-PAD columns

  double& at(int value_row, int col) { return values[value_row * seq_len + col]; }
  double at(int value_row, int col) const {
    return values[value_row * seq_len + col];
  }
  int token_type(int col) const { return static_cast<int>(at(0, col)); }
  int active_length() const;

  // Verifies sentinel discipline and mask consistency; throws on violation.
  void validate() const;
  // Debug dump with visible sentinels.
  std::string to_csv() const;
};

using EncMatrix = TokenMatrix;

// Decoder matrix holding the full teacher-forcing sequence
// (SOS, entities..., EOS, PAD...). Inputs are columns [0, active-1) and the
// target for input position i is column i+1.
struct DecMatrix {
  TokenMatrix seq;
  int input_length() const { return seq.active_length() - 1; }
};

// Default sequence capacities (configurable at call sites).
constexpr int kDefaultSEnc = 64;
constexpr int kDefaultSDec = 48;

// Encoder sequence in the fixed order CLS, TOPO, LAYOUT, edges, doors,
// windows, EOS, then padding. Throws (naming the required length) if the
// room does not fit in s_enc.
EncMatrix encode_envelope(const RoomEnvelope& env, int s_enc = kDefaultSEnc);

// Contents-only sequence with canonical entity order. Throws on overflow.
DecMatrix encode_entities(const Room& room, int s_dec = kDefaultSDec);

// Inverse of encode_entities; exact for categoricals, 1e-9 for continuous.
std::vector<Entity> decode_entities(const DecMatrix& m, const RoomEnvelope& env);

// Raw per-step head values produced by autoregressive generation.
struct EntityTokenValues {
  int token_type = 0;  // DecTokenType
  int category = 0;
  int edge_index = 0;
  double t = 0.0;
  double delta = 0.0;
  double width = 1.0;
  double depth = 1.0;
  double rho = 0.0;
  int extra = 0;
};

std::vector<Entity> decode_token_values(const std::vector<EntityTokenValues>& seq,
                                        const RoomEnvelope& env);

// Number of non-PAD encoder columns for a room: 4 + N_E + N_D + N_W.
int encoder_active_columns(const RoomEnvelope& env);

}  // namespace sbm::tok
