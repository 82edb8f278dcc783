#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbm/embedding.hpp"
#include "sbm/room.hpp"
#include "sbm/tensor.hpp"
#include "sbm/tokenizer.hpp"

namespace sbm::model {

struct ModelConfig {
  int d = 64;
  int n_layers_enc = 4;
  int n_layers_dec = 4;
  int n_heads = 4;
  int ffn_mult = 4;
  int s_enc = tok::kDefaultSEnc;
  int s_dec = tok::kDefaultSDec;

  void validate() const;  // throws std::invalid_argument
};

void to_json(nlohmann::ordered_json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

struct Linear {
  nn::Tensor w, b;
  Linear() = default;
  Linear(int in, int out, Rng& rng);
  nn::Tensor forward(const nn::Tensor& x) const {
    return nn::add_rowvec(nn::matmul(x, w), b);
  }
};

struct LayerNorm {
  nn::Tensor gain, bias;
  LayerNorm() = default;
  explicit LayerNorm(int d);
  nn::Tensor forward(const nn::Tensor& x) const {
    return nn::add_rowvec(nn::mul_rowvec(nn::layer_norm_rows(x), gain), bias);
  }
};

struct Attention {
  Linear q, k, v, o;
  int n_heads = 1;
  Attention() = default;
  Attention(int d, int n_heads, Rng& rng);
  // keys/values from `kv`, queries from `x`; `key_mask` marks usable key
  // positions; causal restricts position i to keys <= i (self-attention).
  nn::Tensor forward(const nn::Tensor& x, const nn::Tensor& kv,
                     const std::vector<uint8_t>& key_mask, bool causal) const;
};

struct EncoderBlock {
  LayerNorm ln1, ln2;
  Attention attn;
  Linear ffn1, ffn2;
  EncoderBlock() = default;
  EncoderBlock(const ModelConfig& cfg, Rng& rng);
  nn::Tensor forward(const nn::Tensor& x,
                     const std::vector<uint8_t>& mask) const;
};

struct DecoderBlock {
  LayerNorm ln1, ln_cross, ln2;
  Attention self_attn, cross_attn;
  Linear ffn1, ffn2;
  DecoderBlock() = default;
  DecoderBlock(const ModelConfig& cfg, Rng& rng);
  nn::Tensor forward(const nn::Tensor& x, const nn::Tensor& memory,
                     const std::vector<uint8_t>& memory_mask) const;
};

// Per-position decoder outputs. Categorical heads emit logits; t squashes
// to (0,1); the remaining regression heads are unconstrained here and are
// clamped by the decode-time constraints.
struct HeadOutputs {
  nn::Tensor type_logits;      // L x num dec token types
  nn::Tensor category_logits;  // L x num entity categories
  nn::Tensor edge_logits;      // L x kMaxEdges
  nn::Tensor t_value;          // L x 1, in (0,1)
  nn::Tensor delta;            // L x 1
  nn::Tensor size;             // L x 2
  nn::Tensor rho;              // L x 1
  nn::Tensor extra_logits;     // L x num entity extras
};

struct DecodeConstraints {
  int n_edges = 4;
  double delta_min = 0.0;
  double delta_max = 1.5;
  double size_min = 0.01;
  double size_max = 1.5;
  int max_steps = tok::kDefaultSDec - 2;
};

enum class DecodeMode : int { kGreedy = 0, kSampled };

struct SampleParams {
  uint64_t seed = 0;
  double temperature = 1.0;
};

class Model {
 public:
  Model() = default;
  Model(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const emb::FeatureEmbedderBank& encoder_bank() const { return enc_bank_; }
  const emb::FeatureEmbedderBank& decoder_bank() const { return dec_bank_; }

  // Encoder stack over embedded tokens; masked positions are excluded from
  // attention. With zero layers the memory is the embedding itself.
  nn::Tensor encode(const nn::Tensor& e_enc,
                    const std::vector<uint8_t>& attn_mask) const;
  // Convenience: tokenize + embed + encode the first s_used columns.
  nn::Tensor encode_matrix(const tok::EncMatrix& x, int s_used) const;

  // Room embedding: row 0 of the memory (the CLS position).
  static nn::Tensor pool_cls(const nn::Tensor& memory);

  nn::Tensor decode_states(const nn::Tensor& e_dec, const nn::Tensor& memory,
                           const std::vector<uint8_t>& memory_mask) const;
  HeadOutputs apply_heads(const nn::Tensor& states) const;
  HeadOutputs decode_teacher_forced(const nn::Tensor& e_dec,
                                    const nn::Tensor& memory,
                                    const std::vector<uint8_t>& memory_mask) const;

  nn::Tensor room_cls_logits(const nn::Tensor& z) const;
  nn::Tensor mlm_logits(const nn::Tensor& memory) const;

  // Constrained autoregressive generation; the grammar table, edge masking
  // and value clamps make the output total (always decodable).
  std::vector<Entity> generate(const RoomEnvelope& env,
                               const DecodeConstraints& constraints,
                               DecodeMode mode = DecodeMode::kGreedy,
                               const SampleParams& sample = {}) const;
  std::vector<tok::EntityTokenValues> generate_tokens(
      const RoomEnvelope& env, const DecodeConstraints& constraints,
      DecodeMode mode = DecodeMode::kGreedy, const SampleParams& sample = {}) const;

  // All trainable parameters in a fixed, documented order.
  std::vector<nn::Tensor> parameters() const;
  std::vector<nn::Tensor> encoder_parameters() const;  // banks, blocks, enc heads
  std::vector<nn::Tensor> decoder_parameters() const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  ModelConfig cfg_;
  emb::FeatureEmbedderBank enc_bank_;
  emb::FeatureEmbedderBank dec_bank_;
  std::vector<EncoderBlock> enc_blocks_;
  std::vector<DecoderBlock> dec_blocks_;
  Linear type_head_, category_head_, edge_head_, t_head_, delta_head_,
      size_head_, rho_head_, extra_head_;
  Linear room_cls_head_, mlm_head_;
};

}  // namespace sbm::model
