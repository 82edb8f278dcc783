#pragma once

#include <vector>

#include "sbm/tensor.hpp"
#include "sbm/tokenizer.hpp"

namespace sbm::emb {

// Learned positional embeddings, one row per sequence position.
struct PositionalTable {
  nn::Tensor table;  // s_max x d

  PositionalTable() = default;
  PositionalTable(int s_max, int d, Rng& rng);
};

// Scalar continuous features: 2-layer MLP 1 -> d_h -> d with gelu.
struct ScalarMlp {
  nn::Tensor w1, b1;  // 1 x d_h, d_h
  nn::Tensor w2, b2;  // d_h x d, d

  ScalarMlp() = default;
  ScalarMlp(int d_h, int d, Rng& rng);
  // values: S x 1 column of scalars.
  nn::Tensor forward(const nn::Tensor& values) const;
};

// Grouped continuous features: a shared per-member scalar embedder, mean
// pooling across the group, and a projection to d.
struct GroupEmbedder {
  nn::Tensor w1, b1;    // shared member embedder 1 -> d_h
  nn::Tensor proj, pb;  // d_h -> d

  GroupEmbedder() = default;
  GroupEmbedder(int d_h, int d, Rng& rng);
  // member_values: k tensors of shape S x 1.
  nn::Tensor forward(const std::vector<nn::Tensor>& member_values) const;
};

struct FeatureEmbedder {
  tok::FeatureKind kind = tok::FeatureKind::kScalar;
  nn::Tensor table;  // categorical: (vocab+1) x d, last row is frozen padding
  ScalarMlp mlp;
  GroupEmbedder group;
};

// One embedder per schema feature; token embeddings are the masked sum of
// feature embeddings plus the positional row. Masking is derived from the
// schema applicability of each feature to the column's token type, so the
// stored values of inactive entries can never influence the output.
class FeatureEmbedderBank {
 public:
  FeatureEmbedderBank() = default;
  FeatureEmbedderBank(tok::FeatureSchema schema, int d, int s_max, Rng& rng);

  const tok::FeatureSchema& schema() const { return schema_; }
  int dim() const { return d_; }
  const PositionalTable& positions() const { return positions_; }

  // Embeds columns [0, s_used) of X into an (s_used x d) tensor.
  nn::Tensor embed(const tok::TokenMatrix& x, int s_used) const;

  // Same, with token_id entries replaced at the given columns (the masked
  // language modeling path). Override ids index the token_id vocabulary.
  nn::Tensor embed_with_token_id_overrides(
      const tok::TokenMatrix& x, int s_used,
      const std::vector<std::pair<int, int>>& overrides) const;

  std::vector<nn::Tensor> parameters() const;

 private:
  tok::FeatureSchema schema_;
  int d_ = 0;
  std::vector<FeatureEmbedder> embedders_;
  PositionalTable positions_;
};

}  // namespace sbm::emb
