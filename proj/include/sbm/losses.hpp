#pragma once

#include <array>
#include <vector>

#include "sbm/model.hpp"
#include "sbm/tensor.hpp"
#include "sbm/tokenizer.hpp"

namespace sbm::losses {

// Index order of the DDEP head weights.
enum HeadIndex : int {
  kHeadType = 0,
  kHeadCategory,
  kHeadEdge,
  kHeadT,
  kHeadDelta,
  kHeadSize,
  kHeadRho,
  kHeadExtra,
  kNumHeads,
};

struct LossConfig {
  std::vector<double> lambda = std::vector<double>(kNumHeads, 1.0);
  double beta_room = 0.5;
  double beta_mlm = 0.5;
  double beta_triplet = 0.2;
  double beta_geom = 0.1;
  double alpha = 0.2;      // triplet margin
  double mlm_rate = 0.15;  // token_id masking probability

  void validate() const;  // throws std::invalid_argument
};

// Ground-truth head values aligned to teacher-forced input positions: the
// target for input position i is sequence column i+1. Sentinels (-100 /
// zero masks) mark heads that are inactive for a target's token type.
struct DdepTargets {
  int length = 0;               // number of supervised positions
  std::vector<int> type;        // decoder token type ids
  std::vector<int> category;    // -100 where not an entity
  std::vector<int> edge;
  std::vector<int> extra;
  std::vector<double> t, delta, width, depth, rho;
  std::vector<double> entity_mask;  // 1 where the target is an entity
  std::vector<double> rho_mask;     // 1 where the target is a prop
};

DdepTargets targets_from_matrix(const tok::DecMatrix& m);

// Weighted sum over heads: cross-entropy for categorical heads, MSE for
// regression heads, each averaged over its active positions.
nn::Tensor ddep_loss(const model::HeadOutputs& outputs,
                     const DdepTargets& targets,
                     const std::vector<double>& lambda);

// Softmax cross-entropy of the room-type head at the CLS embedding.
nn::Tensor room_cls_loss(const nn::Tensor& room_logits, int room_type);

struct MlmResult {
  nn::Tensor loss;
  int masked_positions = 0;
};

// Masks token_id entries of non-PAD columns at `rate`, re-encodes, and
// scores the id head on the masked positions only. A draw with zero masked
// positions is resampled once, then contributes zero.
MlmResult mlm_loss(const tok::EncMatrix& x, int s_used, const model::Model& m,
                   double rate, Rng& rng);

// max(0, ||z_a - z_p|| - ||z_a - z_n|| + alpha)
nn::Tensor triplet_loss(const nn::Tensor& z_a, const nn::Tensor& z_p,
                        const nn::Tensor& z_n, double alpha);

using Descriptor = std::array<double, 5>;  // area, perimeter, n_edges,
                                           // aspect_ratio, compactness

Descriptor descriptor_of(const RoomEnvelope& env);
// Batch standardization with eps = 1e-8 per dimension.
std::vector<Descriptor> standardize_descriptors(const std::vector<Descriptor>& g);

// Squared Frobenius distance between max-normalized pairwise distance
// matrices of the embeddings and the descriptors, divided by pair count.
nn::Tensor geom_preserve_loss(const std::vector<nn::Tensor>& zs,
                              const std::vector<Descriptor>& descriptors);

struct LossParts {
  nn::Tensor ddep;
  nn::Tensor room;
  nn::Tensor mlm;
  nn::Tensor triplet;
  nn::Tensor geom;
};

// L = L_DDEP + beta_r L_room + beta_M L_MLM + beta_t L_triplet + beta_g L_geom.
// Undefined parts contribute zero.
nn::Tensor total_loss(const LossParts& parts, const LossConfig& cfg);

}  // namespace sbm::losses
