#include "sbm/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace sbm::losses {

using nn::Tensor;

void LossConfig::validate() const {
  if (lambda.size() != static_cast<size_t>(kNumHeads))
    throw std::invalid_argument("LossConfig: need one lambda per head");
  for (double l : lambda)
    if (l < 0.0) throw std::invalid_argument("LossConfig: negative lambda");
  if (beta_room < 0.0 || beta_mlm < 0.0 || beta_triplet < 0.0 || beta_geom < 0.0)
    throw std::invalid_argument("LossConfig: negative beta");
  if (mlm_rate <= 0.0 || mlm_rate >= 1.0)
    throw std::invalid_argument("LossConfig: mlm_rate must be in (0,1)");
  if (alpha < 0.0) throw std::invalid_argument("LossConfig: negative margin");
}

DdepTargets targets_from_matrix(const tok::DecMatrix& m) {
  using D = tok::DecTokenType;
  const tok::TokenMatrix& seq = m.seq;
  const tok::FeatureSchema& schema = *seq.schema;
  auto row_of = [&](const char* name) {
    for (int f = 0; f < schema.feature_count(); ++f)
      if (schema.rows[f].name == name) return schema.row_offset(f);
    throw std::logic_error("targets_from_matrix: row not found");
  };
  const int r_cat = row_of("entity_category");
  const int r_edge = row_of("edge_index");
  const int r_t = row_of("t");
  const int r_delta = row_of("delta");
  const int r_size = row_of("size");
  const int r_rho = row_of("rho");
  const int r_extra = row_of("extra");

  DdepTargets out;
  out.length = m.input_length();
  for (int i = 0; i < out.length; ++i) {
    int col = i + 1;  // one-step shift
    int tt = seq.token_type(col);
    out.type.push_back(tt);
    bool entity = tt == static_cast<int>(D::kProp) ||
                  tt == static_cast<int>(D::kCasework);
    bool prop = tt == static_cast<int>(D::kProp);
    out.category.push_back(entity ? static_cast<int>(seq.at(r_cat, col)) : -100);
    out.edge.push_back(entity ? static_cast<int>(seq.at(r_edge, col)) : -100);
    out.extra.push_back(entity ? static_cast<int>(seq.at(r_extra, col)) : -100);
    out.t.push_back(entity ? seq.at(r_t, col) : 0.0);
    out.delta.push_back(entity ? seq.at(r_delta, col) : 0.0);
    out.width.push_back(entity ? seq.at(r_size + 0, col) : 0.0);
    out.depth.push_back(entity ? seq.at(r_size + 1, col) : 0.0);
    out.rho.push_back(prop ? seq.at(r_rho, col) : 0.0);
    out.entity_mask.push_back(entity ? 1.0 : 0.0);
    out.rho_mask.push_back(prop ? 1.0 : 0.0);
  }
  return out;
}

namespace {

// Mean squared error over masked rows; zero tensor when nothing is active.
Tensor masked_mse(const Tensor& pred, const std::vector<double>& target,
                  const std::vector<double>& mask) {
  int n = pred.rows();
  int w = pred.cols();
  double active = 0.0;
  for (double m : mask) active += m;
  if (active == 0.0) return Tensor::scalar(0.0);
  std::vector<double> tdata(static_cast<size_t>(n) * w);
  std::vector<double> mdata(static_cast<size_t>(n) * w);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < w; ++j) {
      tdata[i * w + j] = target[i * w + j];
      mdata[i * w + j] = mask[i];
    }
  Tensor diff = nn::mul(nn::sub(pred, Tensor::from_data({n, w}, tdata)),
                        Tensor::from_data({n, w}, mdata));
  return nn::mul_scalar(nn::sum_all(nn::mul(diff, diff)),
                        1.0 / (active * w));
}

std::vector<double> interleave2(const std::vector<double>& a,
                                const std::vector<double>& b) {
  std::vector<double> out(a.size() * 2);
  for (size_t i = 0; i < a.size(); ++i) {
    out[2 * i] = a[i];
    out[2 * i + 1] = b[i];
  }
  return out;
}

}  // namespace

Tensor ddep_loss(const model::HeadOutputs& outputs, const DdepTargets& targets,
                 const std::vector<double>& lambda) {
  if (lambda.size() != static_cast<size_t>(kNumHeads))
    throw std::invalid_argument("ddep_loss: need one lambda per head");
  if (outputs.type_logits.rows() != targets.length)
    throw std::invalid_argument("ddep_loss: outputs/targets length mismatch");

  Tensor loss = Tensor::scalar(0.0);
  auto accumulate = [&](const Tensor& part, double weight) {
    if (weight == 0.0) return;
    loss = nn::add(loss, nn::mul_scalar(part, weight));
  };
  accumulate(nn::cross_entropy(outputs.type_logits, targets.type),
             lambda[kHeadType]);
  accumulate(nn::cross_entropy(outputs.category_logits, targets.category),
             lambda[kHeadCategory]);
  accumulate(nn::cross_entropy(outputs.edge_logits, targets.edge),
             lambda[kHeadEdge]);
  accumulate(nn::cross_entropy(outputs.extra_logits, targets.extra),
             lambda[kHeadExtra]);
  accumulate(masked_mse(outputs.t_value, targets.t, targets.entity_mask),
             lambda[kHeadT]);
  accumulate(masked_mse(outputs.delta, targets.delta, targets.entity_mask),
             lambda[kHeadDelta]);
  accumulate(masked_mse(outputs.size, interleave2(targets.width, targets.depth),
                        targets.entity_mask),
             lambda[kHeadSize]);
  accumulate(masked_mse(outputs.rho, targets.rho, targets.rho_mask),
             lambda[kHeadRho]);
  return loss;
}

Tensor room_cls_loss(const Tensor& room_logits, int room_type) {
  return nn::cross_entropy(room_logits, {room_type});
}

MlmResult mlm_loss(const tok::EncMatrix& x, int s_used, const model::Model& m,
                   double rate, Rng& rng) {
  int pad = x.schema->pad_type();
  std::vector<int> candidates;
  for (int s = 0; s < s_used; ++s)
    if (x.token_type(s) != pad) candidates.push_back(s);

  std::vector<std::pair<int, int>> overrides;
  std::vector<int> targets(s_used, -100);
  auto draw = [&] {
    overrides.clear();
    std::fill(targets.begin(), targets.end(), -100);
    for (int s : candidates) {
      if (uniform(rng, 0.0, 1.0) < rate) {
        overrides.emplace_back(s, tok::kMaskTokenId);
        targets[s] = static_cast<int>(x.at(1, s));  // original token_id
      }
    }
  };
  draw();
  if (overrides.empty()) draw();  // resample once
  MlmResult res;
  res.masked_positions = static_cast<int>(overrides.size());
  if (overrides.empty()) {
    res.loss = Tensor::scalar(0.0);
    return res;
  }
  Tensor e = m.encoder_bank().embed_with_token_id_overrides(x, s_used, overrides);
  std::vector<uint8_t> mask(x.attn_mask.begin(), x.attn_mask.begin() + s_used);
  Tensor memory = m.encode(e, mask);
  Tensor logits = m.mlm_logits(memory);
  res.loss = nn::cross_entropy(logits, targets);
  return res;
}

Tensor triplet_loss(const Tensor& z_a, const Tensor& z_p, const Tensor& z_n,
                    double alpha) {
  auto dist = [](const Tensor& a, const Tensor& b) {
    Tensor d = nn::sub(a, b);
    return nn::sqrt_t(nn::add_scalar(nn::sum_all(nn::mul(d, d)), 1e-12));
  };
  Tensor margin = nn::add_scalar(nn::sub(dist(z_a, z_p), dist(z_a, z_n)), alpha);
  return nn::relu(margin);
}

Descriptor descriptor_of(const RoomEnvelope& env) {
  return {env.layout.area, env.layout.perimeter, env.layout.n_edges,
          env.layout.aspect_ratio, env.layout.compactness};
}

std::vector<Descriptor> standardize_descriptors(
    const std::vector<Descriptor>& g) {
  std::vector<Descriptor> out = g;
  if (g.empty()) return out;
  for (int k = 0; k < 5; ++k) {
    double mean = 0.0;
    for (const Descriptor& d : g) mean += d[k];
    mean /= g.size();
    double var = 0.0;
    for (const Descriptor& d : g) var += (d[k] - mean) * (d[k] - mean);
    var /= g.size();
    double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (size_t i = 0; i < g.size(); ++i) out[i][k] = (g[i][k] - mean) * inv;
  }
  return out;
}

Tensor geom_preserve_loss(const std::vector<Tensor>& zs,
                          const std::vector<Descriptor>& descriptors) {
  size_t n = zs.size();
  if (n != descriptors.size())
    throw std::invalid_argument("geom_preserve_loss: batch size mismatch");
  if (n < 2) return Tensor::scalar(0.0);

  auto std_desc = standardize_descriptors(descriptors);
  std::vector<Tensor> dz;
  std::vector<double> dg;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      Tensor d = nn::sub(zs[i], zs[j]);
      dz.push_back(nn::sqrt_t(nn::add_scalar(nn::sum_all(nn::mul(d, d)), 1e-12)));
      double acc = 0.0;
      for (int k = 0; k < 5; ++k) {
        double delta = std_desc[i][k] - std_desc[j][k];
        acc += delta * delta;
      }
      dg.push_back(std::sqrt(acc));
    }
  }
  // normalize each distance matrix by its own maximum entry
  size_t z_max_idx = 0;
  double g_max = 0.0;
  for (size_t p = 0; p < dz.size(); ++p) {
    if (dz[p].item() > dz[z_max_idx].item()) z_max_idx = p;
    g_max = std::max(g_max, dg[p]);
  }
  if (dz[z_max_idx].item() < 1e-9 || g_max < 1e-12)
    return Tensor::scalar(0.0);  // identical rooms: both matrices zero

  Tensor loss = Tensor::scalar(0.0);
  for (size_t p = 0; p < dz.size(); ++p) {
    Tensor nz = nn::div(dz[p], dz[z_max_idx]);
    Tensor diff = nn::add_scalar(nz, -dg[p] / g_max);
    loss = nn::add(loss, nn::mul(diff, diff));
  }
  return nn::mul_scalar(loss, 1.0 / static_cast<double>(dz.size()));
}

Tensor total_loss(const LossParts& parts, const LossConfig& cfg) {
  cfg.validate();
  Tensor total = parts.ddep.defined() ? parts.ddep : Tensor::scalar(0.0);
  auto accumulate = [&](const Tensor& part, double beta) {
    if (!part.defined() || beta == 0.0) return;
    total = nn::add(total, nn::mul_scalar(part, beta));
  };
  accumulate(parts.room, cfg.beta_room);
  accumulate(parts.mlm, cfg.beta_mlm);
  accumulate(parts.triplet, cfg.beta_triplet);
  accumulate(parts.geom, cfg.beta_geom);
  return total;
}

}  // namespace sbm::losses
