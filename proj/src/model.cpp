#include "sbm/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "sbm/geometry.hpp"

namespace sbm::model {

using nn::Tensor;

namespace {
constexpr double kInitStd = 0.02;
constexpr double kMaskedLogit = -1e30;
constexpr const char* kCheckpointMagic = "SBMCKPT1";
}  // namespace

void ModelConfig::validate() const {
  if (d <= 0 || n_heads <= 0 || d % n_heads != 0)
    throw std::invalid_argument("ModelConfig: d must be divisible by n_heads");
  if (n_layers_enc < 0 || n_layers_dec < 0 || ffn_mult <= 0)
    throw std::invalid_argument("ModelConfig: bad layer counts");
  if (s_enc < 8 || s_dec < 4)
    throw std::invalid_argument("ModelConfig: sequence capacity too small");
}

void to_json(nlohmann::ordered_json& j, const ModelConfig& cfg) {
  j["d"] = cfg.d;
  j["n_layers_enc"] = cfg.n_layers_enc;
  j["n_layers_dec"] = cfg.n_layers_dec;
  j["n_heads"] = cfg.n_heads;
  j["ffn_mult"] = cfg.ffn_mult;
  j["s_enc"] = cfg.s_enc;
  j["s_dec"] = cfg.s_dec;
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
  cfg.d = j.value("d", cfg.d);
  cfg.n_layers_enc = j.value("n_layers_enc", cfg.n_layers_enc);
  cfg.n_layers_dec = j.value("n_layers_dec", cfg.n_layers_dec);
  cfg.n_heads = j.value("n_heads", cfg.n_heads);
  cfg.ffn_mult = j.value("ffn_mult", cfg.ffn_mult);
  cfg.s_enc = j.value("s_enc", cfg.s_enc);
  cfg.s_dec = j.value("s_dec", cfg.s_dec);
}

Linear::Linear(int in, int out, Rng& rng)
    : w(Tensor::randn({in, out}, rng, kInitStd)), b(Tensor::zeros({out})) {
  w.set_requires_grad();
  b.set_requires_grad();
}

LayerNorm::LayerNorm(int d)
    : gain(Tensor::full({d}, 1.0)), bias(Tensor::zeros({d})) {
  gain.set_requires_grad();
  bias.set_requires_grad();
}

Attention::Attention(int d, int heads, Rng& rng)
    : q(d, d, rng), k(d, d, rng), v(d, d, rng), o(d, d, rng), n_heads(heads) {}

Tensor Attention::forward(const Tensor& x, const Tensor& kv,
                          const std::vector<uint8_t>& key_mask,
                          bool causal) const {
  int d = x.cols();
  int dk = d / n_heads;
  int n_q = x.rows();
  int n_k = kv.rows();
  if (static_cast<int>(key_mask.size()) != n_k)
    throw std::invalid_argument("Attention: key mask size mismatch");

  Tensor qp = q.forward(x);
  Tensor kp = k.forward(kv);
  Tensor vp = v.forward(kv);

  // additive mask: 0 for allowed, large negative for disallowed keys
  std::vector<double> mask_data(static_cast<size_t>(n_q) * n_k, 0.0);
  for (int i = 0; i < n_q; ++i)
    for (int j = 0; j < n_k; ++j) {
      bool allowed = key_mask[j] && (!causal || j <= i);
      if (!allowed) mask_data[i * n_k + j] = kMaskedLogit;
    }
  Tensor mask = Tensor::from_data({n_q, n_k}, std::move(mask_data));

  std::vector<Tensor> head_outputs;
  double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = nn::slice_cols(qp, h * dk, (h + 1) * dk);
    Tensor kh = nn::slice_cols(kp, h * dk, (h + 1) * dk);
    Tensor vh = nn::slice_cols(vp, h * dk, (h + 1) * dk);
    Tensor scores =
        nn::mul_scalar(nn::matmul(qh, nn::transpose(kh)), scale);
    Tensor attn = nn::softmax_rows(nn::add(scores, mask));
    head_outputs.push_back(nn::matmul(attn, vh));
  }
  // concatenate heads along columns: transpose-free assembly via row concat
  // on transposed pieces would cost more; simplest is a column concat
  Tensor merged;
  for (int h = 0; h < n_heads; ++h) {
    if (!merged.defined()) {
      merged = head_outputs[h];
    } else {
      // build [merged | head] by concatenating columns through transpose
      merged = nn::transpose(
          nn::concat_rows({nn::transpose(merged), nn::transpose(head_outputs[h])}));
    }
  }
  return o.forward(merged);
}

EncoderBlock::EncoderBlock(const ModelConfig& cfg, Rng& rng)
    : ln1(cfg.d),
      ln2(cfg.d),
      attn(cfg.d, cfg.n_heads, rng),
      ffn1(cfg.d, cfg.d * cfg.ffn_mult, rng),
      ffn2(cfg.d * cfg.ffn_mult, cfg.d, rng) {}

Tensor EncoderBlock::forward(const Tensor& x,
                             const std::vector<uint8_t>& mask) const {
  Tensor h = ln1.forward(x);
  Tensor y = nn::add(x, attn.forward(h, h, mask, /*causal=*/false));
  Tensor f = ffn2.forward(nn::gelu(ffn1.forward(ln2.forward(y))));
  return nn::add(y, f);
}

DecoderBlock::DecoderBlock(const ModelConfig& cfg, Rng& rng)
    : ln1(cfg.d),
      ln_cross(cfg.d),
      ln2(cfg.d),
      self_attn(cfg.d, cfg.n_heads, rng),
      cross_attn(cfg.d, cfg.n_heads, rng),
      ffn1(cfg.d, cfg.d * cfg.ffn_mult, rng),
      ffn2(cfg.d * cfg.ffn_mult, cfg.d, rng) {}

Tensor DecoderBlock::forward(const Tensor& x, const Tensor& memory,
                             const std::vector<uint8_t>& memory_mask) const {
  std::vector<uint8_t> self_mask(x.rows(), 1);
  Tensor h = ln1.forward(x);
  Tensor y = nn::add(x, self_attn.forward(h, h, self_mask, /*causal=*/true));
  Tensor c = ln_cross.forward(y);
  y = nn::add(y, cross_attn.forward(c, memory, memory_mask, /*causal=*/false));
  Tensor f = ffn2.forward(nn::gelu(ffn1.forward(ln2.forward(y))));
  return nn::add(y, f);
}

Model::Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_rng(seed);
  int s_max = std::max(cfg.s_enc, cfg.s_dec);
  enc_bank_ = emb::FeatureEmbedderBank(tok::default_encoder_schema(), cfg.d,
                                       s_max, rng);
  dec_bank_ = emb::FeatureEmbedderBank(tok::default_decoder_schema(), cfg.d,
                                       s_max, rng);
  for (int i = 0; i < cfg.n_layers_enc; ++i) enc_blocks_.emplace_back(cfg, rng);
  for (int i = 0; i < cfg.n_layers_dec; ++i) dec_blocks_.emplace_back(cfg, rng);
  type_head_ = Linear(cfg.d, tok::kNumDecTokenTypes, rng);
  category_head_ = Linear(cfg.d, kNumEntityCategories, rng);
  edge_head_ = Linear(cfg.d, tok::kMaxEdges, rng);
  t_head_ = Linear(cfg.d, 1, rng);
  delta_head_ = Linear(cfg.d, 1, rng);
  size_head_ = Linear(cfg.d, 2, rng);
  rho_head_ = Linear(cfg.d, 1, rng);
  extra_head_ = Linear(cfg.d, kNumEntityExtras, rng);
  room_cls_head_ = Linear(cfg.d, kNumRoomTypes, rng);
  mlm_head_ = Linear(cfg.d, tok::kTokenIdVocab, rng);
}

Tensor Model::encode(const Tensor& e_enc,
                     const std::vector<uint8_t>& attn_mask) const {
  Tensor m = e_enc;
  for (const EncoderBlock& block : enc_blocks_) m = block.forward(m, attn_mask);
  return m;
}

Tensor Model::encode_matrix(const tok::EncMatrix& x, int s_used) const {
  Tensor e = enc_bank_.embed(x, s_used);
  std::vector<uint8_t> mask(x.attn_mask.begin(), x.attn_mask.begin() + s_used);
  return encode(e, mask);
}

Tensor Model::pool_cls(const Tensor& memory) {
  return nn::slice_rows(memory, 0, 1);
}

Tensor Model::decode_states(const Tensor& e_dec, const Tensor& memory,
                            const std::vector<uint8_t>& memory_mask) const {
  Tensor h = e_dec;
  for (const DecoderBlock& block : dec_blocks_)
    h = block.forward(h, memory, memory_mask);
  return h;
}

HeadOutputs Model::apply_heads(const Tensor& states) const {
  HeadOutputs out;
  out.type_logits = type_head_.forward(states);
  out.category_logits = category_head_.forward(states);
  out.edge_logits = edge_head_.forward(states);
  out.t_value = nn::sigmoid(t_head_.forward(states));
  out.delta = delta_head_.forward(states);
  out.size = size_head_.forward(states);
  out.rho = rho_head_.forward(states);
  out.extra_logits = extra_head_.forward(states);
  return out;
}

HeadOutputs Model::decode_teacher_forced(
    const Tensor& e_dec, const Tensor& memory,
    const std::vector<uint8_t>& memory_mask) const {
  return apply_heads(decode_states(e_dec, memory, memory_mask));
}

Tensor Model::room_cls_logits(const Tensor& z) const {
  return room_cls_head_.forward(z);
}

Tensor Model::mlm_logits(const Tensor& memory) const {
  return mlm_head_.forward(memory);
}

// ---------------------------------------------------------------------------
// Constrained generation
// ---------------------------------------------------------------------------

namespace {

int pick_index(const std::vector<double>& logits, const std::vector<bool>& allowed,
               DecodeMode mode, double temperature, Rng* rng) {
  // greedy: argmax over allowed entries; sampled: softmax draw
  if (mode == DecodeMode::kGreedy) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < logits.size(); ++i) {
      if (!allowed[i]) continue;
      if (logits[i] > best_v) {
        best_v = logits[i];
        best = static_cast<int>(i);
      }
    }
    return best;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) mx = std::max(mx, logits[i] / temperature);
  std::vector<double> probs(logits.size(), 0.0);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!allowed[i]) continue;
    probs[i] = std::exp(logits[i] / temperature - mx);
    sum += probs[i];
  }
  double x = uniform(*rng, 0.0, sum);
  for (size_t i = 0; i < probs.size(); ++i) {
    x -= probs[i];
    if (allowed[i] && x <= 0.0) return static_cast<int>(i);
  }
  for (int i = static_cast<int>(probs.size()) - 1; i >= 0; --i)
    if (allowed[i]) return i;
  return -1;
}

std::vector<double> row_of(const Tensor& t, int row) {
  std::vector<double> out(t.cols());
  for (int j = 0; j < t.cols(); ++j) out[j] = t.at(row, j);
  return out;
}

}  // namespace

std::vector<tok::EntityTokenValues> Model::generate_tokens(
    const RoomEnvelope& env, const DecodeConstraints& constraints,
    DecodeMode mode, const SampleParams& sample) const {
  nn::NoGradGuard no_grad;
  Rng rng = make_rng(sample.seed);

  tok::EncMatrix enc = tok::encode_envelope(env, cfg_.s_enc);
  int s_enc_used = enc.active_length();
  Tensor memory = encode_matrix(enc, s_enc_used);
  std::vector<uint8_t> memory_mask(s_enc_used, 1);

  const tok::FeatureSchema& schema = dec_bank_.schema();
  using D = tok::DecTokenType;

  // incrementally grown decoder input matrix, starting at SOS
  tok::TokenMatrix seq;
  seq.schema = &schema;
  int capacity = cfg_.s_dec;
  seq.seq_len = capacity;
  seq.values.assign(static_cast<size_t>(schema.num_value_rows()) * capacity,
                    tok::kSentinel);
  seq.attn_mask.assign(capacity, 0);
  auto set_cell = [&](const char* name, int col, double v) {
    for (int f = 0; f < schema.feature_count(); ++f)
      if (schema.rows[f].name == name) {
        seq.values[static_cast<size_t>(schema.row_offset(f)) * capacity + col] = v;
        return;
      }
    throw std::logic_error("generate: unknown row");
  };
  set_cell("token_type_id", 0, static_cast<double>(static_cast<int>(D::kSos)));
  set_cell("token_id", 0, 0.0);
  seq.attn_mask[0] = 1;

  int max_steps =
      std::min(constraints.max_steps, capacity - 2);
  std::vector<tok::EntityTokenValues> out;
  int prop_count = 0, casework_count = 0;

  for (int step = 0; step < max_steps + 1; ++step) {
    int len = step + 1;
    Tensor e_dec = dec_bank_.embed(seq, len);
    Tensor states = decode_states(e_dec, memory, memory_mask);
    HeadOutputs heads = apply_heads(nn::slice_rows(states, len - 1, len));

    // grammar: after SOS or an entity the decoder may emit PROP, CASEWORK or
    // EOS; at the step budget it must emit EOS
    std::vector<bool> type_allowed(tok::kNumDecTokenTypes, false);
    if (step == max_steps) {
      type_allowed[static_cast<int>(D::kEos)] = true;
    } else {
      type_allowed[static_cast<int>(D::kProp)] = true;
      type_allowed[static_cast<int>(D::kCasework)] = true;
      type_allowed[static_cast<int>(D::kEos)] = true;
    }
    int type = pick_index(row_of(heads.type_logits, 0), type_allowed, mode,
                          sample.temperature, &rng);
    if (type == static_cast<int>(D::kEos)) break;

    bool is_prop = type == static_cast<int>(D::kProp);
    // categories restricted to the chosen kind so the output room validates
    std::vector<bool> cat_allowed(kNumEntityCategories, false);
    for (int c = 0; c < kNumEntityCategories; ++c)
      cat_allowed[c] = (category_kind(c) == EntityKind::kProp) == is_prop;
    int category = pick_index(row_of(heads.category_logits, 0), cat_allowed,
                              mode, sample.temperature, &rng);

    std::vector<bool> edge_allowed(tok::kMaxEdges, false);
    for (int e = 0; e < std::min(constraints.n_edges, tok::kMaxEdges); ++e)
      edge_allowed[e] = true;
    int edge = pick_index(row_of(heads.edge_logits, 0), edge_allowed, mode,
                          sample.temperature, &rng);

    std::vector<bool> extra_allowed(kNumEntityExtras, true);
    int extra = pick_index(row_of(heads.extra_logits, 0), extra_allowed, mode,
                           sample.temperature, &rng);

    tok::EntityTokenValues v;
    v.token_type = type;
    v.category = category;
    v.edge_index = edge;
    v.t = std::clamp(heads.t_value.at(0, 0), 0.0, 1.0);
    v.delta = std::clamp(heads.delta.at(0, 0), constraints.delta_min,
                         constraints.delta_max);
    v.width = std::clamp(heads.size.at(0, 0), constraints.size_min,
                         constraints.size_max);
    v.depth = std::clamp(heads.size.at(0, 1), constraints.size_min,
                         constraints.size_max);
    v.rho = is_prop ? geom::normalize_angle(heads.rho.at(0, 0)) : 0.0;
    v.extra = extra;
    out.push_back(v);

    // append the generated token as the next decoder input column
    int col = len;
    int token_id = is_prop ? prop_count++ : casework_count++;
    set_cell("token_type_id", col, type);
    set_cell("token_id", col,
             std::min(token_id, tok::kMaskTokenId - 1));
    set_cell("entity_category", col, category);
    set_cell("edge_index", col, edge);
    set_cell("t", col, v.t);
    set_cell("delta", col, v.delta);
    for (int f = 0; f < schema.feature_count(); ++f)
      if (schema.rows[f].name == "size") {
        seq.values[static_cast<size_t>(schema.row_offset(f)) * capacity + col] =
            v.width;
        seq.values[static_cast<size_t>(schema.row_offset(f) + 1) * capacity +
                   col] = v.depth;
      }
    if (is_prop) set_cell("rho", col, v.rho);
    set_cell("extra", col, extra);
    seq.attn_mask[col] = 1;
  }
  return out;
}

std::vector<Entity> Model::generate(const RoomEnvelope& env,
                                    const DecodeConstraints& constraints,
                                    DecodeMode mode,
                                    const SampleParams& sample) const {
  return tok::decode_token_values(generate_tokens(env, constraints, mode, sample),
                                  env);
}

// ---------------------------------------------------------------------------
// Parameters and checkpointing
// ---------------------------------------------------------------------------

namespace {

void collect_linear(const Linear& l, std::vector<Tensor>& out) {
  out.push_back(l.w);
  out.push_back(l.b);
}

void collect_layer_norm(const LayerNorm& ln, std::vector<Tensor>& out) {
  out.push_back(ln.gain);
  out.push_back(ln.bias);
}

void collect_attention(const Attention& a, std::vector<Tensor>& out) {
  collect_linear(a.q, out);
  collect_linear(a.k, out);
  collect_linear(a.v, out);
  collect_linear(a.o, out);
}

}  // namespace

std::vector<Tensor> Model::encoder_parameters() const {
  std::vector<Tensor> out = enc_bank_.parameters();
  for (const EncoderBlock& b : enc_blocks_) {
    collect_layer_norm(b.ln1, out);
    collect_attention(b.attn, out);
    collect_layer_norm(b.ln2, out);
    collect_linear(b.ffn1, out);
    collect_linear(b.ffn2, out);
  }
  collect_linear(room_cls_head_, out);
  collect_linear(mlm_head_, out);
  return out;
}

std::vector<Tensor> Model::decoder_parameters() const {
  std::vector<Tensor> out = dec_bank_.parameters();
  for (const DecoderBlock& b : dec_blocks_) {
    collect_layer_norm(b.ln1, out);
    collect_attention(b.self_attn, out);
    collect_layer_norm(b.ln_cross, out);
    collect_attention(b.cross_attn, out);
    collect_layer_norm(b.ln2, out);
    collect_linear(b.ffn1, out);
    collect_linear(b.ffn2, out);
  }
  collect_linear(type_head_, out);
  collect_linear(category_head_, out);
  collect_linear(edge_head_, out);
  collect_linear(t_head_, out);
  collect_linear(delta_head_, out);
  collect_linear(size_head_, out);
  collect_linear(rho_head_, out);
  collect_linear(extra_head_, out);
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out = encoder_parameters();
  std::vector<Tensor> dec = decoder_parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

void Model::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Model::save: cannot open " + path);
  auto params = parameters();
  nlohmann::ordered_json header;
  header["config"] = cfg_;
  header["enc_schema"] = enc_bank_.schema().fingerprint();
  header["dec_schema"] = dec_bank_.schema().fingerprint();
  nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
  for (const Tensor& p : params) shapes.push_back(p.shape());
  header["shapes"] = shapes;
  std::string hs = header.dump();
  uint64_t hlen = hs.size();
  out.write(kCheckpointMagic, 8);
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Tensor& p : params)
    out.write(reinterpret_cast<const char*>(p.data().data()),
              static_cast<std::streamsize>(p.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("Model::save: write failed for " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Model::load: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("Model::load: not a checkpoint file: " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  auto header = nlohmann::json::parse(hs);
  ModelConfig cfg = header.at("config").get<ModelConfig>();

  Model m(cfg, /*seed=*/0);
  if (header.at("enc_schema").get<uint64_t>() !=
          m.enc_bank_.schema().fingerprint() ||
      header.at("dec_schema").get<uint64_t>() !=
          m.dec_bank_.schema().fingerprint())
    throw std::runtime_error(
        "Model::load: checkpoint schema fingerprint mismatch");

  auto params = m.parameters();
  const auto& shapes = header.at("shapes");
  if (shapes.size() != params.size())
    throw std::runtime_error("Model::load: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    auto expect = shapes[i].get<std::vector<int>>();
    if (expect != params[i].shape())
      throw std::runtime_error("Model::load: parameter shape mismatch at " +
                               std::to_string(i));
    in.read(reinterpret_cast<char*>(params[i].mutable_data().data()),
            static_cast<std::streamsize>(params[i].numel() * sizeof(double)));
  }
  if (!in) throw std::runtime_error("Model::load: truncated checkpoint");
  return m;
}

}  // namespace sbm::model
