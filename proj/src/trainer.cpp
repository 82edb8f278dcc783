#include "sbm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace sbm::training {

using losses::LossParts;
using model::Model;
using nn::Tensor;

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "joint") return TrainMode::kJoint;
  if (s == "encoder_only") return TrainMode::kEncoderOnly;
  if (s == "ddep_only") return TrainMode::kDdepOnly;
  throw std::invalid_argument("unknown train mode: " + s);
}

std::string train_mode_to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kJoint: return "joint";
    case TrainMode::kEncoderOnly: return "encoder_only";
    case TrainMode::kDdepOnly: return "ddep_only";
  }
  return "joint";
}

void TrainConfig::validate() const {
  if (epochs <= 0 || batch_size <= 0)
    throw std::invalid_argument("TrainConfig: non-positive counts");
  if (lr <= 0.0) throw std::invalid_argument("TrainConfig: non-positive lr");
  loss.validate();
}

void to_json(nlohmann::ordered_json& j, const TrainConfig& cfg) {
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["seed"] = cfg.seed;
  j["eval_interval"] = cfg.eval_interval;
  j["checkpoint_path"] = cfg.checkpoint_path;
  j["log_path"] = cfg.log_path;
  j["mode"] = train_mode_to_string(cfg.mode);
  nlohmann::ordered_json jl;
  jl["lambda"] = cfg.loss.lambda;
  jl["beta_room"] = cfg.loss.beta_room;
  jl["beta_mlm"] = cfg.loss.beta_mlm;
  jl["beta_triplet"] = cfg.loss.beta_triplet;
  jl["beta_geom"] = cfg.loss.beta_geom;
  jl["alpha"] = cfg.loss.alpha;
  jl["mlm_rate"] = cfg.loss.mlm_rate;
  j["loss"] = jl;
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
  cfg.checkpoint_path = j.value("checkpoint_path", cfg.checkpoint_path);
  cfg.log_path = j.value("log_path", cfg.log_path);
  if (j.contains("mode"))
    cfg.mode = train_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("loss")) {
    const auto& jl = j.at("loss");
    cfg.loss.lambda = jl.value("lambda", cfg.loss.lambda);
    cfg.loss.beta_room = jl.value("beta_room", cfg.loss.beta_room);
    cfg.loss.beta_mlm = jl.value("beta_mlm", cfg.loss.beta_mlm);
    cfg.loss.beta_triplet = jl.value("beta_triplet", cfg.loss.beta_triplet);
    cfg.loss.beta_geom = jl.value("beta_geom", cfg.loss.beta_geom);
    cfg.loss.alpha = jl.value("alpha", cfg.loss.alpha);
    cfg.loss.mlm_rate = jl.value("mlm_rate", cfg.loss.mlm_rate);
  }
}

void TrainLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("TrainLog::save: cannot open " + path);
  for (const StepRecord& s : steps) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["ddep"] = s.ddep;
    j["room"] = s.room;
    j["mlm"] = s.mlm;
    j["triplet"] = s.triplet;
    j["geom"] = s.geom;
    j["total"] = s.total;
    out << j.dump() << "\n";
  }
  for (const auto& e : evals) out << e.dump() << "\n";
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["ddep_loss"] = ddep_loss;
  j["category_accuracy"] = category_accuracy;
  j["type_accuracy"] = type_accuracy;
  j["continuous_mae"] = continuous_mae;
  j["rooms"] = rooms;
  return j;
}

// ---------------------------------------------------------------------------
// Batch assembly
// ---------------------------------------------------------------------------

namespace {

struct PreparedRoom {
  tok::EncMatrix enc;
  int enc_len = 0;
  tok::DecMatrix dec;
  int dec_len = 0;
  losses::DdepTargets targets;
  int room_type = 0;
  losses::Descriptor descriptor{};
};

PreparedRoom prepare_room(const Room& room, const model::ModelConfig& cfg) {
  NormalizationRecord rec;
  Room normalized = normalize_room(room, rec);
  PreparedRoom p;
  p.enc = tok::encode_envelope(normalized.envelope, cfg.s_enc);
  p.enc_len = p.enc.active_length();
  p.dec = tok::encode_entities(normalized, cfg.s_dec);
  p.dec_len = p.dec.input_length();
  p.targets = losses::targets_from_matrix(p.dec);
  p.room_type = normalized.envelope.room_type;
  p.descriptor = losses::descriptor_of(normalized.envelope);
  return p;
}

struct BatchForward {
  LossParts parts;
  std::vector<Tensor> z;  // pooled embeddings per room
};

double finite_or_throw(const LossParts& parts, const Tensor& total, int step) {
  double v = total.item();
  if (std::isfinite(v)) return v;
  auto val = [](const Tensor& t) {
    return t.defined() ? t.item() : 0.0;
  };
  throw std::runtime_error(
      "train: non-finite loss at step " + std::to_string(step) +
      " (ddep=" + std::to_string(val(parts.ddep)) +
      ", room=" + std::to_string(val(parts.room)) +
      ", mlm=" + std::to_string(val(parts.mlm)) +
      ", triplet=" + std::to_string(val(parts.triplet)) +
      ", geom=" + std::to_string(val(parts.geom)) + ")");
}

Tensor mean_of(std::vector<Tensor>& terms) {
  if (terms.empty()) return Tensor::scalar(0.0);
  Tensor acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = nn::add(acc, terms[i]);
  return nn::mul_scalar(acc, 1.0 / static_cast<double>(terms.size()));
}

BatchForward forward_batch(const Model& m, const std::vector<PreparedRoom>& batch,
                           const TrainConfig& cfg, Rng& step_rng) {
  bool want_ddep = cfg.mode != TrainMode::kEncoderOnly;
  bool want_encoder_aux = cfg.mode != TrainMode::kDdepOnly;

  BatchForward out;
  std::vector<Tensor> ddep_terms, room_terms, mlm_terms;
  for (const PreparedRoom& p : batch) {
    Tensor memory = m.encode_matrix(p.enc, p.enc_len);
    Tensor z = Model::pool_cls(memory);
    out.z.push_back(z);

    if (want_ddep) {
      Tensor e_dec = m.decoder_bank().embed(p.dec.seq, p.dec_len);
      std::vector<uint8_t> memory_mask(p.enc_len, 1);
      auto heads = m.decode_teacher_forced(e_dec, memory, memory_mask);
      ddep_terms.push_back(losses::ddep_loss(heads, p.targets, cfg.loss.lambda));
    }
    if (want_encoder_aux) {
      room_terms.push_back(
          losses::room_cls_loss(m.room_cls_logits(z), p.room_type));
      if (cfg.loss.beta_mlm > 0.0) {
        auto mlm = losses::mlm_loss(p.enc, p.enc_len, m, cfg.loss.mlm_rate,
                                    step_rng);
        mlm_terms.push_back(mlm.loss);
      }
    }
  }
  if (want_ddep) out.parts.ddep = mean_of(ddep_terms);
  if (want_encoder_aux) {
    out.parts.room = mean_of(room_terms);
    if (!mlm_terms.empty()) out.parts.mlm = mean_of(mlm_terms);

    if (cfg.loss.beta_triplet > 0.0 && batch.size() >= 3) {
      // triplets sampled within the batch by room type
      std::vector<Tensor> triplet_terms;
      for (size_t a = 0; a < batch.size(); ++a) {
        std::vector<int> same, diff;
        for (size_t j = 0; j < batch.size(); ++j) {
          if (j == a) continue;
          (batch[j].room_type == batch[a].room_type ? same : diff)
              .push_back(static_cast<int>(j));
        }
        if (same.empty() || diff.empty()) continue;
        int p_idx = same[uniform_int(step_rng, 0,
                                     static_cast<int>(same.size()) - 1)];
        int n_idx = diff[uniform_int(step_rng, 0,
                                     static_cast<int>(diff.size()) - 1)];
        triplet_terms.push_back(losses::triplet_loss(
            out.z[a], out.z[p_idx], out.z[n_idx], cfg.loss.alpha));
      }
      if (!triplet_terms.empty()) out.parts.triplet = mean_of(triplet_terms);
    }
    if (cfg.loss.beta_geom > 0.0 && batch.size() >= 2) {
      std::vector<losses::Descriptor> descriptors;
      for (const PreparedRoom& p : batch) descriptors.push_back(p.descriptor);
      out.parts.geom = losses::geom_preserve_loss(out.z, descriptors);
    }
  }
  return out;
}

}  // namespace

TrainLog train(const std::vector<data::RoomRecord>& corpus, Model& model,
               const TrainConfig& cfg) {
  cfg.validate();
  std::vector<PreparedRoom> rooms;
  for (const auto& rec : corpus)
    if (rec.split == "train") rooms.push_back(prepare_room(rec.room, model.config()));
  if (rooms.empty()) throw std::invalid_argument("train: no training rooms");

  std::vector<Tensor> params = cfg.mode == TrainMode::kEncoderOnly
                                   ? model.encoder_parameters()
                                   : model.parameters();
  nn::AdamState adam;
  TrainLog log;
  int step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(rooms.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<PreparedRoom> batch;
      for (size_t i = start; i < end; ++i) batch.push_back(rooms[order[i]]);

      Rng step_rng = make_rng(derive_seed(cfg.seed, 2000000 + step));
      nn::zero_grad(params);
      BatchForward fwd = forward_batch(model, batch, cfg, step_rng);
      Tensor total = losses::total_loss(fwd.parts, cfg.loss);
      double total_v = finite_or_throw(fwd.parts, total, step);
      nn::backward(total);
      nn::adam_step(params, adam, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                    cfg.adam_eps);

      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      auto val = [](const Tensor& t) { return t.defined() ? t.item() : 0.0; };
      rec.ddep = val(fwd.parts.ddep);
      rec.room = val(fwd.parts.room);
      rec.mlm = val(fwd.parts.mlm);
      rec.triplet = val(fwd.parts.triplet);
      rec.geom = val(fwd.parts.geom);
      rec.total = total_v;
      log.steps.push_back(rec);
      ++step;
    }

    if (cfg.eval_interval > 0 && (epoch + 1) % cfg.eval_interval == 0) {
      bool has_val = false;
      for (const auto& rec : corpus) has_val = has_val || rec.split == "val";
      if (has_val) {
        EvalReport report = evaluate_checkpoint(model, corpus, "val");
        nlohmann::ordered_json j;
        j["epoch"] = epoch;
        j["val"] = report.to_json();
        log.evals.push_back(j);
      }
      if (!cfg.checkpoint_path.empty()) model.save(cfg.checkpoint_path);
    }
  }

  if (!cfg.checkpoint_path.empty()) model.save(cfg.checkpoint_path);
  if (!cfg.log_path.empty()) log.save(cfg.log_path);
  return log;
}

EvalReport evaluate_checkpoint(const Model& model,
                               const std::vector<data::RoomRecord>& corpus,
                               const std::string& split) {
  nn::NoGradGuard no_grad;
  std::vector<PreparedRoom> rooms;
  for (const auto& rec : corpus)
    if (rec.split == split) rooms.push_back(prepare_room(rec.room, model.config()));
  if (rooms.empty())
    throw std::invalid_argument("evaluate_checkpoint: empty split " + split);

  EvalReport report;
  report.rooms = static_cast<int>(rooms.size());
  double loss_sum = 0.0;
  long cat_hits = 0, cat_total = 0, type_hits = 0, type_total = 0;
  double mae_sum = 0.0;
  long mae_count = 0;
  losses::LossConfig default_loss;

  for (const PreparedRoom& p : rooms) {
    Tensor memory = model.encode_matrix(p.enc, p.enc_len);
    Tensor e_dec = model.decoder_bank().embed(p.dec.seq, p.dec_len);
    std::vector<uint8_t> memory_mask(p.enc_len, 1);
    auto heads = model.decode_teacher_forced(e_dec, memory, memory_mask);
    loss_sum += losses::ddep_loss(heads, p.targets, default_loss.lambda).item();

    for (int i = 0; i < p.targets.length; ++i) {
      // type accuracy over all supervised positions
      int type_pred = 0;
      for (int c = 1; c < heads.type_logits.cols(); ++c)
        if (heads.type_logits.at(i, c) > heads.type_logits.at(i, type_pred))
          type_pred = c;
      type_hits += type_pred == p.targets.type[i] ? 1 : 0;
      ++type_total;

      if (p.targets.entity_mask[i] == 0.0) continue;
      int cat_pred = 0;
      for (int c = 1; c < heads.category_logits.cols(); ++c)
        if (heads.category_logits.at(i, c) > heads.category_logits.at(i, cat_pred))
          cat_pred = c;
      cat_hits += cat_pred == p.targets.category[i] ? 1 : 0;
      ++cat_total;

      mae_sum += std::abs(heads.t_value.at(i, 0) - p.targets.t[i]);
      mae_sum += std::abs(heads.delta.at(i, 0) - p.targets.delta[i]);
      mae_sum += std::abs(heads.size.at(i, 0) - p.targets.width[i]);
      mae_sum += std::abs(heads.size.at(i, 1) - p.targets.depth[i]);
      mae_count += 4;
      if (p.targets.rho_mask[i] != 0.0) {
        mae_sum += std::abs(heads.rho.at(i, 0) - p.targets.rho[i]);
        mae_count += 1;
      }
    }
  }
  report.ddep_loss = loss_sum / rooms.size();
  report.category_accuracy =
      cat_total > 0 ? static_cast<double>(cat_hits) / cat_total : 1.0;
  report.type_accuracy =
      type_total > 0 ? static_cast<double>(type_hits) / type_total : 1.0;
  report.continuous_mae = mae_count > 0 ? mae_sum / mae_count : 0.0;
  return report;
}

model::DecodeConstraints constraints_for(const RoomEnvelope& normalized_env,
                                         int s_dec) {
  model::DecodeConstraints c;
  c.n_edges = static_cast<int>(normalized_env.walls.size());
  c.delta_min = 0.0;
  c.delta_max = 1.5;   // normalized rooms have longest side 1
  c.size_min = 0.01;
  c.size_max = 1.5;
  c.max_steps = s_dec - 2;
  return c;
}

}  // namespace sbm::training
