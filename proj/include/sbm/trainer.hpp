#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sbm/dataset.hpp"
#include "sbm/losses.hpp"
#include "sbm/model.hpp"

namespace sbm::training {

enum class TrainMode : int { kJoint = 0, kEncoderOnly, kDdepOnly };

TrainMode train_mode_from_string(const std::string& s);
std::string train_mode_to_string(TrainMode m);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double lr = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  losses::LossConfig loss;
  int eval_interval = 0;  // epochs between val evaluations; 0 = end only
  std::string checkpoint_path;  // written at eval interval and at the end
  std::string log_path;         // step/eval records as JSON Lines
  TrainMode mode = TrainMode::kJoint;

  void validate() const;
};

void to_json(nlohmann::ordered_json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct StepRecord {
  int step = 0;
  int epoch = 0;
  double ddep = 0.0, room = 0.0, mlm = 0.0, triplet = 0.0, geom = 0.0;
  double total = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<nlohmann::ordered_json> evals;  // one per eval interval
  void save(const std::string& path) const;
};

// Teacher-forced and generation-quality report for a split.
struct EvalReport {
  double ddep_loss = 0.0;
  double category_accuracy = 0.0;
  double type_accuracy = 0.0;
  double continuous_mae = 0.0;  // t/delta/size (and rho on props), normalized units
  int rooms = 0;
  nlohmann::ordered_json to_json() const;
};

// Trains in place. Uses records with split == "train"; throws on NaN loss
// with a diagnostic naming the offending component. Deterministic in
// (corpus, config): reruns produce bitwise-identical parameters.
TrainLog train(const std::vector<data::RoomRecord>& corpus, model::Model& model,
               const TrainConfig& cfg);

// Teacher-forced evaluation over the given split ("train"/"val"/"test").
// Throws when the split is empty.
EvalReport evaluate_checkpoint(const model::Model& model,
                               const std::vector<data::RoomRecord>& corpus,
                               const std::string& split);

// Decode-time constraints sized for normalized rooms.
model::DecodeConstraints constraints_for(const RoomEnvelope& normalized_env,
                                         int s_dec);

}  // namespace sbm::training
