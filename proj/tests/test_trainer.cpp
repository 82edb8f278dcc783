#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "sbm/trainer.hpp"
#include "test_util.hpp"

using namespace sbm;
using namespace sbm::training;

namespace {

model::ModelConfig tiny_model() {
  model::ModelConfig cfg;
  cfg.d = 16;
  cfg.n_layers_enc = 1;
  cfg.n_layers_dec = 1;
  cfg.n_heads = 2;
  cfg.ffn_mult = 2;
  return cfg;
}

std::vector<data::RoomRecord> tiny_corpus(int n, uint64_t seed) {
  data::SynthConfig cfg;
  cfg.seed = seed;
  auto records = data::synth_generate(cfg, n);
  // make sure a validation room exists regardless of hash luck
  records[0].split = "val";
  for (size_t i = 1; i < records.size(); ++i) records[i].split = "train";
  return records;
}

}  // namespace

TEST_CASE("training reduces the loss on a tiny corpus") {
  auto corpus = tiny_corpus(9, 11);
  model::Model m(tiny_model(), 5);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.seed = 3;
  cfg.loss.beta_mlm = 0.0;  // keep the smoke test fast
  auto log = train(corpus, m, cfg);
  REQUIRE(log.steps.size() > 10);
  double first = log.steps.front().total;
  double last = log.steps.back().total;
  CHECK(last < first);
  // step indices are monotonically increasing
  for (size_t i = 1; i < log.steps.size(); ++i)
    CHECK(log.steps[i].step == log.steps[i - 1].step + 1);
}

TEST_CASE("identical seeds give bitwise identical parameters") {
  auto corpus = tiny_corpus(6, 21);
  auto run = [&] {
    model::Model m(tiny_model(), 5);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 3;
    cfg.seed = 9;
    train(corpus, m, cfg);
    std::vector<std::vector<double>> data;
    for (const auto& p : m.parameters()) data.push_back(p.data());
    return data;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("encoder_only mode leaves decoder parameters at initialization") {
  auto corpus = tiny_corpus(6, 31);
  model::Model m(tiny_model(), 5);
  std::vector<std::vector<double>> dec_before;
  for (const auto& p : m.decoder_parameters()) dec_before.push_back(p.data());
  std::vector<std::vector<double>> enc_before;
  for (const auto& p : m.encoder_parameters()) enc_before.push_back(p.data());

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.seed = 1;
  cfg.mode = TrainMode::kEncoderOnly;
  train(corpus, m, cfg);

  auto dec_params = m.decoder_parameters();
  for (size_t i = 0; i < dec_params.size(); ++i)
    CHECK(dec_params[i].data() == dec_before[i]);
  // and the encoder did move
  bool moved = false;
  auto enc_params = m.encoder_parameters();
  for (size_t i = 0; i < enc_params.size(); ++i)
    if (enc_params[i].data() != enc_before[i]) moved = true;
  CHECK(moved);
}

TEST_CASE("evaluate_checkpoint reports the expected fields") {
  auto corpus = tiny_corpus(6, 41);
  model::Model m(tiny_model(), 5);
  auto report = evaluate_checkpoint(m, corpus, "train");
  CHECK(report.rooms == 5);
  CHECK(report.ddep_loss > 0.0);
  CHECK(report.category_accuracy >= 0.0);
  CHECK(report.category_accuracy <= 1.0);
  CHECK(report.continuous_mae >= 0.0);
  auto j = report.to_json();
  CHECK(j.contains("ddep_loss"));
  CHECK(j.contains("category_accuracy"));
  CHECK(j.contains("continuous_mae"));
}

TEST_CASE("evaluate_checkpoint rejects an empty split") {
  auto corpus = tiny_corpus(4, 51);
  model::Model m(tiny_model(), 5);
  CHECK_THROWS_AS(evaluate_checkpoint(m, corpus, "test"),
                  std::invalid_argument);
}

TEST_CASE("training writes checkpoint and log files") {
  auto corpus = tiny_corpus(6, 61);
  model::Model m(tiny_model(), 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.seed = 2;
  cfg.eval_interval = 1;
  cfg.checkpoint_path = "/tmp/sbm_test_trainer_ckpt.bin";
  cfg.log_path = "/tmp/sbm_test_trainer_log.jsonl";
  auto log = train(corpus, m, cfg);
  CHECK(log.evals.size() == 2);
  auto loaded = model::Model::load(cfg.checkpoint_path);
  auto pa = m.parameters();
  auto pb = loaded.parameters();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].data() == pb[i].data());
  std::ifstream log_in(cfg.log_path);
  CHECK(log_in.good());
  int lines = 0;
  std::string line;
  while (std::getline(log_in, line)) ++lines;
  CHECK(lines == static_cast<int>(log.steps.size() + log.evals.size()));
  std::remove(cfg.checkpoint_path.c_str());
  std::remove(cfg.log_path.c_str());
}

TEST_CASE("train requires training rooms") {
  std::vector<data::RoomRecord> corpus;
  model::Model m(tiny_model(), 5);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(corpus, m, cfg), std::invalid_argument);
}
