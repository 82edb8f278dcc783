// sbm: synthetic corpus generation, tokenization, training, layout
// generation and evaluation for room-scale building models.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbm/dataset.hpp"
#include "sbm/metrics_embedding.hpp"
#include "sbm/metrics_layout.hpp"
#include "sbm/model.hpp"
#include "sbm/tokenizer.hpp"
#include "sbm/trainer.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CliConfig {
  sbm::data::SynthConfig synth;
  sbm::model::ModelConfig model;
  sbm::training::TrainConfig train;
  sbm::metrics::NavConfig nav;
  sbm::metrics::OCWeights oc;
  sbm::metrics::OracleConfig oracle;
  int retrieve_k = 5;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::runtime_error("config: unknown key '" + key + "' in " +
                               context);
  }
}

CliConfig load_config(const std::string& path) {
  CliConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j = json::parse(in);
  check_keys(j, {"synth", "model", "train", "nav", "oc", "oracle", "retrieve_k"},
             "top level");
  if (j.contains("synth")) {
    check_keys(j["synth"],
               {"type_weights", "rect_weight", "l_shape_weight", "min_side",
                "max_side", "optional_item_prob", "door_clearance_depth",
                "seed"},
               "synth");
    cfg.synth = j["synth"].get<sbm::data::SynthConfig>();
  }
  if (j.contains("model")) {
    check_keys(j["model"],
               {"d", "n_layers_enc", "n_layers_dec", "n_heads", "ffn_mult",
                "s_enc", "s_dec"},
               "model");
    cfg.model = j["model"].get<sbm::model::ModelConfig>();
  }
  if (j.contains("train")) {
    check_keys(j["train"],
               {"epochs", "batch_size", "lr", "adam_beta1", "adam_beta2",
                "adam_eps", "seed", "eval_interval", "checkpoint_path",
                "log_path", "mode", "loss"},
               "train");
    if (j["train"].contains("loss"))
      check_keys(j["train"]["loss"],
                 {"lambda", "beta_room", "beta_mlm", "beta_triplet",
                  "beta_geom", "alpha", "mlm_rate"},
                 "train.loss");
    cfg.train = j["train"].get<sbm::training::TrainConfig>();
  }
  if (j.contains("nav")) {
    check_keys(j["nav"],
               {"resolution", "agent_clearance", "lambda",
                "targets_from_entities"},
               "nav");
    cfg.nav.resolution = j["nav"].value("resolution", cfg.nav.resolution);
    cfg.nav.agent_clearance =
        j["nav"].value("agent_clearance", cfg.nav.agent_clearance);
    cfg.nav.lambda = j["nav"].value("lambda", cfg.nav.lambda);
    cfg.nav.targets_from_entities =
        j["nav"].value("targets_from_entities", cfg.nav.targets_from_entities);
  }
  if (j.contains("oc")) {
    check_keys(j["oc"],
               {"w_eof", "w_goa", "w_dci", "w_wbv", "door_clearance_depth"},
               "oc");
    cfg.oc.w_eof = j["oc"].value("w_eof", cfg.oc.w_eof);
    cfg.oc.w_goa = j["oc"].value("w_goa", cfg.oc.w_goa);
    cfg.oc.w_dci = j["oc"].value("w_dci", cfg.oc.w_dci);
    cfg.oc.w_wbv = j["oc"].value("w_wbv", cfg.oc.w_wbv);
    cfg.oc.door_clearance_depth =
        j["oc"].value("door_clearance_depth", cfg.oc.door_clearance_depth);
  }
  if (j.contains("oracle")) {
    check_keys(j["oracle"],
               {"entity_weight", "geometry_weight", "binary_threshold"},
               "oracle");
    cfg.oracle.entity_weight =
        j["oracle"].value("entity_weight", cfg.oracle.entity_weight);
    cfg.oracle.geometry_weight =
        j["oracle"].value("geometry_weight", cfg.oracle.geometry_weight);
    cfg.oracle.binary_threshold =
        j["oracle"].value("binary_threshold", cfg.oracle.binary_threshold);
  }
  cfg.retrieve_k = j.value("retrieve_k", cfg.retrieve_k);
  return cfg;
}

void log_resolved_config(const std::string& command, const ordered_json& j) {
  std::cerr << "[sbm] " << command << " config: " << j.dump() << "\n";
}

std::vector<sbm::data::RoomRecord> load_records_or_die(const std::string& path) {
  auto records = sbm::data::load_rooms(path);
  if (records.empty())
    throw std::runtime_error("no rooms found in " + path);
  return records;
}

std::vector<sbm::data::RoomRecord> filter_split(
    const std::vector<sbm::data::RoomRecord>& records, const std::string& split) {
  if (split == "all") return records;
  std::vector<sbm::data::RoomRecord> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// SVG rendering (debug artifact)
// ---------------------------------------------------------------------------

std::string render_svg(const sbm::Room& room) {
  using sbm::geom::Point2;
  auto poly = room.envelope.polygon();
  Point2 lo, hi;
  sbm::geom::polygon_bbox(poly, lo, hi);
  double margin = 0.5;
  double w = hi.x - lo.x + 2 * margin;
  double h = hi.y - lo.y + 2 * margin;
  double scale = 120.0;
  std::ostringstream os;
  // y flipped so the room appears in conventional orientation
  auto px = [&](Point2 p) {
    std::ostringstream s;
    s << (p.x - lo.x + margin) * scale << "," << (hi.y - p.y + margin) * scale;
    return s.str();
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale
     << "\" height=\"" << h * scale << "\">\n";
  os << "<polygon points=\"";
  for (Point2 v : poly.vertices()) os << px(v) << " ";
  os << "\" fill=\"#f4f1ea\" stroke=\"#222\" stroke-width=\"3\"/>\n";
  for (const sbm::Opening& d : room.envelope.doors) {
    auto rect = sbm::geom::rect_from_wall_frame(poly, d.edge_index, d.t, 0.02,
                                                d.width, 0.1, 0.0);
    auto c = rect.corners();
    os << "<polygon points=\"";
    for (Point2 v : c) os << px(v) << " ";
    os << "\" fill=\"#c0392b\"/>\n";
  }
  for (const sbm::Opening& wdw : room.envelope.windows) {
    auto rect = sbm::geom::rect_from_wall_frame(poly, wdw.edge_index, wdw.t,
                                                0.02, wdw.width, 0.08, 0.0);
    os << "<polygon points=\"";
    for (Point2 v : rect.corners()) os << px(v) << " ";
    os << "\" fill=\"#2980b9\"/>\n";
  }
  for (const sbm::Entity& e : room.entities) {
    auto rect = sbm::entity_rect(room.envelope, e);
    bool casework = e.kind == sbm::EntityKind::kCasework;
    os << "<polygon points=\"";
    for (Point2 v : rect.corners()) os << px(v) << " ";
    os << "\" fill=\"" << (casework ? "#b08968" : "#7a9e7e")
       << "\" fill-opacity=\"0.8\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << (rect.center.x - lo.x + margin) * scale << "\" y=\""
       << (hi.y - rect.center.y + margin) * scale
       << "\" font-size=\"12\" text-anchor=\"middle\">"
       << sbm::entity_category_names().at(e.category) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_synth(const CliConfig& cfg, int n, const std::string& out_path) {
  ordered_json jc;
  sbm::data::to_json(jc, cfg.synth);
  jc["n"] = n;
  jc["out"] = out_path;
  log_resolved_config("synth", jc);
  auto records = sbm::data::synth_generate(cfg.synth, n);
  sbm::data::save_rooms(records, out_path);
  std::cerr << "[sbm] wrote " << records.size() << " rooms to " << out_path
            << "\n";
  return 0;
}

int cmd_tokenize(const CliConfig& cfg, const std::string& rooms_path,
                 const std::string& out_dir, int limit) {
  ordered_json jc;
  jc["rooms"] = rooms_path;
  jc["out_dir"] = out_dir;
  jc["limit"] = limit;
  log_resolved_config("tokenize", jc);
  auto records = load_records_or_die(rooms_path);
  int n = limit > 0 ? std::min<int>(limit, records.size()) : records.size();
  for (int i = 0; i < n; ++i) {
    sbm::NormalizationRecord nr;
    sbm::Room normalized = sbm::normalize_room(records[i].room, nr);
    auto enc = sbm::tok::encode_envelope(normalized.envelope, cfg.model.s_enc);
    auto dec = sbm::tok::encode_entities(normalized, cfg.model.s_dec);
    write_file(out_dir + "/room_" + std::to_string(i) + "_enc.csv",
               enc.to_csv());
    write_file(out_dir + "/room_" + std::to_string(i) + "_dec.csv",
               dec.seq.to_csv());
  }
  std::cerr << "[sbm] wrote matrix dumps for " << n << " rooms to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(CliConfig& cfg, const std::string& rooms_path,
              const std::string& out_path, uint64_t model_seed) {
  cfg.train.checkpoint_path = out_path;
  ordered_json jc;
  sbm::training::to_json(jc, cfg.train);
  ordered_json jm;
  sbm::model::to_json(jm, cfg.model);
  jc["model"] = jm;
  jc["rooms"] = rooms_path;
  log_resolved_config("train", jc);

  auto records = load_records_or_die(rooms_path);
  sbm::model::Model model(cfg.model, model_seed);
  auto t0 = std::chrono::steady_clock::now();
  auto log = sbm::training::train(records, model, cfg.train);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  std::cerr << "[sbm] trained " << log.steps.size() << " steps in "
            << dt.count() << "s; final loss "
            << (log.steps.empty() ? 0.0 : log.steps.back().total) << "\n";
  std::cerr << "[sbm] checkpoint written to " << out_path << "\n";
  return 0;
}

int cmd_generate(const CliConfig& cfg, const std::string& ckpt_path,
                 const std::string& rooms_path, const std::string& split,
                 const std::string& out_path, const std::string& svg_dir,
                 const std::string& timing_out, const std::string& mode_str,
                 double temperature, uint64_t seed) {
  ordered_json jc;
  jc["ckpt"] = ckpt_path;
  jc["rooms"] = rooms_path;
  jc["split"] = split;
  jc["out"] = out_path;
  jc["mode"] = mode_str;
  jc["seed"] = seed;
  log_resolved_config("generate", jc);

  auto model = sbm::model::Model::load(ckpt_path);
  auto records = filter_split(load_records_or_die(rooms_path), split);
  if (records.empty())
    throw std::runtime_error("generate: no rooms in split '" + split + "'");
  auto mode = mode_str == "sampled" ? sbm::model::DecodeMode::kSampled
                                    : sbm::model::DecodeMode::kGreedy;

  std::vector<double> latencies;
  std::vector<sbm::data::RoomRecord> out_records;
  for (size_t i = 0; i < records.size(); ++i) {
    sbm::NormalizationRecord nr;
    sbm::Room normalized = sbm::normalize_room(records[i].room, nr);
    auto constraints = sbm::training::constraints_for(normalized.envelope,
                                                      model.config().s_dec);
    sbm::model::SampleParams sp;
    sp.seed = sbm::derive_seed(seed, i);
    sp.temperature = temperature;
    auto t0 = std::chrono::steady_clock::now();
    auto entities = model.generate(normalized.envelope, constraints, mode, sp);
    latencies.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
    sbm::Room generated = normalized;
    generated.entities = entities;
    generated = sbm::denormalize_room(generated, nr);
    sbm::data::RoomRecord rec = records[i];
    rec.room = generated;
    out_records.push_back(rec);
    if (!svg_dir.empty())
      write_file(svg_dir + "/layout_" + std::to_string(i) + ".svg",
                 render_svg(generated));
  }
  sbm::data::save_rooms(out_records, out_path);
  if (!timing_out.empty()) {
    ordered_json jt;
    jt["per_room_seconds"] = latencies;
    write_file(timing_out, jt.dump(2) + "\n");
  }
  std::cerr << "[sbm] generated layouts for " << out_records.size()
            << " rooms to " << out_path << "\n";
  return 0;
}

int cmd_eval_layout(const CliConfig& cfg, const std::string& layouts_path,
                    const std::string& out_path, const std::string& timing_path) {
  ordered_json jc;
  jc["layouts"] = layouts_path;
  jc["out"] = out_path;
  jc["nav"] = {{"resolution", cfg.nav.resolution},
               {"agent_clearance", cfg.nav.agent_clearance},
               {"lambda", cfg.nav.lambda}};
  log_resolved_config("eval-layout", jc);

  auto records = load_records_or_die(layouts_path);
  std::vector<sbm::metrics::LayoutScore> scores;
  for (const auto& rec : records) {
    auto inventory =
        sbm::metrics::default_inventory(rec.room.envelope.room_type);
    scores.push_back(sbm::metrics::score_layout(
        rec.room.envelope, rec.room.entities, inventory, cfg.nav, cfg.oc));
  }
  std::vector<double> latencies;
  if (!timing_path.empty()) {
    std::ifstream in(timing_path);
    if (!in) throw std::runtime_error("cannot open " + timing_path);
    json jt = json::parse(in);
    latencies = jt.at("per_room_seconds").get<std::vector<double>>();
  }
  auto report = sbm::metrics::score_report(scores, latencies);
  write_file(out_path, report.dump(2) + "\n");
  std::cerr << "[sbm] coverage " << report["coverage"]["mean"] << ", SR "
            << report["sr"]["mean"] << ", OC " << report["oc"]["mean"] << "\n";
  return 0;
}

sbm::metrics::RetrievalIndex build_index(
    const std::vector<sbm::data::RoomRecord>& records, const json& embeddings) {
  sbm::metrics::RetrievalIndex index;
  for (const auto& je : embeddings.at("rooms")) {
    size_t idx = je.at("index").get<size_t>();
    if (idx >= records.size())
      throw std::runtime_error("embeddings reference room " +
                               std::to_string(idx) + " beyond corpus");
    index.embeddings.push_back(je.at("z").get<std::vector<double>>());
    index.meta.push_back(sbm::metrics::meta_of(records[idx].room));
  }
  return index;
}

int cmd_embed(const CliConfig& cfg, const std::string& ckpt_path,
              const std::string& rooms_path, const std::string& split,
              const std::string& out_path) {
  (void)cfg;
  ordered_json jc;
  jc["ckpt"] = ckpt_path;
  jc["rooms"] = rooms_path;
  jc["split"] = split;
  jc["out"] = out_path;
  log_resolved_config("embed", jc);

  auto model = sbm::model::Model::load(ckpt_path);
  auto all = load_records_or_die(rooms_path);
  sbm::nn::NoGradGuard no_grad;
  ordered_json rooms = ordered_json::array();
  for (size_t i = 0; i < all.size(); ++i) {
    if (split != "all" && all[i].split != split) continue;
    sbm::NormalizationRecord nr;
    sbm::Room normalized = sbm::normalize_room(all[i].room, nr);
    auto enc = sbm::tok::encode_envelope(normalized.envelope,
                                         model.config().s_enc);
    auto memory = model.encode_matrix(enc, enc.active_length());
    auto z = sbm::model::Model::pool_cls(memory);
    ordered_json je;
    je["index"] = i;
    je["split"] = all[i].split;
    je["room_type"] = all[i].room.envelope.room_type;
    je["z"] = z.data();
    rooms.push_back(je);
  }
  if (rooms.empty())
    throw std::runtime_error("embed: no rooms in split '" + split + "'");
  ordered_json out;
  out["dim"] = model.config().d;
  out["rooms"] = rooms;
  write_file(out_path, out.dump() + "\n");
  std::cerr << "[sbm] wrote " << rooms.size() << " embeddings to " << out_path
            << "\n";
  return 0;
}

int cmd_retrieve(const CliConfig& cfg, const std::string& embeddings_path,
                 const std::string& rooms_path, std::vector<int> queries,
                 int k, const std::string& out_path) {
  ordered_json jc;
  jc["embeddings"] = embeddings_path;
  jc["rooms"] = rooms_path;
  jc["k"] = k;
  log_resolved_config("retrieve", jc);

  auto records = load_records_or_die(rooms_path);
  std::ifstream in(embeddings_path);
  if (!in) throw std::runtime_error("cannot open " + embeddings_path);
  json je = json::parse(in);
  auto index = build_index(records, je);
  index.validate();
  if (k > index.size() - 1) throw std::runtime_error("retrieve: k too large");

  ordered_json out = ordered_json::array();
  for (int q : queries) {
    if (q < 0 || q >= index.size())
      throw std::runtime_error("retrieve: query index out of range");
    std::vector<std::pair<double, int>> ranked;
    for (int i = 0; i < index.size(); ++i)
      if (i != q) ranked.push_back({index.cosine(q, i), i});
    std::stable_sort(ranked.rbegin(), ranked.rend());
    ordered_json jq;
    jq["query"] = q;
    jq["query_type"] = sbm::room_type_names().at(index.meta[q].room_type);
    ordered_json neighbors = ordered_json::array();
    for (int i = 0; i < k; ++i) {
      ordered_json jn;
      jn["rank"] = i + 1;
      jn["index"] = ranked[i].second;
      jn["cosine"] = ranked[i].first;
      jn["room_type"] =
          sbm::room_type_names().at(index.meta[ranked[i].second].room_type);
      jn["entity_sim"] = sbm::metrics::entity_similarity(
          index.meta[q], index.meta[ranked[i].second]);
      neighbors.push_back(jn);
    }
    jq["neighbors"] = neighbors;
    out.push_back(jq);
    std::cout << jq.dump(2) << "\n";
  }
  if (!out_path.empty()) write_file(out_path, out.dump(2) + "\n");
  (void)cfg;
  return 0;
}

int cmd_eval_embed(const CliConfig& cfg, const std::string& embeddings_path,
                   const std::string& rooms_path, int k, uint64_t seed,
                   const std::string& out_path) {
  ordered_json jc;
  jc["embeddings"] = embeddings_path;
  jc["rooms"] = rooms_path;
  jc["k"] = k;
  jc["seed"] = seed;
  log_resolved_config("eval-embed", jc);

  auto records = load_records_or_die(rooms_path);
  std::ifstream in(embeddings_path);
  if (!in) throw std::runtime_error("cannot open " + embeddings_path);
  json je = json::parse(in);
  auto index = build_index(records, je);
  auto report = sbm::metrics::embedding_report(index, cfg.oracle, k, seed);
  write_file(out_path, report.dump(2) + "\n");
  std::cerr << "[sbm] nDCG " << report["retrieval"]["ndcg"] << ", triplet "
            << report["triplet_accuracy"] << ", NMI "
            << report["clustering"]["nmi"] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small building model pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master seed for all randomness")
      ->each([&](const std::string&) { seed_given = true; });

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic room corpus");
  int synth_n = 1000;
  std::string synth_out = "rooms.jsonl";
  synth->add_option("--n", synth_n, "number of rooms");
  synth->add_option("--out", synth_out, "output JSONL path");

  // tokenize
  auto* tokenize =
      app.add_subcommand("tokenize", "dump attribute-feature matrices as CSV");
  std::string tok_rooms, tok_out = ".";
  int tok_limit = 8;
  tokenize->add_option("--rooms", tok_rooms, "rooms JSONL")->required();
  tokenize->add_option("--out-dir", tok_out, "output directory");
  tokenize->add_option("--limit", tok_limit, "max rooms to dump (0 = all)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_rooms, train_out = "model.ckpt";
  int train_epochs = -1, train_batch = -1, train_eval_interval = -1;
  double train_lr = -1.0;
  std::string train_mode, train_log;
  train_cmd->add_option("--rooms", train_rooms, "rooms JSONL")->required();
  train_cmd->add_option("--out", train_out, "checkpoint path");
  train_cmd->add_option("--epochs", train_epochs, "epoch count");
  train_cmd->add_option("--batch", train_batch, "batch size");
  train_cmd->add_option("--lr", train_lr, "learning rate");
  train_cmd->add_option("--mode", train_mode, "joint | encoder_only | ddep_only");
  train_cmd->add_option("--log", train_log, "training log JSONL path");
  train_cmd->add_option("--eval-interval", train_eval_interval,
                        "epochs between val evaluations");

  // generate
  auto* generate = app.add_subcommand("generate", "generate entity layouts");
  std::string gen_ckpt, gen_rooms, gen_split = "test",
              gen_out = "layouts.jsonl", gen_svg, gen_timing,
              gen_mode = "greedy";
  double gen_temperature = 1.0;
  generate->add_option("--ckpt", gen_ckpt, "checkpoint")->required();
  generate->add_option("--rooms", gen_rooms, "rooms JSONL")->required();
  generate->add_option("--split", gen_split, "split to generate for");
  generate->add_option("--out", gen_out, "output layouts JSONL");
  generate->add_option("--svg-dir", gen_svg, "optional SVG render directory");
  generate->add_option("--timing-out", gen_timing,
                       "optional per-room latency JSON (non-deterministic)");
  generate->add_option("--mode", gen_mode, "greedy | sampled");
  generate->add_option("--temperature", gen_temperature, "sampling temperature");

  // eval-layout
  auto* eval_layout =
      app.add_subcommand("eval-layout", "score layouts with the metric suite");
  std::string el_layouts, el_out = "layout_report.json", el_timing;
  eval_layout->add_option("--layouts", el_layouts, "layouts JSONL")->required();
  eval_layout->add_option("--out", el_out, "report JSON path");
  eval_layout->add_option("--timing", el_timing, "latency sidecar from generate");

  // embed
  auto* embed = app.add_subcommand("embed", "compute room embeddings");
  std::string em_ckpt, em_rooms, em_split = "all", em_out = "embeddings.json";
  embed->add_option("--ckpt", em_ckpt, "checkpoint")->required();
  embed->add_option("--rooms", em_rooms, "rooms JSONL")->required();
  embed->add_option("--split", em_split, "split filter (all/train/val/test)");
  embed->add_option("--out", em_out, "output JSON path");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "top-k nearest rooms");
  std::string rt_embeddings, rt_rooms, rt_out;
  std::vector<int> rt_queries;
  int rt_k = -1;
  retrieve->add_option("--embeddings", rt_embeddings, "embeddings JSON")
      ->required();
  retrieve->add_option("--rooms", rt_rooms, "rooms JSONL")->required();
  retrieve->add_option("--query", rt_queries, "query room indices")->required();
  retrieve->add_option("--k", rt_k, "neighbors per query");
  retrieve->add_option("--out", rt_out, "optional output JSON");

  // eval-embed
  auto* eval_embed =
      app.add_subcommand("eval-embed", "retrieval/clustering metric report");
  std::string ee_embeddings, ee_rooms, ee_out = "embedding_report.json";
  int ee_k = -1;
  eval_embed->add_option("--embeddings", ee_embeddings, "embeddings JSON")
      ->required();
  eval_embed->add_option("--rooms", ee_rooms, "rooms JSONL")->required();
  eval_embed->add_option("--k", ee_k, "retrieval depth");
  eval_embed->add_option("--out", ee_out, "report JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    CliConfig cfg = load_config(config_path);
    if (seed_given || config_path.empty()) {
      cfg.synth.seed = seed;
      cfg.train.seed = seed;
    }
    if (train_epochs > 0) cfg.train.epochs = train_epochs;
    if (train_batch > 0) cfg.train.batch_size = train_batch;
    if (train_lr > 0) cfg.train.lr = train_lr;
    if (train_eval_interval >= 0) cfg.train.eval_interval = train_eval_interval;
    if (!train_mode.empty())
      cfg.train.mode = sbm::training::train_mode_from_string(train_mode);
    if (!train_log.empty()) cfg.train.log_path = train_log;
    if (rt_k > 0 || ee_k > 0) cfg.retrieve_k = std::max(rt_k, ee_k);

    if (synth->parsed()) return cmd_synth(cfg, synth_n, synth_out);
    if (tokenize->parsed()) return cmd_tokenize(cfg, tok_rooms, tok_out, tok_limit);
    if (train_cmd->parsed()) return cmd_train(cfg, train_rooms, train_out, seed);
    if (generate->parsed())
      return cmd_generate(cfg, gen_ckpt, gen_rooms, gen_split, gen_out, gen_svg,
                          gen_timing, gen_mode, gen_temperature, seed);
    if (eval_layout->parsed())
      return cmd_eval_layout(cfg, el_layouts, el_out, el_timing);
    if (embed->parsed())
      return cmd_embed(cfg, em_ckpt, em_rooms, em_split, em_out);
    if (retrieve->parsed())
      return cmd_retrieve(cfg, rt_embeddings, rt_rooms, rt_queries,
                          cfg.retrieve_k, rt_out);
    if (eval_embed->parsed())
      return cmd_eval_embed(cfg, ee_embeddings, ee_rooms, cfg.retrieve_k, seed,
                            ee_out);
    std::cerr << "error: no command\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::string msg = e.what();
    if (msg.find("non-finite") != std::string::npos) return kExitNumeric;
    return kExitData;
  }
}
