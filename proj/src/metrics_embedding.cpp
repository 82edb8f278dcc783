#include "sbm/metrics_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "sbm/rng.hpp"

namespace sbm::metrics {

RoomMeta meta_of(const Room& room) {
  RoomMeta m;
  m.room_type = room.envelope.room_type;
  for (const Entity& e : room.entities)
    (e.kind == EntityKind::kProp ? m.prop_categories : m.casework_categories)
        .push_back(e.category);
  for (const Opening& d : room.envelope.doors)
    m.door_families.push_back(d.family);
  std::sort(m.prop_categories.begin(), m.prop_categories.end());
  std::sort(m.casework_categories.begin(), m.casework_categories.end());
  std::sort(m.door_families.begin(), m.door_families.end());
  m.descriptor = losses::descriptor_of(room.envelope);
  return m;
}

namespace {

// Multiset Jaccard of two sorted vectors; both empty -> 1.
double multiset_jaccard(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() && b.empty()) return 1.0;
  size_t i = 0, j = 0;
  int inter = 0, uni = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++uni;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++uni;
      ++i;
    } else {
      ++uni;
      ++j;
    }
  }
  uni += static_cast<int>((a.size() - i) + (b.size() - j));
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double vec_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double desc_distance(const losses::Descriptor& a, const losses::Descriptor& b) {
  double s = 0.0;
  for (int k = 0; k < 5; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// Candidate ranking by a score, descending, with index tie-breaks.
std::vector<int> rank_candidates(int n, int query,
                                 const std::function<double(int)>& score) {
  std::vector<int> cands;
  cands.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != query) cands.push_back(i);
  std::stable_sort(cands.begin(), cands.end(), [&](int a, int b) {
    double sa = score(a), sb = score(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return cands;
}

double dcg(const std::vector<double>& rels, int k) {
  double s = 0.0;
  for (int i = 0; i < std::min<int>(k, rels.size()); ++i)
    s += rels[i] / std::log2(i + 2.0);
  return s;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  int n = static_cast<int>(v.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = (i + j) / 2.0 + 1.0;
    for (int t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double entity_similarity(const RoomMeta& a, const RoomMeta& b) {
  return (multiset_jaccard(a.prop_categories, b.prop_categories) +
          multiset_jaccard(a.casework_categories, b.casework_categories) +
          multiset_jaccard(a.door_families, b.door_families)) /
         3.0;
}

void RetrievalIndex::validate() const {
  if (embeddings.size() < 2)
    throw std::invalid_argument("RetrievalIndex: need at least 2 rooms");
  if (embeddings.size() != meta.size())
    throw std::invalid_argument("RetrievalIndex: embeddings/meta mismatch");
  size_t d = embeddings.front().size();
  for (const auto& e : embeddings) {
    if (e.size() != d)
      throw std::invalid_argument("RetrievalIndex: ragged embeddings");
    double norm = 0.0;
    for (double x : e) norm += x * x;
    if (norm <= 0.0)
      throw std::invalid_argument("RetrievalIndex: zero embedding row");
  }
}

double RetrievalIndex::cosine(int i, int j) const {
  const auto& a = embeddings[i];
  const auto& b = embeddings[j];
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t t = 0; t < a.size(); ++t) {
    dot += a[t] * b[t];
    na += a[t] * a[t];
    nb += b[t] * b[t];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double RetrievalIndex::euclidean(int i, int j) const {
  return vec_euclidean(embeddings[i], embeddings[j]);
}

RelevanceOracle::RelevanceOracle(const RetrievalIndex& index, OracleConfig cfg)
    : cfg_(cfg), meta_(index.meta) {
  std::vector<losses::Descriptor> raw;
  for (const RoomMeta& m : meta_) raw.push_back(m.descriptor);
  std_desc_ = losses::standardize_descriptors(raw);
  max_desc_dist_ = 0.0;
  for (size_t i = 0; i < std_desc_.size(); ++i)
    for (size_t j = i + 1; j < std_desc_.size(); ++j)
      max_desc_dist_ = std::max(max_desc_dist_,
                                desc_distance(std_desc_[i], std_desc_[j]));
  if (max_desc_dist_ <= 0.0) max_desc_dist_ = 1.0;
}

double RelevanceOracle::rel(int q, int r) const {
  if (q == r) return 1.0;
  double geo =
      1.0 - desc_distance(std_desc_[q], std_desc_[r]) / max_desc_dist_;
  double w = cfg_.entity_weight + cfg_.geometry_weight;
  return (cfg_.entity_weight * entity_similarity(meta_[q], meta_[r]) +
          cfg_.geometry_weight * geo) /
         w;
}

RetrievalScores retrieval_metrics(const RetrievalIndex& index,
                                  const RelevanceOracle& oracle, int k) {
  index.validate();
  int n = index.size();
  if (k < 1 || k > n - 1)
    throw std::invalid_argument("retrieval_metrics: k out of range");
  double threshold = oracle.config().binary_threshold;

  RetrievalScores out;
  for (int q = 0; q < n; ++q) {
    auto ranked =
        rank_candidates(n, q, [&](int c) { return index.cosine(q, c); });
    std::vector<double> rels;
    rels.reserve(ranked.size());
    for (int c : ranked) rels.push_back(oracle.rel(q, c));

    std::vector<double> ideal = rels;
    std::sort(ideal.begin(), ideal.end(), std::greater<double>());
    double idcg = dcg(ideal, k);
    out.ndcg += idcg > 0.0 ? dcg(rels, k) / idcg : 0.0;

    bool hit = false;
    int hits = 0;
    double mrr = 0.0;
    double esim = 0.0;
    for (int i = 0; i < static_cast<int>(ranked.size()); ++i) {
      bool relevant = rels[i] >= threshold;
      if (i < k) {
        hit = hit || relevant;
        hits += relevant ? 1 : 0;
        esim += entity_similarity(index.meta[q], index.meta[ranked[i]]);
      }
      if (relevant && mrr == 0.0) mrr = 1.0 / (i + 1.0);
    }
    out.success_at_k += hit ? 1.0 : 0.0;
    out.precision_at_k += static_cast<double>(hits) / k;
    out.mrr += mrr;
    out.entity_sim_at_k += esim / k;
    ++out.queries;
  }
  out.ndcg /= out.queries;
  out.success_at_k /= out.queries;
  out.precision_at_k /= out.queries;
  out.mrr /= out.queries;
  out.entity_sim_at_k /= out.queries;
  return out;
}

TypeConstrainedScores type_constrained_ndcg(const RetrievalIndex& index,
                                            const RelevanceOracle& oracle,
                                            int k) {
  index.validate();
  int n = index.size();
  TypeConstrainedScores out;
  for (int q = 0; q < n; ++q) {
    std::vector<int> pool;
    for (int i = 0; i < n; ++i)
      if (i != q && index.meta[i].room_type == index.meta[q].room_type)
        pool.push_back(i);
    if (static_cast<int>(pool.size()) < k) {
      ++out.skipped;
      continue;
    }
    std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) {
      double sa = index.cosine(q, a), sb = index.cosine(q, b);
      if (sa != sb) return sa > sb;
      return a < b;
    });
    std::vector<double> rels;
    for (int c : pool) rels.push_back(oracle.rel(q, c));
    std::vector<double> ideal = rels;
    std::sort(ideal.begin(), ideal.end(), std::greater<double>());
    double idcg = dcg(ideal, k);
    out.ndcg += idcg > 0.0 ? dcg(rels, k) / idcg : 0.0;
    ++out.queries;
  }
  if (out.queries > 0) out.ndcg /= out.queries;
  out.coverage = out.queries + out.skipped > 0
                     ? static_cast<double>(out.queries) /
                           (out.queries + out.skipped)
                     : 0.0;
  return out;
}

double triplet_accuracy(const RetrievalIndex& index, int n_triplets,
                        uint64_t seed) {
  index.validate();
  int n = index.size();
  std::map<int, std::vector<int>> by_type;
  for (int i = 0; i < n; ++i) by_type[index.meta[i].room_type].push_back(i);

  Rng rng = make_rng(seed);
  int done = 0, correct = 0;
  int attempts = 0;
  while (done < n_triplets && attempts < n_triplets * 50) {
    ++attempts;
    int a = uniform_int(rng, 0, n - 1);
    const auto& same = by_type[index.meta[a].room_type];
    if (same.size() < 2) continue;
    int p = same[uniform_int(rng, 0, static_cast<int>(same.size()) - 1)];
    if (p == a) continue;
    int neg = uniform_int(rng, 0, n - 1);
    if (index.meta[neg].room_type == index.meta[a].room_type) continue;
    ++done;
    if (index.cosine(a, p) > index.cosine(a, neg)) ++correct;
  }
  return done > 0 ? static_cast<double>(correct) / done : 0.0;
}

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

namespace {

double kmeans_once(const std::vector<std::vector<double>>& x, int k, Rng& rng,
                   std::vector<int>& assign) {
  int n = static_cast<int>(x.size());
  size_t d = x.front().size();

  // k-means++ seeding
  std::vector<std::vector<double>> centers;
  centers.push_back(x[uniform_int(rng, 0, n - 1)]);
  std::vector<double> dist2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) {
        double dd = vec_euclidean(x[i], c);
        best = std::min(best, dd * dd);
      }
      dist2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(x[uniform_int(rng, 0, n - 1)]);
      continue;
    }
    double pick = uniform(rng, 0.0, total);
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      pick -= dist2[i];
      if (pick <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(x[chosen]);
  }

  assign.assign(n, 0);
  double inertia = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double dd = vec_euclidean(x[i], centers[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
      inertia += best_d * best_d;
    }
    if (!changed && iter > 0) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) sums[assign[i]][j] += x[i][j];
      counts[assign[i]] += 1;
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (size_t j = 0; j < d; ++j) centers[c][j] = sums[c][j] / counts[c];
  }
  return inertia;
}

double entropy(const std::vector<int>& labels, int n) {
  std::map<int, int> counts;
  for (int l : labels) counts[l] += 1;
  double h = 0.0;
  for (const auto& [l, c] : counts) {
    (void)l;
    double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  int n = static_cast<int>(a.size());
  std::map<std::pair<int, int>, int> joint;
  std::map<int, int> ca, cb;
  for (int i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    double pxy = static_cast<double>(c) / n;
    double px = static_cast<double>(ca[key.first]) / n;
    double py = static_cast<double>(cb[key.second]) / n;
    mi += pxy * std::log(pxy / (px * py));
  }
  return mi;
}

double comb2(long x) { return 0.5 * x * (x - 1); }

}  // namespace

std::vector<int> kmeans(const std::vector<std::vector<double>>& x, int k,
                        uint64_t seed, int restarts) {
  if (x.empty() || k < 1)
    throw std::invalid_argument("kmeans: empty input or bad k");
  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng = make_rng(derive_seed(seed, r));
    std::vector<int> assign;
    double inertia = kmeans_once(x, k, rng, assign);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

ClusteringScores clustering_metrics(const std::vector<std::vector<double>>& x,
                                    const std::vector<int>& labels, int k,
                                    uint64_t seed, int restarts) {
  if (x.size() != labels.size())
    throw std::invalid_argument("clustering_metrics: size mismatch");
  if (static_cast<int>(x.size()) < k || k < 2)
    throw std::invalid_argument("clustering_metrics: need N >= k >= 2");
  int n = static_cast<int>(x.size());
  std::vector<int> pred = kmeans(x, k, seed, restarts);

  ClusteringScores out;
  // NMI, arithmetic normalization
  double hu = entropy(labels, n), hv = entropy(pred, n);
  double mi = mutual_information(labels, pred);
  double denom = 0.5 * (hu + hv);
  out.nmi = denom > 0.0 ? mi / denom : (labels == pred ? 1.0 : 0.0);

  // ARI
  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> ca, cb;
  for (int i = 0; i < n; ++i) {
    joint[{labels[i], pred[i]}] += 1;
    ca[labels[i]] += 1;
    cb[pred[i]] += 1;
  }
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, c] : joint) {
    (void)key;
    sum_joint += comb2(c);
  }
  for (const auto& [l, c] : ca) {
    (void)l;
    sum_a += comb2(c);
  }
  for (const auto& [l, c] : cb) {
    (void)l;
    sum_b += comb2(c);
  }
  double total_pairs = comb2(n);
  double expected = sum_a * sum_b / total_pairs;
  double max_idx = 0.5 * (sum_a + sum_b);
  out.ari = max_idx - expected != 0.0
                ? (sum_joint - expected) / (max_idx - expected)
                : 1.0;

  // silhouette (Euclidean); degenerate all-identical points -> 0
  double sil_sum = 0.0;
  std::map<int, std::vector<int>> members;
  for (int i = 0; i < n; ++i) members[pred[i]].push_back(i);
  for (int i = 0; i < n; ++i) {
    const auto& own = members[pred[i]];
    if (own.size() <= 1) continue;  // silhouette 0 by convention
    double a_dist = 0.0;
    for (int j : own)
      if (j != i) a_dist += vec_euclidean(x[i], x[j]);
    a_dist /= static_cast<double>(own.size() - 1);
    double b_dist = std::numeric_limits<double>::infinity();
    for (const auto& [c, mem] : members) {
      if (c == pred[i]) continue;
      double m = 0.0;
      for (int j : mem) m += vec_euclidean(x[i], x[j]);
      b_dist = std::min(b_dist, m / mem.size());
    }
    double mx = std::max(a_dist, b_dist);
    if (mx > 0.0 && std::isfinite(b_dist)) sil_sum += (b_dist - a_dist) / mx;
  }
  out.silhouette = sil_sum / n;
  return out;
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

double spearman_corr(const std::vector<double>& a, const std::vector<double>& b) {
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  int n = static_cast<int>(a.size());
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da <= 0.0 || db <= 0.0) return 0.0;  // constant input, by convention
  return num / std::sqrt(da * db);
}

double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
  int n = static_cast<int>(a.size());
  long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double da = a[i] - a[j];
      double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) {
        ++ties_a;
        ++ties_b;
      } else if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if (da * db > 0.0) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  double n0 = 0.5 * n * (n - 1);
  double denom = std::sqrt((n0 - ties_a) * (n0 - ties_b));
  if (denom <= 0.0) return 0.0;
  return (concordant - discordant) / denom;
}

RankCorrelation geometric_rank_correlation(const RetrievalIndex& index) {
  index.validate();
  int n = index.size();
  if (n < 3)
    throw std::invalid_argument("geometric_rank_correlation: need N >= 3");
  std::vector<losses::Descriptor> raw;
  for (const RoomMeta& m : index.meta) raw.push_back(m.descriptor);
  auto std_desc = losses::standardize_descriptors(raw);

  RankCorrelation out;
  int counted = 0;
  for (int q = 0; q < n; ++q) {
    std::vector<double> emb_d, geo_d;
    for (int i = 0; i < n; ++i) {
      if (i == q) continue;
      emb_d.push_back(index.euclidean(q, i));
      geo_d.push_back(desc_distance(std_desc[q], std_desc[i]));
    }
    bool emb_const =
        std::adjacent_find(emb_d.begin(), emb_d.end(),
                           std::not_equal_to<>()) == emb_d.end();
    bool geo_const =
        std::adjacent_find(geo_d.begin(), geo_d.end(),
                           std::not_equal_to<>()) == geo_d.end();
    if (emb_const || geo_const) {
      ++out.degenerate_queries;  // contributes 0, flagged
      ++counted;
      continue;
    }
    out.spearman += spearman_corr(emb_d, geo_d);
    out.kendall += kendall_tau_b(emb_d, geo_d);
    ++counted;
  }
  out.spearman /= counted;
  out.kendall /= counted;
  return out;
}

nlohmann::ordered_json embedding_report(const RetrievalIndex& index,
                                        const OracleConfig& oracle_cfg, int k,
                                        uint64_t seed) {
  RelevanceOracle oracle(index, oracle_cfg);
  auto retrieval = retrieval_metrics(index, oracle, k);
  auto constrained = type_constrained_ndcg(index, oracle, k);
  double triplet = triplet_accuracy(index, 2000, seed);

  std::vector<int> labels;
  for (const RoomMeta& m : index.meta) labels.push_back(m.room_type);
  std::vector<int> distinct = labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  int n_types = static_cast<int>(distinct.size());
  ClusteringScores clustering;
  if (n_types >= 2 && index.size() >= n_types)
    clustering = clustering_metrics(index.embeddings, labels, n_types, seed);
  auto correlation = geometric_rank_correlation(index);

  nlohmann::ordered_json j;
  j["k"] = k;
  j["n_rooms"] = index.size();
  j["retrieval"] = {{"ndcg", retrieval.ndcg},
                    {"success_at_k", retrieval.success_at_k},
                    {"mrr", retrieval.mrr},
                    {"precision_at_k", retrieval.precision_at_k}};
  j["type_constrained"] = {{"ndcg", constrained.ndcg},
                           {"coverage", constrained.coverage}};
  j["triplet_accuracy"] = triplet;
  j["entity_sim"] = retrieval.entity_sim_at_k;
  j["clustering"] = {{"nmi", clustering.nmi},
                     {"ari", clustering.ari},
                     {"silhouette", clustering.silhouette}};
  j["geometry_correlation"] = {{"spearman", correlation.spearman},
                               {"kendall", correlation.kendall}};
  return j;
}

}  // namespace sbm::metrics
