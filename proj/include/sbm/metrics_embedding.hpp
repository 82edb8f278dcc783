#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sbm/losses.hpp"
#include "sbm/room.hpp"

namespace sbm::metrics {

struct RoomMeta {
  int room_type = 0;
  std::vector<int> prop_categories;      // multisets
  std::vector<int> casework_categories;
  std::vector<int> door_families;
  losses::Descriptor descriptor{};
};

RoomMeta meta_of(const Room& room);

// Mean of three multiset-Jaccard overlaps (props, casework, door families).
// A slot where both multisets are empty counts as 1 (identical emptiness).
double entity_similarity(const RoomMeta& a, const RoomMeta& b);

struct RetrievalIndex {
  std::vector<std::vector<double>> embeddings;  // N x d, cosine similarity
  std::vector<RoomMeta> meta;

  int size() const { return static_cast<int>(embeddings.size()); }
  void validate() const;  // throws: N >= 2, rows non-zero, sizes aligned
  double cosine(int i, int j) const;
  double euclidean(int i, int j) const;
};

// Graded relevance rel(q, r) = w_e * entity_similarity + w_g * (1 -
// normalized standardized-descriptor distance). rel(q, q) = 1, symmetric.
struct OracleConfig {
  double entity_weight = 0.5;
  double geometry_weight = 0.5;
  double binary_threshold = 0.5;  // binarization for Success/MRR/Precision
};

class RelevanceOracle {
 public:
  RelevanceOracle(const RetrievalIndex& index, OracleConfig cfg = {});
  double rel(int q, int r) const;
  const OracleConfig& config() const { return cfg_; }

 private:
  OracleConfig cfg_;
  std::vector<RoomMeta> meta_;
  std::vector<losses::Descriptor> std_desc_;
  double max_desc_dist_ = 1.0;
};

struct RetrievalScores {
  double ndcg = 0.0;
  double success_at_k = 0.0;
  double mrr = 0.0;
  double precision_at_k = 0.0;
  double entity_sim_at_k = 0.0;  // mean entity similarity of top-k neighbors
  int queries = 0;
};

// Standard definitions; nDCG uses the log2 discount, binary metrics use the
// oracle threshold. Queries exclude themselves from the candidate pool.
RetrievalScores retrieval_metrics(const RetrievalIndex& index,
                                  const RelevanceOracle& oracle, int k);

struct TypeConstrainedScores {
  double ndcg = 0.0;
  int queries = 0;
  int skipped = 0;       // queries with insufficient same-type pool
  double coverage = 1.0; // evaluated fraction
};

TypeConstrainedScores type_constrained_ndcg(const RetrievalIndex& index,
                                            const RelevanceOracle& oracle, int k);

// Fraction of sampled (anchor, same-type positive, other-type negative)
// triplets with cos(a,p) > cos(a,n).
double triplet_accuracy(const RetrievalIndex& index, int n_triplets,
                        uint64_t seed);

struct ClusteringScores {
  double nmi = 0.0;
  double ari = 0.0;
  double silhouette = 0.0;
};

// Seeded k-means (k-means++ init, best inertia over `restarts`), NMI with
// arithmetic normalization, standard ARI, Euclidean silhouette.
ClusteringScores clustering_metrics(const std::vector<std::vector<double>>& x,
                                    const std::vector<int>& labels, int k,
                                    uint64_t seed, int restarts = 20);

// Deterministic k-means used by clustering_metrics; exposed for tests.
std::vector<int> kmeans(const std::vector<std::vector<double>>& x, int k,
                        uint64_t seed, int restarts = 20);

struct RankCorrelation {
  double spearman = 0.0;
  double kendall = 0.0;
  int degenerate_queries = 0;  // constant distances, counted as 0
};

// Per query, rank candidates by embedding distance and by standardized
// descriptor distance; average rank correlations over queries (ties by
// average rank; Kendall is tau-b).
RankCorrelation geometric_rank_correlation(const RetrievalIndex& index);

// Spearman / Kendall tau-b of two paired samples; exposed for tests.
double spearman_corr(const std::vector<double>& a, const std::vector<double>& b);
double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b);

// Full report shaped like the retrieval/clustering result tables.
nlohmann::ordered_json embedding_report(const RetrievalIndex& index,
                                        const OracleConfig& oracle_cfg, int k,
                                        uint64_t seed);

}  // namespace sbm::metrics
