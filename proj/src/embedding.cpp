#include "sbm/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace sbm::emb {

using nn::Tensor;

namespace {
constexpr double kInitStd = 0.02;
}

PositionalTable::PositionalTable(int s_max, int d, Rng& rng)
    : table(Tensor::randn({s_max, d}, rng, kInitStd)) {
  table.set_requires_grad();
}

ScalarMlp::ScalarMlp(int d_h, int d, Rng& rng)
    : w1(Tensor::randn({1, d_h}, rng, kInitStd)),
      b1(Tensor::zeros({d_h})),
      w2(Tensor::randn({d_h, d}, rng, kInitStd)),
      b2(Tensor::zeros({d})) {
  w1.set_requires_grad();
  b1.set_requires_grad();
  w2.set_requires_grad();
  b2.set_requires_grad();
}

Tensor ScalarMlp::forward(const Tensor& values) const {
  Tensor h = nn::gelu(nn::add_rowvec(nn::matmul(values, w1), b1));
  return nn::add_rowvec(nn::matmul(h, w2), b2);
}

GroupEmbedder::GroupEmbedder(int d_h, int d, Rng& rng)
    : w1(Tensor::randn({1, d_h}, rng, kInitStd)),
      b1(Tensor::zeros({d_h})),
      proj(Tensor::randn({d_h, d}, rng, kInitStd)),
      pb(Tensor::zeros({d})) {
  w1.set_requires_grad();
  b1.set_requires_grad();
  proj.set_requires_grad();
  pb.set_requires_grad();
}

Tensor GroupEmbedder::forward(const std::vector<Tensor>& member_values) const {
  if (member_values.empty())
    throw std::invalid_argument("GroupEmbedder: empty group");
  Tensor pooled;
  for (const Tensor& v : member_values) {
    Tensor e = nn::gelu(nn::add_rowvec(nn::matmul(v, w1), b1));
    pooled = pooled.defined() ? nn::add(pooled, e) : e;
  }
  pooled = nn::mul_scalar(pooled, 1.0 / static_cast<double>(member_values.size()));
  return nn::add_rowvec(nn::matmul(pooled, proj), pb);
}

FeatureEmbedderBank::FeatureEmbedderBank(tok::FeatureSchema schema, int d,
                                         int s_max, Rng& rng)
    : schema_(std::move(schema)), d_(d) {
  int d_h = std::max(2, d / 2);
  for (const tok::FeatureRow& row : schema_.rows) {
    FeatureEmbedder fe;
    fe.kind = row.kind;
    switch (row.kind) {
      case tok::FeatureKind::kCategorical: {
        // one extra dedicated padding row, kept at zero by masking
        fe.table = Tensor::randn({row.vocab + 1, d}, rng, kInitStd);
        for (int j = 0; j < d; ++j)
          fe.table.mutable_data()[static_cast<size_t>(row.vocab) * d + j] = 0.0;
        fe.table.set_requires_grad();
        break;
      }
      case tok::FeatureKind::kScalar:
        fe.mlp = ScalarMlp(d_h, d, rng);
        break;
      case tok::FeatureKind::kGroup:
        fe.group = GroupEmbedder(d_h, d, rng);
        break;
    }
    embedders_.push_back(std::move(fe));
  }
  positions_ = PositionalTable(s_max, d, rng);
}

Tensor FeatureEmbedderBank::embed(const tok::TokenMatrix& x, int s_used) const {
  return embed_with_token_id_overrides(x, s_used, {});
}

Tensor FeatureEmbedderBank::embed_with_token_id_overrides(
    const tok::TokenMatrix& x, int s_used,
    const std::vector<std::pair<int, int>>& overrides) const {
  if (x.schema->fingerprint() != schema_.fingerprint())
    throw std::invalid_argument("embed: matrix schema does not match bank");
  if (s_used < 1 || s_used > x.seq_len)
    throw std::invalid_argument("embed: bad sequence length");

  // applicability masks come from the schema, never from stored values, so
  // sentinel entries contribute exactly zero regardless of their content
  std::vector<int> token_types(s_used);
  for (int s = 0; s < s_used; ++s) token_types[s] = x.token_type(s);
  int pad_type = schema_.pad_type();

  Tensor acc;
  for (int f = 0; f < schema_.feature_count(); ++f) {
    const tok::FeatureRow& row = schema_.rows[f];
    const FeatureEmbedder& fe = embedders_[f];
    int off = schema_.row_offset(f);

    std::vector<double> mask(s_used);
    bool any_active = false;
    for (int s = 0; s < s_used; ++s) {
      bool active = row.applies_to(token_types[s]) &&
                    !(token_types[s] == pad_type && f != 0);
      mask[s] = active ? 1.0 : 0.0;
      any_active = any_active || active;
    }
    if (!any_active) continue;

    Tensor u;
    switch (fe.kind) {
      case tok::FeatureKind::kCategorical: {
        std::vector<int> indices(s_used);
        for (int s = 0; s < s_used; ++s) {
          if (mask[s] == 0.0) {
            indices[s] = row.vocab;  // dedicated padding row
            continue;
          }
          int v = static_cast<int>(x.at(off, s));
          if (f == 1)  // token_id row supports MLM overrides
            for (const auto& [col, id] : overrides)
              if (col == s) v = id;
          if (v < 0 || v >= row.vocab)
            throw std::invalid_argument("embed: categorical value " +
                                        std::to_string(v) + " out of vocab for " +
                                        row.name);
          indices[s] = v;
        }
        u = nn::embedding_lookup(fe.table, indices);
        break;
      }
      case tok::FeatureKind::kScalar: {
        std::vector<double> vals(s_used);
        for (int s = 0; s < s_used; ++s)
          vals[s] = mask[s] != 0.0 ? x.at(off, s) : 0.0;
        u = fe.mlp.forward(Tensor::from_data({s_used, 1}, std::move(vals)));
        break;
      }
      case tok::FeatureKind::kGroup: {
        std::vector<Tensor> members;
        for (int k = 0; k < row.arity; ++k) {
          std::vector<double> vals(s_used);
          for (int s = 0; s < s_used; ++s)
            vals[s] = mask[s] != 0.0 ? x.at(off + k, s) : 0.0;
          members.push_back(Tensor::from_data({s_used, 1}, std::move(vals)));
        }
        u = fe.group.forward(members);
        break;
      }
    }

    // second masking step: inactive features contribute exactly zero,
    // including the bias terms
    std::vector<double> mask_mat(static_cast<size_t>(s_used) * d_);
    for (int s = 0; s < s_used; ++s)
      for (int j = 0; j < d_; ++j) mask_mat[s * d_ + j] = mask[s];
    u = nn::mul(u, Tensor::from_data({s_used, d_}, std::move(mask_mat)));
    acc = acc.defined() ? nn::add(acc, u) : u;
  }

  Tensor pos = nn::slice_rows(positions_.table, 0, s_used);
  return nn::add(acc, pos);
}

std::vector<Tensor> FeatureEmbedderBank::parameters() const {
  std::vector<Tensor> params;
  for (const FeatureEmbedder& fe : embedders_) {
    switch (fe.kind) {
      case tok::FeatureKind::kCategorical:
        params.push_back(fe.table);
        break;
      case tok::FeatureKind::kScalar:
        params.push_back(fe.mlp.w1);
        params.push_back(fe.mlp.b1);
        params.push_back(fe.mlp.w2);
        params.push_back(fe.mlp.b2);
        break;
      case tok::FeatureKind::kGroup:
        params.push_back(fe.group.w1);
        params.push_back(fe.group.b1);
        params.push_back(fe.group.proj);
        params.push_back(fe.group.pb);
        break;
    }
  }
  params.push_back(positions_.table);
  return params;
}

}  // namespace sbm::emb
