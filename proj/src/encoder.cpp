#include "mgcn/encoder.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "mgcn/errors.hpp"

namespace mgcn {

void EncoderConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (num_hops < 0) throw ConfigError("num_hops must be >= 0");
  if (!(ppr_alpha > 0.0 && ppr_alpha < 1.0)) {
    throw ConfigError("ppr_alpha must lie in (0,1)");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0,1)");
  }
}

std::vector<Parameter> EncoderParams::parameters() const {
  // Hop weights follow the generalized-PageRank convention: trainable but
  // exempt from weight decay so long-range propagation is not suppressed.
  std::vector<Parameter> ps = {
      {"enc.W1", w1},
      {"enc.b1", b1},
      {"enc.W2", w2},
      {"enc.b2", b2},
      {"enc.gamma", gamma, true, /*decay=*/false},
      {"head.Wc", wc},
      {"head.bc", bc},
  };
  check_unique_names(ps);
  return ps;
}

Checkpoint EncoderParams::to_checkpoint() const {
  Checkpoint c;
  for (const auto& p : parameters()) c.emplace(p.name, p.value.data());
  return c;
}

EncoderParams EncoderParams::from_checkpoint(const Checkpoint& ckpt) {
  auto take = [&](const std::string& name) {
    auto it = ckpt.find(name);
    if (it == ckpt.end()) {
      throw ConfigError("checkpoint is missing parameter '" + name + "'");
    }
    return DiffValue::leaf(it->second, /*requires_grad=*/true);
  };
  EncoderParams p;
  p.w1 = take("enc.W1");
  p.b1 = take("enc.b1");
  p.w2 = take("enc.W2");
  p.b2 = take("enc.b2");
  p.gamma = take("enc.gamma");
  p.wc = take("head.Wc");
  p.bc = take("head.bc");
  if (p.gamma.rows() != 1 || p.gamma.cols() < 1) {
    throw ConfigError("checkpoint hop weights must be a 1×(K+1) row");
  }
  return p;
}

namespace {

Mat glorot(Index fan_in, Index fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Mat m(fan_in, fan_out);
  for (Index i = 0; i < fan_in; ++i) {
    for (Index j = 0; j < fan_out; ++j) m(i, j) = rng.uniform(-limit, limit);
  }
  return m;
}

}  // namespace

EncoderParams init_params(int in_dim, int hidden_dim, int num_classes,
                          int num_hops, double ppr_alpha, std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1 || num_classes < 1 || num_hops < 0) {
    throw ConfigError("init_params dimensions must be positive (hops >= 0)");
  }
  if (!(ppr_alpha > 0.0 && ppr_alpha < 1.0)) {
    throw ConfigError("ppr_alpha must lie in (0,1)");
  }
  Rng rng(seed);
  EncoderParams p;
  p.w1 = DiffValue::leaf(glorot(in_dim, hidden_dim, rng), true);
  p.b1 = DiffValue::leaf(Mat::Zero(1, hidden_dim), true);
  p.w2 = DiffValue::leaf(glorot(hidden_dim, hidden_dim, rng), true);
  p.b2 = DiffValue::leaf(Mat::Zero(1, hidden_dim), true);
  p.wc = DiffValue::leaf(glorot(hidden_dim, num_classes, rng), true);
  p.bc = DiffValue::leaf(Mat::Zero(1, num_classes), true);

  Mat gamma(1, num_hops + 1);
  double decay = 1.0;
  for (int k = 0; k < num_hops; ++k) {
    gamma(0, k) = ppr_alpha * decay;
    decay *= 1.0 - ppr_alpha;
  }
  gamma(0, num_hops) = decay;  // remainder keeps the weights summing to 1
  p.gamma = DiffValue::leaf(std::move(gamma), true);
  return p;
}

FeatureCache FeatureCache::build(const Mat& features) {
  FeatureCache c;
  c.dense_ = &features;
  Index nnz = (features.array() != 0.0).count();
  // The gather kernel wins only when most entries are zero.
  if (features.size() >= 1024 && nnz * 4 < features.size()) {
    auto csr = std::make_shared<Csr>();
    csr->row_offsets.assign(static_cast<std::size_t>(features.rows()) + 1, 0);
    csr->col_indices.reserve(static_cast<std::size_t>(nnz));
    csr->values.reserve(static_cast<std::size_t>(nnz));
    for (Index i = 0; i < features.rows(); ++i) {
      for (Index j = 0; j < features.cols(); ++j) {
        if (features(i, j) != 0.0) {
          csr->col_indices.push_back(static_cast<int>(j));
          csr->values.push_back(features(i, j));
        }
      }
      csr->row_offsets[static_cast<std::size_t>(i) + 1] =
          static_cast<int>(csr->col_indices.size());
    }
    c.csr_ = std::move(csr);
  }
  return c;
}

DiffValue FeatureCache::dropout_linear(const DiffValue& w1, const DiffValue& b1,
                                       double rate, Rng& rng, bool train) const {
  if (dense_->cols() != w1.rows()) {
    throw ConfigError("feature dim " + std::to_string(dense_->cols()) +
                      " does not match weight rows " + std::to_string(w1.rows()));
  }
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0,1)");
  if (!use_sparse()) {
    DiffValue x = DiffValue::leaf(*dense_);
    return add(matmul(dropout(x, rate, rng, train), w1), b1);
  }

  Index n = dense_->rows();
  Index d = w1.cols();
  bool draw = train && rate > 0.0;
  double keep_scale = draw ? 1.0 / (1.0 - rate) : 1.0;
  // Scaled surviving entries; zeros where the mask hit.
  std::vector<double> kept(csr_->values.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    double v = csr_->values[k];
    if (draw) v = rng.uniform() >= rate ? v * keep_scale : 0.0;
    kept[k] = v;
  }
  Mat out = b1.data().row(0).replicate(n, 1);
  const Mat& w = w1.data();
  for (Index i = 0; i < n; ++i) {
    auto row = out.row(i);
    for (int k = csr_->row_offsets[i]; k < csr_->row_offsets[i + 1]; ++k) {
      if (kept[k] != 0.0) row += kept[k] * w.row(csr_->col_indices[k]);
    }
  }
  return DiffValue::make_op(
      std::move(out), {w1, b1},
      [csr = csr_, kept = std::move(kept)](detail::Node& self) {
        auto& pw = self.parents[0];
        auto& pb = self.parents[1];
        if (pw->requires_grad) {
          Mat& gw = pw->ensure_grad();
          for (Index i = 0; i < self.grad.rows(); ++i) {
            for (int k = csr->row_offsets[i]; k < csr->row_offsets[i + 1]; ++k) {
              if (kept[k] != 0.0) {
                gw.row(csr->col_indices[k]) += kept[k] * self.grad.row(i);
              }
            }
          }
        }
        if (pb->requires_grad) {
          pb->ensure_grad().row(0) += self.grad.colwise().sum();
        }
      });
}

DiffValue hop_combine(const DiffValue& gamma, std::vector<DiffValue> powers) {
  if (gamma.rows() != 1 ||
      gamma.cols() != static_cast<Index>(powers.size())) {
    throw ConfigError("hop_combine needs one weight per power");
  }
  Mat out = Mat::Zero(powers[0].rows(), powers[0].cols());
  for (std::size_t k = 0; k < powers.size(); ++k) {
    out += gamma.data()(0, static_cast<Index>(k)) * powers[k].data();
  }
  std::vector<DiffValue> parents;
  parents.reserve(powers.size() + 1);
  parents.push_back(gamma);
  for (auto& p : powers) parents.push_back(std::move(p));
  return DiffValue::make_op(std::move(out), std::move(parents),
                            [](detail::Node& self) {
                              auto& pg = self.parents[0];
                              for (std::size_t k = 1; k < self.parents.size(); ++k) {
                                auto& pp = self.parents[k];
                                Index gi = static_cast<Index>(k) - 1;
                                if (pg->requires_grad) {
                                  pg->ensure_grad()(0, gi) +=
                                      self.grad.cwiseProduct(pp->data).sum();
                                }
                                if (pp->requires_grad) {
                                  pp->accumulate(pg->data(0, gi) * self.grad);
                                }
                              }
                            });
}

namespace {

// Shared MLP trunk: dropout→W1→ReLU→dropout→W2 (+biases).
DiffValue mlp_trunk(const FeatureCache& features, const EncoderParams& params,
                    const EncoderConfig& cfg, bool train, Rng& rng) {
  DiffValue pre = features.dropout_linear(params.w1, params.b1,
                                          cfg.dropout_rate, rng, train);
  DiffValue hidden = dropout(relu(pre), cfg.dropout_rate, rng, train);
  return add(matmul(hidden, params.w2), params.b2);
}

}  // namespace

DiffValue encode(const FeatureCache& features, const NormAdj& adj,
                 const EncoderParams& params, const EncoderConfig& cfg,
                 bool train, Rng& rng) {
  cfg.validate();
  if (params.num_hops() != cfg.num_hops) {
    throw ConfigError("config num_hops " + std::to_string(cfg.num_hops) +
                      " does not match parameter hop count " +
                      std::to_string(params.num_hops()));
  }
  DiffValue m = mlp_trunk(features, params, cfg, train, rng);
  std::vector<DiffValue> powers;
  powers.reserve(cfg.num_hops + 1);
  powers.push_back(m);
  for (int k = 0; k < cfg.num_hops; ++k) {
    powers.push_back(spmm(adj, powers.back()));
  }
  return hop_combine(params.gamma, std::move(powers));
}

DiffValue gcn2_encode(const FeatureCache& features, const NormAdj& adj,
                      const EncoderParams& params, const EncoderConfig& cfg,
                      bool train, Rng& rng) {
  cfg.validate();
  DiffValue pre = features.dropout_linear(params.w1, params.b1,
                                          cfg.dropout_rate, rng, train);
  DiffValue act = dropout(relu(spmm(adj, pre)), cfg.dropout_rate, rng, train);
  return add(spmm(adj, matmul(act, params.w2)), params.b2);
}

DiffValue encode(const Mat& features, const NormAdj& adj,
                 const EncoderParams& params, const EncoderConfig& cfg,
                 bool train, Rng& rng) {
  return encode(FeatureCache::build(features), adj, params, cfg, train, rng);
}

DiffValue gcn2_encode(const Mat& features, const NormAdj& adj,
                      const EncoderParams& params, const EncoderConfig& cfg,
                      bool train, Rng& rng) {
  return gcn2_encode(FeatureCache::build(features), adj, params, cfg, train, rng);
}

DiffValue encode_backbone(const FeatureCache& features, const NormAdj& adj,
                          const EncoderParams& params, const EncoderConfig& cfg,
                          bool train, Rng& rng) {
  return cfg.backbone == EncoderConfig::Backbone::kGcn2
             ? gcn2_encode(features, adj, params, cfg, train, rng)
             : encode(features, adj, params, cfg, train, rng);
}

DiffValue classify(const DiffValue& h, const EncoderParams& params) {
  return softmax_rows(add(matmul(h, params.wc), params.bc));
}

}  // namespace mgcn
