#pragma once

#include <cstdint>
#include <vector>

#include "mgcn/checkpoint.hpp"
#include "mgcn/optim.hpp"
#include "mgcn/tensor.hpp"

namespace mgcn {

struct EncoderConfig {
  int hidden_dim = 64;
  int num_hops = 10;          // K propagation steps
  double ppr_alpha = 0.1;     // teleport rate behind the hop-weight init
  double dropout_rate = 0.5;
  enum class Backbone { kGpr, kGcn2 };
  Backbone backbone = Backbone::kGpr;

  void validate() const;  // throws ConfigError
};

// Two-layer MLP, hop-combination weights and linear classifier head.
struct EncoderParams {
  DiffValue w1, b1, w2, b2;  // D×d, 1×d, d×d, 1×d
  DiffValue gamma;           // 1×(K+1) hop weights
  DiffValue wc, bc;          // d×C, 1×C

  int num_hops() const { return static_cast<int>(gamma.cols()) - 1; }
  // Live views over the same tensors; optimizer updates write through.
  std::vector<Parameter> parameters() const;
  Checkpoint to_checkpoint() const;
  static EncoderParams from_checkpoint(const Checkpoint& ckpt);
};

// Glorot-uniform weight matrices (draw order W1, W2, Wc), zero biases, and
// hop weights gamma_k = ppr_alpha·(1−ppr_alpha)^k for k < K with the
// remainder (1−ppr_alpha)^K at k = K, so they sum to 1.
EncoderParams init_params(int in_dim, int hidden_dim, int num_classes,
                          int num_hops, double ppr_alpha, std::uint64_t seed);

// Read-only view of the feature matrix. When the matrix is sparse enough a
// CSR copy is kept and the first layer runs a fused gather kernel instead of
// a dense product; results are identical, only the dropout mask stream
// differs (one draw per stored entry instead of per coordinate).
class FeatureCache {
 public:
  static FeatureCache build(const Mat& features);

  const Mat& dense() const { return *dense_; }
  bool use_sparse() const { return csr_ != nullptr; }
  Index rows() const { return dense_->rows(); }
  Index cols() const { return dense_->cols(); }

  // dropout(X)·W1 + b1 for both storage layouts.
  DiffValue dropout_linear(const DiffValue& w1, const DiffValue& b1,
                           double rate, Rng& rng, bool train) const;

 private:
  struct Csr {
    std::vector<int> row_offsets, col_indices;
    std::vector<double> values;
  };
  const Mat* dense_ = nullptr;          // must outlive the cache
  std::shared_ptr<const Csr> csr_;      // shared with live graph closures
};

// Hop-weighted propagation: M = MLP(X) via dropout→W1→ReLU→dropout→W2, then
// H = Σ_k gamma_k · Ã^k · M with the powers built iteratively.
DiffValue encode(const FeatureCache& features, const NormAdj& adj,
                 const EncoderParams& params, const EncoderConfig& cfg,
                 bool train, Rng& rng);
DiffValue encode(const Mat& features, const NormAdj& adj,
                 const EncoderParams& params, const EncoderConfig& cfg,
                 bool train, Rng& rng);

// Two-round spectral convolution: Ã·ReLU(Ã·(X·W1 + b1))·W2 + b2 with dropout
// before each linear transform. Ignores gamma.
DiffValue gcn2_encode(const FeatureCache& features, const NormAdj& adj,
                      const EncoderParams& params, const EncoderConfig& cfg,
                      bool train, Rng& rng);
DiffValue gcn2_encode(const Mat& features, const NormAdj& adj,
                      const EncoderParams& params, const EncoderConfig& cfg,
                      bool train, Rng& rng);

// Dispatches on cfg.backbone.
DiffValue encode_backbone(const FeatureCache& features, const NormAdj& adj,
                          const EncoderParams& params, const EncoderConfig& cfg,
                          bool train, Rng& rng);

// Class probabilities: softmax_rows(H·Wc + bc).
DiffValue classify(const DiffValue& h, const EncoderParams& params);

// Hop combination as one node: out = Σ_k gamma_k P_k, differentiable in both
// gamma and every power.
DiffValue hop_combine(const DiffValue& gamma, std::vector<DiffValue> powers);

}  // namespace mgcn
