#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Fixed 2-D sinusoidal encoding for an h x w token grid flattened row-major.
// The first half of the channels encodes the row, the second half the column.
// Returns an (h*w) x channels tensor.
template <typename T>
Tensor<T> sinusoidal_encoding(std::size_t h, std::size_t w, std::size_t channels);

// softmax(q k^T / sqrt(d)) v for (L x d) query/key/value tensors. When probs
// is non-null it receives the (Lq x Lk) row-stochastic weight matrix.
template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                       Tensor<T>* probs = nullptr);

// Layer normalization over the last axis of an (L x C) token matrix.
template <typename T>
struct LayerNorm {
  static constexpr double kEps = 1e-5;
  std::size_t dim = 0;
  Parameter<T> gamma;
  Parameter<T> beta;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t d);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
};

// Multi-head cross-attention with post-norm residuals and a two-layer ReLU
// feed-forward network:
//   Mx = CA(F2 + P, F1 + P, F1)
//   My = Norm(Mx + F2)
//   Z  = Norm(FFN(My) + My)
// Projections are stored PyTorch style (out x in) and applied as x W^T; head j
// owns output rows [j*C/M, (j+1)*C/M) of the query/key/value projections.
template <typename T>
struct CrossAttention {
  struct SampleCache {
    Tensor<T> query_in, key_in, value_in;  // L x C
    Tensor<T> query, key, value;           // L x C
    std::vector<Tensor<T>> probs;          // per head, L x L
    Tensor<T> heads;                       // L x C, concatenated head outputs
    Tensor<T> norm1_hat, norm1_inv_std;    // L x C, L
    Tensor<T> mid;                         // My, L x C
    Tensor<T> hidden;                      // post-ReLU, L x hidden
    Tensor<T> norm2_hat, norm2_inv_std;
  };
  struct Cache {
    std::vector<SampleCache> samples;
  };

  std::size_t channels = 0;
  std::size_t heads = 1;
  std::size_t hidden = 0;
  Parameter<T> w_query, w_key, w_value, w_out;  // C x C
  LayerNorm<T> norm1, norm2;
  Parameter<T> ffn1_weight, ffn1_bias;  // hidden x C, hidden
  Parameter<T> ffn2_weight, ffn2_bias;  // C x hidden, C

  CrossAttention() = default;
  CrossAttention(std::size_t c, std::size_t m, std::size_t hidden_width);

  void init(std::mt19937_64& rng);
  // query_features (F2) and context (F1) are N x C x h x w; returns Z in the
  // same layout.
  Tensor<T> forward(const Tensor<T>& query_features, const Tensor<T>& context, Cache* cache) const;
  // Accumulates parameter gradients; writes dL/dF2 and dL/dF1.
  void backward(const Cache& cache, const Tensor<T>& dz, Tensor<T>& d_query_features, Tensor<T>& d_context);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
};

}  // namespace ldenhancer
