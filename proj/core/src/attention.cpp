#include "ldenhancer/attention.hpp"

#include <cmath>

#include "eigen_views.hpp"
#include "ldenhancer/layers.hpp"

namespace ldenhancer {

using detail::cview;
using detail::Matrix;
using detail::view;

namespace {

template <typename T>
auto mat(Tensor<T>& t) {
  return view(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

template <typename T>
auto cmat(const Tensor<T>& t) {
  return cview(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

// N x C x h x w sample -> L x C tokens (row-major over the grid).
template <typename T>
Tensor<T> to_tokens(const Tensor<T>& x, std::size_t b) {
  const std::size_t C = x.c(), L = x.plane_size();
  Tensor<T> out(Dims{L, C});
  for (std::size_t c = 0; c < C; ++c) {
    const T* p = x.plane(b, c);
    for (std::size_t t = 0; t < L; ++t) out[t * C + c] = p[t];
  }
  return out;
}

template <typename T>
void from_tokens(const Tensor<T>& tokens, Tensor<T>& x, std::size_t b) {
  const std::size_t C = x.c(), L = x.plane_size();
  for (std::size_t c = 0; c < C; ++c) {
    T* p = x.plane(b, c);
    for (std::size_t t = 0; t < L; ++t) p[t] = tokens[t * C + c];
  }
}

template <typename T>
void softmax_rows(Matrix<T>& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const T m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

template <typename T>
Tensor<T> layer_norm_forward(const LayerNorm<T>& ln, const Tensor<T>& x, Tensor<T>& hat, Tensor<T>& inv_std) {
  const std::size_t L = x.dim(0), C = x.dim(1);
  Tensor<T> y(x.dims());
  hat = Tensor<T>(x.dims());
  inv_std = Tensor<T>(Dims{L});
  for (std::size_t r = 0; r < L; ++r) {
    const T* row = x.data() + r * C;
    double mean = 0;
    for (std::size_t c = 0; c < C; ++c) mean += row[c];
    mean /= static_cast<double>(C);
    double var = 0;
    for (std::size_t c = 0; c < C; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(C);
    const T is = static_cast<T>(1.0 / std::sqrt(var + LayerNorm<T>::kEps));
    inv_std[r] = is;
    for (std::size_t c = 0; c < C; ++c) {
      const T h = (row[c] - static_cast<T>(mean)) * is;
      hat[r * C + c] = h;
      y[r * C + c] = ln.gamma.value[c] * h + ln.beta.value[c];
    }
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm_backward(LayerNorm<T>& ln, const Tensor<T>& hat, const Tensor<T>& inv_std, const Tensor<T>& dy) {
  const std::size_t L = dy.dim(0), C = dy.dim(1);
  Tensor<T> dx(dy.dims());
  std::vector<T> dhat(C);
  for (std::size_t r = 0; r < L; ++r) {
    T sum = 0, sum_h = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const T g = dy[r * C + c];
      const T h = hat[r * C + c];
      ln.gamma.grad[c] += g * h;
      ln.beta.grad[c] += g;
      dhat[c] = g * ln.gamma.value[c];
      sum += dhat[c];
      sum_h += dhat[c] * h;
    }
    const T inv_c = T(1) / static_cast<T>(C);
    for (std::size_t c = 0; c < C; ++c) {
      dx[r * C + c] = inv_std[r] * (dhat[c] - sum * inv_c - hat[r * C + c] * sum_h * inv_c);
    }
  }
  return dx;
}

}  // namespace

template <typename T>
Tensor<T> sinusoidal_encoding(std::size_t h, std::size_t w, std::size_t channels) {
  if (channels == 0 || channels % 4 != 0) throw ShapeError("sinusoidal_encoding: channels must be a multiple of 4");
  const std::size_t half = channels / 2;
  Tensor<T> pe(Dims{h * w, channels});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t t = y * w + x;
      for (std::size_t i = 0; i < half / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(half));
        pe[t * channels + 2 * i] = static_cast<T>(std::sin(y * freq));
        pe[t * channels + 2 * i + 1] = static_cast<T>(std::cos(y * freq));
        pe[t * channels + half + 2 * i] = static_cast<T>(std::sin(x * freq));
        pe[t * channels + half + 2 * i + 1] = static_cast<T>(std::cos(x * freq));
      }
    }
  return pe;
}

template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, Tensor<T>* probs) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: incompatible q/k/v shapes");
  }
  Matrix<T> s = cmat(q) * cmat(k).transpose() / std::sqrt(static_cast<T>(q.dim(1)));
  softmax_rows(s);
  Tensor<T> out(Dims{q.dim(0), v.dim(1)});
  mat(out).noalias() = s * cmat(v);
  if (probs) {
    *probs = Tensor<T>(Dims{static_cast<std::size_t>(s.rows()), static_cast<std::size_t>(s.cols())});
    mat(*probs) = s;
  }
  return out;
}

template <typename T>
LayerNorm<T>::LayerNorm(std::size_t d) : dim(d), gamma(Dims{d}), beta(Dims{d}) {
  gamma.value.fill(T(1));
}

template <typename T>
void LayerNorm<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  out.push_back({prefix + ".weight", &gamma});
  out.push_back({prefix + ".bias", &beta});
}

template <typename T>
CrossAttention<T>::CrossAttention(std::size_t c, std::size_t m, std::size_t hidden_width)
    : channels(c),
      heads(m),
      hidden(hidden_width),
      w_query(Dims{c, c}),
      w_key(Dims{c, c}),
      w_value(Dims{c, c}),
      w_out(Dims{c, c}),
      norm1(c),
      norm2(c),
      ffn1_weight(Dims{hidden_width, c}),
      ffn1_bias(Dims{hidden_width}),
      ffn2_weight(Dims{c, hidden_width}),
      ffn2_bias(Dims{c}) {
  if (m == 0 || c % m != 0) throw ShapeError("cross_attention: channels must be divisible by heads");
}

template <typename T>
void CrossAttention<T>::init(std::mt19937_64& rng) {
  for (auto* p : {&w_query, &w_key, &w_value, &w_out, &ffn1_weight, &ffn2_weight}) init_normal(p->value, rng);
  ffn1_bias.value.fill(T(0));
  ffn2_bias.value.fill(T(0));
}

template <typename T>
Tensor<T> CrossAttention<T>::forward(const Tensor<T>& query_features, const Tensor<T>& context, Cache* cache) const {
  if (query_features.dims() != context.dims() || query_features.rank() != 4 || query_features.c() != channels) {
    throw ShapeError("cross_attention: F2 " + to_string(query_features.dims()) + " and F1 " +
                     to_string(context.dims()) + " must match with " + std::to_string(channels) + " channels");
  }
  const std::size_t N = query_features.n(), L = query_features.plane_size();
  const std::size_t head_dim = channels / heads;
  const auto Cm = static_cast<Eigen::Index>(head_dim);
  const Tensor<T> pe = sinusoidal_encoding<T>(query_features.h(), query_features.w(), channels);
  Tensor<T> out(query_features.dims());
  if (cache) cache->samples.assign(N, {});

  for (std::size_t b = 0; b < N; ++b) {
    SampleCache sc;
    const Tensor<T> f2 = to_tokens(query_features, b);
    const Tensor<T> f1 = to_tokens(context, b);
    sc.query_in = f2 + pe;
    sc.key_in = f1 + pe;
    sc.value_in = f1;
    sc.query = Tensor<T>(Dims{L, channels});
    sc.key = Tensor<T>(Dims{L, channels});
    sc.value = Tensor<T>(Dims{L, channels});
    mat(sc.query).noalias() = cmat(sc.query_in) * cmat(w_query.value).transpose();
    mat(sc.key).noalias() = cmat(sc.key_in) * cmat(w_key.value).transpose();
    mat(sc.value).noalias() = cmat(sc.value_in) * cmat(w_value.value).transpose();

    sc.heads = Tensor<T>(Dims{L, channels});
    sc.probs.resize(heads);
    for (std::size_t j = 0; j < heads; ++j) {
      const auto off = static_cast<Eigen::Index>(j * head_dim);
      Matrix<T> s = cmat(sc.query).middleCols(off, Cm) * cmat(sc.key).middleCols(off, Cm).transpose();
      s /= std::sqrt(static_cast<T>(head_dim));
      softmax_rows(s);
      mat(sc.heads).middleCols(off, Cm).noalias() = s * cmat(sc.value).middleCols(off, Cm);
      sc.probs[j] = Tensor<T>(Dims{L, L});
      mat(sc.probs[j]) = s;
    }
    Tensor<T> residual1(Dims{L, channels});
    mat(residual1).noalias() = cmat(sc.heads) * cmat(w_out.value).transpose();
    residual1 += f2;
    sc.mid = layer_norm_forward(norm1, residual1, sc.norm1_hat, sc.norm1_inv_std);

    sc.hidden = Tensor<T>(Dims{L, hidden});
    auto hm = mat(sc.hidden);
    hm.noalias() = cmat(sc.mid) * cmat(ffn1_weight.value).transpose();
    for (Eigen::Index r = 0; r < hm.rows(); ++r)
      for (Eigen::Index c = 0; c < hm.cols(); ++c) {
        const T v = hm(r, c) + ffn1_bias.value[c];
        hm(r, c) = v > T(0) ? v : T(0);
      }
    Tensor<T> residual2(Dims{L, channels});
    auto r2 = mat(residual2);
    r2.noalias() = hm * cmat(ffn2_weight.value).transpose();
    for (Eigen::Index r = 0; r < r2.rows(); ++r)
      for (Eigen::Index c = 0; c < r2.cols(); ++c) r2(r, c) += ffn2_bias.value[c];
    residual2 += sc.mid;
    const Tensor<T> z = layer_norm_forward(norm2, residual2, sc.norm2_hat, sc.norm2_inv_std);
    from_tokens(z, out, b);
    if (cache) cache->samples[b] = std::move(sc);
  }
  return out;
}

template <typename T>
void CrossAttention<T>::backward(const Cache& cache, const Tensor<T>& dz, Tensor<T>& d_query_features,
                                 Tensor<T>& d_context) {
  const std::size_t N = dz.n(), L = dz.plane_size();
  if (cache.samples.size() != N) throw ShapeError("cross_attention backward: cache/batch mismatch");
  const std::size_t head_dim = channels / heads;
  const auto Cm = static_cast<Eigen::Index>(head_dim);
  const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  d_query_features = Tensor<T>(dz.dims());
  d_context = Tensor<T>(dz.dims());

  for (std::size_t b = 0; b < N; ++b) {
    const SampleCache& sc = cache.samples[b];
    const Tensor<T> dz_tok = to_tokens(dz, b);
    Tensor<T> d_res2 = layer_norm_backward(norm2, sc.norm2_hat, sc.norm2_inv_std, dz_tok);

    // FFN branch and residual into My.
    auto d_ffn_out = cmat(d_res2);
    mat(ffn2_weight.grad).noalias() += d_ffn_out.transpose() * cmat(sc.hidden);
    for (std::size_t c = 0; c < channels; ++c) ffn2_bias.grad[c] += d_ffn_out.col(c).sum();
    Matrix<T> d_hidden = d_ffn_out * cmat(ffn2_weight.value);
    const auto hm = cmat(sc.hidden);
    for (Eigen::Index r = 0; r < d_hidden.rows(); ++r)
      for (Eigen::Index c = 0; c < d_hidden.cols(); ++c)
        if (!(hm(r, c) > T(0))) d_hidden(r, c) = T(0);
    mat(ffn1_weight.grad).noalias() += d_hidden.transpose() * cmat(sc.mid);
    for (Eigen::Index c = 0; c < d_hidden.cols(); ++c) ffn1_bias.grad[c] += d_hidden.col(c).sum();
    Tensor<T> d_mid = d_res2;
    mat(d_mid).noalias() += d_hidden * cmat(ffn1_weight.value);

    Tensor<T> d_res1 = layer_norm_backward(norm1, sc.norm1_hat, sc.norm1_inv_std, d_mid);
    // Residual: d_res1 flows to F2 directly and into the attention output.
    Tensor<T> d_f2 = d_res1;
    mat(w_out.grad).noalias() += cmat(d_res1).transpose() * cmat(sc.heads);
    Matrix<T> d_heads = cmat(d_res1) * cmat(w_out.value);

    Matrix<T> d_query(L, channels), d_key(L, channels), d_value(L, channels);
    for (std::size_t j = 0; j < heads; ++j) {
      const auto off = static_cast<Eigen::Index>(j * head_dim);
      const auto a = cmat(sc.probs[j]);
      const auto dh = d_heads.middleCols(off, Cm);
      Matrix<T> da = dh * cmat(sc.value).middleCols(off, Cm).transpose();
      d_value.middleCols(off, Cm).noalias() = a.transpose() * dh;
      Matrix<T> ds(da.rows(), da.cols());
      for (Eigen::Index r = 0; r < da.rows(); ++r) {
        const T dot = (da.row(r).array() * a.row(r).array()).sum();
        ds.row(r) = a.row(r).array() * (da.row(r).array() - dot) * scale;
      }
      d_query.middleCols(off, Cm).noalias() = ds * cmat(sc.key).middleCols(off, Cm);
      d_key.middleCols(off, Cm).noalias() = ds.transpose() * cmat(sc.query).middleCols(off, Cm);
    }
    mat(w_query.grad).noalias() += d_query.transpose() * cmat(sc.query_in);
    mat(w_key.grad).noalias() += d_key.transpose() * cmat(sc.key_in);
    mat(w_value.grad).noalias() += d_value.transpose() * cmat(sc.value_in);

    mat(d_f2).noalias() += d_query * cmat(w_query.value);
    Tensor<T> d_f1(Dims{L, channels});
    mat(d_f1).noalias() = d_key * cmat(w_key.value) + d_value * cmat(w_value.value);
    from_tokens(d_f2, d_query_features, b);
    from_tokens(d_f1, d_context, b);
  }
}

template <typename T>
void CrossAttention<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  out.push_back({prefix + ".w_query", &w_query});
  out.push_back({prefix + ".w_key", &w_key});
  out.push_back({prefix + ".w_value", &w_value});
  out.push_back({prefix + ".w_out", &w_out});
  norm1.collect(prefix + ".norm1", out);
  out.push_back({prefix + ".ffn.fc1.weight", &ffn1_weight});
  out.push_back({prefix + ".ffn.fc1.bias", &ffn1_bias});
  out.push_back({prefix + ".ffn.fc2.weight", &ffn2_weight});
  out.push_back({prefix + ".ffn.fc2.bias", &ffn2_bias});
  norm2.collect(prefix + ".norm2", out);
}

template Tensor<float> sinusoidal_encoding<float>(std::size_t, std::size_t, std::size_t);
template Tensor<double> sinusoidal_encoding<double>(std::size_t, std::size_t, std::size_t);
template Tensor<float> scaled_dot_product_attention<float>(const Tensor<float>&, const Tensor<float>&,
                                                           const Tensor<float>&, Tensor<float>*);
template Tensor<double> scaled_dot_product_attention<double>(const Tensor<double>&, const Tensor<double>&,
                                                             const Tensor<double>&, Tensor<double>*);
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct CrossAttention<float>;
template struct CrossAttention<double>;

}  // namespace ldenhancer
