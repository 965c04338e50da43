#pragma once

#include <cmath>
#include <vector>

#include "userbert/model/input.hpp"
#include "userbert/model/params.hpp"

namespace userbert {

namespace nn {

/// Row-wise softmax.
template <class S>
Mat<S> softmax_rows(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    RowVec<S> z = logits.row(i);
    S m = z.maxCoeff();
    RowVec<S> e = (z.array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

template <class S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + S(std::erf(double(x) * M_SQRT1_2)));
}

template <class S>
S gelu_grad(S x) {
  double xd = double(x);
  double cdf = 0.5 * (1.0 + std::erf(xd * M_SQRT1_2));
  double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * M_PI);
  return S(cdf + xd * pdf);
}

constexpr double kLayerNormEps = 1e-5;

/// y = (x - mean) / sqrt(var + eps), out = y * gain + bias. Returns the
/// normalized rows and per-row inverse std needed for the backward pass.
template <class S>
Mat<S> layer_norm(const Mat<S>& x, const Mat<S>& gain, const Mat<S>& bias, Mat<S>* normed,
                  Vec<S>* inv_std) {
  const Eigen::Index T = x.rows(), H = x.cols();
  Mat<S> out(T, H);
  if (normed) normed->resize(T, H);
  if (inv_std) inv_std->resize(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    S mu = x.row(i).mean();
    RowVec<S> centered = x.row(i).array() - mu;
    S var = centered.squaredNorm() / S(H);
    S istd = S(1) / std::sqrt(var + S(kLayerNormEps));
    RowVec<S> y = centered * istd;
    if (normed) normed->row(i) = y;
    if (inv_std) (*inv_std)(i) = istd;
    out.row(i) = (y.array() * gain.row(0).array()) + bias.row(0).array();
  }
  return out;
}

template <class S>
void layer_norm_backward(const Mat<S>& d_out, const Mat<S>& normed, const Vec<S>& inv_std,
                         const Mat<S>& gain, Mat<S>& d_x, Mat<S>& d_gain, Mat<S>& d_bias) {
  const Eigen::Index T = d_out.rows(), H = d_out.cols();
  d_x.resize(T, H);
  for (Eigen::Index i = 0; i < T; ++i) {
    RowVec<S> dz = d_out.row(i).array() * gain.row(0).array();
    S mean_dz = dz.mean();
    S mean_dzy = (dz.array() * normed.row(i).array()).mean();
    d_x.row(i) =
        (dz.array() - mean_dz - normed.row(i).array() * mean_dzy) * inv_std(i);
    d_gain.row(0).array() += d_out.row(i).array() * normed.row(i).array();
    d_bias.row(0) += d_out.row(i);
  }
}

/// Inverted dropout mask: entries are 0 or 1/(1-p).
template <class S>
Mat<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, CounterRng& rng) {
  Mat<S> m(rows, cols);
  const S keep = S(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.bernoulli(p) ? S(0) : keep;
  return m;
}

}  // namespace nn

/// Everything the backward pass needs from one forward run.
template <class S>
struct EncoderCache {
  struct LayerCache {
    Mat<S> x_in;                 // T x H
    Mat<S> q, k, v;              // T x H
    std::vector<Mat<S>> attn;    // per head: T x T probabilities
    Mat<S> context;              // T x H (heads concatenated)
    Mat<S> drop1, drop2;         // dropout masks (empty in eval mode)
    Mat<S> res1;                 // x_in + attn_out
    Mat<S> ln1_y, h1;            // normalized rows / post-LN1 activations
    Vec<S> ln1_inv_std;
    Mat<S> a1, g1;               // FF pre-activation / gelu output
    Mat<S> res2;                 // h1 + ffn_out
    Mat<S> ln2_y;
    Vec<S> ln2_inv_std;
  };
  std::vector<LayerCache> layers;
  Mat<S> out;  // final hidden states h_i, T x H
};

/// Post-norm transformer stack (multi-head self-attention + GELU feed-forward,
/// residuals then layer norm). Deterministic when train_mode is off.
template <class S>
Mat<S> encoder_forward(const Mat<S>& input, const Parameters<S>& params, bool train_mode,
                       CounterRng* dropout_rng, EncoderCache<S>* cache) {
  const ModelConfig& cfg = params.cfg;
  const Eigen::Index T = input.rows();
  const int H = cfg.hidden, A = cfg.heads, dh = H / A;
  const S scale = S(1.0 / std::sqrt(double(dh)));
  const bool use_dropout = train_mode && cfg.dropout > 0.0 && dropout_rng != nullptr;

  if (!input.allFinite()) {
    for (Eigen::Index i = 0; i < T; ++i)
      if (!input.row(i).allFinite())
        throw ValidationError("encoder_forward: non-finite input at position " +
                              std::to_string(i));
  }

  if (cache) cache->layers.resize(size_t(cfg.num_layers));
  Mat<S> x = input;
  for (int l = 0; l < cfg.num_layers; ++l) {
    const auto& lp = params.layers[size_t(l)];
    typename EncoderCache<S>::LayerCache local;
    auto* lc = cache ? &cache->layers[size_t(l)] : &local;
    lc->x_in = x;

    lc->q = (x * lp.wq).rowwise() + lp.bq.row(0);
    lc->k = (x * lp.wk).rowwise() + lp.bk.row(0);
    lc->v = (x * lp.wv).rowwise() + lp.bv.row(0);

    lc->attn.assign(size_t(A), Mat<S>());
    lc->context.resize(T, H);
    for (int h = 0; h < A; ++h) {
      auto qh = lc->q.middleCols(h * dh, dh);
      auto kh = lc->k.middleCols(h * dh, dh);
      auto vh = lc->v.middleCols(h * dh, dh);
      Mat<S> scores = (qh * kh.transpose()) * scale;
      lc->attn[size_t(h)] = nn::softmax_rows(scores);
      lc->context.middleCols(h * dh, dh).noalias() = lc->attn[size_t(h)] * vh;
    }
    Mat<S> attn_out = (lc->context * lp.wo).rowwise() + lp.bo.row(0);
    if (use_dropout) {
      lc->drop1 = nn::dropout_mask<S>(T, H, cfg.dropout, *dropout_rng);
      attn_out.array() *= lc->drop1.array();
    }
    lc->res1 = lc->x_in + attn_out;
    lc->h1 = nn::layer_norm(lc->res1, lp.ln1_g, lp.ln1_b, &lc->ln1_y, &lc->ln1_inv_std);

    lc->a1 = (lc->h1 * lp.w1).rowwise() + lp.b1.row(0);
    lc->g1 = lc->a1.unaryExpr([](S v) { return nn::gelu(v); });
    Mat<S> ffn_out = (lc->g1 * lp.w2).rowwise() + lp.b2.row(0);
    if (use_dropout) {
      lc->drop2 = nn::dropout_mask<S>(T, H, cfg.dropout, *dropout_rng);
      ffn_out.array() *= lc->drop2.array();
    }
    lc->res2 = lc->h1 + ffn_out;
    x = nn::layer_norm(lc->res2, lp.ln2_g, lp.ln2_b, &lc->ln2_y, &lc->ln2_inv_std);
  }
  if (cache) cache->out = x;
  return x;
}

/// Backpropagates dL/d(hidden states) through the stack, accumulating into
/// `grads` and returning dL/d(input rows) via d_input.
template <class S>
void encoder_backward(const Mat<S>& d_out, const Parameters<S>& params,
                      const EncoderCache<S>& cache, Parameters<S>& grads, Mat<S>& d_input) {
  const ModelConfig& cfg = params.cfg;
  const int H = cfg.hidden, A = cfg.heads, dh = H / A;
  const S scale = S(1.0 / std::sqrt(double(dh)));

  Mat<S> dx = d_out;
  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const auto& lp = params.layers[size_t(l)];
    auto& lg = grads.layers[size_t(l)];
    const auto& lc = cache.layers[size_t(l)];
    const Eigen::Index T = lc.x_in.rows();

    // ln2
    Mat<S> d_res2;
    nn::layer_norm_backward(dx, lc.ln2_y, lc.ln2_inv_std, lp.ln2_g, d_res2, lg.ln2_g, lg.ln2_b);

    // ffn branch
    Mat<S> d_ffn = d_res2;
    if (lc.drop2.size()) d_ffn.array() *= lc.drop2.array();
    lg.w2.noalias() += lc.g1.transpose() * d_ffn;
    lg.b2.row(0) += d_ffn.colwise().sum();
    Mat<S> d_g1 = d_ffn * lp.w2.transpose();
    Mat<S> d_a1 =
        d_g1.array() * lc.a1.unaryExpr([](S v) { return nn::gelu_grad(v); }).array();
    lg.w1.noalias() += lc.h1.transpose() * d_a1;
    lg.b1.row(0) += d_a1.colwise().sum();
    Mat<S> d_h1 = d_res2;  // residual path
    d_h1.noalias() += d_a1 * lp.w1.transpose();

    // ln1
    Mat<S> d_res1;
    nn::layer_norm_backward(d_h1, lc.ln1_y, lc.ln1_inv_std, lp.ln1_g, d_res1, lg.ln1_g,
                            lg.ln1_b);

    // attention output projection
    Mat<S> d_attn_out = d_res1;
    if (lc.drop1.size()) d_attn_out.array() *= lc.drop1.array();
    lg.wo.noalias() += lc.context.transpose() * d_attn_out;
    lg.bo.row(0) += d_attn_out.colwise().sum();
    Mat<S> d_context = d_attn_out * lp.wo.transpose();

    // per-head attention backward
    Mat<S> d_q = Mat<S>::Zero(T, H), d_k = Mat<S>::Zero(T, H), d_v = Mat<S>::Zero(T, H);
    for (int h = 0; h < A; ++h) {
      auto qh = lc.q.middleCols(h * dh, dh);
      auto kh = lc.k.middleCols(h * dh, dh);
      auto vh = lc.v.middleCols(h * dh, dh);
      const Mat<S>& attn = lc.attn[size_t(h)];
      auto d_ctx_h = d_context.middleCols(h * dh, dh);

      d_v.middleCols(h * dh, dh).noalias() = attn.transpose() * d_ctx_h;
      Mat<S> d_attn = d_ctx_h * vh.transpose();
      // softmax backward, row-wise: dS = A (dA - rowsum(dA * A))
      Mat<S> d_scores(T, T);
      for (Eigen::Index i = 0; i < T; ++i) {
        S dot = attn.row(i).dot(d_attn.row(i));
        d_scores.row(i) = attn.row(i).array() * (d_attn.row(i).array() - dot);
      }
      d_scores *= scale;
      d_q.middleCols(h * dh, dh).noalias() = d_scores * kh;
      d_k.middleCols(h * dh, dh).noalias() = d_scores.transpose() * qh;
    }

    lg.wq.noalias() += lc.x_in.transpose() * d_q;
    lg.bq.row(0) += d_q.colwise().sum();
    lg.wk.noalias() += lc.x_in.transpose() * d_k;
    lg.bk.row(0) += d_k.colwise().sum();
    lg.wv.noalias() += lc.x_in.transpose() * d_v;
    lg.bv.row(0) += d_v.colwise().sum();

    Mat<S> d_x_in = d_res1;  // residual path
    d_x_in.noalias() += d_q * lp.wq.transpose();
    d_x_in.noalias() += d_k * lp.wk.transpose();
    d_x_in.noalias() += d_v * lp.wv.transpose();
    dx = std::move(d_x_in);
  }
  d_input = std::move(dx);
}

/// Per masked position, per attribute of its segment: softmax over the
/// attribute vocabulary from the position's final hidden state.
template <class S>
std::vector<std::vector<RowVec<S>>> predict_masked_attributes(const Mat<S>& hidden,
                                                              const MaskTarget& targets,
                                                              const Parameters<S>& params) {
  std::vector<std::vector<RowVec<S>>> out;
  for (const auto& tgt : targets.positions) {
    const bool is_long = tgt.segment == SegmentKind::LongTerm;
    const auto& head_w = is_long ? params.long_head_w : params.short_head_w;
    const auto& head_b = is_long ? params.long_head_b : params.short_head_b;
    if (tgt.attr_value_ids.size() != head_w.size())
      throw ValidationError("prediction head / segment attribute count mismatch");
    std::vector<RowVec<S>> per_attr;
    for (size_t a = 0; a < head_w.size(); ++a) {
      RowVec<S> z = hidden.row(tgt.pos) * head_w[a] + head_b[a].row(0);
      Mat<S> zr = z;
      per_attr.push_back(nn::softmax_rows(zr).row(0));
    }
    out.push_back(std::move(per_attr));
  }
  return out;
}

/// Class probabilities from the first token's hidden state.
template <class S>
RowVec<S> classify_sequence(const Mat<S>& hidden, const Parameters<S>& params) {
  if (params.num_classes() < 2)
    throw ValidationError("classify_sequence: no classification head attached");
  RowVec<S> z = hidden.row(0) * params.cls_head_w + params.cls_head_b.row(0);
  Mat<S> zr = z;
  return nn::softmax_rows(zr).row(0);
}

}  // namespace userbert
