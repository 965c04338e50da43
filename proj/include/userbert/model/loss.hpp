#pragma once

#include <cmath>
#include <vector>

#include "userbert/model/encoder.hpp"

namespace userbert {

namespace nn {

template <class S>
S log_sum_exp(const RowVec<S>& z) {
  S m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace nn

/// Cross entropy between a normalized multi-hot target and a softmax over the
/// logits: loss = logsumexp(z) - sum_v (y_v / |y|) z_v. Returns the loss and
/// writes dL/dz (= softmax(z) - y/|y|) when d_logits is given.
template <class S>
S soft_cross_entropy_logits(const RowVec<S>& logits, const std::vector<int>& target_ids,
                            RowVec<S>* d_logits) {
  if (target_ids.empty()) throw ValidationError("soft_cross_entropy: all-zero target");
  const S lse = nn::log_sum_exp(logits);
  const S w = S(1) / S(target_ids.size());
  S loss = lse;
  for (int id : target_ids) {
    if (id < 0 || id >= int(logits.size()))
      throw ValidationError("soft_cross_entropy: target id out of range");
    loss -= w * logits(id);
  }
  if (d_logits) {
    *d_logits = (logits.array() - lse).exp();  // softmax
    for (int id : target_ids) (*d_logits)(id) -= w;
  }
  return loss;
}

/// Config-flagged alternative: independent sigmoid + binary CE per value.
template <class S>
S sigmoid_bce_logits(const RowVec<S>& logits, const std::vector<int>& target_ids,
                     RowVec<S>* d_logits) {
  if (target_ids.empty()) throw ValidationError("sigmoid_bce: all-zero target");
  RowVec<S> y = RowVec<S>::Zero(logits.size());
  for (int id : target_ids) y(id) = S(1);
  S loss = 0;
  RowVec<S> p(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    S z = logits(i);
    // log(1 + e^z) computed stably
    S softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - y(i) * z;
    p(i) = S(1) / (S(1) + std::exp(-z));
  }
  if (d_logits) *d_logits = p - y;
  return loss;
}

/// Convenience overload on probability vectors (closed-form checks).
template <class S>
S soft_cross_entropy(const RowVec<S>& probs, const std::vector<int>& target_ids) {
  if (target_ids.empty()) throw ValidationError("soft_cross_entropy: all-zero target");
  const S w = S(1) / S(target_ids.size());
  S loss = 0;
  for (int id : target_ids) loss -= w * std::log(probs(id));
  return loss;
}

/// Sum over masked positions and their segment's attributes of the
/// reconstruction cross entropy. When grads/d_hidden are given, accumulates
/// head gradients and dL/d(hidden states).
template <class S>
S masked_multilabel_loss(const Mat<S>& hidden, const MaskTarget& targets,
                         const Parameters<S>& params, Parameters<S>* grads, Mat<S>* d_hidden,
                         std::vector<S>* per_attr_loss_long = nullptr,
                         std::vector<S>* per_attr_loss_short = nullptr) {
  if (targets.positions.empty())
    throw ValidationError("masked_multilabel_loss: no masked positions");
  S total = 0;
  for (const auto& tgt : targets.positions) {
    const bool is_long = tgt.segment == SegmentKind::LongTerm;
    const auto& head_w = is_long ? params.long_head_w : params.short_head_w;
    const auto& head_b = is_long ? params.long_head_b : params.short_head_b;
    if (tgt.attr_value_ids.size() != head_w.size())
      throw ValidationError("masked_multilabel_loss: target/head attribute count mismatch");
    auto h = hidden.row(tgt.pos);
    for (size_t a = 0; a < head_w.size(); ++a) {
      RowVec<S> z = h * head_w[a] + head_b[a].row(0);
      RowVec<S> dz;
      S loss = params.cfg.sigmoid_bce
                   ? sigmoid_bce_logits(z, tgt.attr_value_ids[a], grads ? &dz : nullptr)
                   : soft_cross_entropy_logits(z, tgt.attr_value_ids[a], grads ? &dz : nullptr);
      total += loss;
      auto* per_attr = is_long ? per_attr_loss_long : per_attr_loss_short;
      if (per_attr) {
        if (per_attr->size() < head_w.size()) per_attr->resize(head_w.size(), S(0));
        (*per_attr)[a] += loss;
      }
      if (grads) {
        auto& gw = is_long ? grads->long_head_w : grads->short_head_w;
        auto& gb = is_long ? grads->long_head_b : grads->short_head_b;
        gw[a].noalias() += h.transpose() * dz;
        gb[a].row(0) += dz;
        if (d_hidden) d_hidden->row(tgt.pos).noalias() += dz * head_w[a].transpose();
      }
    }
  }
  return total;
}

/// Softmax cross entropy on the first token's class logits.
template <class S>
S classification_loss(const Mat<S>& hidden, int label, const Parameters<S>& params,
                      Parameters<S>* grads, Mat<S>* d_hidden) {
  if (label < 0 || label >= params.num_classes())
    throw ValidationError("classification_loss: label out of range");
  RowVec<S> z = hidden.row(0) * params.cls_head_w + params.cls_head_b.row(0);
  RowVec<S> dz;
  S loss = soft_cross_entropy_logits(z, {label}, grads ? &dz : nullptr);
  if (grads) {
    grads->cls_head_w.noalias() += hidden.row(0).transpose() * dz;
    grads->cls_head_b.row(0) += dz;
    if (d_hidden) d_hidden->row(0).noalias() += dz * params.cls_head_w.transpose();
  }
  return loss;
}

}  // namespace userbert
