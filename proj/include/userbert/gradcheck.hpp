#pragma once

#include <map>
#include <sstream>

#include "userbert/train.hpp"

namespace userbert {

struct GradCheckReport {
  struct Family {
    double max_rel_err = 0;
    std::string worst_tensor;
    int checked = 0;
  };
  std::map<std::string, Family> families;
  int total_checked = 0;
  double tolerance = 1e-4;

  bool passed() const {
    for (const auto& [_, f] : families)
      if (f.max_rel_err >= tolerance) return false;
    return true;
  }

  std::string to_string() const {
    std::ostringstream out;
    out << "gradient check: " << total_checked << " scalars, tolerance " << tolerance << "\n";
    for (const auto& [name, f] : families)
      out << "  " << (f.max_rel_err < tolerance ? "ok  " : "FAIL") << "  " << name
          << "  max_rel_err=" << f.max_rel_err << "  (" << f.checked << " checked, worst "
          << f.worst_tensor << ")\n";
    return out.str();
  }
};

/// Central finite differences (64-bit) against the analytic gradients of the
/// combined reconstruction + classification objective on a tiny model.
/// Checks `samples_per_tensor` random scalars in every parameter tensor.
inline GradCheckReport gradient_check(double tolerance = 1e-4, uint64_t seed = 7,
                                      int samples_per_tensor = 6, double h = 1e-5) {
  // tiny config: L=1, H=8, A=2, vocabs <= 5, T <= 6
  ModelConfig cfg;
  cfg.num_layers = 1;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn = 16;
  cfg.dropout = 0.0;
  cfg.attr_dim = 3;
  cfg.max_long_positions = 8;
  cfg.max_short_positions = 8;
  ModelDims dims;
  dims.long_vocab = {3, 5};     // includes the UNKNOWN row
  dims.short_vocab = {4};
  dims.profile_vocab = {3};

  Parameters<double> params(cfg, dims);
  params.attach_classification_head(2);
  params.init(CounterRng(CounterRng::derive_key({seed, 1})), 0.5);
  // classification head is zero after attach; give it mass so its path is live
  {
    CounterRng r(CounterRng::derive_key({seed, 2}));
    for (Eigen::Index i = 0; i < params.cls_head_w.rows(); ++i)
      for (Eigen::Index j = 0; j < params.cls_head_w.cols(); ++j)
        params.cls_head_w(i, j) = 0.3 * r.normal();
  }

  // fixed tiny user: two long words, one short word, one profile token
  TokenizedUser user;
  user.user_id = "g0";
  user.long_words = {{SegmentKind::LongTerm, 0, {{1, 2}, {2, 4}}},
                     {SegmentKind::LongTerm, 3, {{2, 1}}}};
  user.short_words = {{SegmentKind::ShortTerm, 5, {{3}, {1}, {3}}}};
  user.profile_token_ids = {2};

  // fixed mask plan: both long words masked (one zeroed, one kept),
  // plus the short word kept-but-predicted
  MaskPlan plan;
  plan.items = {{1, true}, {2, false}, {3, false}};
  const int cls_label = 1;

  auto loss_fn = [&](const Parameters<double>& p, Parameters<double>* grads) {
    InputSequence<double> seq = assemble_input_sequence(user, p);
    auto [masked, targets] = apply_mask_and_targets(seq, plan, p);
    EncoderCache<double> cache;
    Mat<double> hidden = encoder_forward(masked.rows, p, false, nullptr, grads ? &cache : nullptr);
    if (!grads) {
      return masked_multilabel_loss<double>(hidden, targets, p, nullptr, nullptr) +
             classification_loss<double>(hidden, cls_label, p, nullptr, nullptr);
    }
    Mat<double> d_hidden = Mat<double>::Zero(hidden.rows(), hidden.cols());
    double loss = masked_multilabel_loss<double>(hidden, targets, p, grads, &d_hidden) +
                  classification_loss<double>(hidden, cls_label, p, grads, &d_hidden);
    Mat<double> d_input;
    encoder_backward(d_hidden, p, cache, *grads, d_input);
    input_backward(masked, d_input, p, *grads);
    return loss;
  };

  Parameters<double> analytic = Parameters<double>::like(params);
  loss_fn(params, &analytic);

  GradCheckReport report;
  report.tolerance = tolerance;
  CounterRng pick(CounterRng::derive_key({seed, 3}));
  auto p_tensors = params.tensors();
  auto g_tensors = analytic.tensors();
  const auto& names = params.tensor_names();

  for (size_t ti = 0; ti < p_tensors.size(); ++ti) {
    Mat<double>& tensor = *p_tensors[ti];
    auto& family = report.families[tensor_family(names[ti])];
    for (int s = 0; s < samples_per_tensor; ++s) {
      Eigen::Index i = pick.uniform_int(int(tensor.rows()));
      Eigen::Index j = pick.uniform_int(int(tensor.cols()));
      double saved = tensor(i, j);
      tensor(i, j) = saved + h;
      double up = loss_fn(params, nullptr);
      tensor(i, j) = saved - h;
      double down = loss_fn(params, nullptr);
      tensor(i, j) = saved;
      double numeric = (up - down) / (2 * h);
      double exact = (*g_tensors[ti])(i, j);
      double denom = std::max(1e-6, std::abs(numeric) + std::abs(exact));
      double rel = std::abs(numeric - exact) / denom;
      ++report.total_checked;
      ++family.checked;
      if (rel > family.max_rel_err) {
        family.max_rel_err = rel;
        family.worst_tensor = names[ti];
      }
    }
  }
  return report;
}

}  // namespace userbert
