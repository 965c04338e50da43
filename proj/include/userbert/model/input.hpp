#pragma once

#include <algorithm>
#include <iostream>
#include <vector>

#include "userbert/model/params.hpp"
#include "userbert/rng.hpp"
#include "userbert/tokenizer.hpp"

namespace userbert {

/// Masking decisions for one sequence. Positions are global row indices into
/// the assembled layout and only ever point at behavioral tokens.
struct MaskPlan {
  struct Item {
    int pos = 0;
    bool zeroed = true;  // zeroed-out vs kept-but-predicted
  };
  std::vector<Item> items;
};

/// Multi-hot reconstruction targets: per masked position, per attribute of
/// that segment, the set of value ids occurring in the word's actions.
struct MaskTarget {
  struct PerPosition {
    int pos = 0;
    SegmentKind segment = SegmentKind::LongTerm;
    std::vector<std::vector<int>> attr_value_ids;  // per attribute, sorted distinct ids
  };
  std::vector<PerPosition> positions;
};

/// Fixed-layout encoder input: [CLS] + long words + short words + profile
/// tokens. Keeps the id-level word contents so gradients can be scattered
/// back into embedding tables and targets can be built.
template <class S>
struct InputSequence {
  std::string user_id;
  int n_long = 0, n_short = 0, n_profile = 0;
  std::vector<int> position_indices;  // per row
  std::vector<int> segment_indices;   // 0 long, 1 short, 2 profile (CLS uses 2)
  Mat<S> rows;                        // T x H summed input vectors

  // caches for gradient scatter
  std::vector<TokenizedWord> words;  // layout order: long then short
  Mat<S> word_means;                 // t x (n_attr * attr_dim), per-word concat-mean
  std::vector<int> profile_ids;
  std::vector<bool> fused_zeroed;    // per row: token part was zeroed by masking
  std::vector<bool> fully_zeroed;    // per row: entire vector was zeroed

  int t() const { return n_long + n_short; }
  int T() const { return 1 + n_long + n_short + n_profile; }
  SegmentKind segment_of_word(int word_index) const {
    return word_index < n_long ? SegmentKind::LongTerm : SegmentKind::ShortTerm;
  }
};

namespace detail {
/// Concatenated-attribute mean over the word's actions.
template <class S>
RowVec<S> word_concat_mean(const TokenizedWord& word, const std::vector<Mat<S>>& attr_emb,
                           int attr_dim) {
  const int n_attr = int(attr_emb.size());
  RowVec<S> mean = RowVec<S>::Zero(n_attr * attr_dim);
  if (word.action_ids.empty()) throw ValidationError("behavioral word with no actions");
  for (const auto& ids : word.action_ids) {
    if (int(ids.size()) != n_attr)
      throw ValidationError("action id tuple does not match the attribute count");
    for (int a = 0; a < n_attr; ++a) {
      if (ids[size_t(a)] < 0 || ids[size_t(a)] >= attr_emb[size_t(a)].rows())
        throw ValidationError("attribute id out of vocabulary bounds");
      mean.segment(a * attr_dim, attr_dim) += attr_emb[size_t(a)].row(ids[size_t(a)]);
    }
  }
  mean /= S(word.action_ids.size());
  return mean;
}
}  // namespace detail

/// Fused token embedding of one word: concatenate each action's attribute
/// rows, mean over actions, project to H with the segment's fusion matrix.
template <class S>
RowVec<S> build_token_embeddings(const TokenizedWord& word, const Parameters<S>& params) {
  const bool is_long = word.segment_kind == SegmentKind::LongTerm;
  RowVec<S> mean = detail::word_concat_mean(word, is_long ? params.long_attr_emb
                                                          : params.short_attr_emb,
                                            params.cfg.attr_dim);
  return mean * (is_long ? params.long_fuse : params.short_fuse);
}

/// Assembles the [CLS] + long + short + profile layout. Truncation keeps the
/// most recent max_long/max_short words; behavioral rows are fused token +
/// position + segment embeddings, profile rows have no position term.
template <class S>
InputSequence<S> assemble_input_sequence(const TokenizedUser& user, const Parameters<S>& params,
                                         int max_long = -1, int max_short = -1) {
  const ModelConfig& cfg = params.cfg;
  if (max_long < 0) max_long = cfg.max_long_words;
  if (max_short < 0) max_short = cfg.max_short_words;

  InputSequence<S> seq;
  seq.user_id = user.user_id;
  auto tail = [](const std::vector<TokenizedWord>& words, int keep) {
    size_t skip = words.size() > size_t(keep) ? words.size() - size_t(keep) : 0;
    return std::vector<TokenizedWord>(words.begin() + long(skip), words.end());
  };
  std::vector<TokenizedWord> longs = tail(user.long_words, max_long);
  std::vector<TokenizedWord> shorts = tail(user.short_words, max_short);
  seq.n_long = int(longs.size());
  seq.n_short = int(shorts.size());
  seq.n_profile = int(user.profile_token_ids.size());
  seq.profile_ids = user.profile_token_ids;
  seq.words = std::move(longs);
  seq.words.insert(seq.words.end(), shorts.begin(), shorts.end());

  const int T = seq.T();
  const int H = cfg.hidden;
  seq.rows = Mat<S>::Zero(T, H);
  seq.position_indices.assign(size_t(T), 0);
  seq.segment_indices.assign(size_t(T), 2);
  seq.word_means = Mat<S>::Zero(
      seq.t(), std::max(int(params.long_fuse.rows()), int(params.short_fuse.rows())));
  seq.fused_zeroed.assign(size_t(T), false);
  seq.fully_zeroed.assign(size_t(T), false);

  // CLS
  seq.rows.row(0) = params.cls_emb.row(0) + params.segment_emb.row(2);

  static int clamp_warnings = 0;
  for (int w = 0; w < seq.t(); ++w) {
    const TokenizedWord& word = seq.words[size_t(w)];
    const bool is_long = word.segment_kind == SegmentKind::LongTerm;
    const Mat<S>& pos_table = is_long ? params.long_pos : params.short_pos;
    int pos = word.position_index;
    if (pos >= int(pos_table.rows())) {
      if (clamp_warnings++ < 8)
        std::cerr << "warning: position " << pos << " clamped to " << pos_table.rows() - 1
                  << " (" << to_string(word.segment_kind) << ")\n";
      pos = int(pos_table.rows()) - 1;
    }
    const auto& attr_emb = is_long ? params.long_attr_emb : params.short_attr_emb;
    RowVec<S> mean = detail::word_concat_mean(word, attr_emb, cfg.attr_dim);
    seq.word_means.row(w).head(mean.size()) = mean;
    int row = 1 + w;
    seq.rows.row(row) = mean * (is_long ? params.long_fuse : params.short_fuse) +
                        pos_table.row(pos) + params.segment_emb.row(is_long ? 0 : 1);
    seq.position_indices[size_t(row)] = pos;
    seq.segment_indices[size_t(row)] = is_long ? 0 : 1;
  }

  for (int p = 0; p < seq.n_profile; ++p) {
    int id = seq.profile_ids[size_t(p)];
    if (id < 0 || id >= int(params.profile_emb[size_t(p)].rows()))
      throw ValidationError("profile id out of vocabulary bounds");
    int row = 1 + seq.t() + p;
    seq.rows.row(row) = params.profile_emb[size_t(p)].row(id) + params.segment_emb.row(2);
    seq.segment_indices[size_t(row)] = 2;
  }
  return seq;
}

/// Independent Bernoulli(0.15) selection over behavioral positions; selected
/// positions are zeroed with p=0.8, kept otherwise. If nothing got selected,
/// one uniform position is forced (zeroed). Never touches CLS or profile rows.
template <class S>
MaskPlan sample_mask_plan(const InputSequence<S>& seq, CounterRng& rng, double select_p = 0.15,
                          double zero_p = 0.8) {
  if (seq.t() < 1)
    throw ValidationError("sample_mask_plan: sequence has no behavioral tokens");
  MaskPlan plan;
  for (int w = 0; w < seq.t(); ++w)
    if (rng.bernoulli(select_p)) plan.items.push_back({1 + w, rng.bernoulli(zero_p)});
  if (plan.items.empty()) plan.items.push_back({1 + rng.uniform_int(seq.t()), true});
  return plan;
}

/// Applies a plan: zeroed positions get the zero vector (the full summed
/// vector by default; with mask_keep_position only the token part is removed,
/// position + segment terms stay). Targets come from the original word ids.
template <class S>
std::pair<InputSequence<S>, MaskTarget> apply_mask_and_targets(const InputSequence<S>& seq,
                                                               const MaskPlan& plan,
                                                               const Parameters<S>& params) {
  InputSequence<S> masked = seq;
  MaskTarget targets;
  for (const auto& item : plan.items) {
    if (item.pos < 1 || item.pos > seq.t())
      throw ValidationError("mask plan position outside the behavioral token range");
    const TokenizedWord& word = seq.words[size_t(item.pos - 1)];
    if (item.zeroed) {
      masked.fused_zeroed[size_t(item.pos)] = true;
      if (params.cfg.mask_keep_position) {
        const bool is_long = word.segment_kind == SegmentKind::LongTerm;
        const Mat<S>& pos_table = is_long ? params.long_pos : params.short_pos;
        masked.rows.row(item.pos) =
            pos_table.row(seq.position_indices[size_t(item.pos)]) +
            params.segment_emb.row(is_long ? 0 : 1);
      } else {
        masked.fully_zeroed[size_t(item.pos)] = true;
        masked.rows.row(item.pos).setZero();
      }
    }
    MaskTarget::PerPosition tgt;
    tgt.pos = item.pos;
    tgt.segment = word.segment_kind;
    const int n_attr = int(word.action_ids.front().size());
    tgt.attr_value_ids.resize(size_t(n_attr));
    for (const auto& ids : word.action_ids)
      for (int a = 0; a < n_attr; ++a) tgt.attr_value_ids[size_t(a)].push_back(ids[size_t(a)]);
    for (auto& v : tgt.attr_value_ids) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    targets.positions.push_back(std::move(tgt));
  }
  return {std::move(masked), std::move(targets)};
}

/// Scatters dL/d(input rows) back into embedding-table gradients. Rows whose
/// token part was zeroed contribute nothing through the fused path; fully
/// zeroed rows contribute nothing at all.
template <class S>
void input_backward(const InputSequence<S>& seq, const Mat<S>& d_rows,
                    const Parameters<S>& params, Parameters<S>& grads) {
  const int attr_dim = params.cfg.attr_dim;
  grads.cls_emb.row(0) += d_rows.row(0);
  grads.segment_emb.row(2) += d_rows.row(0);

  for (int w = 0; w < seq.t(); ++w) {
    int row = 1 + w;
    if (seq.fully_zeroed[size_t(row)]) continue;
    const TokenizedWord& word = seq.words[size_t(w)];
    const bool is_long = word.segment_kind == SegmentKind::LongTerm;
    auto d = d_rows.row(row);
    (is_long ? grads.long_pos : grads.short_pos).row(seq.position_indices[size_t(row)]) += d;
    grads.segment_emb.row(is_long ? 0 : 1) += d;
    if (seq.fused_zeroed[size_t(row)]) continue;

    const Mat<S>& fuse = is_long ? params.long_fuse : params.short_fuse;
    Mat<S>& d_fuse = is_long ? grads.long_fuse : grads.short_fuse;
    auto mean = seq.word_means.row(w).head(fuse.rows());
    d_fuse.noalias() += mean.transpose() * d;
    RowVec<S> d_mean = d * fuse.transpose();
    auto& d_emb = is_long ? grads.long_attr_emb : grads.short_attr_emb;
    const S inv_count = S(1) / S(word.action_ids.size());
    for (const auto& ids : word.action_ids)
      for (size_t a = 0; a < ids.size(); ++a)
        d_emb[a].row(ids[a]) += inv_count * d_mean.segment(long(a) * attr_dim, attr_dim);
  }

  for (int p = 0; p < seq.n_profile; ++p) {
    int row = 1 + seq.t() + p;
    grads.profile_emb[size_t(p)].row(seq.profile_ids[size_t(p)]) += d_rows.row(row);
    grads.segment_emb.row(2) += d_rows.row(row);
  }
}

}  // namespace userbert
