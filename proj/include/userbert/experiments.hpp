#pragma once

#include <map>
#include <memory>

#include "userbert/checkpoint.hpp"
#include "userbert/datagen.hpp"
#include "userbert/metrics.hpp"
#include "userbert/tokenizer.hpp"
#include "userbert/train.hpp"

namespace userbert {

/// Generated data + vocabulary + tokenized users, the common front half of
/// every experiment.
struct ExperimentPipeline {
  GeneratedDataset data;
  std::unique_ptr<VocabularyRegistry> registry;
  std::vector<TokenizedUser> tokens;
  ModelDims dims;
};

inline ExperimentPipeline build_pipeline(const GeneratorConfig& gen_cfg,
                                         TokenizeMode mode = TokenizeMode::Discretized) {
  ExperimentPipeline pipe;
  pipe.data = generate_dataset(gen_cfg);
  pipe.registry = std::make_unique<VocabularyRegistry>(gen_cfg.schemas);
  TokenizerConfig tk;
  tk.long_window_start = gen_cfg.long_window_start();
  tk.short_window_start = gen_cfg.short_window_start();
  tk.frozen = false;
  pipe.tokens = tokenize_dataset(pipe.data.users, *pipe.registry, mode, tk);
  pipe.dims = ModelDims::from_registry(*pipe.registry);
  return pipe;
}

struct PretrainRun {
  Parameters<float> params;
  std::vector<double> losses;
};

inline PretrainRun run_pretraining(const ExperimentPipeline& pipe, const ModelConfig& model_cfg,
                                   const PretrainOptions& opt) {
  PretrainRun run;
  run.params = Parameters<float>(model_cfg, pipe.dims);
  run.params.init(CounterRng(CounterRng::derive_key({opt.seed, 0x696E6974ULL})));
  AdamState<float> state(run.params, opt.adam);
  run.losses = pretrain(pipe.tokens, run.params, state, opt).losses();
  return run;
}

/// Pretraining objective of an untrained (or any) model: forward-only mean
/// per-sequence loss over up to `max_users` users, with training-style
/// masking. This is the "initial value" a training run is compared against.
inline double pretrain_objective(const ExperimentPipeline& pipe, const Parameters<float>& params,
                                 uint64_t seed, int max_users = 256) {
  double total = 0;
  int used = 0;
  for (const auto& u : pipe.tokens) {
    if (u.long_words.empty() && u.short_words.empty()) continue;
    if (used >= max_users) break;
    CounterRng mask_rng(CounterRng::derive_key({seed, 0x6576616CULL, uint64_t(used)}));
    CounterRng drop_rng(mask_rng.fork(1));
    total += double(
        pretrain_sequence<float>(u, params, mask_rng, drop_rng, nullptr, false).loss);
    ++used;
  }
  if (used == 0) throw ValidationError("pretrain_objective: no usable users");
  return total / used;
}

/// Mean of the first/last `window` entries; the smoothing used when judging
/// whether pretraining moved the loss.
inline double smoothed_head(const std::vector<double>& xs, size_t window) {
  window = std::min(window, xs.size());
  double s = 0;
  for (size_t i = 0; i < window; ++i) s += xs[i];
  return s / double(window);
}

inline double smoothed_tail(const std::vector<double>& xs, size_t window) {
  window = std::min(window, xs.size());
  double s = 0;
  for (size_t i = 0; i < window; ++i) s += xs[xs.size() - 1 - i];
  return s / double(window);
}

/// Masked-genre top-1 reconstruction vs the majority-class oracle. For a
/// sample of users, masks 15% of long-term words (training-style), predicts
/// the genre attribute at each masked position and scores a hit when the
/// top-1 id is among the word's true genre ids. The oracle always answers
/// with the globally most frequent genre id.
struct GenreReconstruction {
  double model_accuracy = 0;
  double majority_accuracy = 0;
  int positions = 0;
};

inline GenreReconstruction masked_genre_accuracy(const ExperimentPipeline& pipe,
                                                 const Parameters<float>& params,
                                                 int genre_attr_index, int max_users,
                                                 uint64_t seed) {
  // global majority genre id over all long-term words
  std::map<int, long> counts;
  for (const auto& u : pipe.tokens)
    for (const auto& w : u.long_words)
      for (const auto& ids : w.action_ids) ++counts[ids[size_t(genre_attr_index)]];
  int majority_id = 0;
  long best = -1;
  for (const auto& [id, c] : counts)
    if (c > best) { best = c; majority_id = id; }

  GenreReconstruction out;
  long model_hits = 0, majority_hits = 0;
  int used_users = 0;
  for (const auto& u : pipe.tokens) {
    if (u.long_words.empty()) continue;
    if (used_users >= max_users) break;
    ++used_users;
    InputSequence<float> seq = assemble_input_sequence(u, params);
    CounterRng rng(CounterRng::derive_key({seed, 0x67656E72ULL, uint64_t(used_users)}));
    MaskPlan plan;
    for (int w = 0; w < seq.n_long; ++w)
      if (rng.bernoulli(0.15)) plan.items.push_back({1 + w, true});
    if (plan.items.empty()) plan.items.push_back({1 + rng.uniform_int(seq.n_long), true});
    auto [masked, targets] = apply_mask_and_targets(seq, plan, params);
    Mat<float> hidden =
        encoder_forward(masked.rows, params, false, nullptr, (EncoderCache<float>*)nullptr);
    auto preds = predict_masked_attributes(hidden, targets, params);
    for (size_t i = 0; i < targets.positions.size(); ++i) {
      const auto& truth = targets.positions[i].attr_value_ids[size_t(genre_attr_index)];
      Eigen::Index top1;
      preds[i][size_t(genre_attr_index)].maxCoeff(&top1);
      ++out.positions;
      if (std::binary_search(truth.begin(), truth.end(), int(top1))) ++model_hits;
      if (std::binary_search(truth.begin(), truth.end(), majority_id)) ++majority_hits;
    }
  }
  if (out.positions > 0) {
    out.model_accuracy = double(model_hits) / out.positions;
    out.majority_accuracy = double(majority_hits) / out.positions;
  }
  return out;
}

/// Keeps only the first `n` training examples (the split is already a
/// deterministic shuffle, so this is a uniform subsample).
inline LabeledDataset limit_train_labels(LabeledDataset labels, size_t n) {
  if (labels.train.size() > n) labels.train.resize(n);
  return labels;
}

inline double final_auc(const std::vector<EpochMetrics>& history,
                        const std::vector<LabeledExample>& test) {
  const EpochMetrics& last = history.back();
  std::vector<int> y;
  for (const auto& ex : test) y.push_back(ex.label);
  return roc_auc(last.test_scores, y);
}

/// Pretrained-vs-scratch fine-tuning on the binary targeting task.
struct TargetingAblation {
  double pretrained_auc = 0;
  double scratch_auc = 0;
  std::vector<EpochMetrics> pretrained_history;
  std::vector<EpochMetrics> scratch_history;
};

inline TargetingAblation targeting_ablation(const ExperimentPipeline& pipe,
                                            const Parameters<float>& pretrained,
                                            const LabeledDataset& labels,
                                            const FinetuneOptions& opt) {
  TargetingAblation out;
  {
    Parameters<float> params = pretrained;
    out.pretrained_history = finetune(pipe.tokens, labels, params, opt);
  }
  {
    Parameters<float> params(pretrained.cfg, pretrained.dims);
    params.init(CounterRng(CounterRng::derive_key({opt.seed, 0x73637261ULL})));
    FinetuneOptions scratch_opt = opt;
    scratch_opt.from_scratch = true;
    out.scratch_history = finetune(pipe.tokens, labels, params, scratch_opt);
  }
  out.pretrained_auc = final_auc(out.pretrained_history, labels.test);
  out.scratch_auc = final_auc(out.scratch_history, labels.test);
  return out;
}

/// Genre category index of a raw long-term genre value ("genre_NN" -> NN).
inline int genre_category(const std::string& raw) {
  auto us = raw.rfind('_');
  if (us == std::string::npos) throw ValidationError("unexpected genre value: " + raw);
  return std::stoi(raw.substr(us + 1));
}

/// Next-genre ranking evaluation: fine-tunes a multi-class head on the
/// next-genre labels, ranks categories by predicted probability, and compares
/// mAP@10 against the global popularity baseline built from the training
/// users' observed genres.
struct NextGenreEval {
  double model_map10 = 0;
  double popularity_map10 = 0;
};

inline NextGenreEval next_genre_eval(const ExperimentPipeline& pipe,
                                     const Parameters<float>& pretrained,
                                     const LabeledDataset& labels, const FinetuneOptions& opt) {
  Parameters<float> params = pretrained;
  auto history = finetune(pipe.tokens, labels, params, opt);
  const EpochMetrics& last = history.back();

  NextGenreEval out;
  std::vector<RankingResult> model_results, pop_results;
  int genre_idx = pipe.data.config.schemas.long_term.index_of("genre");

  // popularity: every training user's observed genre categories count once
  // per event
  std::vector<std::vector<int>> train_purchases;
  for (const auto& ex : labels.train) {
    std::vector<int> cats;
    for (const auto& e : pipe.data.users[size_t(ex.user_index)].long_term_events)
      cats.push_back(genre_category(e.attribute_values[size_t(genre_idx)]));
    train_purchases.push_back(std::move(cats));
  }
  std::vector<int> pop_rank = popularity_ranking(train_purchases, labels.num_classes);

  for (size_t i = 0; i < labels.test.size(); ++i) {
    const auto& ex = labels.test[i];
    std::vector<double> scores(size_t(labels.num_classes));
    for (int c = 0; c < labels.num_classes; ++c)
      scores[size_t(c)] = double(last.test_probs[i](c));
    model_results.push_back({rank_by_score(scores), ex.truth_set});
    pop_results.push_back({pop_rank, ex.truth_set});
  }
  out.model_map10 = map_at_k(model_results, 10);
  out.popularity_map10 = map_at_k(pop_results, 10);
  return out;
}

}  // namespace userbert
