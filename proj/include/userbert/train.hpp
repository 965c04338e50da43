#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <vector>

#include "userbert/datagen.hpp"
#include "userbert/model/adam.hpp"
#include "userbert/model/loss.hpp"

namespace userbert {

/// Line-delimited training log: `step<TAB>loss<TAB>component=value;...`
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::binary);
      if (!out_) throw IoError("cannot open train log: " + path);
    }
  }

  void record(int64_t step, double loss, const std::vector<std::pair<std::string, double>>& comps) {
    losses_.push_back(loss);
    if (out_.is_open()) {
      out_ << step << '\t' << loss << '\t';
      for (size_t i = 0; i < comps.size(); ++i) {
        if (i) out_ << ';';
        out_ << comps[i].first << '=' << comps[i].second;
      }
      out_ << '\n';
    }
  }

  const std::vector<double>& losses() const { return losses_; }

 private:
  std::ofstream out_;
  std::vector<double> losses_;
};

/// One sequence's contribution to the pretraining objective: assemble, mask,
/// forward, reconstruction loss, full backward into `grads` (when given).
/// The mask stream is keyed by (seed, step, slot) so masking reproduces
/// regardless of scheduling.
template <class S>
struct SequenceLoss {
  S loss = 0;
  int masked_positions = 0;
};

template <class S>
SequenceLoss<S> pretrain_sequence(const TokenizedUser& user, const Parameters<S>& params,
                                  CounterRng mask_rng, CounterRng dropout_rng,
                                  Parameters<S>* grads, bool train_mode, S grad_scale = S(1)) {
  InputSequence<S> seq = assemble_input_sequence(user, params);
  if (seq.t() < 1) throw ValidationError("pretrain_sequence: user has no behavioral tokens");
  MaskPlan plan =
      sample_mask_plan(seq, mask_rng, params.cfg.mask_select_p, params.cfg.mask_zero_p);
  auto [masked, targets] = apply_mask_and_targets(seq, plan, params);

  EncoderCache<S> cache;
  Mat<S> hidden =
      encoder_forward(masked.rows, params, train_mode, train_mode ? &dropout_rng : nullptr,
                      grads ? &cache : nullptr);

  SequenceLoss<S> result;
  result.masked_positions = int(targets.positions.size());
  if (!grads) {
    result.loss = masked_multilabel_loss<S>(hidden, targets, params, nullptr, nullptr);
    return result;
  }

  Parameters<S> local = Parameters<S>::like(params);
  Mat<S> d_hidden = Mat<S>::Zero(hidden.rows(), hidden.cols());
  result.loss = masked_multilabel_loss<S>(hidden, targets, params, &local, &d_hidden);
  Mat<S> d_input;
  encoder_backward(d_hidden, params, cache, local, d_input);
  input_backward(masked, d_input, params, local);

  auto dst = grads->tensors();
  auto src = local.tensors();
  for (size_t i = 0; i < dst.size(); ++i) *dst[i] += grad_scale * *src[i];
  return result;
}

/// One sequence's contribution to a fine-tuning objective (no masking).
template <class S>
S finetune_sequence(const TokenizedUser& user, int label, const Parameters<S>& params,
                    CounterRng dropout_rng, Parameters<S>* grads, bool train_mode,
                    S grad_scale = S(1)) {
  InputSequence<S> seq = assemble_input_sequence(user, params);
  EncoderCache<S> cache;
  Mat<S> hidden = encoder_forward(seq.rows, params, train_mode,
                                  train_mode ? &dropout_rng : nullptr, grads ? &cache : nullptr);
  if (!grads) return classification_loss<S>(hidden, label, params, nullptr, nullptr);

  Parameters<S> local = Parameters<S>::like(params);
  Mat<S> d_hidden = Mat<S>::Zero(hidden.rows(), hidden.cols());
  S loss = classification_loss<S>(hidden, label, params, &local, &d_hidden);
  Mat<S> d_input;
  encoder_backward(d_hidden, params, cache, local, d_input);
  input_backward(seq, d_input, params, local);

  auto dst = grads->tensors();
  auto src = local.tensors();
  for (size_t i = 0; i < dst.size(); ++i) *dst[i] += grad_scale * *src[i];
  return loss;
}

/// Class probabilities for one user (eval mode).
template <class S>
RowVec<S> predict_classes(const TokenizedUser& user, const Parameters<S>& params) {
  InputSequence<S> seq = assemble_input_sequence(user, params);
  Mat<S> hidden = encoder_forward(seq.rows, params, false, nullptr, (EncoderCache<S>*)nullptr);
  return classify_sequence(hidden, params);
}

struct PretrainOptions {
  int steps = 5000;
  int batch_size = 16;
  AdamConfig adam{};  // lr 1e-4
  uint64_t seed = 1;
  std::string log_path;
  int log_every = 1;
};

/// Pretraining loop: sample a mini-batch of users, mask, forward/backward,
/// Adam. Batch loss is the mean of per-sequence losses (each of which sums
/// over its masked tokens). Fully seeded and deterministic.
template <class S>
TrainLog pretrain(const std::vector<TokenizedUser>& users, Parameters<S>& params,
                  AdamState<S>& state, const PretrainOptions& opt) {
  if (users.empty()) throw ValidationError("pretrain: empty dataset");
  std::vector<const TokenizedUser*> usable;
  for (const auto& u : users)
    if (!u.long_words.empty() || !u.short_words.empty()) usable.push_back(&u);
  if (usable.empty()) throw ValidationError("pretrain: no user has behavioral tokens");

  TrainLog log(opt.log_path);
  CounterRng batch_rng(CounterRng::derive_key({opt.seed, 0x626174ULL}));
  Parameters<S> grads = Parameters<S>::like(params);
  const S scale = S(1) / S(opt.batch_size);

  for (int step = 1; step <= opt.steps; ++step) {
    grads.set_zero();
    double loss = 0;
    for (int b = 0; b < opt.batch_size; ++b) {
      const TokenizedUser& u = *usable[size_t(batch_rng.uniform_int(int(usable.size())))];
      CounterRng mask_rng(CounterRng::derive_key({opt.seed, 0x6D61736BULL, uint64_t(step),
                                                  uint64_t(b)}));
      CounterRng drop_rng(CounterRng::derive_key({opt.seed, 0x64726F70ULL, uint64_t(step),
                                                  uint64_t(b)}));
      loss += double(pretrain_sequence<S>(u, params, mask_rng, drop_rng, &grads, true, scale).loss);
    }
    loss /= opt.batch_size;
    adam_step(params, grads, state);
    if (step % opt.log_every == 0) log.record(step, loss, {});
  }
  return log;
}

struct FinetuneOptions {
  int epochs = 10;
  int batch_size = 128;
  AdamConfig adam{};  // lr 1e-4
  uint64_t seed = 1;
  bool from_scratch = false;
  std::string log_path;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double test_loss = 0;
  std::vector<double> test_scores;  // binary: P(class 1); multi-class unused
  std::vector<RowVec<float>> test_probs;
};

/// Fine-tuning loop over a labeled dataset: fresh zero-init classification
/// head on the first token, all parameters trained end-to-end, no masking.
/// Returns per-epoch train/test losses and test-set predictions (epoch 0 is
/// the untrained model).
template <class S>
std::vector<EpochMetrics> finetune(const std::vector<TokenizedUser>& users,
                                   const LabeledDataset& data, Parameters<S>& params,
                                   const FinetuneOptions& opt) {
  if (data.train.empty() || data.test.empty())
    throw ValidationError("finetune: empty train or test split");
  params.attach_classification_head(data.num_classes);

  // map user_id -> tokenized user
  auto find_user = [&](const std::string& uid) -> const TokenizedUser& {
    auto it = std::lower_bound(users.begin(), users.end(), uid,
                               [](const TokenizedUser& u, const std::string& id) {
                                 return u.user_id < id;
                               });
    if (it == users.end() || it->user_id != uid)
      throw ValidationError("finetune: label for unknown user " + uid);
    return *it;
  };

  AdamState<S> state(params, opt.adam);
  Parameters<S> grads = Parameters<S>::like(params);
  CounterRng shuffle_rng(CounterRng::derive_key({opt.seed, 0x73687566ULL}));

  auto evaluate = [&](EpochMetrics& m) {
    double loss = 0;
    for (const auto& ex : data.test) {
      const TokenizedUser& u = find_user(ex.user_id);
      InputSequence<S> seq = assemble_input_sequence(u, params);
      Mat<S> hidden =
          encoder_forward(seq.rows, params, false, nullptr, (EncoderCache<S>*)nullptr);
      loss += double(classification_loss<S>(hidden, ex.label, params, nullptr, nullptr));
      RowVec<S> probs = classify_sequence(hidden, params);
      m.test_probs.push_back(probs.template cast<float>());
      if (data.num_classes == 2) m.test_scores.push_back(double(probs(1)));
    }
    m.test_loss = loss / double(data.test.size());
  };

  std::vector<EpochMetrics> history;
  {
    EpochMetrics m;
    m.epoch = 0;
    evaluate(m);
    history.push_back(std::move(m));
  }

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  TrainLog log(opt.log_path);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    for (int i = int(order.size()) - 1; i > 0; --i)
      std::swap(order[size_t(i)], order[size_t(shuffle_rng.uniform_int(i + 1))]);
    double epoch_loss = 0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += size_t(opt.batch_size)) {
      size_t stop = std::min(order.size(), start + size_t(opt.batch_size));
      grads.set_zero();
      const S scale = S(1) / S(stop - start);
      double loss = 0;
      for (size_t i = start; i < stop; ++i) {
        const auto& ex = data.train[size_t(order[i])];
        CounterRng drop_rng(CounterRng::derive_key(
            {opt.seed, 0x66746472ULL, uint64_t(epoch), uint64_t(i)}));
        loss += double(finetune_sequence<S>(find_user(ex.user_id), ex.label, params, drop_rng,
                                            &grads, true, scale));
      }
      adam_step(params, grads, state);
      epoch_loss += loss / double(stop - start);
      ++batches;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_loss / std::max(1, batches);
    evaluate(m);
    log.record(epoch, m.train_loss, {{"test_loss", m.test_loss}});
    history.push_back(std::move(m));
  }
  return history;
}

}  // namespace userbert
