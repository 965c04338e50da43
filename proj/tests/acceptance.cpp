// Acceptance gate: one criterion per invocation (argv[1] = 1..10), each
// printing a single "criterion N: PASS/FAIL — details" line. Exit 0 iff the
// criterion passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "userbert/checkpoint.hpp"
#include "userbert/experiments.hpp"
#include "userbert/gradcheck.hpp"
#include "userbert/metrics.hpp"
#include "userbert/rng.hpp"
#include "userbert/tokenizer.hpp"
#include "userbert/train.hpp"

using namespace userbert;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [FAILED: " << what << "]";
    }
  }
};

// The small encoder configuration shared by the experiment criteria (5-8).
// The paper-scale L=4/H=128 model is the library default; the acceptance
// experiments use a 1-layer/64-wide variant so each criterion fits its CPU
// time budget while exercising the identical code paths.
ModelConfig experiment_model() {
  ModelConfig m;
  m.num_layers = 1;
  m.hidden = 64;
  m.heads = 2;
  m.ffn = 256;
  m.dropout = 0.0;
  return m;
}

ActionEvent make_event(SegmentKind seg, int64_t t, int n_attrs) {
  ActionEvent e;
  e.user_id = "u";
  e.timestamp = t;
  e.segment_kind = seg;
  for (int a = 0; a < n_attrs; ++a) e.attribute_values.push_back("v" + std::to_string(a));
  return e;
}

// ---- criterion 1: gradient correctness ----
Outcome criterion1() {
  Outcome out;
  auto t0 = Clock::now();
  GradCheckReport report = gradient_check(1e-4, 7);
  double elapsed = seconds_since(t0);
  out.require(report.passed(), "gradient check tolerance exceeded");
  out.require(report.families.size() >= 8, "fewer parameter families than expected");
  out.require(elapsed < 120.0, "runtime >= 2 min");
  double worst = 0;
  for (const auto& [name, fam] : report.families) worst = std::max(worst, fam.max_rel_err);
  out.detail << " max_rel_err=" << worst << " over " << report.total_checked << " scalars in "
             << report.families.size() << " families, " << elapsed << "s";
  return out;
}

// ---- criterion 2: loss closed forms at uniform initialization ----
Outcome criterion2() {
  Outcome out;
  ModelConfig cfg;
  cfg.num_layers = 1;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn = 16;
  cfg.dropout = 0.0;
  cfg.attr_dim = 3;
  ModelDims dims;
  dims.long_vocab = {2, 5};  // the toy vocab pair from the statement
  dims.short_vocab = {4};
  dims.profile_vocab = {3};
  Parameters<double> p(cfg, dims);  // zero-initialized: uniform output distributions

  MaskTarget targets;
  targets.positions.push_back({1, SegmentKind::LongTerm, {{1}, {2, 4}}});
  Mat<double> hidden = Mat<double>::Zero(4, 8);
  double loss = masked_multilabel_loss<double>(hidden, targets, p, nullptr, nullptr);
  double want = std::log(2.0) + std::log(5.0);
  out.require(std::abs(loss - want) < 1e-3, "toy {2,5} loss differs from ln2+ln5");
  out.require(std::abs(want - 2.302585) < 1e-6, "ln2+ln5 constant check");
  out.detail << " masked long word over vocabs {2,5}: loss=" << loss << " want=" << want;

  // same closed form through the full pipeline on a generated dataset
  GeneratorConfig gen;
  gen.num_users = 5;
  gen.long_term_days = 10;
  gen.short_term_days = 3;
  ExperimentPipeline pipe = build_pipeline(gen);
  ModelConfig m = experiment_model();
  Parameters<float> zero(m, pipe.dims);  // zero weights
  double lnv_long = 0, lnv_short = 0;
  for (int v : pipe.dims.long_vocab) lnv_long += std::log(double(v));
  for (int v : pipe.dims.short_vocab) lnv_short += std::log(double(v));
  for (const auto& u : pipe.tokens) {
    if (u.long_words.empty() || u.short_words.empty()) continue;
    InputSequence<float> seq = assemble_input_sequence(u, zero);
    MaskTarget t;
    t.positions.push_back({1, SegmentKind::LongTerm,
                           [&] {
                             std::vector<std::vector<int>> ids;
                             for (size_t a = 0; a < pipe.dims.long_vocab.size(); ++a)
                               ids.push_back({u.long_words[0].action_ids[0][a]});
                             return ids;
                           }()});
    Mat<float> h = encoder_forward<float>(seq.rows, zero, false, nullptr, nullptr);
    double l = double(masked_multilabel_loss<float>(h, t, zero, nullptr, nullptr));
    out.require(std::abs(l - lnv_long) < 1e-3, "pipeline masked long word != sum ln vocab");
    out.detail << "; pipeline: loss=" << l << " sum_ln_vocab=" << lnv_long;
    break;
  }
  return out;
}

// ---- criterion 3: masking statistics ----
Outcome criterion3() {
  Outcome out;
  GeneratorConfig gen;
  gen.num_users = 600;
  ExperimentPipeline pipe = build_pipeline(gen);
  ModelConfig m = experiment_model();
  Parameters<float> params(m, pipe.dims);
  params.init(CounterRng(CounterRng::derive_key({11, 0})));

  long positions = 0, selected = 0, zeroed = 0;
  CounterRng rng(CounterRng::derive_key({11, 1}));
  int pass_num = 0;
  while (positions < 100000) {
    ++pass_num;
    for (const auto& u : pipe.tokens) {
      if (u.long_words.empty() && u.short_words.empty()) continue;
      InputSequence<float> seq = assemble_input_sequence(u, params);
      MaskPlan plan = sample_mask_plan(seq, rng);
      positions += seq.t();
      for (const auto& item : plan.items) {
        ++selected;
        if (item.zeroed) ++zeroed;
        // CLS is row 0; profile rows start after the behavioral block
        out.require(item.pos >= 1 && item.pos <= seq.t(),
                    "mask plan touched CLS or a profile position");
      }
      if (positions >= 100000 && pass_num > 1) break;
    }
  }
  double select_rate = double(selected) / double(positions);
  double zero_rate = double(zeroed) / double(selected);
  out.require(positions >= 100000, "fewer than 100k positions sampled");
  out.require(std::abs(select_rate - 0.15) <= 0.005, "selection rate outside 0.15 +/- 0.005");
  out.require(std::abs(zero_rate - 0.80) <= 0.01, "zeroed-given-selected outside 0.80 +/- 0.01");
  out.detail << " positions=" << positions << " select_rate=" << select_rate
             << " zeroed_given_selected=" << zero_rate << " cls_profile_masked=0";
  return out;
}

// ---- criterion 4: tokenizer oracles ----
Outcome criterion4() {
  Outcome out;
  CounterRng rng(CounterRng::derive_key({44, 0}));
  int64_t start = align_to_day_boundary(1600000000, 0);
  int long_attrs = 2, short_attrs = 2;

  // 10k fuzzed streams, alternating between the two segmenters
  long streams = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    bool short_term = (trial % 2) == 1;
    std::vector<ActionEvent> events;
    int64_t t = start + rng.uniform_int(86400);
    int n = 1 + rng.uniform_int(40);
    for (int i = 0; i < n; ++i) {
      events.push_back(make_event(short_term ? SegmentKind::ShortTerm : SegmentKind::LongTerm, t,
                                  short_term ? short_attrs : long_attrs));
      t += short_term ? rng.uniform_int(4000) : rng.uniform_int(2 * 86400);
    }
    auto words = short_term ? segment_short_term(events, start)
                            : segment_long_term(events, start, 0);
    size_t count = 0;
    bool ok = true;
    for (const auto& w : words) {
      if (w.actions.empty()) ok = false;
      for (const auto& a : w.actions) {
        if (count >= events.size() || a.timestamp != events[count].timestamp) ok = false;
        ++count;
      }
    }
    if (!ok || count != events.size()) {
      out.require(false, "partition violated on fuzz trial " + std::to_string(trial));
      break;
    }
    ++streams;
  }
  out.detail << " fuzzed_streams=" << streams;

  // planted session counts recovered exactly
  GeneratorConfig gen;
  gen.num_users = 300;
  GeneratedDataset data = generate_dataset(gen);
  bool sessions_ok = true;
  for (size_t u = 0; u < data.users.size(); ++u) {
    auto words = segment_short_term(data.users[u].short_term_events, gen.short_window_start());
    if (int(words.size()) != data.session_counts[u]) sessions_ok = false;
  }
  out.require(sessions_ok, "short-term segment count != planted session count");
  out.detail << " session_counts_exact=" << (sessions_ok ? "yes" : "no");

  // 4 AM boundary: 03:59 stays in the previous day window, 04:00 opens a new one
  int64_t next_4am = start + 86400;
  std::vector<ActionEvent> pair = {
      make_event(SegmentKind::LongTerm, next_4am - 60, long_attrs),  // 03:59
      make_event(SegmentKind::LongTerm, next_4am, long_attrs),       // 04:00
  };
  auto words = segment_long_term(pair, start, 0);
  out.require(words.size() == 2, "03:59/04:00 pair did not split into two day words");
  if (words.size() == 2) {
    out.require(words[0].position_index == 0 && words[1].position_index == 1,
                "03:59/04:00 day ordinals wrong");
  }
  std::vector<ActionEvent> same = {
      make_event(SegmentKind::LongTerm, next_4am - 60, long_attrs),
      make_event(SegmentKind::LongTerm, next_4am - 1, long_attrs),
  };
  out.require(segment_long_term(same, start, 0).size() == 1,
              "two pre-04:00 events split incorrectly");
  out.detail << " boundary_03:59/04:00=split";
  return out;
}

// ---- criterion 5: pretraining learns ----
Outcome criterion5() {
  Outcome out;
  auto t0 = Clock::now();
  GeneratorConfig gen;  // the default synthetic dataset, 2k users
  ExperimentPipeline pipe = build_pipeline(gen);
  ModelConfig m = experiment_model();
  int genre_idx = gen.schemas.long_term.index_of("genre");

  for (uint64_t seed : {1, 2, 3}) {
    PretrainOptions opt;
    opt.steps = 500;
    opt.batch_size = 16;
    opt.seed = seed;
    opt.adam.lr = 1e-2;

    Parameters<float> init(m, pipe.dims);
    init.init(CounterRng(CounterRng::derive_key({seed, 0x696E6974ULL})));
    double initial = pretrain_objective(pipe, init, seed);

    PretrainRun run = run_pretraining(pipe, m, opt);
    double tail = smoothed_tail(run.losses, 25);
    double drop = 1.0 - tail / initial;
    GenreReconstruction rec = masked_genre_accuracy(pipe, run.params, genre_idx, 300, seed);

    out.require(drop >= 0.20, "seed " + std::to_string(seed) + ": loss drop < 20%");
    out.require(rec.model_accuracy > rec.majority_accuracy,
                "seed " + std::to_string(seed) + ": genre top-1 <= majority oracle");
    out.detail << " seed" << seed << "{drop=" << 100 * drop << "% top1=" << rec.model_accuracy
               << " majority=" << rec.majority_accuracy << "}";
  }
  double elapsed = seconds_since(t0);
  out.require(elapsed < 600.0, "runtime >= 10 min");
  out.detail << " time=" << elapsed << "s";
  return out;
}

// ---- criterion 6: pretraining ablation ----
Outcome criterion6() {
  Outcome out;
  auto t0 = Clock::now();
  GeneratorConfig gen;
  ExperimentPipeline pipe = build_pipeline(gen);
  // A wider single-layer model than the shared experiment config: the extra
  // width is where gentle pretraining stores reusable genre features, which is
  // the effect this criterion measures.
  ModelConfig m = experiment_model();
  m.hidden = 128;
  m.heads = 4;
  m.ffn = 512;

  double diff_sum = 0;
  for (uint64_t seed : {1, 2, 3}) {
    PretrainOptions popt;
    popt.steps = 2000;
    popt.batch_size = 16;
    popt.seed = seed;
    popt.adam.lr = 2e-3;
    PretrainRun run = run_pretraining(pipe, m, popt);

    TaskSpec spec;
    spec.kind = TaskKind::BinaryTargeting;
    spec.seed = seed;
    LabeledDataset labels = limit_train_labels(derive_task_labels(pipe.data, spec), 200);

    FinetuneOptions fopt;
    fopt.epochs = 15;
    fopt.batch_size = 16;
    fopt.seed = seed;
    fopt.adam.lr = 3e-4;
    TargetingAblation ab = targeting_ablation(pipe, run.params, labels, fopt);
    diff_sum += ab.pretrained_auc - ab.scratch_auc;

    const auto& hist = ab.scratch_history;
    double mid_gap = hist[hist.size() / 2].test_loss - hist[hist.size() / 2].train_loss;
    double final_gap = hist.back().test_loss - hist.back().train_loss;
    out.require(final_gap > 0 && final_gap > mid_gap,
                "seed " + std::to_string(seed) + ": scratch train/test gap not growing");
    out.detail << " seed" << seed << "{pre=" << ab.pretrained_auc << " scratch=" << ab.scratch_auc
               << " gap_mid=" << mid_gap << " gap_final=" << final_gap << "}";
  }
  double mean_diff = diff_sum / 3.0;
  out.require(mean_diff >= 0.03, "mean AUC advantage < 0.03");
  double elapsed = seconds_since(t0);
  out.require(elapsed < 1800.0, "runtime >= 30 min");
  out.detail << " mean_auc_diff=" << mean_diff << " time=" << elapsed << "s";
  return out;
}

// shared by criteria 7 and 8: pretrain + next-genre fine-tune for one mode
NextGenreEval run_next_genre(const GeneratorConfig& gen, TokenizeMode mode, uint64_t seed,
                             int pre_steps, const ModelConfig& m) {
  ExperimentPipeline pipe = build_pipeline(gen, mode);
  PretrainOptions popt;
  popt.steps = pre_steps;
  popt.batch_size = 16;
  popt.seed = seed;
  popt.adam.lr = 2e-3;
  PretrainRun run = run_pretraining(pipe, m, popt);
  TaskSpec spec;
  spec.kind = TaskKind::NextGenre;
  spec.seed = seed;
  LabeledDataset labels = derive_task_labels(pipe.data, spec);
  FinetuneOptions fopt;
  fopt.epochs = 5;
  fopt.batch_size = 16;
  fopt.seed = seed;
  fopt.adam.lr = 1e-3;
  return next_genre_eval(pipe, run.params, labels, fopt);
}

// ---- criterion 7: discretization ablation ----
Outcome criterion7() {
  Outcome out;
  GeneratorConfig gen;
  // A denser stream plus a tight word budget: per-action sequences blow far
  // past the budget and lose most of their history to truncation, while each
  // discretized day word still packs several actions — the regime the
  // discretization is for.
  gen.long_actions_per_day = 2.0;
  ModelConfig m = experiment_model();
  m.max_long_words = 12;
  double gap_sum = 0;
  for (uint64_t seed : {1, 2, 3}) {
    NextGenreEval disc = run_next_genre(gen, TokenizeMode::Discretized, seed, 1000, m);
    NextGenreEval pa = run_next_genre(gen, TokenizeMode::PerAction, seed, 1000, m);
    double gap = disc.model_map10 - pa.model_map10;
    gap_sum += gap;
    out.detail << " seed" << seed << "{discretized=" << disc.model_map10
               << " per_action=" << pa.model_map10 << " gap=" << gap << "}";
  }
  double mean_gap = gap_sum / 3.0;
  out.require(mean_gap >= 0.0, "mean discretized mAP@10 below per-action");
  out.detail << " mean_gap=" << mean_gap;
  return out;
}

// ---- criterion 8: baseline ordering ----
Outcome criterion8() {
  Outcome out;
  GeneratorConfig gen;  // heterogeneous users: planted per-user preferences
  uint64_t seed = 1;
  NextGenreEval ev = run_next_genre(gen, TokenizeMode::Discretized, seed, 1000, experiment_model());
  out.require(ev.model_map10 > ev.popularity_map10, "model mAP@10 <= popularity baseline");
  out.require(ev.popularity_map10 > 0.0, "popularity baseline mAP@10 == 0");
  out.detail << " model_map10=" << ev.model_map10 << " popularity_map10=" << ev.popularity_map10;
  return out;
}

// ---- criterion 9: metric oracles ----
double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0;
  long pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / double(pairs);
}

double accuracy_oracle(const std::vector<double>& scores, const std::vector<int>& labels,
                       double threshold) {
  long hits = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    if ((scores[i] > threshold ? 1 : 0) == labels[i]) ++hits;
  return double(hits) / double(scores.size());
}

double map_oracle(const std::vector<RankingResult>& results, int k) {
  double total = 0;
  int used = 0;
  for (const auto& r : results) {
    if (r.truth.empty()) continue;
    std::set<int> truth(r.truth.begin(), r.truth.end());
    double ap = 0;
    int hits = 0;
    for (int rank = 0; rank < std::min<int>(k, int(r.ranked_ids.size())); ++rank) {
      if (truth.count(r.ranked_ids[size_t(rank)])) {
        ++hits;
        ap += double(hits) / double(rank + 1);
      }
    }
    total += ap / double(std::min<size_t>(size_t(k), truth.size()));
    ++used;
  }
  return used ? total / used : 0.0;
}

Outcome criterion9() {
  Outcome out;
  CounterRng rng(CounterRng::derive_key({99, 9}));
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // roc_auc + accuracy instance with deliberate ties
    int n = 2 + rng.uniform_int(40);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
      scores.push_back(rng.uniform_int(8) / 4.0);
      labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    labels[0] = 0;
    labels[size_t(n - 1)] = 1;
    double d1 = std::abs(roc_auc(scores, labels) - auc_oracle(scores, labels));
    double thr = rng.uniform_int(5) / 4.0;
    double d2 = std::abs(accuracy(scores, labels, thr) - accuracy_oracle(scores, labels, thr));

    // map_at_k instance
    int users = 1 + rng.uniform_int(6);
    int ids = 5 + rng.uniform_int(20);
    std::vector<RankingResult> results;
    for (int u = 0; u < users; ++u) {
      std::vector<double> s;
      for (int i = 0; i < ids; ++i) s.push_back(rng.uniform_int(6) / 3.0);
      std::vector<int> truth;
      for (int i = 0; i < ids; ++i)
        if (rng.bernoulli(0.2)) truth.push_back(i);
      if (u == 0 && truth.empty()) truth.push_back(rng.uniform_int(ids));
      results.push_back({rank_by_score(s), truth});
    }
    int k = 1 + rng.uniform_int(12);
    double d3 = std::abs(map_at_k(results, k) - map_oracle(results, k));

    worst = std::max({worst, d1, d2, d3});
    if (d1 > 1e-12 || d2 > 1e-12 || d3 > 1e-12) {
      out.require(false, "oracle mismatch on trial " + std::to_string(trial));
      break;
    }
  }
  out.detail << " 1000 instances x {roc_auc, accuracy, map_at_k}, worst_abs_diff=" << worst;
  return out;
}

// ---- criterion 10: determinism & persistence ----
Outcome criterion10() {
  Outcome out;
  GeneratorConfig gen;
  gen.num_users = 80;
  gen.long_term_days = 15;
  gen.short_term_days = 4;
  ExperimentPipeline pipe = build_pipeline(gen);
  ModelConfig m = experiment_model();

  PretrainOptions opt;
  opt.steps = 40;
  opt.batch_size = 8;
  opt.seed = 21;
  opt.adam.lr = 1e-3;

  // identical seeds -> identical loss trajectories (bitwise)
  PretrainRun a = run_pretraining(pipe, m, opt);
  PretrainRun b = run_pretraining(pipe, m, opt);
  out.require(a.losses == b.losses, "loss trajectories differ across identical runs");

  // identical metric reports
  TaskSpec spec;
  spec.kind = TaskKind::BinaryTargeting;
  spec.seed = 21;
  LabeledDataset labels = derive_task_labels(pipe.data, spec);
  FinetuneOptions fopt;
  fopt.epochs = 2;
  fopt.batch_size = 16;
  fopt.seed = 21;
  fopt.adam.lr = 1e-3;
  auto run_metrics = [&](const Parameters<float>& params) {
    Parameters<float> ft = params;
    auto hist = finetune(pipe.tokens, labels, ft, fopt);
    return final_auc(hist, labels.test);
  };
  double auc1 = run_metrics(a.params);
  double auc2 = run_metrics(b.params);
  out.require(auc1 == auc2, "metric reports differ across identical runs");
  out.detail << " losses_bitwise_equal=yes auc=" << auc1;

  // checkpoint roundtrip preserves forward outputs bitwise
  std::string path = "acceptance_roundtrip.ckpt";
  CheckpointMeta meta;
  meta.vocab_digest = pipe.registry->digest();
  meta.step = opt.steps;
  AdamState<float> state(a.params, opt.adam);
  // rebuild optimizer state by replaying one extra step so it is non-trivial
  {
    Parameters<float> grads = Parameters<float>::like(a.params);
    CounterRng mask_rng(CounterRng::derive_key({77, 1}));
    CounterRng drop_rng(CounterRng::derive_key({77, 2}));
    pretrain_sequence<float>(pipe.tokens.front(), a.params, mask_rng, drop_rng, &grads, true);
    adam_step(a.params, grads, state);
  }
  save_checkpoint(path, a.params, meta, &state);
  LoadedCheckpoint loaded = load_checkpoint(path, pipe.registry->digest());
  std::remove(path.c_str());

  const TokenizedUser& probe = pipe.tokens.front();
  InputSequence<float> s1 = assemble_input_sequence(probe, a.params);
  InputSequence<float> s2 = assemble_input_sequence(probe, loaded.params);
  Mat<float> h1 = encoder_forward<float>(s1.rows, a.params, false, nullptr, nullptr);
  Mat<float> h2 = encoder_forward<float>(s2.rows, loaded.params, false, nullptr, nullptr);
  out.require(h1.rows() == h2.rows() && h1.cols() == h2.cols() && h1 == h2,
              "forward outputs differ after checkpoint roundtrip");

  // the next optimizer step matches exactly
  out.require(loaded.optimizer.has_value(), "optimizer state missing from checkpoint");
  if (loaded.optimizer) {
    Parameters<float> grads = Parameters<float>::like(a.params);
    CounterRng mask_rng(CounterRng::derive_key({78, 1}));
    CounterRng drop_rng(CounterRng::derive_key({78, 2}));
    pretrain_sequence<float>(probe, a.params, mask_rng, drop_rng, &grads, true);

    Parameters<float> p1 = a.params;
    Parameters<float> p2 = loaded.params;
    AdamState<float> s_orig = state;  // copy to keep `state` untouched
    adam_step(p1, grads, s_orig);
    adam_step(p2, grads, *loaded.optimizer);
    auto t1 = p1.tensors();
    auto t2 = p2.tensors();
    bool same = t1.size() == t2.size();
    for (size_t i = 0; same && i < t1.size(); ++i) same = (*t1[i] == *t2[i]);
    out.require(same, "next optimizer step diverges after checkpoint roundtrip");
    out.detail << " forward_bitwise=yes next_adam_step_exact=" << (same ? "yes" : "no");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1..10>\n";
    return 2;
  }
  int n = std::atoi(argv[1]);
  Outcome (*criteria[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                             criterion6, criterion7, criterion8, criterion9, criterion10};
  if (n < 1 || n > 10) {
    std::cerr << "criterion out of range: " << n << "\n";
    return 2;
  }
  Outcome out = criteria[n - 1]();
  std::cout << "criterion " << n << ": " << (out.pass ? "PASS" : "FAIL") << " —"
            << out.detail.str() << "\n";
  return out.pass ? 0 : 1;
}
