// userbert command-line surface.
//
// Subcommands: gen-data, build-vocab, tokenize, pretrain, finetune, evaluate,
// grad-check, ablate. All accept --config <path>, --seed <n>, --out <dir> and
// trailing key=value overrides. Exit codes: 0 success, 1 validation error,
// 2 I/O or runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "userbert/checkpoint.hpp"
#include "userbert/config.hpp"
#include "userbert/datagen.hpp"
#include "userbert/event_io.hpp"
#include "userbert/experiments.hpp"
#include "userbert/gradcheck.hpp"
#include "userbert/metrics.hpp"
#include "userbert/tokenizer.hpp"
#include "userbert/train.hpp"
#include "userbert/vocab.hpp"

namespace fs = std::filesystem;
using namespace userbert;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir = "out";
  std::string data_dir;  // defaults to out_dir
  std::vector<std::string> overrides;

  std::string data() const { return data_dir.empty() ? out_dir : data_dir; }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value config file");
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--data", args.data_dir, "input directory (defaults to --out)");
  cmd->add_option("overrides", args.overrides, "key=value config overrides");
}

/// Loads --config (if given), layers the dataset config emitted by gen-data
/// under it (if present in the data directory), then applies CLI overrides.
Config load_config(const CommonArgs& args, bool want_dataset_cfg) {
  Config cfg;
  if (want_dataset_cfg) {
    fs::path ds = fs::path(args.data()) / "dataset.cfg";
    if (fs::exists(ds)) cfg = Config::from_file(ds.string());
  }
  if (!args.config_path.empty()) {
    // the user config wins over the dataset echo: later lines override
    Config user = Config::from_file(args.config_path);
    cfg = Config::from_string(cfg.to_string() + "\n" + user.to_string());
  }
  cfg.apply_overrides(args.overrides);
  return cfg;
}

GeneratorConfig generator_from(const Config& c, std::optional<uint64_t> seed) {
  GeneratorConfig g;
  g.num_users = int(c.get_int("gen.num_users", g.num_users));
  g.long_term_days = int(c.get_int("gen.long_term_days", g.long_term_days));
  g.short_term_days = int(c.get_int("gen.short_term_days", g.short_term_days));
  g.latent_dim = int(c.get_int("gen.latent_dim", g.latent_dim));
  g.long_actions_per_day = c.get_double("gen.long_actions_per_day", g.long_actions_per_day);
  g.sessions_per_day = c.get_double("gen.sessions_per_day", g.sessions_per_day);
  g.mean_session_length = c.get_double("gen.mean_session_length", g.mean_session_length);
  g.popularity_scale = c.get_double("gen.popularity_scale", g.popularity_scale);
  g.preference_sharpness = c.get_double("gen.preference_sharpness", g.preference_sharpness);
  g.label_noise = c.get_double("gen.label_noise", g.label_noise);
  g.seed = uint64_t(c.get_int("gen.seed", int64_t(g.seed)));
  g.start_timestamp = c.get_int("gen.start_timestamp", g.start_timestamp);
  if (seed) g.seed = *seed;
  g.validate();
  return g;
}

void store_generator(const GeneratorConfig& g, Config& c) {
  c.set("gen.num_users", std::to_string(g.num_users));
  c.set("gen.long_term_days", std::to_string(g.long_term_days));
  c.set("gen.short_term_days", std::to_string(g.short_term_days));
  c.set("gen.latent_dim", std::to_string(g.latent_dim));
  c.set("gen.long_actions_per_day", std::to_string(g.long_actions_per_day));
  c.set("gen.sessions_per_day", std::to_string(g.sessions_per_day));
  c.set("gen.mean_session_length", std::to_string(g.mean_session_length));
  c.set("gen.popularity_scale", std::to_string(g.popularity_scale));
  c.set("gen.preference_sharpness", std::to_string(g.preference_sharpness));
  c.set("gen.label_noise", std::to_string(g.label_noise));
  c.set("gen.seed", std::to_string(g.seed));
  c.set("gen.start_timestamp", std::to_string(g.start_timestamp));
  c.set("tokenizer.long_window_start", std::to_string(g.long_window_start()));
  c.set("tokenizer.short_window_start", std::to_string(g.short_window_start()));
}

TokenizerConfig tokenizer_from(const Config& c) {
  TokenizerConfig t;
  t.long_window_start = c.get_int("tokenizer.long_window_start", 0);
  t.short_window_start = c.get_int("tokenizer.short_window_start", 0);
  t.tz_offset_seconds = int(c.get_int("tokenizer.tz_offset_seconds", 0));
  t.frozen = c.get_bool("tokenizer.frozen", true);
  return t;
}

TokenizeMode mode_from(const Config& c) {
  std::string m = c.get_string("tokenizer.mode", "discretized");
  if (m == "discretized") return TokenizeMode::Discretized;
  if (m == "per_action") return TokenizeMode::PerAction;
  throw ValidationError("tokenizer.mode must be 'discretized' or 'per_action', got: " + m);
}

/// FNV-1a over a file's bytes; used for the manifest determinism digests.
uint64_t file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open for digest: " + p.string());
  uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i)
      h = (h ^ uint8_t(buf[i])) * 1099511628211ULL;
  }
  return h;
}

std::vector<ActionEvent> all_events(const std::vector<UserRecord>& users) {
  std::vector<ActionEvent> out;
  for (const auto& u : users) {
    out.insert(out.end(), u.long_term_events.begin(), u.long_term_events.end());
    out.insert(out.end(), u.short_term_events.begin(), u.short_term_events.end());
  }
  return out;
}

std::string split_task_name(const std::string& task, bool train) {
  return task + (train ? "/train" : "/test");
}

std::vector<LabelLine> label_lines(const LabeledDataset& d) {
  std::vector<LabelLine> lines;
  auto emit = [&](const std::vector<LabeledExample>& exs, bool train) {
    for (const auto& ex : exs) {
      LabelLine l;
      l.user_id = ex.user_id;
      l.task = split_task_name(d.task_name, train);
      l.labels = ex.truth_set.empty() ? std::vector<int>{ex.label} : ex.truth_set;
      if (!ex.truth_set.empty()) {
        // keep the primary label first so it can be recovered from the file
        l.labels.clear();
        l.labels.push_back(ex.label);
        for (int t : ex.truth_set)
          if (t != ex.label) l.labels.push_back(t);
      }
      lines.push_back(std::move(l));
    }
  };
  emit(d.train, true);
  emit(d.test, false);
  return lines;
}

/// Rebuilds a LabeledDataset from a labels file for one task. user_index is
/// re-pointed at the tokenized-user array (sorted by user_id).
LabeledDataset labels_from_file(const std::string& path, const std::string& task,
                                const std::vector<TokenizedUser>& users, int num_classes) {
  LabeledDataset out;
  out.task_name = task;
  out.num_classes = num_classes;
  auto user_index = [&](const std::string& uid) {
    auto it = std::lower_bound(users.begin(), users.end(), uid,
                               [](const TokenizedUser& u, const std::string& id) {
                                 return u.user_id < id;
                               });
    if (it == users.end() || it->user_id != uid)
      throw ValidationError("labels reference unknown user: " + uid);
    return int(it - users.begin());
  };
  for (const auto& line : parse_labels_file(path)) {
    bool train;
    if (line.task == split_task_name(task, true)) {
      train = true;
    } else if (line.task == split_task_name(task, false)) {
      train = false;
    } else {
      continue;
    }
    if (line.labels.empty()) throw ValidationError("label line without labels: " + line.user_id);
    LabeledExample ex;
    ex.user_id = line.user_id;
    ex.user_index = user_index(line.user_id);
    ex.label = line.labels.front();
    ex.truth_set = line.labels;
    std::sort(ex.truth_set.begin(), ex.truth_set.end());
    (train ? out.train : out.test).push_back(std::move(ex));
  }
  if (out.train.empty() && out.test.empty())
    throw ValidationError("no label lines for task '" + task + "' in " + path);
  return out;
}

struct LoadedData {
  VocabularyRegistry registry;
  std::vector<TokenizedUser> tokens;
  ModelDims dims;
};

LoadedData load_tokens_and_vocab(const CommonArgs& args) {
  fs::path data(args.data());
  VocabularyRegistry reg =
      VocabularyRegistry::restore(Schemas::scaled_defaults(), (data / "vocab.tsv").string());
  std::vector<TokenizedUser> tokens = load_tokenized((data / "tokens.tsv").string());
  ModelDims dims = ModelDims::from_registry(reg);
  return {std::move(reg), std::move(tokens), std::move(dims)};
}

int task_num_classes(const std::string& task, const Schemas& schemas) {
  if (task == "next_genre") {
    int gi = schemas.long_term.index_of("genre");
    return schemas.long_term.attributes[size_t(gi)].declared_vocab_capacity;
  }
  return 2;
}

// ---- subcommands ----

int cmd_gen_data(const CommonArgs& args) {
  Config cfg = load_config(args, false);
  GeneratorConfig gen = generator_from(cfg, args.seed);
  GeneratedDataset data = generate_dataset(gen);

  fs::create_directories(args.out_dir);
  fs::path out(args.out_dir);
  write_events_file((out / "events.tsv").string(), all_events(data.users), gen.schemas);
  write_profiles_file((out / "profiles.tsv").string(), data.users, gen.schemas);

  std::vector<LabelLine> lines;
  for (TaskKind kind : {TaskKind::BinaryTargeting, TaskKind::NextGenre}) {
    TaskSpec spec;
    spec.kind = kind;
    spec.seed = gen.seed;
    spec.noise_rate = gen.label_noise;
    for (auto& l : label_lines(derive_task_labels(data, spec))) lines.push_back(std::move(l));
  }
  write_labels_file((out / "labels.tsv").string(), lines);

  Config echo;
  store_generator(gen, echo);
  std::ofstream ds(out / "dataset.cfg");
  if (!ds) throw IoError("cannot write dataset.cfg");
  ds << echo.to_string();
  ds.close();

  std::ofstream manifest(out / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest.txt");
  manifest << "users\t" << data.users.size() << "\n";
  for (const char* f : {"events.tsv", "profiles.tsv", "labels.tsv", "dataset.cfg"})
    manifest << f << "\t" << std::hex << file_digest(out / f) << std::dec << "\n";
  std::cout << "generated " << data.users.size() << " users into " << args.out_dir << "\n";
  return 0;
}

int cmd_build_vocab(const CommonArgs& args) {
  Config cfg = load_config(args, true);
  Schemas schemas = Schemas::scaled_defaults();
  fs::path data(args.data());
  auto events = parse_events_file((data / "events.tsv").string(), schemas);
  auto profiles = parse_profiles_file((data / "profiles.tsv").string(), schemas);
  auto users = group_into_records(std::move(events), profiles);

  VocabularyRegistry reg(schemas);
  TokenizerConfig tk = tokenizer_from(cfg);
  tk.frozen = false;  // interning pass
  tokenize_dataset(users, reg, mode_from(cfg), tk);

  fs::create_directories(args.out_dir);
  fs::path vocab_path = fs::path(args.out_dir) / "vocab.tsv";
  reg.persist(vocab_path.string());
  std::cout << "vocab digest " << std::hex << reg.digest() << std::dec << " -> "
            << vocab_path.string() << "\n";
  return 0;
}

int cmd_tokenize(const CommonArgs& args) {
  Config cfg = load_config(args, true);
  Schemas schemas = Schemas::scaled_defaults();
  fs::path data(args.data());
  auto events = parse_events_file((data / "events.tsv").string(), schemas);
  auto profiles = parse_profiles_file((data / "profiles.tsv").string(), schemas);
  auto users = group_into_records(std::move(events), profiles);

  VocabularyRegistry reg =
      VocabularyRegistry::restore(schemas, (data / "vocab.tsv").string());
  auto tokens = tokenize_dataset(users, reg, mode_from(cfg), tokenizer_from(cfg));

  fs::create_directories(args.out_dir);
  fs::path path = fs::path(args.out_dir) / "tokens.tsv";
  dump_tokenized(path.string(), tokens);
  std::cout << "tokenized " << tokens.size() << " users -> " << path.string() << "\n";
  return 0;
}

int cmd_pretrain(const CommonArgs& args) {
  Config cfg = load_config(args, true);
  LoadedData d = load_tokens_and_vocab(args);

  ModelConfig model = ModelConfig::from(cfg);
  PretrainOptions opt;
  opt.steps = int(cfg.get_int("pretrain.steps", 5000));
  opt.batch_size = int(cfg.get_int("pretrain.batch_size", 16));
  opt.adam.lr = cfg.get_double("pretrain.lr", opt.adam.lr);
  opt.seed = args.seed.value_or(uint64_t(cfg.get_int("pretrain.seed", 1)));
  fs::create_directories(args.out_dir);
  opt.log_path = (fs::path(args.out_dir) / "pretrain_log.tsv").string();

  Parameters<float> params(model, d.dims);
  params.init(CounterRng(CounterRng::derive_key({opt.seed, 0x696E6974ULL})));
  AdamState<float> state(params, opt.adam);
  TrainLog log = pretrain(d.tokens, params, state, opt);

  CheckpointMeta meta;
  meta.vocab_digest = d.registry.digest();
  meta.step = opt.steps;
  fs::path ckpt = fs::path(args.out_dir) / "pretrained.ckpt";
  save_checkpoint(ckpt.string(), params, meta, &state);
  std::cout << "pretrained " << opt.steps << " steps, final loss "
            << (log.losses().empty() ? 0.0 : log.losses().back()) << " -> " << ckpt.string()
            << "\n";
  return 0;
}

int cmd_finetune(const CommonArgs& args) {
  Config cfg = load_config(args, true);
  LoadedData d = load_tokens_and_vocab(args);
  std::string task = cfg.get_string("task.name", "binary_targeting");
  int num_classes = task_num_classes(task, d.registry.schemas());
  LabeledDataset labels = labels_from_file((fs::path(args.data()) / "labels.tsv").string(),
                                           task, d.tokens, num_classes);
  long long limit = cfg.get_int("finetune.max_train_labels", 0);
  if (limit > 0) labels = limit_train_labels(std::move(labels), size_t(limit));

  FinetuneOptions opt;
  opt.epochs = int(cfg.get_int("finetune.epochs", 10));
  opt.batch_size = int(cfg.get_int("finetune.batch_size", 128));
  opt.adam.lr = cfg.get_double("finetune.lr", opt.adam.lr);
  opt.seed = args.seed.value_or(uint64_t(cfg.get_int("finetune.seed", 1)));
  fs::create_directories(args.out_dir);
  opt.log_path = (fs::path(args.out_dir) / "finetune_log.tsv").string();

  std::string init = cfg.get_string("finetune.init_checkpoint", "");
  Parameters<float> params;
  if (!init.empty()) {
    if (!fs::exists(init)) throw ValidationError("init checkpoint does not exist: " + init);
    LoadedCheckpoint loaded = load_checkpoint(init, d.registry.digest());
    params = std::move(loaded.params);
  } else {
    ModelConfig model = ModelConfig::from(cfg);
    params = Parameters<float>(model, d.dims);
    params.init(CounterRng(CounterRng::derive_key({opt.seed, 0x73637261ULL})));
    opt.from_scratch = true;
  }

  auto history = finetune(d.tokens, labels, params, opt);
  CheckpointMeta meta;
  meta.vocab_digest = d.registry.digest();
  meta.step = opt.epochs;
  fs::path ckpt = fs::path(args.out_dir) / "finetuned.ckpt";
  save_checkpoint(ckpt.string(), params, meta);
  std::cout << "fine-tuned " << opt.epochs << " epochs on '" << task << "', final test loss "
            << history.back().test_loss << " -> " << ckpt.string() << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  Config cfg = load_config(args, true);
  LoadedData d = load_tokens_and_vocab(args);
  std::string task = cfg.get_string("task.name", "binary_targeting");
  int num_classes = task_num_classes(task, d.registry.schemas());
  LabeledDataset labels = labels_from_file((fs::path(args.data()) / "labels.tsv").string(),
                                           task, d.tokens, num_classes);

  std::string ckpt = cfg.get_string("evaluate.checkpoint",
                                    (fs::path(args.data()) / "finetuned.ckpt").string());
  if (!fs::exists(ckpt))
    throw ValidationError("evaluate: checkpoint does not exist: " + ckpt +
                          " (run finetune first or set evaluate.checkpoint)");
  LoadedCheckpoint loaded = load_checkpoint(ckpt, d.registry.digest());
  const Parameters<float>& params = loaded.params;
  if (params.num_classes() != num_classes)
    throw ValidationError("checkpoint head has " + std::to_string(params.num_classes()) +
                          " classes but task '" + task + "' needs " +
                          std::to_string(num_classes));

  uint64_t seed = args.seed.value_or(1);
  MetricReport report;
  if (task == "next_genre") {
    std::vector<RankingResult> model_results, pop_results;
    std::vector<std::vector<int>> train_purchases;
    for (const auto& ex : labels.train)
      train_purchases.push_back(ex.truth_set);
    std::vector<int> pop_rank = popularity_ranking(train_purchases, num_classes);
    for (const auto& ex : labels.test) {
      RowVec<float> probs = predict_classes(d.tokens[size_t(ex.user_index)], params);
      std::vector<double> scores(static_cast<size_t>(num_classes));
      for (int c = 0; c < num_classes; ++c) scores[size_t(c)] = double(probs(c));
      model_results.push_back({rank_by_score(scores), ex.truth_set});
      pop_results.push_back({pop_rank, ex.truth_set});
    }
    report.add(task, "map_at_10", map_at_k(model_results, 10), seed);
    report.add(task, "popularity_map_at_10", map_at_k(pop_results, 10), seed);
  } else {
    std::vector<double> scores;
    std::vector<int> y;
    for (const auto& ex : labels.test) {
      RowVec<float> probs = predict_classes(d.tokens[size_t(ex.user_index)], params);
      scores.push_back(double(probs(1)));
      y.push_back(ex.label);
    }
    report.add(task, "roc_auc", roc_auc(scores, y), seed);
    report.add(task, "accuracy", accuracy(scores, y), seed);
  }

  fs::create_directories(args.out_dir);
  report.write((fs::path(args.out_dir) / "metrics.tsv").string());
  std::cout << report.table();
  return 0;
}

int cmd_grad_check(const CommonArgs& args) {
  Config cfg = load_config(args, false);
  double tol = cfg.get_double("gradcheck.tolerance", 1e-4);
  uint64_t seed = args.seed.value_or(uint64_t(cfg.get_int("gradcheck.seed", 7)));
  GradCheckReport report = gradient_check(tol, seed);

  fs::create_directories(args.out_dir);
  std::ofstream out(fs::path(args.out_dir) / "gradcheck.txt");
  if (!out) throw IoError("cannot write gradcheck report");
  out << report.to_string();
  std::cout << report.to_string();
  return report.passed() ? 0 : 1;
}

int cmd_ablate(const CommonArgs& args) {
  Config cfg = load_config(args, false);
  uint64_t seed = args.seed.value_or(uint64_t(cfg.get_int("ablate.seed", 1)));
  GeneratorConfig gen = generator_from(cfg, std::nullopt);

  ModelConfig model = ModelConfig::from(cfg);
  PretrainOptions popt;
  popt.steps = int(cfg.get_int("pretrain.steps", 2000));
  popt.batch_size = int(cfg.get_int("pretrain.batch_size", 16));
  popt.adam.lr = cfg.get_double("pretrain.lr", 2e-3);
  popt.seed = seed;
  FinetuneOptions fopt;
  fopt.epochs = int(cfg.get_int("finetune.epochs", 5));
  fopt.batch_size = int(cfg.get_int("finetune.batch_size", 16));
  fopt.adam.lr = cfg.get_double("finetune.lr", 1e-3);
  fopt.seed = seed;

  MetricReport report;

  {  // pretrained-vs-scratch on binary targeting
    ExperimentPipeline pipe = build_pipeline(gen);
    PretrainRun run = run_pretraining(pipe, model, popt);
    TaskSpec spec;
    spec.kind = TaskKind::BinaryTargeting;
    spec.seed = seed;
    LabeledDataset labels = limit_train_labels(
        derive_task_labels(pipe.data, spec),
        size_t(cfg.get_int("finetune.max_train_labels", 200)));
    TargetingAblation ab = targeting_ablation(pipe, run.params, labels, fopt);
    report.add("targeting_pretrained", "roc_auc", ab.pretrained_auc, seed);
    report.add("targeting_scratch", "roc_auc", ab.scratch_auc, seed);
  }

  {  // discretized vs per-action on next-genre
    TaskSpec spec;
    spec.kind = TaskKind::NextGenre;
    spec.seed = seed;
    for (TokenizeMode mode : {TokenizeMode::Discretized, TokenizeMode::PerAction}) {
      ExperimentPipeline pipe = build_pipeline(gen, mode);
      PretrainRun run = run_pretraining(pipe, model, popt);
      LabeledDataset labels = derive_task_labels(pipe.data, spec);
      NextGenreEval ev = next_genre_eval(pipe, run.params, labels, fopt);
      std::string name =
          mode == TokenizeMode::Discretized ? "next_genre_discretized" : "next_genre_per_action";
      report.add(name, "map_at_10", ev.model_map10, seed);
      if (mode == TokenizeMode::Discretized)
        report.add("next_genre_popularity", "map_at_10", ev.popularity_map10, seed);
    }
  }

  fs::create_directories(args.out_dir);
  report.write((fs::path(args.out_dir) / "ablation.tsv").string());
  std::cout << report.table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"userbert: behavioral-word pretraining pipeline"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* desc;
    int (*fn)(const CommonArgs&);
    CommonArgs args;
  };
  Sub subs[] = {
      {"gen-data", "generate a synthetic event dataset", cmd_gen_data, {}},
      {"build-vocab", "intern attribute values into a vocabulary", cmd_build_vocab, {}},
      {"tokenize", "segment events into behavioral words", cmd_tokenize, {}},
      {"pretrain", "masked attribute-reconstruction pretraining", cmd_pretrain, {}},
      {"finetune", "fine-tune a classification head", cmd_finetune, {}},
      {"evaluate", "score a fine-tuned checkpoint", cmd_evaluate, {}},
      {"grad-check", "finite-difference gradient verification", cmd_grad_check, {}},
      {"ablate", "pretrain-vs-scratch and discretization comparisons", cmd_ablate, {}},
  };
  for (auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.desc);
    add_common(cmd, s.args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are validation errors
  }

  try {
    for (auto& s : subs)
      if (app.get_subcommand(s.name)->parsed()) return s.fn(s.args);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
