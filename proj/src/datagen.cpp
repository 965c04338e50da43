#include "userbert/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "userbert/tokenizer.hpp"

namespace userbert {

namespace {

constexpr uint64_t kUserStream = 0x75736572;     // per-user event stream
constexpr uint64_t kAttrStream = 0x61747472;     // global attribute model
constexpr uint64_t kLabelStream = 0x6C61626C;    // task labels
constexpr uint64_t kFutureStream = 0x66757475;   // next-genre holdout window

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

/// Global generative model of one categorical attribute: a per-value
/// popularity logit plus a projection of the user latent vector.
struct AttributeModel {
  Eigen::VectorXd popularity;  // K
  Eigen::MatrixXd projection;  // K x latent_dim

  static AttributeModel draw(int vocab, int latent_dim, CounterRng rng) {
    AttributeModel m;
    m.popularity.resize(vocab);
    m.projection.resize(vocab, latent_dim);
    for (int i = 0; i < vocab; ++i) m.popularity[i] = rng.normal();
    for (int i = 0; i < vocab; ++i)
      for (int j = 0; j < latent_dim; ++j) m.projection(i, j) = rng.normal();
    return m;
  }

  Eigen::VectorXd prefs(const Eigen::VectorXd& latent, double pop_scale,
                        double sharpness) const {
    Eigen::VectorXd logits = pop_scale * popularity +
                             (sharpness / std::sqrt(double(latent.size()))) *
                                 (projection * latent);
    return softmax(logits);
  }
};

struct AttributeModels {
  std::vector<AttributeModel> long_term, short_term, profile;

  static AttributeModels draw(const GeneratorConfig& cfg) {
    AttributeModels m;
    CounterRng base(CounterRng::derive_key({cfg.seed, kAttrStream}));
    auto draw_segment = [&](const AttributeSchema& schema, int seg) {
      std::vector<AttributeModel> out;
      for (size_t a = 0; a < schema.attributes.size(); ++a) {
        if (schema.attributes[a].name == "hour") {
          out.push_back({});  // derived from the timestamp, no planted model
          continue;
        }
        out.push_back(AttributeModel::draw(schema.attributes[a].declared_vocab_capacity,
                                           cfg.latent_dim,
                                           base.fork(CounterRng::derive_key(
                                               {uint64_t(seg), uint64_t(a)}))));
      }
      return out;
    };
    m.long_term = draw_segment(cfg.schemas.long_term, 0);
    m.short_term = draw_segment(cfg.schemas.short_term, 1);
    m.profile = draw_segment(cfg.schemas.profile, 2);
    return m;
  }
};

std::string value_name(const std::string& attr, int category) {
  return attr + "_" + std::to_string(category);
}

std::string hour_value(int64_t ts) {
  return value_name("hour", int((ts / kSecondsPerHour) % 24));
}

std::vector<std::string> sample_action_values(const AttributeSchema& schema,
                                              const std::vector<Eigen::VectorXd>& prefs,
                                              int64_t ts, CounterRng& rng) {
  std::vector<std::string> values(schema.attributes.size());
  for (size_t a = 0; a < values.size(); ++a) {
    if (schema.attributes[a].name == "hour") {
      values[a] = hour_value(ts);
    } else {
      values[a] = value_name(schema.attributes[a].name, sample_categorical(prefs[a], rng));
    }
  }
  return values;
}

}  // namespace

int sample_categorical(const Eigen::VectorXd& probs, CounterRng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  int n = int(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

void GeneratorConfig::validate() const {
  if (num_users <= 0 || long_term_days <= 0 || short_term_days <= 0 || latent_dim <= 0)
    throw ValidationError("generator config: all counts must be positive");
  if (short_term_days > long_term_days)
    throw ValidationError("generator config: short window longer than the long window");
  if (long_actions_per_day <= 0 || sessions_per_day <= 0 || mean_session_length < 1)
    throw ValidationError("generator config: rates must be positive");
  for (const auto* schema : {&schemas.long_term, &schemas.short_term, &schemas.profile})
    for (const auto& a : schema->attributes)
      if (a.declared_vocab_capacity <= 0)
        throw ValidationError("generator config: zero vocab size for attribute " + a.name);
}

int64_t GeneratorConfig::long_window_start() const {
  return align_to_day_boundary(start_timestamp, 0);
}

int64_t GeneratorConfig::short_window_start() const {
  return long_window_start() + int64_t(long_term_days - short_term_days) * kSecondsPerDay;
}

int64_t GeneratorConfig::window_end() const {
  return long_window_start() + int64_t(long_term_days) * kSecondsPerDay;
}

GeneratedDataset generate_dataset(const GeneratorConfig& config) {
  config.validate();
  const AttributeModels models = AttributeModels::draw(config);
  GeneratedDataset data;
  data.config = config;
  data.users.reserve(size_t(config.num_users));
  data.profiles.reserve(size_t(config.num_users));
  data.session_counts.reserve(size_t(config.num_users));

  const int64_t long_start = config.long_window_start();
  const int64_t short_start = config.short_window_start();
  const int64_t end = config.window_end();
  const int id_width = int(std::to_string(config.num_users - 1).size());

  for (int u = 0; u < config.num_users; ++u) {
    CounterRng rng(CounterRng::derive_key({config.seed, kUserStream, uint64_t(u)}));

    LatentProfile profile;
    std::string uid = std::to_string(u);
    profile.user_id = "u" + std::string(size_t(id_width - int(uid.size())), '0') + uid;
    profile.latent.resize(config.latent_dim);
    for (int i = 0; i < config.latent_dim; ++i) profile.latent[i] = rng.normal();

    auto build_prefs = [&](const std::vector<AttributeModel>& seg_models) {
      std::vector<Eigen::VectorXd> prefs;
      for (const auto& m : seg_models) {
        if (m.popularity.size() == 0) {
          prefs.emplace_back();  // hour
        } else {
          prefs.push_back(m.prefs(profile.latent, config.popularity_scale,
                                  config.preference_sharpness));
        }
      }
      return prefs;
    };
    profile.long_prefs = build_prefs(models.long_term);
    profile.short_prefs = build_prefs(models.short_term);
    profile.profile_prefs = build_prefs(models.profile);

    UserRecord rec;
    rec.user_id = profile.user_id;

    // long-term: day-by-day Poisson arrivals, uniform within the day window
    for (int d = 0; d < config.long_term_days; ++d) {
      int n = rng.poisson(config.long_actions_per_day);
      for (int i = 0; i < n; ++i) {
        ActionEvent e;
        e.user_id = rec.user_id;
        e.segment_kind = SegmentKind::LongTerm;
        e.timestamp = long_start + int64_t(d) * kSecondsPerDay +
                      int64_t(rng.uniform() * double(kSecondsPerDay));
        e.attribute_values =
            sample_action_values(config.schemas.long_term, profile.long_prefs, e.timestamp, rng);
        rec.long_term_events.push_back(std::move(e));
      }
    }
    std::sort(rec.long_term_events.begin(), rec.long_term_events.end(),
              [](const ActionEvent& a, const ActionEvent& b) { return a.timestamp < b.timestamp; });

    // short-term: sessions with within-gaps < 30 min and between-gaps > 30 min
    // by construction, so the tokenizer's 30-minute rule recovers them exactly.
    const double between_mean = double(kSecondsPerDay) / config.sessions_per_day;
    const double cont_p = 1.0 - 1.0 / config.mean_session_length;  // P(one more action)
    int sessions = 0;
    int64_t t = short_start + int64_t(rng.exponential(between_mean));
    while (t < end) {
      ++sessions;
      int64_t action_ts = t;
      while (true) {
        ActionEvent e;
        e.user_id = rec.user_id;
        e.segment_kind = SegmentKind::ShortTerm;
        e.timestamp = action_ts;
        e.attribute_values = sample_action_values(config.schemas.short_term,
                                                  profile.short_prefs, action_ts, rng);
        rec.short_term_events.push_back(std::move(e));
        if (!rng.bernoulli(cont_p)) break;
        int64_t next_ts = action_ts + 10 + int64_t(rng.uniform_int(1700));
        if (next_ts >= end) break;
        action_ts = next_ts;
      }
      t = rec.short_term_events.back().timestamp + kSessionGapSeconds + 60 +
          int64_t(rng.exponential(between_mean));
    }

    // profile attributes
    const auto& pschema = config.schemas.profile;
    for (size_t a = 0; a < pschema.attributes.size(); ++a)
      rec.profile_attributes.push_back(value_name(
          pschema.attributes[a].name, sample_categorical(profile.profile_prefs[a], rng)));

    data.session_counts.push_back(sessions);
    data.users.push_back(std::move(rec));
    data.profiles.push_back(std::move(profile));
  }
  return data;
}

std::string task_name(TaskKind k) {
  switch (k) {
    case TaskKind::BinaryTargeting:
      return "binary_targeting";
    case TaskKind::AttributePrediction:
      return "attribute_prediction";
    case TaskKind::NextGenre:
      return "next_genre";
  }
  return "?";
}

LabeledDataset derive_task_labels(const GeneratedDataset& data, const TaskSpec& spec) {
  const GeneratorConfig& cfg = data.config;
  const int n = int(data.users.size());
  LabeledDataset out;
  out.task_name = task_name(spec.kind);

  std::vector<LabeledExample> examples(static_cast<size_t>(n));
  CounterRng task_rng(CounterRng::derive_key({cfg.seed, kLabelStream, spec.seed}));

  if (spec.kind == TaskKind::NextGenre) {
    int genre_idx = cfg.schemas.long_term.index_of("genre");
    if (genre_idx < 0) throw ValidationError("next_genre task: schema has no 'genre' attribute");
    out.num_classes = cfg.schemas.long_term.attributes[size_t(genre_idx)].declared_vocab_capacity;
    for (int u = 0; u < n; ++u) {
      CounterRng rng(CounterRng::derive_key({cfg.seed, kFutureStream, spec.seed, uint64_t(u)}));
      const Eigen::VectorXd& prefs = data.profiles[size_t(u)].long_prefs[size_t(genre_idx)];
      std::vector<int> future;
      for (int d = 0; d < spec.holdout_days; ++d) {
        int k = rng.poisson(cfg.long_actions_per_day);
        for (int i = 0; i < k; ++i) future.push_back(sample_categorical(prefs, rng));
      }
      if (future.empty()) future.push_back(sample_categorical(prefs, rng));
      LabeledExample& ex = examples[size_t(u)];
      ex.user_id = data.users[size_t(u)].user_id;
      ex.user_index = u;
      ex.label = future.front();
      ex.truth_set = future;
      std::sort(ex.truth_set.begin(), ex.truth_set.end());
      ex.truth_set.erase(std::unique(ex.truth_set.begin(), ex.truth_set.end()),
                         ex.truth_set.end());
    }
  } else {
    out.num_classes = 2;
    // declared linear score of the latent vector
    Eigen::VectorXd w = Eigen::VectorXd::Zero(cfg.latent_dim);
    if (spec.kind == TaskKind::BinaryTargeting) {
      for (int i = 0; i < cfg.latent_dim; ++i) w[i] = task_rng.normal();
      w.normalize();
    } else {
      if (spec.latent_index < 0 || spec.latent_index >= cfg.latent_dim)
        throw ValidationError("attribute_prediction: latent_index out of range");
      w[spec.latent_index] = 1.0;
    }
    std::vector<double> scores(static_cast<size_t>(n));
    for (int u = 0; u < n; ++u) scores[size_t(u)] = w.dot(data.profiles[size_t(u)].latent);
    double threshold;
    if (spec.threshold) {
      threshold = *spec.threshold;
    } else {
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      size_t pos = size_t(std::clamp(spec.positive_quantile, 0.0, 1.0) * double(n - 1));
      threshold = sorted[pos];
    }
    for (int u = 0; u < n; ++u) {
      LabeledExample& ex = examples[size_t(u)];
      ex.user_id = data.users[size_t(u)].user_id;
      ex.user_index = u;
      ex.label = scores[size_t(u)] > threshold ? 1 : 0;
      CounterRng noise(CounterRng::derive_key({cfg.seed, kLabelStream, spec.seed, uint64_t(u)}));
      if (noise.bernoulli(spec.noise_rate)) ex.label = 1 - ex.label;
    }
  }

  // deterministic 80/20 split
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  CounterRng split_rng(CounterRng::derive_key({cfg.seed, kLabelStream, spec.seed, 0x73706C69ULL}));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[size_t(i)], order[size_t(split_rng.uniform_int(i + 1))]);
  int train_n = (n * 8) / 10;
  for (int i = 0; i < n; ++i)
    (i < train_n ? out.train : out.test).push_back(examples[size_t(order[size_t(i)])]);
  return out;
}

std::vector<ActionEvent> all_events(const GeneratedDataset& data) {
  std::vector<ActionEvent> events;
  for (const auto& u : data.users) {
    events.insert(events.end(), u.long_term_events.begin(), u.long_term_events.end());
    events.insert(events.end(), u.short_term_events.begin(), u.short_term_events.end());
  }
  return events;
}

}  // namespace userbert
