#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "userbert/rng.hpp"
#include "userbert/schema.hpp"

namespace userbert {

/// Deterministic synthetic behavior generator. Every user's stream derives
/// from a counter-based per-user sub-seed, so parallel and serial generation
/// agree bit-for-bit.
struct GeneratorConfig {
  int num_users = 2000;
  int long_term_days = 90;
  int short_term_days = 7;
  int latent_dim = 8;
  double long_actions_per_day = 0.4;   // Poisson rate per day window
  double sessions_per_day = 1.0;       // short-term session arrival rate
  double mean_session_length = 4.0;    // geometric, >= 1 action per session
  double popularity_scale = 2.0;       // global per-value popularity logit std
  double preference_sharpness = 6.0;   // per-user latent logit std
  double label_noise = 0.05;
  uint64_t seed = 1;
  /// Training window start; the generator aligns it to a 4 AM boundary so day
  /// windows and generated days coincide.
  int64_t start_timestamp = 1600000000;
  Schemas schemas = Schemas::scaled_defaults();

  void validate() const;
  int64_t long_window_start() const;   // 4AM-aligned start
  int64_t short_window_start() const;  // last short_term_days of the window
  int64_t window_end() const;
};

/// Planted per-user latent structure: the latent vector and the categorical
/// preference distribution it induces for every attribute.
struct LatentProfile {
  std::string user_id;
  Eigen::VectorXd latent;
  std::vector<Eigen::VectorXd> long_prefs;   // per long-term attribute (hour excluded: empty)
  std::vector<Eigen::VectorXd> short_prefs;  // per short-term attribute
  std::vector<Eigen::VectorXd> profile_prefs;
};

struct GeneratedDataset {
  GeneratorConfig config;
  std::vector<UserRecord> users;
  std::vector<LatentProfile> profiles;
  std::vector<int> session_counts;  // planted short-term session count per user
};

GeneratedDataset generate_dataset(const GeneratorConfig& config);

/// Draws one value index from a planted categorical (exposed for oracle tests).
int sample_categorical(const Eigen::VectorXd& probs, CounterRng& rng);

// ---- downstream task labels ----

enum class TaskKind { BinaryTargeting, AttributePrediction, NextGenre };

struct TaskSpec {
  TaskKind kind = TaskKind::BinaryTargeting;
  double noise_rate = 0.05;
  uint64_t seed = 0;
  int latent_index = 0;                  // AttributePrediction: which latent dim
  int holdout_days = 30;                 // NextGenre: future window length
  std::optional<double> threshold;       // BinaryTargeting: default = median score
  double positive_quantile = 0.5;        // threshold placement when not given
};

struct LabeledExample {
  std::string user_id;
  int user_index = 0;          // index into GeneratedDataset::users
  int label = 0;               // class id (binary: 0/1; next-genre: category)
  std::vector<int> truth_set;  // NextGenre: distinct future genre categories
};

struct LabeledDataset {
  std::string task_name;
  int num_classes = 2;
  std::vector<LabeledExample> train;  // 80
  std::vector<LabeledExample> test;   // 20
};

LabeledDataset derive_task_labels(const GeneratedDataset& data, const TaskSpec& spec);

std::string task_name(TaskKind k);

/// Flattens a dataset to event lines (time-sorted per user).
std::vector<ActionEvent> all_events(const GeneratedDataset& data);

}  // namespace userbert
