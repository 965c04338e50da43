#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "userbert/schema.hpp"
#include "userbert/vocab.hpp"

namespace userbert {

constexpr int64_t kSecondsPerDay = 86400;
constexpr int64_t kSecondsPerHour = 3600;
constexpr int64_t kDayBoundarySecond = 4 * kSecondsPerHour;  // 4 AM
constexpr int64_t kSessionGapSeconds = 30 * 60;              // strict: > 1800 s splits

/// A time-window cluster of actions; the "word" unit of the model input.
/// Long-term: one 4AM-to-4AM day window, position = day ordinal from the
/// window start. Short-term: a session (gaps <= 30 min), position = hours
/// since the short-window start of the first action.
struct BehavioralWord {
  SegmentKind segment_kind = SegmentKind::LongTerm;
  std::vector<ActionEvent> actions;
  int position_index = 0;
};

/// The id-resolved form of a word: one id tuple per action, schema order.
struct TokenizedWord {
  SegmentKind segment_kind = SegmentKind::LongTerm;
  int position_index = 0;
  std::vector<std::vector<int>> action_ids;
};

struct TokenizedUser {
  std::string user_id;
  std::vector<TokenizedWord> long_words;
  std::vector<TokenizedWord> short_words;
  std::vector<int> profile_token_ids;
};

enum class TokenizeMode { Discretized, PerAction };

struct TokenizerConfig {
  int64_t long_window_start = 0;   // configured training window start
  int64_t short_window_start = 0;  // short window start timestamp
  int tz_offset_seconds = 0;       // reference timezone for the 4 AM boundary
  bool frozen = true;              // frozen vocab: unseen values -> UNKNOWN
};

/// Largest 4AM boundary <= t in the reference timezone.
int64_t align_to_day_boundary(int64_t t, int tz_offset_seconds);

/// Groups time-sorted long-term events into 4AM-to-4AM day windows.
/// Empty days yield no word; position = day ordinal from the aligned start.
std::vector<BehavioralWord> segment_long_term(std::span<const ActionEvent> events,
                                              int64_t window_start, int tz_offset_seconds = 0);

/// Splits time-sorted short-term events at inactivity gaps > 30 minutes
/// (a gap of exactly 30:00 stays within the word).
std::vector<BehavioralWord> segment_short_term(std::span<const ActionEvent> events,
                                               int64_t short_window_start);

/// Resolves attribute values to ids and applies both segmenters (Discretized)
/// or emits one single-action word per event (PerAction; positions computed
/// with the same day/hour formulas). Output ordered by user_id.
std::vector<TokenizedUser> tokenize_dataset(const std::vector<UserRecord>& users,
                                            VocabularyRegistry& registry, TokenizeMode mode,
                                            const TokenizerConfig& cfg);

/// Dump format: header `USERBERT-TOKENS v1`, then one line per word:
/// `user_id<TAB>segment<TAB>position<TAB>id,id,...|id,id,...`
/// and one `user_id<TAB>profile<TAB>0<TAB>id,id,...` line per user.
void dump_tokenized(const std::string& path, const std::vector<TokenizedUser>& users);
std::vector<TokenizedUser> load_tokenized(const std::string& path);

}  // namespace userbert
