#include "userbert/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace userbert {

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  return (a % b != 0 && (a ^ b) < 0) ? q - 1 : q;
}

void check_sorted(std::span<const ActionEvent> events, SegmentKind expected) {
  int64_t prev = INT64_MIN;
  for (const auto& e : events) {
    if (e.segment_kind != expected)
      throw ValidationError("segmenter got an event of the wrong segment kind");
    if (e.timestamp < prev) throw ValidationError("events not sorted by timestamp");
    prev = e.timestamp;
  }
}

}  // namespace

int64_t align_to_day_boundary(int64_t t, int tz_offset_seconds) {
  int64_t local = t + tz_offset_seconds;
  int64_t within = local - kDayBoundarySecond;
  return t - (within - floor_div(within, kSecondsPerDay) * kSecondsPerDay);
}

std::vector<BehavioralWord> segment_long_term(std::span<const ActionEvent> events,
                                              int64_t window_start, int tz_offset_seconds) {
  check_sorted(events, SegmentKind::LongTerm);
  const int64_t start = align_to_day_boundary(window_start, tz_offset_seconds);
  std::vector<BehavioralWord> words;
  for (const auto& e : events) {
    int64_t day = floor_div(e.timestamp - start, kSecondsPerDay);
    if (day < 0)
      throw ValidationError("long-term event precedes the training window start");
    if (words.empty() || words.back().position_index != int(day)) {
      words.push_back({SegmentKind::LongTerm, {}, int(day)});
    }
    words.back().actions.push_back(e);
  }
  return words;
}

std::vector<BehavioralWord> segment_short_term(std::span<const ActionEvent> events,
                                               int64_t short_window_start) {
  check_sorted(events, SegmentKind::ShortTerm);
  std::vector<BehavioralWord> words;
  int64_t prev_ts = 0;
  for (const auto& e : events) {
    bool new_word = words.empty() || e.timestamp - prev_ts > kSessionGapSeconds;
    if (new_word) {
      int64_t hours = floor_div(e.timestamp - short_window_start, kSecondsPerHour);
      if (hours < 0) throw ValidationError("short-term event precedes the short window start");
      words.push_back({SegmentKind::ShortTerm, {}, int(hours)});
    }
    words.back().actions.push_back(e);
    prev_ts = e.timestamp;
  }
  return words;
}

namespace {

TokenizedWord resolve_word(const BehavioralWord& w, VocabularyRegistry& registry, bool frozen) {
  TokenizedWord out;
  out.segment_kind = w.segment_kind;
  out.position_index = w.position_index;
  out.action_ids.reserve(w.actions.size());
  for (const auto& a : w.actions) {
    const auto& schema = registry.schemas().for_segment(w.segment_kind);
    if (a.attribute_values.size() != schema.attributes.size())
      throw ValidationError("event attribute count does not match the schema for segment " +
                            std::string(to_string(w.segment_kind)));
    std::vector<int> ids(a.attribute_values.size());
    for (size_t i = 0; i < ids.size(); ++i)
      ids[i] = registry.resolve(w.segment_kind, int(i), a.attribute_values[i], frozen);
    out.action_ids.push_back(std::move(ids));
  }
  return out;
}

std::vector<BehavioralWord> explode_per_action(const std::vector<BehavioralWord>& words,
                                               int64_t short_window_start) {
  std::vector<BehavioralWord> out;
  for (const auto& w : words)
    for (const auto& a : w.actions) {
      // same position formulas as the windows: day ordinal / hours since start
      int pos = w.position_index;
      if (w.segment_kind == SegmentKind::ShortTerm)
        pos = int(floor_div(a.timestamp - short_window_start, kSecondsPerHour));
      out.push_back({w.segment_kind, {a}, pos});
    }
  return out;
}

}  // namespace

std::vector<TokenizedUser> tokenize_dataset(const std::vector<UserRecord>& users,
                                            VocabularyRegistry& registry, TokenizeMode mode,
                                            const TokenizerConfig& cfg) {
  std::vector<TokenizedUser> out;
  out.reserve(users.size());
  for (const auto& u : users) {
    TokenizedUser tu;
    tu.user_id = u.user_id;
    auto long_words =
        segment_long_term(u.long_term_events, cfg.long_window_start, cfg.tz_offset_seconds);
    auto short_words = segment_short_term(u.short_term_events, cfg.short_window_start);
    if (mode == TokenizeMode::PerAction) {
      long_words = explode_per_action(long_words, cfg.short_window_start);
      short_words = explode_per_action(short_words, cfg.short_window_start);
    }
    for (const auto& w : long_words) tu.long_words.push_back(resolve_word(w, registry, cfg.frozen));
    for (const auto& w : short_words)
      tu.short_words.push_back(resolve_word(w, registry, cfg.frozen));
    const auto& pschema = registry.schemas().profile;
    if (u.profile_attributes.size() != pschema.attributes.size())
      throw ValidationError("user " + u.user_id + ": profile attribute count mismatch");
    for (size_t i = 0; i < u.profile_attributes.size(); ++i)
      tu.profile_token_ids.push_back(
          registry.resolve(SegmentKind::UserProfile, int(i), u.profile_attributes[i], cfg.frozen));
    out.push_back(std::move(tu));
  }
  std::sort(out.begin(), out.end(),
            [](const TokenizedUser& a, const TokenizedUser& b) { return a.user_id < b.user_id; });
  return out;
}

namespace {
constexpr const char* kTokHeader = "USERBERT-TOKENS v1";

void write_word_line(std::ostream& out, const std::string& uid, const TokenizedWord& w) {
  out << uid << '\t' << to_string(w.segment_kind) << '\t' << w.position_index << '\t';
  for (size_t a = 0; a < w.action_ids.size(); ++a) {
    if (a) out << '|';
    for (size_t i = 0; i < w.action_ids[a].size(); ++i) {
      if (i) out << ',';
      out << w.action_ids[a][i];
    }
  }
  out << '\n';
}
}  // namespace

void dump_tokenized(const std::string& path, const std::vector<TokenizedUser>& users) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kTokHeader << "\n";
  for (const auto& u : users) {
    for (const auto& w : u.long_words) write_word_line(out, u.user_id, w);
    for (const auto& w : u.short_words) write_word_line(out, u.user_id, w);
    out << u.user_id << "\tprofile\t0\t";
    for (size_t i = 0; i < u.profile_token_ids.size(); ++i) {
      if (i) out << ',';
      out << u.profile_token_ids[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure: " + path);
}

std::vector<TokenizedUser> load_tokenized(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTokHeader)
    throw IoError("tokenized file '" + path + "': bad or missing header");
  std::vector<TokenizedUser> users;
  TokenizedUser* cur = nullptr;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string uid, seg, pos, ids;
    if (!std::getline(ls, uid, '\t') || !std::getline(ls, seg, '\t') ||
        !std::getline(ls, pos, '\t'))
      throw IoError("tokenized file line " + std::to_string(lineno) + ": malformed");
    std::getline(ls, ids);
    if (cur == nullptr || cur->user_id != uid) {
      users.push_back({});
      cur = &users.back();
      cur->user_id = uid;
    }
    auto parse_ids = [&](const std::string& s) {
      std::vector<int> v;
      std::istringstream is(s);
      std::string tok;
      while (std::getline(is, tok, ','))
        if (!tok.empty()) v.push_back(std::stoi(tok));
      return v;
    };
    if (seg == "profile") {
      cur->profile_token_ids = parse_ids(ids);
      continue;
    }
    TokenizedWord w;
    w.segment_kind = segment_from_string(seg);
    w.position_index = std::stoi(pos);
    std::istringstream groups(ids);
    std::string group;
    while (std::getline(groups, group, '|')) w.action_ids.push_back(parse_ids(group));
    if (w.action_ids.empty())
      throw IoError("tokenized file line " + std::to_string(lineno) + ": empty word");
    (w.segment_kind == SegmentKind::LongTerm ? cur->long_words : cur->short_words)
        .push_back(std::move(w));
  }
  return users;
}

}  // namespace userbert
