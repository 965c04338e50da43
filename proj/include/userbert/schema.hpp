#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "userbert/common.hpp"

namespace userbert {

struct AttributeSpec {
  std::string name;
  /// Number of distinct raw values the generator/dataset is expected to use
  /// (the interned vocabulary adds one UNKNOWN row on top of this).
  int declared_vocab_capacity = 0;
};

struct AttributeSchema {
  SegmentKind segment_kind = SegmentKind::LongTerm;
  std::vector<AttributeSpec> attributes;

  int index_of(const std::string& name) const {
    for (size_t i = 0; i < attributes.size(); ++i)
      if (attributes[i].name == name) return int(i);
    return -1;
  }

  void validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& a : attributes) {
      if (a.declared_vocab_capacity <= 0)
        throw ValidationError("attribute '" + a.name + "': capacity must be positive");
      if (!seen.insert(a.name).second)
        throw ValidationError("duplicate attribute name in schema: " + a.name);
    }
  }
};

/// One timestamped user action.
struct ActionEvent {
  std::string user_id;
  int64_t timestamp = 0;  // seconds since epoch, UTC
  SegmentKind segment_kind = SegmentKind::LongTerm;
  std::vector<std::string> attribute_values;  // schema order
};

/// All data of one user. Event lists are sorted non-decreasing by timestamp;
/// continuous profile attributes must be pre-bucketed before entering here.
struct UserRecord {
  std::string user_id;
  std::vector<ActionEvent> long_term_events;
  std::vector<ActionEvent> short_term_events;
  std::vector<std::string> profile_attributes;  // profile-schema order
};

struct Schemas {
  AttributeSchema long_term;
  AttributeSchema short_term;
  AttributeSchema profile;

  const AttributeSchema& for_segment(SegmentKind k) const {
    switch (k) {
      case SegmentKind::LongTerm:
        return long_term;
      case SegmentKind::ShortTerm:
        return short_term;
      case SegmentKind::UserProfile:
        return profile;
    }
    throw ValidationError("bad segment kind");
  }

  void validate() const {
    long_term.validate();
    short_term.validate();
    profile.validate();
  }

  /// Default attribute layout. Vocabulary capacities are the production-scale
  /// ones divided by 100 (rounded up, floor 2) so embedding tables stay small
  /// while keeping the relative magnitudes. `hour` is derived from the event
  /// timestamp, hence its natural 24 values.
  static Schemas scaled_defaults() {
    Schemas s;
    s.long_term.segment_kind = SegmentKind::LongTerm;
    s.long_term.attributes = {
        {"action_type", 2}, {"channel", 8}, {"expense_range", 2},
        {"shop", 852},      {"genre", 115}, {"hour", 24},
    };
    s.short_term.segment_kind = SegmentKind::ShortTerm;
    s.short_term.attributes = {
        {"action_type", 3}, {"shop", 409}, {"genre", 104}, {"device_type", 2}};
    s.profile.segment_kind = SegmentKind::UserProfile;
    s.profile.attributes = {{"gender", 3}, {"age_bucket", 7}};
    return s;
  }

  /// Tiny schemas for gradient checks and unit tests (vocabs <= 5).
  static Schemas tiny() {
    Schemas s;
    s.long_term.segment_kind = SegmentKind::LongTerm;
    s.long_term.attributes = {{"shop", 2}, {"genre", 5}};
    s.short_term.segment_kind = SegmentKind::ShortTerm;
    s.short_term.attributes = {{"page", 3}};
    s.profile.segment_kind = SegmentKind::UserProfile;
    s.profile.attributes = {{"gender", 2}};
    return s;
  }
};

/// Default bucket edges for the continuous age attribute.
inline std::string bucket_age(double age) {
  static const double edges[] = {18, 25, 35, 45, 55, 65};
  int b = 0;
  for (double e : edges)
    if (age >= e) ++b;
  return "age_bucket_" + std::to_string(b);
}

}  // namespace userbert
