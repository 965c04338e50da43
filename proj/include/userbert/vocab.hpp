#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "userbert/schema.hpp"

namespace userbert {

/// Interning registry mapping raw attribute values to dense integer ids,
/// per (segment_kind, attribute). Id 0 is reserved for UNKNOWN in every
/// attribute; interned ids are contiguous starting at 1.
class VocabularyRegistry {
 public:
  explicit VocabularyRegistry(Schemas schemas);

  const Schemas& schemas() const { return schemas_; }

  /// Assigns (or returns the existing) id for a raw value.
  int intern(SegmentKind seg, const std::string& attribute, const std::string& value);
  int intern(SegmentKind seg, int attr_index, const std::string& value);

  /// frozen: unseen values map to 0 (UNKNOWN); otherwise behaves as intern.
  int resolve(SegmentKind seg, const std::string& attribute, const std::string& value, bool frozen);
  int resolve(SegmentKind seg, int attr_index, const std::string& value, bool frozen);

  /// Interned value count + 1 (the UNKNOWN row).
  int vocab_size(SegmentKind seg, const std::string& attribute) const;
  int vocab_size(SegmentKind seg, int attr_index) const;

  /// Raw value for an id; id 0 yields "<unk>".
  const std::string& value_of(SegmentKind seg, int attr_index, int id) const;

  int attribute_count(SegmentKind seg) const;

  /// Order-independent digest of all mappings (checkpoint compatibility guard).
  uint64_t digest() const;

  /// File format: header `USERBERT-VOCAB v1`, then one
  /// `segment<TAB>attribute<TAB>raw_value<TAB>id` line per entry.
  void persist(const std::string& path) const;
  static VocabularyRegistry restore(Schemas schemas, const std::string& path);

 private:
  struct AttrVocab {
    std::unordered_map<std::string, int> to_id;
    std::vector<std::string> values;  // index i holds the value with id i+1
  };

  const AttrVocab& vocab_at(SegmentKind seg, int attr_index) const;
  AttrVocab& vocab_at(SegmentKind seg, int attr_index);
  int attr_index_checked(SegmentKind seg, const std::string& attribute) const;

  Schemas schemas_;
  std::vector<AttrVocab> vocabs_[3];  // indexed by SegmentKind
};

}  // namespace userbert
