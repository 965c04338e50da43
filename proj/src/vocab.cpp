#include "userbert/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace userbert {

namespace {
constexpr const char* kHeader = "USERBERT-VOCAB v1";
const std::string kUnknown = "<unk>";

uint64_t fnv1a(uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  h ^= 0xFF;
  h *= 0x100000001B3ULL;
  return h;
}
}  // namespace

VocabularyRegistry::VocabularyRegistry(Schemas schemas) : schemas_(std::move(schemas)) {
  schemas_.validate();
  vocabs_[0].resize(schemas_.long_term.attributes.size());
  vocabs_[1].resize(schemas_.short_term.attributes.size());
  vocabs_[2].resize(schemas_.profile.attributes.size());
}

int VocabularyRegistry::attr_index_checked(SegmentKind seg, const std::string& attribute) const {
  int idx = schemas_.for_segment(seg).index_of(attribute);
  if (idx < 0)
    throw ValidationError("unknown attribute '" + attribute + "' for segment " +
                          to_string(seg));
  return idx;
}

const VocabularyRegistry::AttrVocab& VocabularyRegistry::vocab_at(SegmentKind seg,
                                                                  int attr_index) const {
  return vocabs_[int(seg)].at(size_t(attr_index));
}

VocabularyRegistry::AttrVocab& VocabularyRegistry::vocab_at(SegmentKind seg, int attr_index) {
  return vocabs_[int(seg)].at(size_t(attr_index));
}

int VocabularyRegistry::intern(SegmentKind seg, const std::string& attribute,
                               const std::string& value) {
  return intern(seg, attr_index_checked(seg, attribute), value);
}

int VocabularyRegistry::intern(SegmentKind seg, int attr_index, const std::string& value) {
  AttrVocab& v = vocab_at(seg, attr_index);
  auto [it, inserted] = v.to_id.try_emplace(value, int(v.values.size()) + 1);
  if (inserted) v.values.push_back(value);
  return it->second;
}

int VocabularyRegistry::resolve(SegmentKind seg, const std::string& attribute,
                                const std::string& value, bool frozen) {
  return resolve(seg, attr_index_checked(seg, attribute), value, frozen);
}

int VocabularyRegistry::resolve(SegmentKind seg, int attr_index, const std::string& value,
                                bool frozen) {
  if (!frozen) return intern(seg, attr_index, value);
  const AttrVocab& v = vocab_at(seg, attr_index);
  auto it = v.to_id.find(value);
  return it == v.to_id.end() ? 0 : it->second;
}

int VocabularyRegistry::vocab_size(SegmentKind seg, const std::string& attribute) const {
  return vocab_size(seg, attr_index_checked(seg, attribute));
}

int VocabularyRegistry::vocab_size(SegmentKind seg, int attr_index) const {
  return int(vocab_at(seg, attr_index).values.size()) + 1;
}

const std::string& VocabularyRegistry::value_of(SegmentKind seg, int attr_index, int id) const {
  if (id == 0) return kUnknown;
  const AttrVocab& v = vocab_at(seg, attr_index);
  if (id < 1 || id > int(v.values.size()))
    throw ValidationError("id out of range for attribute " + std::to_string(attr_index));
  return v.values[size_t(id) - 1];
}

int VocabularyRegistry::attribute_count(SegmentKind seg) const {
  return int(vocabs_[int(seg)].size());
}

uint64_t VocabularyRegistry::digest() const {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (int seg = 0; seg < 3; ++seg) {
    const auto& schema = schemas_.for_segment(SegmentKind(seg));
    for (size_t a = 0; a < vocabs_[seg].size(); ++a) {
      h = fnv1a(h, schema.attributes[a].name);
      for (const auto& value : vocabs_[seg][a].values) h = fnv1a(h, value);
    }
  }
  return h;
}

void VocabularyRegistry::persist(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open vocab file for writing: " + path);
  out << kHeader << "\n";
  for (int seg = 0; seg < 3; ++seg) {
    const auto& schema = schemas_.for_segment(SegmentKind(seg));
    for (size_t a = 0; a < vocabs_[seg].size(); ++a) {
      const auto& values = vocabs_[seg][a].values;
      for (size_t i = 0; i < values.size(); ++i)
        out << to_string(SegmentKind(seg)) << '\t' << schema.attributes[a].name << '\t'
            << values[i] << '\t' << (i + 1) << "\n";
    }
  }
  if (!out) throw IoError("write failure: " + path);
}

VocabularyRegistry VocabularyRegistry::restore(Schemas schemas, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocab file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw IoError("vocab file '" + path + "': bad or missing header (expected " +
                  std::string(kHeader) + ")");
  VocabularyRegistry reg(std::move(schemas));
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string seg, attr, value, id_str;
    if (!std::getline(ls, seg, '\t') || !std::getline(ls, attr, '\t') ||
        !std::getline(ls, value, '\t') || !std::getline(ls, id_str))
      throw IoError("vocab file line " + std::to_string(lineno) + ": malformed");
    int id = reg.intern(segment_from_string(seg), attr, value);
    if (std::to_string(id) != id_str)
      throw IoError("vocab file line " + std::to_string(lineno) +
                    ": id out of order (got " + id_str + ", expected " + std::to_string(id) + ")");
  }
  return reg;
}

}  // namespace userbert
