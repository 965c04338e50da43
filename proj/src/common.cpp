#include "userbert/common.hpp"

namespace userbert {

const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::LongTerm:
      return "long";
    case SegmentKind::ShortTerm:
      return "short";
    case SegmentKind::UserProfile:
      return "profile";
  }
  return "?";
}

SegmentKind segment_from_string(const std::string& s) {
  if (s == "long") return SegmentKind::LongTerm;
  if (s == "short") return SegmentKind::ShortTerm;
  if (s == "profile") return SegmentKind::UserProfile;
  throw ValidationError("unknown segment kind: " + s);
}

}  // namespace userbert
