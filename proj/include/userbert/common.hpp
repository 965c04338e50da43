#pragma once

#include <stdexcept>
#include <string>

namespace userbert {

enum class SegmentKind : int { LongTerm = 0, ShortTerm = 1, UserProfile = 2 };

const char* to_string(SegmentKind k);
SegmentKind segment_from_string(const std::string& s);

/// Bad input, bad config, or a violated precondition. CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// I/O failure, format/version mismatch, or an internal failure. CLI exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace userbert
