#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "userbert/schema.hpp"

namespace userbert {

/// Event file: one action per line,
/// `user_id<TAB>timestamp<TAB>segment<TAB>attr1=val1;attr2=val2;...`
void write_events(std::ostream& out, const std::vector<ActionEvent>& events,
                  const Schemas& schemas);
std::vector<ActionEvent> parse_events(std::istream& in, const Schemas& schemas);

/// Profile file: `user_id<TAB>attr1=val1;...`
void write_profiles(std::ostream& out, const std::vector<UserRecord>& users,
                    const Schemas& schemas);
std::map<std::string, std::vector<std::string>> parse_profiles(std::istream& in,
                                                               const Schemas& schemas);

/// Labels file: `user_id<TAB>task<TAB>label(s)` (multi-labels comma-separated).
struct LabelLine {
  std::string user_id;
  std::string task;
  std::vector<int> labels;
};
void write_labels(std::ostream& out, const std::vector<LabelLine>& lines);
std::vector<LabelLine> parse_labels(std::istream& in);

/// Groups parsed events and profiles into per-user records. Events are sorted
/// by timestamp (stable, preserving input order on ties); output records are
/// ordered by user_id.
std::vector<UserRecord> group_into_records(
    std::vector<ActionEvent> events,
    const std::map<std::string, std::vector<std::string>>& profiles);

// Path convenience wrappers.
void write_events_file(const std::string& path, const std::vector<ActionEvent>& events,
                       const Schemas& schemas);
std::vector<ActionEvent> parse_events_file(const std::string& path, const Schemas& schemas);
void write_profiles_file(const std::string& path, const std::vector<UserRecord>& users,
                         const Schemas& schemas);
std::map<std::string, std::vector<std::string>> parse_profiles_file(const std::string& path,
                                                                    const Schemas& schemas);
void write_labels_file(const std::string& path, const std::vector<LabelLine>& lines);
std::vector<LabelLine> parse_labels_file(const std::string& path);

}  // namespace userbert
