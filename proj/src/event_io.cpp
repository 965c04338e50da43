#include "userbert/event_io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace userbert {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

/// Parses `a=v;b=v` against a schema, returning values in schema order.
std::vector<std::string> parse_attr_list(const std::string& s, const AttributeSchema& schema,
                                         int lineno) {
  std::vector<std::string> values(schema.attributes.size());
  std::vector<bool> seen(schema.attributes.size(), false);
  for (const auto& pair : split(s, ';')) {
    if (pair.empty()) continue;
    auto eq = pair.find('=');
    if (eq == std::string::npos)
      throw IoError("line " + std::to_string(lineno) + ": expected attr=value, got '" + pair + "'");
    std::string name = pair.substr(0, eq);
    int idx = schema.index_of(name);
    if (idx < 0)
      throw ValidationError("line " + std::to_string(lineno) + ": unknown attribute '" + name +
                            "'");
    values[size_t(idx)] = pair.substr(eq + 1);
    seen[size_t(idx)] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw IoError("line " + std::to_string(lineno) + ": missing attribute '" +
                    schema.attributes[i].name + "'");
  return values;
}

void write_attr_list(std::ostream& out, const std::vector<std::string>& values,
                     const AttributeSchema& schema) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out << ';';
    out << schema.attributes[i].name << '=' << values[i];
  }
}

}  // namespace

void write_events(std::ostream& out, const std::vector<ActionEvent>& events,
                  const Schemas& schemas) {
  for (const auto& e : events) {
    out << e.user_id << '\t' << e.timestamp << '\t' << to_string(e.segment_kind) << '\t';
    write_attr_list(out, e.attribute_values, schemas.for_segment(e.segment_kind));
    out << '\n';
  }
}

std::vector<ActionEvent> parse_events(std::istream& in, const Schemas& schemas) {
  std::vector<ActionEvent> events;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4)
      throw IoError("event line " + std::to_string(lineno) + ": expected 4 tab fields");
    ActionEvent e;
    e.user_id = fields[0];
    try {
      e.timestamp = std::stoll(fields[1]);
    } catch (const std::exception&) {
      throw IoError("event line " + std::to_string(lineno) + ": bad timestamp");
    }
    if (e.timestamp < 0)
      throw ValidationError("event line " + std::to_string(lineno) + ": negative timestamp");
    e.segment_kind = segment_from_string(fields[2]);
    if (e.segment_kind == SegmentKind::UserProfile)
      throw ValidationError("event line " + std::to_string(lineno) +
                            ": profile is not an event segment");
    e.attribute_values = parse_attr_list(fields[3], schemas.for_segment(e.segment_kind), lineno);
    events.push_back(std::move(e));
  }
  return events;
}

void write_profiles(std::ostream& out, const std::vector<UserRecord>& users,
                    const Schemas& schemas) {
  for (const auto& u : users) {
    out << u.user_id << '\t';
    write_attr_list(out, u.profile_attributes, schemas.profile);
    out << '\n';
  }
}

std::map<std::string, std::vector<std::string>> parse_profiles(std::istream& in,
                                                               const Schemas& schemas) {
  std::map<std::string, std::vector<std::string>> profiles;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError("profile line " + std::to_string(lineno) + ": expected 2 tab fields");
    profiles[line.substr(0, tab)] =
        parse_attr_list(line.substr(tab + 1), schemas.profile, lineno);
  }
  return profiles;
}

void write_labels(std::ostream& out, const std::vector<LabelLine>& lines) {
  for (const auto& l : lines) {
    out << l.user_id << '\t' << l.task << '\t';
    for (size_t i = 0; i < l.labels.size(); ++i) {
      if (i) out << ',';
      out << l.labels[i];
    }
    out << '\n';
  }
}

std::vector<LabelLine> parse_labels(std::istream& in) {
  std::vector<LabelLine> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw IoError("label line " + std::to_string(lineno) + ": expected 3 tab fields");
    LabelLine l;
    l.user_id = fields[0];
    l.task = fields[1];
    for (const auto& v : split(fields[2], ','))
      if (!v.empty()) l.labels.push_back(std::stoi(v));
    lines.push_back(std::move(l));
  }
  return lines;
}

std::vector<UserRecord> group_into_records(
    std::vector<ActionEvent> events,
    const std::map<std::string, std::vector<std::string>>& profiles) {
  std::map<std::string, UserRecord> by_user;
  for (const auto& [uid, attrs] : profiles) {
    UserRecord& r = by_user[uid];
    r.user_id = uid;
    r.profile_attributes = attrs;
  }
  // stable sort keeps input order within equal timestamps
  std::stable_sort(events.begin(), events.end(),
                   [](const ActionEvent& a, const ActionEvent& b) {
                     return std::tie(a.user_id, a.timestamp) < std::tie(b.user_id, b.timestamp);
                   });
  for (auto& e : events) {
    UserRecord& r = by_user[e.user_id];
    r.user_id = e.user_id;
    auto& list =
        e.segment_kind == SegmentKind::LongTerm ? r.long_term_events : r.short_term_events;
    list.push_back(std::move(e));
  }
  std::vector<UserRecord> records;
  records.reserve(by_user.size());
  for (auto& [_, r] : by_user) records.push_back(std::move(r));
  return records;
}

void write_events_file(const std::string& path, const std::vector<ActionEvent>& events,
                       const Schemas& schemas) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_events(out, events, schemas);
  if (!out) throw IoError("write failure: " + path);
}

std::vector<ActionEvent> parse_events_file(const std::string& path, const Schemas& schemas) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return parse_events(in, schemas);
}

void write_profiles_file(const std::string& path, const std::vector<UserRecord>& users,
                         const Schemas& schemas) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_profiles(out, users, schemas);
  if (!out) throw IoError("write failure: " + path);
}

std::map<std::string, std::vector<std::string>> parse_profiles_file(const std::string& path,
                                                                    const Schemas& schemas) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return parse_profiles(in, schemas);
}

void write_labels_file(const std::string& path, const std::vector<LabelLine>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_labels(out, lines);
  if (!out) throw IoError("write failure: " + path);
}

std::vector<LabelLine> parse_labels_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return parse_labels(in);
}

}  // namespace userbert
