#pragma once

// Per-page dwell-time statistics and the time priority feature.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "webrank/corpus.hpp"
#include "webrank/errors.hpp"
#include "webrank/io.hpp"
#include "webrank/textprep.hpp"

namespace webrank {

struct TimeEntry {
  std::string doc_id;
  double avg_dwell = 0.0;         // running pairwise average of observed dwell
  std::int64_t last_updated = 0;  // timestamp of the latest observation
  std::set<std::string> keywords;

  bool operator==(const TimeEntry&) const = default;
};

// One entry per page. Mutated by a single writer; copy it to hand out an
// immutable snapshot.
class TimeDb {
 public:
  // Folds one dwell observation into the page's average:
  //   T = t            when the page has no average yet (T == 0)
  //   T = (t + T) / 2  otherwise
  // A negative dwell is rejected and leaves the store untouched.
  void update_dwell(const std::string& doc_id, double dwell, std::int64_t at,
                    std::span<const std::string> keywords = {}) {
    if (!(dwell >= 0.0)) {
      throw InputError("negative or invalid dwell time for " + doc_id);
    }
    auto& e = entries_[doc_id];
    e.doc_id = doc_id;
    e.avg_dwell = (e.avg_dwell == 0.0) ? dwell : (dwell + e.avg_dwell) / 2.0;
    e.last_updated = at;
    e.keywords.insert(keywords.begin(), keywords.end());
  }

  // Average dwell for the page; pages never seen count as 0.
  double avg_dwell(std::string_view doc_id) const {
    auto it = entries_.find(std::string(doc_id));
    return it == entries_.end() ? 0.0 : it->second.avg_dwell;
  }

  const TimeEntry* find(std::string_view doc_id) const {
    auto it = entries_.find(std::string(doc_id));
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Replaces or inserts an entry verbatim (used by the loader).
  void put(TimeEntry e) {
    auto key = e.doc_id;
    entries_[key] = std::move(e);
  }

  const std::map<std::string, TimeEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const TimeDb&) const = default;

 private:
  std::map<std::string, TimeEntry> entries_;
};

// Replays page views in log order. Only view events carry a page dwell; the
// query's stems are attached as keywords.
inline TimeDb build_time_db(std::span<const LogRecord> records) {
  TimeDb db;
  for (const auto& r : records) {
    if (r.event != EventType::view) continue;
    std::vector<std::string> keywords;
    for (const auto& tok : tokenize(r.query)) keywords.push_back(stem(tok));
    db.update_dwell(r.doc_id, r.dwell_seconds, r.timestamp, keywords);
  }
  return db;
}

// Min-max normalized average dwell of every candidate, in candidate order.
// If all candidates share one value, each gets 0.5.
inline std::vector<double> time_scores(std::span<const std::string> candidates, const TimeDb& db) {
  if (candidates.empty()) throw ContractViolation("time_scores over an empty candidate set");
  std::vector<double> values;
  values.reserve(candidates.size());
  for (const auto& c : candidates) values.push_back(db.avg_dwell(c));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double span = *hi - *lo;
  for (auto& v : values) v = (span > 0.0) ? (v - min) / span : 0.5;
  return values;
}

inline double time_score(std::string_view doc_id, std::span<const std::string> candidates,
                         const TimeDb& db) {
  auto it = std::find(candidates.begin(), candidates.end(), doc_id);
  if (it == candidates.end()) throw ContractViolation("time_score: document is not a candidate");
  return time_scores(candidates, db)[static_cast<std::size_t>(it - candidates.begin())];
}

inline std::string serialize_time_db(const TimeDb& db) {
  std::string out;
  for (const auto& [id, e] : db.entries()) {
    nlohmann::ordered_json obj;
    obj["doc"] = e.doc_id;
    obj["avg_dwell"] = e.avg_dwell;
    obj["ts"] = e.last_updated;
    obj["keywords"] = e.keywords;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

inline void save_time_db(const TimeDb& db, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_time_db(db));
}

// All-or-nothing: the first bad line aborts the load.
inline TimeDb parse_time_db(std::string_view text) {
  TimeDb db;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto bad = [&](const std::string& why) {
      return LoadError("time store line " + std::to_string(line_no) + ": " + why);
    };
    auto obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw bad("not a JSON object");
    TimeEntry e;
    auto doc = obj.find("doc");
    auto avg = obj.find("avg_dwell");
    auto ts = obj.find("ts");
    auto kw = obj.find("keywords");
    if (doc == obj.end() || !doc->is_string() || doc->get<std::string>().empty()) throw bad("bad 'doc'");
    if (avg == obj.end() || !avg->is_number() || avg->get<double>() < 0.0) throw bad("bad 'avg_dwell'");
    if (ts == obj.end() || !ts->is_number_integer()) throw bad("bad 'ts'");
    if (kw == obj.end() || !kw->is_array()) throw bad("bad 'keywords'");
    e.doc_id = doc->get<std::string>();
    e.avg_dwell = avg->get<double>();
    e.last_updated = ts->get<std::int64_t>();
    for (const auto& k : *kw) {
      if (!k.is_string()) throw bad("non-string keyword");
      e.keywords.insert(k.get<std::string>());
    }
    if (db.find(e.doc_id) != nullptr) throw bad("duplicate entry for " + e.doc_id);
    db.put(std::move(e));
  }
  return db;
}

inline TimeDb load_time_db(const std::filesystem::path& path) { return parse_time_db(read_file(path)); }

}  // namespace webrank
