#pragma once

// Query-vs-history session matching by longest common subsequence, and a
// taxonomy-based semantic score.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ranges>
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

// Length of the longest common subsequence of two sequences:
//   L[i][j] = 0                           if i == 0 or j == 0
//   L[i][j] = L[i-1][j-1] + 1             if a[i] == b[j]
//   L[i][j] = max(L[i-1][j], L[i][j-1])   otherwise
// Only two rows of the table are kept.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
std::size_t lcs_length(const A& a, const B& b) {
  const auto n = static_cast<std::size_t>(std::ranges::size(a));
  const auto m = static_cast<std::size_t>(std::ranges::size(b));
  if (n == 0 || m == 0) return 0;
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (std::ranges::begin(a)[i - 1] == std::ranges::begin(b)[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

struct HistoryEntry {
  std::vector<std::string> tokens;         // stemmed query words
  std::optional<std::string> subcategory;  // of the page engaged in that session

  bool operator==(const HistoryEntry&) const = default;
};

// Past queries per user. Single writer; copies are read snapshots.
class UserHistoryDb {
 public:
  void add(const std::string& user_id, HistoryEntry entry) {
    if (entry.tokens.empty()) throw InputError("history entry for " + user_id + " has no tokens");
    entries_[user_id].push_back(std::move(entry));
  }

  std::span<const HistoryEntry> history(std::string_view user_id) const {
    auto it = entries_.find(std::string(user_id));
    if (it == entries_.end()) return {};
    return it->second;
  }

  const std::map<std::string, std::vector<HistoryEntry>>& users() const { return entries_; }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, v] : entries_) n += v.size();
    return n;
  }

  bool operator==(const UserHistoryDb&) const = default;

 private:
  std::map<std::string, std::vector<HistoryEntry>> entries_;
};

// Records one entry per session that has a usable query and at least one
// click, add-to-cart or purchase. The label is the subcategory of the last
// engaged page, when that page is in the catalog.
inline UserHistoryDb build_history(std::span<const Session> sessions, const Catalog& catalog) {
  std::map<std::string_view, const WebDocument*> by_id;
  for (const auto& d : catalog) by_id.emplace(d.doc_id, &d);

  UserHistoryDb db;
  for (const auto& s : sessions) {
    const LogRecord* engaged = nullptr;
    for (const auto& r : s.records) {
      if (r.event != EventType::view) engaged = &r;
    }
    if (engaged == nullptr) continue;
    Query q;
    try {
      q = parse_query(s.query());
    } catch (const EmptyQueryError&) {
      continue;
    }
    HistoryEntry e{std::move(q.words), std::nullopt};
    if (auto it = by_id.find(engaged->doc_id); it != by_id.end()) e.subcategory = it->second->subcategory;
    db.add(s.user_id, std::move(e));
  }
  return db;
}

struct SessionMatch {
  std::vector<std::string> best_entry;
  std::size_t lcs_len = 0;
  double similarity = 0.0;  // lcs_len / max(|query|, |best_entry|)
  std::optional<std::string> matched_subcategory;
};

// Best LCS similarity between the query and each of the user's past queries.
// The earliest entry wins ties.
inline SessionMatch match_session(const Query& query, std::string_view user_id, const UserHistoryDb& db) {
  SessionMatch best;
  bool have = false;
  for (const auto& e : db.history(user_id)) {
    const auto len = lcs_length(query.words, e.tokens);
    const auto denom = std::max(query.words.size(), e.tokens.size());
    const double sim = denom == 0 ? 0.0 : static_cast<double>(len) / static_cast<double>(denom);
    if (!have || sim > best.similarity) {
      best = SessionMatch{e.tokens, len, sim, e.subcategory};
      have = true;
    }
  }
  return best;
}

// 1.0 for the same subcategory, 0.5 for the same top category only, else 0.
inline double taxonomy_affinity(const WebDocument& candidate, const std::optional<std::string>& matched,
                                const Taxonomy& taxonomy) {
  if (!matched) return 0.0;
  if (candidate.subcategory == *matched) return 1.0;
  auto parent = taxonomy.category_of(*matched);
  if (parent && *parent == candidate.category) return 0.5;
  return 0.0;
}

inline double semantic_score(const WebDocument& candidate, const SessionMatch& match,
                             const Taxonomy& taxonomy = Taxonomy::books()) {
  return match.similarity * taxonomy_affinity(candidate, match.matched_subcategory, taxonomy);
}

inline std::string serialize_history(const UserHistoryDb& db) {
  std::string out;
  for (const auto& [user, entries] : db.users()) {
    for (const auto& e : entries) {
      nlohmann::ordered_json obj;
      obj["user"] = user;
      obj["tokens"] = e.tokens;
      obj["subcategory"] = e.subcategory ? nlohmann::ordered_json(*e.subcategory) : nlohmann::ordered_json();
      out += obj.dump();
      out += '\n';
    }
  }
  return out;
}

inline void save_history(const UserHistoryDb& db, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_history(db));
}

inline UserHistoryDb parse_history(std::string_view text) {
  UserHistoryDb db;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto bad = [&](const std::string& why) {
      return LoadError("history line " + std::to_string(line_no) + ": " + why);
    };
    auto obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw bad("not a JSON object");
    auto user = obj.find("user");
    auto tokens = obj.find("tokens");
    auto sub = obj.find("subcategory");
    if (user == obj.end() || !user->is_string()) throw bad("bad 'user'");
    if (tokens == obj.end() || !tokens->is_array() || tokens->empty()) throw bad("bad 'tokens'");
    HistoryEntry e;
    for (const auto& t : *tokens) {
      if (!t.is_string()) throw bad("non-string token");
      e.tokens.push_back(t.get<std::string>());
    }
    if (sub != obj.end() && !sub->is_null()) {
      if (!sub->is_string()) throw bad("bad 'subcategory'");
      e.subcategory = sub->get<std::string>();
    }
    db.add(user->get<std::string>(), std::move(e));
  }
  return db;
}

inline UserHistoryDb load_history(const std::filesystem::path& path) { return parse_history(read_file(path)); }

}  // namespace webrank
