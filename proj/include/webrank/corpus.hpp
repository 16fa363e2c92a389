#pragma once

// Catalog and web-log data model: log ingestion, sessionization, and the
// seeded synthetic bookstore generator.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "webrank/errors.hpp"
#include "webrank/io.hpp"
#include "webrank/rng.hpp"

namespace webrank {

enum class EventType { view, click, add_to_cart, purchase };

inline constexpr std::array<EventType, 4> kEventTypes = {
    EventType::view, EventType::click, EventType::add_to_cart, EventType::purchase};

constexpr std::string_view to_string(EventType e) {
  switch (e) {
    case EventType::view: return "view";
    case EventType::click: return "click";
    case EventType::add_to_cart: return "add_to_cart";
    case EventType::purchase: return "purchase";
  }
  return "view";
}

constexpr std::optional<EventType> parse_event_type(std::string_view s) {
  for (auto e : kEventTypes) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Taxonomy
// ---------------------------------------------------------------------------

struct Category {
  std::string name;
  std::vector<std::string> subcategories;
};

// Two-level category tree. Subcategory names are unique across the tree, so
// a subcategory alone identifies its parent.
class Taxonomy {
 public:
  Taxonomy() = default;
  explicit Taxonomy(std::vector<Category> categories) : categories_(std::move(categories)) {
    for (const auto& c : categories_) {
      for (const auto& s : c.subcategories) {
        if (!parent_.emplace(s, c.name).second) {
          throw InputError("duplicate subcategory in taxonomy: " + s);
        }
      }
    }
  }

  // The 5 x 6 bookstore tree used by the synthetic corpus.
  static Taxonomy books() {
    return Taxonomy({
        {"education",
         {"textbooks", "exam preparation", "language learning", "early childhood",
          "teaching methods", "reference"}},
        {"humanities and social sciences",
         {"history", "philosophy", "psychology", "economics", "law", "politics"}},
        {"technology",
         {"popular science", "computers", "architecture", "medicine",
          "agriculture and forestry", "science"}},
        {"literature", {"fiction", "poetry", "essays", "classics", "biography", "drama"}},
        {"life", {"cooking", "travel", "health", "parenting", "home and garden", "sports"}},
    });
  }

  const std::vector<Category>& categories() const { return categories_; }

  std::vector<std::string> subcategories() const {
    std::vector<std::string> out;
    for (const auto& c : categories_) {
      out.insert(out.end(), c.subcategories.begin(), c.subcategories.end());
    }
    return out;
  }

  std::optional<std::string> category_of(std::string_view subcategory) const {
    auto it = parent_.find(std::string(subcategory));
    if (it == parent_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view category, std::string_view subcategory) const {
    auto parent = category_of(subcategory);
    return parent && *parent == category;
  }

 private:
  std::vector<Category> categories_;
  std::map<std::string, std::string> parent_;
};

// ---------------------------------------------------------------------------
// Documents and log records
// ---------------------------------------------------------------------------

struct WebDocument {
  std::string doc_id;
  std::string title;
  std::string body;
  std::string category;
  std::string subcategory;
  std::string url;

  bool operator==(const WebDocument&) const = default;
};

using Catalog = std::vector<WebDocument>;

struct LogRecord {
  std::int64_t timestamp = 0;
  std::string user_id;
  std::string session_id;
  std::string query;
  std::string doc_id;
  double dwell_seconds = 0.0;
  EventType event = EventType::view;

  bool operator==(const LogRecord&) const = default;
};

struct IngestStats {
  std::size_t accepted = 0;
  std::size_t skipped = 0;
};

struct LoadedLog {
  std::vector<LogRecord> records;
  IngestStats stats;
};

namespace detail {

inline std::optional<std::string> string_field(const nlohmann::json& obj, const char* key,
                                               bool allow_empty) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  auto value = it->get<std::string>();
  if (!allow_empty && value.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

// Parses one log line. Returns nullopt for anything incomplete or malformed:
// a missing or mistyped key, a negative or non-finite dwell, an unknown event.
inline std::optional<LogRecord> parse_log_line(std::string_view line) {
  auto obj = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) return std::nullopt;

  LogRecord rec;
  auto ts = obj.find("ts");
  if (ts == obj.end() || !ts->is_number_integer()) return std::nullopt;
  rec.timestamp = ts->get<std::int64_t>();

  auto user = detail::string_field(obj, "user", false);
  auto session = detail::string_field(obj, "session", false);
  auto query = detail::string_field(obj, "query", true);
  auto doc = detail::string_field(obj, "doc", false);
  if (!user || !session || !query || !doc) return std::nullopt;
  rec.user_id = std::move(*user);
  rec.session_id = std::move(*session);
  rec.query = std::move(*query);
  rec.doc_id = std::move(*doc);

  auto dwell = obj.find("dwell");
  if (dwell == obj.end() || !dwell->is_number()) return std::nullopt;
  rec.dwell_seconds = dwell->get<double>();
  if (!std::isfinite(rec.dwell_seconds) || rec.dwell_seconds < 0.0) return std::nullopt;

  auto event = detail::string_field(obj, "event", false);
  if (!event) return std::nullopt;
  auto kind = parse_event_type(*event);
  if (!kind) return std::nullopt;
  rec.event = *kind;
  return rec;
}

inline std::string to_log_line(const LogRecord& rec) {
  nlohmann::ordered_json obj;
  obj["ts"] = rec.timestamp;
  obj["user"] = rec.user_id;
  obj["session"] = rec.session_id;
  obj["query"] = rec.query;
  obj["doc"] = rec.doc_id;
  obj["dwell"] = rec.dwell_seconds;
  obj["event"] = std::string(to_string(rec.event));
  return obj.dump();
}

inline LoadedLog read_log(std::istream& in) {
  LoadedLog out;
  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    if (auto rec = parse_log_line(line)) {
      out.records.push_back(std::move(*rec));
      ++out.stats.accepted;
    } else {
      ++out.stats.skipped;
    }
  }
  return out;
}

inline LoadedLog load_log(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_log(in);
}

inline std::string serialize_log(std::span<const LogRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_log_line(r);
    out += '\n';
  }
  return out;
}

inline void save_log(std::span<const LogRecord> records, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_log(records));
}

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct Session {
  std::string user_id;
  std::string session_id;
  std::vector<LogRecord> records;          // sorted by (timestamp, input order)
  std::vector<std::string> access_sequence;  // doc ids, adjacent repeats collapsed

  // The first non-empty query recorded in the session.
  std::string_view query() const {
    for (const auto& r : records) {
      if (!r.query.empty()) return r.query;
    }
    return {};
  }
};

inline std::vector<Session> sessionize(std::span<const LogRecord> records) {
  std::vector<Session> sessions;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& r : records) {
    auto [it, inserted] = slot.try_emplace({r.user_id, r.session_id}, sessions.size());
    if (inserted) sessions.push_back(Session{r.user_id, r.session_id, {}, {}});
    sessions[it->second].records.push_back(r);
  }
  for (auto& s : sessions) {
    std::stable_sort(s.records.begin(), s.records.end(),
                     [](const LogRecord& a, const LogRecord& b) { return a.timestamp < b.timestamp; });
    for (const auto& r : s.records) {
      if (s.access_sequence.empty() || s.access_sequence.back() != r.doc_id) {
        s.access_sequence.push_back(r.doc_id);
      }
    }
  }
  return sessions;
}

// Records that fall on the session's first `max_accesses` page accesses.
inline std::vector<LogRecord> access_prefix(const Session& session, std::size_t max_accesses) {
  std::vector<LogRecord> out;
  std::size_t accesses = 0;
  const std::string* current = nullptr;
  for (const auto& r : session.records) {
    if (current == nullptr || *current != r.doc_id) {
      ++accesses;
      current = &r.doc_id;
    }
    if (accesses > max_accesses) break;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Catalog and sidecar files
// ---------------------------------------------------------------------------

inline std::string serialize_catalog(const Catalog& catalog) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& d : catalog) {
    nlohmann::ordered_json obj;
    obj["id"] = d.doc_id;
    obj["title"] = d.title;
    obj["body"] = d.body;
    obj["category"] = d.category;
    obj["subcategory"] = d.subcategory;
    obj["url"] = d.url;
    arr.push_back(std::move(obj));
  }
  return arr.dump(1) + "\n";
}

inline void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_catalog(catalog));
}

inline Catalog parse_catalog(std::string_view text, const Taxonomy& taxonomy = Taxonomy::books()) {
  auto arr = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) throw LoadError("catalog is not a JSON array");
  Catalog out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& obj = arr[i];
    auto bad = [i](const std::string& why) {
      return LoadError("catalog entry " + std::to_string(i) + ": " + why);
    };
    if (!obj.is_object()) throw bad("not an object");
    WebDocument d;
    for (auto [key, field] : {std::pair{"id", &d.doc_id}, {"title", &d.title}, {"body", &d.body},
                              {"category", &d.category}, {"subcategory", &d.subcategory},
                              {"url", &d.url}}) {
      auto v = detail::string_field(obj, key, true);
      if (!v) throw bad(std::string("missing or non-string '") + key + "'");
      *field = std::move(*v);
    }
    if (d.doc_id.empty()) throw bad("empty id");
    if (d.body.empty()) throw bad("empty body");
    if (!taxonomy.contains(d.category, d.subcategory)) {
      throw bad("'" + d.category + "/" + d.subcategory + "' is not in the taxonomy");
    }
    if (!seen.insert(d.doc_id).second) throw bad("duplicate id " + d.doc_id);
    out.push_back(std::move(d));
  }
  return out;
}

inline Catalog load_catalog(const std::filesystem::path& path,
                            const Taxonomy& taxonomy = Taxonomy::books()) {
  return parse_catalog(read_file(path), taxonomy);
}

inline void save_ground_truth(const std::map<std::string, std::string>& planted,
                              const std::filesystem::path& path) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& [user, sub] : planted) obj[user] = sub;
  write_file_atomic(path, obj.dump(1) + "\n");
}

inline std::map<std::string, std::string> load_ground_truth(const std::filesystem::path& path) {
  auto text = read_file(path);
  auto obj = nlohmann::json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw LoadError("ground truth is not a JSON object");
  std::map<std::string, std::string> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!it.value().is_string()) throw LoadError("ground truth entry '" + it.key() + "' is not a string");
    out.emplace(it.key(), it.value().get<std::string>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<std::string_view, 32> kGenericWords = {
    "guide",     "complete", "introduction", "modern",    "essential", "practical", "edition",
    "handbook",  "illustrated", "collection", "revised",  "annual",    "concise",   "advanced",
    "beginner",  "companion", "selected",    "pocket",    "volume",    "series",    "notes",
    "expanded",  "definitive", "portable",   "ultimate",  "primer",    "workbook",  "anthology",
    "perspectives", "foundations", "journeys", "lessons"};

// Pronounceable pseudo-words built from consonant-vowel syllables with a
// consonant tail. The letters are chosen so no English suffix rule applies,
// which keeps every generated topic word its own stem.
inline std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view kOnset = "bdgkmnprtvz";
  static constexpr std::string_view kVowel = "aou";
  static constexpr std::string_view kTail = "kmdpz";
  std::string w;
  const auto syllables = rng.between(2, 3);
  for (std::int64_t i = 0; i < syllables; ++i) {
    w += kOnset[rng.below(kOnset.size())];
    w += kVowel[rng.below(kVowel.size())];
  }
  w += kTail[rng.below(kTail.size())];
  return w;
}

inline std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

inline std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) out += (c == ' ') ? '-' : c;
  return out;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

}  // namespace detail

inline constexpr std::size_t kTopicWordsPerSubcategory = 16;

// Deterministic bookstore catalog. Documents are spread round-robin over the
// taxonomy's subcategories; each subcategory owns a private pool of topic
// words so keyword retrieval separates subcategories.
inline Catalog generate_catalog(std::uint64_t seed, std::size_t n_books,
                                const Taxonomy& taxonomy = Taxonomy::books()) {
  Catalog catalog;
  if (n_books == 0) return catalog;
  const auto subs = taxonomy.subcategories();
  if (subs.empty()) throw InputError("taxonomy has no subcategories");

  Rng pool_rng(mix_seed(seed, 1));
  std::set<std::string> used;
  std::map<std::string, std::vector<std::string>> pools;
  for (const auto& sub : subs) {
    auto& pool = pools[sub];
    for (auto& w : detail::words_of(sub)) {
      if (w != "and" && used.insert(w).second) pool.push_back(w);
    }
    while (pool.size() < kTopicWordsPerSubcategory) {
      auto w = detail::pseudo_word(pool_rng);
      if (used.insert(w).second) pool.push_back(std::move(w));
    }
  }

  Rng rng(mix_seed(seed, 2));
  catalog.reserve(n_books);
  for (std::size_t i = 0; i < n_books; ++i) {
    const auto& sub = subs[i % subs.size()];
    const auto category = *taxonomy.category_of(sub);
    const auto& pool = pools[sub];

    // Sibling subcategories in the same category bleed into body text.
    std::vector<const std::vector<std::string>*> siblings;
    for (const auto& c : taxonomy.categories()) {
      if (c.name != category) continue;
      for (const auto& s : c.subcategories) {
        if (s != sub) siblings.push_back(&pools[s]);
      }
    }

    std::vector<std::string> title_words;
    if (rng.chance(0.5)) title_words.emplace_back(detail::kGenericWords[rng.below(detail::kGenericWords.size())]);
    const auto n_topic = rng.between(2, 3);
    std::vector<std::string> topic;
    while (static_cast<std::int64_t>(topic.size()) < n_topic) {
      const auto& w = detail::pick(rng, pool);
      if (std::find(topic.begin(), topic.end(), w) == topic.end()) topic.push_back(w);
    }
    title_words.insert(title_words.end(), topic.begin(), topic.end());

    std::string title;
    for (const auto& w : title_words) {
      if (!title.empty()) title += ' ';
      title += detail::capitalize(w);
    }

    std::string body;
    const auto n_body = rng.between(14, 22);
    for (std::int64_t k = 0; k < n_body; ++k) {
      const double u = rng.uniform();
      std::string w;
      if (u < 0.55 || siblings.empty()) {
        w = detail::pick(rng, pool);
      } else if (u < 0.80) {
        w = std::string(detail::kGenericWords[rng.below(detail::kGenericWords.size())]);
      } else {
        w = detail::pick(rng, *siblings[rng.below(siblings.size())]);
      }
      if (!body.empty()) body += ' ';
      body += (k == 0) ? detail::capitalize(w) : w;
    }
    body += '.';

    char id[32];
    std::snprintf(id, sizeof id, "B%05zu", i + 1);
    WebDocument d;
    d.doc_id = id;
    d.title = std::move(title);
    d.body = std::move(body);
    d.category = category;
    d.subcategory = sub;
    d.url = "https://books.example.com/" + detail::slug(sub) + "/" + d.doc_id;
    catalog.push_back(std::move(d));
  }
  return catalog;
}

struct SyntheticLog {
  std::vector<LogRecord> records;
  std::map<std::string, std::string> planted;  // user id -> preferred subcategory
};

// Minimum share of each user's purchases that land in the planted subcategory.
inline constexpr double kPlantedPurchaseShare = 0.7;

// Seeded clickstream over `catalog`.
//
// Every user gets a planted subcategory. A session picks a target book
// (from the planted subcategory 80% of the time), issues a query made of
// words from its title with some noise, then browses 3-10 search results in
// the same subcategory. Bought pages collect longer dwell times and usually a
// click and an add-to-cart before the purchase. Off-preference purchases are
// only emitted while they keep the user's planted share at or above
// kPlantedPurchaseShare, so the bound holds for every prefix of the stream.
inline SyntheticLog generate_transactions(const Catalog& catalog, std::uint64_t seed,
                                          std::size_t n_events, std::size_t n_users) {
  SyntheticLog out;
  if (n_events == 0) return out;
  if (catalog.empty()) throw InputError("cannot generate transactions over an empty catalog");
  if (n_users == 0) throw InputError("n_users must be positive when n_events > 0");

  std::vector<std::string> subs;
  std::map<std::string, std::vector<std::size_t>> by_sub;
  std::vector<std::vector<std::string>> title_words(catalog.size());
  std::vector<std::set<std::string>> doc_words(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& d = catalog[i];
    auto [it, inserted] = by_sub.try_emplace(d.subcategory);
    if (inserted) subs.push_back(d.subcategory);
    it->second.push_back(i);
    title_words[i] = detail::words_of(d.title);
    auto body = detail::words_of(d.body);
    doc_words[i].insert(title_words[i].begin(), title_words[i].end());
    doc_words[i].insert(body.begin(), body.end());
  }

  Rng rng(mix_seed(seed, 3));
  std::vector<std::string> users;
  for (std::size_t u = 0; u < n_users; ++u) {
    char id[32];
    std::snprintf(id, sizeof id, "U%04zu", u + 1);
    users.emplace_back(id);
    out.planted[users.back()] = detail::pick(rng, subs);
  }

  struct PurchaseTally {
    std::size_t planted = 0;
    std::size_t total = 0;
  };
  std::map<std::string, PurchaseTally> tally;

  std::int64_t clock = 1'700'000'000;
  std::size_t session_no = 0;
  auto emit = [&](const std::string& user, const std::string& session, const std::string& query,
                  const std::string& doc, double dwell, EventType e) {
    clock += static_cast<std::int64_t>(dwell) + rng.between(1, 5);
    out.records.push_back(LogRecord{clock, user, session, query, doc, dwell, e});
  };

  while (out.records.size() < n_events) {
    const auto& user = users[rng.below(users.size())];
    const auto& planted = out.planted[user];
    char sid[32];
    std::snprintf(sid, sizeof sid, "S%06zu", ++session_no);
    const std::string session = sid;

    const bool on_pref = subs.size() == 1 || rng.chance(0.8);
    std::string sub = planted;
    while (!on_pref && sub == planted) sub = detail::pick(rng, subs);
    const auto& members = by_sub[sub];
    const auto target = detail::pick(rng, members);

    // Query: 1-3 distinct title words of the target, occasionally noisy.
    std::vector<std::string> clean;
    auto candidates = title_words[target];
    rng.shuffle(candidates.begin(), candidates.end());
    const auto n_words = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(rng.between(1, 3)));
    for (std::size_t k = 0; k < n_words; ++k) {
      if (std::find(clean.begin(), clean.end(), candidates[k]) == clean.end()) clean.push_back(candidates[k]);
    }
    auto shown = clean;
    if (shown.size() > 1 && rng.chance(0.15)) {
      auto& w = shown[rng.below(shown.size())];
      if (w.size() > 3) w.erase(1 + rng.below(w.size() - 1), 1);  // dropped letter
    }
    if (rng.chance(0.1)) {
      shown.emplace_back(detail::kGenericWords[rng.below(detail::kGenericWords.size())]);
    }
    std::string query;
    for (const auto& w : shown) {
      if (!query.empty()) query += ' ';
      query += w;
    }

    // Search results: subcategory members sharing a clean query word.
    std::vector<std::size_t> results;
    for (auto idx : members) {
      if (idx == target) continue;
      for (const auto& w : clean) {
        if (doc_words[idx].count(w)) {
          results.push_back(idx);
          break;
        }
      }
    }
    rng.shuffle(results.begin(), results.end());
    const auto k_browse = static_cast<std::size_t>(rng.between(3, 10));
    std::vector<std::size_t> browse{target};
    for (std::size_t k = 0; k < results.size() && browse.size() < k_browse; ++k) browse.push_back(results[k]);
    rng.shuffle(browse.begin(), browse.end());

    std::set<std::size_t> wants;
    if (on_pref) {
      wants.insert(target);
      for (auto idx : browse) {
        if (idx != target && wants.size() < 3 && rng.chance(0.2)) wants.insert(idx);
      }
    } else if (rng.chance(0.3)) {
      wants.insert(target);
    }

    clock += rng.between(60, 3600);
    for (auto idx : browse) {
      if (out.records.size() >= n_events) break;
      const auto& doc = catalog[idx].doc_id;
      const bool buy = wants.count(idx) > 0;
      double dwell = buy ? rng.uniform(60.0, 240.0) : rng.uniform(5.0, 60.0);
      if (sub == planted) dwell *= 1.5;
      dwell = std::round(dwell * 10.0) / 10.0;

      emit(user, session, query, doc, dwell, EventType::view);
      if (out.records.size() >= n_events) break;
      const bool click = buy ? rng.chance(0.85) : rng.chance(0.3);
      const bool cart = buy ? rng.chance(0.75) : rng.chance(0.05);
      if (click) {
        emit(user, session, query, doc, 0.0, EventType::click);
        if (out.records.size() >= n_events) break;
      }
      if (cart) {
        emit(user, session, query, doc, 0.0, EventType::add_to_cart);
        if (out.records.size() >= n_events) break;
      }
      if (buy) {
        auto& t = tally[user];
        const bool in_planted = catalog[idx].subcategory == planted;
        const double share_after = static_cast<double>(t.planted + (in_planted ? 1 : 0)) /
                                   static_cast<double>(t.total + 1);
        if (in_planted || share_after >= kPlantedPurchaseShare) {
          emit(user, session, query, doc, 0.0, EventType::purchase);
          t.total += 1;
          t.planted += in_planted ? 1 : 0;
        }
      }
    }
  }
  return out;
}

}  // namespace webrank
