#pragma once

// The five ranking inputs per (query, candidate) pair and training-set
// construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "webrank/corpus.hpp"
#include "webrank/errors.hpp"
#include "webrank/io.hpp"
#include "webrank/priority_content.hpp"
#include "webrank/priority_time.hpp"
#include "webrank/retrieval.hpp"
#include "webrank/rng.hpp"
#include "webrank/semantics.hpp"
#include "webrank/textprep.hpp"

namespace webrank {

// Engagement weights, also used as relevance targets.
constexpr double event_weight(EventType e) {
  switch (e) {
    case EventType::view: return 0.25;
    case EventType::click: return 0.5;
    case EventType::add_to_cart: return 0.75;
    case EventType::purchase: return 1.0;
  }
  return 0.0;
}

// Strongest engagement weight among the events; 0 when there are none.
inline double feedback_score(std::span<const LogRecord> events) {
  double best = 0.0;
  for (const auto& e : events) best = std::max(best, event_weight(e.event));
  return best;
}

// Unit-cost Levenshtein distance.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

// Mean over query words of the distance to the nearest dictionary stem,
// normalized by the longer of the two strings. Exact members contribute 0;
// an empty dictionary gives 1.
inline double deviation_score(const Query& query, const WebDictionary& dict) {
  if (query.words.empty()) throw ContractViolation("deviation_score needs a query with at least one word");
  if (dict.empty()) return 1.0;
  double total = 0.0;
  for (const auto& w : query.words) {
    if (dict.contains(w)) continue;
    std::size_t best_dist = std::numeric_limits<std::size_t>::max();
    double best_ratio = 1.0;
    for (const auto& s : dict.stems) {
      const auto d = edit_distance(w, s);
      const double ratio = static_cast<double>(d) / static_cast<double>(std::max(w.size(), s.size()));
      if (d < best_dist || (d == best_dist && ratio < best_ratio)) {
        best_dist = d;
        best_ratio = ratio;
      }
    }
    total += best_ratio;
  }
  return total / static_cast<double>(query.words.size());
}

struct FeatureVector {
  static constexpr std::size_t kSize = 5;

  double content = 0.0;
  double time = 0.0;
  double feedback = 0.0;
  double semantic = 0.0;
  double deviation = 0.0;

  std::array<double, kSize> values() const { return {content, time, feedback, semantic, deviation}; }
  bool operator==(const FeatureVector&) const = default;
};

// Clamps each component into [0, 1]. Non-finite input is a caller bug.
inline FeatureVector assemble(double content, double time, double feedback, double semantic,
                              double deviation) {
  auto clamp01 = [](double v) {
    if (!std::isfinite(v)) throw ContractViolation("non-finite feature value");
    return std::clamp(v, 0.0, 1.0);
  };
  return FeatureVector{clamp01(content), clamp01(time), clamp01(feedback), clamp01(semantic),
                       clamp01(deviation)};
}

struct LabeledExample {
  FeatureVector features;
  double target = 0.0;

  bool operator==(const LabeledExample&) const = default;
};

// Session records usable as ranking evidence. Purchases are what the ranker
// predicts, so they never feed back into its inputs.
inline std::vector<LogRecord> browsing_evidence(std::span<const LogRecord> records) {
  std::vector<LogRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const LogRecord& r) { return r.event != EventType::purchase; });
  return out;
}

struct CandidateFeatures {
  std::size_t position = 0;  // in the catalog
  ContentStats stats;
  FeatureVector features;
};

// Retrieves candidates for the query, drops those failing the found/nfound
// filter, and computes the five inputs for each survivor (catalog order).
inline std::vector<CandidateFeatures> compute_features(const Query& query, std::string_view user_id,
                                                       std::span<const LogRecord> evidence,
                                                       const CatalogIndex& index, const TimeDb& time_db,
                                                       const UserHistoryDb& history) {
  struct Survivor {
    std::size_t position;
    ContentStats stats;
    WebDictionary dict;
  };
  std::vector<Survivor> kept;
  for (auto pos : index.retrieve(query)) {
    auto dict = index.dictionary(pos, query.max_len);
    auto stats = count_matches(query, dict);
    if (passes_filter(stats)) kept.push_back({pos, std::move(stats), std::move(dict)});
  }
  if (kept.empty()) return {};

  std::vector<std::string> ids;
  ids.reserve(kept.size());
  for (const auto& k : kept) ids.push_back(index.document(k.position).doc_id);
  const auto times = time_scores(ids, time_db);

  std::map<std::string_view, double> feedback;
  for (const auto& r : evidence) {
    auto& f = feedback[r.doc_id];
    f = std::max(f, event_weight(r.event));
  }

  const auto match = match_session(query, user_id, history);
  std::vector<CandidateFeatures> out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& doc = index.document(kept[i].position);
    auto fb = feedback.find(doc.doc_id);
    out.push_back(CandidateFeatures{
        kept[i].position, kept[i].stats,
        assemble(content_score(kept[i].stats), times[i], fb == feedback.end() ? 0.0 : fb->second,
                 semantic_score(doc, match, index.taxonomy()), deviation_score(query, kept[i].dict))});
  }
  return out;
}

inline constexpr std::size_t kNegativesPerVisit = 3;

// One example per visited candidate (target = strongest event weight in the
// session) plus up to kNegativesPerVisit unvisited candidates per visit,
// sampled with `seed`, at target 0. Features use the session's browsing
// evidence. Sessions without a usable query are skipped.
inline std::vector<LabeledExample> build_training_set(const CatalogIndex& index,
                                                      std::span<const Session> sessions,
                                                      const TimeDb& time_db, const UserHistoryDb& history,
                                                      std::uint64_t seed,
                                                      std::size_t negatives_per_visit = kNegativesPerVisit) {
  std::vector<LabeledExample> out;
  Rng rng(mix_seed(seed, 11));
  for (const auto& s : sessions) {
    Query q;
    try {
      q = parse_query(s.query());
    } catch (const EmptyQueryError&) {
      continue;
    }
    std::map<std::string_view, double> target;
    for (const auto& r : s.records) {
      auto& t = target[r.doc_id];
      t = std::max(t, event_weight(r.event));
    }
    const auto evidence = browsing_evidence(s.records);
    const auto cands = compute_features(q, s.user_id, evidence, index, time_db, history);

    std::vector<const CandidateFeatures*> unvisited;
    std::size_t visits = 0;
    for (const auto& c : cands) {
      auto it = target.find(index.document(c.position).doc_id);
      if (it != target.end()) {
        out.push_back(LabeledExample{c.features, it->second});
        ++visits;
      } else {
        unvisited.push_back(&c);
      }
    }
    const auto n_neg = std::min(unvisited.size(), visits * negatives_per_visit);
    for (std::size_t i = 0; i < n_neg; ++i) {
      const auto j = i + rng.below(unvisited.size() - i);
      std::swap(unvisited[i], unvisited[j]);
      out.push_back(LabeledExample{unvisited[i]->features, 0.0});
    }
  }
  return out;
}

inline std::string serialize_training_set(std::span<const LabeledExample> examples) {
  std::string out;
  for (const auto& e : examples) {
    nlohmann::ordered_json obj;
    const auto v = e.features.values();
    obj["f"] = std::vector<double>(v.begin(), v.end());
    obj["y"] = e.target;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

inline void save_training_set(std::span<const LabeledExample> examples, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_training_set(examples));
}

}  // namespace webrank
