#pragma once

// Keyword found / not-found counting, majority filtering, and the content
// priority feature.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "webrank/errors.hpp"
#include "webrank/textprep.hpp"

namespace webrank {

struct ContentStats {
  std::string doc_id;
  std::size_t found = 0;
  std::size_t nfound = 0;

  std::size_t total() const { return found + nfound; }
};

inline ContentStats count_matches(const Query& query, const WebDictionary& dict) {
  if (query.words.empty()) throw ContractViolation("count_matches needs a query with at least one word");
  ContentStats stats{dict.doc_id, 0, 0};
  for (const auto& w : query.words) {
    if (dict.contains(w)) {
      ++stats.found;
    } else {
      ++stats.nfound;
    }
  }
  return stats;
}

// Drops candidates where more query words are missing than present.
// Ties are kept.
inline std::vector<ContentStats> filter_candidates(std::span<const ContentStats> stats) {
  std::vector<ContentStats> kept;
  std::copy_if(stats.begin(), stats.end(), std::back_inserter(kept),
               [](const ContentStats& s) { return s.nfound <= s.found; });
  return kept;
}

inline bool passes_filter(const ContentStats& s) { return s.nfound <= s.found; }

// Fraction of query words present in the dictionary.
inline double content_score(const ContentStats& stats) {
  if (stats.total() == 0) throw ContractViolation("content_score over zero query words");
  return static_cast<double>(stats.found) / static_cast<double>(stats.total());
}

}  // namespace webrank
