#pragma once

// Query preprocessing and per-document web dictionaries.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "webrank/corpus.hpp"
#include "webrank/errors.hpp"
#include "webrank/porter.hpp"

namespace webrank {

// Splits on every run of characters outside [A-Za-z0-9] (bytes >= 0x80
// included), lowercases, and keeps the first occurrence of each token.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (std::find(out.begin(), out.end(), cur) == out.end()) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline std::string stem(std::string_view word) { return porter_stem(word); }

struct Query {
  std::string raw;
  std::vector<std::string> words;  // distinct stems, in first-seen order
  std::size_t min_len = 0;
  std::size_t max_len = 0;
};

// Tokenize, stem, then take the shortest and longest stem lengths.
inline Query parse_query(std::string_view raw) {
  Query q;
  q.raw = std::string(raw);
  for (const auto& tok : tokenize(raw)) {
    auto s = stem(tok);
    if (std::find(q.words.begin(), q.words.end(), s) == q.words.end()) q.words.push_back(std::move(s));
  }
  if (q.words.empty()) throw EmptyQueryError("query '" + q.raw + "' has no usable words");
  q.min_len = q.words.front().size();
  q.max_len = q.words.front().size();
  for (std::size_t i = 1; i < q.words.size(); ++i) {
    q.min_len = std::min(q.min_len, q.words[i].size());
    q.max_len = std::max(q.max_len, q.words[i].size());
  }
  return q;
}

// Distinct stems of one document no longer than the query's longest word.
struct WebDictionary {
  std::string doc_id;
  std::vector<std::string> stems;  // sorted, unique

  bool contains(std::string_view w) const {
    return std::binary_search(stems.begin(), stems.end(), w);
  }
  bool empty() const { return stems.empty(); }
  std::size_t size() const { return stems.size(); }
};

// Sorted distinct stems of a document's title and body.
inline std::vector<std::string> document_stems(const WebDocument& doc) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(doc.title + " " + doc.body)) out.push_back(stem(tok));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// `sorted_stems` must be sorted and unique (as document_stems returns).
inline WebDictionary build_dictionary(std::string doc_id, std::span<const std::string> sorted_stems,
                                      std::size_t max_len) {
  if (max_len < 1) throw ContractViolation("dictionary length bound must be at least 1");
  WebDictionary dict{std::move(doc_id), {}};
  for (const auto& s : sorted_stems) {
    if (s.size() <= max_len) dict.stems.push_back(s);
  }
  return dict;
}

inline WebDictionary build_dictionary(const WebDocument& doc, std::size_t max_len) {
  const auto stems = document_stems(doc);
  return build_dictionary(doc.doc_id, stems, max_len);
}

}  // namespace webrank
