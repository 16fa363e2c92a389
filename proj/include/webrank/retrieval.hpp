#pragma once

// Local keyword retrieval over a catalog: any document sharing at least one
// stem with the query is a candidate.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "webrank/corpus.hpp"
#include "webrank/textprep.hpp"

namespace webrank {

class CatalogIndex {
 public:
  explicit CatalogIndex(Catalog catalog, Taxonomy taxonomy = Taxonomy::books())
      : catalog_(std::move(catalog)), taxonomy_(std::move(taxonomy)) {
    std::unordered_map<std::string, std::string> stem_cache;
    stems_.reserve(catalog_.size());
    for (std::size_t i = 0; i < catalog_.size(); ++i) {
      const auto& d = catalog_[i];
      if (!by_id_.emplace(d.doc_id, i).second) throw InputError("duplicate document id " + d.doc_id);
      std::vector<std::string> stems;
      for (auto& tok : tokenize(d.title + " " + d.body)) {
        auto it = stem_cache.find(tok);
        if (it == stem_cache.end()) it = stem_cache.emplace(tok, stem(tok)).first;
        stems.push_back(it->second);
      }
      std::sort(stems.begin(), stems.end());
      stems.erase(std::unique(stems.begin(), stems.end()), stems.end());
      for (const auto& s : stems) postings_[s].push_back(i);
      stems_.push_back(std::move(stems));
    }
  }

  const Catalog& catalog() const { return catalog_; }
  const Taxonomy& taxonomy() const { return taxonomy_; }
  std::size_t size() const { return catalog_.size(); }
  const WebDocument& document(std::size_t i) const { return catalog_[i]; }

  std::optional<std::size_t> position(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  const WebDocument* find(std::string_view doc_id) const {
    auto p = position(doc_id);
    return p ? &catalog_[*p] : nullptr;
  }

  std::span<const std::string> stems(std::size_t i) const { return stems_[i]; }

  WebDictionary dictionary(std::size_t i, std::size_t max_len) const {
    return build_dictionary(catalog_[i].doc_id, stems_[i], max_len);
  }

  // Catalog positions of documents sharing a stem with the query, ascending.
  std::vector<std::size_t> retrieve(const Query& query) const {
    std::vector<std::size_t> out;
    for (const auto& w : query.words) {
      auto it = postings_.find(w);
      if (it != postings_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  Catalog catalog_;
  Taxonomy taxonomy_;
  std::vector<std::vector<std::string>> stems_;
  std::unordered_map<std::string, std::vector<std::size_t>> postings_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace webrank
