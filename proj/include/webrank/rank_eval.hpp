#pragma once

// Ranking by network output, precision/recall, k-fold splitting and the
// access-sequence-length sweep.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "webrank/bpnn.hpp"
#include "webrank/corpus.hpp"
#include "webrank/errors.hpp"
#include "webrank/features.hpp"
#include "webrank/priority_time.hpp"
#include "webrank/retrieval.hpp"
#include "webrank/rng.hpp"
#include "webrank/semantics.hpp"
#include "webrank/textprep.hpp"

namespace webrank {

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  Query query;
  std::vector<RankedEntry> entries;  // descending score, ties by ascending doc id
};

inline void sort_ranked(std::vector<RankedEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

inline std::vector<double> to_input(const FeatureVector& f) {
  const auto v = f.values();
  return {v.begin(), v.end()};
}

// Scores each filtered candidate with the network's first output.
inline RankedList rank(const Query& query, std::string_view user_id, std::span<const LogRecord> evidence,
                       const CatalogIndex& index, const TimeDb& time_db, const UserHistoryDb& history,
                       const BpNetwork& net) {
  RankedList out{query, {}};
  for (const auto& c : compute_features(query, user_id, evidence, index, time_db, history)) {
    out.entries.push_back({index.document(c.position).doc_id, predict(net, to_input(c.features)).front()});
  }
  sort_ranked(out.entries);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

using ItemSets = std::map<std::string, std::set<std::string>>;

struct HitCounts {
  std::size_t hits = 0;
  std::size_t recommended = 0;
  std::size_t relevant = 0;
};

inline HitCounts count_hits(const ItemSets& recommendations, const ItemSets& truth) {
  HitCounts c;
  for (const auto& [user, recs] : recommendations) {
    c.recommended += recs.size();
    auto t = truth.find(user);
    if (t == truth.end()) continue;
    for (const auto& item : recs) c.hits += t->second.count(item);
  }
  for (const auto& [user, items] : truth) c.relevant += items.size();
  return c;
}

// sum_u |R(u) & T(u)| / sum_u |R(u)|
inline double precision(const ItemSets& recommendations, const ItemSets& truth) {
  const auto c = count_hits(recommendations, truth);
  if (c.recommended == 0) throw MetricError("precision is undefined without recommendations");
  return static_cast<double>(c.hits) / static_cast<double>(c.recommended);
}

// sum_u |R(u) & T(u)| / sum_u |T(u)|
inline double recall(const ItemSets& recommendations, const ItemSets& truth) {
  const auto c = count_hits(recommendations, truth);
  if (c.relevant == 0) throw MetricError("recall is undefined without relevant items");
  return static_cast<double>(c.hits) / static_cast<double>(c.relevant);
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

template <typename T>
struct Fold {
  std::vector<T> train;
  std::vector<T> test;
};

// Seeded shuffle, then k contiguous parts whose sizes differ by at most one.
// Fold i tests on part i and trains on the rest.
template <typename T>
std::vector<Fold<T>> kfold_split(std::span<const T> items, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InputError("k-fold needs k >= 2");
  if (items.size() < k) {
    throw InsufficientDataError("cannot split " + std::to_string(items.size()) + " items into " +
                                std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 41));
  rng.shuffle(order.begin(), order.end());

  std::vector<std::size_t> part(items.size());
  const std::size_t base = items.size() / k;
  const std::size_t extra = items.size() % k;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    for (std::size_t n = 0; n < len; ++n) part[order[pos++]] = p;
  }

  std::vector<Fold<T>> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      (part[i] == f ? folds[f].test : folds[f].train).push_back(items[i]);
    }
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Rankers and model fitting
// ---------------------------------------------------------------------------

// Maps (query, user, browsing evidence) to a ranking.
using Ranker = std::function<RankedList(const Query&, const std::string&, std::span<const LogRecord>)>;

struct RankerModel {
  BpNetwork net;
  TimeDb time_db;
  UserHistoryDb history;
};

struct ModelConfig {
  LayerSizes sizes;
  Activation hidden_activation = Activation::tansig;
  Activation output_activation = Activation::logistic;
  TrainConfig train;
};

struct FitResult {
  RankerModel model;
  double initial_loss = 0.0;
  std::vector<double> loss_history;
  std::size_t n_examples = 0;
};

inline std::vector<Sample> to_samples(std::span<const LabeledExample> examples) {
  std::vector<Sample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({to_input(e.features), {e.target}});
  return out;
}

// Builds the time and history stores from `sessions`, derives the training
// set and trains a freshly initialized network on it.
inline FitResult fit_ranker(const CatalogIndex& index, std::span<const Session> sessions, const ModelConfig& cfg) {
  std::vector<LogRecord> records;
  for (const auto& s : sessions) records.insert(records.end(), s.records.begin(), s.records.end());
  std::stable_sort(records.begin(), records.end(),
                   [](const LogRecord& a, const LogRecord& b) { return a.timestamp < b.timestamp; });

  FitResult out;
  out.model.time_db = build_time_db(records);
  out.model.history = build_history(sessions, index.catalog());
  const auto examples = build_training_set(index, sessions, out.model.time_db, out.model.history, cfg.train.seed);
  if (examples.empty()) throw InsufficientDataError("no training examples could be built from the sessions");
  out.n_examples = examples.size();

  const auto samples = to_samples(examples);
  auto net = init_network(cfg.train.seed, cfg.sizes, cfg.hidden_activation, cfg.output_activation);
  auto trained = train(std::move(net), samples, cfg.train);
  out.model.net = std::move(trained.net);
  out.initial_loss = trained.initial_loss;
  out.loss_history = std::move(trained.loss_history);
  return out;
}

inline Ranker network_ranker(const CatalogIndex& index, std::shared_ptr<const RankerModel> model) {
  return [&index, model](const Query& q, const std::string& user, std::span<const LogRecord> evidence) {
    return rank(q, user, evidence, index, model->time_db, model->history, model->net);
  };
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Baseline: the same filtered candidates in a uniformly random order, seeded
// per (user, query) so repeated calls agree.
inline Ranker random_ranker(const CatalogIndex& index, std::uint64_t seed) {
  return [&index, seed](const Query& q, const std::string& user, std::span<const LogRecord>) {
    RankedList out{q, {}};
    for (auto pos : index.retrieve(q)) {
      if (passes_filter(count_matches(q, index.dictionary(pos, q.max_len)))) {
        out.entries.push_back({index.document(pos).doc_id, 0.0});
      }
    }
    Rng rng(mix_seed(seed, detail::fnv1a(q.raw, detail::fnv1a(user))));
    rng.shuffle(out.entries.begin(), out.entries.end());
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
      out.entries[i].score = 1.0 - static_cast<double>(i) / static_cast<double>(out.entries.size());
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct UserCounts {
  std::string user_id;
  std::size_t recommended = 0;  // |R(u)|
  std::size_t relevant = 0;     // |T(u)|
  std::size_t hits = 0;
};

struct EvalReport {
  std::size_t fold = 0;
  std::optional<std::size_t> seq_len;  // nullopt: whole sessions observed
  double precision = 0.0;
  double recall = 0.0;
  std::size_t n_users = 0;
  std::size_t top_n = 10;
  std::vector<UserCounts> per_user;
};

inline constexpr std::size_t kDefaultTopN = 10;

// Recommendation lists and purchase truth for the test sessions.
//
// T(u) is every document u purchased in `test`; users without purchases are
// not evaluated. R(u) merges the rankings of u's test sessions (best score
// per document) and keeps the top_n. Each ranking sees only the browsing
// evidence of the session's first `seq_len` accesses.
inline EvalReport evaluate_sessions(const Ranker& ranker, std::span<const Session> test,
                                    std::optional<std::size_t> seq_len, std::size_t top_n,
                                    std::size_t fold = 0) {
  std::map<std::string, std::vector<const Session*>> by_user;
  ItemSets truth;
  for (const auto& s : test) {
    by_user[s.user_id].push_back(&s);
    for (const auto& r : s.records) {
      if (r.event == EventType::purchase) truth[s.user_id].insert(r.doc_id);
    }
  }

  ItemSets recs;
  for (const auto& [user, items] : truth) {
    std::map<std::string, double> merged;
    for (const auto* s : by_user[user]) {
      Query q;
      try {
        q = parse_query(s->query());
      } catch (const EmptyQueryError&) {
        continue;
      }
      const auto observed = seq_len ? access_prefix(*s, *seq_len) : s->records;
      const auto ranked = ranker(q, user, browsing_evidence(observed));
      for (const auto& e : ranked.entries) {
        auto [it, inserted] = merged.try_emplace(e.doc_id, e.score);
        if (!inserted) it->second = std::max(it->second, e.score);
      }
    }
    std::vector<RankedEntry> all;
    for (const auto& [doc, score] : merged) all.push_back({doc, score});
    sort_ranked(all);
    auto& r = recs[user];
    for (std::size_t i = 0; i < all.size() && i < top_n; ++i) r.insert(all[i].doc_id);
  }

  EvalReport report;
  report.fold = fold;
  report.seq_len = seq_len;
  report.top_n = top_n;
  report.n_users = truth.size();
  for (const auto& [user, items] : truth) {
    UserCounts uc{user, recs[user].size(), items.size(), 0};
    for (const auto& d : recs[user]) uc.hits += items.count(d);
    report.per_user.push_back(std::move(uc));
  }
  const auto c = count_hits(recs, truth);
  report.precision = c.recommended ? static_cast<double>(c.hits) / static_cast<double>(c.recommended) : 0.0;
  report.recall = c.relevant ? static_cast<double>(c.hits) / static_cast<double>(c.relevant) : 0.0;
  return report;
}

// One report per length, in the given order.
inline std::vector<EvalReport> sweep_sequence_length(const Ranker& ranker, std::span<const Session> test,
                                                     std::span<const std::size_t> lengths, std::size_t top_n,
                                                     std::size_t fold = 0) {
  std::vector<EvalReport> out;
  for (auto len : lengths) out.push_back(evaluate_sessions(ranker, test, len, top_n, fold));
  return out;
}

// Trains a ranker on the training part of a fold.
using RankerTrainer = std::function<Ranker(std::span<const Session>)>;

// For each fold: one unrestricted report followed by one per sweep length.
inline std::vector<EvalReport> cross_validate(std::span<const Session> sessions, std::size_t k,
                                              std::span<const std::size_t> lengths, std::size_t top_n,
                                              std::uint64_t seed, const RankerTrainer& trainer) {
  std::vector<EvalReport> out;
  const auto folds = kfold_split(sessions, k, seed);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto ranker = trainer(folds[f].train);
    out.push_back(evaluate_sessions(ranker, folds[f].test, std::nullopt, top_n, f));
    for (auto& r : sweep_sequence_length(ranker, folds[f].test, lengths, top_n, f)) out.push_back(std::move(r));
  }
  return out;
}

inline std::string reports_to_json(std::span<const EvalReport> reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json obj;
    obj["fold"] = r.fold;
    obj["seq_len"] = r.seq_len ? nlohmann::ordered_json(*r.seq_len) : nlohmann::ordered_json();
    obj["precision"] = r.precision;
    obj["recall"] = r.recall;
    obj["n_users"] = r.n_users;
    obj["top_n"] = r.top_n;
    arr.push_back(std::move(obj));
  }
  return arr.dump(1) + "\n";
}

inline std::string format_report_table(std::span<const EvalReport> reports) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-6s %-8s %10s %10s %8s %6s\n", "fold", "seq_len", "precision", "recall",
                "users", "top_n");
  out += line;
  for (const auto& r : reports) {
    const std::string len = r.seq_len ? std::to_string(*r.seq_len) : "all";
    std::snprintf(line, sizeof line, "%-6zu %-8s %10.4f %10.4f %8zu %6zu\n", r.fold, len.c_str(), r.precision,
                  r.recall, r.n_users, r.top_n);
    out += line;
  }
  return out;
}

}  // namespace webrank
