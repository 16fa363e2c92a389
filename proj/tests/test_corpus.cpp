#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "webrank/corpus.hpp"
#include "webrank/rng.hpp"

using namespace webrank;
namespace fs = std::filesystem;

namespace {

LogRecord record(std::int64_t ts, std::string user, std::string session, std::string doc,
                 EventType e = EventType::view, double dwell = 1.0) {
  return LogRecord{ts, std::move(user), std::move(session), "data mining", std::move(doc), dwell, e};
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "webrank_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(LoadLog, WellFormedLineMapsEveryField) {
  const auto rec = parse_log_line(
      R"({"ts":1700000000,"user":"u1","session":"s1","query":"AI books","doc":"B1","dwell":12.5,"event":"add_to_cart"})");
  ASSERT_TRUE(rec.has_value());
  EXPECT_EQ(rec->timestamp, 1700000000);
  EXPECT_EQ(rec->user_id, "u1");
  EXPECT_EQ(rec->session_id, "s1");
  EXPECT_EQ(rec->query, "AI books");
  EXPECT_EQ(rec->doc_id, "B1");
  EXPECT_DOUBLE_EQ(rec->dwell_seconds, 12.5);
  EXPECT_EQ(rec->event, EventType::add_to_cart);
}

TEST(LoadLog, UnknownKeysAreIgnored) {
  EXPECT_TRUE(parse_log_line(
      R"({"ts":1,"user":"u","session":"s","query":"q","doc":"d","dwell":0,"event":"view","referrer":"x"})"));
}

TEST(LoadLog, IncompleteLinesAreSkippedAndCounted) {
  std::istringstream in(
      R"({"ts":1,"user":"u","session":"s","query":"q","doc":"d","dwell":1,"event":"view"})" "\n"
      R"({"ts":2,"user":"u","session":"s","query":"q","dwell":1,"event":"view"})" "\n"           // no doc
      R"({"ts":3,"user":"u","session":"s","query":"q","doc":"d","dwell":-1,"event":"view"})" "\n"  // negative dwell
      R"({"ts":4,"user":"u","session":"s","query":"q","doc":"d","dwell":1,"event":"like"})" "\n"   // bad event
      R"({"ts":"5","user":"u","session":"s","query":"q","doc":"d","dwell":1,"event":"view"})" "\n" // ts as string
      "not json at all\n"
      "\n"
      R"({"ts":6,"user":"u","session":"s","query":"q","doc":"e","dwell":2,"event":"click"})" "\n");
  const auto loaded = read_log(in);
  EXPECT_EQ(loaded.stats.accepted, 2u);
  EXPECT_EQ(loaded.stats.skipped, 5u);
  ASSERT_EQ(loaded.records.size(), 2u);
  EXPECT_EQ(loaded.records[0].doc_id, "d");
  EXPECT_EQ(loaded.records[1].doc_id, "e");
}

TEST(LoadLog, EmptyFileGivesEmptyStream) {
  const auto path = temp_path("empty.jsonl");
  write_file_atomic(path, "");
  const auto loaded = load_log(path);
  EXPECT_TRUE(loaded.records.empty());
  EXPECT_EQ(loaded.stats.skipped, 0u);
}

TEST(LoadLog, UnreadablePathIsFatal) {
  EXPECT_THROW(load_log("/nonexistent/dir/log.jsonl"), IoError);
}

TEST(LoadLog, ReserializingReproducesRecords) {
  const auto catalog = generate_catalog(3, 60);
  const auto log = generate_transactions(catalog, 3, 400, 4);
  const auto path = temp_path("roundtrip.jsonl");
  save_log(log.records, path);
  const auto loaded = load_log(path);
  EXPECT_EQ(loaded.stats.skipped, 0u);
  EXPECT_EQ(loaded.records, log.records);
  EXPECT_EQ(serialize_log(loaded.records), read_file(path));
}

TEST(Sessionize, AccessSequenceFollowsVisitOrder) {
  const std::vector<LogRecord> recs = {record(3, "u", "s", "C"), record(1, "u", "s", "A"),
                                       record(2, "u", "s", "B")};
  const auto sessions = sessionize(recs);
  ASSERT_EQ(sessions.size(), 1u);
  EXPECT_EQ(sessions[0].access_sequence, (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Sessionize, RepeatedEventsOnOnePageAreOneAccess) {
  const std::vector<LogRecord> recs = {record(1, "u", "s", "A"), record(2, "u", "s", "A", EventType::click),
                                       record(3, "u", "s", "B"), record(4, "u", "s", "A")};
  const auto sessions = sessionize(recs);
  EXPECT_EQ(sessions[0].access_sequence, (std::vector<std::string>{"A", "B", "A"}));
}

TEST(Sessionize, EmptyInput) { EXPECT_TRUE(sessionize({}).empty()); }

TEST(Sessionize, InterleavedSessionsAreSeparatedAndOrdered) {
  const std::vector<LogRecord> recs = {record(5, "u1", "s1", "A"), record(1, "u2", "s2", "X"),
                                       record(2, "u1", "s1", "B"), record(3, "u2", "s2", "Y"),
                                       record(2, "u1", "s1", "C")};
  const auto sessions = sessionize(recs);
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_EQ(sessions[0].session_id, "s1");
  // Equal timestamps keep input order.
  EXPECT_EQ(sessions[0].access_sequence, (std::vector<std::string>{"B", "C", "A"}));
  EXPECT_EQ(sessions[1].access_sequence, (std::vector<std::string>{"X", "Y"}));
}

TEST(Sessionize, SameSessionIdForDifferentUsersIsTwoSessions) {
  const std::vector<LogRecord> recs = {record(1, "u1", "s", "A"), record(2, "u2", "s", "B")};
  EXPECT_EQ(sessionize(recs).size(), 2u);
}

TEST(Sessionize, IsAPartitionOfTheRecords) {
  const auto catalog = generate_catalog(5, 90);
  const auto log = generate_transactions(catalog, 5, 700, 6);
  const auto sessions = sessionize(log.records);
  std::size_t total = 0;
  std::multiset<std::int64_t> seen;
  for (const auto& s : sessions) {
    total += s.records.size();
    EXPECT_FALSE(s.access_sequence.empty());
    for (std::size_t i = 1; i < s.records.size(); ++i) {
      EXPECT_LE(s.records[i - 1].timestamp, s.records[i].timestamp);
    }
    for (const auto& r : s.records) {
      EXPECT_EQ(r.session_id, s.session_id);
      EXPECT_EQ(r.user_id, s.user_id);
      seen.insert(r.timestamp);
    }
  }
  EXPECT_EQ(total, log.records.size());
  std::multiset<std::int64_t> expected;
  for (const auto& r : log.records) expected.insert(r.timestamp);
  EXPECT_EQ(seen, expected);
}

TEST(AccessPrefix, KeepsRecordsOnTheFirstAccesses) {
  const std::vector<LogRecord> recs = {record(1, "u", "s", "A"), record(2, "u", "s", "A", EventType::click),
                                       record(3, "u", "s", "B"), record(4, "u", "s", "C"),
                                       record(5, "u", "s", "C", EventType::purchase)};
  const auto s = sessionize(recs).front();
  EXPECT_EQ(access_prefix(s, 0).size(), 0u);
  EXPECT_EQ(access_prefix(s, 1).size(), 2u);
  EXPECT_EQ(access_prefix(s, 2).size(), 3u);
  EXPECT_EQ(access_prefix(s, 3).size(), 5u);
  EXPECT_EQ(access_prefix(s, 99).size(), 5u);
}

TEST(GenerateCatalog, DefaultScaleSpansAllSubcategories) {
  const auto catalog = generate_catalog(1, 5800);
  ASSERT_EQ(catalog.size(), 5800u);
  const auto taxonomy = Taxonomy::books();
  std::set<std::string> subs, ids;
  for (const auto& d : catalog) {
    EXPECT_TRUE(taxonomy.contains(d.category, d.subcategory)) << d.doc_id;
    EXPECT_FALSE(d.body.empty());
    subs.insert(d.subcategory);
    ids.insert(d.doc_id);
  }
  EXPECT_EQ(subs.size(), 30u);
  EXPECT_EQ(ids.size(), catalog.size());
}

TEST(GenerateCatalog, ZeroBooks) { EXPECT_TRUE(generate_catalog(1, 0).empty()); }

TEST(GenerateCatalog, SameSeedIsByteIdentical) {
  EXPECT_EQ(serialize_catalog(generate_catalog(9, 300)), serialize_catalog(generate_catalog(9, 300)));
  EXPECT_NE(serialize_catalog(generate_catalog(9, 300)), serialize_catalog(generate_catalog(10, 300)));
}

TEST(GenerateCatalog, FileRoundTrip) {
  const auto catalog = generate_catalog(2, 120);
  const auto path = temp_path("catalog.json");
  save_catalog(catalog, path);
  EXPECT_EQ(load_catalog(path), catalog);
}

TEST(LoadCatalog, RejectsDuplicateIdsAndUnknownTaxonomy) {
  EXPECT_THROW(parse_catalog(R"([{"id":"a","title":"t","body":"b","category":"life","subcategory":"travel","url":""},
                                 {"id":"a","title":"t","body":"b","category":"life","subcategory":"travel","url":""}])"),
               LoadError);
  EXPECT_THROW(parse_catalog(R"([{"id":"a","title":"t","body":"b","category":"life","subcategory":"poetry","url":""}])"),
               LoadError);
  EXPECT_THROW(parse_catalog(R"([{"id":"a","title":"t","body":"","category":"life","subcategory":"travel","url":""}])"),
               LoadError);
  EXPECT_THROW(parse_catalog("{}"), LoadError);
}

TEST(GenerateTransactions, DefaultScaleCountsAndCatalogMembership) {
  const auto catalog = generate_catalog(1, 5800);
  const auto log = generate_transactions(catalog, 1, 6400, 32);
  ASSERT_EQ(log.records.size(), 6400u);
  std::set<std::string> ids;
  for (const auto& d : catalog) ids.insert(d.doc_id);
  for (const auto& r : log.records) {
    EXPECT_TRUE(ids.count(r.doc_id)) << r.doc_id;
    EXPECT_GE(r.dwell_seconds, 0.0);
    EXPECT_TRUE(parse_event_type(to_string(r.event)).has_value());
  }
}

TEST(GenerateTransactions, ZeroEvents) {
  const auto catalog = generate_catalog(1, 50);
  EXPECT_TRUE(generate_transactions(catalog, 1, 0, 5).records.empty());
}

TEST(GenerateTransactions, EmptyCatalogIsAnInputError) {
  EXPECT_THROW(generate_transactions({}, 1, 10, 2), InputError);
  EXPECT_NO_THROW(generate_transactions({}, 1, 0, 2));
}

// Recount from the emitted log: at least 70% of each user's purchases fall in
// the planted subcategory.
TEST(GenerateTransactions, PlantedPreferenceHoldsInEmittedLog) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto catalog = generate_catalog(seed, 1000);
    const auto log = generate_transactions(catalog, seed, 6400, 32);
    std::map<std::string, std::string> sub_of;
    for (const auto& d : catalog) sub_of[d.doc_id] = d.subcategory;
    std::map<std::string, std::pair<int, int>> counts;  // planted, total
    for (const auto& r : log.records) {
      if (r.event != EventType::purchase) continue;
      auto& c = counts[r.user_id];
      c.second += 1;
      c.first += sub_of.at(r.doc_id) == log.planted.at(r.user_id) ? 1 : 0;
    }
    EXPECT_FALSE(counts.empty());
    for (const auto& [user, c] : counts) {
      EXPECT_GE(static_cast<double>(c.first) / c.second, 0.7) << "seed " << seed << " user " << user;
    }
  }
}

TEST(GenerateTransactions, SameSeedIsBitReproducible) {
  const auto catalog = generate_catalog(4, 200);
  const auto a = generate_transactions(catalog, 4, 900, 5);
  const auto b = generate_transactions(catalog, 4, 900, 5);
  EXPECT_EQ(serialize_log(a.records), serialize_log(b.records));
  EXPECT_EQ(a.planted, b.planted);
}

TEST(GroundTruth, FileRoundTrip) {
  const std::map<std::string, std::string> planted = {{"U0001", "poetry"}, {"U0002", "law"}};
  const auto path = temp_path("truth.json");
  save_ground_truth(planted, path);
  EXPECT_EQ(load_ground_truth(path), planted);
}

TEST(Rng, BelowStaysInRangeAndShuffleIsAPermutation) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(13), 13u);
  std::vector<int> v = {1, 2, 3, 4, 5, 6, 7, 8};
  rng.shuffle(v.begin(), v.end());
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}));
}
