#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "checks.hpp"
#include "cryptocatch/blacklist.hpp"

using namespace cryptocatch;
namespace fs = std::filesystem;

namespace {

class Journal : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("cryptocatch_bl_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    path = (dir / "journal.ndjson").string();
  }
  void TearDown() override { fs::remove_all(dir); }

  std::size_t lines() const {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) n += !l.empty();
    return n;
  }

  fs::path dir;
  std::string path;
};

Timestamp at(long s) { return Timestamp{std::chrono::seconds{1'700'000'000 + s}}; }

ProbeVerdict positive(const std::string& endpoint, ProtocolVariant v = ProtocolVariant::StratumXMR) {
  ProbeVerdict pv;
  pv.target = ProbeTarget::parse(endpoint);
  pv.outcome = Outcome::PoolPositive;
  pv.variant = v;
  pv.kind = ResponseKind::success;
  return pv;
}

}  // namespace

TEST_F(Journal, NewEntryThenSecondConfirm) {
  BlacklistStore store(path);
  EXPECT_TRUE(store.confirm(positive("10.0.0.1:3333"), at(0)));
  auto e = store.query("10.0.0.1", 3333);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->confirm_count, 1);
  EXPECT_EQ(e->first_seen, at(0));
  EXPECT_EQ(e->last_confirmed, at(0));
  EXPECT_EQ(e->source, EntrySource::probe_confirmed);

  store.confirm(positive("10.0.0.1:3333"), at(60));
  e = store.query("10.0.0.1", 3333);
  EXPECT_EQ(e->confirm_count, 2);
  EXPECT_EQ(e->first_seen, at(0));
  EXPECT_EQ(e->last_confirmed, at(60));
  EXPECT_EQ(lines(), 2u);
}

TEST_F(Journal, NonPositiveVerdictsAreNoOps) {
  BlacklistStore store(path);
  for (auto o : {Outcome::PoolNegative, Outcome::Silent, Outcome::Unreachable}) {
    auto v = positive("10.0.0.1:3333");
    v.outcome = o;
    EXPECT_FALSE(store.confirm(v, at(0)));
  }
  EXPECT_TRUE(store.entries().empty());
  EXPECT_FALSE(fs::exists(path));
  EXPECT_FALSE(store.query("10.0.0.9", 1));
}

TEST_F(Journal, BatchStagesUntilFlush) {
  BlacklistStore store(path, UpdateMode::batch);
  store.confirm(positive("a:1"), at(0));
  store.confirm(positive("b:2"), at(1));
  store.confirm(positive("c:3"), at(2));
  EXPECT_EQ(store.staged(), 3u);
  EXPECT_TRUE(store.query("b", 2));  // live view includes staging
  EXPECT_TRUE(store.durable_view().empty());
  EXPECT_EQ(store.flush(at(10)), 3u);
  EXPECT_EQ(store.staged(), 0u);
  EXPECT_EQ(lines(), 3u);
  EXPECT_EQ(store.last_flush(), at(10));
  EXPECT_EQ(store.flush(at(11)), 0u);
  EXPECT_EQ(lines(), 3u);
}

TEST_F(Journal, FlushDueAfterInterval) {
  BlacklistStore store(path, UpdateMode::batch, std::chrono::hours(24));
  store.flush(at(0));
  EXPECT_FALSE(store.flush_due(at(3600)));
  EXPECT_TRUE(store.flush_due(at(24 * 3600)));
  EXPECT_THROW(BlacklistStore(path, UpdateMode::batch, std::chrono::seconds(0)), std::invalid_argument);
}

TEST_F(Journal, RealtimeFlushWarns) {
  BlacklistStore store(path);
  store.confirm(positive("a:1"), at(0));
  std::string warning;
  EXPECT_EQ(store.flush(at(1), &warning), 0u);
  EXPECT_FALSE(warning.empty());
  EXPECT_EQ(lines(), 1u);
}

TEST_F(Journal, ExportSortedDedupedAndAgeFiltered) {
  BlacklistStore store(path);
  store.confirm(positive("10.0.0.2:80"), at(0));
  store.confirm(positive("10.0.0.1:3333"), at(0));
  store.confirm(positive("10.0.0.1:3333"), at(86400 * 40));
  EXPECT_EQ(store.export_list(), (std::vector<std::string>{"10.0.0.1:3333", "10.0.0.2:80"}));
  EXPECT_EQ(store.export_list(std::chrono::hours(24 * 30), at(86400 * 41)),
            std::vector<std::string>{"10.0.0.1:3333"});
}

TEST_F(Journal, ReloadAndCompactKeepView) {
  {
    BlacklistStore store(path);
    store.confirm(positive("a:1"), at(0));
    store.confirm(positive("a:1"), at(5));
    store.add_manual("b", 2, std::nullopt, at(7));
  }
  BlacklistStore again(path);
  const auto before = again.durable_view();
  ASSERT_EQ(before.size(), 2u);
  EXPECT_EQ(before.at({"a", 1}).confirm_count, 2);
  EXPECT_EQ(before.at({"b", 2}).source, EntrySource::manual);
  EXPECT_EQ(lines(), 3u);
  again.compact();
  EXPECT_EQ(lines(), 2u);
  again.reload();
  EXPECT_EQ(again.durable_view(), before);
}

TEST_F(Journal, TornTailIsSkipped) {
  {
    BlacklistStore store(path);
    store.confirm(positive("a:1"), at(0));
  }
  std::ofstream(path, std::ios::app) << "{\"host\":\"b\",\"po";
  std::ifstream in(path);
  const auto r = replay_journal(in);
  EXPECT_EQ(r.view.size(), 1u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST_F(Journal, WriteFailureKeepsStaging) {
  const auto missing = dir / "not_yet";
  const std::string bad = (missing / "journal.ndjson").string();
  BlacklistStore store(bad, UpdateMode::batch);
  store.confirm(positive("a:1"), at(0));
  EXPECT_THROW(store.flush(at(1)), std::runtime_error);
  EXPECT_EQ(store.staged(), 1u);
  fs::create_directories(missing);
  EXPECT_EQ(store.flush(at(2)), 1u);
  EXPECT_EQ(store.staged(), 0u);

  BlacklistStore live(bad + ".d/x");
  EXPECT_THROW(live.confirm(positive("c:3"), at(0)), std::runtime_error);
  EXPECT_TRUE(live.query("c", 3));
}

TEST_F(Journal, PrefixReplayMatchesLiveView) {
  const auto r = checks::blacklist_prefix_replay(31, dir.string(), 40);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(BlacklistText, TimeAndDurationFormats) {
  const auto t = parse_utc("2024-03-01T12:34:56Z");
  EXPECT_EQ(format_utc(t), "2024-03-01T12:34:56Z");
  EXPECT_EQ(parse_duration("30d"), std::chrono::hours(24 * 30));
  EXPECT_EQ(parse_duration("15m"), std::chrono::minutes(15));
  EXPECT_EQ(parse_duration("45"), std::chrono::seconds(45));
  EXPECT_THROW(parse_duration("soon"), std::invalid_argument);
  EXPECT_THROW(parse_utc("yesterday"), std::invalid_argument);
  EXPECT_EQ(parse_update_mode("batch"), UpdateMode::batch);
}

TEST(BlacklistText, EntryJsonRoundTrip) {
  BlacklistEntry e;
  e.host = "pool.example";
  e.port = 443;
  e.variant = ProtocolVariant::StratumWebmineXMR;
  e.first_seen = at(0);
  e.last_confirmed = at(9);
  e.confirm_count = 4;
  EXPECT_EQ(BlacklistEntry::from_json(e.to_json()), e);
}
