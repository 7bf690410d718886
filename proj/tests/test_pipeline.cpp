#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "fixtures.hpp"

using namespace cryptocatch;
namespace fs = std::filesystem;

namespace {

const fixtures::Detector& detector() {
  static const auto d = fixtures::train_detector(400, 200, 31);
  return d;
}

Timestamp now() { return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()); }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cryptocatch_pipe_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::set<std::string> suspicious_set(const DetectionReport& r) {
  std::set<std::string> out;
  for (const auto& s : r.suspicious) out.insert(s.endpoint());
  return out;
}

}  // namespace

TEST(Detect, PlantedPoolsConfirmedExactly) {
  auto scenario = fixtures::planted_scenario(60, 240, 12, 41);
  const auto dir = fresh_dir("planted");
  BlacklistStore store((dir / "bl.ndjson").string());
  PipelineConfig cfg;
  cfg.threshold = detector().policy.threshold;
  const auto labels = to_label_map(scenario->corpus.labels);
  const auto report = detect(scenario->corpus.records, detector().model, cfg, &store, now(), &labels);

  EXPECT_EQ(report.confirmed, scenario->planted());
  ASSERT_TRUE(report.summary);
  EXPECT_EQ(report.summary->confirmed_true, 5u);
  EXPECT_EQ(report.summary->confirmed_false, 0u);
  EXPECT_EQ(store.export_list(), scenario->planted());
  EXPECT_TRUE(report.errors.empty());

  const auto suspicious = suspicious_set(report);
  for (const auto& c : report.confirmed) EXPECT_TRUE(suspicious.count(c)) << c;
  for (const auto& v : report.verdicts) EXPECT_TRUE(suspicious.count(v.target.endpoint()));
  for (const auto& s : report.suspicious) EXPECT_GE(s.positive_windows, 1u);
  fs::remove_all(dir);
}

TEST(Detect, RerunUsesBlacklistInsteadOfProbing) {
  auto scenario = fixtures::planted_scenario(40, 120, 6, 42);
  const auto dir = fresh_dir("rerun");
  BlacklistStore store((dir / "bl.ndjson").string());
  PipelineConfig cfg;
  cfg.threshold = detector().policy.threshold;
  const auto first = detect(scenario->corpus.records, detector().model, cfg, &store, now());
  std::vector<int> before;
  for (const auto& p : scenario->pools) before.push_back(p->connections());

  // Only the benign suspects still need probing on the second pass.
  const auto second = detect(scenario->corpus.records, detector().model, cfg, &store, now());
  EXPECT_EQ(second.confirmed, first.confirmed);
  EXPECT_EQ(first.confirmed, scenario->planted());
  for (std::size_t i = 0; i < scenario->pools.size(); ++i) EXPECT_EQ(scenario->pools[i]->connections(), before[i]);
  for (const auto& v : second.verdicts) EXPECT_NE(v.outcome, Outcome::PoolPositive);
  EXPECT_EQ(second.probes_issued, first.probes_issued - 5);

  // With everything suspicious already listed, nothing is probed at all.
  const auto dir2 = fresh_dir("rerun_all");
  BlacklistStore all((dir2 / "bl.ndjson").string());
  for (const auto& s : first.suspicious) all.add_manual(s.host, s.port, std::nullopt, now());
  const auto third = detect(scenario->corpus.records, detector().model, cfg, &all, now());
  EXPECT_EQ(third.probes_issued, 0u);
  EXPECT_TRUE(third.verdicts.empty());
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(Detect, NoPositiveWindowsNoProbes) {
  auto scenario = fixtures::planted_scenario(20, 40, 3, 43);
  PipelineConfig cfg;
  cfg.threshold = 1.0;  // scores never exceed 1
  const auto report = detect(scenario->corpus.records, detector().model, cfg, nullptr, now());
  EXPECT_EQ(report.positive_windows(), 0u);
  EXPECT_EQ(report.probes_issued, 0u);
  EXPECT_TRUE(report.suspicious.empty());
  EXPECT_TRUE(report.confirmed.empty());
  for (const auto& p : scenario->pools) EXPECT_EQ(p->connections(), 0);
}

TEST(Detect, FeatureMismatchFailsBeforeProbing) {
  auto scenario = fixtures::planted_scenario(20, 40, 3, 44);
  PipelineConfig cfg;
  cfg.threshold = 0.0;
  cfg.feature_specs = {"sum_values"};
  EXPECT_THROW(detect(scenario->corpus.records, detector().model, cfg, nullptr, now()), std::invalid_argument);
  for (const auto& p : scenario->pools) EXPECT_EQ(p->connections(), 0);
}

TEST(Detect, MinPositiveWindowsFiltersEndpoints) {
  auto scenario = fixtures::planted_scenario(20, 60, 3, 45);
  PipelineConfig cfg;
  cfg.threshold = detector().policy.threshold;
  cfg.probing = false;
  const auto loose = detect(scenario->corpus.records, detector().model, cfg, nullptr, now());
  cfg.min_positive_windows = 1'000'000;
  const auto strict = detect(scenario->corpus.records, detector().model, cfg, nullptr, now());
  EXPECT_FALSE(loose.suspicious.empty());
  EXPECT_TRUE(strict.suspicious.empty());
  EXPECT_EQ(loose.probes_issued, 0u);
  EXPECT_TRUE(loose.confirmed.empty());
}

TEST(Detect, BatchStoreStagesConfirmations) {
  auto scenario = fixtures::planted_scenario(20, 40, 3, 46);
  const auto dir = fresh_dir("batch");
  BlacklistStore store((dir / "bl.ndjson").string(), UpdateMode::batch);
  PipelineConfig cfg;
  cfg.threshold = detector().policy.threshold;
  const auto report = detect(scenario->corpus.records, detector().model, cfg, &store, now());
  EXPECT_EQ(store.staged(), report.confirmed.size());
  EXPECT_TRUE(store.durable_view().empty());
  EXPECT_EQ(store.flush(now()), report.confirmed.size());
  fs::remove_all(dir);
}

TEST(Stage1, DeterministicAndThreadIndependent) {
  const auto data = fixtures::windows_of(fixtures::mixed(47), 60);
  PipelineConfig cfg;
  cfg.threshold = detector().policy.threshold;
  cfg.stage1_threads = 1;
  const auto a = classify_windows(data.windows, detector().model, cfg);
  cfg.stage1_threads = 4;
  const auto b = classify_windows(data.windows, detector().model, cfg);
  ASSERT_EQ(a.size(), data.windows.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].window_id, b[i].window_id);
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].positive, a[i].score > cfg.threshold);
  }
}

TEST(Stage1, SpecsFollowModelColumns) {
  PipelineConfig cfg;
  const auto specs = stage1_specs(detector().model, cfg);
  ASSERT_EQ(specs.size(), detector().model.feature_names.size());
  for (std::size_t i = 0; i < specs.size(); ++i) EXPECT_EQ(specs[i].name(), detector().model.feature_names[i]);
}

TEST(PipelineConfigJson, RoundTripAndValidation) {
  PipelineConfig cfg;
  cfg.threshold = 0.3;
  cfg.min_positive_windows = 2;
  cfg.update_mode = UpdateMode::batch;
  cfg.probe.read_timeout_ms = 100;
  const auto back = PipelineConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.threshold, 0.3);
  EXPECT_EQ(back.min_positive_windows, 2);
  EXPECT_EQ(back.update_mode, UpdateMode::batch);
  EXPECT_EQ(back.probe.read_timeout_ms, 100);
  EXPECT_EQ(PipelineConfig::from_json(nlohmann::json::object()).threshold, PipelineConfig{}.threshold);
  cfg.threshold = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
