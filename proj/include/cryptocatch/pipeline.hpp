#ifndef CRYPTOCATCH_PIPELINE_HPP
#define CRYPTOCATCH_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptocatch/blacklist.hpp"
#include "cryptocatch/flow.hpp"
#include "cryptocatch/gbdt.hpp"
#include "cryptocatch/metrics.hpp"
#include "cryptocatch/probe.hpp"
#include "cryptocatch/sim.hpp"

namespace cryptocatch {

struct PipelineConfig {
  SegmentOptions segment;
  /// Features extracted in Stage 1; empty means exactly the model's features.
  std::vector<std::string> feature_specs;
  std::string model_path;
  PolicyKind policy = PolicyKind::optimal_sensitivity;
  double threshold = 0.5;
  ProbeConfig probe;
  bool probing = true;
  std::string journal_path;
  UpdateMode update_mode = UpdateMode::realtime;
  int min_positive_windows = 1;
  int stage1_threads = 0;  // 0: hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct WindowDecision {
  std::string window_id;
  std::string endpoint;  // destination host:port
  double score = 0.0;
  bool positive = false;
  std::optional<Label> label;
};

struct SuspiciousEndpoint {
  std::string host;
  std::uint16_t port = 0;
  std::size_t positive_windows = 0;
  std::size_t windows = 0;
  bool blacklisted = false;  // already listed; confirmed without probing

  std::string endpoint() const;
};

/// Only filled when labels are supplied.
struct LabelledSummary {
  Confusion windows;
  std::size_t mining_endpoints = 0;
  std::size_t suspicious_benign = 0;  // classifier-stage false positive endpoints
  std::size_t confirmed_true = 0;
  std::size_t confirmed_false = 0;
};

struct DetectionReport {
  double threshold = 0.5;
  std::vector<WindowDecision> windows;
  std::vector<SuspiciousEndpoint> suspicious;
  std::vector<ProbeVerdict> verdicts;
  std::vector<std::string> confirmed;  // sorted endpoints
  std::size_t probes_issued = 0;
  std::vector<std::string> errors;  // probe-stage failures; the report is still valid
  std::optional<LabelledSummary> summary;

  std::size_t positive_windows() const;
  /// Summary object; per-window decisions are written separately.
  nlohmann::json to_json() const;
  static nlohmann::json window_json(const WindowDecision& w);
};

/// Checks that every model feature can be produced by the configured specs
/// and returns the spec list in model column order.
std::vector<FeatureSpec> stage1_specs(const BoostedEnsemble& model, const PipelineConfig& config);

/// Stage 1 only: per-window scores and decisions.
std::vector<WindowDecision> classify_windows(const std::vector<Window>& windows,
                                             const BoostedEnsemble& model,
                                             const PipelineConfig& config);

/// Full two-stage run. `store` may be null (no blacklist). Probing is
/// skipped when `config.probing` is false.
DetectionReport detect(const std::vector<PacketRecord>& records, const BoostedEnsemble& model,
                       const PipelineConfig& config, BlacklistStore* store, Timestamp now,
                       const LabelMap* labels = nullptr);

}  // namespace cryptocatch

#endif  // CRYPTOCATCH_PIPELINE_HPP
