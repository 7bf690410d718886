#include "cryptocatch/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "cryptocatch/dataset.hpp"

namespace cryptocatch {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (segment.window_size < 2) throw std::invalid_argument("window size must be >= 2");
  if (!(segment.flow_timeout > 0.0)) throw std::invalid_argument("flow timeout must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold outside [0,1]");
  if (min_positive_windows < 1) throw std::invalid_argument("min_positive_windows must be >= 1");
  probe.validate();
}

json PipelineConfig::to_json() const {
  return {{"window_size", segment.window_size},
          {"flow_timeout", segment.flow_timeout},
          {"feature_specs", feature_specs},
          {"model_path", model_path},
          {"policy", to_string(policy)},
          {"threshold", threshold},
          {"probe", probe.to_json()},
          {"probing", probing},
          {"journal_path", journal_path},
          {"update_mode", to_string(update_mode)},
          {"min_positive_windows", min_positive_windows},
          {"stage1_threads", stage1_threads}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  c.segment.window_size = j.value("window_size", c.segment.window_size);
  c.segment.flow_timeout = j.value("flow_timeout", c.segment.flow_timeout);
  c.feature_specs = j.value("feature_specs", c.feature_specs);
  c.model_path = j.value("model_path", c.model_path);
  if (j.contains("policy")) {
    auto p = parse_policy(j["policy"].get<std::string>());
    if (!p) throw std::invalid_argument("unknown threshold policy");
    c.policy = *p;
  }
  c.threshold = j.value("threshold", c.threshold);
  if (j.contains("probe")) c.probe = ProbeConfig::from_json(j["probe"]);
  c.probing = j.value("probing", c.probing);
  c.journal_path = j.value("journal_path", c.journal_path);
  if (j.contains("update_mode")) {
    auto m = parse_update_mode(j["update_mode"].get<std::string>());
    if (!m) throw std::invalid_argument("unknown update mode");
    c.update_mode = *m;
  }
  c.min_positive_windows = j.value("min_positive_windows", c.min_positive_windows);
  c.stage1_threads = j.value("stage1_threads", c.stage1_threads);
  c.validate();
  return c;
}

std::string SuspiciousEndpoint::endpoint() const {
  ProbeTarget t;
  t.host = host;
  t.port = port;
  return t.endpoint();
}

std::size_t DetectionReport::positive_windows() const {
  return static_cast<std::size_t>(
      std::count_if(windows.begin(), windows.end(), [](const WindowDecision& w) { return w.positive; }));
}

json DetectionReport::window_json(const WindowDecision& w) {
  json j{{"window_id", w.window_id}, {"endpoint", w.endpoint}, {"score", w.score},
         {"positive", w.positive}};
  if (w.label) j["label"] = to_string(*w.label);
  return j;
}

json DetectionReport::to_json() const {
  json j;
  j["threshold"] = threshold;
  j["windows"] = windows.size();
  j["positive_windows"] = positive_windows();
  json sus = json::array();
  for (const auto& s : suspicious)
    sus.push_back({{"endpoint", s.endpoint()},
                   {"positive_windows", s.positive_windows},
                   {"windows", s.windows},
                   {"blacklisted", s.blacklisted}});
  j["suspicious"] = sus;
  json vs = json::array();
  for (const auto& v : verdicts) vs.push_back(v.to_json());
  j["verdicts"] = vs;
  j["probes_issued"] = probes_issued;
  j["confirmed"] = confirmed;
  j["errors"] = errors;
  if (summary) {
    const auto& s = *summary;
    j["summary"] = {{"tp", s.windows.tp},
                    {"fp", s.windows.fp},
                    {"tn", s.windows.tn},
                    {"fn", s.windows.fn},
                    {"precision", s.windows.precision},
                    {"recall", s.windows.recall},
                    {"f1", s.windows.f1},
                    {"mining_endpoints", s.mining_endpoints},
                    {"suspicious_benign", s.suspicious_benign},
                    {"confirmed_true", s.confirmed_true},
                    {"confirmed_false", s.confirmed_false}};
  }
  return j;
}

std::vector<FeatureSpec> stage1_specs(const BoostedEnsemble& model, const PipelineConfig& config) {
  if (model.task != Task::binary) throw std::invalid_argument("detection needs a binary model");
  if (!config.feature_specs.empty()) {
    const std::set<std::string> available(config.feature_specs.begin(), config.feature_specs.end());
    for (const auto& name : model.feature_names)
      if (!available.count(name))
        throw std::invalid_argument("model feature not in configured feature set: " + name);
  }
  std::vector<FeatureSpec> specs;
  for (const auto& name : model.feature_names) {
    try {
      specs.push_back(FeatureSpec::parse(name));
    } catch (const std::exception&) {
      throw std::invalid_argument("model feature is not a known spec: " + name);
    }
  }
  return specs;
}

std::vector<WindowDecision> classify_windows(const std::vector<Window>& windows,
                                             const BoostedEnsemble& model,
                                             const PipelineConfig& config) {
  const auto specs = stage1_specs(model, config);
  Matrix x(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(specs.size()));
  const auto fill = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      x.row(static_cast<Eigen::Index>(i)) = extract(windows[i], specs).values.transpose();
  };
  std::size_t threads = config.stage1_threads > 0 ? static_cast<std::size_t>(config.stage1_threads)
                                                  : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, windows.size() / 256));
  if (threads <= 1) {
    fill(0, windows.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (windows.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back(fill, t * chunk, std::min(windows.size(), (t + 1) * chunk));
  }
  const Eigen::MatrixXd proba = model.predict_proba(x);

  std::vector<WindowDecision> out(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto& d = out[i];
    d.window_id = windows[i].id();
    d.endpoint = windows[i].key.destination();
    d.score = proba(static_cast<Eigen::Index>(i), 0);
    d.positive = d.score > config.threshold;
    d.label = windows[i].label;
  }
  return out;
}

DetectionReport detect(const std::vector<PacketRecord>& records, const BoostedEnsemble& model,
                       const PipelineConfig& config, BlacklistStore* store, Timestamp now,
                       const LabelMap* labels) {
  config.validate();
  DetectionReport report;
  report.threshold = config.threshold;

  // Stage 1 completes before any probe is issued.
  auto windows = segment_flows(records, config.segment);
  if (labels) attach_labels(windows, *labels);
  report.windows = classify_windows(windows, model, config);

  struct Tally {
    std::string host;
    std::uint16_t port = 0;
    std::size_t positive = 0;
    std::size_t total = 0;
    bool mining = false;
  };
  std::map<std::string, Tally> by_endpoint;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto& t = by_endpoint[report.windows[i].endpoint];
    t.host = windows[i].key.dst_ip;
    t.port = windows[i].key.dst_port;
    ++t.total;
    t.positive += report.windows[i].positive ? 1 : 0;
    t.mining = t.mining || (windows[i].label && is_mining(*windows[i].label));
  }

  std::vector<ProbeTarget> targets;
  std::set<std::string> confirmed;
  for (const auto& [ep, t] : by_endpoint) {
    if (t.positive < static_cast<std::size_t>(config.min_positive_windows)) continue;
    SuspiciousEndpoint s;
    s.host = t.host;
    s.port = t.port;
    s.positive_windows = t.positive;
    s.windows = t.total;
    s.blacklisted = store && store->query(t.host, t.port).has_value();
    if (s.blacklisted) {
      confirmed.insert(s.endpoint());
    } else if (config.probing) {
      ProbeTarget target;
      target.host = t.host;
      target.port = t.port;
      targets.push_back(target);
    }
    report.suspicious.push_back(s);
  }

  if (!targets.empty()) {
    report.verdicts = probe_batch(targets, config.probe);
    report.probes_issued = targets.size();
    for (const auto& v : report.verdicts) {
      if (v.outcome != Outcome::PoolPositive) continue;
      confirmed.insert(v.target.endpoint());
      if (!store) continue;
      try {
        store->confirm(v, now);
      } catch (const std::exception& e) {
        report.errors.push_back(v.target.endpoint() + ": " + e.what());
      }
    }
  }
  if (store && store->flush_due(now)) {
    try {
      store->flush(now);
    } catch (const std::exception& e) {
      report.errors.push_back(std::string("blacklist flush: ") + e.what());
    }
  }
  report.confirmed.assign(confirmed.begin(), confirmed.end());

  if (labels) {
    LabelledSummary s;
    std::vector<ScoredSample> scored;
    for (const auto& w : report.windows)
      if (w.label) scored.push_back({w.score, is_mining(*w.label)});
    if (!scored.empty()) s.windows = confusion_and_prf(scored, config.threshold);
    for (const auto& [ep, t] : by_endpoint) {
      s.mining_endpoints += t.mining ? 1 : 0;
      const bool suspicious = t.positive >= static_cast<std::size_t>(config.min_positive_windows);
      s.suspicious_benign += suspicious && !t.mining ? 1 : 0;
      if (confirmed.count(ep)) (t.mining ? s.confirmed_true : s.confirmed_false) += 1;
    }
    report.summary = s;
  }
  return report;
}

}  // namespace cryptocatch
