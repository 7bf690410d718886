#ifndef CRYPTOCATCH_TESTS_FIXTURES_HPP
#define CRYPTOCATCH_TESTS_FIXTURES_HPP

// Synthetic corpora, trained detectors and loopback scenarios shared by
// the pipeline tests and the acceptance runner.

#include <memory>
#include <string>
#include <vector>

#include "cryptocatch/dataset.hpp"
#include "cryptocatch/gbdt.hpp"
#include "cryptocatch/metrics.hpp"
#include "cryptocatch/pipeline.hpp"
#include "cryptocatch/select.hpp"
#include "cryptocatch/sim.hpp"

namespace fixtures {

using namespace cryptocatch;

struct LabelledWindows {
  std::vector<Window> windows;
  SynthCorpus corpus;
};

inline LabelledWindows windows_of(const SynthProfile& profile, int flows) {
  LabelledWindows out;
  out.corpus = synthesize(profile, flows);
  out.windows = segment_flows(out.corpus.records);
  attach_labels(out.windows, to_label_map(out.corpus.labels));
  return out;
}

inline SynthProfile mixed(std::uint64_t seed) {
  SynthProfile p;
  p.kind = SynthProfile::Kind::mixed;
  p.seed = seed;
  return p;
}

struct Detector {
  BoostedEnsemble model;
  std::vector<std::string> selected;
  ThresholdPolicy policy;
};

/// Selects features on `train_flows` mixed flows, trains with the detector
/// hyperparameters and tunes the threshold on a separate validation corpus.
inline Detector train_detector(int train_flows, int valid_flows, std::uint64_t seed,
                               PolicyKind kind = PolicyKind::optimal_sensitivity) {
  Detector d;
  const auto train = windows_of(mixed(seed), train_flows);
  const auto m = build_matrix(train.windows, default_catalog());
  const auto y = binary_targets(m);
  d.selected = select_features(m, y, 0.01).selected;
  auto hp = Hyperparams::detector_defaults();
  hp.seed = seed;
  d.model = cryptocatch::train(m.select_columns(d.selected), y, hp, Task::binary);

  const auto valid = windows_of(mixed(seed + 1000), valid_flows);
  const auto vm = build_matrix(valid.windows, default_catalog()).select_columns(d.selected);
  const auto scores = d.model.predict_score(vm);
  const auto vy = binary_targets(vm);
  std::vector<ScoredSample> samples;
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    samples.push_back({scores[i], vy[static_cast<std::size_t>(i)] == 1});
  const auto table = sweep_thresholds(samples, 0.01);
  d.policy = pick_threshold(table, kind, 0.99);
  return d;
}

/// Five simulated pools plus benign loopback endpoints (web pages, a JSON
/// echo and refused ports), with traffic aimed at them.
struct PlantedScenario {
  std::vector<std::unique_ptr<MockServer>> pools;
  std::vector<std::unique_ptr<MockServer>> benign_servers;
  std::vector<Endpoint> pool_endpoints;
  std::vector<Endpoint> benign_endpoints;
  SynthCorpus corpus;

  std::vector<std::string> planted() const {
    std::vector<std::string> out;
    for (const auto& e : pool_endpoints) out.push_back(e.host + ":" + std::to_string(e.port));
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline std::unique_ptr<PlantedScenario> planted_scenario(int mining_flows, int benign_flows,
                                                        int benign_endpoints, std::uint64_t seed) {
  auto s = std::make_unique<PlantedScenario>();
  const auto variants = all_variants();
  for (int i = 0; i < 5; ++i) {
    s->pools.push_back(serve_pool(variants[static_cast<std::size_t>(i) % variants.size()],
                                  PoolBehavior::parse(i == 4 ? "error" : "success")));
    s->pool_endpoints.push_back({"127.0.0.1", s->pools.back()->port()});
  }
  for (int i = 0; i < benign_endpoints; ++i) {
    if (i % 3 == 2) {
      s->benign_endpoints.push_back({"127.0.0.1", closed_port()});
      continue;
    }
    s->benign_servers.push_back(i % 3 == 0 ? serve_html() : serve_json_echo());
    s->benign_endpoints.push_back({"127.0.0.1", s->benign_servers.back()->port()});
  }
  SynthProfile mining;
  mining.kind = SynthProfile::Kind::mining;
  mining.seed = seed;
  mining.mining_destinations = s->pool_endpoints;
  SynthProfile benign;
  benign.kind = SynthProfile::Kind::benign;
  benign.seed = seed + 1;
  benign.benign_destinations = s->benign_endpoints;
  auto a = synthesize(mining, mining_flows);
  auto b = synthesize(benign, benign_flows);
  s->corpus.records = std::move(a.records);
  s->corpus.records.insert(s->corpus.records.end(), b.records.begin(), b.records.end());
  std::stable_sort(s->corpus.records.begin(), s->corpus.records.end(),
                   [](const PacketRecord& x, const PacketRecord& y) { return x.ts < y.ts; });
  s->corpus.labels = std::move(a.labels);
  s->corpus.labels.insert(s->corpus.labels.end(), b.labels.begin(), b.labels.end());
  return s;
}

}  // namespace fixtures

#endif  // CRYPTOCATCH_TESTS_FIXTURES_HPP
