// cryptocatch: two-stage cryptomining traffic detection.

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cryptocatch/blacklist.hpp"
#include "cryptocatch/dataset.hpp"
#include "cryptocatch/features.hpp"
#include "cryptocatch/flow.hpp"
#include "cryptocatch/gbdt.hpp"
#include "cryptocatch/metrics.hpp"
#include "cryptocatch/pipeline.hpp"
#include "cryptocatch/probe.hpp"
#include "cryptocatch/select.hpp"
#include "cryptocatch/sim.hpp"

using namespace cryptocatch;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kProbePartial = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string slurp(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

// One name per line; blank lines and `#` comments skipped.
std::vector<std::string> read_name_list(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty() && l[0] != '#') out.push_back(l);
  }
  return out;
}

Timestamp utc_now() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<PacketRecord> load_records(const std::string& path, const std::string& format, bool strict) {
  ParseOptions opts;
  opts.strict = strict;
  if (format == "csv")
    opts.format = RecordFormat::CSV;
  else if (format != "ndjson")
    throw UsageError("--format must be ndjson or csv");
  auto in = open_in(path);
  auto res = parse_records(in, opts);
  if (res.errors > 0) {
    std::cerr << "warning: " << res.errors << " malformed record(s) skipped";
    if (!res.error_samples.empty()) std::cerr << " (first: " << res.error_samples.front() << ")";
    std::cerr << "\n";
  }
  return std::move(res.records);
}

// Binary or coin-class targets from a labelled matrix.
std::vector<int> targets_for(const FeatureMatrix& m, Task task) {
  return task == Task::binary ? binary_targets(m) : coin_targets(m);
}

Task task_of(const std::string& s) {
  auto t = parse_task(s);
  if (!t) throw UsageError("--task must be binary or multiclass");
  return *t;
}

struct ScoreRow {
  std::string id;
  std::optional<Label> label;
  double score = 0.0;
};

// `window_id,label,score` as written by `predict` for binary models.
std::vector<ScoreRow> read_scores(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty scores file");
  std::vector<ScoreRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.rfind(',');
    if (a == std::string::npos || a == b) throw std::runtime_error(path + ": expected window_id,label,score");
    ScoreRow r;
    r.id = line.substr(0, a);
    const auto lab = line.substr(a + 1, b - a - 1);
    if (!lab.empty()) {
      r.label = parse_label(lab);
      if (!r.label) throw std::runtime_error(path + ": unknown label " + lab);
    }
    r.score = std::stod(line.substr(b + 1));
    rows.push_back(r);
  }
  return rows;
}

std::vector<ScoredSample> labelled_samples(const std::vector<ScoreRow>& rows) {
  std::vector<ScoredSample> out;
  for (const auto& r : rows) {
    if (!r.label) throw std::runtime_error("scores file needs labels for this command");
    out.push_back({r.score, is_mining(*r.label)});
  }
  return out;
}

void write_verdicts(std::ostream& out, const std::vector<ProbeVerdict>& verdicts) {
  for (const auto& v : verdicts) out << v.to_json().dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage cryptomining traffic detection: flow classification plus active probing"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "PipelineConfig JSON")->check(CLI::ExistingFile);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse packet records and cut flows into windows");
  std::string in_path, out_path, format = "ndjson", labels_path;
  std::vector<std::string> in_paths;
  bool strict = false;
  std::size_t window_size = 0;
  double flow_timeout = 0.0;
  ingest->add_option("inputs", in_paths, "Packet record files (NDJSON or CSV)")->required();
  ingest->add_option("--format", format, "ndjson|csv");
  ingest->add_flag("--strict", strict, "Fail on the first malformed record");
  ingest->add_option("--window-size", window_size);
  ingest->add_option("--flow-timeout", flow_timeout, "Idle seconds that split a flow");
  ingest->add_option("--labels", labels_path, "flow,label CSV");
  ingest->add_option("--out", out_path, "Windows NDJSON")->required();

  // features
  auto* feats = app.add_subcommand("features", "Extract time-series features per window");
  std::string specs_arg, specs_file;
  bool list_specs = false;
  feats->add_option("windows", in_path, "Windows NDJSON");
  feats->add_option("--specs", specs_arg, "default, a file of names, or a comma-separated list");
  feats->add_option("--specs-file", specs_file, "One feature name per line");
  feats->add_flag("--list-specs", list_specs, "Print the default catalog and exit");
  feats->add_option("--out", out_path, "Feature matrix CSV");

  // select
  auto* sel = app.add_subcommand("select", "Benjamini-Hochberg feature selection");
  double alpha = 0.01;
  std::string task_s = "binary", report_path, matrix_out;
  sel->add_option("features", in_path, "Feature matrix CSV")->required();
  sel->add_option("--alpha", alpha, "FDR level");
  sel->add_option("--task", task_s, "binary|multiclass");
  sel->add_option("--out", out_path, "Selected feature names, one per line")->required();
  sel->add_option("--matrix-out", matrix_out, "Reduced feature matrix CSV");
  sel->add_option("--report", report_path, "Per-feature p-values CSV");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a boosted tree model");
  std::string params_path, importance_path, select_path;
  int cv_folds = 0, rounds = 0;
  long long seed = -1;
  std::size_t top_k = 0;
  train_cmd->add_option("features", in_path, "Labelled feature matrix CSV")->required();
  train_cmd->add_option("--task", task_s, "binary|multiclass");
  train_cmd->add_option("--hp,--params", params_path, "Hyperparameter JSON (defaults: detector optimum)");
  train_cmd->add_option("--select", select_path, "Train on these feature names only (one per line)");
  train_cmd->add_option("--rounds", rounds);
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--cv", cv_folds, "Also report k-fold cross-validation");
  train_cmd->add_option("--top-k", top_k, "Retrain on the k most important features");
  train_cmd->add_option("--importance", importance_path, "Feature importance CSV");
  train_cmd->add_option("--out", out_path, "Model JSON")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Score a feature matrix");
  std::string model_path;
  predict->add_option("features", in_path, "Feature matrix CSV")->required();
  predict->add_option("--model", model_path)->required();
  predict->add_option("--out", out_path, "Scores CSV")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix and ROC for binary scores");
  double threshold = 0.5;
  std::string confusion_path, roc_path;
  evaluate->add_option("scores", in_path, "window_id,label,score CSV")->required();
  evaluate->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--confusion", confusion_path, "Confusion matrix CSV");
  evaluate->add_option("--roc", roc_path, "ROC points CSV");

  // tune-threshold
  auto* tune = app.add_subcommand("tune-threshold", "Pick a decision threshold from a sweep");
  std::string policy_s = "sensitivity", table_path;
  double floor_ratio = 0.99, step = 0.01;
  tune->add_option("scores", in_path, "window_id,label,score CSV")->required();
  tune->add_option("--policy", policy_s, "f1|sensitivity");
  tune->add_option("--floor", floor_ratio, "F1 floor as a fraction of the best F1");
  tune->add_option("--step", step, "Grid step");
  tune->add_option("--table", table_path, "Sweep table CSV");

  // detect
  auto* det = app.add_subcommand("detect", "Run both stages and update the blacklist");
  std::string journal_path, windows_out, update_mode_s;
  std::optional<double> det_threshold;
  int min_pos = 0;
  bool no_probe = false;
  det->add_option("input", in_path, "Packet records")->required();
  det->add_option("--format", format, "ndjson|csv");
  det->add_option("--model", model_path);
  det->add_option("--threshold", det_threshold)->check(CLI::Range(0.0, 1.0));
  det->add_option("--journal", journal_path, "Blacklist journal");
  det->add_option("--update-mode", update_mode_s, "realtime|batch");
  det->add_option("--min-positive-windows", min_pos);
  det->add_flag("--no-probe", no_probe, "Stage 1 only");
  det->add_option("--labels", labels_path, "flow,label CSV for a scored summary");
  det->add_option("--windows-out", windows_out, "Per-window decisions NDJSON");
  det->add_option("--out", out_path, "Report JSON (default stdout)");

  // probe
  auto* probe = app.add_subcommand("probe", "Actively probe host:port targets");
  std::string targets_path, probe_config_path;
  probe->add_option("--targets", targets_path, "host:port per line")->required();
  probe->add_option("--config,--probe-config", probe_config_path, "ProbeConfig JSON");
  probe->add_option("--out", out_path, "Verdicts NDJSON (default stdout)");

  // blacklist
  auto* bl = app.add_subcommand("blacklist", "Inspect and maintain the blacklist journal");
  bl->require_subcommand(1);
  std::string max_age_s;
  auto* bl_show = bl->add_subcommand("show", "Print the live view as NDJSON");
  auto* bl_export = bl->add_subcommand("export", "Print host:port deny-list lines");
  auto* bl_compact = bl->add_subcommand("compact", "Rewrite the journal as its live view");
  for (auto* c : {bl_show, bl_export, bl_compact}) c->add_option("--journal", journal_path)->required();
  bl_export->add_option("--max-age", max_age_s, "Only entries confirmed within e.g. 30d");

  // sim
  auto* sim = app.add_subcommand("sim", "Pool emulators and traffic synthesis");
  sim->require_subcommand(1);
  auto* sim_pool = sim->add_subcommand("pool", "Serve an emulated mining pool until interrupted");
  std::string variant_s, behavior_s = "success", host = "127.0.0.1";
  int port = 0;
  bool tls = false;
  sim_pool->add_option("--variant", variant_s, "btc|xmr|eth|webmine")->required();
  sim_pool->add_option("--behavior", behavior_s, "success|error|silent|limit:N");
  sim_pool->add_option("--host", host);
  sim_pool->add_option("--port", port, "0 picks a free port");
  sim_pool->add_flag("--tls", tls);
  auto* sim_traffic = sim->add_subcommand("traffic", "Synthesize labelled packet records");
  std::string profile_s = "mixed";
  int flows = 100;
  sim_traffic->add_option("--profile", profile_s, "mining|benign|mixed");
  sim_traffic->add_option("--flows", flows);
  sim_traffic->add_option("--seed", seed);
  sim_traffic->add_option("--out", out_path, "Packet records NDJSON")->required();
  sim_traffic->add_option("--labels", labels_path, "flow,label CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = PipelineConfig::from_json(read_json(config_path));

    if (*ingest) {
      if (window_size) cfg.segment.window_size = window_size;
      if (flow_timeout > 0) cfg.segment.flow_timeout = flow_timeout;
      std::vector<PacketRecord> records;
      for (const auto& path : in_paths) {
        auto part = load_records(path, format, strict);
        records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      auto windows = segment_flows(records, cfg.segment);
      if (!labels_path.empty()) {
        auto lin = open_in(labels_path);
        const auto missing = attach_labels(windows, read_labels_csv(lin));
        if (missing) std::cerr << "warning: " << missing << " window(s) without a label\n";
      }
      auto out = open_out(out_path);
      for (const auto& w : windows) out << window_to_json_line(w) << '\n';
      const auto dist = length_distribution(records, {{105, 110}, {36, 80}});
      std::cout << json{{"records", records.size()},
                        {"windows", windows.size()},
                        {"fraction_105_110", dist[0]},
                        {"fraction_36_80", dist[1]}}
                       .dump()
                << '\n';
      return kOk;
    }

    if (*feats) {
      if (list_specs) {
        for (const auto& n : spec_names(default_catalog())) std::cout << n << '\n';
        return kOk;
      }
      if (in_path.empty() || out_path.empty()) throw UsageError("features needs a windows file and --out");
      std::vector<std::string> names;
      if (specs_arg != "default") {
        if (!specs_arg.empty() && std::filesystem::is_regular_file(specs_arg))
          specs_file = specs_arg;
        else
          names = split_list(specs_arg);
      }
      if (!specs_file.empty()) names = read_name_list(specs_file);
      if (names.empty() && specs_arg.empty()) names = cfg.feature_specs;
      std::vector<FeatureSpec> specs;
      if (names.empty()) {
        specs = default_catalog();
      } else {
        for (const auto& n : names) {
          try {
            specs.push_back(FeatureSpec::parse(n));
          } catch (const std::exception& e) {
            throw UsageError(std::string("bad feature spec: ") + e.what());
          }
        }
      }
      auto win = open_in(in_path);
      const auto windows = read_windows(win);
      auto out = open_out(out_path);
      write_matrix_csv(out, build_matrix(windows, specs));
      return kOk;
    }

    if (*sel) {
      auto in = open_in(in_path);
      const auto m = read_matrix_csv(in);
      const auto result = select_features(m, targets_for(m, task_of(task_s)), alpha);
      auto out = open_out(out_path);
      for (const auto& n : result.selected) out << n << '\n';
      if (!matrix_out.empty()) {
        auto mout = open_out(matrix_out);
        write_matrix_csv(mout, m.select_columns(result.selected));
      }
      if (!report_path.empty()) {
        auto rep = open_out(report_path);
        rep << "feature,p,p_adj,selected\n";
        for (std::size_t i = 0; i < m.names.size(); ++i)
          rep << m.names[i] << ',' << result.report[i].p << ',' << result.report[i].p_adj << ','
              << (result.report[i].selected ? 1 : 0) << '\n';
      }
      std::cerr << result.selected.size() << " of " << m.names.size() << " features selected\n";
      return kOk;
    }

    if (*train_cmd) {
      const Task task = task_of(task_s);
      auto in = open_in(in_path);
      auto m = read_matrix_csv(in);
      if (!select_path.empty()) m = m.select_columns(read_name_list(select_path));
      Hyperparams hp = Hyperparams::detector_defaults();
      if (!params_path.empty()) hp = Hyperparams::from_json(read_json(params_path), hp);
      if (rounds > 0) hp.num_rounds = rounds;
      if (seed >= 0) hp.seed = static_cast<std::uint64_t>(seed);
      hp.validate();
      const auto y = targets_for(m, task);
      const int k = task == Task::binary ? 2 : kMiningClassCount;
      auto model = train(m, y, hp, task, k);
      if (top_k > 0) {
        m = m.select_columns(top_k_by_importance(model.feature_importance(), top_k));
        model = train(m, y, hp, task, k);
      }
      model.save(out_path);
      if (!importance_path.empty()) {
        auto imp = open_out(importance_path);
        imp << "feature,importance\n";
        for (const auto& r : model.feature_importance()) imp << r.name << ',' << r.score << '\n';
      }
      json summary{{"rounds", model.rounds()},
                   {"features", model.feature_names.size()},
                   {"final_training_loss", model.training_loss.empty() ? 0.0 : model.training_loss.back()}};
      if (cv_folds > 1) {
        const auto cv = cross_validate(m.values, y, m.names, hp, task, k, cv_folds, hp.seed);
        if (task == Task::binary)
          summary["cv"] = {{"precision", cv.mean.precision}, {"recall", cv.mean.recall},
                           {"f1", cv.mean.f1},               {"auc", cv.mean.auc}};
        else
          summary["cv"] = {{"accuracy", cv.mean.accuracy}, {"mlogloss", cv.mean.mlogloss}};
      }
      std::cout << summary.dump() << '\n';
      return kOk;
    }

    if (*predict) {
      const auto model = BoostedEnsemble::load(model_path);
      auto in = open_in(in_path);
      const auto m = read_matrix_csv(in);
      const auto proba = model.predict_proba(m);
      auto out = open_out(out_path);
      out.precision(17);
      if (model.task == Task::binary) {
        out << "window_id,label,score\n";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          const auto& lab = m.labels[static_cast<std::size_t>(i)];
          out << m.ids[static_cast<std::size_t>(i)] << ',' << (lab ? to_string(*lab) : "") << ','
              << proba(i, 0) << '\n';
        }
      } else {
        out << "window_id,label,predicted";
        for (int c = 0; c < model.num_class; ++c) out << ",p_" << to_string(coin_from_index(c));
        out << '\n';
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          const auto& lab = m.labels[static_cast<std::size_t>(i)];
          Eigen::Index arg = 0;
          proba.row(i).maxCoeff(&arg);
          out << m.ids[static_cast<std::size_t>(i)] << ',' << (lab ? to_string(*lab) : "") << ','
              << to_string(coin_from_index(static_cast<int>(arg)));
          for (int c = 0; c < model.num_class; ++c) out << ',' << proba(i, c);
          out << '\n';
        }
      }
      return kOk;
    }

    if (*evaluate) {
      const auto samples = labelled_samples(read_scores(in_path));
      const auto c = confusion_and_prf(samples, threshold);
      const auto roc = roc_auc(samples);
      if (!confusion_path.empty()) {
        auto out = open_out(confusion_path);
        out << "actual,predicted_benign,predicted_mining\n"
            << "benign," << c.tn << ',' << c.fp << '\n'
            << "mining," << c.fn << ',' << c.tp << '\n';
      }
      if (!roc_path.empty()) {
        auto out = open_out(roc_path);
        out << "threshold,fpr,tpr\n";
        for (const auto& p : roc.points) out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
      }
      std::cout << json{{"threshold", threshold}, {"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn},
                        {"fn", c.fn}, {"precision", c.precision}, {"recall", c.recall},
                        {"f1", c.f1}, {"auc", roc.auc}}
                       .dump()
                << '\n';
      return kOk;
    }

    if (*tune) {
      auto policy = parse_policy(policy_s);
      if (!policy) throw UsageError("--policy must be f1 or sensitivity");
      const auto samples = labelled_samples(read_scores(in_path));
      const auto table = sweep_thresholds(samples, step);
      const auto p = pick_threshold(table, *policy, floor_ratio);
      if (!table_path.empty()) {
        auto out = open_out(table_path);
        out << "threshold,precision,recall,f1\n";
        for (const auto& r : table) out << r.threshold << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
      }
      std::cout << json{{"policy", to_string(p.kind)}, {"floor", p.f1_floor_ratio},
                        {"threshold", p.threshold},   {"precision", p.precision},
                        {"recall", p.recall},         {"f1", p.f1},
                        {"max_f1", p.max_f1},         {"table", table_path.empty() ? json(nullptr) : json(table_path)}}
                       .dump()
                << '\n';
      return kOk;
    }

    if (*det) {
      if (!model_path.empty()) cfg.model_path = model_path;
      if (det_threshold) cfg.threshold = *det_threshold;
      if (!journal_path.empty()) cfg.journal_path = journal_path;
      if (!update_mode_s.empty()) {
        auto m = parse_update_mode(update_mode_s);
        if (!m) throw UsageError("--update-mode must be realtime or batch");
        cfg.update_mode = *m;
      }
      if (min_pos > 0) cfg.min_positive_windows = min_pos;
      if (no_probe) cfg.probing = false;
      if (cfg.model_path.empty()) throw UsageError("detect needs --model or model_path in --config");
      cfg.validate();
      const auto model = BoostedEnsemble::load(cfg.model_path);
      stage1_specs(model, cfg);  // fail on a feature mismatch before reading traffic
      const auto records = load_records(in_path, format, strict);
      std::optional<LabelMap> labels;
      if (!labels_path.empty()) {
        auto lin = open_in(labels_path);
        labels = read_labels_csv(lin);
      }
      std::optional<BlacklistStore> store;
      if (!cfg.journal_path.empty()) store.emplace(cfg.journal_path, cfg.update_mode);
      const auto now = utc_now();
      auto report = detect(records, model, cfg, store ? &*store : nullptr, now, labels ? &*labels : nullptr);
      // A one-shot run is its own batch window: staged entries are flushed on exit.
      if (store && store->mode() == UpdateMode::batch && store->staged() > 0) {
        try {
          store->flush(now);
        } catch (const std::exception& e) {
          report.errors.push_back(std::string("blacklist flush: ") + e.what());
        }
      }
      if (!windows_out.empty()) {
        auto out = open_out(windows_out);
        for (const auto& w : report.windows) out << DetectionReport::window_json(w).dump() << '\n';
      }
      const auto text = report.to_json().dump(2);
      if (out_path.empty()) {
        std::cout << text << '\n';
      } else {
        auto out = open_out(out_path);
        out << text << '\n';
      }
      for (const auto& e : report.errors) std::cerr << "probe stage: " << e << '\n';
      return report.errors.empty() ? kOk : kProbePartial;
    }

    if (*probe) {
      ProbeConfig pc = cfg.probe;
      if (!probe_config_path.empty()) pc = ProbeConfig::from_json(read_json(probe_config_path));
      std::vector<ProbeTarget> targets;
      try {
        targets = parse_targets(slurp(targets_path));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto verdicts = probe_batch(targets, pc);
      if (out_path.empty()) {
        write_verdicts(std::cout, verdicts);
      } else {
        auto out = open_out(out_path);
        write_verdicts(out, verdicts);
      }
      return kOk;
    }

    if (*bl) {
      BlacklistStore store(journal_path);
      if (*bl_show) {
        for (const auto& e : store.entries()) std::cout << e.to_json().dump() << '\n';
      } else if (*bl_export) {
        std::optional<std::chrono::seconds> max_age;
        if (!max_age_s.empty()) {
          try {
            max_age = parse_duration(max_age_s);
          } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
          }
        }
        for (const auto& line : store.export_list(max_age, utc_now())) std::cout << line << '\n';
      } else {
        store.compact();
        std::cerr << store.entries().size() << " entries after compaction\n";
      }
      return kOk;
    }

    if (*sim_pool) {
      auto variant = parse_variant(variant_s);
      if (!variant) throw UsageError("--variant must be btc, xmr, eth or webmine");
      PoolBehavior behavior;
      try {
        behavior = PoolBehavior::parse(behavior_s);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      if (port < 0 || port > 65535) throw UsageError("--port out of range");
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);  // server threads inherit the mask
      auto server = serve_pool(*variant, behavior, host, static_cast<std::uint16_t>(port), tls);
      std::cout << "listening on " << server->endpoint() << " (" << to_string(*variant) << ", "
                << behavior.to_string() << (tls ? ", tls" : "") << ")" << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      server->stop();
      for (const auto& line : server->received()) std::cerr << "recv: " << line << '\n';
      return kOk;
    }

    if (*sim_traffic) {
      SynthProfile profile;
      auto kind = SynthProfile::parse_kind(profile_s);
      if (!kind) throw UsageError("--profile must be mining, benign or mixed");
      profile.kind = *kind;
      if (seed >= 0) profile.seed = static_cast<std::uint64_t>(seed);
      if (flows < 1) throw UsageError("--flows must be >= 1");
      const auto corpus = synthesize(profile, flows);
      auto out = open_out(out_path);
      write_records_ndjson(out, corpus.records);
      if (!labels_path.empty()) {
        auto lab = open_out(labels_path);
        write_labels_csv(lab, corpus.labels);
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
