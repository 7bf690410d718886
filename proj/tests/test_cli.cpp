#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

using namespace cryptocatch;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("cryptocatch_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  CliResult run(const std::string& args) const {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && '" CRYPTOCATCH_CLI "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path dir;
};

#define EXPECT_RUN_OK(r) EXPECT_EQ((r).code, 0) << (r).err

}  // namespace

TEST_F(Cli, OfflineWorkflow) {
  EXPECT_RUN_OK(run("sim traffic --profile mixed --flows 200 --seed 5 --out c.ndjson --labels l.csv"));
  const auto ingest = run("ingest c.ndjson --labels l.csv --out w.ndjson");
  EXPECT_RUN_OK(ingest);
  EXPECT_GT(json::parse(ingest.out)["windows"].get<int>(), 500);
  EXPECT_RUN_OK(run("features w.ndjson --out f.csv"));
  EXPECT_RUN_OK(run("select f.csv --out s.txt --matrix-out r.csv --report rep.csv"));
  EXPECT_FALSE(slurp(dir / "s.txt").empty());
  EXPECT_EQ(slurp(dir / "rep.csv").rfind("feature,p,p_adj,selected", 0), 0u);

  const auto train = run("train r.csv --rounds 20 --out m.json --importance imp.csv");
  EXPECT_RUN_OK(train);
  EXPECT_TRUE(fs::exists(dir / "m.json"));
  // The full matrix works too: the model picks its columns by name.
  EXPECT_RUN_OK(run("predict f.csv --model m.json --out p.csv"));
  EXPECT_EQ(slurp(dir / "p.csv").rfind("window_id,label,score", 0), 0u);

  const auto eval = run("evaluate p.csv --threshold 0.5");
  EXPECT_RUN_OK(eval);
  EXPECT_GT(json::parse(eval.out)["f1"].get<double>(), 0.95);
  const auto tune = run("tune-threshold p.csv --policy sensitivity --table sweep.csv");
  EXPECT_RUN_OK(tune);
  const auto policy = json::parse(tune.out);
  EXPECT_GE(policy["recall"].get<double>(), 0.99);
  EXPECT_GE(policy["f1"].get<double>(), 0.99 * policy["max_f1"].get<double>());

  const auto det = run("detect c.ndjson --model m.json --no-probe --threshold 0.5 --labels l.csv --windows-out dw.ndjson");
  EXPECT_RUN_OK(det);
  const auto report = json::parse(det.out);
  EXPECT_GT(report["positive_windows"].get<int>(), 0);
  EXPECT_EQ(report["probes_issued"], 0);
  EXPECT_GE(report["summary"]["recall"].get<double>(), 0.99);
}

TEST_F(Cli, DetectProbesAndUpdatesBlacklist) {
  EXPECT_RUN_OK(run("sim traffic --profile mixed --flows 300 --seed 6 --out train.ndjson --labels train.csv"));
  EXPECT_RUN_OK(run("ingest train.ndjson --labels train.csv --out w.ndjson"));
  EXPECT_RUN_OK(run("features w.ndjson --out f.csv"));
  EXPECT_RUN_OK(run("train f.csv --out m.json"));

  auto scenario = fixtures::planted_scenario(40, 120, 6, 61);
  {
    std::ofstream out(dir / "live.ndjson");
    write_records_ndjson(out, scenario->corpus.records);
  }
  const auto det = run("detect live.ndjson --model m.json --threshold 0.3 --journal bl.ndjson --update-mode batch");
  EXPECT_RUN_OK(det);
  const auto report = json::parse(det.out);
  std::vector<std::string> confirmed = report["confirmed"];
  EXPECT_EQ(confirmed, scenario->planted());

  // Batch staging is flushed when the one-shot run exits.
  const auto exported = run("blacklist export --journal bl.ndjson");
  EXPECT_RUN_OK(exported);
  std::string want;
  for (const auto& e : scenario->planted()) want += e + "\n";
  EXPECT_EQ(exported.out, want);

  const auto again = run("detect live.ndjson --model m.json --threshold 0.3 --journal bl.ndjson");
  EXPECT_RUN_OK(again);
  EXPECT_EQ(json::parse(again.out)["confirmed"], report["confirmed"]);
  EXPECT_LT(json::parse(again.out)["probes_issued"].get<int>(), report["probes_issued"].get<int>());
}

TEST_F(Cli, ProbeTargets) {
  auto pool = serve_pool(ProtocolVariant::StratumETH, PoolBehavior::parse("success"));
  auto html = serve_html();
  std::ofstream(dir / "t.txt") << "# loopback only\n" << pool->endpoint() << "\n" << html->endpoint() << "\n";
  const auto r = run("probe --targets t.txt");
  EXPECT_RUN_OK(r);
  std::istringstream lines(r.out);
  std::vector<ProbeVerdict> verdicts;
  for (std::string l; std::getline(lines, l);) verdicts.push_back(ProbeVerdict::from_json(json::parse(l)));
  ASSERT_EQ(verdicts.size(), 2u);
  EXPECT_EQ(verdicts[0].outcome, Outcome::PoolPositive);
  EXPECT_EQ(verdicts[0].variant, ProtocolVariant::StratumETH);
  EXPECT_EQ(verdicts[1].outcome, Outcome::PoolNegative);
}

TEST_F(Cli, BlacklistShowAndCompact) {
  {
    BlacklistStore store((dir / "bl.ndjson").string());
    ProbeVerdict v;
    v.target = ProbeTarget::parse("127.0.0.1:3333");
    v.outcome = Outcome::PoolPositive;
    v.variant = ProtocolVariant::StratumBTC;
    v.kind = ResponseKind::success;
    const auto t = parse_utc("2024-01-01T00:00:00Z");
    store.confirm(v, t);
    store.confirm(v, t + std::chrono::hours(1));
  }
  const auto show = run("blacklist show --journal bl.ndjson");
  EXPECT_RUN_OK(show);
  EXPECT_EQ(json::parse(show.out)["confirm_count"], 2);
  EXPECT_RUN_OK(run("blacklist compact --journal bl.ndjson"));
  const auto text = slurp(dir / "bl.ndjson");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(run("blacklist export --journal bl.ndjson --max-age 30d").out, "");
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("evaluate x.csv --threshold 1.5").code, 1);
  EXPECT_EQ(run("predict missing.csv --model missing.json --out p.csv").code, 2);
  std::ofstream(dir / "bad.ndjson") << "not a record\n";
  EXPECT_EQ(run("ingest bad.ndjson --strict --out w.ndjson").code, 2);
  EXPECT_EQ(run("ingest bad.ndjson --out w.ndjson").code, 0);
  EXPECT_EQ(run("probe --targets nowhere.txt").code, 2);
}
