#include <doctest.h>

#include <iostream>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "rhl/cli.hpp"
#include "rhl/compensator.hpp"
#include "rhl/csv.hpp"
#include "rhl/error.hpp"
#include "rhl/mfpca.hpp"

using namespace rhl;
using rhl::testing::scratch_dir;
using rhl::testing::slurp;
using rhl::testing::spit;

namespace {

struct Captured {
  int code;
  std::string err;
};

Captured run(std::vector<std::string> args) {
  args.insert(args.begin(), "rhl");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream err;
  auto* old = std::cerr.rdbuf(err.rdbuf());
  const int code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cerr.rdbuf(old);
  return {code, err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(slurp(p)); }

ErrorCode config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_config(R"(
seed = 7
threads = 2
[simulate]
I = 10
cluster_scale = "1"
level1_eigenvalues = [1.0, 0.5, 0.25, 0.1]
[fit]
z = ["enum"]
[mfpca]
pve1 = 0.95
[predict]
K = 1
L = 0
[io]
out = "results"
grid_size = 501
)",
                        "/base/dir");
  CHECK(c.seed == 7);
  CHECK(c.threads == 2);
  CHECK(c.simulate.I == 10);
  CHECK(c.simulate.cluster_scale == "1");
  CHECK(c.simulate.level1_eigenvalues.size() == 4);
  CHECK(c.mfpca.pve1 == 0.95);
  CHECK(c.predict.L == 0);
  CHECK(c.io.out == std::filesystem::path("/base/dir/results"));
  c.resolve();
  CHECK(c.simulate.seed == 7);
  CHECK(c.simulate.grid_size == 501);
  auto j = to_json(c);
  CHECK(j["seed"] == 7);
  CHECK(j["io"]["grid_size"] == 501);

  CHECK(config_error("bogus = 1") == ErrorCode::ConfigError);
  CHECK(config_error("[simulate]\nmu = 3") == ErrorCode::ConfigError);
  CHECK(config_error("[nope]\n") == ErrorCode::ConfigError);
  CHECK(config_error("seed = \"x\"") == ErrorCode::ConfigError);
  CHECK(config_error("seed = ") == ErrorCode::ConfigError);
  RunConfig bad;
  bad.mfpca.pve1 = 1.5;
  CHECK_THROWS_AS(bad.resolve(), Error);
}

TEST_CASE("exit codes") {
  auto dir = scratch_dir("cli_exit");
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);

  spit(dir / "bad.toml", "unknown = 1\n");
  auto cfg = run({"--config", (dir / "bad.toml").string(), "simulate"});
  CHECK(cfg.code == 1);
  auto rec = nlohmann::json::parse(cfg.err);
  CHECK(rec["error"]["code"] == "ConfigError");
  CHECK(rec["error"]["stage"] == "config");

  spit(dir / "missing.toml", "[io]\nevents = \"nowhere.csv\"\n");
  auto miss = run({"--config", (dir / "missing.toml").string(), "--out", (dir / "o1").string(), "fit"});
  CHECK(miss.code == 2);
  CHECK(nlohmann::json::parse(miss.err)["error"]["stage"] == "fit");

  spit(dir / "empty.csv", "cluster_id,unit_id,time\n");
  spit(dir / "empty.toml", "[io]\nevents = \"empty.csv\"\n");
  auto empty = run({"--config", (dir / "empty.toml").string(), "--out", (dir / "o2").string(), "fit"});
  CHECK(empty.code == 2);
  CHECK(nlohmann::json::parse(empty.err)["error"]["code"] == "EmptyDataset");
}

TEST_CASE("stage by stage on a small study") {
  auto dir = scratch_dir("cli_stages");
  spit(dir / "run.toml", R"(
seed = 5
[simulate]
I = 8
[io]
out = "out"
grid_size = 201
)");
  const auto cfgpath = (dir / "run.toml").string();
  const auto out = dir / "out";
  REQUIRE(run({"--config", cfgpath, "simulate"}).code == 0);
  for (auto f : {"events.csv", "true_curves.csv", "study_report.json"}) CHECK(std::filesystem::exists(out / f));
  auto report = read_json(out / "study_report.json");
  CHECK(report["run_config"]["seed"] == 5);
  auto truth = read_curves_csv(out / "true_curves.csv");
  CHECK(truth.units() == 32);

  const auto events_bytes = slurp(out / "events.csv");
  REQUIRE(run({"--config", cfgpath, "simulate"}).code == 0);
  CHECK(slurp(out / "events.csv") == events_bytes);
  CHECK(slurp(out / "study_report.json") == slurp(out / "study_report.json"));

  REQUIRE(run({"--config", cfgpath, "fit"}).code == 0);
  auto comp = read_curves_csv(out / "compensators.csv");
  CHECK(comp.units() == 32);
  for (Eigen::Index u = 0; u < comp.curves.rows(); ++u)
    for (Eigen::Index g = 1; g < comp.curves.cols(); ++g) CHECK(comp.curves(u, g) >= comp.curves(u, g - 1));
  auto ag = read_json(out / "ag_fit.json");
  CHECK(ag["converged"].get<bool>());
  CHECK(std::abs(ag["martingale_residual_sum"].get<double>()) <= 1e-8);

  REQUIRE(run({"--config", cfgpath, "decompose"}).code == 0);
  auto mf = read_json(out / "mfpca_report.json");
  auto ef = read_eigenfunctions_csv(out / "eigenfunctions.csv");
  const auto w = trapezoid_weights(ef.grid);
  for (int level = 1; level <= 2; ++level) {
    std::vector<std::vector<double>> fs;
    for (const auto& [key, v] : ef.functions)
      if (key.first == level) fs.push_back(v);
    CHECK(fs.size() == mf[level == 1 ? "level1" : "level2"]["count"].get<std::size_t>());
    for (std::size_t a = 0; a < fs.size(); ++a)
      for (std::size_t b = 0; b < fs.size(); ++b)
        CHECK(std::abs(weighted_inner(fs[a], fs[b], w) - (a == b ? 1.0 : 0.0)) <= 1e-6);
  }

  REQUIRE(run({"--config", cfgpath, "predict"}).code == 0);
  auto metrics = read_json(out / "metrics.json");
  CHECK(metrics.contains("comparison"));
  CHECK(metrics["in_sample"].contains("auc"));
  auto rep = csv::read(out / "logistic_report.csv");
  CHECK(rep.header.front() == "parameter");
  CHECK(rep.rows.size() == metrics["fit"]["parameters"].size());
}

TEST_CASE("null covariate spec reproduces the smoothed baseline") {
  auto dir = scratch_dir("cli_null");
  spit(dir / "run.toml", "seed = 6\n[simulate]\nI = 6\n[fit]\nz = []\n[io]\nout = \"out\"\ngrid_size = 101\n");
  const auto cfgpath = (dir / "run.toml").string();
  REQUIRE(run({"--config", cfgpath, "simulate"}).code == 0);
  REQUIRE(run({"--config", cfgpath, "fit"}).code == 0);
  auto comp = read_curves_csv(dir / "out/compensators.csv");
  auto base = csv::read(dir / "out/baseline.csv");
  std::map<double, double> smooth;
  for (const auto& r : base.rows)
    if (r[0] == "smoothed") smooth[csv::parse_double(r[1], "t")] = csv::parse_double(r[2], "v");
  for (Eigen::Index u = 0; u < comp.curves.rows(); ++u)
    for (std::size_t g = 0; g < comp.grid.size(); ++g)
      CHECK(std::abs(comp.curves(u, static_cast<Eigen::Index>(g)) - smooth.at(comp.grid[g])) <= 1e-12);
}

TEST_CASE("full variance retention and score-free prediction") {
  auto dir = scratch_dir("cli_pve");
  spit(dir / "run.toml",
       "seed = 8\n[simulate]\nI = 6\n[mfpca]\npve1 = 1.0\npve2 = 1.0\n[predict]\nK = 0\nL = 0\n"
       "[io]\nout = \"out\"\ngrid_size = 101\n");
  REQUIRE(run({"--config", (dir / "run.toml").string(), "pipeline"}).code == 0);
  auto mf = read_json(dir / "out/mfpca_report.json");
  for (auto lv : {"level1", "level2"}) {
    std::size_t positive = 0;
    for (double v : mf[lv]["all_eigenvalues"]) positive += v > 0.0;
    CHECK(mf[lv]["count"].get<std::size_t>() == positive);
  }
  auto metrics = read_json(dir / "out/metrics.json");
  REQUIRE(metrics.contains("comparison"));
  CHECK(metrics["comparison"]["delta_aic"].get<double>() == 0.0);
}

TEST_CASE("component counts are stable under grid refinement") {
  auto counts = [](int grid) {
    auto dir = scratch_dir("cli_grid" + std::to_string(grid));
    spit(dir / "run.toml", "seed = 2\n[io]\nout = \"out\"\ngrid_size = " + std::to_string(grid) + "\n");
    REQUIRE(run({"--config", (dir / "run.toml").string(), "simulate"}).code == 0);
    auto r = read_json(dir / "out/study_report.json");
    return std::array<int, 4>{r["true"]["level1_count"], r["true"]["level2_count"], r["reconstructed"]["level1_count"],
                              r["reconstructed"]["level2_count"]};
  };
  CHECK(counts(1001) == counts(2001));
}

TEST_CASE("a failing stage names itself") {
  auto dir = scratch_dir("cli_stage_fail");
  spit(dir / "run.toml", "[simulate]\nI = 1\n[io]\nout = \"out\"\ngrid_size = 101\n");
  auto r = run({"--config", (dir / "run.toml").string(), "pipeline"});
  CHECK(r.code != 0);
  auto rec = nlohmann::json::parse(r.err);
  CHECK(rec["error"]["stage"] == "simulate");
  CHECK(rec["error"]["exit_code"] == r.code);
}

TEST_CASE("events re-import equals the simulated processes") {
  auto dir = scratch_dir("cli_reimport");
  spit(dir / "run.toml", "seed = 9\n[simulate]\nI = 5\n[io]\nout = \"out\"\ngrid_size = 101\n");
  auto c = load_config(dir / "run.toml");
  c.resolve();
  REQUIRE(run({"--config", (dir / "run.toml").string(), "simulate"}).code == 0);
  auto procs = simulate_processes(c.simulate);
  auto mem = build_counting_format(to_unit_events(procs), {});
  auto disk = parse_event_table(dir / "out/events.csv", {}, {});
  REQUIRE(disk.rows.size() == mem.rows.size());
  for (std::size_t i = 0; i < mem.rows.size(); ++i) {
    CHECK(disk.rows[i].unit_id == mem.rows[i].unit_id);
    CHECK(std::abs(disk.rows[i].start - mem.rows[i].start) <= 1e-12);
    CHECK(std::abs(disk.rows[i].stop - mem.rows[i].stop) <= 1e-12);
    CHECK(disk.rows[i].event_count == mem.rows[i].event_count);
  }
}
