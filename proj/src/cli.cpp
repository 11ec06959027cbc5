#include "rhl/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include "rhl/csv.hpp"
#include "rhl/error.hpp"
#include "rhl/parallel.hpp"
#include "rhl/predict.hpp"

namespace rhl {

namespace {

std::string g_stage = "startup";

[[noreturn]] void config_fail(const std::string& msg) { fail(ErrorCode::ConfigError, msg); }

void check_keys(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
  for (auto&& [k, v] : t) {
    if (!allowed.count(std::string(k.str())))
      config_fail("unknown key '" + (where.empty() ? "" : where + ".") + std::string(k.str()) + "'");
  }
}

const toml::table* section(const toml::table& root, const char* name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) config_fail("'" + std::string(name) + "' must be a table");
  return t;
}

struct Reader {
  const toml::table* t;
  std::string where;

  const toml::node* get(const char* key) const { return t ? t->get(key) : nullptr; }
  std::string name(const char* key) const { return where.empty() ? key : where + "." + key; }

  void integer(const char* key, int& out) const {
    if (const auto* n = get(key)) {
      auto v = n->value_exact<std::int64_t>();
      if (!v) config_fail(name(key) + " must be an integer");
      out = static_cast<int>(*v);
    }
  }
  void u64(const char* key, std::uint64_t& out) const {
    if (const auto* n = get(key)) {
      auto v = n->value_exact<std::int64_t>();
      if (!v || *v < 0) config_fail(name(key) + " must be a non-negative integer");
      out = static_cast<std::uint64_t>(*v);
    }
  }
  void real(const char* key, double& out) const {
    if (const auto* n = get(key)) {
      if (n->is_integer()) {
        out = static_cast<double>(*n->value_exact<std::int64_t>());
      } else if (auto v = n->value_exact<double>()) {
        out = *v;
      } else {
        config_fail(name(key) + " must be a number");
      }
    }
  }
  void boolean(const char* key, bool& out) const {
    if (const auto* n = get(key)) {
      auto v = n->value_exact<bool>();
      if (!v) config_fail(name(key) + " must be true or false");
      out = *v;
    }
  }
  void string(const char* key, std::string& out) const {
    if (const auto* n = get(key)) {
      auto v = n->value_exact<std::string>();
      if (!v) config_fail(name(key) + " must be a string");
      out = *v;
    }
  }
  void path(const char* key, const std::filesystem::path& base, std::optional<std::filesystem::path>& out) const {
    if (get(key)) {
      std::string s;
      string(key, s);
      std::filesystem::path p(s);
      out = p.is_relative() && !base.empty() ? base / p : p;
    }
  }
  void strings(const char* key, std::vector<std::string>& out) const {
    if (const auto* n = get(key)) {
      const auto* a = n->as_array();
      if (!a) config_fail(name(key) + " must be an array of strings");
      out.clear();
      for (const auto& e : *a) {
        auto v = e.value_exact<std::string>();
        if (!v) config_fail(name(key) + " must be an array of strings");
        out.push_back(*v);
      }
    }
  }
  void reals(const char* key, std::vector<double>& out) const {
    if (const auto* n = get(key)) {
      const auto* a = n->as_array();
      if (!a) config_fail(name(key) + " must be an array of numbers");
      out.clear();
      for (const auto& e : *a) {
        if (e.is_integer()) {
          out.push_back(static_cast<double>(*e.value_exact<std::int64_t>()));
        } else if (auto v = e.value_exact<double>()) {
          out.push_back(*v);
        } else {
          config_fail(name(key) + " must be an array of numbers");
        }
      }
    }
  }
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::filesystem::path input(const std::optional<std::filesystem::path>& configured, const RunConfig& c,
                            const char* fallback) {
  const auto p = configured ? *configured : c.io.out / fallback;
  if (!std::filesystem::exists(p)) fail(ErrorCode::IoError, "input file '" + p.string() + "' does not exist");
  return p;
}

void prepare_out(const RunConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.io.out, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory '" + c.io.out.string() + "': " + ec.message());
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void configure_logging() {
  auto logger = spdlog::get("rhl");
  if (!logger) logger = spdlog::stderr_color_mt("rhl");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("RHL_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

void RunConfig::resolve() {
  simulate.seed = seed;
  simulate.grid_size = io.grid_size;
  if (threads < 1) config_fail("threads must be >= 1");
  if (io.grid_size < 2) config_fail("io.grid_size must be >= 2");
  if (!(io.t0 < io.t1)) config_fail("io.t0 must be below io.t1");
  if (!(mfpca.pve1 > 0.0 && mfpca.pve1 <= 1.0 && mfpca.pve2 > 0.0 && mfpca.pve2 <= 1.0))
    config_fail("mfpca.pve1 and mfpca.pve2 must lie in (0, 1]");
  if (predict.K < 0 || predict.L < 0) config_fail("predict.K and predict.L must be >= 0");
  if (!(predict.threshold > 0.0 && predict.threshold < 1.0)) config_fail("predict.threshold must lie in (0, 1)");
  if (!(predict.holdout_fraction >= 0.0 && predict.holdout_fraction < 1.0))
    config_fail("predict.holdout_fraction must lie in [0, 1)");
  if (fit.tol <= 0.0 || fit.max_iter < 1) config_fail("fit.tol must be > 0 and fit.max_iter >= 1");
  try {
    simulate.validate();
  } catch (const Error& e) {
    config_fail(e.what());
  }
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    config_fail("config is not valid TOML: " + std::string(e.description()));
  }
  check_keys(root, "", {"seed", "threads", "simulate", "fit", "mfpca", "predict", "io"});
  RunConfig c;
  Reader top{&root, ""};
  top.u64("seed", c.seed);
  top.integer("threads", c.threads);

  if (const auto* t = section(root, "simulate")) {
    check_keys(*t, "simulate", {"I", "J", "K", "L", "mu_const", "level1_eigenvalues", "level2_eigenvalues", "sigma",
                                "cluster_scale", "clamp"});
    Reader r{t, "simulate"};
    r.integer("I", c.simulate.I);
    r.integer("J", c.simulate.J);
    r.integer("K", c.simulate.K);
    r.integer("L", c.simulate.L);
    r.real("mu_const", c.simulate.mu_const);
    r.reals("level1_eigenvalues", c.simulate.level1_eigenvalues);
    r.reals("level2_eigenvalues", c.simulate.level2_eigenvalues);
    r.real("sigma", c.simulate.sigma);
    r.string("cluster_scale", c.simulate.cluster_scale);
    r.boolean("clamp", c.simulate.clamp);
  }
  if (const auto* t = section(root, "fit")) {
    check_keys(*t, "fit", {"x", "z", "tol", "max_iter"});
    Reader r{t, "fit"};
    r.strings("x", c.fit.x);
    r.strings("z", c.fit.z);
    r.real("tol", c.fit.tol);
    r.integer("max_iter", c.fit.max_iter);
  }
  if (const auto* t = section(root, "mfpca")) {
    check_keys(*t, "mfpca", {"pve1", "pve2"});
    Reader r{t, "mfpca"};
    r.real("pve1", c.mfpca.pve1);
    r.real("pve2", c.mfpca.pve2);
  }
  if (const auto* t = section(root, "predict")) {
    check_keys(*t, "predict",
               {"K", "L", "threshold", "compare", "holdout_fraction", "students_per_unit", "score_effect"});
    Reader r{t, "predict"};
    r.integer("K", c.predict.K);
    r.integer("L", c.predict.L);
    r.real("threshold", c.predict.threshold);
    r.boolean("compare", c.predict.compare);
    r.real("holdout_fraction", c.predict.holdout_fraction);
    r.integer("students_per_unit", c.predict.students_per_unit);
    r.real("score_effect", c.predict.score_effect);
  }
  if (const auto* t = section(root, "io")) {
    check_keys(*t, "io", {"out", "events", "compensators", "scores", "students", "columns", "grid_size", "t0", "t1"});
    Reader r{t, "io"};
    std::optional<std::filesystem::path> out;
    r.path("out", base, out);
    if (out) c.io.out = *out;
    r.path("events", base, c.io.events);
    r.path("compensators", base, c.io.compensators);
    r.path("scores", base, c.io.scores);
    r.path("students", base, c.io.students);
    r.integer("grid_size", c.io.grid_size);
    r.real("t0", c.io.t0);
    r.real("t1", c.io.t1);
    if (const auto* cols = section(*t, "columns")) {
      check_keys(*cols, "io.columns",
                 {"cluster_id", "unit_id", "time", "multiplicity", "enrollment", "start", "stop", "status", "enum"});
      for (auto&& [k, v] : *cols) {
        auto s = v.value_exact<std::string>();
        if (!s) config_fail("io.columns." + std::string(k.str()) + " must be a string");
        c.io.columns[std::string(k.str())] = *s;
      }
    }
  }
  c.resolve();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_fail("cannot read config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
  auto opt = [](const std::optional<std::filesystem::path>& p) -> nlohmann::json {
    if (p) return p->generic_string();
    return nullptr;
  };
  nlohmann::json sim = to_json(c.simulate);
  sim.erase("seed");
  sim.erase("grid_size");
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"simulate", sim},
          {"fit", {{"x", c.fit.x}, {"z", c.fit.z}, {"tol", c.fit.tol}, {"max_iter", c.fit.max_iter}}},
          {"mfpca", {{"pve1", c.mfpca.pve1}, {"pve2", c.mfpca.pve2}}},
          {"predict",
           {{"K", c.predict.K},
            {"L", c.predict.L},
            {"threshold", c.predict.threshold},
            {"compare", c.predict.compare},
            {"holdout_fraction", c.predict.holdout_fraction},
            {"students_per_unit", c.predict.students_per_unit},
            {"score_effect", c.predict.score_effect}}},
          {"io",
           {{"out", c.io.out.generic_string()},
            {"events", opt(c.io.events)},
            {"compensators", opt(c.io.compensators)},
            {"scores", opt(c.io.scores)},
            {"students", opt(c.io.students)},
            {"columns", c.io.columns},
            {"grid_size", c.io.grid_size},
            {"t0", c.io.t0},
            {"t1", c.io.t1}}}};
}

void cmd_simulate(const RunConfig& c) {
  g_stage = "simulate";
  prepare_out(c);
  StudyOptions opts{c.mfpca.pve1, c.mfpca.pve2, AGOptions{c.fit.tol, c.fit.max_iter}};
  const auto study = run_simulation_study(c.simulate, opts);
  write_raw_events(c.io.out / "events.csv", to_unit_events(study.processes));
  write_curves_csv(c.io.out / "true_curves.csv", study.truth);
  auto report = study.report;
  report["run_config"] = to_json(c);
  write_json(c.io.out / "study_report.json", report);
  spdlog::info("simulate: {} units, true ({}, {}) reconstructed ({}, {}) components", study.processes.size(),
               study.true_mfpca.level1.count(), study.true_mfpca.level2.count(),
               study.reconstructed_mfpca.level1.count(), study.reconstructed_mfpca.level2.count());
}

void cmd_fit(const RunConfig& c) {
  g_stage = "fit";
  const auto events = input(c.io.events, c, "events.csv");
  prepare_out(c);
  EventSchema schema;
  schema.columns = c.io.columns;
  auto data = parse_event_table(events, schema, ObservationWindow{c.io.t0, c.io.t1});
  CovariateSpec spec{c.fit.x, c.fit.z};
  spec.validate(data);
  const auto grid = uniform_grid(0.0, 1.0, static_cast<std::size_t>(c.io.grid_size));
  auto r = refit(std::move(data), spec, grid, AGOptions{c.fit.tol, c.fit.max_iter});
  const auto& d = r.data;

  std::ofstream base(c.io.out / "baseline.csv", std::ios::binary);
  if (!base) fail(ErrorCode::IoError, "cannot write baseline.csv");
  base << "curve,t,value\n";
  for (std::size_t k = 0; k < r.step.jump_times.size(); ++k)
    base << "step," << csv::format_double(d.to_original(r.step.jump_times[k])) << ','
         << csv::format_double(r.step.cum_values[k]) << '\n';
  for (std::size_t g = 0; g < r.smoothed.grid.size(); ++g)
    base << "smoothed," << csv::format_double(d.to_original(r.smoothed.grid[g])) << ','
         << csv::format_double(r.smoothed.values[g]) << '\n';
  base.close();

  CompensatorSet out = r.compensators;
  for (auto& t : out.grid) t = d.to_original(t);
  write_curves_csv(c.io.out / "compensators.csv", out);

  const auto residuals = martingale_residuals(d, r.compensators);
  double resid_sum = 0.0;
  for (const auto& u : residuals) resid_sum += u.residual;
  const auto& f = r.fit;
  write_json(c.io.out / "ag_fit.json",
             {{"names", f.spec.names()},
              {"coefficients", to_vec(f.coefficients())},
              {"standard_errors", to_vec(f.standard_errors())},
              {"p_values", to_vec(f.p_values())},
              {"gradient", to_vec(f.gradient)},
              {"loglik", f.loglik},
              {"iterations", f.iterations},
              {"converged", f.converged},
              {"tie_method", f.tie_method},
              {"rows", d.rows.size()},
              {"units", residuals.size()},
              {"events", d.event_rows()},
              {"baseline_jumps", r.step.jump_times.size()},
              {"martingale_residual_sum", resid_sum},
              {"run_config", to_json(c)}});
}

void cmd_decompose(const RunConfig& c) {
  g_stage = "decompose";
  const auto path = input(c.io.compensators, c, "compensators.csv");
  prepare_out(c);
  const auto curves = canonical_order(read_curves_csv(path));
  const auto result = mfpca(curves, c.mfpca.pve1, c.mfpca.pve2);
  write_eigenfunctions_csv(c.io.out / "eigenfunctions.csv", result);
  write_scores_csv(c.io.out / "scores.csv", result);
  write_perturbations_csv(c.io.out / "perturbations.csv", result);
  auto report = to_json(result);
  report["run_config"] = to_json(c);
  write_json(c.io.out / "mfpca_report.json", report);
}

void cmd_predict(const RunConfig& c) {
  g_stage = "predict";
  const auto scores = read_scores_csv(input(c.io.scores, c, "scores.csv"));
  prepare_out(c);

  auto K = static_cast<std::size_t>(c.predict.K);
  auto L = static_cast<std::size_t>(c.predict.L);
  nlohmann::json notes = nlohmann::json::array();
  if (K > scores.K) {
    notes.push_back("K reduced from " + std::to_string(K) + " to the " + std::to_string(scores.K) + " retained");
    K = scores.K;
  }
  if (L > scores.L) {
    notes.push_back("L reduced from " + std::to_string(L) + " to the " + std::to_string(scores.L) + " retained");
    L = scores.L;
  }
  for (const auto& n : notes) spdlog::warn("{}", n.get<std::string>());

  PredictionDataset students;
  nlohmann::json truth = nullptr;
  if (c.io.students) {
    students = parse_students_csv(input(c.io.students, c, "students.csv"));
  } else {
    CohortConfig cohort{c.predict.students_per_unit, c.predict.score_effect, c.seed};
    auto syn = synthesize_cohort(scores, K, L, cohort);
    write_students_csv(c.io.out / "students.csv", syn.students);
    students = parse_students_csv(c.io.out / "students.csv");
    truth = {{"parameters", syn.names}, {"coefficients", to_vec(syn.true_coefficients)}};
  }

  const auto design = build_design(students, scores, K, L);
  const LogisticOptions opts;
  const auto fit = fit_logistic(design, opts);
  write_logistic_report_csv(c.io.out / "logistic_report.csv", fit);

  nlohmann::json metrics;
  metrics["K"] = K;
  metrics["L"] = L;
  metrics["notes"] = notes;
  metrics["fit"] = to_json(fit);
  metrics["in_sample"] = to_json(evaluate(fit, design, c.predict.threshold));
  if (c.predict.compare) metrics["comparison"] = to_json(compare_models(design, without_scores(design), c.predict.threshold, opts));
  if (c.predict.holdout_fraction > 0.0) {
    const auto [train, test] = split_holdout(design, c.predict.holdout_fraction, c.seed);
    const auto held = fit_logistic(train, opts);
    metrics["holdout"] = {{"fraction", c.predict.holdout_fraction},
                          {"train_rows", train.X.rows()},
                          {"test_rows", test.X.rows()},
                          {"metrics", to_json(evaluate(held, test, c.predict.threshold))}};
  }
  metrics["true_coefficients"] = truth;
  metrics["run_config"] = to_json(c);
  write_json(c.io.out / "metrics.json", metrics);
}

void cmd_pipeline(const RunConfig& c) {
  RunConfig staged = c;
  cmd_simulate(staged);
  staged.io.events = c.io.out / "events.csv";
  cmd_fit(staged);
  staged.io.compensators = c.io.out / "compensators.csv";
  cmd_decompose(staged);
  staged.io.scores = c.io.out / "scores.csv";
  cmd_predict(staged);
}

int run_cli(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Recurrent-event compensators, multilevel FPCA and dropout prediction"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  app.add_option("--config", config_path, "TOML run configuration");
  app.add_option("--seed", seed, "root random seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads");
  auto* sim = app.add_subcommand("simulate", "simulate events and run the refit study");
  auto* fit = app.add_subcommand("fit", "fit the AG model and reconstruct compensators");
  auto* dec = app.add_subcommand("decompose", "multilevel FPCA of compensator curves");
  auto* pre = app.add_subcommand("predict", "logistic regression with functional scores");
  auto* pipe = app.add_subcommand("pipeline", "all stages in sequence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto report = [](const std::string& stage, const std::string& code, int exit_code, const std::string& msg) {
    nlohmann::json rec = {{"error", {{"stage", stage}, {"code", code}, {"exit_code", exit_code}, {"message", msg}}}};
    std::cerr << rec.dump() << std::endl;
    return exit_code;
  };

  try {
    g_stage = "config";
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) c.seed = *seed;
    if (!out.empty()) c.io.out = out;
    if (threads) c.threads = *threads;
    c.resolve();
    set_threads(c.threads);

    if (sim->parsed()) cmd_simulate(c);
    if (fit->parsed()) cmd_fit(c);
    if (dec->parsed()) cmd_decompose(c);
    if (pre->parsed()) cmd_predict(c);
    if (pipe->parsed()) cmd_pipeline(c);
  } catch (const Error& e) {
    return report(g_stage, std::string(error_name(e.code())), exit_code_for(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report(g_stage, std::string(error_name(ErrorCode::IoError)), exit_code_for(ErrorCode::IoError), e.what());
  } catch (const std::exception& e) {
    return report(g_stage, "Internal", 3, e.what());
  }
  return 0;
}

}  // namespace rhl
