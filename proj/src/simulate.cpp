#include "rhl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rhl/error.hpp"

namespace rhl {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);
const double kSqrt7 = std::sqrt(7.0);

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string padded(int value, int width) {
  std::string s = std::to_string(value);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

int digits(int n) { return static_cast<int>(std::to_string(n).size()); }

SimulatedProcess make_unit(const SimulationConfig& c, const std::vector<double>& grid,
                           const std::vector<double>& lam1, const std::vector<double>& lam2, int i, int j) {
  SimulatedProcess p;
  p.cluster_index = i;
  p.unit_index = j;
  p.cluster_id = "C" + padded(i, digits(c.I));
  p.unit_id = p.cluster_id + "-U" + padded(j, digits(c.J));

  std::normal_distribution<double> normal(0.0, 1.0);
  std::mt19937_64 cluster_rng(substream_seed(c.seed, static_cast<std::uint64_t>(i), 0, Stream::ClusterScores));
  for (int k = 0; k < c.K; ++k) p.xi.push_back(std::sqrt(lam1[static_cast<std::size_t>(k)]) * normal(cluster_rng));
  std::mt19937_64 unit_rng(substream_seed(c.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                                          Stream::UnitScores));
  for (int l = 0; l < c.L; ++l) p.zeta.push_back(std::sqrt(lam2[static_cast<std::size_t>(l)]) * normal(unit_rng));
  std::mt19937_64 noise_rng(
      substream_seed(c.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), Stream::Noise));

  const double scale = c.scale(i);
  p.intensity.grid = grid;
  p.intensity.values.resize(grid.size());
  std::size_t clamped = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto b1 = basis_level1(grid[g]);
    const auto b2 = basis_level2(grid[g]);
    double dev = 0.0;
    for (int k = 0; k < c.K; ++k) dev += p.xi[static_cast<std::size_t>(k)] * b1[static_cast<std::size_t>(k)];
    for (int l = 0; l < c.L; ++l) dev += p.zeta[static_cast<std::size_t>(l)] * b2[static_cast<std::size_t>(l)];
    if (c.sigma > 0.0) dev += c.sigma * normal(noise_rng);
    double v = c.mu_const + scale * dev;
    if (v < 0.0 && c.clamp) {
      v = 0.0;
      ++clamped;
    }
    p.intensity.values[g] = v;
  }
  p.clamp_fraction = static_cast<double>(clamped) / static_cast<double>(grid.size());
  return p;
}

std::vector<SimulatedProcess> simulate_impl(const SimulationConfig& c, bool parallel) {
  c.validate();
  const auto grid = uniform_grid(0.0, 1.0, static_cast<std::size_t>(c.grid_size));
  const auto lam1 = c.eigenvalues1();
  const auto lam2 = c.eigenvalues2();
  const int n = c.I * c.J;
  std::vector<SimulatedProcess> out(static_cast<std::size_t>(n));
  auto one = [&](int u) {
    const int i = u / c.J + 1;
    const int j = u % c.J + 1;
    auto p = make_unit(c, grid, lam1, lam2, i, j);
    p.cumulative = integrate_intensity(p.intensity);
    p.event_times = thinning_sample(
        p.intensity,
        substream_seed(c.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), Stream::Events));
    out[static_cast<std::size_t>(u)] = std::move(p);
  };
  if (parallel) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (int u = 0; u < n; ++u) {
      try {
        one(u);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (int u = 0; u < n; ++u) one(u);
  }
  return out;
}

nlohmann::json level_summary(const MFPCAResult& r) {
  return {{"level1_count", r.level1.count()},
          {"level2_count", r.level2.count()},
          {"level1_eigenvalues", r.level1.eigenvalues},
          {"level2_eigenvalues", r.level2.eigenvalues},
          {"level1_explained_variance", r.level1.retained_total()},
          {"level2_explained_variance", r.level2.retained_total()},
          {"rho", r.rho},
          {"residual_fraction", r.residual_fraction}};
}

}  // namespace

std::vector<double> SimulationConfig::eigenvalues1() const {
  if (!level1_eigenvalues.empty()) return level1_eigenvalues;
  std::vector<double> v;
  for (int k = 0; k < K; ++k) v.push_back(std::pow(0.9, k));
  return v;
}

std::vector<double> SimulationConfig::eigenvalues2() const {
  if (!level2_eigenvalues.empty()) return level2_eigenvalues;
  std::vector<double> v;
  for (int l = 0; l < L; ++l) v.push_back(std::pow(0.2, l));
  return v;
}

double SimulationConfig::scale(int i) const {
  if (cluster_scale == "2i") return 2.0 * i;
  if (cluster_scale == "2(i-1)") return 2.0 * (i - 1);
  if (cluster_scale == "1") return 1.0;
  fail(ErrorCode::ConfigError, "unknown cluster_scale '" + cluster_scale + "'");
}

void SimulationConfig::validate() const {
  if (I < 1 || J < 1) fail(ErrorCode::ConfigError, "I and J must be >= 1");
  if (K < 1 || K > 4 || L < 1 || L > 4) fail(ErrorCode::ConfigError, "K and L must lie in 1..4");
  if (grid_size < 2) fail(ErrorCode::ConfigError, "grid_size must be >= 2");
  if (!(sigma >= 0.0) || !std::isfinite(mu_const)) fail(ErrorCode::ConfigError, "sigma must be >= 0 and mu finite");
  const auto l1 = eigenvalues1();
  const auto l2 = eigenvalues2();
  if (static_cast<int>(l1.size()) != K || static_cast<int>(l2.size()) != L)
    fail(ErrorCode::ConfigError, "eigenvalue lists must have K and L entries");
  for (double v : l1)
    if (!(v >= 0.0)) fail(ErrorCode::ConfigError, "eigenvalues must be >= 0");
  for (double v : l2)
    if (!(v >= 0.0)) fail(ErrorCode::ConfigError, "eigenvalues must be >= 0");
  (void)scale(1);
}

nlohmann::json to_json(const SimulationConfig& c) {
  return {{"I", c.I},
          {"J", c.J},
          {"K", c.K},
          {"L", c.L},
          {"mu_const", c.mu_const},
          {"level1_eigenvalues", c.eigenvalues1()},
          {"level2_eigenvalues", c.eigenvalues2()},
          {"sigma", c.sigma},
          {"cluster_scale", c.cluster_scale},
          {"grid_size", c.grid_size},
          {"seed", c.seed},
          {"clamp", c.clamp}};
}

std::array<double, 4> basis_level1(double t) {
  return {kSqrt2 * std::sin(2 * kPi * t), kSqrt2 * std::cos(2 * kPi * t), kSqrt2 * std::sin(4 * kPi * t),
          kSqrt2 * std::cos(4 * kPi * t)};
}

std::array<double, 4> basis_level2(double t) {
  return {1.0, kSqrt3 * (2 * t - 1), kSqrt5 * (6 * t * t - 6 * t + 1),
          kSqrt7 * (20 * t * t * t - 30 * t * t + 12 * t - 1)};
}

std::array<double, 4> integrated_basis_level1(double t) {
  return {kSqrt2 * (1 - std::cos(2 * kPi * t)) / (2 * kPi), kSqrt2 * std::sin(2 * kPi * t) / (2 * kPi),
          kSqrt2 * (1 - std::cos(4 * kPi * t)) / (4 * kPi), kSqrt2 * std::sin(4 * kPi * t) / (4 * kPi)};
}

std::array<double, 4> integrated_basis_level2(double t) {
  const double t2 = t * t;
  return {t, kSqrt3 * (t2 - t), kSqrt5 * (2 * t2 * t - 3 * t2 + t),
          kSqrt7 * (5 * t2 * t2 - 10 * t2 * t + 6 * t2 - t)};
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j, Stream purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ i);
  h = splitmix64(h ^ (j + 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

std::vector<SimulatedProcess> generate_intensities(const SimulationConfig& c) {
  c.validate();
  const auto grid = uniform_grid(0.0, 1.0, static_cast<std::size_t>(c.grid_size));
  const auto lam1 = c.eigenvalues1();
  const auto lam2 = c.eigenvalues2();
  std::vector<SimulatedProcess> out;
  for (int i = 1; i <= c.I; ++i)
    for (int j = 1; j <= c.J; ++j) out.push_back(make_unit(c, grid, lam1, lam2, i, j));
  return out;
}

GridCurve integrate_intensity(const GridCurve& intensity) {
  const auto& g = intensity.grid;
  const auto& v = intensity.values;
  if (g.size() != v.size() || g.empty()) fail(ErrorCode::InvalidArgument, "intensity curve is malformed");
  GridCurve out{g, std::vector<double>(g.size(), 0.0)};
  CompensatedSum acc;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (v[k] < 0.0 || !std::isfinite(v[k]))
      fail(ErrorCode::NegativeIntensity, "intensity is negative or not finite at t = " + std::to_string(g[k]));
    if (k > 0) acc.add(0.5 * (g[k] - g[k - 1]) * (v[k] + v[k - 1]));
    out.values[k] = acc.value();
  }
  return out;
}

std::vector<double> thinning_sample(const GridCurve& intensity, std::uint64_t seed) {
  const auto& g = intensity.grid;
  const auto& v = intensity.values;
  if (g.size() < 2 || g.size() != v.size()) fail(ErrorCode::InvalidArgument, "intensity curve is malformed");
  double top = 0.0;
  for (double x : v) {
    if (x < 0.0 || !std::isfinite(x)) fail(ErrorCode::NegativeIntensity, "intensity must be finite and >= 0");
    top = std::max(top, x);
  }
  std::vector<double> times;
  if (top <= 0.0) return times;

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(top);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double lo = g.front();
  const double hi = g.back();
  double t = lo;
  while (true) {
    t += gap(rng);
    if (t >= hi) break;
    const double u = unif(rng);
    if (u * top < interp_linear(g, v, t) && t > lo) {
      if (times.empty() || t > times.back()) times.push_back(t);
    }
  }
  return times;
}

std::vector<SimulatedProcess> simulate_processes(const SimulationConfig& config) {
  return simulate_impl(config, true);
}

std::vector<SimulatedProcess> simulate_processes_serial(const SimulationConfig& config) {
  return simulate_impl(config, false);
}

std::vector<UnitEvents> to_unit_events(const std::vector<SimulatedProcess>& processes) {
  std::vector<UnitEvents> out;
  out.reserve(processes.size());
  for (const auto& p : processes) out.push_back(UnitEvents{p.cluster_id, p.unit_id, p.event_times, {}, std::nullopt});
  return out;
}

CompensatorSet true_curves(const std::vector<SimulatedProcess>& processes) {
  CompensatorSet set;
  if (processes.empty()) return set;
  set.grid = processes.front().cumulative.grid;
  set.curves.resize(static_cast<Eigen::Index>(processes.size()), static_cast<Eigen::Index>(set.grid.size()));
  for (std::size_t u = 0; u < processes.size(); ++u) {
    const auto& c = processes[u].cumulative;
    if (c.grid != set.grid) fail(ErrorCode::BasisMismatch, "processes are sampled on different grids");
    for (std::size_t g = 0; g < c.values.size(); ++g)
      set.curves(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(g)) = c.values[g];
    set.unit_ids.push_back(processes[u].unit_id);
    set.cluster_ids.push_back(processes[u].cluster_id);
  }
  return canonical_order(std::move(set));
}

std::vector<double> analytic_direction(int level, const SimulationConfig& config, const std::vector<double>& grid) {
  const auto lam = level == 1 ? config.eigenvalues1() : config.eigenvalues2();
  const auto m = static_cast<Eigen::Index>(lam.size());
  Eigen::MatrixXd Y(m, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto b = level == 1 ? integrated_basis_level1(grid[g]) : integrated_basis_level2(grid[g]);
    for (Eigen::Index k = 0; k < m; ++k)
      Y(k, static_cast<Eigen::Index>(g)) = std::sqrt(lam[static_cast<std::size_t>(k)]) * b[static_cast<std::size_t>(k)];
  }
  const auto w = trapezoid_weights(grid);
  const auto e = eigen_decompose_factored(Y, Eigen::MatrixXd::Identity(m, m), w);
  const auto col = e.functions.col(0);
  return std::vector<double>(col.data(), col.data() + col.size());
}

double alignment(std::span<const double> a, std::span<const double> b, std::span<const double> weights) {
  const double ab = weighted_inner(a, b, weights);
  const double aa = weighted_inner(a, a, weights);
  const double bb = weighted_inner(b, b, weights);
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return std::abs(ab) / std::sqrt(aa * bb);
}

RefitResult refit(RecurrentEventDataset data, const CovariateSpec& spec, const std::vector<double>& grid,
                  const AGOptions& options) {
  RefitResult r;
  r.fit = fit_ag(data, spec, options);
  r.step = breslow_baseline(data, r.fit);
  const auto baseline_grid = merge_grids(grid, r.step.jump_times);
  r.smoothed = smooth_baseline(r.step, baseline_grid);
  r.compensators = reconstruct_all(data, r.fit, r.smoothed, grid);
  r.data = std::move(data);
  return r;
}

StudyResult run_simulation_study(const SimulationConfig& config, const StudyOptions& options) {
  StudyResult s;
  s.processes = simulate_processes(config);
  s.truth = true_curves(s.processes);

  const auto units = to_unit_events(s.processes);
  auto data = build_counting_format(units, ObservationWindow{0.0, 1.0});
  CovariateSpec spec{{}, {std::string(kEventCountColumn)}};
  s.refit = refit(std::move(data), spec, s.truth.grid, options.ag);

  s.true_mfpca = mfpca(s.truth, options.pve1, options.pve2);
  s.reconstructed_mfpca = mfpca(s.refit.compensators, options.pve1, options.pve2);

  const auto& grid = s.truth.grid;
  const auto& w = s.true_mfpca.weights;
  const auto& tm = s.true_mfpca;
  const auto& rm = s.reconstructed_mfpca;

  nlohmann::json align;
  for (int level = 1; level <= 2; ++level) {
    std::vector<double> a;
    const auto& tl = tm.level(level);
    const auto& rl = rm.level(level);
    for (std::size_t k = 1; k <= std::min(tl.count(), rl.count()); ++k)
      a.push_back(alignment(tl.eigenfunction(grid, k).values, rl.eigenfunction(grid, k).values, w));
    align["level" + std::to_string(level)] = a;
  }
  const auto direction = analytic_direction(1, config, grid);
  auto first = [&](const MFPCAResult& r) -> nlohmann::json {
    if (r.level1.count() == 0) return nullptr;
    return alignment(direction, r.level1.eigenfunction(grid, 1).values, w);
  };
  align["level1_analytic_true"] = first(tm);
  align["level1_analytic_reconstructed"] = first(rm);

  nlohmann::json outliers = nullptr;
  if (tm.level1.count() > 0 && rm.level1.count() > 0) {
    const auto& tx = tm.level1.scores;
    const auto& rx = rm.level1.scores;
    Eigen::Index top = 0;
    tx.col(0).cwiseAbs().maxCoeff(&top);
    int rank = 1;
    for (Eigen::Index c = 0; c < rx.rows(); ++c)
      if (std::abs(rx(c, 0)) > std::abs(rx(top, 0))) ++rank;
    const int quartile = (static_cast<int>(rx.rows()) + 3) / 4;
    outliers = {{"true_top_cluster", tm.clusters[static_cast<std::size_t>(top)]},
                {"reconstructed_rank", rank},
                {"in_top_quartile", rank <= quartile}};
  }

  double clamp_mean = 0.0;
  double clamp_max = 0.0;
  std::size_t events = 0;
  std::size_t empty = 0;
  for (const auto& p : s.processes) {
    clamp_mean += p.clamp_fraction;
    clamp_max = std::max(clamp_max, p.clamp_fraction);
    events += p.event_times.size();
    if (p.event_times.empty()) ++empty;
  }
  clamp_mean /= static_cast<double>(s.processes.size());

  const auto& fit = s.refit.fit;
  const Eigen::VectorXd coef = fit.coefficients();
  const Eigen::VectorXd se = fit.standard_errors();
  s.report = {
      {"note", "mu_const defaults to 100; the generating model is also stated elsewhere with a constant mean of 200"},
      {"config", to_json(config)},
      {"seed", config.seed},
      {"pve", {options.pve1, options.pve2}},
      {"clamp_fraction", {{"mean", clamp_mean}, {"max", clamp_max}}},
      {"events", {{"total", events}, {"units_without_events", empty}}},
      {"ag_fit",
       {{"names", fit.spec.names()},
        {"coefficients", std::vector<double>(coef.data(), coef.data() + coef.size())},
        {"standard_errors", std::vector<double>(se.data(), se.data() + se.size())},
        {"loglik", fit.loglik},
        {"iterations", fit.iterations},
        {"converged", fit.converged}}},
      {"true", level_summary(tm)},
      {"reconstructed", level_summary(rm)},
      {"alignment", align},
      {"outliers", outliers}};
  return s;
}

}  // namespace rhl
