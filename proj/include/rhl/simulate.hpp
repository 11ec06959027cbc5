#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhl/agmodel.hpp"
#include "rhl/compensator.hpp"
#include "rhl/curves.hpp"
#include "rhl/dataio.hpp"
#include "rhl/mfpca.hpp"

namespace rhl {

struct SimulationConfig {
  int I = 20;
  int J = 4;
  int K = 4;
  int L = 4;
  double mu_const = 100.0;
  /// Empty means 0.9^(k-1) and 0.2^(l-1).
  std::vector<double> level1_eigenvalues;
  std::vector<double> level2_eigenvalues;
  double sigma = 0.0;
  /// "2i" (i = 1..I), "2(i-1)" or "1".
  std::string cluster_scale = "2i";
  int grid_size = 1001;
  std::uint64_t seed = 20240611;
  bool clamp = true;

  std::vector<double> eigenvalues1() const;
  std::vector<double> eigenvalues2() const;
  double scale(int i) const;  // i is 1-based
  void validate() const;
};

nlohmann::json to_json(const SimulationConfig& config);

std::array<double, 4> basis_level1(double t);
std::array<double, 4> basis_level2(double t);
/// Antiderivatives from 0 of the two bases.
std::array<double, 4> integrated_basis_level1(double t);
std::array<double, 4> integrated_basis_level2(double t);

/// Independent generator seed for one (cluster, unit, purpose) triple.
enum class Stream : std::uint64_t { ClusterScores = 1, UnitScores = 2, Noise = 3, Events = 4 };
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j, Stream purpose);

struct SimulatedProcess {
  std::string cluster_id;
  std::string unit_id;
  int cluster_index = 0;  // 1-based
  int unit_index = 0;     // 1-based
  GridCurve intensity;
  GridCurve cumulative;
  std::vector<double> event_times;
  std::vector<double> xi;
  std::vector<double> zeta;
  double clamp_fraction = 0.0;
};

/// Intensities and true scores on the uniform grid, cumulative left empty.
std::vector<SimulatedProcess> generate_intensities(const SimulationConfig& config);

/// Cumulative trapezoid integral, exact for the piecewise-linear intensity.
GridCurve integrate_intensity(const GridCurve& intensity);

/// Event times of the Poisson process with the piecewise-linear intensity on
/// (grid.front(), grid.back()), by thinning under the grid maximum.
std::vector<double> thinning_sample(const GridCurve& intensity, std::uint64_t seed);

/// generate_intensities + integrate_intensity + thinning_sample per unit.
/// Parallel over units; output does not depend on the thread count.
std::vector<SimulatedProcess> simulate_processes(const SimulationConfig& config);
std::vector<SimulatedProcess> simulate_processes_serial(const SimulationConfig& config);

std::vector<UnitEvents> to_unit_events(const std::vector<SimulatedProcess>& processes);
CompensatorSet true_curves(const std::vector<SimulatedProcess>& processes);

/// First eigenfunction of the level-1 (or level-2) covariance of the
/// integrated processes, sum_k lambda_k Phi_k(s) Phi_k(t), on `grid`.
std::vector<double> analytic_direction(int level, const SimulationConfig& config, const std::vector<double>& grid);

/// |<a, b>| / (|a| |b|) under quadrature weights.
double alignment(std::span<const double> a, std::span<const double> b, std::span<const double> weights);

/// The refit stage shared by the study and the fit command: AG fit on the
/// event count, Breslow baseline smoothed on grid + event times, and the
/// compensators on the uniform grid.
struct RefitResult {
  RecurrentEventDataset data;
  AGFit fit;
  StepFunction step;
  GridCurve smoothed;
  CompensatorSet compensators;
};

RefitResult refit(RecurrentEventDataset data, const CovariateSpec& spec, const std::vector<double>& grid,
                  const AGOptions& options = {});

struct StudyOptions {
  double pve1 = 0.99;
  double pve2 = 0.99;
  AGOptions ag;
};

struct StudyResult {
  std::vector<SimulatedProcess> processes;
  CompensatorSet truth;
  RefitResult refit;
  MFPCAResult true_mfpca;
  MFPCAResult reconstructed_mfpca;
  nlohmann::json report;
};

StudyResult run_simulation_study(const SimulationConfig& config, const StudyOptions& options = {});

}  // namespace rhl
