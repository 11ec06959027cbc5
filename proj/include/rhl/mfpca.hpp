#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rhl/compensator.hpp"
#include "rhl/curves.hpp"

namespace rhl {

/// sum_u weights[u] * rows.row(u)^T rows.row(u), a symmetric G x G matrix.
/// Parallel over output rows; each entry is summed in a fixed order so the
/// result does not depend on the thread count.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& rows, std::span<const double> weights);
Eigen::MatrixXd weighted_gram_serial(const Eigen::MatrixXd& rows, std::span<const double> weights);

GridCurve estimate_mean(const CompensatorSet& curves);

struct CovarianceSplit {
  Eigen::MatrixXd total;
  Eigen::MatrixXd between;
  Eigen::MatrixXd within;
};

/// Method-of-moments split of the covariance of centered curves (one row per
/// unit) into a cluster part and a unit-within-cluster part. Clusters with a
/// single unit contribute to the total only.
CovarianceSplit covariance_split(const Eigen::MatrixXd& centered, std::span<const std::string> cluster_ids);

struct EigenDecomposition {
  std::vector<double> values;    // descending, clipped at 0
  Eigen::MatrixXd functions;     // grid x count, orthonormal under the weights
  double clipped = 0.0;          // total magnitude of negative eigenvalues
};

/// Eigenpairs of the integral operator with kernel K under quadrature
/// `weights`. Every eigenpair is returned.
EigenDecomposition eigen_decompose(const Eigen::MatrixXd& K, std::span<const double> weights);

/// Same operator for K = Y^T M Y without forming K. Y is n x grid and M is
/// symmetric n x n. Returns at most n eigenpairs; the rest are zero.
EigenDecomposition eigen_decompose_factored(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& M,
                                            std::span<const double> weights);

/// Smallest m whose leading eigenvalues reach share `pve` of the total.
std::size_t truncate_by_pve(std::span<const double> eigenvalues, double pve);

struct Scores {
  Eigen::MatrixXd xi;    // clusters x K
  Eigen::MatrixXd zeta;  // units x L
  std::vector<std::string> clusters;  // row labels of xi, sorted
};

Scores estimate_scores(const Eigen::MatrixXd& centered, std::span<const std::string> cluster_ids,
                       const Eigen::MatrixXd& phi1, const Eigen::MatrixXd& phi2,
                       std::span<const double> weights);

struct LevelResult {
  std::vector<double> eigenvalues;      // retained, descending
  std::vector<double> all_eigenvalues;  // before truncation
  Eigen::MatrixXd eigenfunctions;       // grid x retained
  Eigen::MatrixXd scores;
  double pve_target = 0.99;
  double pve_achieved = 0.0;
  double clipped = 0.0;

  std::size_t count() const noexcept { return eigenvalues.size(); }
  double retained_total() const;
  GridCurve eigenfunction(const std::vector<double>& grid, std::size_t component) const;
};

struct MFPCAResult {
  GridCurve mean;
  std::vector<double> weights;
  LevelResult level1;
  LevelResult level2;
  std::vector<std::string> clusters;     // rows of level1.scores
  std::vector<std::string> unit_ids;     // rows of level2.scores
  std::vector<std::string> unit_clusters;
  double rho = 0.0;
  double residual_fraction = 0.0;

  const LevelResult& level(int which) const;
};

MFPCAResult mfpca(const CompensatorSet& curves, double pve1 = 0.99, double pve2 = 0.99);

/// mean +/- sqrt(lambda) * phi for a retained component (1-based).
std::pair<GridCurve, GridCurve> perturbation_curves(const MFPCAResult& result, int level, int component);

/// Scores keyed by group label, as consumed by the predictor.
struct ScoreTable {
  std::map<std::string, std::vector<double>> level1;  // cluster -> xi
  std::map<std::string, std::vector<double>> level2;  // unit -> zeta
  std::map<std::string, std::string> unit_cluster;
  std::size_t K = 0;
  std::size_t L = 0;
};

ScoreTable score_table(const MFPCAResult& result);

/// Long format `level,component,t,value`.
void write_eigenfunctions_csv(const std::filesystem::path& path, const MFPCAResult& result);
/// Long format `level,component,curve,t,value` with curve in {mean, plus, minus}.
void write_perturbations_csv(const std::filesystem::path& path, const MFPCAResult& result);
/// `level,cluster_id,unit_id,component,score`.
void write_scores_csv(const std::filesystem::path& path, const MFPCAResult& result);
ScoreTable read_scores_csv(const std::filesystem::path& path);

struct EigenfunctionTable {
  std::vector<double> grid;
  std::map<std::pair<int, int>, std::vector<double>> functions;  // (level, component)
};
EigenfunctionTable read_eigenfunctions_csv(const std::filesystem::path& path);

nlohmann::json to_json(const MFPCAResult& result);

}  // namespace rhl
