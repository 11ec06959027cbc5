#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhl/curves.hpp"
#include "rhl/dataio.hpp"

namespace rhl {

struct CompensatorSet;

/// Which dataset columns enter the beta (x) and theta (z) terms.
struct CovariateSpec {
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  std::size_t size() const noexcept { return x_names.size() + z_names.size(); }
  std::vector<std::string> names() const;
  /// Throws InvalidArgument on overlap or an unknown column.
  void validate(const RecurrentEventDataset& data) const;
};

struct PartialLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

struct AGOptions {
  double tol = 1e-8;
  int max_iter = 50;
};

struct AGFit {
  CovariateSpec spec;
  Eigen::VectorXd beta;   // length Q
  Eigen::VectorXd theta;  // length P
  Eigen::MatrixXd covariance;
  Eigen::VectorXd gradient;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string tie_method = "breslow";

  Eigen::VectorXd coefficients() const;
  Eigen::VectorXd standard_errors() const;
  /// Two-sided Wald p-values.
  Eigen::VectorXd p_values() const;
};

/// Design matrix (rows x (Q+P)) of the dataset's columns named by `spec`.
Eigen::MatrixXd design_matrix(const RecurrentEventDataset& data, const CovariateSpec& spec);

/// Breslow-tied log partial likelihood with exact gradient and Hessian. The
/// risk set at an event time t is every row with start < t <= stop.
PartialLikelihood log_partial_likelihood(const RecurrentEventDataset& data, const CovariateSpec& spec,
                                         const Eigen::VectorXd& coeffs);

/// Same quantity by direct enumeration of risk sets, O(events x rows).
/// Serial reference for the sweep implementation.
PartialLikelihood log_partial_likelihood_reference(const RecurrentEventDataset& data,
                                                   const CovariateSpec& spec,
                                                   const Eigen::VectorXd& coeffs);

/// Newton-Raphson with step halving from the zero vector.
AGFit fit_ag(const RecurrentEventDataset& data, const CovariateSpec& spec, const AGOptions& options = {});

/// Linear predictor of every row at the fitted coefficients.
Eigen::VectorXd linear_predictor(const RecurrentEventDataset& data, const AGFit& fit);

/// Breslow estimator of the baseline cumulative hazard.
StepFunction breslow_baseline(const RecurrentEventDataset& data, const AGFit& fit);

/// Monotone C1 interpolation of (0, 0) and the step values at its jumps,
/// held flat after the last jump, sampled on `grid`.
GridCurve smooth_baseline(const StepFunction& step, const std::vector<double>& grid);

struct UnitResidual {
  std::string cluster_id;
  std::string unit_id;
  double observed = 0.0;
  double expected = 0.0;
  double residual = 0.0;
};

/// N_ij(T) - Lambda_ij(T) per unit.
std::vector<UnitResidual> martingale_residuals(const RecurrentEventDataset& data,
                                               const CompensatorSet& compensators);

}  // namespace rhl
