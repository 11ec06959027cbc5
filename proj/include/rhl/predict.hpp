#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rhl/dataio.hpp"
#include "rhl/mfpca.hpp"

namespace rhl {

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<std::string> row_ids;
};

/// Intercept, one-hot categoricals (reference level dropped) in table order,
/// admission_score, ects1sem, then K school-level and L course-level scores.
DesignMatrix build_design(const PredictionDataset& students, const ScoreTable& scores, std::size_t K,
                          std::size_t L);

/// Keeps the listed columns, in the given order.
DesignMatrix select_columns(const DesignMatrix& design, std::span<const std::string> names);
/// Drops the score columns (xi*, zeta*).
DesignMatrix without_scores(const DesignMatrix& design);

struct LogisticOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

struct LogisticFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd p_values;
  Eigen::VectorXd gradient;
  double loglik = 0.0;
  double aic = 0.0;
  bool converged = false;
  int iterations = 0;
  bool separation = false;
  std::string warning;
};

/// Newton (IRLS) on the Bernoulli log-likelihood from zero.
LogisticFit fit_logistic(const DesignMatrix& design, const LogisticOptions& options = {});

Eigen::VectorXd fitted_probabilities(const LogisticFit& fit, const Eigen::MatrixXd& X);

/// Bernoulli log-likelihood of probabilities p; terms with p in {0, 1} are
/// handled without taking log(0) when they agree with y.
double bernoulli_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& p);

/// Rank/concordance AUC with ties counted as one half. Throws
/// DegenerateOutcome if only one class is present.
double auc(std::span<const double> scores, std::span<const double> labels);

struct ClassificationMetrics {
  std::optional<double> auc;
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  double threshold = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Confusion at p >= threshold. A single-class outcome leaves auc empty.
ClassificationMetrics evaluate(const LogisticFit& fit, const DesignMatrix& design, double threshold = 0.5);
ClassificationMetrics classify(std::span<const double> scores, std::span<const double> labels, double threshold);

struct ModelComparison {
  LogisticFit with_scores;
  LogisticFit without_scores;
  ClassificationMetrics with_metrics;
  ClassificationMetrics without_metrics;
  double delta_aic = 0.0;                // with - without
  std::optional<double> delta_auc;       // with - without
};

ModelComparison compare_models(const DesignMatrix& with_scores, const DesignMatrix& without_scores,
                               double threshold = 0.5, const LogisticOptions& options = {});

/// Deterministic split of rows into (train, test) with `fraction` in test.
std::pair<DesignMatrix, DesignMatrix> split_holdout(const DesignMatrix& design, double fraction, std::uint64_t seed);

/// Synthetic students attached to the groups of a score table, with outcome
/// drawn from a known logit on the same design columns.
struct CohortConfig {
  int students_per_unit = 25;
  /// Each score column enters the true logit with this effect per standard
  /// deviation of the column.
  double score_effect = 0.8;
  std::uint64_t seed = 1;
};

struct SyntheticCohort {
  PredictionDataset students;
  std::vector<std::string> names;
  Eigen::VectorXd true_coefficients;
};

SyntheticCohort synthesize_cohort(const ScoreTable& scores, std::size_t K, std::size_t L, const CohortConfig& config);

nlohmann::json to_json(const LogisticFit& fit);
nlohmann::json to_json(const ClassificationMetrics& metrics);
nlohmann::json to_json(const ModelComparison& comparison);

/// `parameter,estimate,std_error,p_value`.
void write_logistic_report_csv(const std::filesystem::path& path, const LogisticFit& fit);

}  // namespace rhl
