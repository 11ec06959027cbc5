#include "rhl/predict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "rhl/csv.hpp"
#include "rhl/error.hpp"

namespace rhl {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loglik_eta(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += y[i] * eta[i] - softplus(eta[i]);
  return s;
}

Eigen::VectorXd probabilities(const Eigen::VectorXd& eta) { return eta.unaryExpr([](double e) { return sigmoid(e); }); }

std::size_t reference_index(const PredictionDataset& data, const CategoricalSpec& spec) {
  auto it = data.reference_levels.find(std::string(spec.name));
  if (it == data.reference_levels.end()) return 0;
  for (std::size_t i = 0; i < spec.levels.size(); ++i)
    if (spec.levels[i] == it->second) return i;
  fail(ErrorCode::UnknownCategoryLevel, "reference level '" + it->second + "' is not a level of " +
                                            std::string(spec.name));
}

bool is_score_column(const std::string& name) { return name.rfind("xi", 0) == 0 || name.rfind("zeta", 0) == 0; }

DesignMatrix take_rows(const DesignMatrix& d, const std::vector<Eigen::Index>& rows) {
  DesignMatrix out;
  out.names = d.names;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = d.X.row(rows[r]);
    out.y[static_cast<Eigen::Index>(r)] = d.y[rows[r]];
    if (!d.row_ids.empty()) out.row_ids.push_back(d.row_ids[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

DesignMatrix build_design(const PredictionDataset& students, const ScoreTable& scores, std::size_t K, std::size_t L) {
  if (K > scores.K || L > scores.L)
    fail(ErrorCode::ComponentOutOfRange, "requested " + std::to_string(K) + "/" + std::to_string(L) +
                                             " score components but only " + std::to_string(scores.K) + "/" +
                                             std::to_string(scores.L) + " are available");
  if (students.records.empty()) fail(ErrorCode::EmptyDataset, "no students");

  DesignMatrix d;
  d.names.push_back("(Intercept)");
  std::vector<std::pair<std::size_t, std::size_t>> dummies;  // (field, level)
  const auto specs = categorical_specs();
  for (std::size_t f = 0; f < specs.size(); ++f) {
    const std::size_t ref = reference_index(students, specs[f]);
    for (std::size_t l = 0; l < specs[f].levels.size(); ++l) {
      if (l == ref) continue;
      dummies.emplace_back(f, l);
      d.names.push_back(std::string(specs[f].name) + ":" + std::string(specs[f].levels[l]));
    }
  }
  d.names.push_back("admission_score");
  d.names.push_back("ects1sem");
  for (std::size_t k = 1; k <= K; ++k) d.names.push_back("xi" + std::to_string(k));
  for (std::size_t l = 1; l <= L; ++l) d.names.push_back("zeta" + std::to_string(l));

  const auto n = static_cast<Eigen::Index>(students.records.size());
  d.X.resize(n, static_cast<Eigen::Index>(d.names.size()));
  d.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = students.records[static_cast<std::size_t>(r)];
    Eigen::Index c = 0;
    d.X(r, c++) = 1.0;
    for (const auto& [f, l] : dummies) d.X(r, c++) = s.levels[f] == static_cast<int>(l) ? 1.0 : 0.0;
    d.X(r, c++) = s.admission_score;
    d.X(r, c++) = s.ects1sem;
    if (K > 0) {
      auto it = scores.level1.find(s.school_id);
      if (it == scores.level1.end())
        fail(ErrorCode::UnmatchedGroupLabel, "school '" + s.school_id + "' of student " + s.student_id +
                                                 " has no level-1 scores");
      for (std::size_t k = 0; k < K; ++k) d.X(r, c++) = it->second[k];
    }
    if (L > 0) {
      auto it = scores.level2.find(s.course_id);
      if (it == scores.level2.end())
        fail(ErrorCode::UnmatchedGroupLabel, "course '" + s.course_id + "' of student " + s.student_id +
                                                 " has no level-2 scores");
      for (std::size_t l = 0; l < L; ++l) d.X(r, c++) = it->second[l];
    }
    d.y[r] = s.dropout3y;
    d.row_ids.push_back(s.student_id);
  }
  return d;
}

DesignMatrix select_columns(const DesignMatrix& design, std::span<const std::string> names) {
  DesignMatrix out;
  out.y = design.y;
  out.row_ids = design.row_ids;
  out.X.resize(design.X.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = std::find(design.names.begin(), design.names.end(), names[j]);
    if (it == design.names.end()) fail(ErrorCode::InvalidArgument, "design has no column '" + names[j] + "'");
    out.X.col(static_cast<Eigen::Index>(j)) = design.X.col(it - design.names.begin());
    out.names.push_back(names[j]);
  }
  return out;
}

DesignMatrix without_scores(const DesignMatrix& design) {
  std::vector<std::string> keep;
  for (const auto& n : design.names)
    if (!is_score_column(n)) keep.push_back(n);
  return select_columns(design, keep);
}

LogisticFit fit_logistic(const DesignMatrix& design, const LogisticOptions& options) {
  const auto& X = design.X;
  const auto& y = design.y;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n == 0 || p == 0) fail(ErrorCode::EmptyDataset, "empty design");
  if (y.size() != n) fail(ErrorCode::InvalidArgument, "outcome length differs from design rows");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0) fail(ErrorCode::InvalidValue, "outcome must be 0 or 1");

  for (Eigen::Index j = 0; j < p; ++j) {
    const std::string& name = j < static_cast<Eigen::Index>(design.names.size()) ? design.names[static_cast<std::size_t>(j)] : "";
    if (name == "(Intercept)") continue;
    if (X.col(j).maxCoeff() == X.col(j).minCoeff() && p > 1)
      fail(ErrorCode::RankDeficient, "design column '" + name + "' is constant");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) fail(ErrorCode::RankDeficient, "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));

  LogisticFit fit;
  fit.names = design.names;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = loglik_eta(y, X * beta);
  Eigen::VectorXd grad;
  for (int it = 0; it <= options.max_iter; ++it) {
    const Eigen::VectorXd prob = probabilities(X * beta);
    grad = X.transpose() * (y - prob);
    if (grad.lpNorm<Eigen::Infinity>() <= options.tol) {
      fit.converged = true;
      break;
    }
    if (it == options.max_iter) break;
    const Eigen::VectorXd w = prob.cwiseProduct(Eigen::VectorXd::Ones(n) - prob);
    const Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      fit.separation = true;
      break;
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= 30; ++h, t *= 0.5) {
      const Eigen::VectorXd cand = beta + t * step;
      const double ll_new = loglik_eta(y, X * cand);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12 * std::abs(ll)) {
        beta = cand;
        ll = ll_new;
        accepted = true;
        break;
      }
    }
    fit.iterations = it + 1;
    if (!accepted) break;
    if (beta.lpNorm<Eigen::Infinity>() > 30.0) {
      fit.separation = true;
      break;
    }
  }

  const Eigen::VectorXd prob = probabilities(X * beta);
  grad = X.transpose() * (y - prob);
  const Eigen::VectorXd w = prob.cwiseProduct(Eigen::VectorXd::Ones(n) - prob);
  const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const double top = es.eigenvalues().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-12 * top)) fit.separation = true;

  fit.coefficients = beta;
  fit.gradient = grad;
  fit.loglik = loglik_eta(y, X * beta);
  fit.aic = 2.0 * static_cast<double>(p) - 2.0 * fit.loglik;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.p_values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j)
    fit.p_values[j] = std::erfc(std::abs(beta[j] / fit.standard_errors[j]) / std::sqrt(2.0));

  if (fit.separation) {
    fit.warning = "separation detected: coefficients diverge or the information matrix is near-singular";
    spdlog::warn("{}", fit.warning);
  } else if (!fit.converged) {
    fit.warning = "IRLS did not reach the gradient tolerance";
    spdlog::warn("{}", fit.warning);
  }
  return fit;
}

Eigen::VectorXd fitted_probabilities(const LogisticFit& fit, const Eigen::MatrixXd& X) {
  if (X.cols() != fit.coefficients.size()) fail(ErrorCode::InvalidArgument, "design and fit disagree in width");
  return probabilities(X * fit.coefficients);
}

double bernoulli_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      s += std::log(p[i]);
    } else {
      s += std::log1p(-p[i]);
    }
  }
  return s;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::InvalidArgument, "scores and labels differ in length");
  std::size_t pos = 0;
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) fail(ErrorCode::InvalidValue, "labels must be 0 or 1");
    if (l == 1.0) ++pos;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::DegenerateOutcome, "AUC is undefined with a single outcome class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1.0) rank_sum += midrank;
    i = j;
  }
  const double np = static_cast<double>(pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(neg));
}

ClassificationMetrics classify(std::span<const double> scores, std::span<const double> labels, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  if (scores.size() != labels.size() || scores.empty())
    fail(ErrorCode::InvalidArgument, "scores and labels must be non-empty and of equal length");
  ClassificationMetrics m;
  m.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1.0;
    if (predicted && actual) ++m.tp;
    if (predicted && !actual) ++m.fp;
    if (!predicted && !actual) ++m.tn;
    if (!predicted && actual) ++m.fn;
  }
  auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(scores.size());
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.precision = ratio(m.tp, m.tp + m.fp);
  try {
    m.auc = auc(scores, labels);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateOutcome) throw;
    spdlog::warn("{}", e.what());
  }
  return m;
}

ClassificationMetrics evaluate(const LogisticFit& fit, const DesignMatrix& design, double threshold) {
  const Eigen::VectorXd p = fitted_probabilities(fit, design.X);
  return classify(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                  std::span<const double>(design.y.data(), static_cast<std::size_t>(design.y.size())), threshold);
}

ModelComparison compare_models(const DesignMatrix& with_scores, const DesignMatrix& without_scores, double threshold,
                               const LogisticOptions& options) {
  if (with_scores.X.rows() != without_scores.X.rows() || with_scores.y != without_scores.y)
    fail(ErrorCode::InvalidArgument, "compared designs must share rows and outcome");
  for (const auto& n : without_scores.names)
    if (std::find(with_scores.names.begin(), with_scores.names.end(), n) == with_scores.names.end())
      fail(ErrorCode::InvalidArgument, "designs are not nested: '" + n + "' missing from the larger model");
  ModelComparison c;
  c.with_scores = fit_logistic(with_scores, options);
  c.without_scores = fit_logistic(without_scores, options);
  c.with_metrics = evaluate(c.with_scores, with_scores, threshold);
  c.without_metrics = evaluate(c.without_scores, without_scores, threshold);
  c.delta_aic = c.with_scores.aic - c.without_scores.aic;
  if (c.with_metrics.auc && c.without_metrics.auc) c.delta_auc = *c.with_metrics.auc - *c.without_metrics.auc;
  return c;
}

std::pair<DesignMatrix, DesignMatrix> split_holdout(const DesignMatrix& design, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidArgument, "holdout fraction must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(design.X.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<bool> test(n, false);
  for (std::size_t k = 0; k < n_test; ++k) test[perm[k]] = true;
  std::vector<Eigen::Index> a, b;
  for (std::size_t r = 0; r < n; ++r) (test[r] ? b : a).push_back(static_cast<Eigen::Index>(r));
  return {take_rows(design, a), take_rows(design, b)};
}

SyntheticCohort synthesize_cohort(const ScoreTable& scores, std::size_t K, std::size_t L, const CohortConfig& config) {
  if (config.students_per_unit < 1) fail(ErrorCode::ConfigError, "students_per_unit must be >= 1");
  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  const std::array<std::vector<double>, kCategoricalCount> probs = {{{0.5, 0.3, 0.2},
                                                                      {0.7, 0.3},
                                                                      {0.5, 0.2, 0.15, 0.15},
                                                                      {0.4, 0.3, 0.15, 0.15},
                                                                      {0.85, 0.15}}};
  std::uniform_real_distribution<double> admission(60.0, 100.0);
  std::binomial_distribution<int> credits(30, 0.6);

  SyntheticCohort out;
  out.students.reference_levels = default_reference_levels();
  int id = 0;
  for (const auto& [unit, zeta] : scores.level2) {
    auto cl = scores.unit_cluster.find(unit);
    if (cl == scores.unit_cluster.end())
      fail(ErrorCode::UnmatchedGroupLabel, "course '" + unit + "' has no school in the score table");
    for (int s = 0; s < config.students_per_unit; ++s) {
      StudentRecord r;
      char buf[16];
      std::snprintf(buf, sizeof buf, "S%06d", ++id);
      r.student_id = buf;
      for (std::size_t f = 0; f < kCategoricalCount; ++f) {
        std::discrete_distribution<int> pick(probs[f].begin(), probs[f].end());
        r.levels[f] = pick(rng);
      }
      r.admission_score = std::round(admission(rng) * 10.0) / 10.0;
      r.ects1sem = credits(rng);
      r.career_start_ay = 2010 + id % 7;
      r.course_id = unit;
      r.school_id = cl->second;
      out.students.records.push_back(std::move(r));
    }
  }

  auto design = build_design(out.students, scores, K, L);
  out.names = design.names;
  const std::map<std::string, double> fixed = {
      {"(Intercept)", 3.64},       {"origins:Commuter", 0.3},       {"origins:Offsite", -0.2},
      {"gender:Female", -0.3},     {"highschool_type:Classical", 0.2}, {"highschool_type:Others", 0.4},
      {"highschool_type:Technical", 0.6}, {"income:Grant", 0.2},   {"income:High", -0.1},
      {"income:Low", 0.3},         {"age19:1", 0.5},                {"admission_score", -0.04},
      {"ects1sem", -0.08}};
  out.true_coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t j = 0; j < out.names.size(); ++j) {
    const auto col = design.X.col(static_cast<Eigen::Index>(j));
    if (is_score_column(out.names[j])) {
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size()));
      out.true_coefficients[static_cast<Eigen::Index>(j)] = sd > 0.0 ? config.score_effect / sd : 0.0;
    } else {
      auto it = fixed.find(out.names[j]);
      if (it != fixed.end()) out.true_coefficients[static_cast<Eigen::Index>(j)] = it->second;
    }
  }
  const Eigen::VectorXd eta = design.X * out.true_coefficients;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t r = 0; r < out.students.records.size(); ++r)
    out.students.records[r].dropout3y = unif(rng) < sigmoid(eta[static_cast<Eigen::Index>(r)]) ? 1 : 0;
  return out;
}

nlohmann::json to_json(const LogisticFit& fit) {
  return {{"parameters", fit.names},
          {"estimates", to_vec(fit.coefficients)},
          {"standard_errors", to_vec(fit.standard_errors)},
          {"p_values", to_vec(fit.p_values)},
          {"loglik", fit.loglik},
          {"aic", fit.aic},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"separation", fit.separation},
          {"warning", fit.warning}};
}

nlohmann::json to_json(const ClassificationMetrics& m) {
  return {{"auc", optional_json(m.auc)},
          {"accuracy", m.accuracy},
          {"sensitivity", optional_json(m.sensitivity)},
          {"specificity", optional_json(m.specificity)},
          {"precision", optional_json(m.precision)},
          {"threshold", m.threshold},
          {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}}}};
}

nlohmann::json to_json(const ModelComparison& c) {
  return {{"with_scores", {{"fit", to_json(c.with_scores)}, {"metrics", to_json(c.with_metrics)}}},
          {"without_scores", {{"fit", to_json(c.without_scores)}, {"metrics", to_json(c.without_metrics)}}},
          {"delta_aic", c.delta_aic},
          {"delta_auc", optional_json(c.delta_auc)}};
}

void write_logistic_report_csv(const std::filesystem::path& path, const LogisticFit& fit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << "parameter,estimate,std_error,p_value\n";
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out << fit.names[j] << ',' << csv::format_double(fit.coefficients[k]) << ','
        << csv::format_double(fit.standard_errors[k]) << ',' << csv::format_double(fit.p_values[k]) << '\n';
  }
}

}  // namespace rhl
