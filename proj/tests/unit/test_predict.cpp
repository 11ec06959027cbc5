#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "rhl/csv.hpp"
#include "rhl/error.hpp"
#include "rhl/predict.hpp"

using namespace rhl;

namespace {

DesignMatrix two_by_two(int a, int b, int c, int d) {
  // x = 1: a events, b non-events; x = 0: c events, d non-events
  const int n = a + b + c + d;
  DesignMatrix m;
  m.X.resize(n, 2);
  m.y.resize(n);
  m.names = {"(Intercept)", "x"};
  int r = 0;
  auto put = [&](int count, double x, double y) {
    for (int k = 0; k < count; ++k, ++r) {
      m.X(r, 0) = 1.0;
      m.X(r, 1) = x;
      m.y(r) = y;
      m.row_ids.push_back(std::to_string(r));
    }
  };
  put(a, 1, 1);
  put(b, 1, 0);
  put(c, 0, 1);
  put(d, 0, 0);
  return m;
}

DesignMatrix random_design(std::uint64_t seed, int n, int p) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  DesignMatrix m;
  m.X.resize(n, p + 1);
  m.y.resize(n);
  m.names = {"(Intercept)"};
  for (int j = 0; j < p; ++j) m.names.push_back("v" + std::to_string(j));
  for (int i = 0; i < n; ++i) {
    m.X(i, 0) = 1.0;
    double eta = -0.3;
    for (int j = 1; j <= p; ++j) {
      m.X(i, j) = z(rng);
      eta += 0.5 * m.X(i, j) / j;
    }
    m.y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    m.row_ids.push_back(std::to_string(i));
  }
  return m;
}

ScoreTable toy_scores() {
  ScoreTable t;
  t.K = 2;
  t.L = 1;
  t.level1 = {{"C01", {1.0, -0.5}}, {"C02", {-1.0, 0.25}}};
  t.level2 = {{"C01-U1", {0.3}}, {"C01-U2", {-0.2}}, {"C02-U1", {0.1}}, {"C02-U2", {-0.4}}};
  t.unit_cluster = {{"C01-U1", "C01"}, {"C01-U2", "C01"}, {"C02-U1", "C02"}, {"C02-U2", "C02"}};
  return t;
}

}  // namespace

TEST_CASE("intercept-only with balanced outcome") {
  DesignMatrix m;
  m.X = Eigen::MatrixXd::Ones(6, 1);
  m.y.resize(6);
  m.y << 0, 1, 0, 1, 1, 0;
  m.names = {"(Intercept)"};
  auto fit = fit_logistic(m);
  CHECK(std::abs(fit.coefficients(0)) <= 1e-12);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(fitted_probabilities(fit, m.X)(i) == doctest::Approx(0.5));
}

TEST_CASE("2x2 table slope is the log odds ratio") {
  const int a = 30, b = 12, c = 17, d = 41;
  auto fit = fit_logistic(two_by_two(a, b, c, d));
  CHECK(fit.converged);
  CHECK(std::abs(fit.coefficients(1) - std::log(double(a) * d / (double(b) * c))) <= 1e-6);
  CHECK(std::abs(fit.coefficients(0) - std::log(double(c) / d)) <= 1e-6);
  // Woolf standard error
  CHECK(fit.standard_errors(1) == doctest::Approx(std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d)).epsilon(1e-6));
}

TEST_CASE("score equations, AIC identity and gradient") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = random_design(seed, 300, 3);
    auto fit = fit_logistic(m);
    REQUIRE(fit.converged);
    const Eigen::VectorXd p = fitted_probabilities(fit, m.X);
    CHECK(std::abs(p.mean() - m.y.mean()) <= 1e-8);
    const Eigen::VectorXd g = m.X.transpose() * (m.y - p);
    CHECK(g.lpNorm<Eigen::Infinity>() <= 1e-8);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < m.y.size(); ++i) ll += m.y(i) * std::log(p(i)) + (1 - m.y(i)) * std::log1p(-p(i));
    CHECK(std::abs(fit.aic - (2.0 * 4 - 2.0 * ll)) <= 1e-8);
    CHECK(fit.aic == 2.0 * 4 - 2.0 * fit.loglik);
    CHECK(fit.p_values(0) == doctest::Approx(std::erfc(std::abs(fit.coefficients(0) / fit.standard_errors(0)) /
                                                       std::sqrt(2.0))));
  }
}

TEST_CASE("row permutation leaves the coefficients unchanged") {
  auto m = random_design(11, 200, 2);
  auto base = fit_logistic(m);
  std::vector<int> idx(200);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), std::mt19937_64(3));
  DesignMatrix s = m;
  for (int i = 0; i < 200; ++i) {
    s.X.row(i) = m.X.row(idx[static_cast<std::size_t>(i)]);
    s.y(i) = m.y(idx[static_cast<std::size_t>(i)]);
  }
  auto perm = fit_logistic(s);
  CHECK((perm.coefficients - base.coefficients).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("AUC fixtures") {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8}, y{0, 0, 1, 1};
  CHECK(auc(s, y) == 0.75);
  std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
  CHECK(auc(sep, y) == 1.0);
  auto m = classify(sep, y, 0.5);
  CHECK(m.accuracy == 1.0);
  std::vector<double> same(4, 0.3);
  CHECK(auc(same, y) == 0.5);
  std::vector<double> mono;
  for (double v : s) mono.push_back(std::exp(5 * v) - 7);
  CHECK(auc(mono, y) == auc(s, y));
  std::vector<double> ones(4, 1.0);
  try {
    auc(s, ones);
    FAIL("expected DegenerateOutcome");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateOutcome);
  }
  auto single = classify(s, ones, 0.5);
  CHECK_FALSE(single.auc.has_value());
  CHECK_FALSE(single.specificity.has_value());
}

TEST_CASE("confusion identities") {
  auto m = random_design(21, 400, 3);
  auto fit = fit_logistic(m);
  auto e = evaluate(fit, m, 0.4);
  const double n = 400.0;
  CHECK(e.tp + e.fp + e.tn + e.fn == 400);
  CHECK(e.accuracy == doctest::Approx((e.tp + e.tn) / n));
  CHECK(*e.sensitivity == doctest::Approx(double(e.tp) / (e.tp + e.fn)));
  CHECK(*e.specificity == doctest::Approx(double(e.tn) / (e.tn + e.fp)));
  CHECK(*e.precision == doctest::Approx(double(e.tp) / (e.tp + e.fp)));
  CHECK(*e.auc >= 0.0);
  CHECK(*e.auc <= 1.0);
  CHECK(e.threshold == 0.4);
  CHECK_THROWS_AS(evaluate(fit, m, 1.0), Error);
}

TEST_CASE("model comparison") {
  auto m = random_design(31, 300, 3);
  auto same = compare_models(m, m);
  CHECK(same.delta_aic == 0.0);
  CHECK(*same.delta_auc == 0.0);
  std::vector<std::string> keep{"(Intercept)", "v0"};
  auto small = select_columns(m, keep);
  auto cmp = compare_models(m, small);
  CHECK(cmp.delta_aic == doctest::Approx(cmp.with_scores.aic - cmp.without_scores.aic));
  CHECK_THROWS_AS(compare_models(small, m), Error);
}

TEST_CASE("separation is flagged, not fatal") {
  DesignMatrix m;
  m.X.resize(8, 2);
  m.y.resize(8);
  m.names = {"(Intercept)", "x"};
  for (int i = 0; i < 8; ++i) {
    m.X(i, 0) = 1.0;
    m.X(i, 1) = i;
    m.y(i) = i >= 4 ? 1.0 : 0.0;
  }
  auto fit = fit_logistic(m);
  CHECK(fit.separation);
  CHECK_FALSE(fit.warning.empty());
}

TEST_CASE("rank deficiency") {
  auto m = random_design(41, 50, 2);
  auto dup = m;
  dup.X.conservativeResize(Eigen::NoChange, 4);
  dup.X.col(3) = 2.0 * m.X.col(1);
  dup.names.push_back("twice");
  auto code = [](const DesignMatrix& d) {
    try {
      fit_logistic(d);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(dup) == ErrorCode::RankDeficient);
  auto flat = m;
  flat.X.col(2).setConstant(3.0);
  CHECK(code(flat) == ErrorCode::RankDeficient);
}

TEST_CASE("design construction") {
  auto cohort = synthesize_cohort(toy_scores(), 2, 1, {3, 0.8, 5});
  auto d = build_design(cohort.students, toy_scores(), 2, 1);
  CHECK(d.names.front() == "(Intercept)");
  CHECK(d.names[1] == "origins:Commuter");
  CHECK(d.names[2] == "origins:Offsite");
  CHECK(d.names[3] == "gender:Female");
  const auto n = d.names.size();
  CHECK(d.names[n - 5] == "admission_score");
  CHECK(d.names[n - 4] == "ects1sem");
  CHECK(d.names[n - 3] == "xi1");
  CHECK(d.names[n - 2] == "xi2");
  CHECK(d.names[n - 1] == "zeta1");
  CHECK(d.X.rows() == 12);
  CHECK(cohort.names == d.names);
  // same course, same score columns
  for (Eigen::Index i = 0; i < d.X.rows(); ++i)
    for (Eigen::Index k = i + 1; k < d.X.rows(); ++k)
      if (cohort.students.records[static_cast<std::size_t>(i)].course_id ==
          cohort.students.records[static_cast<std::size_t>(k)].course_id)
        CHECK(d.X.row(i).tail(3) == d.X.row(k).tail(3));
  CHECK(d.X(0, static_cast<Eigen::Index>(n - 3)) ==
        toy_scores().level1.at(cohort.students.records[0].school_id)[0]);

  auto none = build_design(cohort.students, toy_scores(), 0, 0);
  CHECK(none.names.back() == "ects1sem");
  CHECK(without_scores(d).names == none.names);

  auto stray = cohort.students;
  stray.records[0].course_id = "C09-U1";
  try {
    build_design(stray, toy_scores(), 2, 1);
    FAIL("expected UnmatchedGroupLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnmatchedGroupLabel);
  }
  CHECK_THROWS_AS(build_design(cohort.students, toy_scores(), 3, 1), Error);
}

TEST_CASE("synthetic cohort recovers its truth at large size") {
  ScoreTable t;
  t.K = 1;
  t.L = 1;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (int i = 1; i <= 20; ++i) {
    char c[8];
    std::snprintf(c, sizeof c, "C%02d", i);
    t.level1[c] = {z(rng)};
    for (int j = 1; j <= 4; ++j) {
      const std::string u = std::string(c) + "-U" + std::to_string(j);
      t.level2[u] = {z(rng)};
      t.unit_cluster[u] = c;
    }
  }
  auto cohort = synthesize_cohort(t, 1, 1, {300, 0.8, 9});
  auto d = build_design(cohort.students, t, 1, 1);
  auto fit = fit_logistic(d);
  REQUIRE(fit.converged);
  int within = 0;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j)
    within += std::abs(fit.coefficients(j) - cohort.true_coefficients(j)) <= 3.0 * fit.standard_errors(j);
  CHECK(within >= static_cast<int>(fit.coefficients.size()) - 1);
}

TEST_CASE("holdout split and report csv") {
  auto m = random_design(51, 100, 2);
  auto [train, test] = split_holdout(m, 0.25, 7);
  CHECK(train.X.rows() + test.X.rows() == 100);
  CHECK(test.X.rows() == 25);
  auto [train2, test2] = split_holdout(m, 0.25, 7);
  CHECK(test2.row_ids == test.row_ids);

  auto fit = fit_logistic(m);
  auto dir = rhl::testing::scratch_dir("predict_csv");
  write_logistic_report_csv(dir / "r.csv", fit);
  auto t = csv::read(dir / "r.csv");
  CHECK(t.header == std::vector<std::string>{"parameter", "estimate", "std_error", "p_value"});
  REQUIRE(t.rows.size() == 3);
  CHECK(csv::parse_double(t.rows[1][1], "t") == fit.coefficients(1));
  CHECK(to_json(fit).contains("aic"));
}
