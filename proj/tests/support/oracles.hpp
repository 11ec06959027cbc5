#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhl/dataio.hpp"

namespace rhl::testing {

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rhl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

using RowCovariates = std::function<std::vector<double>(const RecurrentEventRow&)>;

/// Log partial likelihood with Breslow ties by direct enumeration:
/// sum over event rows of eta_e - log sum_{start < t_e <= stop} exp(eta).
/// Value, score and observed information, written independently of the
/// library sweep.
struct NaivePL {
  double value = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

inline NaivePL naive_partial_likelihood(const std::vector<RecurrentEventRow>& rows, const RowCovariates& z,
                                        const Eigen::VectorXd& b) {
  const auto p = b.size();
  std::vector<Eigen::VectorXd> zs;
  for (const auto& r : rows) {
    auto v = z(r);
    zs.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  NaivePL out{0.0, Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p)};
  for (std::size_t e = 0; e < rows.size(); ++e) {
    if (rows[e].status != 1) continue;
    const double t = rows[e].stop;
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!(rows[r].start < t && t <= rows[r].stop)) continue;
      const double w = std::exp(zs[r].dot(b));
      s0 += w;
      s1 += w * zs[r];
      s2 += w * zs[r] * zs[r].transpose();
    }
    out.value += zs[e].dot(b) - std::log(s0);
    out.score += zs[e] - s1 / s0;
    out.info += s2 / s0 - (s1 / s0) * (s1 / s0).transpose();
  }
  return out;
}

/// Maximizer of a concave likelihood by cyclic coordinate ascent, each
/// coordinate solved by bisection of its score on [-10, 10] to width `res`.
/// Returns false when a coordinate lands on the bracket edge.
inline bool bisection_maximize(const std::vector<RecurrentEventRow>& rows, const RowCovariates& z,
                               Eigen::VectorXd& b, double res = 1e-7) {
  for (int sweep = 0; sweep < 5000; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      double lo = -10.0, hi = 10.0;
      auto score_at = [&](double v) {
        Eigen::VectorXd c = b;
        c(j) = v;
        return naive_partial_likelihood(rows, z, c).score(j);
      };
      if (score_at(lo) <= 0.0 || score_at(hi) >= 0.0) return false;
      while (hi - lo > res) {
        const double mid = 0.5 * (lo + hi);
        (score_at(mid) > 0.0 ? lo : hi) = mid;
      }
      const double v = 0.5 * (lo + hi);
      moved = std::max(moved, std::abs(v - b(j)));
      b(j) = v;
    }
    if (moved < res) return true;
  }
  return false;
}

/// Random micro-dataset: `units` units on [0, 1], Poisson event counts,
/// `p` time-varying covariates redrawn at each row start.
inline RecurrentEventDataset random_micro_dataset(std::uint64_t seed, int units, int p, int max_rows) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::poisson_distribution<int> pois(2.0);
  RecurrentEventDataset data;
  for (int k = 0; k < p; ++k) data.covariate_names.push_back("x" + std::to_string(k + 1));
  int budget = max_rows;
  for (int u = 0; u < units; ++u) {
    const int left_units = units - u - 1;
    int n = std::min(pois(rng), budget - left_units - 1);
    std::vector<double> times;
    for (int e = 0; e < n; ++e) times.push_back(unif(rng));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    budget -= static_cast<int>(times.size()) + 1;
    double start = 0.0;
    int count = 0;
    auto covs = [&] {
      std::vector<double> v;
      for (int k = 0; k < p; ++k) v.push_back(norm(rng));
      return v;
    };
    const std::string cluster = "C" + std::to_string(u / 3);
    const std::string unit = "U" + std::to_string(u);
    for (double t : times) {
      data.rows.push_back({cluster, unit, start, t, 1, count, {}, covs()});
      start = t;
      ++count;
    }
    data.rows.push_back({cluster, unit, start, 1.0, 0, count, {}, covs()});
  }
  std::stable_sort(data.rows.begin(), data.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.cluster_id, a.unit_id) < std::tie(b.cluster_id, b.unit_id);
  });
  data.validate();
  return data;
}

/// Kolmogorov distribution tail P(K > x).
inline double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS p-value of `x` against Exp(1), asymptotic with the
/// Stephens small-sample correction.
inline double ks_exponential_pvalue(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - std::exp(-x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace rhl::testing
