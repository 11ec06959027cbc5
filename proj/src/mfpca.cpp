#include "rhl/mfpca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rhl/csv.hpp"
#include "rhl/error.hpp"

namespace rhl {

namespace {

struct ClusterIndex {
  std::vector<std::string> labels;              // sorted
  std::vector<std::vector<Eigen::Index>> members;
  std::vector<std::size_t> of_unit;
};

ClusterIndex index_clusters(std::span<const std::string> cluster_ids) {
  ClusterIndex idx;
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t u = 0; u < cluster_ids.size(); ++u) groups[cluster_ids[u]].push_back(static_cast<Eigen::Index>(u));
  idx.of_unit.resize(cluster_ids.size());
  for (auto& [label, members] : groups) {
    for (auto u : members) idx.of_unit[static_cast<std::size_t>(u)] = idx.labels.size();
    idx.labels.push_back(label);
    idx.members.push_back(std::move(members));
  }
  return idx;
}

std::size_t eligible_clusters(const ClusterIndex& idx) {
  return static_cast<std::size_t>(
      std::count_if(idx.members.begin(), idx.members.end(), [](const auto& m) { return m.size() >= 2; }));
}

/// Weights of the pairwise-moment estimator: entry (u, v) is 1/(J(J-1)C)
/// when u != v share an eligible cluster of size J, C being the number of
/// eligible clusters.
Eigen::MatrixXd between_weights(const ClusterIndex& idx, Eigen::Index n) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const double c = static_cast<double>(eligible_clusters(idx));
  for (const auto& m : idx.members) {
    if (m.size() < 2) continue;
    const double j = static_cast<double>(m.size());
    const double a = 1.0 / (j * (j - 1.0) * c);
    for (auto u : m)
      for (auto v : m)
        if (u != v) M(u, v) = a;
  }
  return M;
}

Eigen::VectorXd sqrt_weights(std::span<const double> weights) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t g = 0; g < weights.size(); ++g) {
    if (!(weights[g] > 0.0)) fail(ErrorCode::InvalidArgument, "quadrature weights must be positive");
    d[static_cast<Eigen::Index>(g)] = std::sqrt(weights[g]);
  }
  return d;
}

void orient(Eigen::Ref<Eigen::VectorXd> phi, std::span<const double> weights) {
  double integral = 0.0;
  for (Eigen::Index g = 0; g < phi.size(); ++g) integral += weights[static_cast<std::size_t>(g)] * phi[g];
  const double scale = phi.cwiseAbs().maxCoeff();
  if (std::abs(integral) > 1e-12 * std::max(scale, 1.0)) {
    if (integral < 0.0) phi = -phi;
    return;
  }
  for (Eigen::Index g = 0; g < phi.size(); ++g) {
    if (std::abs(phi[g]) > 1e-12 * scale) {
      if (phi[g] < 0.0) phi = -phi;
      return;
    }
  }
}

/// Turns ascending eigenpairs of the symmetrized operator into the
/// descending, clipped, oriented result.
EigenDecomposition finish(const Eigen::VectorXd& ascending, const Eigen::MatrixXd& vectors,
                          const Eigen::VectorXd& inv_sqrt_w, std::span<const double> weights) {
  const Eigen::Index m = ascending.size();
  EigenDecomposition out;
  out.values.resize(static_cast<std::size_t>(m));
  out.functions.resize(inv_sqrt_w.size(), m);
  const double top = m > 0 ? std::max(ascending[m - 1], 0.0) : 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index src = m - 1 - k;
    double v = ascending[src];
    if (v < 0.0) {
      out.clipped += -v;
      v = 0.0;
    }
    if (v <= 1e-12 * top) v = 0.0;
    out.values[static_cast<std::size_t>(k)] = v;
    out.functions.col(k) = inv_sqrt_w.cwiseProduct(vectors.col(src));
    orient(out.functions.col(k), weights);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& rows, std::span<const double> weights) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index G = rows.cols();
  if (static_cast<std::size_t>(n) != weights.size()) fail(ErrorCode::InvalidArgument, "one weight per row required");
  Eigen::MatrixXd scaled = rows;
  for (Eigen::Index u = 0; u < n; ++u) scaled.row(u) *= weights[static_cast<std::size_t>(u)];
  Eigen::MatrixXd out(G, G);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index s = 0; s < G; ++s) {
    for (Eigen::Index t = s; t < G; ++t) {
      double acc = 0.0;
      for (Eigen::Index u = 0; u < n; ++u) acc += scaled(u, s) * rows(u, t);
      out(s, t) = acc;
      out(t, s) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd weighted_gram_serial(const Eigen::MatrixXd& rows, std::span<const double> weights) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index G = rows.cols();
  if (static_cast<std::size_t>(n) != weights.size()) fail(ErrorCode::InvalidArgument, "one weight per row required");
  Eigen::MatrixXd out(G, G);
  for (Eigen::Index s = 0; s < G; ++s) {
    for (Eigen::Index t = s; t < G; ++t) {
      double acc = 0.0;
      for (Eigen::Index u = 0; u < n; ++u) acc += (rows(u, s) * weights[static_cast<std::size_t>(u)]) * rows(u, t);
      out(s, t) = acc;
      out(t, s) = acc;
    }
  }
  return out;
}

GridCurve estimate_mean(const CompensatorSet& curves) {
  if (curves.curves.rows() == 0) fail(ErrorCode::EmptyDataset, "no curves to average");
  GridCurve mean{curves.grid, std::vector<double>(curves.grid.size(), 0.0)};
  const auto n = static_cast<double>(curves.curves.rows());
  for (Eigen::Index g = 0; g < curves.curves.cols(); ++g) {
    double acc = 0.0;
    for (Eigen::Index u = 0; u < curves.curves.rows(); ++u) acc += curves.curves(u, g);
    mean.values[static_cast<std::size_t>(g)] = acc / n;
  }
  return mean;
}

CovarianceSplit covariance_split(const Eigen::MatrixXd& centered, std::span<const std::string> cluster_ids) {
  const Eigen::Index n = centered.rows();
  if (static_cast<std::size_t>(n) != cluster_ids.size())
    fail(ErrorCode::InvalidArgument, "one cluster label per curve required");
  const auto idx = index_clusters(cluster_ids);
  if (idx.labels.size() < 2) fail(ErrorCode::InsufficientClusters, "at least 2 clusters are required");
  const std::size_t eligible = eligible_clusters(idx);
  if (eligible == 0) fail(ErrorCode::InsufficientClusters, "no cluster has 2 or more units");

  CovarianceSplit out;
  out.total = weighted_gram(centered, std::vector<double>(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n)));

  // sum over pairs u != v of y_u y_v^T = S S^T - sum_u y_u y_u^T per cluster.
  Eigen::MatrixXd sums(static_cast<Eigen::Index>(eligible), centered.cols());
  std::vector<double> a;
  std::vector<Eigen::Index> members;
  std::vector<double> b;
  for (const auto& m : idx.members) {
    if (m.size() < 2) continue;
    const double j = static_cast<double>(m.size());
    const double w = 1.0 / (j * (j - 1.0) * static_cast<double>(eligible));
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(centered.cols());
    for (auto u : m) {
      s += centered.row(u);
      members.push_back(u);
      b.push_back(w);
    }
    sums.row(static_cast<Eigen::Index>(a.size())) = s;
    a.push_back(w);
  }
  Eigen::MatrixXd own(static_cast<Eigen::Index>(members.size()), centered.cols());
  for (std::size_t k = 0; k < members.size(); ++k) own.row(static_cast<Eigen::Index>(k)) = centered.row(members[k]);
  out.between = weighted_gram(sums, a) - weighted_gram(own, b);
  out.within = out.total - out.between;
  return out;
}

EigenDecomposition eigen_decompose(const Eigen::MatrixXd& K, std::span<const double> weights) {
  if (K.rows() != K.cols() || static_cast<std::size_t>(K.rows()) != weights.size())
    fail(ErrorCode::InvalidArgument, "kernel and weights disagree in size");
  const Eigen::VectorXd d = sqrt_weights(weights);
  Eigen::MatrixXd A = d.asDiagonal() * K * d.asDiagonal();
  A = 0.5 * (A + A.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
  return finish(es.eigenvalues(), es.eigenvectors(), d.cwiseInverse(), weights);
}

EigenDecomposition eigen_decompose_factored(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& M,
                                            std::span<const double> weights) {
  const Eigen::Index n = Y.rows();
  const Eigen::Index G = Y.cols();
  if (static_cast<std::size_t>(G) != weights.size() || M.rows() != n || M.cols() != n)
    fail(ErrorCode::InvalidArgument, "factored kernel dimensions disagree");
  const Eigen::VectorXd d = sqrt_weights(weights);
  // W^1/2 Y^T M Y W^1/2 = Q (R M R^T) Q^T with B^T = Q R.
  const Eigen::MatrixXd Bt = d.asDiagonal() * Y.transpose();
  const Eigen::Index r = std::min(n, G);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Bt);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(G, r);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  Eigen::MatrixXd S = R * M * R.transpose();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) fail(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
  return finish(es.eigenvalues(), Q * es.eigenvectors(), d.cwiseInverse(), weights);
}

std::size_t truncate_by_pve(std::span<const double> eigenvalues, double pve) {
  if (!(pve > 0.0 && pve <= 1.0)) fail(ErrorCode::InvalidArgument, "pve must lie in (0, 1]");
  double total = 0.0;
  for (double v : eigenvalues) total += std::max(v, 0.0);
  if (total <= 0.0) return 0;
  double cum = 0.0;
  for (std::size_t m = 0; m < eigenvalues.size(); ++m) {
    cum += std::max(eigenvalues[m], 0.0);
    if (cum >= pve * total) return m + 1;
  }
  return eigenvalues.size();
}

Scores estimate_scores(const Eigen::MatrixXd& centered, std::span<const std::string> cluster_ids,
                       const Eigen::MatrixXd& phi1, const Eigen::MatrixXd& phi2,
                       std::span<const double> weights) {
  const Eigen::Index G = centered.cols();
  if (phi1.rows() != G || phi2.rows() != G || static_cast<std::size_t>(G) != weights.size())
    fail(ErrorCode::BasisMismatch, "basis functions are not sampled on the curve grid");
  if (static_cast<std::size_t>(centered.rows()) != cluster_ids.size())
    fail(ErrorCode::InvalidArgument, "one cluster label per curve required");
  const auto idx = index_clusters(cluster_ids);
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), G);

  Eigen::MatrixXd cluster_means(static_cast<Eigen::Index>(idx.labels.size()), G);
  for (std::size_t c = 0; c < idx.labels.size(); ++c) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(G);
    for (auto u : idx.members[c]) s += centered.row(u);
    cluster_means.row(static_cast<Eigen::Index>(c)) = s / static_cast<double>(idx.members[c].size());
  }

  Scores out;
  out.clusters = idx.labels;
  out.xi = cluster_means * w.asDiagonal() * phi1;
  Eigen::MatrixXd within = centered;
  for (Eigen::Index u = 0; u < centered.rows(); ++u)
    within.row(u) -= cluster_means.row(static_cast<Eigen::Index>(idx.of_unit[static_cast<std::size_t>(u)]));
  out.zeta = within * w.asDiagonal() * phi2;
  return out;
}

double LevelResult::retained_total() const {
  double s = 0.0;
  for (double v : eigenvalues) s += v;
  return s;
}

GridCurve LevelResult::eigenfunction(const std::vector<double>& grid, std::size_t component) const {
  if (component < 1 || component > count())
    fail(ErrorCode::ComponentOutOfRange, "component " + std::to_string(component) + " is not retained");
  const auto col = eigenfunctions.col(static_cast<Eigen::Index>(component - 1));
  return GridCurve{grid, std::vector<double>(col.data(), col.data() + col.size())};
}

const LevelResult& MFPCAResult::level(int which) const {
  if (which == 1) return level1;
  if (which == 2) return level2;
  fail(ErrorCode::ComponentOutOfRange, "level must be 1 or 2");
}

MFPCAResult mfpca(const CompensatorSet& curves, double pve1, double pve2) {
  const Eigen::Index n = curves.curves.rows();
  const Eigen::Index G = curves.curves.cols();
  if (n == 0) fail(ErrorCode::EmptyDataset, "no curves to decompose");
  if (static_cast<std::size_t>(G) != curves.grid.size() || G < 2)
    fail(ErrorCode::BasisMismatch, "curve matrix does not match its grid");
  const auto idx = index_clusters(curves.cluster_ids);
  if (idx.labels.size() < 2 || eligible_clusters(idx) < 2)
    fail(ErrorCode::InsufficientClusters, "at least 2 clusters with 2 or more units are required");

  MFPCAResult r;
  r.mean = estimate_mean(curves);
  r.weights = trapezoid_weights(curves.grid);
  const Eigen::Map<const Eigen::RowVectorXd> mu(r.mean.values.data(), G);
  const Eigen::MatrixXd Y = curves.curves.rowwise() - mu;

  const Eigen::MatrixXd Mb = between_weights(idx, n);
  const Eigen::MatrixXd Mw = Eigen::MatrixXd::Identity(n, n) / static_cast<double>(n) - Mb;
  auto e1 = eigen_decompose_factored(Y, Mb, r.weights);
  auto e2 = eigen_decompose_factored(Y, Mw, r.weights);

  auto keep = [](LevelResult& level, EigenDecomposition& e, double pve) {
    const std::size_t m = truncate_by_pve(e.values, pve);
    level.all_eigenvalues = e.values;
    level.eigenvalues.assign(e.values.begin(), e.values.begin() + static_cast<std::ptrdiff_t>(m));
    level.eigenfunctions = e.functions.leftCols(static_cast<Eigen::Index>(m));
    level.pve_target = pve;
    double total = 0.0;
    for (double v : e.values) total += v;
    level.pve_achieved = total > 0.0 ? level.retained_total() / total : 0.0;
    level.clipped = e.clipped;
  };
  keep(r.level1, e1, pve1);
  keep(r.level2, e2, pve2);

  auto scores = estimate_scores(Y, curves.cluster_ids, r.level1.eigenfunctions, r.level2.eigenfunctions, r.weights);
  r.level1.scores = std::move(scores.xi);
  r.level2.scores = std::move(scores.zeta);
  r.clusters = std::move(scores.clusters);
  r.unit_ids = curves.unit_ids;
  r.unit_clusters = curves.cluster_ids;

  const double t1 = r.level1.retained_total();
  const double t2 = r.level2.retained_total();
  r.rho = t1 + t2 > 0.0 ? t1 / (t1 + t2) : 0.0;

  const Eigen::Map<const Eigen::VectorXd> w(r.weights.data(), G);
  double resid = 0.0;
  double scale = 0.0;
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto c = static_cast<Eigen::Index>(idx.of_unit[static_cast<std::size_t>(u)]);
    Eigen::VectorXd e = Y.row(u).transpose();
    scale += e.cwiseAbs2().dot(w);
    e -= r.level1.eigenfunctions * r.level1.scores.row(c).transpose();
    e -= r.level2.eigenfunctions * r.level2.scores.row(u).transpose();
    resid += e.cwiseAbs2().dot(w);
  }
  r.residual_fraction = scale > 0.0 ? resid / scale : 0.0;
  return r;
}

std::pair<GridCurve, GridCurve> perturbation_curves(const MFPCAResult& result, int level, int component) {
  const auto& lv = result.level(level);
  if (component < 1 || static_cast<std::size_t>(component) > lv.count())
    fail(ErrorCode::ComponentOutOfRange,
         "level " + std::to_string(level) + " component " + std::to_string(component) + " is not retained");
  const double s = std::sqrt(lv.eigenvalues[static_cast<std::size_t>(component - 1)]);
  GridCurve plus = result.mean;
  GridCurve minus = result.mean;
  for (std::size_t g = 0; g < plus.values.size(); ++g) {
    const double d = s * lv.eigenfunctions(static_cast<Eigen::Index>(g), component - 1);
    plus.values[g] += d;
    minus.values[g] -= d;
  }
  return {plus, minus};
}

ScoreTable score_table(const MFPCAResult& result) {
  ScoreTable t;
  t.K = result.level1.count();
  t.L = result.level2.count();
  for (std::size_t c = 0; c < result.clusters.size(); ++c) {
    const auto row = result.level1.scores.row(static_cast<Eigen::Index>(c));
    t.level1[result.clusters[c]] = std::vector<double>(row.begin(), row.end());
  }
  for (std::size_t u = 0; u < result.unit_ids.size(); ++u) {
    const auto row = result.level2.scores.row(static_cast<Eigen::Index>(u));
    t.level2[result.unit_ids[u]] = std::vector<double>(row.begin(), row.end());
    t.unit_cluster[result.unit_ids[u]] = result.unit_clusters[u];
  }
  return t;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_eigenfunctions_csv(const std::filesystem::path& path, const MFPCAResult& result) {
  auto out = open_out(path);
  out << "level,component,t,value\n";
  for (int level = 1; level <= 2; ++level) {
    const auto& lv = result.level(level);
    for (Eigen::Index k = 0; k < lv.eigenfunctions.cols(); ++k)
      for (std::size_t g = 0; g < result.mean.grid.size(); ++g)
        out << level << ',' << k + 1 << ',' << csv::format_double(result.mean.grid[g]) << ','
            << csv::format_double(lv.eigenfunctions(static_cast<Eigen::Index>(g), k)) << '\n';
  }
}

void write_perturbations_csv(const std::filesystem::path& path, const MFPCAResult& result) {
  auto out = open_out(path);
  out << "level,component,curve,t,value\n";
  for (int level = 1; level <= 2; ++level) {
    const auto& lv = result.level(level);
    for (int k = 1; k <= static_cast<int>(lv.count()); ++k) {
      const auto [plus, minus] = perturbation_curves(result, level, k);
      const std::pair<const char*, const GridCurve*> blocks[] = {
          {"mean", &result.mean}, {"plus", &plus}, {"minus", &minus}};
      for (const auto& [name, curve] : blocks)
        for (std::size_t g = 0; g < curve->grid.size(); ++g)
          out << level << ',' << k << ',' << name << ',' << csv::format_double(curve->grid[g]) << ','
              << csv::format_double(curve->values[g]) << '\n';
    }
  }
}

void write_scores_csv(const std::filesystem::path& path, const MFPCAResult& result) {
  auto out = open_out(path);
  out << "level,cluster_id,unit_id,component,score\n";
  for (std::size_t c = 0; c < result.clusters.size(); ++c)
    for (Eigen::Index k = 0; k < result.level1.scores.cols(); ++k)
      out << "1," << result.clusters[c] << ",," << k + 1 << ','
          << csv::format_double(result.level1.scores(static_cast<Eigen::Index>(c), k)) << '\n';
  for (std::size_t u = 0; u < result.unit_ids.size(); ++u)
    for (Eigen::Index l = 0; l < result.level2.scores.cols(); ++l)
      out << "2," << result.unit_clusters[u] << ',' << result.unit_ids[u] << ',' << l + 1 << ','
          << csv::format_double(result.level2.scores(static_cast<Eigen::Index>(u), l)) << '\n';
}

ScoreTable read_scores_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_level = t.require("level");
  const auto c_cluster = t.require("cluster_id");
  const auto c_unit = t.require("unit_id");
  const auto c_comp = t.require("component");
  const auto c_score = t.require("score");
  ScoreTable out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = "row " + std::to_string(r + 2);
    const auto level = csv::parse_int(row[c_level], ctx);
    const auto comp = csv::parse_int(row[c_comp], ctx);
    if (comp < 1) fail(ErrorCode::InvalidValue, ctx + ": component must be >= 1");
    const double score = csv::parse_double(row[c_score], ctx);
    std::vector<double>* target = nullptr;
    if (level == 1) {
      target = &out.level1[row[c_cluster]];
      out.K = std::max(out.K, static_cast<std::size_t>(comp));
    } else if (level == 2) {
      target = &out.level2[row[c_unit]];
      out.unit_cluster[row[c_unit]] = row[c_cluster];
      out.L = std::max(out.L, static_cast<std::size_t>(comp));
    } else {
      fail(ErrorCode::InvalidValue, ctx + ": level must be 1 or 2");
    }
    if (target->size() < static_cast<std::size_t>(comp)) target->resize(static_cast<std::size_t>(comp), 0.0);
    (*target)[static_cast<std::size_t>(comp - 1)] = score;
  }
  for (auto* m : {&out.level1, &out.level2}) {
    const std::size_t want = m == &out.level1 ? out.K : out.L;
    for (auto& [label, v] : *m)
      if (v.size() != want) fail(ErrorCode::InvalidValue, "scores of '" + label + "' are incomplete");
  }
  return out;
}

EigenfunctionTable read_eigenfunctions_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_level = t.require("level");
  const auto c_comp = t.require("component");
  const auto c_t = t.require("t");
  const auto c_v = t.require("value");
  EigenfunctionTable out;
  std::map<std::pair<int, int>, std::vector<double>> grids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = "row " + std::to_string(r + 2);
    const std::pair<int, int> key{static_cast<int>(csv::parse_int(row[c_level], ctx)),
                                  static_cast<int>(csv::parse_int(row[c_comp], ctx))};
    grids[key].push_back(csv::parse_double(row[c_t], ctx));
    out.functions[key].push_back(csv::parse_double(row[c_v], ctx));
  }
  for (const auto& [key, g] : grids) {
    if (out.grid.empty()) out.grid = g;
    if (g != out.grid) fail(ErrorCode::BasisMismatch, "eigenfunctions are sampled on different grids");
  }
  return out;
}

nlohmann::json to_json(const MFPCAResult& result) {
  using nlohmann::json;
  auto level_json = [&](const LevelResult& lv) {
    json j;
    j["count"] = lv.count();
    j["eigenvalues"] = lv.eigenvalues;
    j["all_eigenvalues"] = lv.all_eigenvalues;
    j["pve_target"] = lv.pve_target;
    j["pve_achieved"] = lv.pve_achieved;
    j["explained_variance"] = lv.retained_total();
    j["clipped_negative_eigenvalues"] = lv.clipped;
    return j;
  };
  json j;
  j["grid_size"] = result.mean.grid.size();
  j["level1"] = level_json(result.level1);
  j["level2"] = level_json(result.level2);
  j["rho"] = result.rho;
  j["residual_fraction"] = result.residual_fraction;

  json xi = json::object();
  for (std::size_t c = 0; c < result.clusters.size(); ++c) {
    const auto row = result.level1.scores.row(static_cast<Eigen::Index>(c));
    xi[result.clusters[c]] = std::vector<double>(row.begin(), row.end());
  }
  json zeta = json::object();
  for (std::size_t u = 0; u < result.unit_ids.size(); ++u) {
    const auto row = result.level2.scores.row(static_cast<Eigen::Index>(u));
    zeta[result.unit_ids[u]] = std::vector<double>(row.begin(), row.end());
  }
  j["level1"]["scores"] = std::move(xi);
  j["level2"]["scores"] = std::move(zeta);
  return j;
}

}  // namespace rhl
