#include "rhl/compensator.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "rhl/csv.hpp"
#include "rhl/error.hpp"
#include "rhl/parallel.hpp"

namespace rhl {

namespace {

void check_coverage(const GridCurve& baseline, std::span<const double> grid) {
  if (baseline.grid.size() < 2 || baseline.grid.size() != baseline.values.size())
    fail(ErrorCode::InvalidArgument, "baseline curve is malformed");
  if (grid.empty() || !is_strictly_increasing(grid))
    fail(ErrorCode::InvalidArgument, "evaluation grid must be strictly increasing");
  if (grid.front() < baseline.grid.front() || grid.back() > baseline.grid.back())
    fail(ErrorCode::GridOutsideBaseline, "evaluation grid extends beyond the baseline grid");
}

void reconstruct_into(std::span<const RecurrentEventRow> rows, std::span<const double> eta,
                      const MonotoneCubic& base, std::span<const double> grid, std::span<double> out) {
  const double lo = base.knots().front();
  const double hi = base.knots().back();
  std::vector<double> w(rows.size()), at_start(rows.size()), at_stop(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].start < lo || rows[k].stop > hi)
      fail(ErrorCode::GridOutsideBaseline, "unit history extends beyond the baseline grid");
    w[k] = std::exp(eta[k]);
    at_start[k] = base(rows[k].start);
    at_stop[k] = base(rows[k].stop);
  }

  CompensatedSum done;
  std::size_t k = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    while (k < rows.size() && rows[k].stop <= t) {
      done.add(w[k] * (at_stop[k] - at_start[k]));
      ++k;
    }
    double v = done.value();
    if (k < rows.size() && rows[k].start < t) v += w[k] * (base(t) - at_start[k]);
    out[i] = i > 0 ? std::max(v, out[i - 1]) : v;
  }
}

CompensatorSet reconstruct_impl(const RecurrentEventDataset& data, const AGFit& fit, const GridCurve& baseline,
                                std::span<const double> grid, bool parallel) {
  check_coverage(baseline, grid);
  const MonotoneCubic base(baseline.grid, baseline.values);
  const Eigen::VectorXd eta = linear_predictor(data, fit);
  const auto units = data.units();
  const auto n = static_cast<Eigen::Index>(units.size());
  const auto g = static_cast<Eigen::Index>(grid.size());

  CompensatorSet set;
  set.grid.assign(grid.begin(), grid.end());
  set.curves.resize(n, g);
  for (const auto& u : units) {
    set.unit_ids.push_back(u.unit_id);
    set.cluster_ids.push_back(u.cluster_id);
  }

  std::span<const RecurrentEventRow> all(data.rows);
  std::span<const double> eta_all(eta.data(), static_cast<std::size_t>(eta.size()));
  auto one = [&](Eigen::Index u, std::vector<double>& buf) {
    const auto& r = units[static_cast<std::size_t>(u)];
    reconstruct_into(all.subspan(r.begin, r.end - r.begin), eta_all.subspan(r.begin, r.end - r.begin), base,
                     grid, buf);
    for (Eigen::Index i = 0; i < g; ++i) set.curves(u, i) = buf[static_cast<std::size_t>(i)];
  };

  if (parallel) {
    std::exception_ptr error;
#pragma omp parallel
    {
      std::vector<double> buf(grid.size());
#pragma omp for schedule(static)
      for (Eigen::Index u = 0; u < n; ++u) {
        try {
          one(u, buf);
        } catch (...) {
#pragma omp critical
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    std::vector<double> buf(grid.size());
    for (Eigen::Index u = 0; u < n; ++u) one(u, buf);
  }
  return canonical_order(std::move(set));
}

}  // namespace

GridCurve CompensatorSet::curve(std::size_t i) const {
  GridCurve c{grid, std::vector<double>(grid.size())};
  for (std::size_t j = 0; j < grid.size(); ++j)
    c.values[j] = curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return c;
}

GridCurve reconstruct_compensator(std::span<const RecurrentEventRow> rows, std::span<const double> eta,
                                  const GridCurve& baseline, std::span<const double> grid) {
  if (rows.size() != eta.size()) fail(ErrorCode::InvalidArgument, "one linear predictor per row is required");
  check_coverage(baseline, grid);
  const MonotoneCubic base(baseline.grid, baseline.values);
  GridCurve out{std::vector<double>(grid.begin(), grid.end()), std::vector<double>(grid.size())};
  reconstruct_into(rows, eta, base, grid, out.values);
  return out;
}

GridCurve reconstruct_compensator(const RecurrentEventDataset& data, std::string_view unit_id, const AGFit& fit,
                                  const GridCurve& baseline, std::span<const double> grid) {
  const auto units = data.units();
  auto it = std::find_if(units.begin(), units.end(), [&](const auto& u) { return u.unit_id == unit_id; });
  if (it == units.end()) fail(ErrorCode::UnitMismatch, "unit '" + std::string(unit_id) + "' not in dataset");
  const Eigen::VectorXd eta = linear_predictor(data, fit);
  std::span<const RecurrentEventRow> rows(data.rows);
  std::span<const double> e(eta.data(), static_cast<std::size_t>(eta.size()));
  return reconstruct_compensator(rows.subspan(it->begin, it->end - it->begin),
                                 e.subspan(it->begin, it->end - it->begin), baseline, grid);
}

CompensatorSet reconstruct_all(const RecurrentEventDataset& data, const AGFit& fit, const GridCurve& baseline,
                               std::span<const double> grid) {
  return reconstruct_impl(data, fit, baseline, grid, true);
}

CompensatorSet reconstruct_all_serial(const RecurrentEventDataset& data, const AGFit& fit,
                                      const GridCurve& baseline, std::span<const double> grid) {
  return reconstruct_impl(data, fit, baseline, grid, false);
}

CompensatorSet canonical_order(CompensatorSet set) {
  std::vector<std::size_t> order(set.units());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return std::tie(set.cluster_ids[a], set.unit_ids[a]) < std::tie(set.cluster_ids[b], set.unit_ids[b]);
  });
  CompensatorSet out;
  out.grid = set.grid;
  out.curves.resize(set.curves.rows(), set.curves.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.curves.row(static_cast<Eigen::Index>(i)) = set.curves.row(static_cast<Eigen::Index>(order[i]));
    out.unit_ids.push_back(set.unit_ids[order[i]]);
    out.cluster_ids.push_back(set.cluster_ids[order[i]]);
  }
  return out;
}

void write_curves_csv(const std::filesystem::path& path, const CompensatorSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << "cluster_id,unit_id,t,value\n";
  for (std::size_t u = 0; u < set.units(); ++u) {
    for (std::size_t j = 0; j < set.grid.size(); ++j) {
      out << set.cluster_ids[u] << ',' << set.unit_ids[u] << ',' << csv::format_double(set.grid[j]) << ','
          << csv::format_double(set.curves(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)))
          << '\n';
    }
  }
}

CompensatorSet read_curves_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const auto c_cluster = t.require("cluster_id");
  const auto c_unit = t.require("unit_id");
  const auto c_t = t.require("t");
  const auto c_v = t.require("value");
  if (t.rows.empty()) fail(ErrorCode::EmptyDataset, "curve table '" + path.string() + "' has no rows");

  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> by_unit;
  std::map<std::string, std::string> cluster_of;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = "row " + std::to_string(r + 2);
    auto [it, inserted] = cluster_of.emplace(row[c_unit], row[c_cluster]);
    if (!inserted && it->second != row[c_cluster])
      fail(ErrorCode::UnitMismatch, "unit '" + row[c_unit] + "' appears in two clusters");
    by_unit[{row[c_cluster], row[c_unit]}].emplace_back(csv::parse_double(row[c_t], context),
                                                        csv::parse_double(row[c_v], context));
  }

  CompensatorSet set;
  for (auto& [key, pts] : by_unit) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> g(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) g[i] = pts[i].first;
    if (set.grid.empty()) {
      if (!is_strictly_increasing(g)) fail(ErrorCode::InvalidValue, "curve grid has repeated time points");
      set.grid = g;
    } else if (g != set.grid) {
      fail(ErrorCode::BasisMismatch, "unit '" + key.second + "' is sampled on a different grid");
    }
  }
  set.curves.resize(static_cast<Eigen::Index>(by_unit.size()), static_cast<Eigen::Index>(set.grid.size()));
  Eigen::Index u = 0;
  for (const auto& [key, pts] : by_unit) {
    set.cluster_ids.push_back(key.first);
    set.unit_ids.push_back(key.second);
    for (std::size_t i = 0; i < pts.size(); ++i) set.curves(u, static_cast<Eigen::Index>(i)) = pts[i].second;
    ++u;
  }
  return set;
}

}  // namespace rhl
