#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhl/agmodel.hpp"
#include "rhl/curves.hpp"
#include "rhl/dataio.hpp"
#include "rhl/interp.hpp"

namespace rhl {

/// Grid-aligned compensator curves, one row per unit, rows ordered by
/// (cluster_id, unit_id).
struct CompensatorSet {
  std::vector<double> grid;
  Eigen::MatrixXd curves;  // n x grid.size()
  std::vector<std::string> unit_ids;
  std::vector<std::string> cluster_ids;

  std::size_t units() const noexcept { return unit_ids.size(); }
  GridCurve curve(std::size_t i) const;
};

/// Evaluates the fitted compensator of one unit on `grid`:
///   sum_k exp(eta_k) * [L0(min(t_{k+1}, t)) - L0(t_k)]
/// over the unit's rows (t_k, t_{k+1}] with start < t, where eta_k is the
/// linear predictor frozen at the row's start. `baseline` is evaluated by
/// monotone cubic interpolation through its grid values.
GridCurve reconstruct_compensator(std::span<const RecurrentEventRow> rows, std::span<const double> eta,
                                  const GridCurve& baseline, std::span<const double> grid);

/// Same, for the unit `unit_id` of `data` under `fit`.
GridCurve reconstruct_compensator(const RecurrentEventDataset& data, std::string_view unit_id,
                                  const AGFit& fit, const GridCurve& baseline, std::span<const double> grid);

/// Every unit of `data`, parallel over units (OpenMP).
CompensatorSet reconstruct_all(const RecurrentEventDataset& data, const AGFit& fit, const GridCurve& baseline,
                               std::span<const double> grid);

/// Serial reference of reconstruct_all.
CompensatorSet reconstruct_all_serial(const RecurrentEventDataset& data, const AGFit& fit,
                                      const GridCurve& baseline, std::span<const double> grid);

/// Long format `cluster_id,unit_id,t,value`.
void write_curves_csv(const std::filesystem::path& path, const CompensatorSet& set);
CompensatorSet read_curves_csv(const std::filesystem::path& path);

/// Reorders rows by (cluster_id, unit_id).
CompensatorSet canonical_order(CompensatorSet set);

}  // namespace rhl
