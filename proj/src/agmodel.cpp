#include "rhl/agmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "rhl/compensator.hpp"
#include "rhl/error.hpp"
#include "rhl/interp.hpp"

namespace rhl {

namespace {

constexpr double kMaxLinearPredictor = 700.0;
constexpr int kMaxHalvings = 30;
constexpr double kRelativeLoglikTol = 1e-12;
constexpr double kInformationCollapse = 1e-6;

/// Event-time bookkeeping for the risk-set sweep. Times run backwards: a
/// row enters when t <= stop and leaves once t <= start.
struct RiskIndex {
  std::vector<double> start;
  std::vector<double> stop;
  std::vector<double> event_times;                // distinct, descending
  std::vector<std::vector<std::size_t>> events;   // event rows per time
  std::vector<std::size_t> by_stop;               // rows, stop descending
  std::vector<std::size_t> by_start;              // rows, start descending

  explicit RiskIndex(const RecurrentEventDataset& data) {
    const std::size_t n = data.rows.size();
    start.resize(n);
    stop.resize(n);
    std::vector<std::size_t> ev;
    for (std::size_t i = 0; i < n; ++i) {
      start[i] = data.rows[i].start;
      stop[i] = data.rows[i].stop;
      if (data.rows[i].status == 1) ev.push_back(i);
    }
    std::stable_sort(ev.begin(), ev.end(), [&](auto a, auto b) { return stop[a] > stop[b]; });
    for (auto i : ev) {
      if (event_times.empty() || event_times.back() != stop[i]) {
        event_times.push_back(stop[i]);
        events.emplace_back();
      }
      events.back().push_back(i);
    }
    by_stop.resize(n);
    std::iota(by_stop.begin(), by_stop.end(), std::size_t{0});
    by_start = by_stop;
    std::stable_sort(by_stop.begin(), by_stop.end(), [&](auto a, auto b) { return stop[a] > stop[b]; });
    std::stable_sort(by_start.begin(), by_start.end(), [&](auto a, auto b) { return start[a] > start[b]; });
  }
};

/// Running sums S0, S1, S2 over the current risk set.
struct RiskSums {
  double s0 = 0.0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;

  explicit RiskSums(Eigen::Index p) : s1(Eigen::VectorXd::Zero(p)), s2(Eigen::MatrixXd::Zero(p, p)) {}

  void add(double w, const Eigen::Ref<const Eigen::RowVectorXd>& x, double sign) {
    s0 += sign * w;
    if (x.size() == 0) return;
    s1.noalias() += (sign * w) * x.transpose();
    s2.noalias() += (sign * w) * x.transpose() * x;
  }
};

template <class Visit>
void sweep(const RiskIndex& idx, const Eigen::MatrixXd& x, const Eigen::VectorXd& weight, Visit&& visit) {
  RiskSums sums(x.cols());
  std::size_t in = 0;
  std::size_t out = 0;
  const std::size_t n = idx.by_stop.size();
  for (std::size_t k = 0; k < idx.event_times.size(); ++k) {
    const double t = idx.event_times[k];
    while (in < n && idx.stop[idx.by_stop[in]] >= t) {
      const auto r = idx.by_stop[in++];
      sums.add(weight[r], x.row(r), 1.0);
    }
    while (out < n && idx.start[idx.by_start[out]] >= t) {
      const auto r = idx.by_start[out++];
      sums.add(weight[r], x.row(r), -1.0);
    }
    visit(k, sums);
  }
}

PartialLikelihood evaluate(const RiskIndex& idx, const Eigen::MatrixXd& x, const Eigen::VectorXd& coeffs) {
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(x * coeffs) : Eigen::VectorXd::Zero(x.rows());
  if (eta.size() > 0 && eta.cwiseAbs().maxCoeff() > kMaxLinearPredictor)
    fail(ErrorCode::NumericalOverflow, "linear predictor exceeds 700 in magnitude; rescale covariates");
  const Eigen::VectorXd w = eta.array().exp();

  PartialLikelihood pl;
  pl.gradient = Eigen::VectorXd::Zero(p);
  pl.hessian = Eigen::MatrixXd::Zero(p, p);
  sweep(idx, x, w, [&](std::size_t k, const RiskSums& s) {
    const auto& rows = idx.events[k];
    const double d = static_cast<double>(rows.size());
    for (auto r : rows) {
      pl.value += eta[r];
      if (p > 0) pl.gradient += x.row(r).transpose();
    }
    pl.value -= d * std::log(s.s0);
    if (p > 0) {
      const Eigen::VectorXd mean = s.s1 / s.s0;
      pl.gradient -= d * mean;
      pl.hessian -= d * (s.s2 / s.s0 - mean * mean.transpose());
    }
  });
  return pl;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& x) {
  if (x.cols() == 0 || x.rows() == 0) return x;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return x.rowwise() - mean;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> CovariateSpec::names() const {
  std::vector<std::string> out = x_names;
  out.insert(out.end(), z_names.begin(), z_names.end());
  return out;
}

void CovariateSpec::validate(const RecurrentEventDataset& data) const {
  std::set<std::string> seen;
  for (const auto& n : names()) {
    if (!seen.insert(n).second)
      fail(ErrorCode::InvalidArgument, "covariate '" + n + "' listed twice in the x/z specification");
    if (!data.column(n)) fail(ErrorCode::MissingColumn, "covariate '" + n + "' not found in the dataset");
  }
}

Eigen::VectorXd AGFit::coefficients() const {
  Eigen::VectorXd c(beta.size() + theta.size());
  c << beta, theta;
  return c;
}

Eigen::VectorXd AGFit::standard_errors() const { return covariance.diagonal().cwiseSqrt(); }

Eigen::VectorXd AGFit::p_values() const {
  const Eigen::VectorXd c = coefficients();
  const Eigen::VectorXd se = standard_errors();
  Eigen::VectorXd p(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) p[i] = std::erfc(std::abs(c[i] / se[i]) / std::sqrt(2.0));
  return p;
}

Eigen::MatrixXd design_matrix(const RecurrentEventDataset& data, const CovariateSpec& spec) {
  spec.validate(data);
  const auto names = spec.names();
  std::vector<ColumnRef> refs;
  for (const auto& n : names) refs.push_back(*data.column(n));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.rows.size()), static_cast<Eigen::Index>(refs.size()));
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    for (std::size_t j = 0; j < refs.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data.value(data.rows[i], refs[j]);
  return x;
}

PartialLikelihood log_partial_likelihood(const RecurrentEventDataset& data, const CovariateSpec& spec,
                                         const Eigen::VectorXd& coeffs) {
  if (data.event_rows() == 0) fail(ErrorCode::NoEvents, "dataset has no events");
  if (coeffs.size() != static_cast<Eigen::Index>(spec.size()))
    fail(ErrorCode::InvalidArgument, "coefficient vector length does not match the covariate spec");
  const RiskIndex idx(data);
  return evaluate(idx, centered(design_matrix(data, spec)), coeffs);
}

PartialLikelihood log_partial_likelihood_reference(const RecurrentEventDataset& data,
                                                   const CovariateSpec& spec,
                                                   const Eigen::VectorXd& coeffs) {
  const Eigen::MatrixXd x = design_matrix(data, spec);
  const Eigen::Index p = x.cols();
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(x * coeffs) : Eigen::VectorXd::Zero(n);

  std::vector<double> times;
  for (const auto& r : data.rows)
    if (r.status == 1) times.push_back(r.stop);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.empty()) fail(ErrorCode::NoEvents, "dataset has no events");

  PartialLikelihood pl;
  pl.gradient = Eigen::VectorXd::Zero(p);
  pl.hessian = Eigen::MatrixXd::Zero(p, p);
  for (double t : times) {
    double shift = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = data.rows[static_cast<std::size_t>(i)];
      if (r.start < t && t <= r.stop) shift = std::max(shift, eta[i]);
    }
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    double d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = data.rows[static_cast<std::size_t>(i)];
      if (r.status == 1 && r.stop == t) {
        d += 1.0;
        pl.value += eta[i];
        pl.gradient += x.row(i).transpose();
      }
      if (!(r.start < t && t <= r.stop)) continue;
      const double w = std::exp(eta[i] - shift);
      s0 += w;
      s1 += w * x.row(i).transpose();
      s2 += w * x.row(i).transpose() * x.row(i);
    }
    pl.value -= d * (std::log(s0) + shift);
    const Eigen::VectorXd mean = s1 / s0;
    pl.gradient -= d * mean;
    pl.hessian -= d * (s2 / s0 - mean * mean.transpose());
  }
  return pl;
}

AGFit fit_ag(const RecurrentEventDataset& data, const CovariateSpec& spec, const AGOptions& options) {
  if (data.event_rows() == 0) fail(ErrorCode::NoEvents, "dataset has no events");
  const Eigen::MatrixXd x = centered(design_matrix(data, spec));
  const RiskIndex idx(data);
  const Eigen::Index p = x.cols();

  AGFit fit;
  fit.spec = spec;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  PartialLikelihood cur = evaluate(idx, x, b);

  if (p > 0) {
    // Under monotone likelihood the gradient vanishes as a coefficient runs off, so a collapse of
    // its information relative to the start is the divergence signal.
    const Eigen::VectorXd start_info = (-cur.hessian).diagonal();
    bool done = false;
    for (int iter = 0; iter < options.max_iter && !done; ++iter) {
      if (sup_norm(cur.gradient) <= options.tol) {
        done = true;
        break;
      }
      const Eigen::MatrixXd info = -cur.hessian;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
          ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
        fail(ErrorCode::SingularInformation,
             "information matrix is not invertible; a covariate is constant within risk sets or the "
             "likelihood is monotone (separation)");
      const Eigen::VectorXd step = ldlt.solve(cur.gradient);

      double scale = 1.0;
      bool accepted = false;
      PartialLikelihood next;
      Eigen::VectorXd b_next;
      for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
        b_next = b + scale * step;
        try {
          next = evaluate(idx, x, b_next);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NumericalOverflow) throw;
          continue;
        }
        if (std::isfinite(next.value) && next.value >= cur.value) {
          accepted = true;
          break;
        }
      }
      fit.iterations = iter + 1;
      if (!accepted) {
        // No ascent left at double precision: the current point is the optimum.
        done = true;
        break;
      }
      const double rel = std::abs(next.value - cur.value) / std::max(1.0, std::abs(cur.value));
      b = b_next;
      cur = std::move(next);
      if (sup_norm(cur.gradient) <= options.tol || rel <= kRelativeLoglikTol) done = true;
    }
    if (!done)
      fail(ErrorCode::NotConverged, "partial likelihood maximization did not converge in " +
                                        std::to_string(options.max_iter) + " iterations");

    const Eigen::MatrixXd info = -cur.hessian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    std::string diverging;
    for (Eigen::Index j = 0; j < p; ++j)
      if (!(info(j, j) > kInformationCollapse * start_info[j])) diverging += " " + spec.names()[static_cast<std::size_t>(j)];
    if (!(lo > 1e-10 * std::max(hi, 1e-300)) || !diverging.empty()) {
      fail(ErrorCode::SingularInformation,
           "information matrix is singular at the optimum (monotone likelihood)" +
               (diverging.empty() ? std::string() : "; diverging:" + diverging));
    }
    fit.covariance = info.inverse();
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  } else {
    fit.covariance = Eigen::MatrixXd(0, 0);
  }

  fit.converged = true;
  fit.loglik = cur.value;
  fit.gradient = cur.gradient;
  const auto q = static_cast<Eigen::Index>(spec.x_names.size());
  fit.beta = b.head(q);
  fit.theta = b.tail(p - q);
  spdlog::debug("AG fit: loglik {} after {} iterations", fit.loglik, fit.iterations);
  return fit;
}

Eigen::VectorXd linear_predictor(const RecurrentEventDataset& data, const AGFit& fit) {
  const Eigen::MatrixXd x = design_matrix(data, fit.spec);
  if (x.cols() == 0) return Eigen::VectorXd::Zero(x.rows());
  return x * fit.coefficients();
}

StepFunction breslow_baseline(const RecurrentEventDataset& data, const AGFit& fit) {
  StepFunction step;
  if (data.event_rows() == 0) return step;
  const RiskIndex idx(data);
  const Eigen::VectorXd w = linear_predictor(data, fit).array().exp();
  const Eigen::MatrixXd none(static_cast<Eigen::Index>(data.rows.size()), 0);

  std::vector<double> jumps(idx.event_times.size());
  sweep(idx, none, w, [&](std::size_t k, const RiskSums& s) {
    jumps[k] = static_cast<double>(idx.events[k].size()) / s.s0;
  });

  const std::size_t m = idx.event_times.size();
  step.jump_times.resize(m);
  step.cum_values.resize(m);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = m - 1 - i;  // ascending time
    acc += jumps[k];
    step.jump_times[i] = idx.event_times[k];
    step.cum_values[i] = acc;
  }
  return step;
}

GridCurve smooth_baseline(const StepFunction& step, const std::vector<double>& grid) {
  if (grid.size() < 2 || !is_strictly_increasing(grid))
    fail(ErrorCode::InvalidArgument, "smoothing grid must be strictly increasing with >= 2 points");
  if (grid.front() > 0.0 || (!step.jump_times.empty() && grid.back() < step.jump_times.back()))
    fail(ErrorCode::InvalidArgument, "smoothing grid must cover [0, last jump]");

  GridCurve out{grid, std::vector<double>(grid.size(), 0.0)};
  if (step.jump_times.empty()) return out;

  std::vector<double> kx{0.0};
  std::vector<double> ky{0.0};
  kx.insert(kx.end(), step.jump_times.begin(), step.jump_times.end());
  ky.insert(ky.end(), step.cum_values.begin(), step.cum_values.end());
  if (grid.back() > kx.back()) {
    kx.push_back(grid.back());
    ky.push_back(ky.back());
  }
  const MonotoneCubic spline(std::move(kx), std::move(ky));
  out.values = spline.evaluate(grid);
  for (std::size_t i = 1; i < out.values.size(); ++i) out.values[i] = std::max(out.values[i], out.values[i - 1]);
  return out;
}

std::vector<UnitResidual> martingale_residuals(const RecurrentEventDataset& data,
                                               const CompensatorSet& compensators) {
  const auto units = data.units();
  if (units.size() != compensators.unit_ids.size())
    fail(ErrorCode::UnitMismatch, "compensator set and dataset have different unit counts");
  std::vector<UnitResidual> out;
  out.reserve(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (units[u].unit_id != compensators.unit_ids[u] || units[u].cluster_id != compensators.cluster_ids[u])
      fail(ErrorCode::UnitMismatch, "unit '" + units[u].unit_id + "' has no matching compensator");
    double events = 0.0;
    for (std::size_t i = units[u].begin; i < units[u].end; ++i) events += data.rows[i].status;
    const double expected = compensators.curves(static_cast<Eigen::Index>(u), compensators.curves.cols() - 1);
    out.push_back({units[u].cluster_id, units[u].unit_id, events, expected, events - expected});
  }
  return out;
}

}  // namespace rhl
