#include "dhd/qfunc_recon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "dhd/text_io.hpp"

namespace dhd {

Histogram2D histogram2d(const PhasePoints& points, int bins, double range) {
  Histogram2D hist;
  hist.grid = PhaseGrid{bins, range};
  hist.grid.validate();
  const Eigen::Index n = points.points.rows();
  if (n == 0) throw Error(ErrorKind::empty_input, "cannot histogram an empty point set");

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(bins, bins);
  const double width = hist.grid.cell_width();
  auto index_of = [&](double v) -> int {
    if (!(v >= -range && v <= range)) return -1;
    const int idx = static_cast<int>(std::floor((v + range) / width));
    return std::min(idx, bins - 1);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ix = index_of(points.points(i, 0));
    const int iy = index_of(points.points(i, 1));
    if (ix < 0 || iy < 0) continue;
    counts(ix, iy) += 1.0;
    ++hist.n_in_range;
  }
  hist.n_total = n;
  hist.density = counts / (static_cast<double>(n) * hist.grid.cell_area());
  return hist;
}

void finalize_fit(QFit& fit) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(fit.cov_q);
  fit.lambda_min = solver.eigenvalues()(0);
  fit.lambda_max = solver.eigenvalues()(1);
  if (!(fit.lambda_min > 1e-12 * std::max(fit.lambda_max, 0.0)) || !(fit.lambda_max > 0.0)) {
    throw Error(ErrorKind::degenerate_cloud, "point cloud covariance is rank deficient");
  }
  if (fit.lambda_max - fit.lambda_min <= 1e-9 * fit.lambda_max) {
    fit.angle = 0.0;
  } else {
    const Eigen::Vector2d axis = solver.eigenvectors().col(0);
    double angle = std::atan2(axis(1), axis(0));
    if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
    if (angle > std::numbers::pi / 2) angle -= std::numbers::pi;
    fit.angle = angle;
  }
  constexpr double floor = 1.0 + 1e-9;
  fit.sq_db = fit.lambda_min > floor ? std::optional(fit_to_db(fit.lambda_min)) : std::nullopt;
  fit.asq_db = fit.lambda_max > floor ? std::optional(fit_to_db(fit.lambda_max)) : std::nullopt;
}

QFit fit_gaussian_moments(const PhasePoints& points) {
  const Eigen::Index n = points.points.rows();
  if (n < 100) {
    throw Error(ErrorKind::empty_input,
                "moment fit needs at least 100 points, got " + std::to_string(n));
  }
  QFit fit;
  fit.center = points.points.colwise().mean().transpose();
  const Eigen::MatrixX2d centered = points.points.rowwise() - fit.center.transpose();
  fit.cov_q = centered.transpose() * centered / static_cast<double>(n - 1);
  fit.n_used = n;
  finalize_fit(fit);
  return fit;
}

namespace {

using Params = Eigen::Matrix<double, 5, 1>;

Eigen::Matrix2d params_cov(const Params& p) {
  Eigen::Matrix2d lower;
  lower << std::exp(p(2)), 0.0, p(3), std::exp(p(4));
  return lower * lower.transpose();
}

Eigen::VectorXd residuals(const Histogram2D& hist, const Params& p) {
  const Eigen::Matrix2d cov = params_cov(p);
  const Eigen::Matrix2d inv = cov.inverse();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
  const int bins = hist.grid.bins;
  Eigen::VectorXd res(bins * bins);
  for (int ix = 0; ix < bins; ++ix) {
    for (int iy = 0; iy < bins; ++iy) {
      const Eigen::Vector2d d(hist.grid.center(ix) - p(0), hist.grid.center(iy) - p(1));
      res(ix * bins + iy) = norm * std::exp(-0.5 * d.dot(inv * d)) - hist.density(ix, iy);
    }
  }
  return res;
}

}  // namespace

QFit refine_fit_least_squares(const Histogram2D& hist, const QFit& seed) {
  Eigen::LLT<Eigen::Matrix2d> llt(seed.cov_q);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::degenerate_cloud, "seed covariance is not positive definite");
  }
  const Eigen::Matrix2d lower = llt.matrixL();
  Params p;
  p << seed.center(0), seed.center(1), std::log(lower(0, 0)), lower(1, 0), std::log(lower(1, 1));

  Eigen::VectorXd res = residuals(hist, p);
  double cost = res.squaredNorm();
  double damping = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix<double, Eigen::Dynamic, 5> jac(res.size(), 5);
    for (int k = 0; k < 5; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
      Params up = p, down = p;
      up(k) += h;
      down(k) -= h;
      jac.col(k) = (residuals(hist, up) - residuals(hist, down)) / (2.0 * h);
    }
    const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
    const Params grad = jac.transpose() * res;
    Eigen::Matrix<double, 5, 5> lhs = jtj;
    lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
    const Params step = -lhs.ldlt().solve(grad);
    const Params trial = p + step;
    const Eigen::VectorXd trial_res = residuals(hist, trial);
    const double trial_cost = trial_res.squaredNorm();
    if (trial_cost < cost) {
      p = trial;
      res = trial_res;
      cost = trial_cost;
      damping = std::max(damping / 3.0, 1e-12);
      if (step.norm() < 1e-8 * (p.norm() + 1e-8)) break;
    } else {
      damping *= 2.0;
      if (damping > 1e12) break;
    }
  }

  QFit fit;
  fit.center = p.head<2>();
  fit.cov_q = params_cov(p);
  fit.n_used = hist.n_in_range;
  finalize_fit(fit);
  return fit;
}

HistogramMoments histogram_moments(const Histogram2D& hist) {
  const int bins = hist.grid.bins;
  const double mass = hist.density.sum();
  if (!(mass > 0.0)) throw Error(ErrorKind::empty_input, "histogram holds no in-range mass");
  HistogramMoments m{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
  for (int ix = 0; ix < bins; ++ix) {
    for (int iy = 0; iy < bins; ++iy) {
      const double w = hist.density(ix, iy) / mass;
      m.mean += w * Eigen::Vector2d(hist.grid.center(ix), hist.grid.center(iy));
    }
  }
  for (int ix = 0; ix < bins; ++ix) {
    for (int iy = 0; iy < bins; ++iy) {
      const double w = hist.density(ix, iy) / mass;
      const Eigen::Vector2d d = Eigen::Vector2d(hist.grid.center(ix), hist.grid.center(iy)) - m.mean;
      m.cov += w * d * d.transpose();
    }
  }
  return m;
}

double fit_to_db(double lambda) {
  if (!(lambda > 1.0 + 1e-9)) {
    throw Error(ErrorKind::below_vacuum,
                "fitted Q variance " + std::to_string(lambda) + " is not above the vacuum unit");
  }
  return 10.0 * std::log10(lambda - 1.0);
}

double loss_corrected_db(double lambda, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::domain, "eta must lie in (0, 1]");
  const double corrected = (lambda - 1.0 - (1.0 - eta)) / eta;
  if (!(corrected > 0.0)) {
    throw Error(ErrorKind::out_of_model, "loss inversion gives a non-positive variance");
  }
  return 10.0 * std::log10(corrected);
}

FitComparison compare_fit(const QFit& fit, const FitPrediction& predicted, double tolerance_db) {
  double lo = std::min(predicted.s_s, predicted.s_as);
  double hi = std::max(predicted.s_s, predicted.s_as);
  if (!(lo > 0.0)) throw Error(ErrorKind::out_of_model, "predicted variance is not positive");

  FitComparison c;
  c.fit_sq_db = fit_to_db(fit.lambda_min);
  c.fit_asq_db = fit_to_db(fit.lambda_max);
  c.pred_sq_db = 10.0 * std::log10(lo);
  c.pred_asq_db = 10.0 * std::log10(hi);
  c.dev_sq_db = c.fit_sq_db - c.pred_sq_db;
  c.dev_asq_db = c.fit_asq_db - c.pred_asq_db;
  const double rel = std::sqrt(2.0 / static_cast<double>(fit.n_used));
  const double db_per_rel = 10.0 / std::numbers::ln10;
  c.err_sq_db = db_per_rel * fit.lambda_min * rel / (fit.lambda_min - 1.0);
  c.err_asq_db = db_per_rel * fit.lambda_max * rel / (fit.lambda_max - 1.0);
  c.tolerance_db = tolerance_db;
  c.passed = std::abs(c.dev_sq_db) <= tolerance_db && std::abs(c.dev_asq_db) <= tolerance_db;
  return c;
}

void write_histogram(std::ostream& out, const Histogram2D& hist) {
  const int bins = hist.grid.bins;
  out << "# bins_x=" << bins << ",bins_y=" << bins << ",range=" << format_number(hist.grid.range)
      << ",n_total=" << hist.n_total << ",n_in_range=" << hist.n_in_range << '\n';
  out << "x\\y";
  for (int iy = 0; iy < bins; ++iy) out << ',' << format_number(hist.grid.center(iy));
  out << '\n';
  for (int ix = 0; ix < bins; ++ix) {
    out << format_number(hist.grid.center(ix));
    for (int iy = 0; iy < bins; ++iy) out << ',' << format_number(hist.density(ix, iy));
    out << '\n';
  }
}

}  // namespace dhd
