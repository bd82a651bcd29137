#pragma once

// Q-function reconstruction from compensated phase-space points: 2D histogram,
// Gaussian fit by moments (with optional least-squares refinement on the
// histogram), and conversion of fitted variances to dB.

#include <cstdint>
#include <iosfwd>
#include <optional>

#include <Eigen/Dense>

#include "dhd/dhd_model.hpp"
#include "dhd/phase_grid.hpp"

namespace dhd {

struct Histogram2D {
  PhaseGrid grid;
  Eigen::MatrixXd density;  ///< (ix, iy), normalised by n_total * cell_area
  std::int64_t n_total = 0;
  std::int64_t n_in_range = 0;

  double integral() const { return density.sum() * grid.cell_area(); }
};

/// Left-closed bins, the last bin on each axis also closed on the right.
/// Points outside the window count towards n_total only.
Histogram2D histogram2d(const PhasePoints& points, int bins = 100, double range = 3.0);

struct QFit {
  Eigen::Vector2d center;
  Eigen::Matrix2d cov_q;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double angle = 0.0;  ///< orientation of the lambda_min axis, in (-pi/2, pi/2]
  std::optional<double> sq_db;
  std::optional<double> asq_db;
  std::int64_t n_used = 0;
};

/// Fills the principal quantities of `fit` from its centre and covariance.
void finalize_fit(QFit& fit);

QFit fit_gaussian_moments(const PhasePoints& points);

/// Levenberg-Marquardt fit of a normalised Gaussian to the histogram density,
/// started from `seed`. Stops when the relative step drops below 1e-8 or after
/// 200 iterations.
QFit refine_fit_least_squares(const Histogram2D& hist, const QFit& seed);

/// Midpoint-rule mean and covariance of the in-range histogram mass.
struct HistogramMoments {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};
HistogramMoments histogram_moments(const Histogram2D& hist);

/// 10 log10(lambda - 1): a fitted Q variance with its vacuum unit removed.
double fit_to_db(double lambda);

/// Inverts a pure loss of transmission eta on the Wigner-equivalent variance.
double loss_corrected_db(double lambda, double eta);

struct FitComparison {
  double fit_sq_db = 0.0;
  double fit_asq_db = 0.0;
  double pred_sq_db = 0.0;
  double pred_asq_db = 0.0;
  double dev_sq_db = 0.0;
  double dev_asq_db = 0.0;
  double err_sq_db = 0.0;  ///< one standard error from sqrt(2/n) on the variance
  double err_asq_db = 0.0;
  double tolerance_db = 0.0;
  bool passed = false;
};

/// Compares the principal fitted variances with a prediction; the predicted
/// pair is ordered so its smaller member faces lambda_min.
FitComparison compare_fit(const QFit& fit, const FitPrediction& predicted, double tolerance_db);

void write_histogram(std::ostream& out, const Histogram2D& hist);

}  // namespace dhd
