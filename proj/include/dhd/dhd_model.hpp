#pragma once

// Unbalanced double homodyne detection: a signal enters one port of a
// beamsplitter of reflectivity R with vacuum in the other; arm 1 reads q and
// arm 2 reads p.

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "dhd/gaussian_core.hpp"
#include "dhd/phase_grid.hpp"

namespace dhd {

/// Beamsplitter coefficients and the effective squeezing they induce.
struct UnbalanceSettings {
  double R;
  double r;
  double t;
  double xi;    ///< ln(r / t)
  double s_db;  ///< 10 log10(t^2 / r^2)
};

UnbalanceSettings unbalance_settings(double R);

struct DetectionSettings {
  double R = 0.5;
  double theta = 0.0;
  double eta = 1.0;
  std::optional<double> clearance_db;
};

/// Joint Gaussian law of the two homodyne outcomes (q1, p2).
struct DhdJoint {
  double mean_q1 = 0.0;
  double mean_p2 = 0.0;
  double var_q1 = 1.0;
  double var_p2 = 1.0;
  double cov_q1p2 = 0.0;
  DetectionSettings settings;

  Eigen::Vector2d mean() const { return {mean_q1, mean_p2}; }
  Eigen::Matrix2d cov() const {
    Eigen::Matrix2d c;
    c << var_q1, cov_q1p2, cov_q1p2, var_p2;
    return c;
  }
};

/// Electronic noise variance in SNU for a given shot-to-electronic clearance.
inline double electronic_noise_variance(double clearance_db) {
  return std::pow(10.0, -clearance_db / 10.0);
}

DhdJoint dhd_joint(const GaussianState& signal, const DetectionSettings& settings);

struct SampleMeta {
  double R = 0.5;
  double theta = 0.0;
  double eta = 1.0;
  std::optional<double> clearance_db;
  std::uint64_t seed = 0;
  std::int64_t count = 0;
};

struct SampleBatch {
  Eigen::MatrixX2d pairs;  ///< columns q1, p2
  SampleMeta meta;
};

/// Draws samples [first, first + count) of the stream identified by `seed`.
Eigen::MatrixX2d sample_dhd_range(const DhdJoint& joint, std::int64_t first, std::int64_t count,
                                  std::uint64_t seed);

/// n i.i.d. draws; `workers` > 1 splits the index range across threads and
/// yields the same batch as the sequential path.
SampleBatch sample_dhd(const DhdJoint& joint, std::int64_t n, std::uint64_t seed, int workers = 1);

enum class Compensation { unbiased, povm };

struct PhasePoints {
  Eigen::MatrixX2d points;  ///< columns x, y in plotted units
  Compensation compensation = Compensation::unbiased;
};

/// Rescales raw outcomes into phase-space points.
///   unbiased: (q1 / r, -p2 / t), the displacement-unbiased estimator;
///   povm:     (q1 / t, -p2 / r), whose law is exactly the Husimi function of
///             povm_equivalent_state(signal, R).
PhasePoints compensate(const SampleBatch& batch, Compensation mode);

/// The state whose Husimi function the unbalanced detector samples:
/// the signal squeezed by -xi.
GaussianState povm_equivalent_state(const GaussianState& signal, double R);

enum class PredictionMethod { paper, exact };

/// Wigner-equivalent variances (fitted Q variance minus one) along x and y.
struct FitPrediction {
  double s_s;
  double s_as;
};

FitPrediction predict_fit_params(double s_s, double s_as, double R, PredictionMethod method);

/// Reflectivity at which the measured Q function becomes rotationally symmetric.
double unsqueezing_reflectivity(double s_s, double s_as, PredictionMethod method);

/// Half the dB distance between antisqueezing and squeezing.
double squeezing_semidifference_db(double s_s, double s_as);

/// Theory Q density at a plotted point, normalised over the plane. Per-axis
/// variances are 1 + s' with s' from predict_fit_params.
double theory_q_density(double s_s, double s_as, double R, double x, double y,
                        PredictionMethod method = PredictionMethod::exact);

/// theory_q_density at every cell centre of `grid`, indexed (ix, iy).
Eigen::MatrixXd theory_q_grid(double s_s, double s_as, double R, const PhaseGrid& grid,
                              PredictionMethod method = PredictionMethod::exact);

/// Outcome of one moment-equivalence test between povm-compensated samples
/// and the Husimi moments of the povm-equivalent state.
struct PovmCheck {
  Eigen::Vector2d sample_mean;
  Eigen::Matrix2d sample_cov;
  Eigen::Vector2d expected_mean;
  Eigen::Matrix2d expected_cov;
  /// Deviations in standard errors: mean x, mean y, var x, var y, cov xy.
  Eigen::Matrix<double, 5, 1> z_scores;
  double max_abs_z = 0.0;
  bool passed = false;
};

PovmCheck check_povm_equivalence(const GaussianState& signal, double R, std::int64_t n,
                                 std::uint64_t seed, double z_threshold = 4.0, int workers = 1);

/// Random physical single-mode state (squeezing, thermal excess, orientation,
/// displacement) drawn deterministically from (seed, index).
GaussianState random_gaussian_state(std::uint64_t seed, std::uint64_t index);

}  // namespace dhd
