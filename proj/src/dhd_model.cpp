#include "dhd/dhd_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "dhd/counter_rng.hpp"

namespace dhd {

UnbalanceSettings unbalance_settings(double R) {
  if (!(R >= 0.0 && R <= 1.0)) {
    throw Error(ErrorKind::domain, "reflectivity R must lie in [0, 1], got " + std::to_string(R));
  }
  if (R == 0.0 || R == 1.0) {
    throw Error(ErrorKind::degenerate_unbalance,
                "R = " + std::to_string(R) + " reduces the detector to single homodyne detection");
  }
  UnbalanceSettings s;
  s.R = R;
  s.r = std::sqrt(R);
  s.t = std::sqrt(1.0 - R);
  s.xi = std::log(s.r / s.t);
  s.s_db = 10.0 * std::log10((1.0 - R) / R);
  return s;
}

DhdJoint dhd_joint(const GaussianState& signal, const DetectionSettings& settings) {
  if (signal.n_modes() != 1) {
    throw Error(ErrorKind::unsupported, "double homodyne detection takes a single-mode signal");
  }
  const UnbalanceSettings u = unbalance_settings(settings.R);
  GaussianState v = apply_loss(apply_rotation(signal, settings.theta, 0), settings.eta, 0);
  // Mode 0 is the vacuum port (H), mode 1 carries the signal (V).
  const GaussianState out = apply_beamsplitter(tensor(GaussianState::vacuum(1), v), 0, 1, u.r);

  DhdJoint joint;
  joint.mean_q1 = out.mean()(0);
  joint.mean_p2 = out.mean()(3);
  joint.var_q1 = out.cov()(0, 0);
  joint.var_p2 = out.cov()(3, 3);
  joint.cov_q1p2 = out.cov()(0, 3);
  if (settings.clearance_db) {
    const double noise = electronic_noise_variance(*settings.clearance_db);
    joint.var_q1 += noise;
    joint.var_p2 += noise;
  }
  joint.settings = settings;
  return joint;
}

Eigen::MatrixX2d sample_dhd_range(const DhdJoint& joint, std::int64_t first, std::int64_t count,
                                  std::uint64_t seed) {
  const double l11 = std::sqrt(joint.var_q1);
  const double l21 = joint.cov_q1p2 / l11;
  const double l22 = std::sqrt(std::max(0.0, joint.var_p2 - l21 * l21));
  const CounterStream stream(seed);
  Eigen::MatrixX2d out(count, 2);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto [n1, n2] = stream.normal_pair(static_cast<std::uint64_t>(first + i));
    out(i, 0) = joint.mean_q1 + l11 * n1;
    out(i, 1) = joint.mean_p2 + l21 * n1 + l22 * n2;
  }
  return out;
}

SampleBatch sample_dhd(const DhdJoint& joint, std::int64_t n, std::uint64_t seed, int workers) {
  if (n < 1) {
    throw Error(ErrorKind::domain, "sample count must be at least 1");
  }
  SampleBatch batch;
  batch.meta = {joint.settings.R, joint.settings.theta, joint.settings.eta,
                joint.settings.clearance_db, seed, n};
  workers = std::clamp<int>(workers, 1, static_cast<int>(std::min<std::int64_t>(n, 256)));
  if (workers == 1) {
    batch.pairs = sample_dhd_range(joint, 0, n, seed);
    return batch;
  }
  batch.pairs.resize(n, 2);
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t first = w * chunk;
    const std::int64_t count = std::min(chunk, n - first);
    if (count <= 0) break;
    pool.emplace_back([&batch, &joint, first, count, seed] {
      batch.pairs.middleRows(first, count) = sample_dhd_range(joint, first, count, seed);
    });
  }
  for (auto& th : pool) th.join();
  return batch;
}

PhasePoints compensate(const SampleBatch& batch, Compensation mode) {
  const UnbalanceSettings u = unbalance_settings(batch.meta.R);
  const double sx = mode == Compensation::unbiased ? 1.0 / u.r : 1.0 / u.t;
  const double sy = mode == Compensation::unbiased ? -1.0 / u.t : -1.0 / u.r;
  PhasePoints pts;
  pts.compensation = mode;
  pts.points.resize(batch.pairs.rows(), 2);
  pts.points.col(0) = batch.pairs.col(0) * sx;
  pts.points.col(1) = batch.pairs.col(1) * sy;
  return pts;
}

GaussianState povm_equivalent_state(const GaussianState& signal, double R) {
  if (signal.n_modes() != 1) {
    throw Error(ErrorKind::unsupported, "povm_equivalent_state takes a single-mode signal");
  }
  return apply_squeeze(signal, -unbalance_settings(R).xi, 0, 0.0);
}

namespace {

void check_variances(double s_s, double s_as) {
  if (!(s_s > 0.0) || !(s_as > 0.0)) {
    throw Error(ErrorKind::domain, "variances must be positive");
  }
  if (s_s * s_as < 1.0 - GaussianState::kPhysicalityTolerance) {
    throw Error(ErrorKind::physicality, "s_s * s_as < 1 violates the uncertainty principle");
  }
}

}  // namespace

FitPrediction predict_fit_params(double s_s, double s_as, double R, PredictionMethod method) {
  check_variances(s_s, s_as);
  const UnbalanceSettings u = unbalance_settings(R);
  const double r2 = u.r * u.r;
  const double t2 = u.t * u.t;
  if (method == PredictionMethod::exact) {
    return {s_s + t2 / r2 - 1.0, s_as + r2 / t2 - 1.0};
  }
  const double sq = 2.0 * r2 * (1.0 + s_s) - 1.0;
  const double denom = 2.0 * t2 * (1.0 + 1.0 / s_as) - 1.0;
  if (!(sq > 0.0) || !(denom > 0.0)) {
    throw Error(ErrorKind::out_of_model,
                "closed-form fit relation leaves its domain at R = " + std::to_string(R));
  }
  return {sq, 1.0 / denom};
}

double squeezing_semidifference_db(double s_s, double s_as) {
  return (10.0 * std::log10(s_as) - 10.0 * std::log10(s_s)) / 2.0;
}

double unsqueezing_reflectivity(double s_s, double s_as, PredictionMethod method) {
  check_variances(s_s, s_as);
  if (!(s_s < 1.0 && 1.0 < s_as)) {
    throw Error(ErrorKind::no_solution, "state is not squeezed; nothing to unsqueeze");
  }
  if (method == PredictionMethod::paper) {
    // Unbalance of |10 log10(t^2/r^2)| equal to the semidifference, with r < t.
    const double ratio = std::pow(10.0, squeezing_semidifference_db(s_s, s_as) / 10.0);
    return 1.0 / (1.0 + ratio);
  }
  auto gap = [&](double R) {
    const double u = R / (1.0 - R);
    return (s_s + 1.0 / u) - (s_as + u);
  };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  if (!(gap(lo) > 0.0 && gap(hi) < 0.0)) {
    throw Error(ErrorKind::no_solution, "no sign change of the variance gap on (0, 1)");
  }
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double theory_q_density(double s_s, double s_as, double R, double x, double y,
                        PredictionMethod method) {
  const FitPrediction p = predict_fit_params(s_s, s_as, R, method);
  const double vx = 1.0 + p.s_s;
  const double vy = 1.0 + p.s_as;
  return std::exp(-0.5 * (x * x / vx + y * y / vy)) / (2.0 * std::numbers::pi * std::sqrt(vx * vy));
}

Eigen::MatrixXd theory_q_grid(double s_s, double s_as, double R, const PhaseGrid& grid,
                              PredictionMethod method) {
  grid.validate();
  Eigen::MatrixXd out(grid.bins, grid.bins);
  for (int ix = 0; ix < grid.bins; ++ix) {
    for (int iy = 0; iy < grid.bins; ++iy) {
      out(ix, iy) = theory_q_density(s_s, s_as, R, grid.center(ix), grid.center(iy), method);
    }
  }
  return out;
}

PovmCheck check_povm_equivalence(const GaussianState& signal, double R, std::int64_t n,
                                 std::uint64_t seed, double z_threshold, int workers) {
  DetectionSettings settings;
  settings.R = R;
  const SampleBatch batch = sample_dhd(dhd_joint(signal, settings), n, seed, workers);
  const PhasePoints pts = compensate(batch, Compensation::povm);

  PovmCheck check;
  check.sample_mean = pts.points.colwise().mean().transpose();
  const Eigen::MatrixX2d centered = pts.points.rowwise() - check.sample_mean.transpose();
  check.sample_cov = centered.transpose() * centered / static_cast<double>(n - 1);

  const auto expected = husimi_moments(povm_equivalent_state(signal, R));
  check.expected_mean = expected.mean;
  check.expected_cov = expected.cov;

  const double nd = static_cast<double>(n);
  const double sxx = expected.cov(0, 0);
  const double syy = expected.cov(1, 1);
  const double sxy = expected.cov(0, 1);
  const Eigen::Matrix<double, 5, 1> se{std::sqrt(sxx / nd), std::sqrt(syy / nd),
                                       std::sqrt(2.0 / nd) * sxx, std::sqrt(2.0 / nd) * syy,
                                       std::sqrt((sxx * syy + sxy * sxy) / nd)};
  const Eigen::Matrix<double, 5, 1> dev{
      check.sample_mean(0) - expected.mean(0), check.sample_mean(1) - expected.mean(1),
      check.sample_cov(0, 0) - sxx, check.sample_cov(1, 1) - syy, check.sample_cov(0, 1) - sxy};
  check.z_scores = dev.cwiseQuotient(se);
  check.max_abs_z = check.z_scores.cwiseAbs().maxCoeff();
  check.passed = check.max_abs_z < z_threshold;
  return check;
}

GaussianState random_gaussian_state(std::uint64_t seed, std::uint64_t index) {
  const CounterStream stream(seed, 0x5157A7E0ULL + index);
  const double xi = -0.8 + 1.6 * stream.uniform(0);
  const double thermal = 1.0 + stream.uniform(1);
  const double angle = std::numbers::pi * stream.uniform(2);
  const double dq = -1.5 + 3.0 * stream.uniform(3);
  const double dp = -1.5 + 3.0 * stream.uniform(4);
  const Eigen::Matrix2d s = squeeze_matrix(xi, angle);
  return GaussianState(Eigen::Vector2d(dq, dp), thermal * s * s.transpose());
}

}  // namespace dhd
