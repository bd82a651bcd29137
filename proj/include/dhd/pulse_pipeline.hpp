#pragma once

// Pulsed acquisition chain: one quadrature value per segment is spread over a
// temporal mode psi(t_j), buried in white electronic noise, and recovered by
// projecting back onto the mode. The mode itself can be recovered blindly by
// PCA of the trace covariance.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace dhd {

class TemporalMode {
 public:
  /// Rescales `psi` so that sum psi_j^2 dt = 1 and flips sign so the peak is positive.
  TemporalMode(Eigen::VectorXd psi, double dt_ns);

  double dt_ns() const { return dt_ns_; }
  Eigen::Index size() const { return psi_.size(); }
  const Eigen::VectorXd& psi() const { return psi_; }

 private:
  Eigen::VectorXd psi_;
  double dt_ns_;
};

/// Double-sided exponential centred on the segment midpoint.
TemporalMode make_temporal_mode(double fwhm_ns, double dt_ns, Eigen::Index n);

struct TraceMeta {
  std::optional<double> clearance_db;  ///< empty means noiseless
  std::uint64_t seed = 0;
  std::optional<double> duty_cycle;
};

struct TraceSet {
  Eigen::MatrixXd segments;  ///< M x n, one segment per row
  double dt_ns = 10.0;
  TraceMeta meta;
};

/// segment_i(t_j) = values_i psi(t_j) + noise; the noise variance per sample
/// is chosen so that its projection onto psi has variance 10^(-clearance/10).
/// An empty `clearance_db` synthesises noiseless traces.
TraceSet synthesize_traces(const Eigen::VectorXd& values, const TemporalMode& mode,
                           std::optional<double> clearance_db, std::uint64_t seed);

/// sum_j psi_j segment_i(t_j) dt for each segment.
Eigen::VectorXd project_traces(const TraceSet& traces, const TemporalMode& mode);

/// Leading eigenvector of the mean-removed sample covariance across time samples.
TemporalMode extract_mode_pca(const TraceSet& traces);

/// |sum_j a_j b_j dt|.
double mode_overlap(const TemporalMode& a, const TemporalMode& b);

void write_traces(std::ostream& out, const TraceSet& traces);
TraceSet read_traces(std::istream& in);

}  // namespace dhd
