#include "dhd/pulse_pipeline.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "dhd/counter_rng.hpp"
#include "dhd/error.hpp"
#include "dhd/text_io.hpp"

namespace dhd {

TemporalMode::TemporalMode(Eigen::VectorXd psi, double dt_ns) : psi_(std::move(psi)), dt_ns_(dt_ns) {
  if (!(dt_ns_ > 0.0)) throw Error(ErrorKind::domain, "sampling interval must be positive");
  if (psi_.size() == 0) throw Error(ErrorKind::shape, "temporal mode needs at least one sample");
  const double norm2 = psi_.squaredNorm() * dt_ns_;
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw Error(ErrorKind::domain, "temporal mode has zero or non-finite norm");
  }
  psi_ /= std::sqrt(norm2);
  Eigen::Index peak = 0;
  psi_.cwiseAbs().maxCoeff(&peak);
  if (psi_(peak) < 0.0) psi_ = -psi_;
}

TemporalMode make_temporal_mode(double fwhm_ns, double dt_ns, Eigen::Index n) {
  if (!(fwhm_ns > 0.0) || !(dt_ns > 0.0) || n < 1) {
    throw Error(ErrorKind::domain, "fwhm, dt and n must be positive");
  }
  if (!(static_cast<double>(n) * dt_ns > 4.0 * fwhm_ns)) {
    throw Error(ErrorKind::truncation, "segment of " + std::to_string(n) + " x " +
                                           std::to_string(dt_ns) + " ns truncates a " +
                                           std::to_string(fwhm_ns) + " ns mode");
  }
  const double tau = fwhm_ns / (2.0 * std::log(2.0));
  const double center = 0.5 * static_cast<double>(n - 1) * dt_ns;
  Eigen::VectorXd psi(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    psi(j) = std::exp(-std::abs(static_cast<double>(j) * dt_ns - center) / tau);
  }
  return TemporalMode(std::move(psi), dt_ns);
}

TraceSet synthesize_traces(const Eigen::VectorXd& values, const TemporalMode& mode,
                           std::optional<double> clearance_db, std::uint64_t seed) {
  if (!values.allFinite()) throw Error(ErrorKind::domain, "trace values must be finite");
  if (clearance_db && !(*clearance_db >= 0.0)) {
    throw Error(ErrorKind::domain, "clearance must be non-negative dB");
  }
  const Eigen::Index m = values.size();
  const Eigen::Index n = mode.size();
  TraceSet traces;
  traces.dt_ns = mode.dt_ns();
  traces.meta.clearance_db = clearance_db;
  traces.meta.seed = seed;
  traces.segments = values * mode.psi().transpose();
  if (clearance_db && std::isfinite(*clearance_db)) {
    // Projected noise variance is sigma^2 dt for a unit-normalised mode.
    const double sigma = std::sqrt(std::pow(10.0, -*clearance_db / 10.0) / mode.dt_ns());
    const CounterStream stream(seed, 1);
    const Eigen::Index half = (n + 1) / 2;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; j += 2) {
        const auto [a, b] = stream.normal_pair(static_cast<std::uint64_t>(i * half + j / 2));
        traces.segments(i, j) += sigma * a;
        if (j + 1 < n) traces.segments(i, j + 1) += sigma * b;
      }
    }
  } else {
    traces.meta.clearance_db.reset();
  }
  return traces;
}

Eigen::VectorXd project_traces(const TraceSet& traces, const TemporalMode& mode) {
  if (traces.segments.cols() != mode.size()) {
    throw Error(ErrorKind::shape, "segment length " + std::to_string(traces.segments.cols()) +
                                      " does not match mode length " + std::to_string(mode.size()));
  }
  return traces.segments * mode.psi() * mode.dt_ns();
}

TemporalMode extract_mode_pca(const TraceSet& traces) {
  const Eigen::Index m = traces.segments.rows();
  const Eigen::Index n = traces.segments.cols();
  if (m < 2 || n < 1) throw Error(ErrorKind::shape, "PCA needs at least two segments");
  if (m < n) {
    std::clog << "warning: " << m << " segments for " << n
              << " time samples; the mode estimate is rank limited\n";
  }
  const Eigen::MatrixXd centered = traces.segments.rowwise() - traces.segments.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const auto& evals = solver.eigenvalues();
  const double leading = evals(n - 1);
  const double gap = n > 1 ? leading - evals(n - 2) : leading;
  if (!(gap > 1e-9 * std::max(leading, 0.0))) {
    throw Error(ErrorKind::ambiguous_mode, "leading eigenvalue of the trace covariance is degenerate");
  }
  return TemporalMode(solver.eigenvectors().col(n - 1), traces.dt_ns);
}

double mode_overlap(const TemporalMode& a, const TemporalMode& b) {
  if (a.size() != b.size() || a.dt_ns() != b.dt_ns()) {
    throw Error(ErrorKind::shape, "modes differ in length or sampling interval");
  }
  return std::abs(a.psi().dot(b.psi()) * a.dt_ns());
}

void write_traces(std::ostream& out, const TraceSet& traces) {
  out << "# dt_ns=" << format_number(traces.dt_ns) << ",n=" << traces.segments.cols()
      << ",clearance_db="
      << (traces.meta.clearance_db ? format_number(*traces.meta.clearance_db) : "none")
      << ",seed=" << traces.meta.seed;
  if (traces.meta.duty_cycle) out << ",duty_cycle=" << format_number(*traces.meta.duty_cycle);
  out << '\n';
  for (Eigen::Index i = 0; i < traces.segments.rows(); ++i) {
    for (Eigen::Index j = 0; j < traces.segments.cols(); ++j) {
      if (j) out << ',';
      out << format_number(traces.segments(i, j));
    }
    out << '\n';
  }
}

TraceSet read_traces(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(ErrorKind::io, "trace file must start with a '# key=value,...' header");
  }
  TraceSet traces;
  Eigen::Index n = -1;
  for (auto field : split(std::string_view(line).substr(2), ',')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::io, "malformed trace header field");
    const auto key = trim(field.substr(0, eq));
    const auto raw = trim(field.substr(eq + 1));
    if (key == "clearance_db" && raw == "none") continue;
    const auto value = parse_number(raw);
    if (!value) throw Error(ErrorKind::io, "bad value in trace header: " + std::string(field));
    if (key == "dt_ns") traces.dt_ns = *value;
    else if (key == "n") n = static_cast<Eigen::Index>(*value);
    else if (key == "clearance_db") traces.meta.clearance_db = *value;
    else if (key == "seed") traces.meta.seed = std::stoull(std::string(raw));
    else if (key == "duty_cycle") traces.meta.duty_cycle = *value;
    else throw Error(ErrorKind::io, "unknown trace header key: " + std::string(key));
  }
  if (n < 1) throw Error(ErrorKind::io, "trace header lacks a positive n");
  std::vector<double> data;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != n) {
      throw Error(ErrorKind::shape, "trace row " + std::to_string(rows + 1) + " has " +
                                        std::to_string(cells.size()) + " samples, expected " +
                                        std::to_string(n));
    }
    for (auto cell : cells) {
      const auto value = parse_number(cell);
      if (!value) throw Error(ErrorKind::io, "non-numeric trace sample in row " + std::to_string(rows + 1));
      data.push_back(*value);
    }
    ++rows;
  }
  traces.segments = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data.data(), rows, n);
  return traces;
}

}  // namespace dhd
