#pragma once

// Gaussian states of n optical modes described by first and second moments.
//
// Conventions (shot noise units):
//   * quadratures are interleaved (q0, p0, q1, p1, ...);
//   * the vacuum quadrature variance is 1, so the vacuum covariance is I;
//   * a coherent amplitude alpha maps to the mean (sqrt2 Re alpha, sqrt2 Im alpha);
//   * a positive squeezing parameter squeezes q.

#include <cmath>
#include <complex>
#include <initializer_list>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dhd/error.hpp"

namespace dhd {

template <typename Scalar>
class BasicGaussianState {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static constexpr double kSymmetryTolerance = 1e-12;
  static constexpr double kPhysicalityTolerance = 1e-9;

  /// Validates symmetry, positive definiteness and the uncertainty principle.
  BasicGaussianState(Vector mean, Matrix cov);

  static BasicGaussianState vacuum(Eigen::Index n_modes) {
    return BasicGaussianState(Vector::Zero(2 * n_modes), Matrix::Identity(2 * n_modes, 2 * n_modes));
  }

  Eigen::Index n_modes() const { return mean_.size() / 2; }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  auto mode_mean(Eigen::Index mode) const { return mean_.template segment<2>(2 * mode); }
  auto mode_cov(Eigen::Index mode) const { return cov_.template block<2, 2>(2 * mode, 2 * mode); }

 private:
  Vector mean_;
  Matrix cov_;
};

using GaussianState = BasicGaussianState<double>;

/// Standard symplectic form, block-diagonal with [[0, 1], [-1, 0]] per mode.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> symplectic_form(Eigen::Index n_modes) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> omega =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = Scalar(1);
    omega(2 * k + 1, 2 * k) = Scalar(-1);
  }
  return omega;
}

/// Symplectic eigenvalues of a positive definite covariance, ascending.
///
/// With cov = L L^T, the Hermitian matrix i L^T Omega L has spectrum
/// {+nu_k, -nu_k}; the positive half is returned.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> symplectic_eigenvalues(
    const Eigen::MatrixBase<Derived>& cov) {
  using Scalar = typename Derived::Scalar;
  using Complex = std::complex<Scalar>;
  using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index dim = cov.rows();
  Eigen::LLT<RealMatrix> llt(cov.eval());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::physicality, "covariance is not positive definite");
  }
  const RealMatrix lower = llt.matrixL();
  const RealMatrix antisym = lower.transpose() * symplectic_form<Scalar>(dim / 2) * lower;
  const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> hermitian =
      Complex(0, 1) * antisym.template cast<Complex>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>> solver(
      hermitian, Eigen::EigenvaluesOnly);
  // Eigenvalues come sorted ascending; the upper half is the positive branch.
  return solver.eigenvalues().tail(dim / 2);
}

template <typename Scalar>
BasicGaussianState<Scalar>::BasicGaussianState(Vector mean, Matrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() == 0 || mean_.size() % 2 != 0) {
    throw Error(ErrorKind::domain, "mean must have positive even length 2n");
  }
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw Error(ErrorKind::shape, "covariance must be 2n x 2n matching the mean");
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw Error(ErrorKind::domain, "non-finite moments");
  }
  const Scalar scale = cov_.cwiseAbs().maxCoeff();
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTolerance) * scale) {
    throw Error(ErrorKind::physicality, "covariance is not symmetric");
  }
  cov_ = (cov_ + cov_.transpose()).eval() / Scalar(2);
  const auto nu = symplectic_eigenvalues(cov_);
  if (nu.minCoeff() < Scalar(1) - Scalar(kPhysicalityTolerance)) {
    throw Error(ErrorKind::physicality,
                "covariance violates the uncertainty principle (symplectic eigenvalue " +
                    std::to_string(static_cast<double>(nu.minCoeff())) + " < 1)");
  }
}

// ---------------------------------------------------------------------------
// Local transforms

/// Phase rotation: q' = q cos(theta) + p sin(theta), p' = -q sin(theta) + p cos(theta).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> rotation_matrix(Scalar theta) {
  const Scalar c = std::cos(theta);
  const Scalar s = std::sin(theta);
  Eigen::Matrix<Scalar, 2, 2> m;
  m << c, s, -s, c;
  return m;
}

/// Squeezer exp(-xi) along the axis at `angle` from q, exp(+xi) orthogonal to it.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> squeeze_matrix(Scalar xi, Scalar angle) {
  // rotation_matrix(-angle) carries the q axis onto the squeezing axis.
  const Eigen::Matrix<Scalar, 2, 2> axis = rotation_matrix<Scalar>(-angle);
  const Eigen::Matrix<Scalar, 2, 2> diag =
      Eigen::Matrix<Scalar, 2, 1>(std::exp(-xi), std::exp(xi)).asDiagonal();
  return axis * diag * axis.transpose();
}

/// Two-mode beamsplitter on (q_a, p_a, q_b, p_b):
/// out1 = t a + r b, out2 = r a - t b for both quadratures.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> beamsplitter_matrix(Scalar r) {
  if (!(r >= Scalar(0) && r <= Scalar(1))) {
    throw Error(ErrorKind::domain, "beamsplitter amplitude r must lie in [0, 1]");
  }
  const Scalar t = std::sqrt(Scalar(1) - r * r);
  Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Zero();
  for (int quad = 0; quad < 2; ++quad) {
    m(quad, quad) = t;
    m(quad, 2 + quad) = r;
    m(2 + quad, quad) = r;
    m(2 + quad, 2 + quad) = -t;
  }
  return m;
}

namespace detail {

inline void check_mode(Eigen::Index mode, Eigen::Index n_modes) {
  if (mode < 0 || mode >= n_modes) {
    throw Error(ErrorKind::domain, "mode index " + std::to_string(mode) + " out of range for " +
                                       std::to_string(n_modes) + " modes");
  }
}

/// Embeds a 2k x 2k transform acting on `modes` into the identity and applies it.
template <typename Scalar, int Dim>
BasicGaussianState<Scalar> apply_local(const BasicGaussianState<Scalar>& state,
                                       const Eigen::Matrix<Scalar, Dim, Dim>& local,
                                       std::initializer_list<Eigen::Index> modes) {
  using Matrix = typename BasicGaussianState<Scalar>::Matrix;
  const Eigen::Index dim = 2 * state.n_modes();
  Matrix full = Matrix::Identity(dim, dim);
  std::vector<Eigen::Index> rows;
  for (auto mode : modes) {
    rows.push_back(2 * mode);
    rows.push_back(2 * mode + 1);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      full(rows[i], rows[j]) = local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return BasicGaussianState<Scalar>(full * state.mean(), full * state.cov() * full.transpose());
}

}  // namespace detail

template <typename Scalar>
BasicGaussianState<Scalar> apply_squeeze(const BasicGaussianState<Scalar>& state, Scalar xi,
                                         Eigen::Index mode, Scalar angle = Scalar(0)) {
  detail::check_mode(mode, state.n_modes());
  return detail::apply_local(state, squeeze_matrix<Scalar>(xi, angle), {mode});
}

template <typename Scalar>
BasicGaussianState<Scalar> apply_rotation(const BasicGaussianState<Scalar>& state, Scalar theta,
                                          Eigen::Index mode) {
  detail::check_mode(mode, state.n_modes());
  return detail::apply_local(state, rotation_matrix<Scalar>(theta), {mode});
}

template <typename Scalar>
BasicGaussianState<Scalar> apply_beamsplitter(const BasicGaussianState<Scalar>& state,
                                              Eigen::Index mode_a, Eigen::Index mode_b, Scalar r) {
  detail::check_mode(mode_a, state.n_modes());
  detail::check_mode(mode_b, state.n_modes());
  if (mode_a == mode_b) {
    throw Error(ErrorKind::domain, "beamsplitter needs two distinct modes");
  }
  return detail::apply_local(state, beamsplitter_matrix<Scalar>(r), {mode_a, mode_b});
}

/// Pure-loss channel of transmission eta: V -> eta V + (1 - eta) I, mean -> sqrt(eta) mean.
template <typename Scalar>
BasicGaussianState<Scalar> apply_loss(const BasicGaussianState<Scalar>& state, Scalar eta,
                                      Eigen::Index mode) {
  if (!(eta >= Scalar(0) && eta <= Scalar(1))) {
    throw Error(ErrorKind::domain, "loss transmission eta must lie in [0, 1]");
  }
  detail::check_mode(mode, state.n_modes());
  auto mean = state.mean();
  auto cov = state.cov();
  const Eigen::Index row = 2 * mode;
  const Scalar amp = std::sqrt(eta);
  mean.template segment<2>(row) *= amp;
  // Cross-correlations with the other modes scale by sqrt(eta).
  cov.middleRows(row, 2) *= amp;
  cov.middleCols(row, 2) *= amp;
  cov.template block<2, 2>(row, row) += (Scalar(1) - eta) * Eigen::Matrix<Scalar, 2, 2>::Identity();
  return BasicGaussianState<Scalar>(std::move(mean), std::move(cov));
}

template <typename Scalar>
BasicGaussianState<Scalar> tensor(const BasicGaussianState<Scalar>& a,
                                  const BasicGaussianState<Scalar>& b) {
  using Vector = typename BasicGaussianState<Scalar>::Vector;
  using Matrix = typename BasicGaussianState<Scalar>::Matrix;
  const Eigen::Index da = a.mean().size();
  const Eigen::Index db = b.mean().size();
  Vector mean(da + db);
  mean << a.mean(), b.mean();
  Matrix cov = Matrix::Zero(da + db, da + db);
  cov.topLeftCorner(da, da) = a.cov();
  cov.bottomRightCorner(db, db) = b.cov();
  return BasicGaussianState<Scalar>(std::move(mean), std::move(cov));
}

// ---------------------------------------------------------------------------
// State factories

template <typename Scalar>
struct VacuumParams {};

template <typename Scalar>
struct CoherentParams {
  std::complex<Scalar> alpha;
};

template <typename Scalar>
struct SqueezedVacuumParams {
  Scalar squeeze_db;  ///< q-variance 10^(db/10); negative squeezes q
  Scalar angle = Scalar(0);
};

/// Squeezed thermal state given by its principal Wigner variances.
template <typename Scalar>
struct SqueezedThermalSpec {
  Scalar s_s;    ///< variance along the squeezed axis
  Scalar s_as;   ///< variance along the antisqueezed axis
  Scalar angle;  ///< orientation of the squeezed axis from q
};

template <typename Scalar>
using StateParams = std::variant<VacuumParams<Scalar>, CoherentParams<Scalar>,
                                 SqueezedVacuumParams<Scalar>, SqueezedThermalSpec<Scalar>>;

/// Single-mode moments of `params`, replicated as a product over `n_modes`.
template <typename Scalar>
BasicGaussianState<Scalar> make_state(const StateParams<Scalar>& params, Eigen::Index n_modes = 1) {
  using Vector = typename BasicGaussianState<Scalar>::Vector;
  using Matrix = typename BasicGaussianState<Scalar>::Matrix;
  if (n_modes < 1) {
    throw Error(ErrorKind::domain, "n_modes must be positive");
  }
  Eigen::Matrix<Scalar, 2, 1> mean = Eigen::Matrix<Scalar, 2, 1>::Zero();
  Eigen::Matrix<Scalar, 2, 2> cov = Eigen::Matrix<Scalar, 2, 2>::Identity();

  auto principal = [](Scalar along, Scalar across, Scalar angle) {
    const Eigen::Matrix<Scalar, 2, 2> axis = rotation_matrix<Scalar>(-angle);
    return Eigen::Matrix<Scalar, 2, 2>(
        axis * Eigen::Matrix<Scalar, 2, 1>(along, across).asDiagonal() * axis.transpose());
  };

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CoherentParams<Scalar>>) {
          mean << std::numbers::sqrt2_v<Scalar> * p.alpha.real(),
              std::numbers::sqrt2_v<Scalar> * p.alpha.imag();
        } else if constexpr (std::is_same_v<P, SqueezedVacuumParams<Scalar>>) {
          const Scalar v = std::pow(Scalar(10), p.squeeze_db / Scalar(10));
          cov = principal(v, Scalar(1) / v, p.angle);
        } else if constexpr (std::is_same_v<P, SqueezedThermalSpec<Scalar>>) {
          if (!(p.s_s > Scalar(0)) || !(p.s_as > Scalar(0))) {
            throw Error(ErrorKind::domain, "squeezed thermal variances must be positive");
          }
          if (p.s_s * p.s_as < Scalar(1) - Scalar(BasicGaussianState<Scalar>::kPhysicalityTolerance)) {
            throw Error(ErrorKind::physicality, "s_s * s_as < 1 violates the uncertainty principle");
          }
          cov = principal(p.s_s, p.s_as, p.angle);
        }
      },
      params);

  Vector full_mean(2 * n_modes);
  Matrix full_cov = Matrix::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    full_mean.template segment<2>(2 * k) = mean;
    full_cov.template block<2, 2>(2 * k, 2 * k) = cov;
  }
  return BasicGaussianState<Scalar>(std::move(full_mean), std::move(full_cov));
}

// ---------------------------------------------------------------------------
// Husimi Q function

/// Q(alpha) = <alpha|rho|alpha> / pi for a single-mode state: a Gaussian in
/// (Re alpha, Im alpha) centred on mean / sqrt2 with covariance (cov + I) / 4.
template <typename Scalar>
Scalar husimi_eval(const BasicGaussianState<Scalar>& state, std::complex<Scalar> alpha) {
  if (state.n_modes() != 1) {
    throw Error(ErrorKind::unsupported, "husimi_eval supports single-mode states only");
  }
  const Eigen::Matrix<Scalar, 2, 2> sigma =
      (state.mode_cov(0) + Eigen::Matrix<Scalar, 2, 2>::Identity()) / Scalar(4);
  const Eigen::Matrix<Scalar, 2, 1> d =
      Eigen::Matrix<Scalar, 2, 1>(alpha.real(), alpha.imag()) -
      state.mode_mean(0) / std::numbers::sqrt2_v<Scalar>;
  const Scalar det = sigma.determinant();
  const Scalar exponent = d.dot(sigma.inverse() * d) / Scalar(2);
  return std::exp(-exponent) / (Scalar(2) * std::numbers::pi_v<Scalar> * std::sqrt(det));
}

/// Husimi moments in plotted quadrature coordinates: the centre is the state
/// mean and the covariance is cov + I (one added vacuum unit).
template <typename Scalar>
struct HusimiMoments {
  Eigen::Matrix<Scalar, 2, 1> mean;
  Eigen::Matrix<Scalar, 2, 2> cov;
};

template <typename Scalar>
HusimiMoments<Scalar> husimi_moments(const BasicGaussianState<Scalar>& state) {
  if (state.n_modes() != 1) {
    throw Error(ErrorKind::unsupported, "husimi_moments supports single-mode states only");
  }
  return {state.mode_mean(0), state.mode_cov(0) + Eigen::Matrix<Scalar, 2, 2>::Identity()};
}

}  // namespace dhd
