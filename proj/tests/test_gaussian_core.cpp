#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "dhd/counter_rng.hpp"
#include "dhd/gaussian_core.hpp"

using namespace dhd;

namespace {

constexpr double kPi = std::numbers::pi;

GaussianState diag_state(double vq, double vp) {
  return GaussianState(Eigen::Vector2d::Zero(), Eigen::Vector2d(vq, vp).asDiagonal().toDenseMatrix());
}

// Independent route: |eigenvalues of i Omega V| via the general eigensolver.
Eigen::VectorXd symplectic_spectrum_oracle(const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXcd m = std::complex<double>(0, 1) *
                             (symplectic_form<double>(cov.rows() / 2) * cov).cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m);
  Eigen::VectorXd mags = solver.eigenvalues().cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size());
  Eigen::VectorXd out(cov.rows() / 2);
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = mags(2 * k);
  return out;
}

// Random physical n-mode state: random symplectic (squeezers, rotations,
// beamsplitters) applied to a thermal state.
GaussianState random_state(std::uint64_t seed, Eigen::Index n_modes) {
  const CounterStream rng(seed, 77);
  std::uint64_t c = 0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    const double nu = 1.0 + 2.0 * rng.uniform(c++);
    cov(2 * k, 2 * k) = nu;
    cov(2 * k + 1, 2 * k + 1) = nu;
  }
  Eigen::VectorXd mean(2 * n_modes);
  for (Eigen::Index k = 0; k < 2 * n_modes; ++k) mean(k) = 2.0 * rng.uniform(c++) - 1.0;
  GaussianState s(mean, cov);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    s = apply_squeeze(s, 1.2 * rng.uniform(c++) - 0.6, k, kPi * rng.uniform(c++));
    s = apply_rotation(s, 2 * kPi * rng.uniform(c++), k);
  }
  if (n_modes > 1) s = apply_beamsplitter(s, 0, 1, rng.uniform(c++));
  return s;
}

}  // namespace

TEST_CASE("vacuum and coherent states follow the SNU convention") {
  const auto vac = make_state<double>(VacuumParams<double>{});
  CHECK(vac.n_modes() == 1);
  CHECK(vac.mean().isZero(0.0));
  CHECK(vac.cov().isIdentity(0.0));

  const auto coh = make_state<double>(CoherentParams<double>{{1.0, -0.5}});
  CHECK(coh.mean()(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(coh.mean()(1) == doctest::Approx(-0.5 * std::sqrt(2.0)));
  CHECK(coh.cov().isIdentity(0.0));
}

TEST_CASE("squeezed vacuum from dB") {
  const auto s = make_state<double>(SqueezedVacuumParams<double>{-3.0});
  CHECK(s.cov()(0, 0) == doctest::Approx(std::pow(10.0, -0.3)).epsilon(1e-14));
  CHECK(s.cov()(1, 1) == doctest::Approx(std::pow(10.0, 0.3)).epsilon(1e-14));
  CHECK(std::abs(s.cov()(0, 1)) < 1e-15);
}

TEST_CASE("thermal squeezed state from the balanced reconstruction levels") {
  // 10^(-1.25/10) = 0.74989, 10^(2.6/10) = 1.8197
  const auto s = make_state<double>(SqueezedThermalSpec<double>{0.750, 1.820, 0.0});
  CHECK(s.cov()(0, 0) == doctest::Approx(0.750));
  CHECK(s.cov()(1, 1) == doctest::Approx(1.820));
  CHECK(s.cov()(0, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(make_state<double>(SqueezedThermalSpec<double>{0.5, 1.0, 0.0}), Error);
  try {
    make_state<double>(SqueezedThermalSpec<double>{0.5, 1.0, 0.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::physicality);
  }
  try {
    make_state<double>(SqueezedThermalSpec<double>{-0.5, 3.0, 0.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
}

TEST_CASE("rotated thermal squeezed state keeps its principal variances") {
  const auto s = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.4});
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(s.mode_cov(0));
  CHECK(solver.eigenvalues()(0) == doctest::Approx(0.75));
  CHECK(solver.eigenvalues()(1) == doctest::Approx(1.82));
  const Eigen::Vector2d axis = solver.eigenvectors().col(0);
  CHECK(std::abs(std::abs(axis.dot(Eigen::Vector2d(std::cos(0.4), std::sin(0.4)))) - 1.0) < 1e-12);
}

TEST_CASE("constructor rejects non-physical moments") {
  Eigen::Matrix2d asym;
  asym << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(GaussianState(Eigen::Vector2d::Zero(), asym), Error);
  CHECK_THROWS_AS(diag_state(0.5, 1.5), Error);   // det < 1
  CHECK_THROWS_AS(diag_state(-1.0, -1.0), Error);  // not positive definite
  CHECK_THROWS_AS(GaussianState(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity()), Error);
  CHECK_NOTHROW(diag_state(0.5, 2.0));  // pure
}

TEST_CASE("squeeze follows the pinned sign convention") {
  const auto vac = GaussianState::vacuum(1);
  const auto same = apply_squeeze(vac, 0.0, 0, 0.0);
  CHECK(same.cov().isApprox(vac.cov()));

  const auto sq = apply_squeeze(vac, std::log(2.0), 0, 0.0);
  CHECK(sq.cov()(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(sq.cov()(1, 1) == doctest::Approx(4.0).epsilon(1e-14));

  const auto rho = make_state<double>(CoherentParams<double>{{0.3, 0.7}});
  const auto squeezed = apply_squeeze(rho, 0.5, 0, 0.0);
  CHECK(squeezed.mean()(0) == doctest::Approx(rho.mean()(0) * std::exp(-0.5)));
  CHECK(squeezed.mean()(1) == doctest::Approx(rho.mean()(1) * std::exp(0.5)));

  const auto back = apply_squeeze(squeezed, -0.5, 0, 0.0);
  CHECK((back.cov() - rho.cov()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.mean() - rho.mean()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(squeeze_matrix(0.7, 0.3).determinant() == doctest::Approx(1.0));
  CHECK_THROWS_AS(apply_squeeze(vac, 0.1, 1, 0.0), Error);
}

TEST_CASE("squeeze acts only on the addressed mode") {
  const auto two = tensor(make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0}),
                          GaussianState::vacuum(1));
  const auto out = apply_squeeze(two, 0.3, 1, 0.0);
  CHECK(out.mode_cov(0).isApprox(two.mode_cov(0)));
  CHECK(out.cov()(2, 2) == doctest::Approx(std::exp(-0.6)));
}

TEST_CASE("beamsplitter") {
  const auto vv = GaussianState::vacuum(2);
  for (double r : {0.0, 0.3, 0.70710678, 1.0}) {
    CHECK((apply_beamsplitter(vv, 0, 1, r).cov() - vv.cov()).cwiseAbs().maxCoeff() < 1e-15);
  }

  // r = 1 swaps ports: out1 = b, out2 = a with a sign flip.
  const auto sig = tensor(make_state<double>(CoherentParams<double>{{0.5, 0.2}}),
                          make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0}));
  const auto swapped = apply_beamsplitter(sig, 0, 1, 1.0);
  CHECK(swapped.mean()(0) == doctest::Approx(sig.mean()(2)));
  CHECK(swapped.mean()(2) == doctest::Approx(sig.mean()(0)));
  CHECK(swapped.cov()(0, 0) == doctest::Approx(0.75));
  CHECK(swapped.cov()(1, 1) == doctest::Approx(1.82));

  // Balanced split of squeezed (0.75) with vacuum: (0.75 + 1) / 2.
  const auto half = apply_beamsplitter(tensor(make_state<double>(SqueezedThermalSpec<double>{0.75, 1.0 / 0.75, 0.0}),
                                              GaussianState::vacuum(1)),
                                       0, 1, 1.0 / std::sqrt(2.0));
  CHECK(half.cov()(0, 0) == doctest::Approx(0.875));

  CHECK_THROWS_AS(apply_beamsplitter(vv, 0, 1, 1.2), Error);
  CHECK_THROWS_AS(apply_beamsplitter(vv, 0, 1, -0.1), Error);
  CHECK_THROWS_AS(apply_beamsplitter(vv, 1, 1, 0.5), Error);
}

TEST_CASE("beamsplitter composition is the matrix product") {
  const auto s = random_state(11, 2);
  const double r1 = 0.35, r2 = 0.8;
  const auto twice = apply_beamsplitter(apply_beamsplitter(s, 0, 1, r1), 0, 1, r2);
  const Eigen::Matrix4d m = beamsplitter_matrix(r2) * beamsplitter_matrix(r1);
  CHECK((twice.cov() - m * s.cov() * m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((twice.mean() - m * s.mean()).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::Matrix4d omega = symplectic_form<double>(2);
  const Eigen::Matrix4d b = beamsplitter_matrix(0.41);
  CHECK((b * omega * b.transpose() - omega).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((b * b.transpose() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("loss channel") {
  const auto s = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0});
  CHECK(apply_loss(s, 1.0, 0).cov().isApprox(s.cov()));
  const auto gone = apply_loss(make_state<double>(CoherentParams<double>{{2.0, 1.0}}), 0.0, 0);
  CHECK(gone.cov().isApprox(Eigen::Matrix2d::Identity()));
  CHECK(gone.mean().isZero(0.0));

  const auto lossy = apply_loss(s, 0.80, 0);
  CHECK(lossy.cov()(0, 0) == doctest::Approx(0.80));
  CHECK(lossy.cov()(1, 1) == doctest::Approx(1.656));

  const auto coh = apply_loss(make_state<double>(CoherentParams<double>{{1.0, 0.0}}), 0.64, 0);
  CHECK(coh.mean()(0) == doctest::Approx(0.8 * std::sqrt(2.0)));

  CHECK_THROWS_AS(apply_loss(s, 1.1, 0), Error);
  CHECK_THROWS_AS(apply_loss(s, -0.01, 0), Error);
}

TEST_CASE("phase rotation") {
  const auto s = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0});
  CHECK(apply_rotation(s, 0.0, 0).cov().isApprox(s.cov()));
  const auto quarter = apply_rotation(s, kPi / 2, 0);
  CHECK(quarter.cov()(0, 0) == doctest::Approx(1.82));
  CHECK(quarter.cov()(1, 1) == doctest::Approx(0.75));

  const auto coh = make_state<double>(CoherentParams<double>{{0.4, -0.9}});
  const auto half = apply_rotation(coh, kPi, 0);
  CHECK((half.mean() + coh.mean()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((half.cov() - coh.cov()).cwiseAbs().maxCoeff() < 1e-14);

  const auto some = apply_rotation(s, 0.77, 0);
  CHECK(some.cov().trace() == doctest::Approx(s.cov().trace()));
}

TEST_CASE("tensor product") {
  const auto a = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.2});
  const auto b = make_state<double>(CoherentParams<double>{{0.1, 0.2}});
  const auto ab = tensor(a, b);
  CHECK(ab.n_modes() == 2);
  CHECK(tensor(GaussianState::vacuum(1), GaussianState::vacuum(1)).cov().isIdentity(0.0));
  CHECK(ab.cov().block<2, 2>(0, 2).isZero(0.0));
  CHECK(ab.cov().block<2, 2>(2, 0).isZero(0.0));
  CHECK(ab.mode_cov(0).isApprox(a.cov()));
  CHECK(ab.mean().tail<2>().isApprox(b.mean()));
  CHECK(tensor(ab, a).n_modes() == 3);
}

TEST_CASE("symplectic eigenvalues match an independent eigensolver") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_state(seed, 2);
    const Eigen::VectorXd nu = symplectic_eigenvalues(s.cov());
    const Eigen::VectorXd oracle = symplectic_spectrum_oracle(s.cov());
    CHECK((nu - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
  const auto one = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.3});
  CHECK(symplectic_eigenvalues(one.cov())(0) == doctest::Approx(std::sqrt(0.75 * 1.82)));
}

TEST_CASE("property: symplectic invariance and loss monotonicity on random states") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const auto s = random_state(seed, 2);
    const Eigen::VectorXd nu = symplectic_eigenvalues(s.cov());
    const CounterStream rng(seed, 5);
    const auto checks = {
        apply_squeeze(s, 2.0 * rng.uniform(0) - 1.0, 1, rng.uniform(1)),
        apply_rotation(s, 6.0 * rng.uniform(2), 0),
        apply_beamsplitter(s, 0, 1, rng.uniform(3)),
    };
    for (const auto& out : checks) {
      CHECK((symplectic_eigenvalues(out.cov()) - nu).cwiseAbs().maxCoeff() < 1e-9);
    }
    const auto lossy = apply_loss(s, rng.uniform(4), 0);
    CHECK(symplectic_eigenvalues(lossy.cov()).minCoeff() >= 1.0 - 1e-9);
  }
}

TEST_CASE("Husimi function of vacuum") {
  const auto vac = GaussianState::vacuum(1);
  CHECK(husimi_eval(vac, {0.0, 0.0}) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(husimi_eval(vac, {1.0, 0.0}) == doctest::Approx(1.0 / (kPi * std::exp(1.0))).epsilon(1e-14));
  // Coherent: Q(alpha) = exp(-|alpha - alpha0|^2) / pi.
  const auto coh = make_state<double>(CoherentParams<double>{{0.6, -0.2}});
  CHECK(husimi_eval(coh, {0.6, -0.2}) == doctest::Approx(1.0 / kPi));
  CHECK(husimi_eval(coh, {1.1, -0.2}) == doctest::Approx(std::exp(-0.25) / kPi));
  CHECK_THROWS_AS(husimi_eval(GaussianState::vacuum(2), {0.0, 0.0}), Error);
}

TEST_CASE("Husimi value of the squeezed thermal state matches the plotted-frame density") {
  const auto s = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0});
  // Plotted-frame density 1 / (2 pi sqrt((1+s_s)(1+s_as))) with x = 2 Re alpha,
  // so d^2 alpha = dx dy / 4.
  const double plotted = 1.0 / (2.0 * kPi * std::sqrt(1.75 * 2.82));
  CHECK(husimi_eval(s, {0.0, 0.0}) == doctest::Approx(4.0 * plotted).epsilon(1e-12));
}

TEST_CASE("property: Husimi normalisation and the 1/pi bound") {
  std::vector<GaussianState> states{GaussianState::vacuum(1),
                                    make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0})};
  for (std::uint64_t seed = 0; seed < 6; ++seed) states.push_back(random_state(seed, 1));
  const int n = 600;
  const double radius = 6.0;
  const double h = 2.0 * radius / n;
  for (const auto& s : states) {
    double total = 0.0;
    double peak = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double q = husimi_eval(s, {-radius + (i + 0.5) * h, -radius + (j + 0.5) * h});
        total += q * h * h;
        peak = std::max(peak, q);
      }
    }
    CHECK(std::abs(total - 1.0) < 1e-4);
    CHECK(peak <= 1.0 / kPi + 1e-12);
    CHECK(peak > 0.0);
  }
}

TEST_CASE("Husimi moments add one vacuum unit") {
  const auto s = make_state<double>(SqueezedThermalSpec<double>{0.75, 1.82, 0.0});
  const auto m = husimi_moments(s);
  CHECK(m.cov(0, 0) == doctest::Approx(1.75));
  CHECK(m.cov(1, 1) == doctest::Approx(2.82));
}

TEST_CASE("core is generic over the scalar type") {
  using LState = BasicGaussianState<long double>;
  const auto s = make_state<long double>(SqueezedThermalSpec<long double>{0.75L, 1.82L, 0.0L});
  const LState out = apply_loss(apply_squeeze(s, 0.25L, 0, 0.0L), 0.8L, 0);
  CHECK(static_cast<double>(out.cov()(0, 0)) ==
        doctest::Approx(0.8 * 0.75 * std::exp(-0.5) + 0.2).epsilon(1e-14));
  CHECK(husimi_eval(LState::vacuum(1), std::complex<long double>(0, 0)) ==
        doctest::Approx(1.0 / kPi));
}
