#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dhd/qfunc_recon.hpp"

using namespace dhd;

namespace {

PhasePoints normal_cloud(int n, const Eigen::Matrix2d& cov, unsigned seed,
                         Eigen::Vector2d mean = Eigen::Vector2d::Zero()) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const Eigen::Matrix2d chol = cov.llt().matrixL();
  PhasePoints p;
  p.points.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    p.points.row(i) = (mean + chol * Eigen::Vector2d(normal(gen), normal(gen))).transpose();
  }
  return p;
}

PhasePoints from_rows(std::initializer_list<std::pair<double, double>> rows) {
  PhasePoints p;
  p.points.resize(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::Index i = 0;
  for (auto [x, y] : rows) {
    p.points(i, 0) = x;
    p.points(i, 1) = y;
    ++i;
  }
  return p;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

Eigen::Matrix2d rot(double a) {
  Eigen::Matrix2d m;
  m << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return m;
}

}  // namespace

TEST_CASE("histogram of vacuum Q samples") {
  const auto joint = dhd_joint(GaussianState::vacuum(1), {0.5, 0.0, 1.0, std::nullopt});
  const int n = 200000;
  const auto pts = compensate(sample_dhd(joint, n, 4), Compensation::unbiased);
  const Histogram2D h = histogram2d(pts);
  CHECK(h.grid.bins == 100);
  CHECK(h.grid.range == 3.0);
  CHECK(h.n_total == n);
  // var 2 per axis: P(|x| > 3) = erfc(3/2) per axis.
  const double out1 = std::erfc(1.5);
  const double out_any = 1.0 - (1.0 - out1) * (1.0 - out1);
  const double frac = 1.0 - static_cast<double>(h.n_in_range) / n;
  CHECK(std::abs(frac - out_any) < 4.0 * std::sqrt(out_any * (1 - out_any) / n));
  CHECK(h.integral() == doctest::Approx(static_cast<double>(h.n_in_range) / n).epsilon(1e-9));
}

TEST_CASE("histogram binning rules") {
  const Histogram2D one = histogram2d(from_rows({{0.0, 0.0}}));
  CHECK(one.n_in_range == 1);
  CHECK(one.density.sum() * one.grid.cell_area() == doctest::Approx(1.0));
  CHECK(one.density(50, 50) == doctest::Approx(1.0 / one.grid.cell_area()));

  const Histogram2D edges = histogram2d(from_rows({{-3.0, -3.0}, {3.0, 3.0}, {3.0000001, 0.0}}), 10, 3.0);
  CHECK(edges.n_total == 3);
  CHECK(edges.n_in_range == 2);
  CHECK(edges.density(0, 0) > 0.0);
  CHECK(edges.density(9, 9) > 0.0);
  CHECK(edges.integral() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // Left-closed interior edges: unit cells on [-4, 4].
  const Histogram2D left = histogram2d(from_rows({{1.0, -1.0}}), 8, 4.0);
  CHECK(left.density(5, 3) > 0.0);

  PhasePoints empty;
  empty.points.resize(0, 2);
  CHECK(kind_of([&] { histogram2d(empty); }) == ErrorKind::empty_input);
  CHECK(kind_of([] { histogram2d(from_rows({{0.0, 0.0}}), 1, 3.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { histogram2d(from_rows({{0.0, 0.0}}), 10, 0.0); }) == ErrorKind::domain);
}

TEST_CASE("histogram file layout") {
  const Histogram2D h = histogram2d(from_rows({{0.1, 0.2}, {9.0, 0.0}}), 4, 2.0);
  std::ostringstream out;
  write_histogram(out, h);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# bins_x=4,bins_y=4,range=2,n_total=2,n_in_range=1");
  std::getline(in, line);
  CHECK(line == "x\\y,-1.5,-0.5,0.5,1.5");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("moment fit of an isotropic cloud") {
  const auto fit = fit_gaussian_moments(normal_cloud(200000, 2.0 * Eigen::Matrix2d::Identity(), 1));
  CHECK(fit.lambda_min == doctest::Approx(2.0).epsilon(0.01));
  CHECK(fit.lambda_max == doctest::Approx(2.0).epsilon(0.01));
  CHECK(fit.n_used == 200000);
  CHECK(std::abs(*fit.sq_db) < 0.1);
}

TEST_CASE("moment fit of the balanced reference state") {
  const GaussianState s = make_state<double>(SqueezedThermalSpec<double>{0.750, 1.820, 0.0});
  const auto joint = dhd_joint(s, {0.5, 0.0, 1.0, std::nullopt});
  const auto fit = fit_gaussian_moments(compensate(sample_dhd(joint, 50000, 42), Compensation::unbiased));
  CHECK(std::abs(*fit.sq_db - -1.25) < 0.15);
  CHECK(std::abs(*fit.asq_db - 2.60) < 0.15);
  CHECK(std::abs(fit.angle) < 0.05);
}

TEST_CASE("degenerate and short clouds") {
  PhasePoints same;
  same.points = Eigen::MatrixX2d::Constant(500, 2, 0.7);
  CHECK(kind_of([&] { fit_gaussian_moments(same); }) == ErrorKind::degenerate_cloud);

  PhasePoints line;
  line.points.resize(500, 2);
  for (int i = 0; i < 500; ++i) line.points.row(i) << i * 0.01, i * 0.02;
  CHECK(kind_of([&] { fit_gaussian_moments(line); }) == ErrorKind::degenerate_cloud);

  CHECK(kind_of([] { fit_gaussian_moments(normal_cloud(99, Eigen::Matrix2d::Identity(), 1)); }) ==
        ErrorKind::empty_input);
}

TEST_CASE("property: fit is rotation equivariant and scale covariant") {
  Eigen::Matrix2d cov;
  cov << 1.4, 0.0, 0.0, 3.1;
  const PhasePoints base = normal_cloud(20000, cov, 3, {0.4, -0.2});
  const QFit f0 = fit_gaussian_moments(base);
  for (double a : {0.3, 1.1, -0.7, 2.0}) {
    PhasePoints turned = base;
    turned.points = base.points * rot(a).transpose();
    const QFit f = fit_gaussian_moments(turned);
    CHECK(f.lambda_min == doctest::Approx(f0.lambda_min).epsilon(1e-10));
    CHECK(f.lambda_max == doctest::Approx(f0.lambda_max).epsilon(1e-10));
    CHECK((f.center - rot(a) * f0.center).norm() < 1e-12);
    double d = f.angle - (f0.angle + a);
    d = std::remainder(d, std::numbers::pi);
    CHECK(std::abs(d) < 1e-9);
    CHECK(f.angle > -std::numbers::pi / 2);
    CHECK(f.angle <= std::numbers::pi / 2);
  }
  for (double c : {0.5, 2.0, 7.0}) {
    PhasePoints scaled = base;
    scaled.points *= c;
    const QFit f = fit_gaussian_moments(scaled);
    CHECK(f.lambda_min == doctest::Approx(c * c * f0.lambda_min).epsilon(1e-12));
    CHECK(f.lambda_max == doctest::Approx(c * c * f0.lambda_max).epsilon(1e-12));
  }
}

TEST_CASE("histogram moments agree with point moments") {
  Eigen::Matrix2d cov;
  cov << 1.2, 0.3, 0.3, 0.9;
  const PhasePoints pts = normal_cloud(100000, cov, 5, {0.2, 0.1});
  // Wide window so truncation does not bias the comparison.
  const Histogram2D h = histogram2d(pts, 200, 8.0);
  const auto hm = histogram_moments(h);
  const QFit f = fit_gaussian_moments(pts);
  const double w = h.grid.cell_width();
  CHECK((hm.mean - f.center).cwiseAbs().maxCoeff() < w);
  CHECK((hm.cov - f.cov_q).cwiseAbs().maxCoeff() < w);
}

TEST_CASE("least-squares refinement stays close to the moment fit") {
  Eigen::Matrix2d cov;
  cov << 1.75, 0.0, 0.0, 2.82;
  const PhasePoints pts = normal_cloud(200000, cov, 6);
  const QFit moments = fit_gaussian_moments(pts);
  const QFit ls = refine_fit_least_squares(histogram2d(pts, 60, 6.0), moments);
  CHECK(ls.lambda_min == doctest::Approx(1.75).epsilon(0.03));
  CHECK(ls.lambda_max == doctest::Approx(2.82).epsilon(0.03));
  CHECK(ls.center.norm() < 0.03);

  // Started far away it still lands near the truth.
  QFit bad = moments;
  bad.cov_q = Eigen::Matrix2d::Identity();
  bad.center = Eigen::Vector2d(0.5, -0.5);
  const QFit recovered = refine_fit_least_squares(histogram2d(pts, 60, 6.0), bad);
  CHECK(recovered.lambda_min == doctest::Approx(1.75).epsilon(0.03));
  CHECK(recovered.lambda_max == doctest::Approx(2.82).epsilon(0.03));
}

TEST_CASE("fitted variance to dB") {
  CHECK(fit_to_db(1.75) == doctest::Approx(-1.2493873660829995));
  CHECK(fit_to_db(2.82) == doctest::Approx(2.6007138798507454));
  CHECK(fit_to_db(2.0) == 0.0);
  CHECK(fit_to_db(11.0) == doctest::Approx(10.0));
  CHECK(kind_of([] { fit_to_db(1.0); }) == ErrorKind::below_vacuum);
  CHECK(kind_of([] { fit_to_db(0.8); }) == ErrorKind::below_vacuum);
  for (double db : {-6.0, -1.25, 0.0, 2.6, 9.0}) {
    CHECK(fit_to_db(1.0 + std::pow(10.0, db / 10.0)) == doctest::Approx(db).epsilon(1e-12));
  }
}

TEST_CASE("loss correction") {
  CHECK(loss_corrected_db(1.75, 1.0) == doctest::Approx(fit_to_db(1.75)));
  // s = eta s0 + 1 - eta with s0 = 0.5, eta = 0.8 gives 0.6.
  CHECK(loss_corrected_db(1.6, 0.8) == doctest::Approx(10.0 * std::log10(0.5)));
  CHECK(kind_of([] { loss_corrected_db(1.1, 0.5); }) == ErrorKind::out_of_model);
  CHECK(kind_of([] { loss_corrected_db(1.5, 0.0); }) == ErrorKind::domain);
}

TEST_CASE("fit comparison against a prediction") {
  QFit fit;
  fit.center.setZero();
  fit.cov_q << 1.75, 0.0, 0.0, 2.82;
  fit.n_used = 50000;
  finalize_fit(fit);
  const auto c = compare_fit(fit, {0.75, 1.82}, 0.1);
  CHECK(c.passed);
  CHECK(std::abs(c.dev_sq_db) < 1e-12);
  CHECK(c.err_sq_db == doctest::Approx(10.0 / std::numbers::ln10 * 1.75 * std::sqrt(2.0 / 5e4) / 0.75));

  // The predicted pair is ordered before comparison.
  CHECK(compare_fit(fit, {1.82, 0.75}, 0.1).passed);
  CHECK_FALSE(compare_fit(fit, {0.6, 1.82}, 0.1).passed);
  CHECK(kind_of([&] { compare_fit(fit, {-0.1, 1.0}, 0.1); }) == ErrorKind::out_of_model);
}
