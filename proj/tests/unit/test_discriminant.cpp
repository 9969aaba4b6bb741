#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "polyland/discriminant.hpp"
#include "polyland/rng.hpp"

using namespace polyland;
using namespace polyland::discriminant;

namespace {

Eigen::MatrixXd random_symmetric(Rng& rng, int n) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return 0.5 * (A + A.transpose());
}

}  // namespace

TEST_SUITE("discriminant") {

TEST_CASE("Frobenius 2x2 discriminant on reference teachers") {
  Eigen::Matrix2d T;
  T << 2, 0, 0, 1;
  CHECK(discriminant_2x2_frobenius(T) == 1.0);
  T << 0, 1, 1, 0;
  CHECK(discriminant_2x2_frobenius(T) == 64.0);
  T << 1, 0, 0, 1;
  CHECK(discriminant_2x2_frobenius(T) == 0.0);
  T << 1.5, 0.3, 0.3, -0.2;
  const double direct = std::pow((1.5 + 0.2) * (1.5 + 0.2) + 4 * 0.09, 3);
  CHECK(discriminant_2x2_frobenius(T) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("iid discriminant is degree 6 in the teacher") {
  Rng rng(10);
  for (int k = 0; k < 5; ++k) {
    Eigen::Matrix2d T = random_symmetric(rng, 2);
    const double mu2 = 0.8 + rng.uniform01();
    const double mu4 = 10.0 + 5.0 * rng.uniform01();
    const double s = 1.7;
    const double base = discriminant_2x2_iid(T, mu2, mu4);
    const double scaled = discriminant_2x2_iid(s * T, mu2, mu4);
    CHECK(scaled == doctest::Approx(std::pow(s, 6) * base)
                        .epsilon(1e-10)
                        .scale(discriminant_2x2_iid_scale(T, mu2, mu4)));
  }
}

TEST_CASE("iid discriminant is symmetric in the diagonal entries") {
  Rng rng(11);
  for (int k = 0; k < 5; ++k) {
    Eigen::Matrix2d T = random_symmetric(rng, 2);
    Eigen::Matrix2d Tswap;
    Tswap << T(1, 1), T(0, 1), T(0, 1), T(0, 0);
    const double mu2 = 1.1, mu4 = 14.0;
    CHECK(discriminant_2x2_iid(T, mu2, mu4) ==
          doctest::Approx(discriminant_2x2_iid(Tswap, mu2, mu4)).epsilon(1e-12));
  }
}

TEST_CASE("iid discriminant moment grading doubles with the moment scale") {
  // Every term carries mu2^a mu4^b with a + 2b = 24, so scaling mu2 by s^2 and
  // mu4 by s^4 multiplies the value by s^48.
  Rng rng(12);
  Eigen::Matrix2d T = random_symmetric(rng, 2);
  const double mu2 = 0.9, mu4 = 12.0, s = 1.3;
  const double base = discriminant_2x2_iid(T, mu2, mu4);
  const double scaled = discriminant_2x2_iid(T, s * s * mu2, s * s * s * s * mu4);
  CHECK(scaled == doctest::Approx(std::pow(s, 48) * base)
                      .epsilon(1e-10)
                      .scale(discriminant_2x2_iid_scale(T, s * s * mu2,
                                                        s * s * s * s * mu4)));
}

TEST_CASE("iid discriminant vanishes exactly at the Gaussian isotropic teacher") {
  Eigen::Matrix2d T;
  T << 1, 0, 0, 1;
  CHECK(discriminant_2x2_iid(T, 1.0, 3.0) == 0.0);
  T << 2.5, 0, 0, 2.5;
  CHECK(discriminant_2x2_iid(T, 1.0, 3.0) == 0.0);
}

TEST_CASE("iid discriminant is small at the collision teacher") {
  // For t = (1, s), mu2 = 1, mu4 = 25, the two-coordinate critical pair merges
  // at s* = 25/311.
  const double s_star = 25.0 / 311.0;
  Eigen::Matrix2d T;
  T << 1, 0, 0, s_star;
  const double value = discriminant_2x2_iid(T, 1.0, 25.0);
  const double scale = discriminant_2x2_iid_scale(T, 1.0, 25.0);
  CHECK(std::abs(value) <= 1e-6 * scale);
  // Away from the collision the value is comfortably nonzero.
  T(1, 1) = 0.5;
  CHECK(std::abs(discriminant_2x2_iid(T, 1.0, 25.0)) >
        1e-3 * discriminant_2x2_iid_scale(T, 1.0, 25.0));
}

TEST_CASE("focal points of a commuting pencil use the closed form") {
  const Eigen::MatrixXd S = Eigen::Vector2d(0.0, 1.0).asDiagonal();
  const Eigen::MatrixXd T = Eigen::Vector2d(3.0, 1.0).asDiagonal();
  const auto pts = focal_points_on_segment(S, T);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].alpha == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(pts[0].multiplicity == 1);
}

TEST_CASE("swapped-branch commuting pair crosses at the midpoint") {
  Eigen::Matrix2d S;
  S << 1, 0.3, 0.3, -1;
  S += 2.0 * Eigen::Matrix2d::Identity();
  Eigen::Matrix2d T = 4.0 * Eigen::Matrix2d::Identity() - S;
  const auto pts = focal_points_on_segment(S, T);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].alpha == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(pts[0].multiplicity == 1);
}

TEST_CASE("generic pencils locate the coincidence by scanning") {
  Rng rng(14);
  // Build M* with a double eigenvalue in a random frame, then choose S so the
  // segment hits it exactly at alpha = 0.4.
  Eigen::MatrixXd A(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Mstar =
      Q * Eigen::Vector3d(2.0, 2.0, -1.0).asDiagonal() * Q.transpose();
  const Eigen::MatrixXd T = random_symmetric(rng, 3);
  const Eigen::MatrixXd S = (Mstar - 0.4 * T) / 0.6;
  const auto pts = focal_points_on_segment(S, T);
  bool found = false;
  for (const auto& p : pts)
    if (std::abs(p.alpha - 0.4) < 1e-8) {
      found = true;
      CHECK(p.multiplicity == 1);
    }
  CHECK(found);
}

TEST_CASE("identical-spectrum pencil endpoints are rejected") {
  const Eigen::MatrixXd S = Eigen::Vector2d(1.0, 1.0).asDiagonal();
  CHECK_THROWS_AS(focal_points_on_segment(S, S), std::runtime_error);
}

TEST_CASE("ellipse critical points of the centered circle metric") {
  const auto pts = ellipse_critical_points(Eigen::Vector2d(0.0, 0.0),
                                           Eigen::Matrix2d::Identity(), 2.0, 1.0);
  REQUIRE(pts.size() == 4);
  int minima = 0, maxima = 0;
  for (const auto& p : pts) {
    CHECK_FALSE(p.on_discriminant);
    REQUIRE(p.index.has_value());
    if (*p.index == 0) {
      ++minima;
      CHECK(p.value == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(std::abs(p.point[0]) < 1e-8);
    } else {
      ++maxima;
      CHECK(p.value == doctest::Approx(4.0).epsilon(1e-10));
      CHECK(std::abs(p.point[1]) < 1e-8);
    }
  }
  CHECK(minima == 2);
  CHECK(maxima == 2);
}

TEST_CASE("the evolute cusp degenerates the near vertex") {
  // t = ((a^2 - b^2)/a, 0) is the cusp of the evolute: g'' vanishes at theta=0.
  const auto pts = ellipse_critical_points(Eigen::Vector2d(1.5, 0.0),
                                           Eigen::Matrix2d::Identity(), 2.0, 1.0);
  REQUIRE(pts.size() == 2);
  bool saw_cusp = false, saw_far = false;
  for (const auto& p : pts) {
    if (std::abs(p.theta) < 1e-6 || std::abs(p.theta - 2 * M_PI) < 1e-6) {
      saw_cusp = true;
      CHECK(p.on_discriminant);
      CHECK_FALSE(p.index.has_value());
    } else {
      saw_far = true;
      CHECK(p.theta == doctest::Approx(M_PI).epsilon(1e-8));
      REQUIRE(p.index.has_value());
      CHECK(*p.index == 1);
      CHECK(p.value == doctest::Approx(3.5 * 3.5).epsilon(1e-10));
    }
  }
  CHECK(saw_cusp);
  CHECK(saw_far);
}

TEST_CASE("generic interior focus sees two minima and two maxima") {
  const auto pts = ellipse_critical_points(Eigen::Vector2d(0.3, 0.1),
                                           Eigen::Matrix2d::Identity(), 2.0, 1.0);
  REQUIRE(pts.size() == 4);
  int idx_sum = 0;
  for (const auto& p : pts) {
    REQUIRE(p.index.has_value());
    idx_sum += *p.index;
    CHECK_FALSE(p.on_discriminant);
  }
  CHECK(idx_sum == 2);
}

TEST_CASE("stability probe holds at the center and breaks at the cusp") {
  Rng rng(2026);
  const auto center =
      stability_probe(Eigen::Vector2d(0.0, 0.0), Eigen::Matrix2d::Identity(), 2.0,
                      1.0, 1e-3, 40, rng);
  CHECK(center.stable);
  CHECK_FALSE(center.baseline_degenerate);
  CHECK(center.baseline_count == 4);
  for (int c : center.observed_counts) CHECK(c == 4);

  const auto cusp =
      stability_probe(Eigen::Vector2d(1.5, 0.0), Eigen::Matrix2d::Identity(), 2.0,
                      1.0, 1e-3, 40, rng);
  CHECK_FALSE(cusp.stable);
  CHECK(cusp.baseline_degenerate);
  // Perturbations land on either side of the evolute, so every observed
  // landscape is one of the two generic ones.
  bool saw2 = false;
  for (int c : cusp.observed_counts) {
    CHECK((c == 2 || c == 4));
    if (c == 2) saw2 = true;
  }
  CHECK(saw2);
}

}  // TEST_SUITE
