#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "polyland/network.hpp"
#include "polyland/rng.hpp"
#include "polyland/symtensor.hpp"

using namespace polyland;
using namespace polyland::network;
using symtensor::SymTensor;

namespace {

NetworkParams random_params(Rng& rng, int r, int n) {
  NetworkParams p;
  p.alpha = Eigen::VectorXd(r);
  p.W = Eigen::MatrixXd(r, n);
  for (int i = 0; i < r; ++i) p.alpha[i] = rng.normal();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) p.W(i, j) = rng.normal();
  return p;
}

Eigen::MatrixXd random_orthonormal_rows(Rng& rng, int r, int n) {
  Eigen::MatrixXd A(n, r);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j) A(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
  return Q.transpose();
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("tau sums weighted rank-one powers") {
  Rng rng(3);
  const auto p = random_params(rng, 3, 4);
  const int d = 3;
  const SymTensor T = tau(p, d);
  SymTensor expected(4, d);
  for (int i = 0; i < 3; ++i)
    expected += symtensor::rank_one(p.W.row(i).transpose(), p.alpha[i], d);
  CHECK((T.coeffs() - expected.coeffs()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::VectorXd x(4);
  x << 0.3, -1.1, 0.2, 0.9;
  double fx = 0.0;
  for (int i = 0; i < 3; ++i) fx += p.alpha[i] * std::pow(p.W.row(i).dot(x), d);
  CHECK(symtensor::evaluate_poly(T, x) == doctest::Approx(fx).epsilon(1e-12));
}

TEST_CASE("d_tau matches finite differences") {
  Rng rng(5);
  const auto p = random_params(rng, 2, 3);
  const int d = 3;
  const Eigen::MatrixXd J = d_tau(p, d);
  const int dim = tau(p, d).dim();
  REQUIRE(J.rows() == dim);
  REQUIRE(J.cols() == 2 + 2 * 3);
  const double h = 1e-6;
  int col = 0;
  for (int i = 0; i < 2; ++i, ++col) {
    NetworkParams pp = p, pm = p;
    pp.alpha[i] += h;
    pm.alpha[i] -= h;
    const Eigen::VectorXd fd = (tau(pp, d).coeffs() - tau(pm, d).coeffs()) / (2 * h);
    CHECK((J.col(col) - fd).norm() < 1e-6 * (1.0 + fd.norm()));
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j, ++col) {
      NetworkParams pp = p, pm = p;
      pp.W(i, j) += h;
      pm.W(i, j) -= h;
      const Eigen::VectorXd fd =
          (tau(pp, d).coeffs() - tau(pm, d).coeffs()) / (2 * h);
      CHECK((J.col(col) - fd).norm() < 1e-6 * (1.0 + fd.norm()));
    }
}

TEST_CASE("generic wide networks are submersions onto Sym^d") {
  Rng rng(7);
  // dim Sym^4(R^2) = 5 < rn = 6: generic rank hits the ambient dimension.
  const auto p = random_params(rng, 3, 2);
  const auto res = crit_locus_test(p, 4);
  CHECK(res.expected_rank == 5);
  CHECK(res.rank == 5);
  CHECK_FALSE(res.in_crit);
  CHECK_FALSE(res.witness.has_value());

  // Overparameterized d = 2: dim Sym^2(R^2) = 3 caps the rank.
  const auto q = random_params(rng, 3, 2);
  const auto res2 = crit_locus_test(q, 2);
  CHECK(res2.expected_rank == 3);
  CHECK(res2.rank == 3);
  CHECK_FALSE(res2.in_crit);
}

TEST_CASE("narrow networks drop rank through the Euler relation") {
  Rng rng(7);
  // Each alpha column w_i^{x d} equals (1/d) sum_j W_ij times the (i,j) weight
  // column, so rank d_tau <= rn whenever every alpha_i is nonzero.  Here
  // rn = 6 < min(dim, r + rn) = 8, so generic narrow points are critical.
  const auto p = random_params(rng, 2, 3);
  const auto res = crit_locus_test(p, 3);
  CHECK(res.expected_rank == 8);
  CHECK(res.rank == 6);
  CHECK(res.in_crit);
  REQUIRE(res.witness.has_value());
  CHECK(res.max_grad_norm < 1e-8);
}

TEST_CASE("coincident neurons land on the critical locus with a witness") {
  Rng rng(11);
  NetworkParams p;
  p.alpha = Eigen::VectorXd(2);
  p.alpha << 1.3, -0.4;
  Eigen::VectorXd w(2);
  w << 0.8, -0.6;
  p.W = Eigen::MatrixXd(2, 2);
  p.W.row(0) = w.transpose();
  p.W.row(1) = w.transpose();
  const int d = 3;
  const auto res = crit_locus_test(p, d);
  CHECK(res.in_crit);
  CHECK(res.rank < res.expected_rank);
  REQUIRE(res.witness.has_value());
  const SymTensor& P = *res.witness;
  CHECK(symtensor::frobenius_norm(P) == doctest::Approx(1.0).epsilon(1e-10));
  // The witness annihilates every column of the differential.
  const Eigen::MatrixXd J = d_tau(p, d);
  for (int c = 0; c < J.cols(); ++c) {
    const SymTensor col(2, d, J.col(c));
    CHECK(std::abs(symtensor::frobenius_inner(P, col)) < 1e-9);
  }
  CHECK(res.max_grad_norm < 1e-8);
}

TEST_CASE("a dead neuron drops rank without certifying criticality by itself") {
  // w_2 = 0 with alpha_2 = 0 keeps the active neuron's gradient conditions in
  // charge; the locus test still sees the rank drop.
  Rng rng(13);
  NetworkParams p = random_params(rng, 2, 2);
  p.alpha[1] = 0.0;
  p.W.row(1).setZero();
  const auto res = crit_locus_test(p, 3);
  CHECK(res.rank < res.expected_rank);
}

TEST_CASE("branch membership for matrices is a rank condition") {
  SymTensor low = SymTensor::from_matrix(
      Eigen::Vector3d(1.0, 2.0, 0.0).asDiagonal().toDenseMatrix());
  CHECK(branch_membership(low));
  SymTensor full = SymTensor::from_matrix(
      Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal().toDenseMatrix());
  CHECK_FALSE(branch_membership(full));
}

TEST_CASE("branch membership on two variables uses the middle catalecticant") {
  // x1^2 x2 has catalecticant [[0, 1/3, 0], [1/3, 0, 0]] of rank 2 > floor(3/2).
  SymTensor P(2, 3);
  P.set_coeff({0, 0, 1}, 1.0 / 3.0);
  CHECK_FALSE(branch_membership(P));
  // A pure power is on the branch for every d.
  Eigen::Vector2d v(1.0, -2.0);
  CHECK(branch_membership(symtensor::rank_one(v, 1.5, 3)));
  CHECK(branch_membership(symtensor::rank_one(v, 1.5, 4)));
  // Sum of floor(d/2) powers stays on the branch: rank <= 2 for d = 4.
  Eigen::Vector2d u(0.5, 1.0);
  CHECK(branch_membership(symtensor::rank_one(v, 1.0, 4) +
                          symtensor::rank_one(u, -2.0, 4)));
  // Generic degree-4 binary forms are off the branch.
  Rng rng(17);
  Eigen::VectorXd c(5);
  for (int p = 0; p < 5; ++p) c[p] = rng.normal();
  CHECK_FALSE(branch_membership(SymTensor(2, 4, c)));
}

TEST_CASE("branch membership rejects unsupported shapes") {
  CHECK_THROWS_AS(branch_membership(SymTensor(3, 3)), std::invalid_argument);
}

TEST_CASE("regime thresholds and classification") {
  // d = 2: thick and filling coincide at r = n.
  auto res = regime(4, 2, 3);
  CHECK(res.r_thick == 4);
  REQUIRE(res.r_fill_exact.has_value());
  CHECK(*res.r_fill_exact == 4);
  CHECK(res.classification == "low_dimensional");
  CHECK(regime(4, 2, 4).classification == "filling");

  // n = 2: r_thick = ceil((d+1)/2), r_fill = d.
  res = regime(2, 3, 2);
  CHECK(res.r_thick == 2);
  REQUIRE(res.r_fill_exact.has_value());
  CHECK(*res.r_fill_exact == 3);
  CHECK(res.classification == "thick");
  CHECK(regime(2, 3, 1).classification == "low_dimensional");
  CHECK(regime(2, 3, 3).classification == "filling");
  CHECK(regime(2, 7, 7).classification == "filling");

  // Generic d >= 3: ceil(binom(n+d-1, d) / n).
  CHECK(regime(3, 3, 1).r_thick == 4);   // ceil(10/3)
  CHECK(regime(4, 3, 1).r_thick == 5);   // ceil(20/4)
  CHECK(regime(6, 3, 1).r_thick == 10);  // ceil(56/6) = 10

  // The four exceptional pairs gain one.
  CHECK(regime(3, 4, 1).r_thick == 6);   // ceil(15/3) = 5, bumped
  CHECK(regime(4, 4, 1).r_thick == 10);  // ceil(35/4) = 9, bumped
  CHECK(regime(5, 4, 1).r_thick == 15);  // ceil(70/5) = 14, bumped
  CHECK(regime(5, 3, 1).r_thick == 8);   // ceil(35/5) = 7, bumped

  // Upper bound doubles the thick threshold; crossing it certifies filling.
  res = regime(3, 4, 12);
  CHECK(res.r_fill_upper == 12);
  CHECK(res.classification == "filling");
  CHECK(regime(3, 4, 6).classification == "thick_or_filling");
  CHECK(regime(3, 4, 5).classification == "low_dimensional");

  // n = 1 is a single monomial: everything fills at r = 1.
  res = regime(1, 5, 1);
  CHECK(res.r_thick == 1);
  CHECK(res.classification == "filling");

  CHECK_THROWS_AS(regime(0, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(regime(2, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(regime(2, 2, 0), std::invalid_argument);
}

TEST_CASE("fiber component counts cover all four cases") {
  CHECK(fiber_components(2, 2, 3) == 0);   // rank 4 > r = 3: empty
  CHECK(fiber_components(1, 0, 3) == 1);   // rank 1 < r = 3: connected
  CHECK(fiber_components(3, 0, 3) == 2);   // full one-sided rank
  CHECK(fiber_components(0, 2, 2) == 2);
  CHECK(fiber_components(2, 1, 3) == 12);  // 4 * binom(3, 2)
  CHECK(fiber_components(1, 1, 2) == 8);   // 4 * binom(2, 1)
  CHECK(fiber_components(2, 2, 4) == 24);  // 4 * binom(4, 2)
  CHECK_THROWS_AS(fiber_components(-1, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(fiber_components(0, 0, 0), std::invalid_argument);
}

TEST_CASE("stiefel nullity matches the coinciding-eigenvalue count") {
  Rng rng(23);
  const Eigen::MatrixXd U = random_orthonormal_rows(rng, 2, 4);
  Eigen::VectorXd alpha(2);
  alpha << 2.0, 1.0;
  auto res = stiefel_nullity_check(alpha, U);
  CHECK(res.predicted == 0);
  CHECK(res.numeric == 0);
  CHECK(res.match);

  alpha << 1.5, 1.5;
  res = stiefel_nullity_check(alpha, U);
  CHECK(res.predicted == 1);
  CHECK(res.numeric == 1);
  CHECK(res.match);

  const Eigen::MatrixXd U3 = random_orthonormal_rows(rng, 3, 5);
  Eigen::VectorXd a3(3);
  a3 << 0.7, 0.7, 0.7;
  res = stiefel_nullity_check(a3, U3);
  CHECK(res.predicted == 3);
  CHECK(res.numeric == 3);
  CHECK(res.match);
}

}  // TEST_SUITE
