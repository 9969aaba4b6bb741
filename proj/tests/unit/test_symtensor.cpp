#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "polyland/rng.hpp"
#include "polyland/symtensor.hpp"

using namespace polyland;
using namespace polyland::symtensor;

namespace {

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

SymTensor random_tensor(Rng& rng, int n, int d) {
  SymTensor T(n, d);
  Eigen::VectorXd c(T.dim());
  for (int p = 0; p < T.dim(); ++p) c[p] = rng.normal();
  return SymTensor(n, d, c);
}

}  // namespace

TEST_SUITE("symtensor") {

TEST_CASE("binom is exact on small arguments") {
  CHECK(binom(0, 0) == 1.0);
  CHECK(binom(5, 2) == 10.0);
  CHECK(binom(10, 5) == 252.0);
  CHECK(binom(8, 4) == 70.0);
  CHECK(binom(3, 5) == 0.0);
}

TEST_CASE("index table dimension is binom(n+d-1, d)") {
  for (int n = 1; n <= 5; ++n)
    for (int d = 1; d <= 5; ++d) {
      auto table = IndexTable::get(n, d);
      CHECK(table->dim() == static_cast<int>(binom(n + d - 1, d)));
    }
}

TEST_CASE("multiplicity weights sum to n^d") {
  for (int n = 2; n <= 4; ++n)
    for (int d = 1; d <= 4; ++d) {
      auto table = IndexTable::get(n, d);
      double total = 0.0;
      for (int p = 0; p < table->dim(); ++p) total += table->weight(p);
      CHECK(total == doctest::Approx(std::pow(n, d)).epsilon(1e-14));
    }
}

TEST_CASE("rank_of inverts multi_index") {
  auto table = IndexTable::get(3, 4);
  for (int p = 0; p < table->dim(); ++p)
    CHECK(table->rank_of(table->multi_index(p)) == p);
}

TEST_CASE("exponents agree with the multi-index") {
  auto table = IndexTable::get(3, 3);
  for (int p = 0; p < table->dim(); ++p) {
    const auto& idx = table->multi_index(p);
    std::vector<int> exp(3, 0);
    for (int i : idx) exp[i] += 1;
    CHECK(table->exponents(p) == exp);
  }
}

TEST_CASE("rank-one pairing reproduces (v.w)^d") {
  Rng rng(31);
  for (int d : {2, 3, 4}) {
    const auto v = random_vector(rng, 4);
    const auto w = random_vector(rng, 4);
    const SymTensor V = rank_one(v, 1.0, d);
    const SymTensor W = rank_one(w, 1.0, d);
    CHECK(frobenius_inner(V, W) ==
          doctest::Approx(std::pow(v.dot(w), d)).epsilon(1e-12));
    CHECK(frobenius_norm(V) ==
          doctest::Approx(std::pow(v.squaredNorm(), d / 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("packed pairing equals dense entrywise sum") {
  Rng rng(7);
  const SymTensor S = random_tensor(rng, 3, 3);
  const SymTensor T = random_tensor(rng, 3, 3);
  const auto ds = unpack_dense(S);
  const auto dt = unpack_dense(T);
  double dense = 0.0;
  for (std::size_t k = 0; k < ds.size(); ++k) dense += ds[k] * dt[k];
  CHECK(frobenius_inner(S, T) == doctest::Approx(dense).epsilon(1e-12));
}

TEST_CASE("pack_dense inverts unpack_dense") {
  Rng rng(11);
  const SymTensor T = random_tensor(rng, 3, 4);
  const SymTensor back = pack_dense(3, 4, unpack_dense(T));
  CHECK((back.coeffs() - T.coeffs()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("polynomial evaluation matches the rank-one closed form") {
  Rng rng(13);
  const auto v = random_vector(rng, 3);
  const auto x = random_vector(rng, 3);
  for (int d : {2, 3, 5}) {
    const SymTensor T = rank_one(v, 2.5, d);
    CHECK(evaluate_poly(T, x) ==
          doctest::Approx(2.5 * std::pow(v.dot(x), d)).epsilon(1e-12));
    const Eigen::VectorXd g = evaluate_poly_grad(T, x);
    const Eigen::VectorXd expected = 2.5 * d * std::pow(v.dot(x), d - 1) * v;
    CHECK((g - expected).norm() < 1e-10 * (1.0 + expected.norm()));
  }
}

TEST_CASE("evaluate_poly_grad matches finite differences") {
  Rng rng(17);
  const SymTensor T = random_tensor(rng, 3, 4);
  const auto x = random_vector(rng, 3);
  const Eigen::VectorXd g = evaluate_poly_grad(T, x);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const double fd = (evaluate_poly(T, xp) - evaluate_poly(T, xm)) / (2 * h);
    CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("sym_outer is the differential of the rank-one map") {
  // (w + t u)^{(x) d} = w^{(x) d} + t * sym_outer(w, u, d) + O(t^2).
  Rng rng(19);
  const auto w = random_vector(rng, 3);
  const auto u = random_vector(rng, 3);
  const int d = 3;
  const double t = 1e-6;
  const SymTensor fd =
      (1.0 / t) * (rank_one(w + t * u, 1.0, d) - rank_one(w, 1.0, d));
  const SymTensor D = sym_outer(w, u, d);
  CHECK((fd.coeffs() - D.coeffs()).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("pairing a tensor with sym_outer(w, e_j) gives the j-th partial at w") {
  Rng rng(23);
  const SymTensor P = random_tensor(rng, 3, 3);
  const auto w = random_vector(rng, 3);
  const Eigen::VectorXd g = evaluate_poly_grad(P, w);
  for (int j = 0; j < 3; ++j) {
    const SymTensor Dj = sym_outer(w, Eigen::VectorXd::Unit(3, j), 3);
    CHECK(frobenius_inner(P, Dj) == doctest::Approx(g[j]).epsilon(1e-10));
  }
}

TEST_CASE("matrix round trip and rank-one matricization") {
  Rng rng(29);
  Eigen::MatrixXd M(3, 3);
  M << 1, 2, 3, 2, 5, 6, 3, 6, 9;
  const SymTensor T = SymTensor::from_matrix(M);
  CHECK((T.to_matrix() - M).norm() < 1e-14);

  const auto v = random_vector(rng, 3);
  const Eigen::MatrixXd unfolded = matricize_2d(rank_one(v, 1.0, 2));
  CHECK((unfolded - v * v.transpose()).norm() < 1e-12);

  // Degree 4: the unfolding of v^{(x) 4} is the rank-one (v (x) v)(v (x) v)^T.
  const SymTensor Q = rank_one(v, 1.0, 4);
  Eigen::VectorXd vv(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) vv[3 * i + j] = v[i] * v[j];
  CHECK((matricize_2d(Q) - vv * vv.transpose()).norm() < 1e-10);
}

TEST_CASE("coefficient accessors address sorted multi-indices") {
  SymTensor T(2, 3);
  T.set_coeff({0, 0, 1}, 0.25);
  CHECK(T.coeff({0, 0, 1}) == 0.25);
  CHECK(T.coeff({0, 0, 0}) == 0.0);
  // x1^2 x2 as a symmetric tensor: value 1 at x = (1, 1), gradient (2, 1).
  SymTensor P(2, 3);
  P.set_coeff({0, 0, 1}, 1.0 / 3.0);
  Eigen::Vector2d x(1.0, 1.0);
  CHECK(evaluate_poly(P, x) == doctest::Approx(1.0).epsilon(1e-14));
  const Eigen::VectorXd g = evaluate_poly_grad(P, x);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("arithmetic operates coefficientwise") {
  Rng rng(37);
  const SymTensor A = random_tensor(rng, 2, 2);
  const SymTensor B = random_tensor(rng, 2, 2);
  const SymTensor C = 2.0 * A - B;
  for (int p = 0; p < A.dim(); ++p)
    CHECK(C.coeffs()[p] ==
          doctest::Approx(2.0 * A.coeffs()[p] - B.coeffs()[p]).epsilon(1e-14));
}

}  // TEST_SUITE
