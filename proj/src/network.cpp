#include "polyland/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polyland::network {

namespace {

void validate_params(const NetworkParams& params) {
  if (params.alpha.size() == 0 || params.W.rows() == 0 || params.W.cols() == 0)
    throw std::invalid_argument("network parameters must be nonempty");
  if (params.alpha.size() != params.W.rows())
    throw std::invalid_argument("alpha length must match the number of rows of W");
}

int numerical_rank(const Eigen::MatrixXd& A, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > rel_tol * sv[0]) ++rank;
  return rank;
}

// Inverse symmetric square root of an SPD matrix.
Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("retraction point is rank deficient");
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

SymTensor tau(const NetworkParams& params, int d) {
  validate_params(params);
  const int n = static_cast<int>(params.W.cols());
  SymTensor T(n, d);
  for (Eigen::Index i = 0; i < params.alpha.size(); ++i)
    T += symtensor::rank_one(params.W.row(i).transpose(), params.alpha[i], d);
  return T;
}

Eigen::MatrixXd d_tau(const NetworkParams& params, int d) {
  validate_params(params);
  const int r = static_cast<int>(params.alpha.size());
  const int n = static_cast<int>(params.W.cols());
  const int dim = static_cast<int>(symtensor::IndexTable::get(n, d)->dim());
  Eigen::MatrixXd J(dim, r + r * n);
  for (int i = 0; i < r; ++i) {
    const Eigen::VectorXd w = params.W.row(i).transpose();
    J.col(i) = symtensor::rank_one(w, 1.0, d).coeffs();
    for (int j = 0; j < n; ++j) {
      SymTensor dir = symtensor::sym_outer(w, Eigen::VectorXd::Unit(n, j), d);
      dir *= params.alpha[i];
      J.col(r + i * n + j) = dir.coeffs();
    }
  }
  return J;
}

CritLocusResult crit_locus_test(const NetworkParams& params, int d, double grad_tol) {
  validate_params(params);
  const int r = static_cast<int>(params.alpha.size());
  const int n = static_cast<int>(params.W.cols());
  auto table = symtensor::IndexTable::get(n, d);
  const int dim = static_cast<int>(table->dim());

  Eigen::MatrixXd J = d_tau(params, d);
  // Rank and null vectors are judged in Frobenius geometry: scale row p by
  // sqrt(weight_p) so Euclidean operations on the matrix match tensor inner products.
  Eigen::VectorXd sqrt_w(dim);
  for (int p = 0; p < dim; ++p) sqrt_w[p] = std::sqrt(table->weight(p));
  Eigen::MatrixXd Jw = sqrt_w.asDiagonal() * J;

  CritLocusResult result;
  result.expected_rank = std::min<int>(dim, r + r * n);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jw, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > 1e-10 * sigma_max) ++rank;
  result.rank = rank;
  result.in_crit = rank < result.expected_rank;

  if (result.in_crit) {
    // Left-null direction of the weighted matrix (the rank deficiency guarantees
    // one); unit Euclidean norm there is unit Frobenius norm for the polynomial.
    const Eigen::VectorXd left = svd.matrixU().col(dim - 1);
    Eigen::VectorXd packed = left.cwiseQuotient(sqrt_w);
    SymTensor witness(n, d, std::move(packed));
    double worst = 0.0;
    for (int i = 0; i < r; ++i) {
      if (params.alpha[i] == 0.0) continue;
      const Eigen::VectorXd g =
          symtensor::evaluate_poly_grad(witness, params.W.row(i).transpose());
      worst = std::max(worst, g.norm());
    }
    result.max_grad_norm = worst;
    result.in_crit = result.in_crit && worst <= grad_tol;
    result.witness = std::move(witness);
  }
  return result;
}

bool branch_membership(const SymTensor& T, double rank_tol) {
  if (T.d() == 2) {
    const int rank = numerical_rank(T.to_matrix(), rank_tol);
    return rank <= T.n() - 1;
  }
  if (T.n() == 2) {
    const int d = T.d();
    const int half = d / 2;
    Eigen::MatrixXd H(half + 1, d - half + 1);
    for (int i = 0; i <= half; ++i) {
      for (int j = 0; j <= d - half; ++j) {
        const int ones = i + j;  // exponent of the second variable
        std::vector<int> idx(d, 0);
        std::fill(idx.begin() + (d - ones), idx.end(), 1);
        H(i, j) = T.coeff(idx);
      }
    }
    return numerical_rank(H, rank_tol) <= half;
  }
  throw std::invalid_argument("branch membership test supports d = 2 or n = 2 only");
}

RegimeResult regime(int n, int d, int r) {
  if (n < 1 || d < 1 || r < 1)
    throw std::invalid_argument("regime needs n >= 1, d >= 1, r >= 1");
  RegimeResult out;
  if (n == 1) {
    out.r_thick = 1;
    out.r_fill_exact = 1;
  } else if (d == 2) {
    out.r_thick = n;
    out.r_fill_exact = n;
  } else {
    const double dim = symtensor::binom(n + d - 1, d);
    out.r_thick = static_cast<int>(std::ceil(dim / n - 1e-12));
    const bool exceptional = (d == 4 && (n == 3 || n == 4 || n == 5)) || (d == 3 && n == 5);
    if (exceptional) ++out.r_thick;
    if (n == 2) out.r_fill_exact = d;
  }
  if (out.r_fill_exact) {
    out.r_fill_lower = *out.r_fill_exact;
    out.r_fill_upper = *out.r_fill_exact;
  } else {
    out.r_fill_lower = out.r_thick;
    out.r_fill_upper = 2 * out.r_thick;
  }

  if (r < out.r_thick) {
    out.classification = "low_dimensional";
  } else if (out.r_fill_exact) {
    out.classification = r < *out.r_fill_exact ? "thick" : "filling";
  } else if (r >= out.r_fill_upper) {
    out.classification = "filling";
  } else {
    out.classification = "thick_or_filling";
  }
  return out;
}

long long fiber_components(int s_plus, int s_minus, int r) {
  if (s_plus < 0 || s_minus < 0 || r < 1)
    throw std::invalid_argument("fiber_components needs s_plus, s_minus >= 0 and r >= 1");
  const int rank = s_plus + s_minus;
  if (rank > r) return 0;
  if (rank < r) return 1;
  if (s_plus == 0 || s_minus == 0) return 2;
  return 4 * static_cast<long long>(std::llround(symtensor::binom(r, s_plus)));
}

NullityResult stiefel_nullity_check(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& U,
                                    double h, double svd_tol) {
  const int r = static_cast<int>(alpha.size());
  const int n = static_cast<int>(U.cols());
  if (U.rows() != r) throw std::invalid_argument("alpha length must match rows of U");
  if (r > n) throw std::invalid_argument("need r <= n for orthonormal rows");
  if (!(U * U.transpose()).isApprox(Eigen::MatrixXd::Identity(r, r), 1e-8))
    throw std::invalid_argument("U must have orthonormal rows");

  NullityResult out;
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j)
      if (alpha[i] == alpha[j]) ++out.predicted;

  const int skew_dim = r * (r - 1) / 2;
  const int compl_dim = r * (n - r);
  out.ambient_dim = r + skew_dim + compl_dim;

  // Orthonormal basis of the orthogonal complement of the row space of U.
  Eigen::JacobiSVD<Eigen::MatrixXd> usvd(U, Eigen::ComputeFullV);
  const Eigen::MatrixXd Q = usvd.matrixV().rightCols(n - r);  // n x (n-r)

  auto value = [&](const Eigen::VectorXd& a, const Eigen::MatrixXd& V) {
    NetworkParams p{a, V};
    return tau(p, 2).coeffs();
  };
  auto retract = [&](const Eigen::MatrixXd& A) -> Eigen::MatrixXd {
    return inv_sqrt_spd(A * A.transpose()) * A;
  };

  const int dim = static_cast<int>(symtensor::IndexTable::get(n, 2)->dim());
  Eigen::MatrixXd J(dim, out.ambient_dim);
  int col = 0;
  auto fd_column = [&](const Eigen::VectorXd& da, const Eigen::MatrixXd& Z) {
    const Eigen::VectorXd plus = value(alpha + h * da, retract(U + h * Z));
    const Eigen::VectorXd minus = value(alpha - h * da, retract(U - h * Z));
    J.col(col++) = (plus - minus) / (2.0 * h);
  };

  const Eigen::MatrixXd Zero = Eigen::MatrixXd::Zero(r, n);
  for (int i = 0; i < r; ++i) fd_column(Eigen::VectorXd::Unit(r, i), Zero);
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(r, r);
      Omega(i, j) = 1.0;
      Omega(j, i) = -1.0;
      fd_column(Eigen::VectorXd::Zero(r), Omega * U);
    }
  }
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < n - r; ++k) {
      Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(r, n);
      Z.row(i) = Q.col(k).transpose();
      fd_column(Eigen::VectorXd::Zero(r), Z);
    }
  }

  out.jacobian_rank = numerical_rank(J, svd_tol);
  out.numeric = out.ambient_dim - out.jacobian_rank;
  out.match = out.numeric == out.predicted;
  return out;
}

}  // namespace polyland::network
