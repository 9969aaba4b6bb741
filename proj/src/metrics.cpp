#include "polyland/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polyland::metrics {

namespace {

double double_factorial(int k) {
  double out = 1.0;
  for (int v = k; v > 1; v -= 2) out *= v;
  return out;
}

// E[prod x_{idx_p}] for x ~ N(0, sigma), via the perfect-matching expansion.
// idx is a sorted 0-based multi-index of even length.
double gaussian_matching_moment(const std::vector<int>& idx, const Eigen::MatrixXd& sigma) {
  const int m = static_cast<int>(idx.size());
  if (m == 0) return 1.0;
  if (m % 2 != 0) return 0.0;
  // Recursive pairing of the first element with each remaining one.
  std::vector<int> rest(idx.begin() + 1, idx.end());
  double total = 0.0;
  for (int k = 0; k < m - 1; ++k) {
    std::vector<int> sub;
    sub.reserve(m - 2);
    for (int q = 0; q < m - 1; ++q)
      if (q != k) sub.push_back(rest[q]);
    total += sigma(idx[0], rest[k]) * gaussian_matching_moment(sub, sigma);
  }
  return total;
}

SymTensor iid_moment_tensor(const IID& dist, int n, int d) {
  const int s_max = 2 * d;
  if (static_cast<int>(dist.moments.size()) != s_max + 1)
    throw std::invalid_argument("iid moment list must have length 2d+1");
  if (std::abs(dist.moments[0] - 1.0) > 1e-12)
    throw std::invalid_argument("iid moment mu_0 must equal 1");
  auto table = symtensor::IndexTable::get(n, s_max);
  Eigen::VectorXd coeffs(table->dim());
  for (int p = 0; p < table->dim(); ++p) {
    const auto expo = table->exponents(p);
    double value = 1.0;
    for (int j = 0; j < n; ++j) value *= dist.moments[expo[j]];
    coeffs[p] = value;
  }
  return SymTensor(n, s_max, std::move(coeffs));
}

SymTensor colored_gaussian_moment_tensor(const ColoredGaussian& dist, int n, int d) {
  if (dist.sigma.rows() != n || dist.sigma.cols() != n)
    throw std::invalid_argument("covariance must be n x n");
  if (!dist.sigma.isApprox(dist.sigma.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
  auto table = symtensor::IndexTable::get(n, 2 * d);
  Eigen::VectorXd coeffs(table->dim());
  for (int p = 0; p < table->dim(); ++p)
    coeffs[p] = gaussian_matching_moment(table->multi_index(p), dist.sigma);
  return SymTensor(n, 2 * d, std::move(coeffs));
}

SymTensor rot_invariant_moment_tensor(const RotInvariant& dist, int n, int d) {
  if (!(dist.radial_moment_2d > 0.0))
    throw std::invalid_argument("radial moment E[rho^{2d}] must be positive");
  // E[rho^{2d}] for the standard Gaussian is prod_{k=0}^{d-1} (n + 2k).
  double chi = 1.0;
  for (int k = 0; k < d; ++k) chi *= n + 2 * k;
  SymTensor M = gaussian_moment_tensor(n, d);
  M *= dist.radial_moment_2d / chi;
  return M;
}

SymTensor empirical_moment_tensor(const Empirical& dist, int n, int d) {
  if (dist.points.empty()) throw std::invalid_argument("empirical distribution needs points");
  SymTensor M(n, 2 * d);
  for (const auto& x : dist.points) {
    if (x.size() != n) throw std::invalid_argument("sample dimension mismatch");
    M += symtensor::rank_one(x, 1.0, 2 * d);
  }
  M *= 1.0 / static_cast<double>(dist.points.size());
  return M;
}

}  // namespace

SymTensor gaussian_moment_tensor(int n, int d) {
  // Coordinate moments of N(0, I): product over coordinates of (e_j - 1)!! for even
  // exponents, zero otherwise. Specialization of the matching expansion, done directly.
  auto table = symtensor::IndexTable::get(n, 2 * d);
  Eigen::VectorXd coeffs(table->dim());
  for (int p = 0; p < table->dim(); ++p) {
    const auto expo = table->exponents(p);
    double value = 1.0;
    for (int j = 0; j < n; ++j) {
      if (expo[j] % 2 != 0) {
        value = 0.0;
        break;
      }
      value *= double_factorial(expo[j] - 1);
    }
    coeffs[p] = value;
  }
  return SymTensor(n, 2 * d, std::move(coeffs));
}

SymTensor moment_tensor(const MomentSpec& spec, int n, int d) {
  if (n < 1 || d < 1) throw std::invalid_argument("moment_tensor needs n >= 1, d >= 1");
  if (const auto* rot = std::get_if<RotInvariant>(&spec.variant))
    return rot_invariant_moment_tensor(*rot, n, d);
  if (const auto* iid = std::get_if<IID>(&spec.variant)) return iid_moment_tensor(*iid, n, d);
  if (const auto* cg = std::get_if<ColoredGaussian>(&spec.variant))
    return colored_gaussian_moment_tensor(*cg, n, d);
  if (const auto* mix = std::get_if<Mixture>(&spec.variant)) {
    if (mix->weights.size() != mix->parts.size() || mix->parts.empty())
      throw std::invalid_argument("mixture weights/parts mismatch");
    double total = 0.0;
    for (double w : mix->weights) {
      if (w < 0.0) throw std::invalid_argument("mixture weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("mixture weights must sum to 1");
    SymTensor M(n, 2 * d);
    for (std::size_t k = 0; k < mix->parts.size(); ++k) {
      if (!mix->parts[k]) throw std::invalid_argument("null mixture component");
      SymTensor part = moment_tensor(*mix->parts[k], n, d);
      part *= mix->weights[k];
      M += part;
    }
    return M;
  }
  const auto& emp = std::get<Empirical>(spec.variant);
  return empirical_moment_tensor(emp, n, d);
}

MetricOperator::MetricOperator(int n, int d, Eigen::MatrixXd gram) : n_(n), d_(d), gram_(std::move(gram)) {
  const int dim = static_cast<int>(symtensor::IndexTable::get(n, d)->dim());
  if (gram_.rows() != dim || gram_.cols() != dim)
    throw std::invalid_argument("gram matrix has wrong dimension");
}

double MetricOperator::inner(const SymTensor& S, const SymTensor& T) const {
  if (S.n() != n_ || S.d() != d_ || T.n() != n_ || T.d() != d_)
    throw std::invalid_argument("tensor shape does not match metric");
  return S.coeffs().dot(gram_ * T.coeffs());
}

SymTensor MetricOperator::distance2_gradient(const SymTensor& S, const SymTensor& T) const {
  if (S.n() != n_ || S.d() != d_ || T.n() != n_ || T.d() != d_)
    throw std::invalid_argument("tensor shape does not match metric");
  // d/dS <S-T, S-T>_G in packed coordinates is 2 G (s - t); returned packed.
  Eigen::VectorXd g = 2.0 * (gram_ * (S.coeffs() - T.coeffs()));
  return SymTensor(n_, d_, std::move(g));
}

double MetricOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

MetricOperator metric_from_moments(const SymTensor& M) {
  if (M.d() % 2 != 0) throw std::invalid_argument("moment tensor must have even degree");
  const int n = M.n();
  const int d = M.d() / 2;
  auto table = symtensor::IndexTable::get(n, d);
  const int dim = static_cast<int>(table->dim());
  const auto& big = M.table();
  Eigen::MatrixXd gram(dim, dim);
  std::vector<int> joined(2 * d);
  for (int a = 0; a < dim; ++a) {
    const auto& ia = table->multi_index(a);
    for (int b = a; b < dim; ++b) {
      const auto& ib = table->multi_index(b);
      std::merge(ia.begin(), ia.end(), ib.begin(), ib.end(), joined.begin());
      const double value =
          table->weight(a) * table->weight(b) * M.coeffs()[big.rank_of(joined)];
      gram(a, b) = value;
      gram(b, a) = value;
    }
  }
  return MetricOperator(n, d, std::move(gram));
}

MetricOperator frobenius_metric(int n, int d) {
  auto table = symtensor::IndexTable::get(n, d);
  const int dim = static_cast<int>(table->dim());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  for (int p = 0; p < dim; ++p) gram(p, p) = table->weight(p);
  return MetricOperator(n, d, std::move(gram));
}

double erm_inner(const std::vector<Eigen::VectorXd>& points, const SymTensor& S,
                 const SymTensor& T) {
  if (points.empty()) throw std::invalid_argument("erm_inner needs points");
  double total = 0.0;
  for (const auto& x : points)
    total += symtensor::evaluate_poly(S, x) * symtensor::evaluate_poly(T, x);
  return total / static_cast<double>(points.size());
}

bool erm_nondegenerate(const std::vector<Eigen::VectorXd>& points, int n, int d) {
  if (points.empty()) return false;
  auto table = symtensor::IndexTable::get(n, d);
  const int dim = static_cast<int>(table->dim());
  const int N = static_cast<int>(points.size());
  if (N < dim) return false;
  // A[i][a] = weight_a * monomial_a(x_i): rows span the evaluation functionals.
  Eigen::MatrixXd A(N, dim);
  for (int i = 0; i < N; ++i) {
    const auto& x = points[i];
    if (x.size() != n) throw std::invalid_argument("sample dimension mismatch");
    for (int a = 0; a < dim; ++a) {
      const auto expo = table->exponents(a);
      double mono = 1.0;
      for (int j = 0; j < n; ++j)
        for (int e = 0; e < expo[j]; ++e) mono *= x[j];
      A(i, a) = table->weight(a) * mono;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return false;
  return sv[sv.size() - 1] > 1e-10 * sv[0];
}

}  // namespace polyland::metrics
