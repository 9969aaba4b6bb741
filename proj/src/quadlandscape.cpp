#include "polyland/quadlandscape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "polyland/discriminant.hpp"

namespace polyland::quadlandscape {

namespace {

void check_shapes(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T) {
  if (S.rows() != S.cols() || T.rows() != T.cols() || S.rows() != T.rows())
    throw std::invalid_argument("student and teacher must be square matrices of equal size");
}

void check_symmetric(const Eigen::MatrixXd& T, const char* what) {
  if (T.rows() != T.cols() || !T.isApprox(T.transpose(), 1e-10))
    throw std::invalid_argument(std::string(what) + " must be symmetric");
}

// Eigenvalues sorted descending, eigenvector signs fixed so the largest-magnitude
// component is positive.
void eig_descending(const Eigen::MatrixXd& T, Eigen::VectorXd& evals, Eigen::MatrixXd& evecs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
  const int n = static_cast<int>(T.rows());
  evals.resize(n);
  evecs.resize(n, n);
  for (int k = 0; k < n; ++k) {
    evals[k] = eig.eigenvalues()[n - 1 - k];
    Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - k);
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    evecs.col(k) = v;
  }
}

void require_simple_spectrum(const Eigen::VectorXd& evals, const Eigen::MatrixXd& T) {
  const double scale = std::max(1.0, T.norm());
  for (Eigen::Index i = 0; i + 1 < evals.size(); ++i)
    if (std::abs(evals[i] - evals[i + 1]) <= 1e-8 * scale)
      throw std::invalid_argument("teacher spectrum must be simple for the enumeration");
}

void for_each_subset(int n, int r, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> subset(r);
  for (int i = 0; i < r; ++i) subset[i] = i;
  while (true) {
    fn(subset);
    int k = r - 1;
    while (k >= 0 && subset[k] == n - r + k) --k;
    if (k < 0) break;
    ++subset[k];
    for (int j = k + 1; j < r; ++j) subset[j] = subset[j - 1] + 1;
  }
}

Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("retraction point is rank deficient");
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

// Shared enumeration body for the two spectral-truncation families. The shift
// callback maps the discarded eigenvalue sum to the additive eigenvalue shift.
std::vector<EYCriticalPoint> spectral_truncations(const Eigen::MatrixXd& T, int r,
                                                  bool gaussian_shift) {
  check_symmetric(T, "teacher");
  const int n = static_cast<int>(T.rows());
  if (r < 1 || r > n) throw std::invalid_argument("rank must satisfy 1 <= r <= n");
  Eigen::VectorXd sigma;
  Eigen::MatrixXd U;
  eig_descending(T, sigma, U);
  require_simple_spectrum(sigma, T);
  const double zero_tol = 1e-12 * std::max(1.0, T.norm());

  std::vector<EYCriticalPoint> points;
  for_each_subset(n, r, [&](const std::vector<int>& subset) {
    std::vector<bool> in_subset(n, false);
    for (int i : subset) in_subset[i] = true;
    double discarded = 0.0;
    for (int j = 0; j < n; ++j)
      if (!in_subset[j]) discarded += sigma[j];
    const double c = gaussian_shift ? discarded / (r + 2) : 0.0;

    EYCriticalPoint pt;
    pt.subset = subset;
    pt.rank = r;
    pt.shift = c;
    pt.lambda.resize(r);
    pt.S = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < r; ++k) {
      pt.lambda[k] = sigma[subset[k]] + c;
      pt.S += pt.lambda[k] * U.col(subset[k]) * U.col(subset[k]).transpose();
    }

    // The index ratio test degenerates when a shifted eigenvalue vanishes on
    // either side of the split.
    for (int j = 0; j < n; ++j)
      if (std::abs(sigma[j] + c) <= zero_tol) pt.degenerate = true;
    if (!pt.degenerate) {
      int index = 0;
      for (int i : subset) {
        for (int j = 0; j < n; ++j) {
          if (in_subset[j]) continue;
          const double ratio = (sigma[i] + c) / (sigma[j] + c);
          if (ratio >= 0.0 && ratio <= 1.0) ++index;
        }
      }
      pt.index = index;
    }
    points.push_back(std::move(pt));
  });
  return points;
}

}  // namespace

double loss(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T, const MetricSpec& metric) {
  check_shapes(S, T);
  const Eigen::MatrixXd X = S - T;
  if (std::holds_alternative<Frobenius>(metric)) return X.squaredNorm();
  if (std::holds_alternative<Gaussian>(metric)) {
    const double tr = X.trace();
    return X.squaredNorm() + 0.5 * tr * tr;
  }
  const auto& iid = std::get<IIDMoments>(metric);
  const double mu2sq = iid.mu2 * iid.mu2;
  const double tr = X.trace();
  return 2.0 * mu2sq * X.squaredNorm() + mu2sq * tr * tr +
         (iid.mu4 - 3.0 * mu2sq) * X.diagonal().squaredNorm();
}

Eigen::MatrixXd func_gradient(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T,
                              const MetricSpec& metric) {
  check_shapes(S, T);
  const Eigen::MatrixXd X = S - T;
  const int n = static_cast<int>(X.rows());
  if (std::holds_alternative<Frobenius>(metric)) return 2.0 * X;
  if (std::holds_alternative<Gaussian>(metric))
    return 2.0 * X + X.trace() * Eigen::MatrixXd::Identity(n, n);
  const auto& iid = std::get<IIDMoments>(metric);
  const double mu2sq = iid.mu2 * iid.mu2;
  Eigen::MatrixXd G = 4.0 * mu2sq * X;
  G += 2.0 * mu2sq * X.trace() * Eigen::MatrixXd::Identity(n, n);
  G += (2.0 * iid.mu4 - 6.0 * mu2sq) * X.diagonal().asDiagonal().toDenseMatrix();
  return G;
}

ParamGradient param_gradient(const network::NetworkParams& params, const Eigen::MatrixXd& T,
                             const MetricSpec& metric) {
  const Eigen::MatrixXd S = network::tau(params, 2).to_matrix();
  const Eigen::MatrixXd G = func_gradient(S, T, metric);
  ParamGradient out;
  out.alpha = (params.W * G * params.W.transpose()).diagonal();
  out.W = 2.0 * params.alpha.asDiagonal() * params.W * G;
  return out;
}

std::vector<EYCriticalPoint> ey_frobenius_critical(const Eigen::MatrixXd& T, int r) {
  return spectral_truncations(T, r, false);
}

std::vector<EYCriticalPoint> ey_gaussian_critical(const Eigen::MatrixXd& T, int r) {
  return spectral_truncations(T, r, true);
}

std::vector<EYCriticalPoint> critical_image_cover(const Eigen::MatrixXd& T, int r,
                                                  const MetricSpec& metric) {
  if (std::holds_alternative<IIDMoments>(metric))
    throw std::invalid_argument("critical image cover supports the frobenius and gaussian metrics");
  const bool gaussian = std::holds_alternative<Gaussian>(metric);
  std::vector<EYCriticalPoint> out;
  for (int rr = 1; rr <= r; ++rr) {
    auto level = spectral_truncations(T, rr, gaussian);
    out.insert(out.end(), std::make_move_iterator(level.begin()),
               std::make_move_iterator(level.end()));
  }
  return out;
}

IIDCriticalSet iid_rank1_critical(const Eigen::VectorXd& t, double mu2, double mu4) {
  const int n = static_cast<int>(t.size());
  if (n < 1 || n > 20) throw std::invalid_argument("need 1 <= n <= 20 for the enumeration");
  if (!(mu2 > 0.0)) throw std::invalid_argument("mu2 must be positive");
  const double mu2sq = mu2 * mu2;
  if (std::abs(mu4 - 3.0 * mu2sq) <= 1e-12 * std::max(1.0, std::abs(mu4)))
    throw std::invalid_argument("mu4 = 3 mu2^2 makes the rank-one equations degenerate");

  IIDCriticalSet out;
  if (mu4 < 10.0 * n * mu2sq)
    out.warnings.push_back("mu4 below 10 n mu2^2: completeness of the enumeration is not guaranteed");
  bool positive = true;
  for (int i = 0; i < n; ++i) positive = positive && t[i] > 0.0;
  if (!positive) out.warnings.push_back("teacher entries are not all positive");
  const double t_abs_max = t.cwiseAbs().maxCoeff();
  for (int i = 0; i < n && t_abs_max > 0.0; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(t[i] - t[j]) <= 1e-12 * t_abs_max) {
        out.warnings.push_back("teacher entries are not distinct");
        i = n;
        break;
      }
  if (positive && t.maxCoeff() > 2.0 * t.minCoeff())
    out.warnings.push_back("teacher spread exceeds max/min = 2");

  const Eigen::MatrixXd T = t.asDiagonal();
  const double t_total = t.sum();
  bool negative_branch_seen = false;

  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> support;
    double t_support = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        support.push_back(i);
        t_support += t[i];
      }
    }
    const int m = static_cast<int>(support.size());
    for (int eps : {+1, -1}) {
      const double gamma = eps * (mu4 - mu2sq) / (mu4 - 3.0 * mu2sq);
      const double beta =
          (eps * mu2sq * t_total - 3.0 * mu2sq * gamma * t_support) / (mu4 + 3.0 * (m - 1) * mu2sq);
      bool valid = true;
      for (int i : support) valid = valid && beta + gamma * t[i] > 0.0;
      if (!valid) continue;
      if (eps == -1) negative_branch_seen = true;

      // One point per relative-sign class: fix the first support coordinate positive.
      for (unsigned signbits = 0; signbits < (1u << (m - 1)); ++signbits) {
        IIDCriticalPoint pt;
        pt.support = support;
        pt.branch = eps;
        pt.signs.assign(m, 1);
        for (int k = 1; k < m; ++k)
          if (signbits & (1u << (k - 1))) pt.signs[k] = -1;
        pt.v = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < m; ++k)
          pt.v[support[k]] = pt.signs[k] * std::sqrt(beta + gamma * t[support[k]]);
        pt.S = eps * pt.v * pt.v.transpose();

        const Eigen::MatrixXd R =
            func_gradient(pt.S, T, IIDMoments{mu2, mu4}) * pt.S;
        const double scale = std::max(mu2sq, std::abs(mu4)) * std::pow(T.norm() + pt.S.norm(), 2);
        pt.residual = R.norm() / std::max(scale, 1e-300);
        out.points.push_back(std::move(pt));
      }
    }
  }
  if (negative_branch_seen)
    out.warnings.push_back("negative-branch critical points present");
  return out;
}

void chart_from_matrix(const Eigen::MatrixXd& S, int r, Eigen::VectorXd& alpha,
                       Eigen::MatrixXd& U) {
  check_symmetric(S, "chart matrix");
  const int n = static_cast<int>(S.rows());
  if (r < 1 || r > n) throw std::invalid_argument("chart rank must satisfy 1 <= r <= n");
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  eig_descending(S, evals, evecs);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(evals[a]) > std::abs(evals[b]);
  });
  alpha.resize(r);
  U.resize(r, n);
  for (int k = 0; k < r; ++k) {
    alpha[k] = evals[order[k]];
    U.row(k) = evecs.col(order[k]).transpose();
  }
}

StratumIndexResult fd_stratum_index(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& U,
                                    const Eigen::MatrixXd& T, const MetricSpec& metric,
                                    double h) {
  const int r = static_cast<int>(alpha.size());
  const int n = static_cast<int>(U.cols());
  if (U.rows() != r) throw std::invalid_argument("alpha length must match rows of U");
  if (T.rows() != n || T.cols() != n) throw std::invalid_argument("teacher dimension mismatch");
  if (!(U * U.transpose()).isApprox(Eigen::MatrixXd::Identity(r, r), 1e-6))
    throw std::invalid_argument("U must have orthonormal rows");

  const int skew_dim = r * (r - 1) / 2;
  const int compl_dim = r * (n - r);
  const int D = r + skew_dim + compl_dim;

  Eigen::JacobiSVD<Eigen::MatrixXd> usvd(U, Eigen::ComputeFullV);
  const Eigen::MatrixXd Q = usvd.matrixV().rightCols(n - r);  // n x (n-r)

  auto value = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd a = alpha + z.head(r);
    Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(r, r);
    int pos = r;
    for (int i = 0; i < r; ++i) {
      for (int j = i + 1; j < r; ++j) {
        Omega(i, j) = z[pos];
        Omega(j, i) = -z[pos];
        ++pos;
      }
    }
    Eigen::MatrixXd Z = Omega * U;
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < n - r; ++k) Z.row(i) += z[pos++] * Q.col(k).transpose();
    const Eigen::MatrixXd A = U + Z;
    const Eigen::MatrixXd Uz = inv_sqrt_spd(A * A.transpose()) * A;
    const Eigen::MatrixXd S = Uz.transpose() * a.asDiagonal() * Uz;
    return loss(S, T, metric);
  };

  const double g0 = value(Eigen::VectorXd::Zero(D));
  Eigen::MatrixXd H(D, D);
  for (int m = 0; m < D; ++m) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(D);
    e[m] = h;
    H(m, m) = (value(e) - 2.0 * g0 + value(-e)) / (h * h);
    for (int l = m + 1; l < D; ++l) {
      Eigen::VectorXd ep = Eigen::VectorXd::Zero(D);
      ep[m] = h;
      ep[l] = h;
      Eigen::VectorXd em = Eigen::VectorXd::Zero(D);
      em[m] = h;
      em[l] = -h;
      const double mixed = (value(ep) - value(em) - value(-em) + value(-ep)) / (4.0 * h * h);
      H(m, l) = mixed;
      H(l, m) = mixed;
    }
  }

  StratumIndexResult out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  out.hess_eigenvalues = eig.eigenvalues();
  const double thr = 1e-4 * std::max(1.0, out.hess_eigenvalues.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < out.hess_eigenvalues.size(); ++k) {
    if (out.hess_eigenvalues[k] < -thr) ++out.index;
    if (std::abs(out.hess_eigenvalues[k]) <= thr) out.degenerate = true;
  }
  return out;
}

int index_by_focal_count(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T,
                         const MetricSpec& metric) {
  if (std::holds_alternative<IIDMoments>(metric))
    throw std::invalid_argument("focal index requires the frobenius or gaussian metric");
  check_shapes(S, T);
  int total = 0;
  for (const auto& fp : discriminant::focal_points_on_segment(S, T)) total += fp.multiplicity;
  return total;
}

}  // namespace polyland::quadlandscape
