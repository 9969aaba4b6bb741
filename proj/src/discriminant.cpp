#include "polyland/discriminant.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace polyland::discriminant {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_symmetric_pair(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T) {
  if (S.rows() != S.cols() || T.rows() != T.cols() || S.rows() != T.rows())
    throw std::invalid_argument("pencil endpoints must be square matrices of equal size");
  if (!S.isApprox(S.transpose(), 1e-10) || !T.isApprox(T.transpose(), 1e-10))
    throw std::invalid_argument("pencil endpoints must be symmetric");
}

Eigen::VectorXd pencil_eigenvalues(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T,
                                   double alpha) {
  const Eigen::MatrixXd M = alpha * T + (1.0 - alpha) * S;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();  // ascending
}

double golden_min(const std::function<double(double)>& fn, double lo, double hi,
                  double tol = 1e-12) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = fn(x2);
    }
  }
  return 0.5 * (a + b);
}

long long pairs_of(long long c) { return c * (c - 1) / 2; }

std::vector<FocalPoint> group_crossings(std::vector<double> alphas) {
  std::sort(alphas.begin(), alphas.end());
  std::vector<FocalPoint> out;
  std::size_t k = 0;
  while (k < alphas.size()) {
    std::size_t j = k;
    while (j + 1 < alphas.size() && alphas[j + 1] - alphas[k] <= 1e-10) ++j;
    FocalPoint fp;
    fp.alpha = alphas[k + (j - k) / 2];
    fp.multiplicity = static_cast<int>(j - k + 1);
    out.push_back(fp);
    k = j + 1;
  }
  return out;
}

std::vector<FocalPoint> focal_generic_scan(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T) {
  const int n = static_cast<int>(S.rows());
  const int K = 2001;
  Eigen::MatrixXd vals(n, K);
  Eigen::VectorXd norms(K);
  for (int k = 0; k < K; ++k) {
    const double alpha = static_cast<double>(k) / (K - 1);
    vals.col(k) = pencil_eigenvalues(S, T, alpha);
    norms[k] = (alpha * T + (1.0 - alpha) * S).norm();
  }
  const double coarse = 0.01 * std::max(1.0, S.norm() + T.norm());

  // A pair of branches sitting inside the coincidence tolerance on a macroscopic
  // fraction of the segment is a coincidence interval, not a crossing.
  for (int i = 0; i + 1 < n; ++i) {
    int touching = 0;
    for (int k = 0; k < K; ++k)
      if (vals(i + 1, k) - vals(i, k) <= 1e-10 * std::max(1.0, norms[k])) ++touching;
    if (touching > K / 4)
      throw std::runtime_error(
          "ambiguous pencil: two eigenvalue branches coincide identically");
  }

  std::vector<double> candidates;
  for (int i = 0; i + 1 < n; ++i) {
    auto gap = [&](double alpha) {
      const Eigen::VectorXd ev = pencil_eigenvalues(S, T, alpha);
      return ev[i + 1] - ev[i];
    };
    for (int k = 0; k < K; ++k) {
      const double g = vals(i + 1, k) - vals(i, k);
      const double gl = k > 0 ? vals(i + 1, k - 1) - vals(i, k - 1) : g;
      const double gr = k + 1 < K ? vals(i + 1, k + 1) - vals(i, k + 1) : g;
      if (g > gl || g > gr || g > coarse) continue;
      const double lo = static_cast<double>(std::max(0, k - 1)) / (K - 1);
      const double hi = static_cast<double>(std::min(K - 1, k + 1)) / (K - 1);
      const double alpha_star = golden_min(gap, lo, hi);
      const double thr = 1e-10 * std::max(1.0, (alpha_star * T + (1.0 - alpha_star) * S).norm());
      if (gap(alpha_star) <= thr) candidates.push_back(alpha_star);
    }
  }

  // Merge nearby candidates, then recount the coincidence multiplicity from the
  // eigenvalue clusters at the merged location.
  std::sort(candidates.begin(), candidates.end());
  std::vector<FocalPoint> out;
  std::size_t k = 0;
  while (k < candidates.size()) {
    std::size_t j = k;
    double sum = candidates[k];
    while (j + 1 < candidates.size() && candidates[j + 1] - candidates[j] <= 1e-8) {
      ++j;
      sum += candidates[j];
    }
    const double alpha = sum / static_cast<double>(j - k + 1);
    k = j + 1;
    if (alpha <= 1e-9) continue;  // the coincidence sits at the student end
    const Eigen::VectorXd ev = pencil_eigenvalues(S, T, alpha);
    const double thr = 1e-8 * std::max(1.0, (alpha * T + (1.0 - alpha) * S).norm());
    long long mult = 0;
    int c = 1;
    for (int q = 0; q + 1 <= n - 1; ++q) {
      if (ev[q + 1] - ev[q] <= thr) {
        ++c;
      } else {
        mult += pairs_of(c);
        c = 1;
      }
    }
    mult += pairs_of(c);
    if (mult > 0) {
      FocalPoint fp;
      fp.alpha = std::min(alpha, 1.0);
      fp.multiplicity = static_cast<int>(mult);
      out.push_back(fp);
    }
  }
  return out;
}

// Term table: coefficient * mu2^a * mu4^b * t00^p * t01^q * t11^s.
struct IIDTerm {
  double c;
  int a, b, p, q, s;
};

constexpr IIDTerm kIIDDiscriminant[] = {
    {729, 24, 0, 3, 0, 3},     {1458, 22, 1, 4, 0, 2},    {1458, 22, 1, 2, 0, 4},
    {-2187, 20, 2, 4, 2, 0},   {972, 20, 2, 5, 0, 1},     {486, 20, 2, 2, 2, 2},
    {1458, 20, 2, 3, 0, 3},    {-2187, 20, 2, 0, 2, 4},   {972, 20, 2, 1, 0, 5},
    {216, 18, 3, 6, 0, 0},     {-5184, 18, 3, 3, 2, 1},   {-486, 18, 3, 4, 0, 2},
    {-5184, 18, 3, 1, 2, 3},   {-486, 18, 3, 2, 0, 4},    {216, 18, 3, 0, 0, 6},
    {3132, 16, 4, 4, 2, 0},    {-864, 16, 4, 5, 0, 1},    {6912, 16, 4, 1, 4, 1},
    {-11448, 16, 4, 2, 2, 2},  {-1377, 16, 4, 3, 0, 3},   {3132, 16, 4, 0, 2, 4},
    {-864, 16, 4, 1, 0, 5},    {-216, 14, 5, 6, 0, 0},    {4608, 14, 5, 2, 4, 0},
    {2880, 14, 5, 3, 2, 1},    {-36, 14, 5, 4, 0, 2},     {4608, 14, 5, 0, 4, 2},
    {2880, 14, 5, 1, 2, 3},    {-36, 14, 5, 2, 0, 4},     {-216, 14, 5, 0, 0, 6},
    {-2034, 12, 6, 4, 2, 0},   {-4096, 12, 6, 0, 6, 0},   {360, 12, 6, 5, 0, 1},
    {-1536, 12, 6, 1, 4, 1},   {7620, 12, 6, 2, 2, 2},    {604, 12, 6, 3, 0, 3},
    {-2034, 12, 6, 0, 2, 4},   {360, 12, 6, 1, 0, 5},     {72, 10, 7, 6, 0, 0},
    {-1536, 10, 7, 2, 4, 0},   {-960, 10, 7, 3, 2, 1},    {12, 10, 7, 4, 0, 2},
    {-1536, 10, 7, 0, 4, 2},   {-960, 10, 7, 1, 2, 3},    {12, 10, 7, 2, 0, 4},
    {72, 10, 7, 0, 0, 6},      {348, 8, 8, 4, 2, 0},      {-96, 8, 8, 5, 0, 1},
    {768, 8, 8, 1, 4, 1},      {-1272, 8, 8, 2, 2, 2},    {-153, 8, 8, 3, 0, 3},
    {348, 8, 8, 0, 2, 4},      {-96, 8, 8, 1, 0, 5},      {-8, 6, 9, 6, 0, 0},
    {192, 6, 9, 3, 2, 1},      {18, 6, 9, 4, 0, 2},       {192, 6, 9, 1, 2, 3},
    {18, 6, 9, 2, 0, 4},       {-8, 6, 9, 0, 0, 6},       {-27, 4, 10, 4, 2, 0},
    {12, 4, 10, 5, 0, 1},      {6, 4, 10, 2, 2, 2},       {18, 4, 10, 3, 0, 3},
    {-27, 4, 10, 0, 2, 4},     {12, 4, 10, 1, 0, 5},      {-6, 2, 11, 4, 0, 2},
    {-6, 2, 11, 2, 0, 4},      {1, 0, 12, 3, 0, 3},
};

double ipow(double x, int e) {
  double out = 1.0;
  for (int k = 0; k < e; ++k) out *= x;
  return out;
}

void check_symmetric_2x2(const Eigen::Matrix2d& T) {
  if (std::abs(T(0, 1) - T(1, 0)) > 1e-12 * std::max(1.0, T.norm()))
    throw std::invalid_argument("teacher must be symmetric");
}

}  // namespace

std::vector<FocalPoint> focal_points_on_segment(const Eigen::MatrixXd& S,
                                                const Eigen::MatrixXd& T) {
  check_symmetric_pair(S, T);
  const int n = static_cast<int>(S.rows());
  if (n < 2) return {};

  const double commutator = (S * T - T * S).norm();
  if (commutator <= 1e-10 * std::max(1.0, S.norm() * T.norm())) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    const Eigen::VectorXd t = eig.eigenvalues();
    double min_gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j + 1 < n; ++j) min_gap = std::min(min_gap, t[j + 1] - t[j]);
    if (min_gap > 1e-10 * std::max(1.0, T.norm())) {
      const Eigen::MatrixXd B = eig.eigenvectors().transpose() * S * eig.eigenvectors();
      const Eigen::MatrixXd off = B - Eigen::MatrixXd(B.diagonal().asDiagonal());
      if (off.norm() <= 1e-8 * std::max(1.0, S.norm())) {
        // Joint eigenbasis: branch j of the pencil is alpha t_j + (1 - alpha) s_j,
        // so branch crossings have the closed form below.
        std::vector<double> alphas;
        for (int j = 0; j < n; ++j) {
          for (int q = j + 1; q < n; ++q) {
            const double ds = B(j, j) - B(q, q);
            const double dt = t[j] - t[q];
            const double denom = ds - dt;
            const double tiny = 1e-14 * std::max({1.0, std::abs(ds), std::abs(dt)});
            if (std::abs(denom) <= tiny) {
              if (std::abs(ds) <= tiny)
                throw std::runtime_error(
                    "ambiguous pencil: two eigenvalue branches coincide identically");
              continue;  // parallel branches never cross
            }
            const double alpha = ds / denom;
            if (alpha > 1e-12 && alpha <= 1.0 + 1e-12)
              alphas.push_back(std::min(alpha, 1.0));
          }
        }
        return group_crossings(std::move(alphas));
      }
    }
  }
  return focal_generic_scan(S, T);
}

double discriminant_2x2_frobenius(const Eigen::Matrix2d& T) {
  check_symmetric_2x2(T);
  const double base = (T(0, 0) - T(1, 1)) * (T(0, 0) - T(1, 1)) + 4.0 * T(0, 1) * T(0, 1);
  return base * base * base;
}

double discriminant_2x2_iid(const Eigen::Matrix2d& T, double mu2, double mu4) {
  check_symmetric_2x2(T);
  if (!(mu2 > 0.0)) throw std::invalid_argument("mu2 must be positive");
  double total = 0.0;
  for (const auto& term : kIIDDiscriminant)
    total += term.c * ipow(mu2, term.a) * ipow(mu4, term.b) * ipow(T(0, 0), term.p) *
             ipow(T(0, 1), term.q) * ipow(T(1, 1), term.s);
  return total;
}

double discriminant_2x2_iid_scale(const Eigen::Matrix2d& T, double mu2, double mu4) {
  check_symmetric_2x2(T);
  const double t_max = T.cwiseAbs().maxCoeff();
  double total = 0.0;
  for (const auto& term : kIIDDiscriminant)
    total += std::abs(term.c) * ipow(mu2, term.a) * ipow(std::abs(mu4), term.b) * ipow(t_max, 6);
  return total;
}

std::vector<EllipseCriticalPoint> ellipse_critical_points(const Eigen::Vector2d& t,
                                                          const Eigen::Matrix2d& sigma,
                                                          double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("semi-axes must be positive");
  if (std::abs(sigma(0, 1) - sigma(1, 0)) > 1e-12 * std::max(1.0, sigma.norm()))
    throw std::invalid_argument("sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> sig_eig(sigma, Eigen::EigenvaluesOnly);
  if (sig_eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("sigma must be positive definite");

  auto point_at = [&](double theta) {
    return Eigen::Vector2d(a * std::cos(theta), b * std::sin(theta));
  };
  auto g = [&](double theta) {
    const Eigen::Vector2d e = point_at(theta) - t;
    return double(e.dot(sigma * e));
  };
  auto gp = [&](double theta) {
    const Eigen::Vector2d e = point_at(theta) - t;
    const Eigen::Vector2d sp(-a * std::sin(theta), b * std::cos(theta));
    return 2.0 * sp.dot(sigma * e);
  };
  auto gpp = [&](double theta) {
    const Eigen::Vector2d e = point_at(theta) - t;
    const Eigen::Vector2d sp(-a * std::sin(theta), b * std::cos(theta));
    const Eigen::Vector2d spp(-a * std::cos(theta), -b * std::sin(theta));
    return 2.0 * sp.dot(sigma * sp) + 2.0 * e.dot(sigma * spp);
  };

  const int K = 4096;
  std::vector<double> grid(K), deriv(K);
  double deriv_scale = 0.0, curv_scale = 1.0;
  for (int k = 0; k < K; ++k) {
    grid[k] = 2.0 * kPi * k / K;
    deriv[k] = gp(grid[k]);
    deriv_scale = std::max(deriv_scale, std::abs(deriv[k]));
    curv_scale = std::max(curv_scale, std::abs(gpp(grid[k])));
  }
  const double g_scale = std::max({1.0, g(0.0), g(kPi / 2), g(kPi), g(3 * kPi / 2)});
  if (deriv_scale <= 1e-13 * g_scale)
    throw std::invalid_argument("distance derivative vanishes identically (degenerate landscape)");

  std::vector<double> roots;
  for (int k = 0; k < K; ++k) {
    const double va = deriv[k];
    const double vb = deriv[(k + 1) % K];
    const double ta = grid[k];
    const double tb = k + 1 < K ? grid[k + 1] : 2.0 * kPi;
    if (va == 0.0) {
      roots.push_back(ta);
      continue;
    }
    if (va * vb >= 0.0) continue;
    double lo = ta, hi = tb, flo = va;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const double fm = gp(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((flo < 0.0) == (fm < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique_roots;
  for (double theta : roots) {
    if (!unique_roots.empty() && theta - unique_roots.back() <= 1e-9) continue;
    unique_roots.push_back(theta);
  }
  // The circle wraps: a root near 2 pi duplicates one near 0.
  while (unique_roots.size() > 1 &&
         2.0 * kPi - unique_roots.back() + unique_roots.front() <= 1e-9)
    unique_roots.pop_back();

  std::vector<EllipseCriticalPoint> out;
  for (double theta : unique_roots) {
    EllipseCriticalPoint pt;
    pt.theta = theta;
    pt.point = point_at(theta);
    pt.value = g(theta);
    const double curv = gpp(theta);
    if (std::abs(curv) <= 1e-9 * curv_scale) {
      pt.on_discriminant = true;
    } else {
      pt.index = curv > 0.0 ? 0 : 1;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

StabilityReport stability_probe(const Eigen::Vector2d& t, const Eigen::Matrix2d& sigma,
                                double a, double b, double radius, int trials, Rng& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("probe radius must be positive");
  if (trials < 1) throw std::invalid_argument("need at least one probe trial");

  const auto baseline = ellipse_critical_points(t, sigma, a, b);
  StabilityReport report;
  report.trials = trials;
  report.baseline_count = static_cast<int>(baseline.size());
  for (const auto& pt : baseline) report.baseline_degenerate |= pt.on_discriminant;

  std::vector<int> base_indices;
  for (const auto& pt : baseline)
    if (pt.index) base_indices.push_back(*pt.index);
  std::sort(base_indices.begin(), base_indices.end());

  bool all_ok = !report.baseline_degenerate;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Vector2d dt(rng.uniform(-radius, radius), rng.uniform(-radius, radius));
    Eigen::Matrix2d E;
    E(0, 0) = rng.uniform(-radius, radius);
    E(1, 1) = rng.uniform(-radius, radius);
    E(0, 1) = E(1, 0) = rng.uniform(-radius, radius);
    Eigen::Matrix2d sigma_probe = sigma + E;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> check(sigma_probe, Eigen::EigenvaluesOnly);
    if (check.eigenvalues().minCoeff() <= 0.0) sigma_probe = sigma;

    const auto probe = ellipse_critical_points(t + dt, sigma_probe, a, b);
    report.observed_counts.push_back(static_cast<int>(probe.size()));

    bool ok = probe.size() == baseline.size();
    std::vector<int> probe_indices;
    for (const auto& pt : probe) {
      if (pt.on_discriminant) ok = false;
      if (pt.index) probe_indices.push_back(*pt.index);
    }
    std::sort(probe_indices.begin(), probe_indices.end());
    ok = ok && probe_indices == base_indices;

    if (ok) {
      std::vector<bool> used(probe.size(), false);
      for (const auto& base_pt : baseline) {
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < probe.size(); ++q) {
          if (used[q]) continue;
          const double dist = (probe[q].point - base_pt.point).norm();
          if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<int>(q);
          }
        }
        if (best < 0 || best_dist > 100.0 * radius) {
          ok = false;
          break;
        }
        used[best] = true;
      }
    }
    all_ok = all_ok && ok;
  }
  report.stable = all_ok;
  return report;
}

}  // namespace polyland::discriminant
