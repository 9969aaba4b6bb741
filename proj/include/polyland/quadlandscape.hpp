#pragma once

// The d = 2 loss landscape over symmetric matrices: losses and gradients for the
// supported data metrics, closed-form critical point enumerations (spectral
// truncations for the Frobenius and Gaussian metrics, the rank-one family for
// i.i.d. coordinates), stratified covers of the critical image, and Morse index
// computation by chart finite differences and by focal counting.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polyland/network.hpp"

namespace polyland::quadlandscape {

// ---- metrics ---------------------------------------------------------------------

struct Frobenius {};
struct Gaussian {};
struct IIDMoments {
  double mu2 = 1.0;  // E[y^2]
  double mu4 = 3.0;  // E[y^4]
};
using MetricSpec = std::variant<Frobenius, Gaussian, IIDMoments>;

/// Loss of a student matrix S against teacher T. With X = S - T:
///   frobenius: tr(X^2)
///   gaussian:  tr(X^2) + (1/2) tr(X)^2
///   iid:       2 mu2^2 tr(X^2) + mu2^2 tr(X)^2 + (mu4 - 3 mu2^2) sum_i X_ii^2
double loss(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T, const MetricSpec& metric);

/// Euclidean gradient of `loss` with respect to S (a symmetric matrix).
Eigen::MatrixXd func_gradient(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T,
                              const MetricSpec& metric);

struct ParamGradient {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd W;
};

/// Gradient of loss(tau(alpha, W), T) in network parameters:
///   d/d alpha_i = w_i^T G w_i,   d/d W = 2 diag(alpha) W G,   G = func_gradient.
ParamGradient param_gradient(const network::NetworkParams& params, const Eigen::MatrixXd& T,
                             const MetricSpec& metric);

// ---- closed-form critical points ---------------------------------------------------

struct EYCriticalPoint {
  std::vector<int> subset;   // retained eigenvalue positions of T, descending order
  Eigen::MatrixXd S;
  Eigen::VectorXd lambda;    // eigenvalues of S on the retained positions
  double shift = 0.0;        // additive eigenvalue shift c_I (gaussian metric only)
  std::optional<int> index;  // Morse index within the rank stratum; empty if degenerate
  bool degenerate = false;
  int rank = 0;
};

/// Critical points of the Frobenius loss on the stratum of rank-r matrices:
/// one spectral truncation S_I per size-r subset I of the teacher's eigenvalues,
/// with Morse index #{(i,j) in I x I^c : sigma_i / sigma_j in [0,1]}.
/// Requires a simple teacher spectrum (eigen-gap above 1e-8 * ||T||).
std::vector<EYCriticalPoint> ey_frobenius_critical(const Eigen::MatrixXd& T, int r);

/// Same enumeration for the Gaussian metric: retained eigenvalues are shifted to
/// sigma_i + c_I with c_I = (sum of discarded eigenvalues) / (r + 2), and the
/// index counts (sigma_i + c_I) / (sigma_j + c_I) in [0,1].
std::vector<EYCriticalPoint> ey_gaussian_critical(const Eigen::MatrixXd& T, int r);

/// Union of the rank-r' enumerations for r' = 1..r (the zero matrix is not
/// included). Supports the frobenius and gaussian metrics.
std::vector<EYCriticalPoint> critical_image_cover(const Eigen::MatrixXd& T, int r,
                                                  const MetricSpec& metric);

// ---- rank-one critical points for i.i.d. coordinates -------------------------------

struct IIDCriticalPoint {
  std::vector<int> support;  // coordinates where v is nonzero
  std::vector<int> signs;    // sign of v on the support; the first entry is +1
  int branch = +1;           // S = branch * v v^T
  Eigen::VectorXd v;
  Eigen::MatrixXd S;
  double residual = 0.0;     // ||func_gradient(S) S||_F relative to the problem scale
};

struct IIDCriticalSet {
  std::vector<IIDCriticalPoint> points;
  std::vector<std::string> warnings;
};

/// All rank-one critical points of the i.i.d. loss for a diagonal teacher
/// diag(t). Under the preconditions (t positive with max/min <= 2, entries
/// distinct, mu4 >= 10 n mu2^2) there are exactly (3^n - 1)/2 of them, one per
/// support-and-relative-sign class; precondition violations are reported as
/// warnings and the enumeration still runs. Requires mu4 != 3 mu2^2.
IIDCriticalSet iid_rank1_critical(const Eigen::VectorXd& t, double mu2, double mu4);

// ---- Morse indices ------------------------------------------------------------------

struct StratumIndexResult {
  int index = 0;
  bool degenerate = false;  // a Hessian eigenvalue sits inside the zero band
  Eigen::VectorXd hess_eigenvalues;
};

/// Morse index of the loss restricted to the rank stratum, computed by central
/// finite differences in the spectral chart (alpha, U) -> U^T diag(alpha) U with
/// U having orthonormal rows. The chart point must be critical for the metric.
StratumIndexResult fd_stratum_index(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& U,
                                    const Eigen::MatrixXd& T, const MetricSpec& metric,
                                    double h = 1e-3);

/// Spectral chart of a rank-r matrix: the r eigenpairs of largest magnitude.
void chart_from_matrix(const Eigen::MatrixXd& S, int r, Eigen::VectorXd& alpha,
                       Eigen::MatrixXd& U);

/// Morse index as the number of focal points: eigenvalue coincidences of the
/// pencil alpha T + (1 - alpha) S for alpha in (0, 1], counted with multiplicity.
/// Valid for critical points of the frobenius and gaussian metrics.
int index_by_focal_count(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T,
                         const MetricSpec& metric);

}  // namespace polyland::quadlandscape
