#pragma once

// Moment tensors M_{D,2d} for the supported distribution families and the induced
// inner products on Sym^d(R^n), plus the empirical (ERM) inner product and its
// nondegeneracy test. All constructors are pure; MetricOperator is immutable.

#include <Eigen/Dense>
#include <memory>
#include <variant>
#include <vector>

#include "polyland/symtensor.hpp"

namespace polyland::metrics {

using symtensor::SymTensor;

// ---- distribution specifications -------------------------------------------------

/// Rotationally invariant distribution pinned down by its 2d-th radial moment E[rho^{2d}].
/// Scale anchored so that the standard Gaussian radial moments reproduce the Gaussian
/// moment tensor exactly (coordinate moments (2d-1)!!).
struct RotInvariant {
  double radial_moment_2d = 0.0;
};

/// Coordinates i.i.d. with marginal moments mu[s] = E[y^s], s = 0..2d; mu[0] must be 1.
struct IID {
  std::vector<double> moments;
};

/// Centered Gaussian with covariance sigma (symmetric PSD).
struct ColoredGaussian {
  Eigen::MatrixXd sigma;
};

struct MomentSpec;

/// Convex combination of sub-distributions.
struct Mixture {
  std::vector<double> weights;
  std::vector<std::shared_ptr<MomentSpec>> parts;
};

/// Uniform distribution over a finite point list.
struct Empirical {
  std::vector<Eigen::VectorXd> points;
};

struct MomentSpec {
  std::variant<RotInvariant, IID, ColoredGaussian, Mixture, Empirical> variant;
};

// ---- moment tensors and metrics --------------------------------------------------

/// 2d-th moment tensor of the distribution described by `spec` on R^n.
SymTensor moment_tensor(const MomentSpec& spec, int n, int d);

/// Standard-Gaussian moment tensor (covariance identity), degree 2d.
SymTensor gaussian_moment_tensor(int n, int d);

/// Bilinear form on packed Sym^d(R^n): inner(S,T) = packed(S)^T * gram * packed(T).
class MetricOperator {
public:
  MetricOperator(int n, int d, Eigen::MatrixXd gram);

  int n() const { return n_; }
  int d() const { return d_; }
  const Eigen::MatrixXd& gram() const { return gram_; }

  double inner(const SymTensor& S, const SymTensor& T) const;
  double norm2(const SymTensor& S) const { return inner(S, S); }

  /// Packed-coordinate representation of the tensor A with <A, X>_F = d/dX inner-based
  /// squared distance; used by gradient flows. Returns grad of ||S - T||^2 as a SymTensor.
  SymTensor distance2_gradient(const SymTensor& S, const SymTensor& T) const;

  /// Smallest eigenvalue of the Gram matrix (PSD up to tolerance for genuine moments).
  double min_eigenvalue() const;

private:
  int n_, d_;
  Eigen::MatrixXd gram_;
};

/// Induced inner product <S,T>_D = <S tensor T, M>_F as a packed Gram matrix.
MetricOperator metric_from_moments(const SymTensor& M);

/// The plain Frobenius inner product as a MetricOperator (diagonal Gram of weights).
MetricOperator frobenius_metric(int n, int d);

/// (1/N) sum_i p_S(x_i) p_T(x_i).
double erm_inner(const std::vector<Eigen::VectorXd>& points, const SymTensor& S,
                 const SymTensor& T);

/// True iff the evaluation map Sym^d -> R^N has full numerical rank binom(n+d-1,d)
/// (singular values above 1e-10 of the largest), i.e. no degree-d form vanishes on all points.
bool erm_nondegenerate(const std::vector<Eigen::VectorXd>& points, int n, int d);

}  // namespace polyland::metrics
