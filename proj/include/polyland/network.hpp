#pragma once

// Shallow polynomial networks as points of Sym^d(R^n): the parameterization map
// tau, its differential, the critical-locus test with polynomial witnesses, the
// width regimes, fiber component counts, and the Stiefel nullity cross-check.

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "polyland/symtensor.hpp"

namespace polyland::network {

using symtensor::SymTensor;

/// Width-r network: f(x) = sum_i alpha[i] * (w_i . x)^d with w_i the rows of W.
struct NetworkParams {
  Eigen::VectorXd alpha;  // r
  Eigen::MatrixXd W;      // r x n
};

/// End-to-end tensor tau(alpha, W) = sum_i alpha[i] w_i^{tensor d}.
SymTensor tau(const NetworkParams& params, int d);

/// Differential of tau in packed coordinates: dim(Sym^d) x (r + r*n).
/// Column order: d alpha_0 .. d alpha_{r-1}, then dW_{0,0} .. dW_{0,n-1}, dW_{1,0}, ...
Eigen::MatrixXd d_tau(const NetworkParams& params, int d);

struct CritLocusResult {
  bool in_crit = false;
  int rank = 0;           // numerical rank of d tau
  int expected_rank = 0;  // min(dim Sym^d, r + r*n)
  std::optional<SymTensor> witness;  // unit-Frobenius polynomial annihilating the image
  double max_grad_norm = 0.0;        // max_i ||grad witness(w_i)|| over active neurons
};

/// Tests whether (alpha, W) lies on the critical locus of tau: the differential
/// drops rank, certified by a polynomial P with <P, image d tau>_F = 0 whose
/// gradient vanishes at every active neuron direction.
CritLocusResult crit_locus_test(const NetworkParams& params, int d, double grad_tol = 1e-8);

/// Necessary condition for T to lie on the non-dominant branch: for d = 2 the
/// matrix rank is at most n-1; for n = 2 the middle catalecticant has rank at
/// most floor(d/2). Other (n, d) are not supported.
bool branch_membership(const SymTensor& T, double rank_tol = 1e-10);

struct RegimeResult {
  int r_thick = 0;
  int r_fill_lower = 0;
  int r_fill_upper = 0;
  std::optional<int> r_fill_exact;
  std::string classification;  // low_dimensional | thick | filling | thick_or_filling
};

/// Width thresholds for tau_r on Sym^d(R^n) and the regime of a given width r.
RegimeResult regime(int n, int d, int r);

/// Number of connected components of the fiber over a symmetric matrix with
/// signature (s_plus, s_minus) under the width-r quadratic parameterization.
long long fiber_components(int s_plus, int s_minus, int r);

struct NullityResult {
  int predicted = 0;  // #{i < j : alpha_i == alpha_j}
  int numeric = 0;    // ambient_dim - rank of the finite-difference Jacobian
  int jacobian_rank = 0;
  int ambient_dim = 0;
  bool match = false;
};

/// Finite-difference check of the differential's nullity for the spectral
/// parameterization (alpha, U) -> U^T diag(alpha) U with U having orthonormal
/// rows; the kernel dimension equals the number of coinciding-eigenvalue pairs.
NullityResult stiefel_nullity_check(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& U,
                                    double h = 1e-5, double svd_tol = 1e-7);

}  // namespace polyland::network
