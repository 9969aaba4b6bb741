#pragma once

// Training dynamics on network parameters: gradient flow of the tensor loss
// ||tau(alpha, W) - T||^2 under a moment metric, the trapped and diverging
// teacher demonstrations, and the minibatch teacher-student experiment.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "polyland/metrics.hpp"
#include "polyland/network.hpp"
#include "polyland/rng.hpp"

namespace polyland::dynamics {

// ---- gradient flow -----------------------------------------------------------------

struct FlowConfig {
  int d = 2;
  double step = 1e-3;
  long long steps = 1000;
  enum class Method { Euler, RK4 } method = Method::RK4;
  double divergence_threshold = 1e8;  // on the parameter norm
  long long record_every = 100;
  double stop_below_loss = -std::numeric_limits<double>::infinity();
};

struct FlowRecord {
  std::vector<double> times;
  std::vector<double> losses;
  std::vector<double> param_norms;
  std::vector<Eigen::VectorXd> deltas;  // per-neuron alpha_i^2 - ||w_i||^2 / d
  network::NetworkParams final_params;
  double final_loss = 0.0;
  double min_loss = 0.0;  // over every integration step, not only recorded ones
  bool diverged = false;
  long long steps_taken = 0;
};

/// Integrates the negative gradient flow of ||tau(alpha, W) - T||^2_G where G is
/// the metric induced by `metric`. The per-neuron charges alpha_i^2 - ||w_i||^2/d
/// are conserved along the exact flow.
FlowRecord gradient_flow(const network::NetworkParams& init, const symtensor::SymTensor& T,
                         const metrics::MetricOperator& metric, const FlowConfig& config);

/// Conserved charges of the flow: delta_i = alpha_i^2 - ||w_i||^2 / d.
Eigen::VectorXd flow_charges(const network::NetworkParams& params, int d);

// ---- trapped initialization demo -----------------------------------------------------

/// The degree-d teacher whose polynomial is -||x||^d (d even): every network with
/// positive output weights has nonpositive overlap with it.
symtensor::SymTensor trapped_teacher(int n, int d);

/// Exact width-(d/2 + 1) representation of the trapped teacher on n = 2, with all
/// output weights negative: an equiangular quadrature of the circle.
network::NetworkParams trapped_teacher_params(int d);

struct TrappedDemoResult {
  double teacher_norm2 = 0.0;
  double trapped_min_loss = 0.0;
  bool trapped_stayed_above = false;  // loss never dropped below 99.9% of ||T||^2
  FlowRecord trapped;
  FlowRecord control;  // same start with all output-weight signs flipped
};

/// Runs gradient flow from an initialization with every charge delta_i > 0 and
/// alpha_i > 0 against the trapped teacher: the loss provably stays at or above
/// ||T||^2. The control run flips the output-weight signs and escapes.
TrappedDemoResult trapped_demo(int n, int d, int r, long long steps, double step,
                               std::uint64_t seed);

// ---- diverging minimizer demo --------------------------------------------------------

/// Degree-d monomial teacher x_1^{d-1} x_2 on two variables: the infimum of the
/// width-2 approximation error is zero but is not attained.
symtensor::SymTensor diverging_target(int d);

struct DivergingPoint {
  double epsilon = 0.0;  // 1 / tau
  double tau = 0.0;
  double loss = 0.0;          // squared Frobenius distance to the target
  double loss_formula = 0.0;  // sum_{k=2}^d binom(d,k) eps^{2k-2} / d^2
  double param_norm = 0.0;
  network::NetworkParams params;
};

/// Two-neuron family S(tau) = (tau/d)[w_1^{(x) d} - w_2^{(x) d}] with
/// w_1 = (1, 1/tau), w_2 = (1, 0): loss -> 0 while the parameter norm diverges.
DivergingPoint diverging_minimizer(int d, double epsilon);

std::vector<DivergingPoint> diverging_minimizer_demo(int d, const std::vector<double>& epsilons);

// ---- teacher-student experiment ------------------------------------------------------

/// Symmetric orthogonal reflection I - (2/n) * ones * ones^T.
Eigen::MatrixXd reflect_ones(int n);

struct TeacherStudentConfig {
  int n = 5;
  int r = 3;
  Eigen::MatrixXd teacher;  // n x n symmetric
  enum class Data { Gaussian, Uniform } data = Data::Gaussian;
  long long samples = 50000;
  int batch = 256;
  int epochs = 500;
  double lr = 1e-4;
  int trials = 50;
  std::uint64_t seed = 0;
  enum class Optimizer { SGD, NormDescent } optimizer = Optimizer::SGD;
  long long descent_iters = 10000;  // norm-descent variant
  double descent_lr = 1e-3;
  double cluster_tol = 0.05;
};

struct TrialResult {
  Eigen::MatrixXd S;            // end-to-end student matrix W^T diag(alpha) W
  Eigen::VectorXd eigenvalues;  // of S, descending
  double final_loss = 0.0;
  double grad_norm = 0.0;
  double nearest_cover_dist = std::numeric_limits<double>::infinity();
  int nearest_cover = -1;
  bool converged = false;
  bool diverged = false;
};

struct TeacherStudentReport {
  std::vector<TrialResult> trials;
  std::vector<Eigen::MatrixXd> cover;  // Gaussian-metric critical points, ranks 1..r
  int cluster_count = 0;
  double mean_nearest_dist = 0.0;  // over non-divergent trials
};

/// Trains `trials` independent students and locates each endpoint against the
/// closed-form critical point cover of the Gaussian-metric landscape. Trial k
/// draws its data and initialization from the decorrelated stream (seed, k).
TeacherStudentReport run_teacher_student(const TeacherStudentConfig& config);

/// Greedy dedup under Frobenius distance: each matrix takes the label of the
/// first representative within tol, otherwise it becomes a new representative.
/// Returns labels in input order; the distinct count is max + 1.
std::vector<int> cluster_students(const std::vector<Eigen::MatrixXd>& mats, double tol);

}  // namespace polyland::dynamics
