#include "polyland/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "polyland/quadlandscape.hpp"

namespace polyland::dynamics {

namespace {

constexpr double kPi = 3.14159265358979323846;

double double_factorial(int k) {
  double out = 1.0;
  for (int v = k; v > 1; v -= 2) out *= v;
  return out;
}

struct FlowState {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd W;
};

FlowState axpy(const FlowState& y, double c, const FlowState& k) {
  return FlowState{y.alpha + c * k.alpha, y.W + c * k.W};
}

double state_norm(const FlowState& s) {
  return std::sqrt(s.alpha.squaredNorm() + s.W.squaredNorm());
}

}  // namespace

Eigen::VectorXd flow_charges(const network::NetworkParams& params, int d) {
  Eigen::VectorXd delta(params.alpha.size());
  for (Eigen::Index i = 0; i < params.alpha.size(); ++i)
    delta[i] = params.alpha[i] * params.alpha[i] - params.W.row(i).squaredNorm() / d;
  return delta;
}

FlowRecord gradient_flow(const network::NetworkParams& init, const symtensor::SymTensor& T,
                         const metrics::MetricOperator& metric, const FlowConfig& config) {
  const int d = config.d;
  const int n = static_cast<int>(init.W.cols());
  const int r = static_cast<int>(init.alpha.size());
  if (init.W.rows() != r) throw std::invalid_argument("alpha length must match rows of W");
  if (T.n() != n || T.d() != d) throw std::invalid_argument("teacher shape mismatch");
  if (metric.n() != n || metric.d() != d) throw std::invalid_argument("metric shape mismatch");
  if (!(config.step > 0.0) || config.steps < 0)
    throw std::invalid_argument("flow needs step > 0 and steps >= 0");

  auto table = symtensor::IndexTable::get(n, d);
  const int dim = static_cast<int>(table->dim());
  Eigen::VectorXd weights(dim);
  for (int p = 0; p < dim; ++p) weights[p] = table->weight(p);

  auto loss_of = [&](const FlowState& s) {
    const Eigen::VectorXd diff =
        network::tau({s.alpha, s.W}, d).coeffs() - T.coeffs();
    return diff.dot(metric.gram() * diff);
  };

  auto rhs = [&](const FlowState& s) {
    const Eigen::VectorXd diff =
        network::tau({s.alpha, s.W}, d).coeffs() - T.coeffs();
    const Eigen::VectorXd packed = 2.0 * (metric.gram() * diff);
    const symtensor::SymTensor P(n, d, packed.cwiseQuotient(weights));
    FlowState out{Eigen::VectorXd(r), Eigen::MatrixXd(r, n)};
    for (int i = 0; i < r; ++i) {
      const Eigen::VectorXd w = s.W.row(i).transpose();
      out.alpha[i] = -symtensor::evaluate_poly(P, w);
      out.W.row(i) = -s.alpha[i] * symtensor::evaluate_poly_grad(P, w).transpose();
    }
    return out;
  };

  FlowState y{init.alpha, init.W};
  FlowRecord record;
  record.min_loss = loss_of(y);

  auto snapshot = [&](double time, double loss) {
    record.times.push_back(time);
    record.losses.push_back(loss);
    record.param_norms.push_back(state_norm(y));
    record.deltas.push_back(flow_charges({y.alpha, y.W}, d));
  };
  snapshot(0.0, record.min_loss);

  const double h = config.step;
  long long k = 0;
  for (; k < config.steps; ++k) {
    if (config.method == FlowConfig::Method::Euler) {
      y = axpy(y, h, rhs(y));
    } else {
      const FlowState k1 = rhs(y);
      const FlowState k2 = rhs(axpy(y, 0.5 * h, k1));
      const FlowState k3 = rhs(axpy(y, 0.5 * h, k2));
      const FlowState k4 = rhs(axpy(y, h, k3));
      y.alpha += (h / 6.0) * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha);
      y.W += (h / 6.0) * (k1.W + 2.0 * k2.W + 2.0 * k3.W + k4.W);
    }
    const double norm = state_norm(y);
    if (!std::isfinite(norm) || norm > config.divergence_threshold) {
      record.diverged = true;
      ++k;
      break;
    }
    const double loss = loss_of(y);
    record.min_loss = std::min(record.min_loss, loss);
    if ((k + 1) % std::max<long long>(1, config.record_every) == 0 && k + 1 < config.steps)
      snapshot((k + 1) * h, loss);
    if (loss <= config.stop_below_loss) {
      ++k;
      break;
    }
  }
  record.steps_taken = k;
  record.final_loss = record.diverged ? std::numeric_limits<double>::quiet_NaN() : loss_of(y);
  snapshot(k * h, record.final_loss);
  record.final_params = network::NetworkParams{y.alpha, y.W};
  return record;
}

symtensor::SymTensor trapped_teacher(int n, int d) {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("trapped teacher needs even d >= 2");
  symtensor::SymTensor T = metrics::gaussian_moment_tensor(n, d / 2);
  T *= -1.0 / double_factorial(d - 1);
  return T;
}

network::NetworkParams trapped_teacher_params(int d) {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("trapped teacher needs even d >= 2");
  const int m = d / 2 + 1;
  const double c_d = double_factorial(d - 1) / double_factorial(d);
  network::NetworkParams params;
  params.alpha = Eigen::VectorXd::Constant(m, -1.0 / (m * c_d));
  params.W.resize(m, 2);
  for (int k = 0; k < m; ++k) {
    const double theta = kPi * k / m;
    params.W(k, 0) = std::cos(theta);
    params.W(k, 1) = std::sin(theta);
  }
  return params;
}

TrappedDemoResult trapped_demo(int n, int d, int r, long long steps, double step,
                               std::uint64_t seed) {
  if (n < 1 || r < 1) throw std::invalid_argument("trapped demo needs n >= 1 and r >= 1");
  const symtensor::SymTensor T = trapped_teacher(n, d);
  const metrics::MetricOperator metric = metrics::frobenius_metric(n, d);

  Rng rng(seed);
  network::NetworkParams init;
  init.W.resize(r, n);
  for (int i = 0; i < r; ++i) {
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j) w[j] = rng.normal();
    init.W.row(i) = w.normalized().transpose();
  }
  // Unit-norm rows make alpha_i = 1/sqrt(d) the balance point; the uniform bump
  // keeps every charge strictly positive.
  init.alpha.resize(r);
  for (int i = 0; i < r; ++i) init.alpha[i] = std::sqrt(1.0 / d) + rng.uniform(0.1, 1.0);

  FlowConfig config;
  config.d = d;
  config.step = step;
  config.steps = steps;
  config.method = FlowConfig::Method::RK4;
  config.record_every = std::max<long long>(1, steps / 200);

  TrappedDemoResult result;
  result.teacher_norm2 = metric.norm2(T);
  result.trapped = gradient_flow(init, T, metric, config);
  result.trapped_min_loss = result.trapped.min_loss;
  result.trapped_stayed_above = result.trapped.min_loss >= 0.999 * result.teacher_norm2;

  network::NetworkParams control = init;
  control.alpha = -control.alpha;
  FlowConfig control_config = config;
  control_config.stop_below_loss = 1e-8;
  result.control = gradient_flow(control, T, metric, control_config);
  return result;
}

symtensor::SymTensor diverging_target(int d) {
  if (d < 2) throw std::invalid_argument("diverging target needs d >= 2");
  symtensor::SymTensor T(2, d);
  std::vector<int> idx(d, 0);
  idx[d - 1] = 1;
  T.set_coeff(idx, 1.0 / d);
  return T;
}

DivergingPoint diverging_minimizer(int d, double epsilon) {
  if (d < 2) throw std::invalid_argument("diverging minimizer needs d >= 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  DivergingPoint pt;
  pt.epsilon = epsilon;
  pt.tau = 1.0 / epsilon;
  pt.params.alpha = Eigen::VectorXd(2);
  pt.params.alpha << pt.tau / d, -pt.tau / d;
  pt.params.W.resize(2, 2);
  pt.params.W << 1.0, epsilon, 1.0, 0.0;

  symtensor::SymTensor diff = network::tau(pt.params, d);
  diff -= diverging_target(d);
  pt.loss = symtensor::frobenius_inner(diff, diff);
  pt.loss_formula = 0.0;
  for (int k = 2; k <= d; ++k)
    pt.loss_formula += symtensor::binom(d, k) * std::pow(epsilon, 2 * k - 2) / (d * d);
  pt.param_norm =
      std::sqrt(pt.params.alpha.squaredNorm() + pt.params.W.squaredNorm());
  return pt;
}

std::vector<DivergingPoint> diverging_minimizer_demo(int d, const std::vector<double>& epsilons) {
  std::vector<DivergingPoint> out;
  out.reserve(epsilons.size());
  for (double eps : epsilons) out.push_back(diverging_minimizer(d, eps));
  return out;
}

Eigen::MatrixXd reflect_ones(int n) {
  if (n < 1) throw std::invalid_argument("reflection needs n >= 1");
  return Eigen::MatrixXd::Identity(n, n) -
         (2.0 / n) * Eigen::MatrixXd::Ones(n, n);
}

namespace {

struct SGDTrainState {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd W;
  bool diverged = false;
};

bool state_blown_up(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& W) {
  return !alpha.allFinite() || !W.allFinite() || alpha.norm() + W.norm() > 1e6;
}

// Full-batch gradient of the empirical square loss; also reports the loss.
double sgd_full_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& alpha, const Eigen::MatrixXd& W,
                         Eigen::VectorXd& g_alpha, Eigen::MatrixXd& g_W) {
  const double N = static_cast<double>(X.rows());
  const Eigen::MatrixXd P = X * W.transpose();
  const Eigen::MatrixXd P2 = P.cwiseProduct(P);
  const Eigen::VectorXd e = P2 * alpha - y;
  g_alpha = (2.0 / N) * (P2.transpose() * e);
  g_W = (4.0 / N) * alpha.asDiagonal() * (P.cwiseProduct(e.replicate(1, P.cols())).transpose() * X);
  return e.squaredNorm() / N;
}

}  // namespace

TeacherStudentReport run_teacher_student(const TeacherStudentConfig& config) {
  const int n = config.n;
  const int r = config.r;
  if (config.teacher.rows() != n || config.teacher.cols() != n)
    throw std::invalid_argument("teacher dimension mismatch");
  if (!config.teacher.isApprox(config.teacher.transpose(), 1e-10))
    throw std::invalid_argument("teacher must be symmetric");
  if (r < 1 || config.trials < 1) throw std::invalid_argument("need r >= 1 and trials >= 1");
  const bool sgd = config.optimizer == TeacherStudentConfig::Optimizer::SGD;
  if (sgd && (config.batch < 1 || config.samples < config.batch))
    throw std::invalid_argument("need samples >= batch >= 1");

  TeacherStudentReport report;
  for (const auto& pt :
       quadlandscape::critical_image_cover(config.teacher, r, quadlandscape::Gaussian{}))
    report.cover.push_back(pt.S);

  // One dataset per experiment: the trials explore the basins of a single
  // empirical landscape from independent initializations. The data stream is
  // disjoint from every per-trial stream.
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  if (sgd) {
    Rng data_rng =
        Rng::stream(config.seed, std::numeric_limits<std::uint64_t>::max());
    const long long N = config.samples;
    X.resize(N, n);
    for (long long s = 0; s < N; ++s)
      for (int j = 0; j < n; ++j)
        X(s, j) = config.data == TeacherStudentConfig::Data::Gaussian
                      ? data_rng.normal()
                      : data_rng.uniform(-1.0, 1.0);
    y = ((X * config.teacher).cwiseProduct(X)).rowwise().sum();
  }

  for (int trial = 0; trial < config.trials; ++trial) {
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(trial));

    Eigen::VectorXd alpha(r);
    Eigen::MatrixXd W(r, n);
    const double wa = 1.0 / std::sqrt(static_cast<double>(n));
    const double aa = 1.0 / std::sqrt(static_cast<double>(r));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < n; ++j) W(i, j) = rng.uniform(-wa, wa);
    for (int i = 0; i < r; ++i) alpha[i] = rng.uniform(-aa, aa);

    TrialResult trial_result;

    if (sgd) {
      const long long N = config.samples;
      std::vector<long long> order(N);
      std::iota(order.begin(), order.end(), 0);
      const long long batches = N / config.batch;
      const int B = config.batch;
      Eigen::MatrixXd Xb(B, n);
      Eigen::VectorXd yb(B);

      for (int epoch = 0; epoch < config.epochs && !trial_result.diverged; ++epoch) {
        rng.shuffle(order);
        for (long long b = 0; b < batches; ++b) {
          for (int j = 0; j < B; ++j) {
            Xb.row(j) = X.row(order[b * B + j]);
            yb[j] = y[order[b * B + j]];
          }
          const Eigen::MatrixXd P = Xb * W.transpose();
          const Eigen::MatrixXd P2 = P.cwiseProduct(P);
          const Eigen::VectorXd e = P2 * alpha - yb;
          const Eigen::VectorXd g_alpha = (2.0 / B) * (P2.transpose() * e);
          const Eigen::MatrixXd g_W =
              (4.0 / B) * alpha.asDiagonal() *
              (P.cwiseProduct(e.replicate(1, r)).transpose() * Xb);
          alpha -= config.lr * g_alpha;
          W -= config.lr * g_W;
        }
        if (state_blown_up(alpha, W)) trial_result.diverged = true;
      }
      if (!trial_result.diverged) {
        Eigen::VectorXd g_alpha;
        Eigen::MatrixXd g_W;
        trial_result.final_loss = sgd_full_gradient(X, y, alpha, W, g_alpha, g_W);
        trial_result.grad_norm =
            std::sqrt(g_alpha.squaredNorm() + g_W.squaredNorm());
      }
    } else {
      quadlandscape::MetricSpec metric = quadlandscape::Gaussian{};
      quadlandscape::ParamGradient g;
      for (long long it = 0; it < config.descent_iters && !trial_result.diverged; ++it) {
        g = quadlandscape::param_gradient({alpha, W}, config.teacher, metric);
        alpha -= config.descent_lr * g.alpha;
        W -= config.descent_lr * g.W;
        if (it % 128 == 0 && state_blown_up(alpha, W)) trial_result.diverged = true;
      }
      if (!trial_result.diverged && state_blown_up(alpha, W)) trial_result.diverged = true;
      if (!trial_result.diverged) {
        const Eigen::MatrixXd S = W.transpose() * alpha.asDiagonal() * W;
        trial_result.final_loss = quadlandscape::loss(S, config.teacher, metric);
        g = quadlandscape::param_gradient({alpha, W}, config.teacher, metric);
        trial_result.grad_norm = std::sqrt(g.alpha.squaredNorm() + g.W.squaredNorm());
      }
    }

    if (!trial_result.diverged) {
      trial_result.S = W.transpose() * alpha.asDiagonal() * W;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(trial_result.S, Eigen::EigenvaluesOnly);
      trial_result.eigenvalues = eig.eigenvalues().reverse();
      trial_result.converged =
          trial_result.grad_norm < 1e-7 * (1.0 + trial_result.final_loss);
      for (std::size_t c = 0; c < report.cover.size(); ++c) {
        const double dist = (trial_result.S - report.cover[c]).norm();
        if (dist < trial_result.nearest_cover_dist) {
          trial_result.nearest_cover_dist = dist;
          trial_result.nearest_cover = static_cast<int>(c);
        }
      }
    }
    report.trials.push_back(std::move(trial_result));
  }

  std::vector<Eigen::MatrixXd> endpoints;
  double dist_sum = 0.0;
  int live = 0;
  for (const auto& trial_result : report.trials) {
    if (trial_result.diverged) continue;
    endpoints.push_back(trial_result.S);
    dist_sum += trial_result.nearest_cover_dist;
    ++live;
  }
  report.mean_nearest_dist = live > 0 ? dist_sum / live : 0.0;
  const auto labels = cluster_students(endpoints, config.cluster_tol);
  report.cluster_count =
      labels.empty() ? 0 : 1 + *std::max_element(labels.begin(), labels.end());
  return report;
}

std::vector<int> cluster_students(const std::vector<Eigen::MatrixXd>& mats, double tol) {
  const int m = static_cast<int>(mats.size());
  std::vector<int> labels(m, -1);
  std::vector<int> reps;
  for (int i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < reps.size(); ++c) {
      if ((mats[i] - mats[reps[c]]).norm() <= tol) {
        labels[i] = static_cast<int>(c);
        break;
      }
    }
    if (labels[i] < 0) {
      labels[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  return labels;
}

}  // namespace polyland::dynamics
