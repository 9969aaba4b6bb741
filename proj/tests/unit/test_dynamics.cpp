#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "polyland/dynamics.hpp"
#include "polyland/metrics.hpp"
#include "polyland/quadlandscape.hpp"
#include "polyland/rng.hpp"

using namespace polyland;
using namespace polyland::dynamics;

namespace {

network::NetworkParams random_params(Rng& rng, int r, int n) {
  network::NetworkParams p;
  p.alpha = Eigen::VectorXd(r);
  p.W = Eigen::MatrixXd(r, n);
  for (int i = 0; i < r; ++i) p.alpha[i] = rng.normal();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) p.W(i, j) = rng.normal();
  return p;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("flow charges are alpha^2 minus row norms over d") {
  Rng rng(1);
  const auto p = random_params(rng, 3, 2);
  const Eigen::VectorXd delta = flow_charges(p, 4);
  for (int i = 0; i < 3; ++i)
    CHECK(delta[i] == doctest::Approx(p.alpha[i] * p.alpha[i] -
                                      p.W.row(i).squaredNorm() / 4.0)
                          .epsilon(1e-14));
}

TEST_CASE("one Euler step descends along the parameter gradient") {
  Rng rng(2);
  const auto p = random_params(rng, 2, 3);
  Eigen::MatrixXd T0 = Eigen::MatrixXd::Zero(3, 3);
  T0.diagonal() << 1.0, 0.5, -0.25;
  const auto T = symtensor::SymTensor::from_matrix(T0);
  const auto metric = metrics::frobenius_metric(3, 2);

  FlowConfig fc;
  fc.d = 2;
  fc.step = 1e-7;
  fc.steps = 1;
  fc.method = FlowConfig::Method::Euler;
  fc.record_every = 1;
  const auto rec = gradient_flow(p, T, metric, fc);

  const auto g = quadlandscape::param_gradient(p, T0, quadlandscape::Frobenius{});
  const Eigen::VectorXd da = (rec.final_params.alpha - p.alpha) / fc.step;
  const Eigen::MatrixXd dW = (rec.final_params.W - p.W) / fc.step;
  CHECK((da + g.alpha).norm() < 1e-5 * (1.0 + g.alpha.norm()));
  CHECK((dW + g.W).norm() < 1e-5 * (1.0 + g.W.norm()));
}

TEST_CASE("RK4 flow converges on an expressive width and conserves charges") {
  Rng rng(3);
  const auto p = random_params(rng, 3, 2);
  Eigen::MatrixXd T0(2, 2);
  T0 << 1.0, 0.2, 0.2, 0.5;
  const auto T = symtensor::SymTensor::from_matrix(T0);
  const auto metric = metrics::frobenius_metric(2, 2);

  FlowConfig fc;
  fc.d = 2;
  fc.step = 5e-3;
  fc.steps = 20000;
  fc.record_every = 1000;
  const auto rec = gradient_flow(p, T, metric, fc);
  CHECK_FALSE(rec.diverged);
  CHECK(rec.final_loss < 1e-8);
  CHECK(rec.min_loss <= rec.losses.front());
  // Conserved charges drift only through integration error.
  const Eigen::VectorXd d0 = rec.deltas.front();
  const Eigen::VectorXd dN = rec.deltas.back();
  CHECK((dN - d0).cwiseAbs().maxCoeff() < 1e-7);
  // Times advance by step * record_every.
  REQUIRE(rec.times.size() >= 2);
  CHECK(rec.times[1] - rec.times[0] ==
        doctest::Approx(fc.step * fc.record_every).epsilon(1e-12));
}

TEST_CASE("stop_below_loss ends the integration early") {
  Rng rng(4);
  const auto p = random_params(rng, 3, 2);
  Eigen::MatrixXd T0(2, 2);
  T0 << 1.0, 0.0, 0.0, 0.5;
  const auto T = symtensor::SymTensor::from_matrix(T0);
  const auto metric = metrics::frobenius_metric(2, 2);
  FlowConfig fc;
  fc.d = 2;
  fc.step = 5e-3;
  fc.steps = 100000;
  fc.record_every = 100;
  fc.stop_below_loss = 1e-6;
  const auto rec = gradient_flow(p, T, metric, fc);
  CHECK(rec.final_loss <= 1e-6);
  CHECK(rec.steps_taken < fc.steps);
}

TEST_CASE("trapped teacher represents minus the d-norm") {
  Rng rng(5);
  for (int d : {2, 4}) {
    const auto T = trapped_teacher(2, d);
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd x(2);
      x << rng.normal(), rng.normal();
      CHECK(symtensor::evaluate_poly(T, x) ==
            doctest::Approx(-std::pow(x.squaredNorm(), d / 2.0)).epsilon(1e-11));
    }
  }
  CHECK_THROWS_AS(trapped_teacher(2, 3), std::invalid_argument);
}

TEST_CASE("the circle quadrature represents the trapped teacher exactly") {
  for (int d : {2, 4, 6}) {
    const auto params = trapped_teacher_params(d);
    const auto T = network::tau(params, d);
    const auto expected = trapped_teacher(2, d);
    CHECK((T.coeffs() - expected.coeffs()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(params.alpha.maxCoeff() < 0.0);  // all output weights negative
  }
}

TEST_CASE("trapped demo stays above the barrier while the control escapes") {
  const auto result = trapped_demo(2, 4, 3, 4000, 1e-3, 99);
  CHECK(result.teacher_norm2 > 0.0);
  CHECK(result.trapped_stayed_above);
  CHECK(result.trapped_min_loss >= 0.999 * result.teacher_norm2);
  // The sign-flipped control makes real progress immediately.
  CHECK(result.control.min_loss < 0.5 * result.teacher_norm2);
}

TEST_CASE("diverging target and the two-neuron family") {
  const auto target = diverging_target(3);
  Eigen::Vector2d x(0.7, -1.3);
  CHECK(symtensor::evaluate_poly(target, x) ==
        doctest::Approx(x[0] * x[0] * x[1]).epsilon(1e-13));

  const auto pt = diverging_minimizer(3, 0.1);
  CHECK(pt.tau == doctest::Approx(10.0).epsilon(1e-15));
  // Closed form: sum_{k=2}^{3} binom(3,k) eps^{2k-2} / 9 = (3e-2 + 1e-4) / 9.
  CHECK(pt.loss_formula == doctest::Approx(0.0301 / 9.0).epsilon(1e-13));
  CHECK(pt.loss == doctest::Approx(pt.loss_formula).epsilon(1e-10));
  CHECK(pt.param_norm >= pt.tau / 3.0);

  const auto series = diverging_minimizer_demo(3, {1e-1, 1e-2, 1e-3});
  REQUIRE(series.size() == 3);
  CHECK(series[0].loss > series[1].loss);
  CHECK(series[1].loss > series[2].loss);
  CHECK(series[0].param_norm < series[1].param_norm);
  CHECK(series[1].param_norm < series[2].param_norm);
  CHECK_THROWS_AS(diverging_minimizer(1, 0.1), std::invalid_argument);
}

TEST_CASE("reflect_ones is a symmetric involution sending 1 to -1") {
  const Eigen::MatrixXd V = reflect_ones(5);
  CHECK((V - V.transpose()).norm() < 1e-14);
  CHECK((V * V - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-13);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
  CHECK((V * ones + ones).norm() < 1e-13);
}

TEST_CASE("single-linkage clustering groups nearby matrices") {
  std::vector<Eigen::MatrixXd> mats;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  mats.push_back(A);
  mats.push_back(A + 0.01 * Eigen::MatrixXd::Ones(2, 2));
  Eigen::MatrixXd B = 5.0 * Eigen::MatrixXd::Identity(2, 2);
  mats.push_back(B);
  const auto labels = cluster_students(mats, 0.05);
  REQUIRE(labels.size() == 3);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[0] != labels[2]);
  const int count = *std::max_element(labels.begin(), labels.end()) + 1;
  CHECK(count == 2);
}

TEST_CASE("teacher-student smoke run is deterministic and annotated") {
  TeacherStudentConfig cfg;
  cfg.n = 2;
  cfg.r = 1;
  cfg.teacher = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  cfg.samples = 2000;
  cfg.batch = 100;
  cfg.epochs = 30;
  cfg.lr = 5e-3;
  cfg.trials = 3;
  cfg.seed = 7;
  const auto report = run_teacher_student(cfg);
  REQUIRE(report.trials.size() == 3);
  CHECK(report.cover.size() == 2);  // rank-one truncations of a 2x2 teacher
  for (const auto& t : report.trials) {
    CHECK(t.eigenvalues.size() == 2);
    CHECK(t.eigenvalues[0] >= t.eigenvalues[1]);
    if (!t.diverged) {
      CHECK(t.nearest_cover >= 0);
      CHECK(t.nearest_cover < static_cast<int>(report.cover.size()));
      CHECK(std::isfinite(t.nearest_cover_dist));
    }
  }
  CHECK(report.cluster_count >= 1);
  const auto again = run_teacher_student(cfg);
  for (std::size_t k = 0; k < report.trials.size(); ++k)
    CHECK((report.trials[k].S - again.trials[k].S).norm() == 0.0);
}

TEST_CASE("norm descent drives the Gaussian metric gradient to zero") {
  TeacherStudentConfig cfg;
  cfg.n = 2;
  cfg.r = 2;
  cfg.teacher = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  cfg.optimizer = TeacherStudentConfig::Optimizer::NormDescent;
  cfg.descent_iters = 20000;
  cfg.descent_lr = 5e-3;
  cfg.trials = 2;
  cfg.seed = 11;
  const auto report = run_teacher_student(cfg);
  for (const auto& t : report.trials) {
    CHECK_FALSE(t.diverged);
    CHECK(t.converged);
    // Full width over a PD teacher: descent reaches the global minimum S = T.
    CHECK(t.final_loss < 1e-6);
  }
}

}  // TEST_SUITE
