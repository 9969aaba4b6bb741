#include "polyland/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "polyland/discriminant.hpp"
#include "polyland/dynamics.hpp"
#include "polyland/json_io.hpp"
#include "polyland/metrics.hpp"
#include "polyland/network.hpp"
#include "polyland/quadlandscape.hpp"
#include "polyland/rng.hpp"
#include "polyland/symtensor.hpp"

namespace polyland::cli {
namespace {

using io::Json;
using Clock = std::chrono::steady_clock;

/// Raised for argument combinations CLI11 cannot express declaratively; maps to exit 64.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunContext {
  std::string subcommand;
  Json config = Json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();
};

void emit_manifest(const RunContext& ctx) {
  const double wall_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - ctx.start).count();
  Json doc;
  doc["schema"] = io::kSchema;
  doc["kind"] = "run_manifest";
  doc["subcommand"] = ctx.subcommand;
  doc["version"] = io::kVersion;
  doc["seed"] = ctx.seed ? Json(*ctx.seed) : Json(nullptr);
  doc["config"] = ctx.config;
  doc["wall_ms"] = wall_ms;
  doc["outputs"] = ctx.outputs;
  std::cerr << doc.dump() << "\n";
}

void save_doc(const Json& doc, const std::string& path, RunContext& ctx) {
  io::save_json(doc, path);
  ctx.outputs.push_back(path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, RunContext& ctx) {
  if (path == "-") throw UsageError("--csv needs a file path");
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
  ctx.outputs.push_back(path);
}

std::string fmt(double x) { return io::format_double(x); }

void apply_threads(int threads) {
  if (threads <= 0) return;
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  Eigen::setNbThreads(std::min(threads, hw));
}

Json matrix_rows(const Eigen::MatrixXd& M) { return io::matrix_to_json(M)["data"]; }

// ---- regime -------------------------------------------------------------------------

void add_regime(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("regime", "width regime of tau_r on Sym^d(R^n)");
  struct Opts {
    int n = 0, d = 0, r = 0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--n", opt->n, "ambient dimension")->required()->check(CLI::PositiveNumber);
  sub->add_option("--d", opt->d, "tensor degree")->required()->check(CLI::PositiveNumber);
  sub->add_option("--r", opt->r, "network width")->required()->check(CLI::PositiveNumber);
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "regime";
    ctx.config = {{"n", opt->n}, {"d", opt->d}, {"r", opt->r}, {"out", opt->out}};
    const auto result = network::regime(opt->n, opt->d, opt->r);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "regime";
    doc["n"] = opt->n;
    doc["d"] = opt->d;
    doc["r"] = opt->r;
    doc.update(io::regime_to_json(result));
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- fiber --------------------------------------------------------------------------

void add_fiber(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("fiber", "fiber component count over a signature");
  struct Opts {
    int s_plus = 0, s_minus = 0, r = 0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--s-plus", opt->s_plus, "positive eigenvalue count")
      ->required()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--s-minus", opt->s_minus, "negative eigenvalue count")
      ->required()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--r", opt->r, "network width")->required()->check(CLI::PositiveNumber);
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "fiber";
    ctx.config = {{"s_plus", opt->s_plus}, {"s_minus", opt->s_minus}, {"r", opt->r}};
    const long long components = network::fiber_components(opt->s_plus, opt->s_minus, opt->r);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "fiber";
    doc["s_plus"] = opt->s_plus;
    doc["s_minus"] = opt->s_minus;
    doc["r"] = opt->r;
    doc["components"] = components;
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- moments ------------------------------------------------------------------------

void add_moments(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("moments", "2d-th moment tensor of a distribution");
  struct Opts {
    std::string dist;
    int n = 0, d = 0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--dist", opt->dist, "distribution spec JSON path")->required();
  sub->add_option("--n", opt->n, "ambient dimension")->required()->check(CLI::PositiveNumber);
  sub->add_option("--d", opt->d, "half-degree: the tensor has degree 2d")
      ->required()
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "moments";
    ctx.config = {{"dist", opt->dist}, {"n", opt->n}, {"d", opt->d}};
    const auto spec = io::moment_spec_from_json(io::load_json(opt->dist));
    const auto M = metrics::moment_tensor(spec, opt->n, opt->d);
    save_doc(io::symtensor_to_json(M), opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- metric -------------------------------------------------------------------------

void add_metric(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("metric", "Gram matrix of the induced metric on Sym^d");
  struct Opts {
    std::string dist;
    bool frobenius = false;
    int n = 0, d = 0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--dist", opt->dist, "distribution spec JSON path");
  sub->add_flag("--frobenius", opt->frobenius, "use the plain Frobenius metric");
  sub->add_option("--n", opt->n, "ambient dimension")->required()->check(CLI::PositiveNumber);
  sub->add_option("--d", opt->d, "symmetric tensor degree")
      ->required()
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "metric";
    if (opt->frobenius == !opt->dist.empty())
      throw UsageError("pass exactly one of --dist and --frobenius");
    ctx.config = {{"dist", opt->dist},
                  {"frobenius", opt->frobenius},
                  {"n", opt->n},
                  {"d", opt->d}};
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "metric";
    doc["n"] = opt->n;
    doc["d"] = opt->d;
    if (opt->frobenius) {
      const auto op = metrics::frobenius_metric(opt->n, opt->d);
      doc["source"] = "frobenius";
      doc["gram"] = matrix_rows(op.gram());
      doc["min_eigenvalue"] = op.min_eigenvalue();
    } else {
      const auto spec = io::moment_spec_from_json(io::load_json(opt->dist));
      const auto op =
          metrics::metric_from_moments(metrics::moment_tensor(spec, opt->n, opt->d));
      doc["source"] = io::moment_spec_to_json(spec);
      doc["gram"] = matrix_rows(op.gram());
      doc["min_eigenvalue"] = op.min_eigenvalue();
    }
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- critpoints ---------------------------------------------------------------------

void add_critpoints(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand(
      "critpoints", "closed-form critical points of the d = 2 landscape");
  struct Opts {
    std::string teacher;
    std::string metric = "frobenius";
    int r = 0;
    bool cover = false;
    double mu2 = 1.0, mu4 = 3.0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--teacher", opt->teacher, "teacher matrix JSON path")->required();
  sub->add_option("--metric", opt->metric, "frobenius | gaussian | iid")
      ->check(CLI::IsMember({"frobenius", "gaussian", "iid"}));
  sub->add_option("--r", opt->r, "rank stratum (frobenius/gaussian)");
  sub->add_flag("--cover", opt->cover, "enumerate every rank 1..r (frobenius/gaussian)");
  sub->add_option("--mu2", opt->mu2, "second coordinate moment (iid)");
  sub->add_option("--mu4", opt->mu4, "fourth coordinate moment (iid)");
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "critpoints";
    ctx.config = {{"teacher", opt->teacher}, {"metric", opt->metric}, {"r", opt->r},
                  {"cover", opt->cover},     {"mu2", opt->mu2},       {"mu4", opt->mu4}};
    const Eigen::MatrixXd T = io::teacher_matrix_from_json(io::load_json(opt->teacher));
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "critical_points";
    doc["metric"] = opt->metric;
    if (opt->metric == "iid") {
      const double scale = std::max(1.0, T.norm());
      for (Eigen::Index i = 0; i < T.rows(); ++i)
        for (Eigen::Index j = 0; j < T.cols(); ++j)
          if (i != j && std::abs(T(i, j)) > 1e-12 * scale)
            throw std::invalid_argument("iid enumeration needs a diagonal teacher");
      doc["mu2"] = opt->mu2;
      doc["mu4"] = opt->mu4;
      const auto set =
          quadlandscape::iid_rank1_critical(T.diagonal(), opt->mu2, opt->mu4);
      doc.update(io::iid_set_to_json(set));
    } else {
      if (opt->r <= 0) throw UsageError("--r is required for this metric");
      doc["r"] = opt->r;
      doc["cover"] = opt->cover;
      std::vector<quadlandscape::EYCriticalPoint> points;
      if (opt->cover) {
        const quadlandscape::MetricSpec ms =
            opt->metric == "frobenius"
                ? quadlandscape::MetricSpec{quadlandscape::Frobenius{}}
                : quadlandscape::MetricSpec{quadlandscape::Gaussian{}};
        points = quadlandscape::critical_image_cover(T, opt->r, ms);
      } else if (opt->metric == "frobenius") {
        points = quadlandscape::ey_frobenius_critical(T, opt->r);
      } else {
        points = quadlandscape::ey_gaussian_critical(T, opt->r);
      }
      doc["count"] = points.size();
      doc["points"] = io::ey_points_to_json(points);
    }
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- iid-count ----------------------------------------------------------------------

void add_iid_count(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand(
      "iid-count", "rank-one critical point count for a diagonal teacher");
  struct Opts {
    std::vector<double> t;
    double mu2 = 0.0, mu4 = 0.0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--t", opt->t, "diagonal teacher entries, comma separated")
      ->required()
      ->delimiter(',');
  sub->add_option("--mu2", opt->mu2, "second coordinate moment")->required();
  sub->add_option("--mu4", opt->mu4, "fourth coordinate moment")->required();
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "iid-count";
    ctx.config = {{"t", opt->t}, {"mu2", opt->mu2}, {"mu4", opt->mu4}};
    const int n = static_cast<int>(opt->t.size());
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t[i] = opt->t[i];
    const auto set = quadlandscape::iid_rank1_critical(t, opt->mu2, opt->mu4);
    long long expected = 1;
    for (int i = 0; i < n; ++i) expected *= 3;
    expected = (expected - 1) / 2;
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "iid_count";
    doc["n"] = n;
    doc["mu2"] = opt->mu2;
    doc["mu4"] = opt->mu4;
    doc["t"] = opt->t;
    doc["count"] = set.points.size();
    doc["expected"] = expected;
    doc["warnings"] = set.warnings;
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- train --------------------------------------------------------------------------

dynamics::TeacherStudentConfig parse_train_config(const Json& cfg) {
  dynamics::TeacherStudentConfig tc;
  tc.n = cfg.at("n").get<int>();
  tc.r = cfg.at("r").get<int>();
  tc.teacher = io::teacher_matrix_from_json(cfg.at("teacher"));
  if (tc.teacher.rows() != tc.n || tc.teacher.cols() != tc.n)
    throw std::invalid_argument("train config: teacher must be n x n");
  if (cfg.contains("data")) {
    const auto& data = cfg.at("data");
    const auto type = data.at("type").get<std::string>();
    if (type == "gaussian")
      tc.data = dynamics::TeacherStudentConfig::Data::Gaussian;
    else if (type == "uniform")
      tc.data = dynamics::TeacherStudentConfig::Data::Uniform;
    else
      throw std::invalid_argument("train config: unknown data type " + type);
    if (data.contains("samples")) tc.samples = data.at("samples").get<long long>();
  }
  if (cfg.contains("optimizer")) {
    const auto& o = cfg.at("optimizer");
    const auto type = o.at("type").get<std::string>();
    if (type == "sgd") {
      tc.optimizer = dynamics::TeacherStudentConfig::Optimizer::SGD;
      if (o.contains("batch")) tc.batch = o.at("batch").get<int>();
      if (o.contains("epochs")) tc.epochs = o.at("epochs").get<int>();
      if (o.contains("lr")) tc.lr = o.at("lr").get<double>();
    } else if (type == "norm_descent") {
      tc.optimizer = dynamics::TeacherStudentConfig::Optimizer::NormDescent;
      if (o.contains("iters")) tc.descent_iters = o.at("iters").get<long long>();
      if (o.contains("lr")) tc.descent_lr = o.at("lr").get<double>();
    } else {
      throw std::invalid_argument("train config: unknown optimizer type " + type);
    }
  }
  if (cfg.contains("trials")) tc.trials = cfg.at("trials").get<int>();
  if (cfg.contains("cluster_tol")) tc.cluster_tol = cfg.at("cluster_tol").get<double>();
  return tc;
}

Json train_config_echo(const dynamics::TeacherStudentConfig& tc) {
  Json echo;
  echo["n"] = tc.n;
  echo["r"] = tc.r;
  echo["data"] =
      tc.data == dynamics::TeacherStudentConfig::Data::Gaussian ? "gaussian" : "uniform";
  echo["samples"] = tc.samples;
  if (tc.optimizer == dynamics::TeacherStudentConfig::Optimizer::SGD) {
    echo["optimizer"] = "sgd";
    echo["batch"] = tc.batch;
    echo["epochs"] = tc.epochs;
    echo["lr"] = tc.lr;
  } else {
    echo["optimizer"] = "norm_descent";
    echo["iters"] = tc.descent_iters;
    echo["lr"] = tc.descent_lr;
  }
  echo["trials"] = tc.trials;
  echo["cluster_tol"] = tc.cluster_tol;
  echo["seed"] = tc.seed;
  return echo;
}

void add_train(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("train", "teacher-student trials against the cover");
  struct Opts {
    std::string config;
    std::uint64_t seed = 0;
    int trials = 0;
    std::string out = "-";
    std::string csv;
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--config", opt->config, "experiment config JSON path")->required();
  sub->add_option("--seed", opt->seed, "master seed")->required();
  sub->add_option("--trials", opt->trials, "override the trial count")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", opt->out, "report JSON path ('-' = stdout)");
  sub->add_option("--csv", opt->csv, "per-trial CSV path");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "train";
    ctx.seed = opt->seed;
    auto tc = parse_train_config(io::load_json(opt->config));
    tc.seed = opt->seed;
    if (opt->trials > 0) tc.trials = opt->trials;
    ctx.config = train_config_echo(tc);
    ctx.config["config"] = opt->config;
    const auto report = dynamics::run_teacher_student(tc);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "train_report";
    doc["config"] = train_config_echo(tc);
    doc.update(io::teacher_student_report_to_json(report));
    save_doc(doc, opt->out, ctx);
    if (!opt->csv.empty()) {
      std::vector<std::string> header = {"trial",        "final_loss", "grad_norm",
                                         "nearest_cover_dist", "nearest_cover",
                                         "converged",    "diverged"};
      for (int i = 1; i <= tc.n; ++i) header.push_back("eig_" + std::to_string(i));
      std::vector<std::vector<std::string>> rows;
      for (std::size_t k = 0; k < report.trials.size(); ++k) {
        const auto& t = report.trials[k];
        std::vector<std::string> row = {std::to_string(k),
                                        fmt(t.final_loss),
                                        fmt(t.grad_norm),
                                        fmt(t.nearest_cover_dist),
                                        std::to_string(t.nearest_cover),
                                        t.converged ? "1" : "0",
                                        t.diverged ? "1" : "0"};
        for (Eigen::Index i = 0; i < t.eigenvalues.size(); ++i)
          row.push_back(fmt(t.eigenvalues[i]));
        rows.push_back(std::move(row));
      }
      write_csv(opt->csv, header, rows, ctx);
    }
    emit_manifest(ctx);
  });
}

// ---- flow ---------------------------------------------------------------------------

void add_flow(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("flow", "gradient flow of the tensor loss");
  struct Opts {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string csv;
  };
  auto opt = std::make_shared<Opts>();
  auto* seed_opt = sub->add_option("--seed", opt->seed, "initialization seed");
  sub->add_option("--config", opt->config, "flow config JSON path")->required();
  sub->add_option("--out", opt->out, "record JSON path ('-' = stdout)");
  sub->add_option("--csv", opt->csv, "trajectory CSV path");
  sub->callback([&ctx, &threads, opt, seed_opt] {
    apply_threads(threads);
    ctx.subcommand = "flow";
    const Json cfg = io::load_json(opt->config);
    const int n = cfg.at("n").get<int>();
    const int d = cfg.at("d").get<int>();
    if (n < 1 || d < 1) throw std::invalid_argument("flow config: n and d must be positive");

    symtensor::SymTensor T;
    const auto& teacher = cfg.at("teacher");
    if (teacher.is_object() && teacher.contains("coeffs")) {
      T = io::symtensor_from_json(teacher);
    } else if (teacher.is_object() && teacher.contains("type") &&
               teacher.at("type").get<std::string>() == "params") {
      T = network::tau(io::params_from_json(teacher), d);
    } else {
      if (d != 2)
        throw std::invalid_argument("flow config: matrix teachers are degree 2 only");
      T = symtensor::SymTensor::from_matrix(io::teacher_matrix_from_json(teacher));
    }
    if (T.n() != n || T.d() != d)
      throw std::invalid_argument("flow config: teacher shape disagrees with n, d");

    std::string metric_kind = "frobenius";
    metrics::MetricOperator metric = metrics::frobenius_metric(n, d);
    if (cfg.contains("metric") && !cfg.at("metric").is_null()) {
      const auto& m = cfg.at("metric");
      if (m.is_string()) {
        if (m.get<std::string>() != "frobenius")
          throw std::invalid_argument("flow config: unknown metric name");
      } else {
        const auto spec = io::moment_spec_from_json(m);
        metric = metrics::metric_from_moments(metrics::moment_tensor(spec, n, d));
        metric_kind = m.at("type").get<std::string>();
      }
    }

    dynamics::FlowConfig fc;
    fc.d = d;
    if (cfg.contains("step")) fc.step = cfg.at("step").get<double>();
    if (cfg.contains("steps")) fc.steps = cfg.at("steps").get<long long>();
    if (cfg.contains("record_every"))
      fc.record_every = cfg.at("record_every").get<long long>();
    if (cfg.contains("method")) {
      const auto method = cfg.at("method").get<std::string>();
      if (method == "euler")
        fc.method = dynamics::FlowConfig::Method::Euler;
      else if (method == "rk4")
        fc.method = dynamics::FlowConfig::Method::RK4;
      else
        throw std::invalid_argument("flow config: unknown method " + method);
    }
    if (cfg.contains("divergence_threshold"))
      fc.divergence_threshold = cfg.at("divergence_threshold").get<double>();
    if (cfg.contains("stop_below_loss"))
      fc.stop_below_loss = cfg.at("stop_below_loss").get<double>();

    network::NetworkParams init;
    int r = 0;
    if (cfg.contains("params0")) {
      init = io::params_from_json(cfg.at("params0"));
      r = static_cast<int>(init.alpha.size());
      if (init.W.cols() != n)
        throw std::invalid_argument("flow config: params0 width disagrees with n");
    } else {
      if (seed_opt->count() == 0)
        throw UsageError("--seed is required when the flow config has no params0");
      ctx.seed = opt->seed;
      r = cfg.at("r").get<int>();
      if (r < 1) throw std::invalid_argument("flow config: r must be positive");
      const double scale =
          cfg.contains("init_scale") ? cfg.at("init_scale").get<double>() : 1.0;
      Rng rng(opt->seed);
      init.alpha = Eigen::VectorXd(r);
      init.W = Eigen::MatrixXd(r, n);
      for (int i = 0; i < r; ++i) init.alpha[i] = scale * rng.normal() / std::sqrt(r);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < n; ++j) init.W(i, j) = scale * rng.normal() / std::sqrt(n);
    }

    ctx.config = {{"config", opt->config}, {"n", n},       {"d", d},
                  {"r", r},                {"metric", metric_kind},
                  {"step", fc.step},       {"steps", fc.steps},
                  {"record_every", fc.record_every},
                  {"method", fc.method == dynamics::FlowConfig::Method::RK4 ? "rk4" : "euler"}};

    const auto record = dynamics::gradient_flow(init, T, metric, fc);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "flow_record";
    doc["n"] = n;
    doc["d"] = d;
    doc["r"] = r;
    doc["metric"] = metric_kind;
    doc.update(io::flow_record_to_json(record));
    save_doc(doc, opt->out, ctx);
    if (!opt->csv.empty()) {
      std::vector<std::string> header = {"time", "loss", "param_norm"};
      for (int i = 1; i <= r; ++i) header.push_back("delta_" + std::to_string(i));
      std::vector<std::vector<std::string>> rows;
      for (std::size_t k = 0; k < record.times.size(); ++k) {
        std::vector<std::string> row = {fmt(record.times[k]), fmt(record.losses[k]),
                                        fmt(record.param_norms[k])};
        for (Eigen::Index i = 0; i < record.deltas[k].size(); ++i)
          row.push_back(fmt(record.deltas[k][i]));
        rows.push_back(std::move(row));
      }
      write_csv(opt->csv, header, rows, ctx);
    }
    emit_manifest(ctx);
  });
}

// ---- demo-trapped -------------------------------------------------------------------

void add_demo_trapped(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand(
      "demo-trapped", "trapped initialization against the -||x||^d teacher");
  struct Opts {
    int n = 2, d = 4, r = 3;
    long long steps = 100000;
    double step = 1e-3;
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string csv;
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--n", opt->n, "ambient dimension")->check(CLI::PositiveNumber);
  sub->add_option("--d", opt->d, "degree (even)")->check(CLI::PositiveNumber);
  sub->add_option("--r", opt->r, "network width")->check(CLI::PositiveNumber);
  sub->add_option("--steps", opt->steps, "integration steps")->check(CLI::PositiveNumber);
  sub->add_option("--step", opt->step, "step size");
  sub->add_option("--seed", opt->seed, "initialization seed")->required();
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->add_option("--csv", opt->csv, "trajectory CSV path (both runs)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "demo-trapped";
    ctx.seed = opt->seed;
    ctx.config = {{"n", opt->n},         {"d", opt->d},     {"r", opt->r},
                  {"steps", opt->steps}, {"step", opt->step}};
    const auto result =
        dynamics::trapped_demo(opt->n, opt->d, opt->r, opt->steps, opt->step, opt->seed);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "trapped_demo";
    doc["n"] = opt->n;
    doc["d"] = opt->d;
    doc["r"] = opt->r;
    doc["teacher_norm2"] = result.teacher_norm2;
    doc["trapped_min_loss"] = result.trapped_min_loss;
    doc["trapped_stayed_above"] = result.trapped_stayed_above;
    doc["control_min_loss"] = result.control.min_loss;
    Json trapped;
    trapped["final_loss"] = result.trapped.final_loss;
    trapped["min_loss"] = result.trapped.min_loss;
    trapped["steps_taken"] = result.trapped.steps_taken;
    trapped["diverged"] = result.trapped.diverged;
    doc["trapped"] = std::move(trapped);
    Json control;
    control["final_loss"] = result.control.final_loss;
    control["min_loss"] = result.control.min_loss;
    control["steps_taken"] = result.control.steps_taken;
    control["diverged"] = result.control.diverged;
    doc["control"] = std::move(control);
    save_doc(doc, opt->out, ctx);
    if (!opt->csv.empty()) {
      std::vector<std::vector<std::string>> rows;
      const auto add_rows = [&rows](const char* name, const dynamics::FlowRecord& rec) {
        for (std::size_t k = 0; k < rec.times.size(); ++k)
          rows.push_back({name, fmt(rec.times[k]), fmt(rec.losses[k]),
                          fmt(rec.param_norms[k])});
      };
      add_rows("trapped", result.trapped);
      add_rows("control", result.control);
      write_csv(opt->csv, {"run", "time", "loss", "param_norm"}, rows, ctx);
    }
    emit_manifest(ctx);
  });
}

// ---- demo-diverge -------------------------------------------------------------------

void add_demo_diverge(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand(
      "demo-diverge", "loss to zero with diverging parameters on x1^{d-1} x2");
  struct Opts {
    int d = 3;
    std::vector<double> eps = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::string out = "-";
    std::string csv;
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--d", opt->d, "degree (>= 2)")->check(CLI::PositiveNumber);
  sub->add_option("--eps", opt->eps, "epsilon values, comma separated")->delimiter(',');
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->add_option("--csv", opt->csv, "series CSV path");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "demo-diverge";
    ctx.config = {{"d", opt->d}, {"eps", opt->eps}};
    const auto points = dynamics::diverging_minimizer_demo(opt->d, opt->eps);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "diverging_demo";
    doc["d"] = opt->d;
    Json arr = Json::array();
    for (const auto& p : points) {
      Json e;
      e["epsilon"] = p.epsilon;
      e["tau"] = p.tau;
      e["loss"] = p.loss;
      e["loss_formula"] = p.loss_formula;
      e["param_norm"] = p.param_norm;
      arr.push_back(std::move(e));
    }
    doc["points"] = std::move(arr);
    save_doc(doc, opt->out, ctx);
    if (!opt->csv.empty()) {
      std::vector<std::vector<std::string>> rows;
      for (const auto& p : points)
        rows.push_back({fmt(p.epsilon), fmt(p.tau), fmt(p.loss), fmt(p.loss_formula),
                        fmt(p.param_norm)});
      write_csv(opt->csv, {"epsilon", "tau", "loss", "loss_formula", "param_norm"}, rows,
                ctx);
    }
    emit_manifest(ctx);
  });
}

// ---- discriminant -------------------------------------------------------------------

void add_discriminant(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("discriminant", "2x2 teacher discriminant value");
  struct Opts {
    std::string metric = "frobenius";
    double t00 = 0.0, t01 = 0.0, t11 = 0.0;
    double mu2 = 1.0, mu4 = 3.0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--metric", opt->metric, "frobenius | iid")
      ->check(CLI::IsMember({"frobenius", "iid"}));
  sub->add_option("--t00", opt->t00, "teacher entry (0,0)")->required();
  sub->add_option("--t01", opt->t01, "teacher entry (0,1)")->required();
  sub->add_option("--t11", opt->t11, "teacher entry (1,1)")->required();
  sub->add_option("--mu2", opt->mu2, "second coordinate moment (iid)");
  sub->add_option("--mu4", opt->mu4, "fourth coordinate moment (iid)");
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "discriminant";
    ctx.config = {{"metric", opt->metric}, {"t00", opt->t00}, {"t01", opt->t01},
                  {"t11", opt->t11},       {"mu2", opt->mu2}, {"mu4", opt->mu4}};
    Eigen::Matrix2d T;
    T << opt->t00, opt->t01, opt->t01, opt->t11;
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "discriminant";
    doc["metric"] = opt->metric;
    doc["t"] = matrix_rows(T);
    if (opt->metric == "frobenius") {
      doc["value"] = discriminant::discriminant_2x2_frobenius(T);
    } else {
      doc["mu2"] = opt->mu2;
      doc["mu4"] = opt->mu4;
      doc["value"] = discriminant::discriminant_2x2_iid(T, opt->mu2, opt->mu4);
      doc["scale"] = discriminant::discriminant_2x2_iid_scale(T, opt->mu2, opt->mu4);
    }
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

// ---- focal --------------------------------------------------------------------------

void add_focal(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand("focal", "focal points along the pencil from S to T");
  struct Opts {
    std::string s, t;
    std::string out = "-";
    std::string csv;
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--s", opt->s, "start matrix JSON path")->required();
  sub->add_option("--t", opt->t, "teacher matrix JSON path")->required();
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->add_option("--csv", opt->csv, "focal point CSV path");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "focal";
    ctx.config = {{"s", opt->s}, {"t", opt->t}};
    const Eigen::MatrixXd S = io::teacher_matrix_from_json(io::load_json(opt->s));
    const Eigen::MatrixXd T = io::teacher_matrix_from_json(io::load_json(opt->t));
    const auto points = discriminant::focal_points_on_segment(S, T);
    int total = 0;
    Json arr = Json::array();
    for (const auto& p : points) {
      total += p.multiplicity;
      Json e;
      e["alpha"] = p.alpha;
      e["multiplicity"] = p.multiplicity;
      arr.push_back(std::move(e));
    }
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "focal";
    doc["points"] = std::move(arr);
    doc["total"] = total;
    save_doc(doc, opt->out, ctx);
    if (!opt->csv.empty()) {
      std::vector<std::vector<std::string>> rows;
      for (const auto& p : points)
        rows.push_back({fmt(p.alpha), std::to_string(p.multiplicity)});
      write_csv(opt->csv, {"alpha", "multiplicity"}, rows, ctx);
    }
    emit_manifest(ctx);
  });
}

// ---- stability ----------------------------------------------------------------------

void add_stability(CLI::App& app, RunContext& ctx, const int& threads) {
  auto* sub = app.add_subcommand(
      "stability", "randomized stability probe of the ellipse landscape");
  struct Opts {
    double tx = 0.0, ty = 0.0;
    double a = 0.0, b = 0.0;
    std::string sigma;
    double radius = 1e-3;
    int trials = 50;
    std::uint64_t seed = 0;
    std::string out = "-";
  };
  auto opt = std::make_shared<Opts>();
  sub->add_option("--tx", opt->tx, "focus x coordinate")->required();
  sub->add_option("--ty", opt->ty, "focus y coordinate")->required();
  sub->add_option("--a", opt->a, "semi-axis a")->required()->check(CLI::PositiveNumber);
  sub->add_option("--b", opt->b, "semi-axis b")->required()->check(CLI::PositiveNumber);
  sub->add_option("--sigma", opt->sigma, "metric matrix JSON path (default identity)");
  sub->add_option("--radius", opt->radius, "perturbation radius");
  sub->add_option("--trials", opt->trials, "probe count")->check(CLI::PositiveNumber);
  sub->add_option("--seed", opt->seed, "probe seed")->required();
  sub->add_option("--out", opt->out, "output JSON path ('-' = stdout)");
  sub->callback([&ctx, &threads, opt] {
    apply_threads(threads);
    ctx.subcommand = "stability";
    ctx.seed = opt->seed;
    ctx.config = {{"tx", opt->tx},         {"ty", opt->ty},       {"a", opt->a},
                  {"b", opt->b},           {"sigma", opt->sigma}, {"radius", opt->radius},
                  {"trials", opt->trials}};
    Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
    if (!opt->sigma.empty()) {
      const Eigen::MatrixXd M = io::matrix_from_json(io::load_json(opt->sigma));
      if (M.rows() != 2 || M.cols() != 2)
        throw std::invalid_argument("sigma must be a 2x2 matrix");
      sigma = M;
    }
    const Eigen::Vector2d t(opt->tx, opt->ty);
    const auto baseline = discriminant::ellipse_critical_points(t, sigma, opt->a, opt->b);
    Rng rng(opt->seed);
    const auto report = discriminant::stability_probe(t, sigma, opt->a, opt->b,
                                                      opt->radius, opt->trials, rng);
    Json doc;
    doc["schema"] = io::kSchema;
    doc["kind"] = "stability";
    doc["t"] = Json::array({opt->tx, opt->ty});
    doc["a"] = opt->a;
    doc["b"] = opt->b;
    doc["radius"] = opt->radius;
    doc["trials"] = report.trials;
    doc["stable"] = report.stable;
    doc["baseline_degenerate"] = report.baseline_degenerate;
    doc["baseline_count"] = report.baseline_count;
    doc["observed_counts"] = report.observed_counts;
    Json base = Json::array();
    for (const auto& p : baseline) {
      Json e;
      e["theta"] = p.theta;
      e["point"] = Json::array({p.point[0], p.point[1]});
      e["value"] = p.value;
      e["index"] = p.index ? Json(*p.index) : Json(nullptr);
      e["on_discriminant"] = p.on_discriminant;
      base.push_back(std::move(e));
    }
    doc["baseline"] = std::move(base);
    save_doc(doc, opt->out, ctx);
    emit_manifest(ctx);
  });
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"critical point atlases for shallow polynomial networks"};
  app.set_version_flag("--version", std::string("polyland ") + io::kVersion);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap the number of worker threads")
      ->check(CLI::PositiveNumber);

  RunContext ctx;
  add_regime(app, ctx, threads);
  add_fiber(app, ctx, threads);
  add_moments(app, ctx, threads);
  add_metric(app, ctx, threads);
  add_critpoints(app, ctx, threads);
  add_iid_count(app, ctx, threads);
  add_train(app, ctx, threads);
  add_flow(app, ctx, threads);
  add_demo_trapped(app, ctx, threads);
  add_demo_diverge(app, ctx, threads);
  add_discriminant(app, ctx, threads);
  add_focal(app, ctx, threads);
  add_stability(app, ctx, threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::invalid_argument& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input document error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace polyland::cli
