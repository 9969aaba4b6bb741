#include "polyland/json_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace polyland::io {

namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const Json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("expected a numeric array");
  Eigen::VectorXd v(arr.size());
  Eigen::Index k = 0;
  for (const auto& x : arr) v[k++] = x.get<double>();
  return v;
}

Json rows_to_json(const Eigen::MatrixXd& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_from_json(const Json& rows) {
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument("expected a 2D array");
  const Eigen::Index nrows = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index ncols = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd M(nrows, ncols);
  for (Eigen::Index i = 0; i < nrows; ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != ncols)
      throw std::invalid_argument("expected a rectangular 2D array");
    for (Eigen::Index j = 0; j < ncols; ++j) M(i, j) = row[j].get<double>();
  }
  return M;
}

Json optional_int_to_json(const std::optional<int>& x) {
  if (x) return Json(*x);
  return Json(nullptr);
}

}  // namespace

// ---- tensors and matrices ----------------------------------------------------------

Json symtensor_to_json(const symtensor::SymTensor& T) {
  Json doc;
  doc["schema"] = kSchema;
  doc["kind"] = "symtensor";
  doc["n"] = T.n();
  doc["d"] = T.d();
  Json coeffs = Json::array();
  for (int p = 0; p < T.dim(); ++p) {
    const double v = T.coeffs()[p];
    if (v == 0.0) continue;
    Json idx = Json::array();
    for (int i : T.table().multi_index(p)) idx.push_back(i + 1);
    coeffs.push_back(Json::array({std::move(idx), v}));
  }
  doc["coeffs"] = std::move(coeffs);
  return doc;
}

symtensor::SymTensor symtensor_from_json(const Json& doc) {
  if (!doc.contains("n") || !doc.contains("d"))
    throw std::invalid_argument("symtensor document needs fields n and d");
  const int n = doc.at("n").get<int>();
  const int d = doc.at("d").get<int>();
  if (n < 1 || d < 1) throw std::invalid_argument("symtensor document needs n >= 1, d >= 1");
  symtensor::SymTensor T(n, d);
  if (!doc.contains("coeffs")) return T;
  for (const auto& entry : doc.at("coeffs")) {
    if (!entry.is_array() || entry.size() != 2)
      throw std::invalid_argument("symtensor coeff entries must be [[indices], value]");
    std::vector<int> idx;
    for (const auto& i : entry[0]) {
      const int one_based = i.get<int>();
      if (one_based < 1 || one_based > n)
        throw std::invalid_argument("symtensor multi-index entry out of range");
      idx.push_back(one_based - 1);
    }
    if (static_cast<int>(idx.size()) != d)
      throw std::invalid_argument("symtensor multi-index length must equal d");
    std::sort(idx.begin(), idx.end());
    T.set_coeff(idx, entry[1].get<double>());
  }
  return T;
}

Json matrix_to_json(const Eigen::MatrixXd& M) {
  Json doc;
  doc["schema"] = kSchema;
  doc["kind"] = "matrix";
  doc["data"] = rows_to_json(M);
  return doc;
}

Eigen::MatrixXd matrix_from_json(const Json& doc) {
  if (doc.is_array()) return rows_from_json(doc);
  if (doc.contains("data")) return rows_from_json(doc.at("data"));
  throw std::invalid_argument("matrix document needs a data field or a bare 2D array");
}

Eigen::MatrixXd teacher_matrix_from_json(const Json& doc) {
  if (doc.is_array()) return rows_from_json(doc);
  if (doc.contains("type")) {
    const auto type = doc.at("type").get<std::string>();
    if (type == "eigen") {
      const Eigen::VectorXd evs = vector_from_json(doc.at("eigenvalues"));
      const int n = static_cast<int>(evs.size());
      Eigen::MatrixXd V;
      const auto& basis = doc.at("basis");
      if (basis.is_string()) {
        const auto name = basis.get<std::string>();
        if (name == "identity")
          V = Eigen::MatrixXd::Identity(n, n);
        else if (name == "reflect_ones")
          V = dynamics::reflect_ones(n);
        else
          throw std::invalid_argument("unknown eigenbasis name: " + name);
      } else {
        V = rows_from_json(basis);
        if (V.rows() != n || V.cols() != n)
          throw std::invalid_argument("eigenbasis must be n x n");
      }
      Eigen::MatrixXd T = V * evs.asDiagonal() * V.transpose();
      return 0.5 * (T + T.transpose());
    }
    if (type == "params") {
      const network::NetworkParams params = params_from_json(doc);
      return network::tau(params, 2).to_matrix();
    }
    throw std::invalid_argument("unknown teacher type: " + type);
  }
  if (doc.contains("coeffs")) {
    const symtensor::SymTensor T = symtensor_from_json(doc);
    if (T.d() != 2) throw std::invalid_argument("teacher tensor must have degree 2");
    return T.to_matrix();
  }
  if (doc.contains("data")) return rows_from_json(doc.at("data"));
  throw std::invalid_argument("unrecognized teacher document");
}

// ---- distributions -----------------------------------------------------------------

Json moment_spec_to_json(const metrics::MomentSpec& spec) {
  Json doc;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, metrics::RotInvariant>) {
          doc["type"] = "rot_invariant";
          doc["radial_moment_2d"] = s.radial_moment_2d;
        } else if constexpr (std::is_same_v<S, metrics::IID>) {
          doc["type"] = "iid";
          doc["moments"] = s.moments;
        } else if constexpr (std::is_same_v<S, metrics::ColoredGaussian>) {
          doc["type"] = "colored_gaussian";
          doc["sigma"] = rows_to_json(s.sigma);
        } else if constexpr (std::is_same_v<S, metrics::Mixture>) {
          doc["type"] = "mixture";
          doc["weights"] = s.weights;
          Json parts = Json::array();
          for (const auto& p : s.parts) parts.push_back(moment_spec_to_json(*p));
          doc["parts"] = std::move(parts);
        } else {
          doc["type"] = "empirical";
          Json pts = Json::array();
          for (const auto& x : s.points) pts.push_back(vector_to_json(x));
          doc["points"] = std::move(pts);
        }
      },
      spec.variant);
  return doc;
}

metrics::MomentSpec moment_spec_from_json(const Json& doc) {
  const auto type = doc.at("type").get<std::string>();
  if (type == "rot_invariant")
    return {metrics::RotInvariant{doc.at("radial_moment_2d").get<double>()}};
  if (type == "iid") return {metrics::IID{doc.at("moments").get<std::vector<double>>()}};
  if (type == "colored_gaussian")
    return {metrics::ColoredGaussian{rows_from_json(doc.at("sigma"))}};
  if (type == "mixture") {
    metrics::Mixture mix;
    mix.weights = doc.at("weights").get<std::vector<double>>();
    for (const auto& p : doc.at("parts"))
      mix.parts.push_back(std::make_shared<metrics::MomentSpec>(moment_spec_from_json(p)));
    return {std::move(mix)};
  }
  if (type == "empirical") {
    metrics::Empirical emp;
    for (const auto& x : doc.at("points")) emp.points.push_back(vector_from_json(x));
    return {std::move(emp)};
  }
  throw std::invalid_argument("unknown distribution type: " + type);
}

// ---- networks ----------------------------------------------------------------------

Json params_to_json(const network::NetworkParams& params) {
  Json doc;
  doc["alpha"] = vector_to_json(params.alpha);
  doc["W"] = rows_to_json(params.W);
  return doc;
}

network::NetworkParams params_from_json(const Json& doc) {
  network::NetworkParams params;
  params.alpha = vector_from_json(doc.at("alpha"));
  params.W = rows_from_json(doc.at("W"));
  if (params.W.rows() != params.alpha.size())
    throw std::invalid_argument("params: W must have one row per alpha entry");
  return params;
}

// ---- reports -----------------------------------------------------------------------

Json regime_to_json(const network::RegimeResult& result) {
  Json doc;
  doc["r_thick"] = result.r_thick;
  doc["r_fill_lower"] = result.r_fill_lower;
  doc["r_fill_upper"] = result.r_fill_upper;
  doc["r_fill_exact"] = optional_int_to_json(result.r_fill_exact);
  doc["classification"] = result.classification;
  return doc;
}

Json ey_points_to_json(const std::vector<quadlandscape::EYCriticalPoint>& points) {
  Json arr = Json::array();
  for (const auto& p : points) {
    Json e;
    Json subset = Json::array();
    for (int i : p.subset) subset.push_back(i + 1);
    e["subset"] = std::move(subset);
    e["rank"] = p.rank;
    e["shift"] = p.shift;
    e["lambda"] = vector_to_json(p.lambda);
    e["index"] = optional_int_to_json(p.index);
    e["degenerate"] = p.degenerate;
    e["S"] = rows_to_json(p.S);
    arr.push_back(std::move(e));
  }
  return arr;
}

Json iid_set_to_json(const quadlandscape::IIDCriticalSet& set) {
  Json doc;
  Json arr = Json::array();
  for (const auto& p : set.points) {
    Json e;
    Json support = Json::array();
    for (int i : p.support) support.push_back(i + 1);
    e["support"] = std::move(support);
    e["signs"] = p.signs;
    e["branch"] = p.branch;
    e["v"] = vector_to_json(p.v);
    e["S"] = rows_to_json(p.S);
    e["residual"] = p.residual;
    arr.push_back(std::move(e));
  }
  doc["count"] = set.points.size();
  doc["points"] = std::move(arr);
  doc["warnings"] = set.warnings;
  return doc;
}

Json flow_record_to_json(const dynamics::FlowRecord& record) {
  Json doc;
  doc["final_loss"] = record.final_loss;
  doc["min_loss"] = record.min_loss;
  doc["diverged"] = record.diverged;
  doc["steps_taken"] = record.steps_taken;
  doc["final_params"] = params_to_json(record.final_params);
  Json traj;
  traj["times"] = record.times;
  traj["losses"] = record.losses;
  traj["param_norms"] = record.param_norms;
  Json deltas = Json::array();
  for (const auto& delta : record.deltas) deltas.push_back(vector_to_json(delta));
  traj["deltas"] = std::move(deltas);
  doc["trajectory"] = std::move(traj);
  return doc;
}

Json teacher_student_report_to_json(const dynamics::TeacherStudentReport& report) {
  Json doc;
  doc["cluster_count"] = report.cluster_count;
  doc["mean_nearest_dist"] = report.mean_nearest_dist;
  doc["cover_count"] = report.cover.size();
  Json trials = Json::array();
  for (const auto& t : report.trials) {
    Json e;
    e["final_loss"] = t.final_loss;
    e["grad_norm"] = t.grad_norm;
    e["nearest_cover_dist"] = t.nearest_cover_dist;
    e["nearest_cover"] = t.nearest_cover;
    e["converged"] = t.converged;
    e["diverged"] = t.diverged;
    e["eigenvalues"] = vector_to_json(t.eigenvalues);
    trials.push_back(std::move(e));
  }
  doc["trials"] = std::move(trials);
  return doc;
}

// ---- files -------------------------------------------------------------------------

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return Json::parse(in);
}

void save_json(const Json& doc, const std::string& path) {
  if (path == "-") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << doc.dump(2) << "\n";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return Json(x).dump();
}

}  // namespace polyland::io
