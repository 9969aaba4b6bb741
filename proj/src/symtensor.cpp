#include "polyland/symtensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace polyland::symtensor {

double binom(int a, int b) {
  if (b < 0 || b > a) return 0.0;
  b = std::min(b, a - b);
  double r = 1.0;
  for (int k = 1; k <= b; ++k) r = r * (a - b + k) / k;
  return std::round(r);
}

namespace {

void enumerate_sorted(int n, int d, int lo, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d) {
    out.push_back(cur);
    return;
  }
  for (int v = lo; v < n; ++v) {
    cur.push_back(v);
    enumerate_sorted(n, d, v, cur, out);
    cur.pop_back();
  }
}

double multinomial_weight(const std::vector<int>& exps, int d) {
  double w = 1.0;
  // d! / prod(e_j!) computed incrementally to stay in exact-integer range.
  int used = 0;
  for (int e : exps) {
    for (int k = 1; k <= e; ++k) {
      ++used;
      w = w * used / k;
    }
  }
  (void)d;
  return std::round(w);
}

}  // namespace

IndexTable::IndexTable(int n, int d) : n_(n), d_(d) {
  if (n < 1) throw std::invalid_argument("IndexTable: n must be >= 1");
  if (d < 1) throw std::invalid_argument("IndexTable: d must be >= 1");
  std::vector<int> cur;
  enumerate_sorted(n, d, 0, cur, indices_);
  weights_.reserve(indices_.size());
  exps_.reserve(indices_.size());
  for (const auto& idx : indices_) {
    std::vector<int> e(n, 0);
    for (int i : idx) ++e[i];
    weights_.push_back(multinomial_weight(e, d));
    exps_.push_back(std::move(e));
  }
}

std::shared_ptr<const IndexTable> IndexTable::get(int n, int d) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const IndexTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, d}];
  if (!slot) slot = std::shared_ptr<const IndexTable>(new IndexTable(n, d));
  return slot;
}

int IndexTable::rank_of(const std::vector<int>& t) const {
  if (static_cast<int>(t.size()) != d_)
    throw std::invalid_argument("rank_of: multi-index length mismatch");
  // Lexicographic rank among non-decreasing tuples: count tuples that branch
  // below t at each position. #{non-decreasing (d-k-1)-tuples with entries >= v}
  // = binom(n - v + d - k - 2, d - k - 1).
  int acc = 0, lo = 0;
  for (int k = 0; k < d_; ++k) {
    if (t[k] < lo || t[k] >= n_)
      throw std::invalid_argument("rank_of: multi-index not sorted or out of range");
    for (int v = lo; v < t[k]; ++v)
      acc += static_cast<int>(binom(n_ - v + d_ - k - 2, d_ - k - 1));
    lo = t[k];
  }
  return acc;
}

SymTensor::SymTensor(int n, int d)
    : table_(IndexTable::get(n, d)), coeffs_(Eigen::VectorXd::Zero(table_->dim())) {}

SymTensor::SymTensor(int n, int d, Eigen::VectorXd coeffs)
    : table_(IndexTable::get(n, d)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != table_->dim())
    throw std::invalid_argument("SymTensor: coefficient length mismatch");
}

double SymTensor::coeff(const std::vector<int>& idx) const {
  return coeffs_[table_->rank_of(idx)];
}

void SymTensor::set_coeff(const std::vector<int>& idx, double v) {
  coeffs_[table_->rank_of(idx)] = v;
}

SymTensor& SymTensor::operator+=(const SymTensor& o) {
  if (n() != o.n() || d() != o.d()) throw std::invalid_argument("SymTensor: shape mismatch");
  coeffs_ += o.coeffs_;
  return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& o) {
  if (n() != o.n() || d() != o.d()) throw std::invalid_argument("SymTensor: shape mismatch");
  coeffs_ -= o.coeffs_;
  return *this;
}

SymTensor& SymTensor::operator*=(double c) {
  coeffs_ *= c;
  return *this;
}

SymTensor SymTensor::from_matrix(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("from_matrix: square matrix required");
  const int n = static_cast<int>(M.rows());
  SymTensor T(n, 2);
  for (int p = 0; p < T.dim(); ++p) {
    const auto& idx = T.table().multi_index(p);
    T.coeffs_[p] = 0.5 * (M(idx[0], idx[1]) + M(idx[1], idx[0]));
  }
  return T;
}

Eigen::MatrixXd SymTensor::to_matrix() const {
  if (d() != 2) throw std::invalid_argument("to_matrix: degree 2 required");
  Eigen::MatrixXd M(n(), n());
  for (int p = 0; p < dim(); ++p) {
    const auto& idx = table_->multi_index(p);
    M(idx[0], idx[1]) = coeffs_[p];
    M(idx[1], idx[0]) = coeffs_[p];
  }
  return M;
}

SymTensor rank_one(const Eigen::VectorXd& v, double lambda, int d) {
  if (d < 1) throw std::invalid_argument("rank_one: d must be >= 1");
  const int n = static_cast<int>(v.size());
  SymTensor T(n, d);
  Eigen::VectorXd c(T.dim());
  for (int p = 0; p < T.dim(); ++p) {
    double prod = lambda;
    for (int i : T.table().multi_index(p)) prod *= v[i];
    c[p] = prod;
  }
  return SymTensor(n, d, std::move(c));
}

double frobenius_inner(const SymTensor& S, const SymTensor& T) {
  if (S.n() != T.n() || S.d() != T.d())
    throw std::invalid_argument("frobenius_inner: shape mismatch");
  double acc = 0.0;
  for (int p = 0; p < S.dim(); ++p)
    acc += S.table().weight(p) * S.coeffs()[p] * T.coeffs()[p];
  return acc;
}

double frobenius_norm(const SymTensor& S) { return std::sqrt(frobenius_inner(S, S)); }

double evaluate_poly(const SymTensor& T, const Eigen::VectorXd& x) {
  if (x.size() != T.n()) throw std::invalid_argument("evaluate_poly: dimension mismatch");
  double acc = 0.0;
  for (int p = 0; p < T.dim(); ++p) {
    double mono = 1.0;
    for (int i : T.table().multi_index(p)) mono *= x[i];
    acc += T.table().weight(p) * T.coeffs()[p] * mono;
  }
  return acc;
}

Eigen::VectorXd evaluate_poly_grad(const SymTensor& T, const Eigen::VectorXd& x) {
  if (x.size() != T.n()) throw std::invalid_argument("evaluate_poly_grad: dimension mismatch");
  const int n = T.n();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < T.dim(); ++p) {
    const double wc = T.table().weight(p) * T.coeffs()[p];
    if (wc == 0.0) continue;
    const auto& e = T.table().exponents(p);
    for (int j = 0; j < n; ++j) {
      if (e[j] == 0) continue;
      double mono = e[j];
      for (int i = 0; i < n; ++i) {
        const int pow = (i == j) ? e[i] - 1 : e[i];
        for (int k = 0; k < pow; ++k) mono *= x[i];
      }
      g[j] += wc * mono;
    }
  }
  return g;
}

SymTensor sym_outer(const Eigen::VectorXd& w, const Eigen::VectorXd& u, int d) {
  if (w.size() != u.size()) throw std::invalid_argument("sym_outer: dimension mismatch");
  if (d < 1) throw std::invalid_argument("sym_outer: d must be >= 1");
  const int n = static_cast<int>(w.size());
  SymTensor T(n, d);
  Eigen::VectorXd c(T.dim());
  for (int p = 0; p < T.dim(); ++p) {
    const auto& idx = T.table().multi_index(p);
    // Entry of the symmetrized sum at any representative full index: one factor u,
    // the rest w, summed over the d placements.
    double all_w = 1.0;
    for (int i : idx) all_w *= w[i];
    double acc = 0.0;
    if (all_w != 0.0) {
      for (int k = 0; k < d; ++k) acc += all_w / w[idx[k]] * u[idx[k]];
    } else {
      for (int k = 0; k < d; ++k) {
        double prod = u[idx[k]];
        for (int q = 0; q < d; ++q)
          if (q != k) prod *= w[idx[q]];
        acc += prod;
      }
    }
    c[p] = acc;
  }
  return SymTensor(n, d, std::move(c));
}

Eigen::MatrixXd matricize_2d(const SymTensor& M) {
  if (M.d() % 2 != 0) throw std::invalid_argument("matricize_2d: even degree required");
  const int d = M.d() / 2, n = M.n();
  double sized = std::pow(n, d);
  if (sized > 4096.0) throw std::invalid_argument("matricize_2d: side n^d too large");
  const int side = static_cast<int>(std::llround(sized));
  Eigen::MatrixXd out(side, side);
  std::vector<int> full(2 * d);
  for (int r = 0; r < side; ++r) {
    int rr = r;
    for (int k = d - 1; k >= 0; --k) {
      full[k] = rr % n;
      rr /= n;
    }
    for (int c = 0; c < side; ++c) {
      int cc = c;
      for (int k = d - 1; k >= 0; --k) {
        full[d + k] = cc % n;
        cc /= n;
      }
      std::vector<int> sorted(full);
      std::sort(sorted.begin(), sorted.end());
      out(r, c) = M.coeff(sorted);
    }
  }
  return out;
}

std::vector<double> unpack_dense(const SymTensor& T) {
  const int n = T.n(), d = T.d();
  double sized = std::pow(n, d);
  if (sized > 1e6) throw std::invalid_argument("unpack_dense: n^d too large");
  const std::size_t total = static_cast<std::size_t>(std::llround(sized));
  std::vector<double> out(total);
  std::vector<int> idx(d);
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t ff = f;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(ff % n);
      ff /= n;
    }
    std::vector<int> sorted(idx);
    std::sort(sorted.begin(), sorted.end());
    out[f] = T.coeff(sorted);
  }
  return out;
}

SymTensor pack_dense(int n, int d, const std::vector<double>& dense) {
  SymTensor T(n, d);
  std::vector<double> sums(T.dim(), 0.0);
  std::vector<double> counts(T.dim(), 0.0);
  std::vector<int> idx(d);
  const std::size_t total = dense.size();
  double expect = std::pow(n, d);
  if (static_cast<double>(total) != expect)
    throw std::invalid_argument("pack_dense: length must be n^d");
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t ff = f;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(ff % n);
      ff /= n;
    }
    std::vector<int> sorted(idx);
    std::sort(sorted.begin(), sorted.end());
    const int p = T.table().rank_of(sorted);
    sums[p] += dense[f];
    counts[p] += 1.0;
  }
  Eigen::VectorXd c(T.dim());
  for (int p = 0; p < T.dim(); ++p) c[p] = sums[p] / counts[p];
  return SymTensor(n, d, std::move(c));
}

}  // namespace polyland::symtensor
