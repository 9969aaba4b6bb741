#pragma once

// Symmetric tensors Sym^d(R^n) in packed form: one coefficient per sorted multi-index,
// lexicographic order, with multinomial multiplicity weights used for all Frobenius
// pairings. Everything is immutable after construction and safe to share.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

namespace polyland::symtensor {

/// Exact binomial coefficient as a double (arguments stay far below overflow here).
double binom(int a, int b);

/// Shared layout for Sym^d(R^n): sorted multi-indices, multiplicity weights,
/// exponent vectors, and rank lookup. Cached per (n, d).
class IndexTable {
public:
  static std::shared_ptr<const IndexTable> get(int n, int d);

  int n() const { return n_; }
  int d() const { return d_; }
  int dim() const { return static_cast<int>(indices_.size()); }

  /// Sorted (non-decreasing) multi-index at packed position p, entries in {0..n-1}.
  const std::vector<int>& multi_index(int p) const { return indices_[p]; }
  /// Multinomial multiplicity d!/(prod of exponent factorials).
  double weight(int p) const { return weights_[p]; }
  /// Exponent vector (length n) of position p.
  const std::vector<int>& exponents(int p) const { return exps_[p]; }
  /// Packed position of a sorted multi-index.
  int rank_of(const std::vector<int>& sorted_idx) const;

private:
  IndexTable(int n, int d);
  int n_, d_;
  std::vector<std::vector<int>> indices_;
  std::vector<double> weights_;
  std::vector<std::vector<int>> exps_;
};

class SymTensor {
public:
  SymTensor() = default;
  SymTensor(int n, int d);  // zero tensor
  SymTensor(int n, int d, Eigen::VectorXd coeffs);

  int n() const { return table_->n(); }
  int d() const { return table_->d(); }
  int dim() const { return table_->dim(); }
  const IndexTable& table() const { return *table_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

  double coeff(const std::vector<int>& sorted_idx) const;
  void set_coeff(const std::vector<int>& sorted_idx, double v);

  SymTensor& operator+=(const SymTensor& o);
  SymTensor& operator-=(const SymTensor& o);
  SymTensor& operator*=(double c);
  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(double c, SymTensor a) { return a *= c; }

  /// Converts a symmetric n x n matrix to the packed d=2 form and back.
  static SymTensor from_matrix(const Eigen::MatrixXd& M);
  Eigen::MatrixXd to_matrix() const;  // d=2 only

private:
  std::shared_ptr<const IndexTable> table_;
  Eigen::VectorXd coeffs_;
};

/// lambda * v^{tensor d}.
SymTensor rank_one(const Eigen::VectorXd& v, double lambda, int d);

/// Full-tensor entrywise sum, computed with multiplicity weights on packed storage.
double frobenius_inner(const SymTensor& S, const SymTensor& T);

double frobenius_norm(const SymTensor& S);

/// Value of the homogeneous polynomial <T, x^{tensor d}> at x.
double evaluate_poly(const SymTensor& T, const Eigen::VectorXd& x);

/// Gradient in x of evaluate_poly(T, x); equals d * (T contracted with x^{tensor d-1}).
Eigen::VectorXd evaluate_poly_grad(const SymTensor& T, const Eigen::VectorXd& x);

/// Unnormalized symmetrization of w^{tensor d-1} tensor u: the sum of the d placements.
SymTensor sym_outer(const Eigen::VectorXd& w, const Eigen::VectorXd& u, int d);

/// n^d x n^d unfolding of an even-degree tensor, rows (i_1..i_d), columns (i_{d+1}..i_{2d}).
Eigen::MatrixXd matricize_2d(const SymTensor& M);

/// Dense order-d array, row-major over full index tuples in [n]^d. Test-sized only.
std::vector<double> unpack_dense(const SymTensor& T);
/// Re-packs a dense symmetric array by averaging each multi-index orbit.
SymTensor pack_dense(int n, int d, const std::vector<double>& dense);

}  // namespace polyland::symtensor
