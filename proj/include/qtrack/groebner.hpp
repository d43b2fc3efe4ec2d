// Copyright 2026 The qtrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Groebner bases over Q and the eigenvalue method for zero-dimensional
// polynomial systems.
//
// All symbolic work is exact (GMP rationals). Floating point enters only when
// a multiplication matrix is handed to the eigensolver, and every candidate
// root is then polished by Newton's method against the input system.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "qtrack/poly.hpp"

namespace qtrack::poly {

/// S(f, g) = (L / LT(f)) f - (L / LT(g)) g with L = lcm(LM(f), LM(g)).
/// Throws ZeroPolynomial if either input is zero.
MultiPoly s_polynomial(const MultiPoly& f, const MultiPoly& g, const MonomialOrder& order);

struct DivisionResult {
  std::vector<MultiPoly> quotients;
  MultiPoly remainder;
};

/// Multivariate division: f = sum_i q_i g_i + r with no term of r divisible by
/// any LT(g_i). Divisors are tried in list order.
DivisionResult multi_divide(const MultiPoly& f, std::span<const MultiPoly> divisors,
                            const MonomialOrder& order);

/// Remainder of multi_divide without tracking quotients.
MultiPoly reduce(const MultiPoly& f, std::span<const MultiPoly> divisors, const MonomialOrder& order);

struct BuchbergerConfig {
  std::size_t max_basis = 20000;
  std::size_t max_pairs = 5'000'000;
  std::size_t max_terms = 500'000;
};

struct BuchbergerStats {
  std::size_t pairs_reduced = 0;
  std::size_t zero_reductions = 0;
  std::size_t skipped_by_criteria = 0;
  std::size_t max_pair_queue = 0;
};

/// Reduced, monic Groebner basis with the order it was computed in.
struct GroebnerBasis {
  std::vector<MultiPoly> polys;
  MonomialOrder order;
  BuchbergerStats stats;
};

GroebnerBasis buchberger(std::span<const MultiPoly> generators, const MonomialOrder& order,
                         const BuchbergerConfig& config = {});

/// Buchberger's criterion: every S-polynomial reduces to zero.
bool is_groebner(std::span<const MultiPoly> basis, const MonomialOrder& order);

/// True when every element of `a` reduces to zero modulo `b` and vice
/// versa. `a` and `b` must both be Groebner bases for `order`.
bool same_ideal(std::span<const MultiPoly> a, std::span<const MultiPoly> b, const MonomialOrder& order);

/// Monomials outside the leading-term staircase. Ordered by increasing total
/// degree, and within one degree by decreasing monomial order, so that 1
/// comes first.
struct QuotientBasis {
  std::vector<Monomial> monomials;
  std::size_t nvars = 0;

  std::size_t size() const { return monomials.size(); }
  std::optional<std::size_t> index_of(const Monomial& m) const;
};

/// Throws NotZeroDimensional when some variable has no pure power among the
/// leading monomials.
QuotientBasis standard_monomials(const GroebnerBasis& basis);

/// Dense matrix of exact rationals.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols);
  static RationalMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator*(const Rational& s, const RationalMatrix& a);
  friend bool operator==(const RationalMatrix& a, const RationalMatrix& b) = default;

  bool is_zero() const;
  std::size_t nonzeros() const;
  Eigen::MatrixXd to_double() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Rational> data_;
};

/// Caches normal forms of monomials modulo a fixed Groebner basis, expressed
/// as coordinate vectors over the quotient basis.
class QuotientAlgebra {
 public:
  QuotientAlgebra(GroebnerBasis basis, QuotientBasis standard);

  const GroebnerBasis& basis() const { return basis_; }
  const QuotientBasis& standard() const { return standard_; }
  std::size_t dimension() const { return standard_.size(); }

  /// Coordinates of [f] in the quotient basis.
  std::vector<Rational> coordinates(const MultiPoly& f);
  /// Matrix of multiplication by f: column j holds the coordinates of [f b_j].
  RationalMatrix mult_matrix(const MultiPoly& f);

 private:
  struct ReductionCache;
  const std::vector<Rational>& monomial_coordinates(const Monomial& m);

  GroebnerBasis basis_;
  QuotientBasis standard_;
  std::shared_ptr<const ReductionCache> reducer_;
  std::unordered_map<Monomial, std::vector<Rational>, MonomialHash> cache_;
};

struct MultMatrix {
  RationalMatrix matrix;
  MultiPoly multiplier;
  QuotientBasis basis;
};

MultMatrix mult_matrix(const MultiPoly& f, const GroebnerBasis& basis, const QuotientBasis& standard);

struct SolveConfig {
  /// When set, used as the first separating element before random retries.
  std::optional<MultiPoly> separating;
  std::size_t max_retries = 5;
  std::uint64_t seed = 0x5eed5eedULL;
  int coefficient_range = 9;  // random c_i drawn from [-range, range] \ {0}
  double newton_tolerance = 1e-10;
  /// Two eigenvalues closer than this (relative to the spectral radius) mark
  /// the separating element as degenerate.
  double separation_tolerance = 1e-7;
  BuchbergerConfig buchberger;
};

struct Solution {
  std::vector<std::complex<double>> values;
  double residual = 0.0;
};

struct SolveReport {
  std::vector<Solution> solutions;
  std::size_t quotient_dimension = 0;
  std::size_t basis_size = 0;
  std::size_t candidates_rejected = 0;
  std::size_t attempts = 0;
  MultiPoly separating;
  BuchbergerStats stats;
};

/// Solves a zero-dimensional system: DRL basis, quotient basis, eigenvectors
/// of the transposed multiplication matrix of a separating element, then
/// Newton refinement. Throws SolverDegeneracy when no separating element is
/// found within the retry budget.
SolveReport solve_zero_dim(std::span<const MultiPoly> system, const SolveConfig& config = {});

/// Newton (least-squares when overdetermined) polish of a complex point.
/// Returns the final max-abs residual.
double newton_refine(std::span<const MultiPoly> system, std::vector<std::complex<double>>& point,
                     int max_iterations = 60);

double max_residual(std::span<const MultiPoly> system, std::span<const std::complex<double>> point);

/// Lex back-substitution solver. Cross-check path for small systems only.
std::vector<Solution> solve_lex_backsubstitution(std::span<const MultiPoly> system,
                                                 double tolerance = 1e-8);

/// Roots of a univariate complex polynomial, coefficients low to high.
std::vector<std::complex<double>> univariate_roots(std::span<const std::complex<double>> coeffs);

}  // namespace qtrack::poly
