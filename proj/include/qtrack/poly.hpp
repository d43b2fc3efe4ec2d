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

// Sparse multivariate polynomials with exact rational coefficients.

#pragma once

#include <gmpxx.h>

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qtrack::poly {

using Rational = mpq_class;

/// Upper bound on the number of variables a Monomial can carry.
inline constexpr std::size_t kMaxVars = 16;

/// Exponent vector. Exponents are limited to 255 per variable; exceeding
/// that raises ResourceLimit.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::span<const unsigned> exponents);
  static Monomial variable(std::size_t index, unsigned power = 1);

  unsigned operator[](std::size_t i) const { return exp_[i]; }
  unsigned degree() const { return degree_; }
  bool is_one() const { return degree_ == 0; }

  bool divides(const Monomial& other) const {
    if ((mask_ & ~other.mask_) != 0 || degree_ > other.degree_) return false;
    for (std::size_t i = 0; i < kMaxVars; ++i)
      if (exp_[i] > other.exp_[i]) return false;
    return true;
  }
  bool coprime(const Monomial& other) const { return (mask_ & other.mask_) == 0; }

  Monomial operator*(const Monomial& other) const;
  /// Requires divisor.divides(*this).
  Monomial operator/(const Monomial& divisor) const;
  Monomial lcm(const Monomial& other) const;

  std::size_t hash() const;
  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  void recompute();

  std::array<std::uint8_t, kMaxVars> exp_{};
  std::uint16_t degree_ = 0;
  std::uint16_t mask_ = 0;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

enum class OrderKind { Lex, DegRevLex };

/// Admissible monomial order. `precedence[0]` is the largest variable.
class MonomialOrder {
 public:
  MonomialOrder(OrderKind kind, std::vector<std::size_t> precedence);
  static MonomialOrder lex(std::size_t nvars);
  static MonomialOrder drl(std::size_t nvars);

  OrderKind kind() const { return kind_; }
  const std::vector<std::size_t>& precedence() const { return precedence_; }
  std::size_t nvars() const { return precedence_.size(); }

  /// Three-way comparison: negative if a < b, zero if equal, positive if a > b.
  int compare(const Monomial& a, const Monomial& b) const;
  bool less(const Monomial& a, const Monomial& b) const { return compare(a, b) < 0; }

  friend bool operator==(const MonomialOrder&, const MonomialOrder&) = default;

 private:
  OrderKind kind_;
  std::vector<std::size_t> precedence_;
};

struct Term {
  Monomial monomial;
  Rational coeff;
};

/// A polynomial in `nvars` variables. Terms are kept sorted in strictly
/// decreasing order with respect to the polynomial's monomial order and no
/// stored coefficient is zero.
class MultiPoly {
 public:
  explicit MultiPoly(std::size_t nvars = 0);
  MultiPoly(std::size_t nvars, MonomialOrder order);

  static MultiPoly constant(std::size_t nvars, const Rational& c);
  static MultiPoly variable(std::size_t nvars, std::size_t index);
  static MultiPoly monomial(std::size_t nvars, const Monomial& m, const Rational& c);

  std::size_t nvars() const { return nvars_; }
  const MonomialOrder& order() const { return order_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  unsigned total_degree() const;

  /// Leading term under the polynomial's order. Requires !is_zero().
  const Term& leading() const { return terms_.front(); }

  /// Returns the same polynomial with terms sorted by `order`.
  MultiPoly with_order(const MonomialOrder& order) const;

  /// Adds c * m into the polynomial.
  void add_term(const Monomial& m, const Rational& c);

  MultiPoly& operator+=(const MultiPoly& other);
  MultiPoly& operator-=(const MultiPoly& other);
  MultiPoly& operator*=(const Rational& c);
  MultiPoly operator-() const;
  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(MultiPoly a, const Rational& c) { return a *= c; }
  friend MultiPoly operator*(const Rational& c, MultiPoly a) { return a *= c; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);

  /// this * c * m, keeping the order.
  MultiPoly scaled(const Rational& c, const Monomial& m) const;

  /// Divides by the leading coefficient. No-op for the zero polynomial.
  MultiPoly monic() const;

  /// Coefficient of m (zero when absent).
  Rational coefficient(const Monomial& m) const;

  std::complex<double> evaluate(std::span<const std::complex<double>> point) const;
  Rational evaluate(std::span<const Rational> point) const;
  /// Partial derivative with respect to variable `index`.
  MultiPoly derivative(std::size_t index) const;
  /// Substitutes variables: result(x) = this(x_{perm[0]}, ..., x_{perm[n-1]}),
  /// i.e. variable i is replaced by variable perm[i].
  MultiPoly rename(std::span<const std::size_t> perm) const;

  /// Equality as polynomials, independent of the stored order.
  friend bool operator==(const MultiPoly& a, const MultiPoly& b);

 private:
  void sort_terms();

  std::size_t nvars_;
  MonomialOrder order_;
  std::vector<Term> terms_;
};

/// Text form of a single polynomial: terms `+(p/q)*x1^a1*...*xn^an`, one
/// sign-prefixed term after another, variables numbered from 1, zero
/// exponents omitted. The zero polynomial is written `0`.
std::string format_poly(const MultiPoly& p);
MultiPoly parse_poly(std::string_view text, std::size_t nvars);

/// System file: optional `# nvars: N` header, `#` comments, one polynomial
/// per line. When no header is present nvars is the largest variable index.
void write_system(std::ostream& out, std::span<const MultiPoly> system);
std::vector<MultiPoly> read_system(std::istream& in);

}  // namespace qtrack::poly
