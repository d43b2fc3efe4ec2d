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

// Fraction-free polynomial reduction used internally by the Groebner code.
// Polynomials are kept primitive over Z (content 1, positive leading
// coefficient); a separate rational factor recovers exact remainders.

#pragma once

#include <limits>
#include <vector>

#include "qtrack/poly.hpp"

namespace qtrack::poly::detail {

struct ITerm {
  Monomial monomial;
  mpz_class coeff;
};

using IPoly = std::vector<ITerm>;

/// Primitive integer multiple of f sorted under `order`; f = result * factor.
IPoly to_primitive(const MultiPoly& f, const MonomialOrder& order, Rational* factor = nullptr);

/// Divides out the content and makes the leading coefficient positive.
/// Returns the factor removed (result * factor = input).
mpz_class make_primitive(IPoly& p);

MultiPoly to_monic(const IPoly& p, std::size_t nvars, const MonomialOrder& order);
MultiPoly to_multipoly(const IPoly& p, const Rational& factor, std::size_t nvars, const MonomialOrder& order);

/// a * m1 * f[1..] - b * m2 * g[1..], i.e. the combination whose leading
/// terms are assumed to cancel.
IPoly combine_tails(const mpz_class& a, const Monomial& m1, const IPoly& f, std::size_t f_from,
                    const mpz_class& b, const Monomial& m2, const IPoly& g, const MonomialOrder& order);

IPoly s_polynomial(const IPoly& f, const IPoly& g, const MonomialOrder& order);

/// Full reduction of p modulo `divisors` (first divisor whose leading
/// monomial divides wins). Remainder r satisfies NF(p) = r * (*factor) when
/// factor is non-null; r itself is primitive.
IPoly reduce(IPoly p, const std::vector<const IPoly*>& divisors, const MonomialOrder& order,
             Rational* factor = nullptr, std::size_t max_terms = std::numeric_limits<std::size_t>::max());

}  // namespace qtrack::poly::detail
