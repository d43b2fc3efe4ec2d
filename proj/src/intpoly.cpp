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

#include "intpoly.hpp"

#include "qtrack/errors.hpp"

namespace qtrack::poly::detail {

namespace {

constexpr int kContentInterval = 8;

mpz_class content_of(const IPoly& a, const IPoly& b, std::size_t b_from) {
  mpz_class g = 0;
  for (const auto& t : a) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), t.coeff.get_mpz_t());
    if (g == 1) return g;
  }
  for (std::size_t k = b_from; k < b.size(); ++k) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), b[k].coeff.get_mpz_t());
    if (g == 1) return g;
  }
  return g;
}

}  // namespace

IPoly to_primitive(const MultiPoly& f, const MonomialOrder& order, Rational* factor) {
  MultiPoly fo = f.with_order(order);
  mpz_class den = 1;
  for (const auto& t : fo.terms()) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), t.coeff.get_den_mpz_t());
  IPoly p;
  p.reserve(fo.size());
  for (const auto& t : fo.terms()) {
    mpz_class c = t.coeff.get_num() * (den / t.coeff.get_den());
    p.push_back({t.monomial, std::move(c)});
  }
  mpz_class content = make_primitive(p);
  if (factor != nullptr) {
    *factor = Rational(content, den);
    factor->canonicalize();
  }
  return p;
}

mpz_class make_primitive(IPoly& p) {
  if (p.empty()) return 1;
  mpz_class g = content_of(p, {}, 0);
  if (p.front().coeff < 0) g = -g;
  if (g != 1)
    for (auto& t : p) mpz_divexact(t.coeff.get_mpz_t(), t.coeff.get_mpz_t(), g.get_mpz_t());
  return g;
}

MultiPoly to_multipoly(const IPoly& p, const Rational& factor, std::size_t nvars, const MonomialOrder& order) {
  MultiPoly out(nvars, order);
  for (const auto& t : p) out.add_term(t.monomial, Rational(t.coeff) * factor);
  return out;
}

MultiPoly to_monic(const IPoly& p, std::size_t nvars, const MonomialOrder& order) {
  if (p.empty()) return MultiPoly(nvars, order);
  Rational inv(mpz_class(1), p.front().coeff);
  inv.canonicalize();
  return to_multipoly(p, inv, nvars, order);
}

IPoly combine_tails(const mpz_class& a, const Monomial& m1, const IPoly& f, std::size_t f_from,
                    const mpz_class& b, const Monomial& m2, const IPoly& g, const MonomialOrder& order) {
  IPoly out;
  out.reserve(f.size() - f_from + g.size());
  const bool shift1 = !m1.is_one();
  const bool a_one = a == 1;
  std::size_t i = f_from, j = 1;
  Monomial fm, gm;
  if (i < f.size()) fm = shift1 ? f[i].monomial * m1 : f[i].monomial;
  if (j < g.size()) gm = g[j].monomial * m2;
  mpz_class tmp;
  while (i < f.size() && j < g.size()) {
    int cmp = order.compare(fm, gm);
    if (cmp > 0) {
      out.push_back({fm, a_one ? f[i].coeff : mpz_class(a * f[i].coeff)});
      if (++i < f.size()) fm = shift1 ? f[i].monomial * m1 : f[i].monomial;
    } else if (cmp < 0) {
      out.push_back({gm, mpz_class(-b * g[j].coeff)});
      if (++j < g.size()) gm = g[j].monomial * m2;
    } else {
      mpz_mul(tmp.get_mpz_t(), a.get_mpz_t(), f[i].coeff.get_mpz_t());
      mpz_submul(tmp.get_mpz_t(), b.get_mpz_t(), g[j].coeff.get_mpz_t());
      if (tmp != 0) out.push_back({fm, tmp});
      if (++i < f.size()) fm = shift1 ? f[i].monomial * m1 : f[i].monomial;
      if (++j < g.size()) gm = g[j].monomial * m2;
    }
  }
  for (; i < f.size(); ++i)
    out.push_back({shift1 ? f[i].monomial * m1 : f[i].monomial, a_one ? f[i].coeff : mpz_class(a * f[i].coeff)});
  for (; j < g.size(); ++j) out.push_back({g[j].monomial * m2, mpz_class(-b * g[j].coeff)});
  return out;
}

IPoly s_polynomial(const IPoly& f, const IPoly& g, const MonomialOrder& order) {
  const Monomial l = f.front().monomial.lcm(g.front().monomial);
  mpz_class d;
  mpz_gcd(d.get_mpz_t(), f.front().coeff.get_mpz_t(), g.front().coeff.get_mpz_t());
  mpz_class a = g.front().coeff / d, b = f.front().coeff / d;
  IPoly s = combine_tails(a, l / f.front().monomial, f, 1, b, l / g.front().monomial, g, order);
  make_primitive(s);
  return s;
}

IPoly reduce(IPoly p, const std::vector<const IPoly*>& divisors, const MonomialOrder& order, Rational* factor,
             std::size_t max_terms) {
  Rational f = 1;
  IPoly rem;
  std::size_t head = 0;
  int steps = 0;
  mpz_class a, b, d;
  while (head < p.size()) {
    const ITerm& lt = p[head];
    const IPoly* reducer = nullptr;
    for (const IPoly* g : divisors) {
      if (g->front().monomial.divides(lt.monomial)) {
        reducer = g;
        break;
      }
    }
    if (reducer == nullptr) {
      rem.push_back(std::move(p[head]));
      ++head;
      continue;
    }
    const ITerm& lg = reducer->front();
    mpz_gcd(d.get_mpz_t(), lg.coeff.get_mpz_t(), lt.coeff.get_mpz_t());
    mpz_divexact(a.get_mpz_t(), lg.coeff.get_mpz_t(), d.get_mpz_t());
    mpz_divexact(b.get_mpz_t(), lt.coeff.get_mpz_t(), d.get_mpz_t());
    if (a < 0) {
      a = -a;
      b = -b;
    }
    Monomial m = lt.monomial / lg.monomial;
    if (a != 1) {
      for (auto& t : rem) t.coeff *= a;
      f /= a;
    }
    p = combine_tails(a, Monomial{}, p, head + 1, b, m, *reducer, order);
    head = 0;
    if (p.size() > max_terms) throw ResourceLimit("intermediate polynomial exceeds term limit");
    if (++steps % kContentInterval == 0) {
      mpz_class c = content_of(rem, p, 0);
      if (c > 1) {
        for (auto& t : rem) mpz_divexact(t.coeff.get_mpz_t(), t.coeff.get_mpz_t(), c.get_mpz_t());
        for (auto& t : p) mpz_divexact(t.coeff.get_mpz_t(), t.coeff.get_mpz_t(), c.get_mpz_t());
        f *= c;
      }
    }
  }
  f *= make_primitive(rem);
  if (factor != nullptr) *factor = f;
  return rem;
}

}  // namespace qtrack::poly::detail
