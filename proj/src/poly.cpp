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

#include "qtrack/poly.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qtrack/errors.hpp"

namespace qtrack::poly {

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(std::span<const unsigned> exponents) {
  if (exponents.size() > kMaxVars)
    throw ResourceLimit("monomial has more than " + std::to_string(kMaxVars) + " variables");
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] > 255) throw ResourceLimit("exponent exceeds 255");
    exp_[i] = static_cast<std::uint8_t>(exponents[i]);
  }
  recompute();
}

Monomial Monomial::variable(std::size_t index, unsigned power) {
  if (index >= kMaxVars) throw ResourceLimit("variable index out of range");
  if (power > 255) throw ResourceLimit("exponent exceeds 255");
  Monomial m;
  m.exp_[index] = static_cast<std::uint8_t>(power);
  m.recompute();
  return m;
}

void Monomial::recompute() {
  degree_ = 0;
  mask_ = 0;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    degree_ = static_cast<std::uint16_t>(degree_ + exp_[i]);
    if (exp_[i] != 0) mask_ = static_cast<std::uint16_t>(mask_ | (1u << i));
  }
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial r;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    unsigned e = unsigned{exp_[i]} + other.exp_[i];
    if (e > 255) throw ResourceLimit("exponent exceeds 255");
    r.exp_[i] = static_cast<std::uint8_t>(e);
  }
  r.degree_ = static_cast<std::uint16_t>(degree_ + other.degree_);
  r.mask_ = static_cast<std::uint16_t>(mask_ | other.mask_);
  return r;
}

Monomial Monomial::operator/(const Monomial& divisor) const {
  Monomial r;
  for (std::size_t i = 0; i < kMaxVars; ++i)
    r.exp_[i] = static_cast<std::uint8_t>(exp_[i] - divisor.exp_[i]);
  r.recompute();
  return r;
}

Monomial Monomial::lcm(const Monomial& other) const {
  Monomial r;
  for (std::size_t i = 0; i < kMaxVars; ++i) r.exp_[i] = std::max(exp_[i], other.exp_[i]);
  r.recompute();
  return r;
}

std::size_t Monomial::hash() const {
  // FNV-1a over the exponent bytes.
  std::uint64_t h = 1469598103934665603ull;
  for (auto e : exp_) {
    h ^= e;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

// ----------------------------------------------------------- MonomialOrder

MonomialOrder::MonomialOrder(OrderKind kind, std::vector<std::size_t> precedence)
    : kind_(kind), precedence_(std::move(precedence)) {
  std::vector<std::size_t> sorted = precedence_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i) throw std::invalid_argument("precedence is not a permutation");
  if (precedence_.size() > kMaxVars) throw ResourceLimit("too many variables");
}

MonomialOrder MonomialOrder::lex(std::size_t nvars) {
  std::vector<std::size_t> p(nvars);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return {OrderKind::Lex, std::move(p)};
}

MonomialOrder MonomialOrder::drl(std::size_t nvars) {
  std::vector<std::size_t> p(nvars);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return {OrderKind::DegRevLex, std::move(p)};
}

int MonomialOrder::compare(const Monomial& a, const Monomial& b) const {
  if (kind_ == OrderKind::Lex) {
    for (std::size_t v : precedence_)
      if (a[v] != b[v]) return a[v] > b[v] ? 1 : -1;
    return 0;
  }
  if (a.degree() != b.degree()) return a.degree() > b.degree() ? 1 : -1;
  for (auto it = precedence_.rbegin(); it != precedence_.rend(); ++it)
    if (a[*it] != b[*it]) return a[*it] < b[*it] ? 1 : -1;
  return 0;
}

// --------------------------------------------------------------- MultiPoly

MultiPoly::MultiPoly(std::size_t nvars) : MultiPoly(nvars, MonomialOrder::drl(nvars)) {}

MultiPoly::MultiPoly(std::size_t nvars, MonomialOrder order)
    : nvars_(nvars), order_(std::move(order)) {
  if (nvars > kMaxVars) throw ResourceLimit("too many variables");
  if (order_.nvars() != nvars) throw std::invalid_argument("order arity does not match nvars");
}

MultiPoly MultiPoly::constant(std::size_t nvars, const Rational& c) {
  return monomial(nvars, Monomial{}, c);
}

MultiPoly MultiPoly::variable(std::size_t nvars, std::size_t index) {
  if (index >= nvars) throw std::out_of_range("variable index out of range");
  return monomial(nvars, Monomial::variable(index), Rational(1));
}

MultiPoly MultiPoly::monomial(std::size_t nvars, const Monomial& m, const Rational& c) {
  MultiPoly p(nvars);
  if (c != 0) p.terms_.push_back({m, c});
  return p;
}

unsigned MultiPoly::total_degree() const {
  unsigned d = 0;
  for (const auto& t : terms_) d = std::max(d, t.monomial.degree());
  return d;
}

void MultiPoly::sort_terms() {
  std::sort(terms_.begin(), terms_.end(), [this](const Term& a, const Term& b) {
    return order_.compare(a.monomial, b.monomial) > 0;
  });
}

MultiPoly MultiPoly::with_order(const MonomialOrder& order) const {
  if (order.nvars() != nvars_) throw std::invalid_argument("order arity does not match nvars");
  MultiPoly r(nvars_, order);
  r.terms_ = terms_;
  if (!(order == order_)) r.sort_terms();
  return r;
}

void MultiPoly::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m, [this](const Term& t, const Monomial& key) {
    return order_.compare(t.monomial, key) > 0;
  });
  if (it != terms_.end() && it->monomial == m) {
    it->coeff += c;
    if (it->coeff == 0) terms_.erase(it);
  } else {
    terms_.insert(it, Term{m, c});
  }
}

namespace {

// Merges sorted term lists: a + sign * b.
std::vector<Term> merge_terms(const std::vector<Term>& a, const std::vector<Term>& b, int sign,
                              const MonomialOrder& order) {
  std::vector<Term> out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    int c = order.compare(a[i].monomial, b[j].monomial);
    if (c > 0) {
      out.push_back(a[i++]);
    } else if (c < 0) {
      out.push_back({b[j].monomial, sign > 0 ? b[j].coeff : Rational(-b[j].coeff)});
      ++j;
    } else {
      Rational s = sign > 0 ? Rational(a[i].coeff + b[j].coeff) : Rational(a[i].coeff - b[j].coeff);
      if (s != 0) out.push_back({a[i].monomial, std::move(s)});
      ++i;
      ++j;
    }
  }
  for (; i < a.size(); ++i) out.push_back(a[i]);
  for (; j < b.size(); ++j) out.push_back({b[j].monomial, sign > 0 ? b[j].coeff : Rational(-b[j].coeff)});
  return out;
}

}  // namespace

MultiPoly& MultiPoly::operator+=(const MultiPoly& other) {
  if (other.nvars_ != nvars_) throw std::invalid_argument("nvars mismatch");
  const MultiPoly& rhs = other.order_ == order_ ? other : other.with_order(order_);
  terms_ = merge_terms(terms_, rhs.terms_, +1, order_);
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& other) {
  if (other.nvars_ != nvars_) throw std::invalid_argument("nvars mismatch");
  if (other.order_ == order_) {
    terms_ = merge_terms(terms_, other.terms_, -1, order_);
  } else {
    MultiPoly rhs = other.with_order(order_);
    terms_ = merge_terms(terms_, rhs.terms_, -1, order_);
  }
  return *this;
}

MultiPoly& MultiPoly::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coeff *= c;
  return *this;
}

MultiPoly MultiPoly::operator-() const {
  MultiPoly r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  if (a.nvars_ != b.nvars_) throw std::invalid_argument("nvars mismatch");
  MultiPoly r(a.nvars_, a.order_);
  for (const auto& t : b.terms_) r += a.scaled(t.coeff, t.monomial);
  return r;
}

MultiPoly MultiPoly::scaled(const Rational& c, const Monomial& m) const {
  MultiPoly r(nvars_, order_);
  if (c == 0) return r;
  r.terms_.reserve(terms_.size());
  // Multiplication by a monomial preserves any admissible order.
  for (const auto& t : terms_) r.terms_.push_back({t.monomial * m, t.coeff * c});
  return r;
}

MultiPoly MultiPoly::monic() const {
  if (is_zero()) return *this;
  Rational inv = 1 / leading().coeff;
  MultiPoly r = *this;
  r *= inv;
  return r;
}

Rational MultiPoly::coefficient(const Monomial& m) const {
  for (const auto& t : terms_)
    if (t.monomial == m) return t.coeff;
  return Rational(0);
}

std::complex<double> MultiPoly::evaluate(std::span<const std::complex<double>> point) const {
  if (point.size() != nvars_) throw std::invalid_argument("point arity does not match nvars");
  std::complex<double> sum = 0.0;
  for (const auto& t : terms_) {
    std::complex<double> v = t.coeff.get_d();
    for (std::size_t i = 0; i < nvars_; ++i)
      for (unsigned e = 0; e < t.monomial[i]; ++e) v *= point[i];
    sum += v;
  }
  return sum;
}

Rational MultiPoly::evaluate(std::span<const Rational> point) const {
  if (point.size() != nvars_) throw std::invalid_argument("point arity does not match nvars");
  Rational sum = 0;
  for (const auto& t : terms_) {
    Rational v = t.coeff;
    for (std::size_t i = 0; i < nvars_; ++i)
      for (unsigned e = 0; e < t.monomial[i]; ++e) v *= point[i];
    sum += v;
  }
  return sum;
}

MultiPoly MultiPoly::derivative(std::size_t index) const {
  MultiPoly r(nvars_, order_);
  for (const auto& t : terms_) {
    unsigned e = t.monomial[index];
    if (e == 0) continue;
    r.add_term(t.monomial / Monomial::variable(index), t.coeff * e);
  }
  return r;
}

MultiPoly MultiPoly::rename(std::span<const std::size_t> perm) const {
  if (perm.size() != nvars_) throw std::invalid_argument("permutation arity does not match nvars");
  MultiPoly r(nvars_, order_);
  std::vector<unsigned> e(nvars_);
  for (const auto& t : terms_) {
    std::fill(e.begin(), e.end(), 0u);
    for (std::size_t i = 0; i < nvars_; ++i) e[perm[i]] += t.monomial[i];
    r.add_term(Monomial(e), t.coeff);
  }
  return r;
}

bool operator==(const MultiPoly& a, const MultiPoly& b) {
  if (a.nvars_ != b.nvars_ || a.terms_.size() != b.terms_.size()) return false;
  MultiPoly diff = a - b;
  return diff.is_zero();
}

// ----------------------------------------------------------------- text IO

std::string format_poly(const MultiPoly& p) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  for (const auto& t : p.terms()) {
    const Rational& c = t.coeff;
    os << (sgn(c) < 0 ? '-' : '+') << '(' << abs(c.get_num()) << '/' << c.get_den() << ')';
    for (std::size_t i = 0; i < p.nvars(); ++i)
      if (t.monomial[i] > 0) os << "*x" << (i + 1) << '^' << t.monomial[i];
  }
  return os.str();
}

namespace {

class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t nvars) : s_(text), nvars_(nvars) {}

  MultiPoly parse() {
    MultiPoly p(nvars_);
    skip_ws();
    if (at_end()) throw ParseError("empty polynomial");
    if (peek() == '0') {
      std::size_t save = pos_;
      ++pos_;
      skip_ws();
      if (at_end()) return p;
      pos_ = save;
    }
    bool first = true;
    while (true) {
      skip_ws();
      if (at_end()) break;
      int sign = 1;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1 : 1;
        ++pos_;
        skip_ws();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      first = false;
      Rational coeff(1);
      bool have_factor = false;
      std::vector<unsigned> exps(nvars_, 0);
      while (true) {
        skip_ws();
        if (at_end()) break;
        char c = peek();
        if (c == '(' ) {
          ++pos_;
          coeff *= parse_rational_until(')');
          have_factor = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
          coeff *= parse_rational_until('\0');
          have_factor = true;
        } else if (c == 'x') {
          ++pos_;
          std::size_t idx = parse_uint();
          if (idx == 0 || idx > nvars_) fail("variable index out of range");
          unsigned e = 1;
          skip_ws();
          if (!at_end() && peek() == '^') {
            ++pos_;
            e = static_cast<unsigned>(parse_uint());
          }
          exps[idx - 1] += e;
          have_factor = true;
        } else {
          break;
        }
        skip_ws();
        if (!at_end() && peek() == '*') {
          ++pos_;
          continue;
        }
        break;
      }
      if (!have_factor) fail("empty term");
      p.add_term(Monomial(exps), sign > 0 ? coeff : Rational(-coeff));
    }
    return p;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(s_) + "'");
  }
  std::size_t parse_uint() {
    std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("expected integer");
    return std::stoul(std::string(s_.substr(start, pos_ - start)));
  }
  // Reads `p`, `p/q`, `-p/q` or a decimal; consumes the closing delimiter
  // when one is given.
  Rational parse_rational_until(char close) {
    skip_ws();
    std::size_t start = pos_;
    while (!at_end()) {
      char c = peek();
      bool inside = close != '\0';
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '.' ||
          (inside && (c == '-' || c == '+' || c == ' ')))
        ++pos_;
      else
        break;
    }
    std::string tok(s_.substr(start, pos_ - start));
    tok.erase(std::remove(tok.begin(), tok.end(), ' '), tok.end());
    if (close != '\0') {
      skip_ws();
      if (at_end() || peek() != close) fail("expected ')'");
      ++pos_;
    }
    if (tok.empty()) fail("expected number");
    return parse_rational_token(tok);
  }
  Rational parse_rational_token(const std::string& tok) const {
    auto dot = tok.find('.');
    if (dot == std::string::npos) {
      Rational r;
      if (r.set_str(tok, 10) != 0) fail("bad rational '" + tok + "'");
      r.canonicalize();
      if (r.get_den() == 0) fail("zero denominator");
      return r;
    }
    std::string digits = tok.substr(0, dot) + tok.substr(dot + 1);
    mpz_class num(digits.empty() || digits == "-" ? "0" : digits, 10);
    mpz_class den = 1;
    for (std::size_t i = dot + 1; i < tok.size(); ++i) den *= 10;
    Rational r(num, den);
    r.canonicalize();
    return r;
  }

  std::string_view s_;
  std::size_t nvars_;
  std::size_t pos_ = 0;
};

std::size_t max_variable_index(std::string_view line) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != 'x') continue;
    std::size_t j = i + 1, v = 0;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) v = v * 10 + (line[j++] - '0');
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

MultiPoly parse_poly(std::string_view text, std::size_t nvars) { return PolyParser(text, nvars).parse(); }

void write_system(std::ostream& out, std::span<const MultiPoly> system) {
  std::size_t nvars = system.empty() ? 0 : system.front().nvars();
  out << "# nvars: " << nvars << '\n';
  for (const auto& p : system) out << format_poly(p) << '\n';
}

std::vector<MultiPoly> read_system(std::istream& in) {
  std::vector<std::string> lines;
  std::size_t nvars = 0;
  bool have_header = false;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      auto pos = line.find("nvars:");
      if (pos != std::string::npos) {
        nvars = std::stoul(line.substr(pos + 6));
        have_header = true;
      }
      continue;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (!have_header)
    for (const auto& l : lines) nvars = std::max(nvars, max_variable_index(l));
  std::vector<MultiPoly> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(parse_poly(l, nvars));
  return out;
}

}  // namespace qtrack::poly
