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

#include "qtrack/groebner.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <unordered_set>

#include "intpoly.hpp"
#include "qtrack/errors.hpp"

namespace qtrack::poly {

namespace {

using Terms = std::vector<Term>;

// a - c * m * b[1..], both descending in `order`. The leading term of b is
// skipped because the caller cancels it against a's head.
Terms subtract_scaled_tail(Terms::const_iterator a_begin, Terms::const_iterator a_end, const Terms& b,
                           const Rational& c, const Monomial& m, const MonomialOrder& order) {
  Terms out;
  out.reserve(static_cast<std::size_t>(a_end - a_begin) + b.size());
  auto i = a_begin;
  std::size_t j = 1;
  Monomial bm;
  bool have_bm = false;
  while (i != a_end && j < b.size()) {
    if (!have_bm) {
      bm = b[j].monomial * m;
      have_bm = true;
    }
    int cmp = order.compare(i->monomial, bm);
    if (cmp > 0) {
      out.push_back(*i++);
    } else if (cmp < 0) {
      out.push_back({bm, -c * b[j].coeff});
      ++j;
      have_bm = false;
    } else {
      Rational s = i->coeff - c * b[j].coeff;
      if (s != 0) out.push_back({bm, std::move(s)});
      ++i;
      ++j;
      have_bm = false;
    }
  }
  for (; i != a_end; ++i) out.push_back(*i);
  for (; j < b.size(); ++j) out.push_back({b[j].monomial * m, -c * b[j].coeff});
  return out;
}

// Core division loop shared by reduce() and multi_divide().
MultiPoly divide_impl(const MultiPoly& f, const std::vector<const MultiPoly*>& divisors,
                      const MonomialOrder& order, std::vector<MultiPoly>* quotients,
                      std::size_t max_terms = std::numeric_limits<std::size_t>::max()) {
  MultiPoly fo = f.with_order(order);
  Terms p = fo.terms();
  std::size_t head = 0;
  MultiPoly remainder(f.nvars(), order);
  Terms rem;
  while (head < p.size()) {
    const Term& lt = p[head];
    const MultiPoly* reducer = nullptr;
    std::size_t which = 0;
    for (std::size_t k = 0; k < divisors.size(); ++k) {
      const MultiPoly* g = divisors[k];
      if (g->leading().monomial.divides(lt.monomial)) {
        reducer = g;
        which = k;
        break;
      }
    }
    if (reducer == nullptr) {
      rem.push_back(std::move(p[head]));
      ++head;
      continue;
    }
    Monomial m = lt.monomial / reducer->leading().monomial;
    Rational c = lt.coeff / reducer->leading().coeff;
    if (quotients != nullptr) (*quotients)[which].add_term(m, c);
    p = subtract_scaled_tail(p.begin() + static_cast<std::ptrdiff_t>(head) + 1, p.end(), reducer->terms(), c,
                             m, order);
    head = 0;
    if (p.size() > max_terms) throw ResourceLimit("intermediate polynomial exceeds term limit");
  }
  for (auto& t : rem) remainder.add_term(t.monomial, t.coeff);
  return remainder;
}

}  // namespace

MultiPoly s_polynomial(const MultiPoly& f, const MultiPoly& g, const MonomialOrder& order) {
  if (f.is_zero() || g.is_zero()) throw ZeroPolynomial("S-polynomial of a zero polynomial");
  MultiPoly fo = f.with_order(order), go = g.with_order(order);
  const Term& lf = fo.leading();
  const Term& lg = go.leading();
  Monomial l = lf.monomial.lcm(lg.monomial);
  MultiPoly a = fo.scaled(1 / lf.coeff, l / lf.monomial);
  MultiPoly b = go.scaled(1 / lg.coeff, l / lg.monomial);
  return a - b;
}

DivisionResult multi_divide(const MultiPoly& f, std::span<const MultiPoly> divisors, const MonomialOrder& order) {
  std::vector<MultiPoly> storage;
  storage.reserve(divisors.size());
  for (const auto& g : divisors) {
    if (g.is_zero()) throw ZeroPolynomial("division by the zero polynomial");
    storage.push_back(g.with_order(order));
  }
  std::vector<const MultiPoly*> views;
  for (const auto& g : storage) views.push_back(&g);
  DivisionResult result;
  result.quotients.assign(divisors.size(), MultiPoly(f.nvars(), order));
  result.remainder = divide_impl(f, views, order, &result.quotients);
  return result;
}

MultiPoly reduce(const MultiPoly& f, std::span<const MultiPoly> divisors, const MonomialOrder& order) {
  std::vector<detail::IPoly> storage;
  for (const auto& g : divisors)
    if (!g.is_zero()) storage.push_back(detail::to_primitive(g, order));
  if (storage.empty() || f.is_zero()) return f.with_order(order);
  std::vector<const detail::IPoly*> views;
  for (const auto& g : storage) views.push_back(&g);
  Rational scale;
  detail::IPoly p = detail::to_primitive(f, order, &scale);
  Rational factor;
  detail::IPoly r = detail::reduce(std::move(p), views, order, &factor);
  return detail::to_multipoly(r, scale * factor, f.nvars(), order);
}

// ------------------------------------------------------------- Buchberger

namespace {

using detail::IPoly;

struct Pair {
  std::size_t i, j;
  Monomial lcm;
};

class Buchberger {
 public:
  Buchberger(const MonomialOrder& order, const BuchbergerConfig& config) : order_(order), config_(config) {}

  GroebnerBasis run(std::span<const MultiPoly> generators) {
    std::size_t nvars = generators.empty() ? order_.nvars() : generators.front().nvars();
    for (const auto& f : generators) {
      if (f.nvars() != nvars) throw std::invalid_argument("generators have different nvars");
      if (f.is_zero()) continue;
      IPoly h = normal_form(detail::to_primitive(f, order_));
      if (!h.empty()) insert(std::move(h));
    }
    while (!pairs_.empty()) {
      std::size_t best = select_pair();
      Pair p = pairs_[best];
      pairs_[best] = pairs_.back();
      pairs_.pop_back();
      IPoly h = normal_form(detail::s_polynomial(polys_[p.i], polys_[p.j], order_));
      ++stats_.pairs_reduced;
      if (h.empty()) {
        ++stats_.zero_reductions;
        continue;
      }
      insert(std::move(h));
    }
    return finish(nvars);
  }

 private:
  IPoly normal_form(IPoly f) {
    std::vector<const IPoly*> views;
    for (std::size_t k = 0; k < polys_.size(); ++k)
      if (active_[k]) views.push_back(&polys_[k]);
    if (views.empty() || f.empty()) return f;
    return detail::reduce(std::move(f), views, order_, nullptr, config_.max_terms);
  }

  std::size_t select_pair() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < pairs_.size(); ++k)
      if (pair_less(pairs_[k], pairs_[best])) best = k;
    return best;
  }

  bool pair_less(const Pair& a, const Pair& b) const {
    if (a.lcm.degree() != b.lcm.degree()) return a.lcm.degree() < b.lcm.degree();
    int c = order_.compare(a.lcm, b.lcm);
    if (c != 0) return c < 0;
    if (a.j != b.j) return a.j < b.j;
    return a.i < b.i;
  }

  const Monomial& lead(std::size_t k) const { return polys_[k].front().monomial; }

  // Gebauer-Moeller installation of a new basis element.
  void insert(IPoly h) {
    const std::size_t t = polys_.size();
    if (t + 1 > config_.max_basis) throw ResourceLimit("Groebner basis exceeds size limit");
    const Monomial lh = h.front().monomial;
    polys_.push_back(std::move(h));
    active_.push_back(true);

    // New pairs (g, h) for active g, filtered by the chain criterion among
    // themselves and then by the product criterion.
    std::vector<Pair> candidates;
    for (std::size_t k = 0; k < t; ++k)
      if (active_[k]) candidates.push_back({k, t, lead(k).lcm(lh)});
    std::vector<Pair> kept;
    for (std::size_t a = 0; a < candidates.size(); ++a) {
      const Pair& p = candidates[a];
      bool coprime = lead(p.i).coprime(lh);
      bool dominated = false;
      if (!coprime) {
        for (std::size_t b = a + 1; b < candidates.size() && !dominated; ++b)
          dominated = candidates[b].lcm.divides(p.lcm);
        for (std::size_t b = 0; b < kept.size() && !dominated; ++b) dominated = kept[b].lcm.divides(p.lcm);
      }
      if (coprime || !dominated) kept.push_back(p);
      else ++stats_.skipped_by_criteria;
    }
    std::vector<Pair> fresh;
    for (const auto& p : kept) {
      if (lead(p.i).coprime(lh)) ++stats_.skipped_by_criteria;
      else fresh.push_back(p);
    }

    // Old pairs made redundant by h.
    std::vector<Pair> old;
    old.reserve(pairs_.size() + fresh.size());
    for (const auto& p : pairs_) {
      bool drop = lh.divides(p.lcm) && !(lead(p.i).lcm(lh) == p.lcm) && !(lead(p.j).lcm(lh) == p.lcm);
      if (drop) ++stats_.skipped_by_criteria;
      else old.push_back(p);
    }
    for (auto& p : fresh) old.push_back(p);
    pairs_ = std::move(old);
    if (pairs_.size() > config_.max_pairs) throw ResourceLimit("pair queue exceeds limit");
    stats_.max_pair_queue = std::max(stats_.max_pair_queue, pairs_.size());

    for (std::size_t k = 0; k < t; ++k)
      if (active_[k] && lh.divides(lead(k))) active_[k] = false;
  }

  GroebnerBasis finish(std::size_t nvars) {
    std::vector<std::size_t> minimal;
    for (std::size_t k = 0; k < polys_.size(); ++k)
      if (active_[k]) minimal.push_back(k);
    std::sort(minimal.begin(), minimal.end(),
              [this](std::size_t a, std::size_t b) { return order_.compare(lead(a), lead(b)) < 0; });
    std::vector<MultiPoly> reduced;
    reduced.reserve(minimal.size());
    for (std::size_t k = 0; k < minimal.size(); ++k) {
      std::vector<const IPoly*> others;
      for (std::size_t l = 0; l < minimal.size(); ++l)
        if (l != k) others.push_back(&polys_[minimal[l]]);
      const IPoly& g = polys_[minimal[k]];
      // Leading terms are pairwise non-divisible, so only tails change.
      IPoly r = others.empty() ? g : detail::reduce(g, others, order_);
      reduced.push_back(detail::to_monic(r, nvars, order_));
    }
    if (reduced.empty()) reduced.push_back(MultiPoly(nvars, order_));  // zero ideal
    return GroebnerBasis{std::move(reduced), order_, stats_};
  }

  const MonomialOrder& order_;
  BuchbergerConfig config_;
  std::vector<IPoly> polys_;
  std::vector<bool> active_;
  std::vector<Pair> pairs_;
  BuchbergerStats stats_;
};

}  // namespace

GroebnerBasis buchberger(std::span<const MultiPoly> generators, const MonomialOrder& order,
                         const BuchbergerConfig& config) {
  for (const auto& f : generators)
    if (f.nvars() != order.nvars()) throw std::invalid_argument("order arity does not match generators");
  return Buchberger(order, config).run(generators);
}

bool is_groebner(std::span<const MultiPoly> basis, const MonomialOrder& order) {
  std::vector<IPoly> storage;
  for (const auto& g : basis)
    if (!g.is_zero()) storage.push_back(detail::to_primitive(g, order));
  std::vector<const IPoly*> views;
  for (const auto& g : storage) views.push_back(&g);
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      if (views[i]->front().monomial.coprime(views[j]->front().monomial)) continue;
      IPoly s = detail::s_polynomial(*views[i], *views[j], order);
      if (!detail::reduce(std::move(s), views, order).empty()) return false;
    }
  }
  return true;
}

bool same_ideal(std::span<const MultiPoly> a, std::span<const MultiPoly> b, const MonomialOrder& order) {
  for (const auto& f : a)
    if (!reduce(f, b, order).is_zero()) return false;
  for (const auto& f : b)
    if (!reduce(f, a, order).is_zero()) return false;
  return true;
}

// ----------------------------------------------------------- quotient ring

std::optional<std::size_t> QuotientBasis::index_of(const Monomial& m) const {
  for (std::size_t k = 0; k < monomials.size(); ++k)
    if (monomials[k] == m) return k;
  return std::nullopt;
}

QuotientBasis standard_monomials(const GroebnerBasis& basis) {
  const std::size_t nvars = basis.order.nvars();
  std::vector<Monomial> leads;
  for (const auto& g : basis.polys)
    if (!g.is_zero()) leads.push_back(g.leading().monomial);
  QuotientBasis out;
  out.nvars = nvars;
  for (const auto& l : leads)
    if (l.is_one()) return out;  // unit ideal: empty variety

  for (std::size_t v = 0; v < nvars; ++v) {
    bool pure = std::any_of(leads.begin(), leads.end(),
                            [v](const Monomial& l) { return l.degree() > 0 && l[v] == l.degree(); });
    if (!pure) throw NotZeroDimensional("no leading monomial is a pure power of x" + std::to_string(v + 1));
  }

  auto reducible = [&](const Monomial& m) {
    return std::any_of(leads.begin(), leads.end(), [&](const Monomial& l) { return l.divides(m); });
  };
  std::unordered_set<Monomial, MonomialHash> seen;
  std::deque<Monomial> queue{Monomial{}};
  seen.insert(Monomial{});
  while (!queue.empty()) {
    Monomial m = queue.front();
    queue.pop_front();
    out.monomials.push_back(m);
    for (std::size_t v = 0; v < nvars; ++v) {
      Monomial next = m * Monomial::variable(v);
      if (seen.count(next) || reducible(next)) continue;
      seen.insert(next);
      queue.push_back(next);
    }
  }
  const MonomialOrder& order = basis.order;
  std::sort(out.monomials.begin(), out.monomials.end(), [&order](const Monomial& a, const Monomial& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    return order.compare(a, b) > 0;
  });
  return out;
}

// ---------------------------------------------------------- RationalMatrix

RationalMatrix::RationalMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

RationalMatrix RationalMatrix::identity(std::size_t n) {
  RationalMatrix m(n, n);
  for (std::size_t k = 0; k < n; ++k) m(k, k) = 1;
  return m;
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shape mismatch");
  RationalMatrix r(a.rows_, b.cols_);
  Rational tmp;
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const Rational& aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) {
        const Rational& bkj = b(k, j);
        if (bkj == 0) continue;
        tmp = aik * bkj;
        r(i, j) += tmp;
      }
    }
  return r;
}

RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix shape mismatch");
  RationalMatrix r = a;
  for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += b.data_[k];
  return r;
}

RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix shape mismatch");
  RationalMatrix r = a;
  for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= b.data_[k];
  return r;
}

RationalMatrix operator*(const Rational& s, const RationalMatrix& a) {
  RationalMatrix r = a;
  for (auto& x : r.data_) x *= s;
  return r;
}

bool RationalMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](const Rational& x) { return x == 0; });
}

std::size_t RationalMatrix::nonzeros() const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [](const Rational& x) { return x != 0; }));
}

Eigen::MatrixXd RationalMatrix::to_double() const {
  Eigen::MatrixXd m(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        (*this)(i, j).get_d();
  return m;
}

// ---------------------------------------------------------- QuotientAlgebra

struct QuotientAlgebra::ReductionCache {
  std::vector<detail::IPoly> polys;
  std::vector<const detail::IPoly*> views;
};

QuotientAlgebra::QuotientAlgebra(GroebnerBasis basis, QuotientBasis standard)
    : basis_(std::move(basis)), standard_(std::move(standard)) {
  auto cache = std::make_shared<ReductionCache>();
  for (const auto& g : basis_.polys)
    if (!g.is_zero()) cache->polys.push_back(detail::to_primitive(g, basis_.order));
  for (const auto& g : cache->polys) cache->views.push_back(&g);
  reducer_ = std::move(cache);
}

const std::vector<Rational>& QuotientAlgebra::monomial_coordinates(const Monomial& m) {
  auto it = cache_.find(m);
  if (it != cache_.end()) return it->second;
  std::vector<Rational> coords(standard_.size(), Rational(0));
  if (auto idx = standard_.index_of(m)) {
    coords[*idx] = 1;
  } else {
    Rational factor;
    detail::IPoly r = detail::reduce(detail::IPoly{{m, mpz_class(1)}}, reducer_->views, basis_.order, &factor);
    for (const auto& t : r) {
      auto k = standard_.index_of(t.monomial);
      if (!k) throw std::logic_error("remainder term outside the quotient basis");
      coords[*k] = Rational(t.coeff) * factor;
    }
  }
  return cache_.emplace(m, std::move(coords)).first->second;
}

std::vector<Rational> QuotientAlgebra::coordinates(const MultiPoly& f) {
  std::vector<Rational> out(standard_.size(), Rational(0));
  for (const auto& t : f.terms()) {
    const auto& c = monomial_coordinates(t.monomial);
    for (std::size_t k = 0; k < out.size(); ++k)
      if (c[k] != 0) out[k] += t.coeff * c[k];
  }
  return out;
}

RationalMatrix QuotientAlgebra::mult_matrix(const MultiPoly& f) {
  const std::size_t n = standard_.size();
  RationalMatrix m(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    MultiPoly prod = f.scaled(Rational(1), standard_.monomials[j]);
    auto col = coordinates(prod);
    for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i];
  }
  return m;
}

MultMatrix mult_matrix(const MultiPoly& f, const GroebnerBasis& basis, const QuotientBasis& standard) {
  QuotientAlgebra alg(basis, standard);
  return MultMatrix{alg.mult_matrix(f), f, standard};
}

// ------------------------------------------------------------------ solving

double max_residual(std::span<const MultiPoly> system, std::span<const std::complex<double>> point) {
  double r = 0.0;
  for (const auto& f : system) r = std::max(r, std::abs(f.evaluate(point)));
  return r;
}

double newton_refine(std::span<const MultiPoly> system, std::vector<std::complex<double>>& point,
                     int max_iterations) {
  const std::size_t n = point.size();
  const std::size_t m = system.size();
  std::vector<std::vector<MultiPoly>> jac(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) jac[i].push_back(system[i].derivative(j));

  Eigen::VectorXcd x(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) x(static_cast<Eigen::Index>(j)) = point[j];
  auto eval = [&](const Eigen::VectorXcd& at, Eigen::VectorXcd& fval) {
    std::vector<std::complex<double>> p(at.data(), at.data() + at.size());
    fval.resize(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) fval(static_cast<Eigen::Index>(i)) = system[i].evaluate(p);
    return fval.cwiseAbs().maxCoeff();
  };
  Eigen::VectorXcd fval;
  double best = eval(x, fval);
  Eigen::VectorXcd best_x = x;
  int stalls = 0;
  for (int it = 0; it < max_iterations && best > 0.0; ++it) {
    Eigen::MatrixXcd J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<std::complex<double>> p(x.data(), x.data() + x.size());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = jac[i][j].evaluate(p);
    Eigen::VectorXcd step = J.colPivHouseholderQr().solve(-fval);
    if (!step.allFinite()) break;
    x += step;
    double r = eval(x, fval);
    if (!std::isfinite(r)) break;
    if (r < best) {
      stalls = r > 0.5 * best ? stalls + 1 : 0;
      best = r;
      best_x = x;
    } else {
      ++stalls;
    }
    if (stalls >= 3) break;
  }
  for (std::size_t j = 0; j < n; ++j) point[j] = best_x(static_cast<Eigen::Index>(j));
  return best;
}

namespace {

bool eigenvalues_separated(const Eigen::VectorXcd& ev, double tol) {
  double scale = 1.0;
  for (Eigen::Index k = 0; k < ev.size(); ++k) scale = std::max(scale, std::abs(ev(k)));
  for (Eigen::Index a = 0; a < ev.size(); ++a)
    for (Eigen::Index b = a + 1; b < ev.size(); ++b)
      if (std::abs(ev(a) - ev(b)) < tol * scale) return false;
  return true;
}

MultiPoly random_linear_form(std::size_t nvars, std::mt19937_64& rng, int range) {
  MultiPoly f(nvars);
  const auto span = static_cast<std::uint64_t>(2 * range);
  for (std::size_t v = 0; v < nvars; ++v) {
    auto draw = static_cast<int>(rng() % span);  // 0 .. 2*range-1
    int c = draw < range ? draw - range : draw - range + 1;  // skips zero
    f.add_term(Monomial::variable(v), Rational(c));
  }
  return f;
}

}  // namespace

SolveReport solve_zero_dim(std::span<const MultiPoly> system, const SolveConfig& config) {
  if (system.empty()) throw std::invalid_argument("empty system");
  const std::size_t nvars = system.front().nvars();
  const MonomialOrder order = MonomialOrder::drl(nvars);
  GroebnerBasis gb = buchberger(system, order, config.buchberger);
  SolveReport report;
  report.basis_size = gb.polys.size();
  report.stats = gb.stats;
  QuotientBasis standard = standard_monomials(gb);
  report.quotient_dimension = standard.size();
  if (standard.size() == 0) return report;
  if (standard.monomials.front() != Monomial{}) throw std::logic_error("quotient basis does not start with 1");

  QuotientAlgebra alg(std::move(gb), std::move(standard));
  const std::size_t n = alg.dimension();

  std::vector<Eigen::MatrixXd> var_mats;
  std::vector<Eigen::VectorXd> var_coords;
  for (std::size_t v = 0; v < nvars; ++v) {
    var_mats.push_back(alg.mult_matrix(MultiPoly::variable(nvars, v)).to_double());
    auto c = alg.coordinates(MultiPoly::variable(nvars, v));
    Eigen::VectorXd cv(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) cv(static_cast<Eigen::Index>(k)) = c[k].get_d();
    var_coords.push_back(std::move(cv));
  }

  std::mt19937_64 rng(config.seed);
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    ++report.attempts;
    MultiPoly f = (attempt == 0 && config.separating) ? *config.separating
                                                      : random_linear_form(nvars, rng, config.coefficient_range);
    Eigen::MatrixXd mf;
    if (f.total_degree() <= 1) {
      mf = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) *
           f.coefficient(Monomial{}).get_d();
      for (std::size_t v = 0; v < nvars; ++v) {
        double c = f.coefficient(Monomial::variable(v)).get_d();
        if (c != 0.0) mf += c * var_mats[v];
      }
    } else {
      mf = alg.mult_matrix(f).to_double();
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(mf.transpose());
    if (es.info() != Eigen::Success) continue;
    Eigen::VectorXcd ev = es.eigenvalues();
    if (!eigenvalues_separated(ev, config.separation_tolerance)) continue;

    Eigen::MatrixXcd vecs = es.eigenvectors();
    report.separating = f;
    for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
      Eigen::VectorXcd v = vecs.col(k);
      if (std::abs(v(0)) < 1e-12 * v.norm()) {
        ++report.candidates_rejected;
        continue;
      }
      v /= v(0);
      std::vector<std::complex<double>> point(nvars);
      for (std::size_t var = 0; var < nvars; ++var) point[var] = var_coords[var].cast<std::complex<double>>().dot(v);
      // Eigen's dot conjugates the first argument; coordinates are real so
      // this is the plain bilinear sum.
      double res = newton_refine(system, point);
      if (!(res < config.newton_tolerance)) {
        ++report.candidates_rejected;
        continue;
      }
      bool duplicate = false;
      for (const auto& s : report.solutions) {
        double d = 0.0;
        for (std::size_t var = 0; var < nvars; ++var) d = std::max(d, std::abs(s.values[var] - point[var]));
        if (d < 1e-8) duplicate = true;
      }
      if (duplicate) {
        ++report.candidates_rejected;
        continue;
      }
      report.solutions.push_back({std::move(point), res});
    }
    return report;
  }
  throw SolverDegeneracy("no separating element found after " + std::to_string(report.attempts) + " attempts");
}

// --------------------------------------------------- lex back-substitution

std::vector<std::complex<double>> univariate_roots(std::span<const std::complex<double>> coeffs) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && std::abs(coeffs[deg - 1]) == 0.0) --deg;
  if (deg <= 1) return {};
  const std::size_t d = deg - 1;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const std::complex<double> lead = coeffs[d];
  for (std::size_t k = 0; k < d; ++k)
    companion(0, static_cast<Eigen::Index>(k)) = -coeffs[d - 1 - k] / lead;
  for (std::size_t k = 1; k < d; ++k)
    companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
  std::vector<std::complex<double>> roots;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) roots.push_back(es.eigenvalues()(k));
  return roots;
}

std::vector<Solution> solve_lex_backsubstitution(std::span<const MultiPoly> system, double tolerance) {
  if (system.empty()) return {};
  const std::size_t nvars = system.front().nvars();
  const MonomialOrder order = MonomialOrder::lex(nvars);
  GroebnerBasis gb = buchberger(system, order);
  const auto& prec = order.precedence();

  auto uses_only = [&](const MultiPoly& g, std::size_t level) {
    // variables prec[level..] only
    for (const auto& t : g.terms())
      for (std::size_t k = 0; k < level; ++k)
        if (t.monomial[prec[k]] != 0) return false;
    return true;
  };

  std::vector<std::vector<std::complex<double>>> partial{std::vector<std::complex<double>>(nvars)};
  for (std::size_t step = 0; step < nvars; ++step) {
    const std::size_t level = nvars - 1 - step;
    const std::size_t var = prec[level];
    std::vector<const MultiPoly*> relevant;
    for (const auto& g : gb.polys) {
      if (g.is_zero() || !uses_only(g, level)) continue;
      bool has_var = std::any_of(g.terms().begin(), g.terms().end(),
                                 [var](const Term& t) { return t.monomial[var] != 0; });
      if (has_var) relevant.push_back(&g);
    }
    if (relevant.empty()) throw NotZeroDimensional("no eliminant for x" + std::to_string(var + 1));
    std::vector<std::vector<std::complex<double>>> next;
    for (const auto& pt : partial) {
      // Specialise every relevant polynomial to a univariate one in `var`.
      std::vector<std::vector<std::complex<double>>> unis;
      for (const MultiPoly* g : relevant) {
        std::vector<std::complex<double>> c;
        for (const auto& t : g->terms()) {
          std::complex<double> v = t.coeff.get_d();
          for (std::size_t k = level + 1; k < nvars; ++k)
            for (unsigned e = 0; e < t.monomial[prec[k]]; ++e) v *= pt[prec[k]];
          unsigned e = t.monomial[var];
          if (c.size() <= e) c.resize(e + 1, 0.0);
          c[e] += v;
        }
        unis.push_back(std::move(c));
      }
      // Lowest-degree specialisation with a non-vanishing leading coefficient.
      const std::vector<std::complex<double>>* pivot = nullptr;
      std::size_t best_deg = std::numeric_limits<std::size_t>::max();
      for (const auto& c : unis) {
        std::size_t d = c.size();
        while (d > 0 && std::abs(c[d - 1]) < tolerance) --d;
        if (d >= 2 && d - 1 < best_deg) {
          best_deg = d - 1;
          pivot = &c;
        }
      }
      if (pivot == nullptr) continue;
      std::vector<std::complex<double>> trimmed(pivot->begin(), pivot->begin() + static_cast<std::ptrdiff_t>(best_deg + 1));
      for (auto root : univariate_roots(trimmed)) {
        bool ok = true;
        for (const auto& c : unis) {
          std::complex<double> val = 0.0, pw = 1.0;
          double scale = 0.0;
          for (const auto& a : c) {
            val += a * pw;
            scale += std::abs(a * pw);
            pw *= root;
          }
          if (std::abs(val) > tolerance * std::max(1.0, scale)) ok = false;
        }
        if (!ok) continue;
        auto extended = pt;
        extended[var] = root;
        next.push_back(std::move(extended));
      }
    }
    partial = std::move(next);
  }
  std::vector<Solution> out;
  for (auto& pt : partial) {
    double res = newton_refine(system, pt);
    out.push_back({pt, res});
  }
  return out;
}

}  // namespace qtrack::poly
