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

#include "qtrack/ensemble.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "qtrack/errors.hpp"

namespace qtrack::ensemble {

using bloch::cplx;

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::U1: return "u1";
    case Provenance::UPlus: return "u+";
    case Provenance::UMinus: return "u-";
    case Provenance::ConjugatePair: return "conjugate-pair";
    case Provenance::RealPair: return "real-pair";
    case Provenance::Numeric: return "numeric";
  }
  return "numeric";
}

namespace {

Provenance provenance_from_string(const std::string& s) {
  for (auto p : {Provenance::U1, Provenance::UPlus, Provenance::UMinus, Provenance::ConjugatePair,
                 Provenance::RealPair, Provenance::Numeric})
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown provenance '" + s + "'");
}

// Eigenvectors of A with the u1/u+/u- naming. Real eigenvalues in decreasing
// order take the names in turn; a conjugate pair is u+ (Im > 0) and u-.
struct NamedEigen {
  std::string name;
  cplx value;
  Eigen::Vector3cd vector;
  bool real;
};

std::vector<NamedEigen> named_eigenvectors(const bloch::Mat3& A) {
  bloch::Eigen3 e = bloch::eigen3(A);
  std::vector<NamedEigen> out;
  std::vector<int> real_idx, complex_idx;
  for (int k = 0; k < 3; ++k) (e.real[k] ? real_idx : complex_idx).push_back(k);
  std::sort(real_idx.begin(), real_idx.end(),
            [&](int a, int b) { return e.values[a].real() > e.values[b].real(); });
  const char* names[] = {"u1", "u+", "u-"};
  for (std::size_t r = 0; r < real_idx.size(); ++r)
    out.push_back({names[r], e.values[real_idx[r]], e.vectors[real_idx[r]], true});
  for (int k : complex_idx)
    out.push_back({e.values[k].imag() > 0.0 ? "u+" : "u-", e.values[k], e.vectors[k], false});
  return out;
}

Provenance single_provenance(const std::string& name) {
  if (name == "u1") return Provenance::U1;
  if (name == "u+") return Provenance::UPlus;
  return Provenance::UMinus;
}

}  // namespace

// ------------------------------------------------------------- PR checks

PRReport verify_pr(const PREnsemble& e, const BlochAffine& affine, double tol) {
  PRReport rep;
  const std::size_t K = e.K();
  if (K == 0 || e.weights.size() != K || (K > 1 && e.rates.size() != K)) {
    rep.max_residual = std::numeric_limits<double>::infinity();
    return rep;
  }
  double wsum = 0.0;
  Vec3 mean = Vec3::Zero();
  for (std::size_t k = 0; k < K; ++k) {
    rep.norm_residuals.push_back(std::abs(e.states[k].squaredNorm() - 1.0));
    Vec3 drift = affine.A * e.states[k] + affine.b;
    if (K > 1) {
      const std::size_t next = (k + 1) % K;
      drift -= e.rates[k] * (e.states[next] - e.states[k]);
      if (!(e.rates[k] > 0.0)) rep.rates_positive = false;
    }
    rep.jump_residuals.push_back(drift.norm());
    wsum += e.weights[k];
    mean += e.weights[k] * e.states[k];
  }
  rep.convexity_residual = (mean - affine.r_ss).norm();
  rep.weight_sum_residual = std::abs(wsum - 1.0);
  rep.max_residual = std::max({*std::max_element(rep.norm_residuals.begin(), rep.norm_residuals.end()),
                               *std::max_element(rep.jump_residuals.begin(), rep.jump_residuals.end()),
                               rep.convexity_residual, rep.weight_sum_residual});
  rep.passes = rep.max_residual < tol && rep.rates_positive;
  return rep;
}

// -------------------------------------------------------- two-state search

namespace {

// 1 - |r_ss|^2 from an exact rational solve of A r = -b on the binary values
// of A and b; the floating r_ss loses all digits of this when |r_ss| -> 1.
double unit_deficit(const BlochAffine& affine) {
  std::array<std::array<Rational, 4>, 3> m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = Rational(affine.A(i, j));
    m[i][3] = -Rational(affine.b(i));
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    while (piv < 3 && m[piv][c] == 0) ++piv;
    if (piv == 3) return 1.0 - affine.r_ss.squaredNorm();
    std::swap(m[c], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c || m[r][c] == 0) continue;
      const Rational f = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  Rational norm2 = 0;
  for (int i = 0; i < 3; ++i) {
    const Rational x = m[i][3] / m[i][i];
    norm2 += x * x;
  }
  return Rational(1 - norm2).get_d();
}

}  // namespace

std::vector<PREnsemble> two_state_ensembles(const BlochAffine& affine) {
  const Vec3& rss = affine.r_ss;
  const double deficit = unit_deficit(affine);
  std::vector<PREnsemble> out;
  std::vector<Vec3> seen;
  for (const auto& ev : named_eigenvectors(affine.A)) {
    if (!ev.real) continue;
    const Vec3 u = ev.vector.real().normalized();
    bool duplicate = std::any_of(seen.begin(), seen.end(), [&](const Vec3& s) { return std::abs(s.dot(u)) > 1 - 1e-12; });
    if (duplicate) continue;  // defective A: repeated eigenvector
    seen.push_back(u);
    const double p = rss.dot(u);
    const double root = std::sqrt(std::max(p * p + deficit, 0.0));
    // t+ and -t-, whose product is the deficit.
    const double eta1 = p > 0.0 ? deficit / (p + root) : root - p;
    const double eta2 = p < 0.0 ? deficit / (root - p) : root + p;
    const double lambda = ev.value.real();
    PREnsemble e;
    e.states = {rss + eta1 * u, rss - eta2 * u};
    for (auto& s : e.states) s.normalize();
    e.weights = {eta2 / (eta1 + eta2), eta1 / (eta1 + eta2)};
    e.rates = {-eta1 * lambda / (eta1 + eta2), -eta2 * lambda / (eta1 + eta2)};
    e.provenance = single_provenance(ev.name);
    e.label = ev.name;
    out.push_back(std::move(e));
  }
  return out;
}

// ----------------------------------------------------------- rationals

BlochAffine RationalAffine::to_double() const {
  bloch::Mat3 a;
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    v(i) = b[i].get_d();
    for (int j = 0; j < 3; ++j) a(i, j) = A[i][j].get_d();
  }
  return BlochAffine::make(a, v);
}

RationalAffine rf_affine_exact(const Rational& epsilon) {
  RationalAffine r;
  for (auto& row : r.A) row.fill(Rational(0));
  r.A[0][0] = Rational(-1, 2);
  r.A[1][1] = Rational(-1, 2);
  r.A[1][2] = -epsilon;
  r.A[2][1] = epsilon;
  r.A[2][2] = -1;
  r.b = {Rational(0), Rational(0), Rational(-1)};
  return r;
}

namespace {

// Best rational approximation with denominator <= max_den (continued
// fractions with the semiconvergent check).
Rational best_rational(double x, long max_den) {
  if (!std::isfinite(x)) throw NonRationalInput("non-finite value");
  const bool neg = x < 0.0;
  double v = std::abs(x);
  mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    const double a_d = std::floor(frac);
    mpz_class a(a_d);
    mpz_class q2 = a * q1 + q0;
    if (q2 > max_den) {
      mpz_class k = (mpz_class(max_den) - q0) / q1;
      mpz_class ps = k * p1 + p0, qs = k * q1 + q0;
      Rational semi(ps, qs), conv(p1, q1);
      semi.canonicalize();
      conv.canonicalize();
      Rational best = std::abs(semi.get_d() - v) < std::abs(conv.get_d() - v) ? semi : conv;
      return neg ? Rational(-best) : best;
    }
    mpz_class p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double rem = frac - a_d;
    if (rem <= 0.0 || std::abs(Rational(p1, q1).get_d() - v) == 0.0) break;
    frac = 1.0 / rem;
  }
  Rational r(p1, q1);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

Rational rationalize_entry(double x, long max_den, double tol) {
  Rational r = best_rational(x, max_den);
  if (std::abs(r.get_d() - x) > tol * std::max(1.0, std::abs(x)))
    throw NonRationalInput("value " + std::to_string(x) + " has no rational form with denominator <= " +
                           std::to_string(max_den));
  return r;
}

}  // namespace

RationalAffine rationalize(const BlochAffine& affine, long max_denominator, double tol) {
  RationalAffine r;
  for (int i = 0; i < 3; ++i) {
    r.b[i] = rationalize_entry(affine.b(i), max_denominator, tol);
    for (int j = 0; j < 3; ++j) r.A[i][j] = rationalize_entry(affine.A(i, j), max_denominator, tol);
  }
  return r;
}

Rational parse_decimal(std::string_view text) {
  std::size_t i = 0;
  auto fail = [&]() -> Rational { throw NonRationalInput("cannot parse decimal '" + std::string(text) + "'"); };
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false, any = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      any = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any) return fail();
  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
    std::string ed;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ed.push_back(text[i++]);
    if (ed.empty() || ed.size() > 6) return fail();
    exponent = std::stol(ed) * (eneg ? -1 : 1);
  }
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i != text.size()) return fail();
  mpz_class num(digits, 10);
  const long shift = exponent - frac_digits;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
  Rational r = shift >= 0 ? Rational(num * pow10) : Rational(num, pow10);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

// -------------------------------------------------------- three-state system

std::string three_state_variable_name(std::size_t index) {
  static const char* names[kThreeStateVars] = {"r1x", "r1y", "r1z", "r2x", "r2y", "r2z",
                                               "r3x", "r3y", "r3z", "k12", "k23", "k31"};
  if (index >= kThreeStateVars) throw std::out_of_range("three-state variable index");
  return names[index];
}

std::vector<poly::MultiPoly> three_state_system(const RationalAffine& affine) {
  using poly::MultiPoly;
  const std::size_t n = kThreeStateVars;
  auto X = [n](std::size_t i) { return MultiPoly::variable(n, i); };
  std::vector<MultiPoly> sys;
  for (std::size_t j = 0; j < 3; ++j) {
    const std::size_t next = (j + 1) % 3;
    const MultiPoly kappa = X(9 + j);
    for (std::size_t c = 0; c < 3; ++c) {
      MultiPoly f = MultiPoly::constant(n, affine.b[c]);
      for (std::size_t d = 0; d < 3; ++d)
        if (affine.A[c][d] != 0) f += affine.A[c][d] * X(3 * j + d);
      f -= kappa * (X(3 * next + c) - X(3 * j + c));
      sys.push_back(std::move(f));
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    MultiPoly f = MultiPoly::constant(n, Rational(-1));
    for (std::size_t c = 0; c < 3; ++c) f += X(3 * j + c) * X(3 * j + c);
    sys.push_back(std::move(f));
  }
  return sys;
}

PREnsemble rotated(const PREnsemble& e, std::size_t shift) {
  PREnsemble r = e;
  const std::size_t K = e.K();
  for (std::size_t k = 0; k < K; ++k) {
    r.states[k] = e.states[(k + shift) % K];
    r.weights[k] = e.weights[(k + shift) % K];
    r.rates[k] = e.rates[(k + shift) % K];
  }
  return r;
}

namespace {

bool same_up_to_rotation(const PREnsemble& a, const PREnsemble& b, double tol) {
  const std::size_t K = a.K();
  if (K != b.K()) return false;
  for (std::size_t s = 0; s < K; ++s) {
    bool all = true;
    for (std::size_t k = 0; k < K && all; ++k) all = (a.states[k] - b.states[(k + s) % K]).norm() < tol;
    if (all) return true;
  }
  return false;
}

void assign_plane_provenance(PREnsemble& e, const BlochAffine& affine) {
  std::vector<Vec3> d;
  for (const auto& r : e.states) d.push_back(r - affine.r_ss);
  Vec3 normal = Vec3::Zero();
  for (std::size_t a = 0; a < d.size(); ++a)
    for (std::size_t b = a + 1; b < d.size(); ++b) {
      Vec3 c = d[a].cross(d[b]);
      if (c.norm() > normal.norm()) normal = c;
    }
  e.provenance = Provenance::Numeric;
  e.label = "numeric";
  if (normal.norm() < 1e-12) return;
  normal.normalize();
  auto named = named_eigenvectors(affine.A);
  for (std::size_t a = 0; a < named.size(); ++a) {
    for (std::size_t b = a + 1; b < named.size(); ++b) {
      Vec3 p, q;
      const bool conj = !named[a].real && !named[b].real;
      if (named[a].real != named[b].real) continue;
      if (conj) {
        p = named[a].vector.real();
        q = named[a].vector.imag();
      } else {
        p = named[a].vector.real();
        q = named[b].vector.real();
      }
      Vec3 m = p.cross(q);
      if (m.norm() < 1e-12) continue;
      if (std::abs(m.normalized().dot(normal)) > 1.0 - 1e-6) {
        e.provenance = conj ? Provenance::ConjugatePair : Provenance::RealPair;
        e.label = named[a].name + "," + named[b].name;
        return;
      }
    }
  }
}

}  // namespace

ThreeStateSearch three_state_search(const RationalAffine& affine, const poly::SolveConfig& config) {
  const BlochAffine fa = affine.to_double();
  const auto system = three_state_system(affine);
  ThreeStateSearch out;
  out.report = poly::solve_zero_dim(system, config);
  for (const auto& sol : out.report.solutions) {
    const auto& v = sol.values;
    if (std::any_of(v.begin(), v.end(), [](const cplx& c) { return std::abs(c.imag()) > 1e-8; })) continue;
    PREnsemble e;
    for (std::size_t k = 0; k < 3; ++k) e.states.emplace_back(v[3 * k].real(), v[3 * k + 1].real(), v[3 * k + 2].real());
    e.rates = {v[9].real(), v[10].real(), v[11].real()};
    if (std::any_of(e.rates.begin(), e.rates.end(), [](double r) { return !(r > 1e-12); })) continue;
    if (std::any_of(e.states.begin(), e.states.end(), [](const Vec3& r) { return std::abs(r.norm() - 1.0) > 1e-6; }))
      continue;
    // Stationary flux balance p_k kappa_{k,k+1} = const.
    double z = 0.0;
    for (double r : e.rates) z += 1.0 / r;
    for (double r : e.rates) e.weights.push_back(1.0 / r / z);
    if (!verify_pr(e, fa, 1e-8).passes) continue;
    ++out.real_admissible;
    bool dup = std::any_of(out.ensembles.begin(), out.ensembles.end(),
                           [&](const PREnsemble& o) { return same_up_to_rotation(o, e, 1e-6); });
    if (dup) continue;
    const std::size_t top = static_cast<std::size_t>(
        std::max_element(e.weights.begin(), e.weights.end()) - e.weights.begin());
    e = rotated(e, top);
    assign_plane_provenance(e, fa);
    out.ensembles.push_back(std::move(e));
  }
  std::sort(out.ensembles.begin(), out.ensembles.end(), [](const PREnsemble& a, const PREnsemble& b) {
    return bloch::shannon_entropy(a.weights) < bloch::shannon_entropy(b.weights);
  });
  return out;
}

std::vector<PREnsemble> three_state_ensembles(const RationalAffine& affine, const poly::SolveConfig& config) {
  return three_state_search(affine, config).ensembles;
}

bool complex_pair_feasible(std::complex<double> lambda) {
  return lambda.real() * lambda.real() > 3.0 * lambda.imag() * lambda.imag();
}

// ---------------------------------------------------------------- geometry

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
}

EnsembleGeometry geometry(const PREnsemble& e, const Vec3& r_ss) {
  EnsembleGeometry g;
  const std::size_t K = e.K();
  if (K == 2) {
    g.total_angle = angle_deg(e.states[0], e.states[1]);
  } else {
    for (std::size_t k = 0; k < K; ++k) g.total_angle += angle_deg(e.states[k], e.states[(k + 1) % K]);
  }
  std::vector<std::size_t> idx(K);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return e.weights[a] > e.weights[b]; });
  for (std::size_t k : idx) {
    g.angles_to_ss.push_back(angle_deg(e.states[k], r_ss));
    g.weights.push_back(e.weights[k]);
  }
  g.entropy = bloch::shannon_entropy(e.weights);
  return g;
}

std::vector<EnsembleGeometry> distinct_geometries(const std::vector<PREnsemble>& ensembles, const Vec3& r_ss,
                                                  double tol) {
  auto same = [tol](const EnsembleGeometry& a, const EnsembleGeometry& b) {
    auto close = [tol](double x, double y) { return std::abs(x - y) <= tol * std::max(1.0, std::abs(x)); };
    if (!close(a.total_angle, b.total_angle) || !close(a.entropy, b.entropy)) return false;
    if (a.angles_to_ss.size() != b.angles_to_ss.size()) return false;
    for (std::size_t i = 0; i < a.angles_to_ss.size(); ++i)
      if (!close(a.angles_to_ss[i], b.angles_to_ss[i])) return false;
    return true;
  };
  std::vector<EnsembleGeometry> out;
  for (const auto& e : ensembles) {
    EnsembleGeometry g = geometry(e, r_ss);
    if (std::none_of(out.begin(), out.end(), [&](const EnsembleGeometry& o) { return same(o, g); }))
      out.push_back(std::move(g));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EnsembleGeometry& a, const EnsembleGeometry& b) { return a.entropy < b.entropy; });
  return out;
}

// -------------------------------------------------------------------- I/O

nlohmann::json to_json(const PREnsemble& e) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : e.states) states.push_back({s(0), s(1), s(2)});
  return {{"K", e.K()},          {"states", states},
          {"weights", e.weights}, {"rates", e.rates},
          {"provenance", to_string(e.provenance)}, {"label", e.label}};
}

PREnsemble ensemble_from_json(const nlohmann::json& j) {
  PREnsemble e;
  for (const auto& s : j.at("states")) e.states.emplace_back(s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>());
  e.weights = j.at("weights").get<std::vector<double>>();
  e.rates = j.at("rates").get<std::vector<double>>();
  e.provenance = provenance_from_string(j.value("provenance", std::string("numeric")));
  e.label = j.value("label", std::string());
  return e;
}

void write_csv_header(std::ostream& out) {
  out << "epsilon,solution_id,h,total_angle,angle1,angle2,angle3,kappa12,kappa23,kappa31\n";
}

void write_csv_row(std::ostream& out, double epsilon, std::size_t id, const PREnsemble& e, const Vec3& r_ss) {
  const EnsembleGeometry g = geometry(e, r_ss);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  out << num(epsilon) << ',' << id << ',' << num(g.entropy) << ',' << num(g.total_angle);
  for (std::size_t k = 0; k < 3; ++k) out << ',' << (k < g.angles_to_ss.size() ? num(g.angles_to_ss[k]) : "");
  for (std::size_t k = 0; k < 3; ++k) out << ',' << (k < e.rates.size() ? num(e.rates[k]) : "");
  out << '\n';
}

}  // namespace qtrack::ensemble
