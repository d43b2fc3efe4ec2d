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

#include "qtrack/monitor.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>

#include "qtrack/errors.hpp"

namespace qtrack::monitor {

namespace {

constexpr cplx kI{0.0, 1.0};

Vec2 normalized_phase(Vec2 v) {
  v.normalize();
  const std::size_t lead = std::abs(v(0)) > 1e-12 ? 0 : 1;
  return v * (std::conj(v(lead)) / std::abs(v(lead)));
}

// Coefficients of target in the basis {e, o}.
Eigen::Vector2cd solve_in_basis(const Vec2& e, const Vec2& o, const Vec2& target) {
  Mat2 basis;
  basis.col(0) = e;
  basis.col(1) = o;
  return basis.partialPivLu().solve(target);
}

}  // namespace

std::string to_string(StageClass c) {
  switch (c) {
    case StageClass::Stable: return "stable";
    case StageClass::Marginal: return "marginal";
    case StageClass::Unstable: return "unstable";
  }
  return "unknown";
}

Mat2 effective_hamiltonian(const TwoLevelModel& model, cplx mu) {
  const Mat2& c = model.jump_op();
  return model.hamiltonian() - 0.5 * kI * c.adjoint() * c - kI * std::conj(mu) * c -
         0.5 * kI * std::norm(mu) * Mat2::Identity();
}

Mat2 jump_operator(const TwoLevelModel& model, cplx mu) { return model.jump_op() + mu * Mat2::Identity(); }

MonitoringScheme build_scheme(const TwoLevelModel& model, const std::vector<cplx>& mu,
                              const std::vector<Vec2>& kets) {
  const std::size_t K = mu.size();
  if (kets.size() != K || K < 2) throw InvalidModel("need one ket per stage and at least two stages");
  MonitoringScheme s;
  s.mu = mu;
  for (std::size_t k = 0; k < K; ++k) {
    s.H_eff.push_back(effective_hamiltonian(model, mu[k]));
    s.s_ops.push_back(jump_operator(model, mu[k]));
    Eigen::ComplexEigenSolver<Mat2> es(kI * s.H_eff[k]);
    const Vec2 target = kets[k].normalized();
    std::array<double, 2> fid{};
    for (int i = 0; i < 2; ++i) fid[i] = bloch::fidelity(es.eigenvectors().col(i).normalized(), target);
    const int e = fid[0] >= fid[1] ? 0 : 1;
    Vec2 ve = es.eigenvectors().col(e).normalized();
    const cplx ov = ve.dot(target);
    if (std::abs(ov) > 0.0) ve *= ov / std::abs(ov);
    s.ensemble_eigs.push_back({es.eigenvalues()(e), ve});
    s.other_eigs.push_back({es.eigenvalues()(1 - e), normalized_phase(es.eigenvectors().col(1 - e))});
    s.overlaps.push_back(s.ensemble_eigs[k].vector.dot(s.other_eigs[k].vector));
  }
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t n = (k + 1) % K;
    const Vec2& e_next = s.ensemble_eigs[n].vector;
    const Vec2& o_next = s.other_eigs[n].vector;
    const auto qe = solve_in_basis(e_next, o_next, s.s_ops[k] * s.ensemble_eigs[k].vector);
    const auto qo = solve_in_basis(e_next, o_next, s.s_ops[k] * s.other_eigs[k].vector);
    Mat2 Q;
    Q << qe(0), qe(1), qo(0), qo(1);
    s.Q.push_back(Q);
  }
  return s;
}

MonitoringScheme scheme_from_ensemble(const TwoLevelModel& model, const PREnsemble& e,
                                      const SchemeOptions& options) {
  const std::size_t K = e.K();
  if (K < 2) throw NotRealizable("an ensemble needs at least two states");
  auto solve_mu = [&](const PREnsemble& en) {
    std::vector<Vec2> kets;
    for (const auto& r : en.states) kets.push_back(bloch::PureQubitState::from_bloch(r).amplitudes());
    std::vector<cplx> mu;
    for (std::size_t k = 0; k < K; ++k) {
      const Vec2& v = kets[k];
      const Vec2& w = kets[(k + 1) % K];
      if (1.0 - bloch::fidelity(v, w) < 1e-12) throw NotRealizable("consecutive states coincide");
      const auto x = solve_in_basis(v, w, model.jump_op() * v);
      mu.push_back(-x(0));
    }
    return std::pair{kets, mu};
  };
  PREnsemble en = e;
  auto [kets, mu] = solve_mu(en);
  if (options.canonical_orientation && K == 2) {
    const double tol = 1e-9;
    const bool flip = mu[0].real() < -tol || (std::abs(mu[0].real()) <= tol && mu[0].imag() < 0.0);
    if (flip) {
      en = ensemble::rotated(en, 1);
      std::tie(kets, mu) = solve_mu(en);
    }
  }
  MonitoringScheme s = build_scheme(model, mu, kets);
  s.ensemble = std::move(en);
  for (std::size_t k = 0; k < K; ++k) {
    if (1.0 - bloch::fidelity(s.ensemble_eigs[k].vector, kets[k]) > options.match_tolerance)
      throw NotRealizable("state " + std::to_string(k + 1) + " is not an eigenvector of its effective Hamiltonian");
  }
  const AppendixAReport rep = verify_appendix_a(s, options.identity_tolerance);
  if (rep.cycle_residual > options.identity_tolerance)
    throw NotRealizable("cycle operator is not proportional to the identity");
  return s;
}

std::array<EigenPair, 2> rf_eigensystem(cplx mu, double epsilon) {
  const cplx root = std::sqrt(cplx(epsilon * epsilon - 0.25, 0.0) - 2.0 * kI * epsilon * std::conj(mu));
  const double base = (1.0 + 2.0 * std::norm(mu)) / 4.0;
  std::array<EigenPair, 2> out;
  for (int i = 0; i < 2; ++i) {
    const double sign = i == 0 ? 1.0 : -1.0;
    Vec2 v(sign * root + 0.5 * kI, cplx(epsilon, 0.0));
    if (v.norm() == 0.0) v = Vec2(1.0, 0.0);
    out[i] = {base + sign * 0.5 * kI * root, v.normalized()};
  }
  return out;
}

cplx nu_plus(double epsilon) {
  return kI * std::sqrt(1.0 + std::sqrt(1.0 - 16.0 * epsilon * epsilon)) / (2.0 * std::sqrt(2.0));
}

cplx nu_minus(double epsilon) {
  return kI * std::sqrt(1.0 - std::sqrt(1.0 - 16.0 * epsilon * epsilon)) / (2.0 * std::sqrt(2.0));
}

double stability_C(const MonitoringScheme& s) {
  double num = 1.0, den = 1.0;
  for (std::size_t k = 0; k < s.K(); ++k) {
    num *= s.ensemble_eigs[k].lambda.real();
    den *= s.other_eigs[k].lambda.real();
  }
  return num / den;
}

double stability_C_from_Q(const MonitoringScheme& s) {
  cplx q22 = 1.0;
  double den = 1.0;
  for (std::size_t k = 0; k < s.K(); ++k) {
    q22 *= s.Q[k](1, 1);
    den *= 2.0 * s.other_eigs[k].lambda.real();
  }
  return std::norm(q22) / den;
}

double cycle_time(const MonitoringScheme& s) {
  double t = 0.0;
  for (const auto& e : s.ensemble_eigs) t += 1.0 / (2.0 * e.lambda.real());
  return t;
}

double asymptotic_rate(const MonitoringScheme& s) {
  const double C = stability_C(s);
  if (!(C < 1.0)) throw NotConvergent("C = " + std::to_string(C) + " is not below 1");
  return -std::log(C) / cycle_time(s);
}

std::vector<StageClass> stage_stability(const MonitoringScheme& s, double tol) {
  std::vector<StageClass> out;
  for (std::size_t k = 0; k < s.K(); ++k) {
    const double e = s.ensemble_eigs[k].lambda.real();
    const double o = s.other_eigs[k].lambda.real();
    if (std::abs(e - o) <= tol * std::max(std::abs(e), std::abs(o)))
      out.push_back(StageClass::Marginal);
    else
      out.push_back(e < o ? StageClass::Stable : StageClass::Unstable);
  }
  return out;
}

JumpBounds jump_fidelity_bounds(const MonitoringScheme& s, std::size_t k) {
  const std::size_t K = s.K();
  const Mat2 ss = s.s_ops[k].adjoint() * s.s_ops[k];
  Eigen::SelfAdjointEigenSolver<Mat2> es(ss);
  JumpBounds b;
  b.lambda_min = es.eigenvalues()(0);
  b.lambda_max = es.eigenvalues()(1);
  const double ok = std::norm(s.overlaps[k]);
  const double on = std::norm(s.overlaps[(k + 1) % K]);
  b.B = std::norm(s.Q[k](1, 1)) * (1.0 - on) / (1.0 - ok);
  b.drop_possible = b.lambda_min < b.B;
  return b;
}

std::array<cplx, 2> decompose(const MonitoringScheme& s, std::size_t k, const Vec2& psi) {
  const auto x = solve_in_basis(s.ensemble_eigs[k].vector, s.other_eigs[k].vector, psi);
  return {x(0), x(1)};
}

double infidelity(const MonitoringScheme& s, std::size_t k, const Vec2& psi) {
  const Vec2& v = s.ensemble_eigs[k].vector;
  const Vec2 perp(-std::conj(v(1)), std::conj(v(0)));
  return std::norm(perp.dot(psi)) / psi.squaredNorm();
}

JumpOutcome jump_outcome(const MonitoringScheme& s, std::size_t k, const Vec2& psi) {
  const std::size_t n = (k + 1) % s.K();
  const Vec2 after = s.s_ops[k] * psi;
  JumpOutcome out;
  out.norm_ratio = after.squaredNorm() / psi.squaredNorm();
  out.B = jump_fidelity_bounds(s, k).B;
  out.F_before = 1.0 - infidelity(s, k, psi);
  out.F_after = 1.0 - infidelity(s, n, after);
  out.drop = out.F_after < out.F_before;
  return out;
}

Mat2 cycle_operator(const MonitoringScheme& s) {
  Mat2 S = Mat2::Identity();
  for (const auto& op : s.s_ops) S = op * S;
  return S;
}

AppendixAReport verify_appendix_a(const MonitoringScheme& s, double tol) {
  AppendixAReport r;
  const std::size_t K = s.K();
  double q11sq = 1.0, twice_re = 1.0;
  cplx q11 = 1.0, q22 = 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (const EigenPair* p : {&s.ensemble_eigs[k], &s.other_eigs[k]}) {
      const Vec2 res = kI * s.H_eff[k] * p->vector - p->lambda * p->vector;
      r.eigen_residual = std::max(r.eigen_residual, res.norm());
    }
    r.q12_residual = std::max(r.q12_residual, std::abs(s.Q[k](0, 1)));
    q11sq *= std::norm(s.Q[k](0, 0));
    twice_re *= 2.0 * s.ensemble_eigs[k].lambda.real();
    q11 *= s.Q[k](0, 0);
    q22 *= s.Q[k](1, 1);
  }
  r.q11_product_residual = std::abs(q11sq - twice_re) / std::abs(twice_re);
  r.q_diagonal_residual = std::abs(q11 - q22) / std::max(std::abs(q11), std::abs(q22));
  const Mat2 S = cycle_operator(s);
  const cplx scale = S.trace() / 2.0;
  r.cycle_residual = (S - scale * Mat2::Identity()).norm() / S.norm();
  r.passes = r.eigen_residual < tol && r.q12_residual < tol && r.q11_product_residual < tol &&
             r.q_diagonal_residual < tol && r.cycle_residual < tol;
  return r;
}

StabilityReport analyze(const MonitoringScheme& s) {
  StabilityReport r;
  r.C = stability_C(s);
  r.C_from_Q = stability_C_from_Q(s);
  r.cycle_time = cycle_time(s);
  r.mean_square_stable = r.C < 1.0;
  r.R = r.mean_square_stable ? -std::log(r.C) / r.cycle_time : 0.0;
  r.stages = stage_stability(s);
  for (std::size_t k = 0; k < s.K(); ++k) r.jump_bounds.push_back(jump_fidelity_bounds(s, k));
  return r;
}

std::string stability_class(const StabilityReport& r) {
  if (!r.mean_square_stable) return "unstable";
  const bool piecewise = std::all_of(r.stages.begin(), r.stages.end(), [](StageClass c) { return c == StageClass::Stable; });
  return piecewise ? "piecewise" : "mean-square";
}

std::string two_state_branch(cplx mu1, double epsilon, double tol) {
  if (std::abs(mu1 - 0.5) < tol) return "half";
  if (epsilon <= 0.25) {
    const double dp = std::abs(mu1 - nu_plus(epsilon));
    const double dm = std::abs(mu1 - nu_minus(epsilon));
    if (dp < tol && dp <= dm) return "nu+";
    if (dm < tol) return "nu-";
  }
  return "";
}

MonitoringScheme rf_two_state_scheme(double epsilon, const std::string& branch) {
  const TwoLevelModel model = bloch::resonance_fluorescence(epsilon);
  const auto affine = bloch::to_bloch(model);
  for (const auto& e : ensemble::two_state_ensembles(affine)) {
    MonitoringScheme s = scheme_from_ensemble(model, e);
    if (two_state_branch(s.mu[0], epsilon) == branch) return s;
  }
  throw NotRealizable("no " + branch + " ensemble at epsilon = " + std::to_string(epsilon));
}

std::vector<BranchScheme> rf_two_state_schemes(double epsilon) {
  const TwoLevelModel model = bloch::resonance_fluorescence(epsilon);
  const auto affine = bloch::to_bloch(model);
  std::vector<BranchScheme> out;
  for (const auto& e : ensemble::two_state_ensembles(affine)) {
    MonitoringScheme s = scheme_from_ensemble(model, e);
    std::string name = two_state_branch(s.mu[0], epsilon);
    if (name.empty()) name = "2s-" + std::to_string(out.size() + 1);
    out.push_back({name, bloch::shannon_entropy(s.ensemble.weights), std::move(s)});
  }
  auto rank = [](const std::string& b) { return b == "half" ? 0 : b == "nu+" ? 1 : b == "nu-" ? 2 : 3; };
  std::stable_sort(out.begin(), out.end(),
                   [&](const BranchScheme& a, const BranchScheme& b) { return rank(a.branch) < rank(b.branch); });
  return out;
}

std::vector<BranchScheme> three_state_schemes(const TwoLevelModel& model, std::vector<PREnsemble> ensembles) {
  std::stable_sort(ensembles.begin(), ensembles.end(), [](const PREnsemble& a, const PREnsemble& b) {
    return bloch::shannon_entropy(a.weights) < bloch::shannon_entropy(b.weights);
  });
  std::vector<BranchScheme> out;
  for (const auto& e : ensembles) {
    const std::string name = "3s-" + std::to_string(out.size() + 1);
    out.push_back({name, bloch::shannon_entropy(e.weights), scheme_from_ensemble(model, e)});
  }
  return out;
}

std::vector<BranchScheme> rf_three_state_schemes(const poly::Rational& epsilon, const poly::SolveConfig& config) {
  const auto affine = ensemble::rf_affine_exact(epsilon);
  return three_state_schemes(bloch::resonance_fluorescence(epsilon.get_d()),
                             ensemble::three_state_ensembles(affine, config));
}

Vec2 perturbed_state(const MonitoringScheme& s, std::size_t k, double beta_sq) {
  if (!(beta_sq >= 0.0 && beta_sq <= 1.0)) throw InvalidModel("beta^2 must lie in [0, 1]");
  const double b = std::sqrt(beta_sq);
  const double re_o = s.overlaps[k].real();
  const double a = -b * re_o + std::sqrt(b * b * re_o * re_o - b * b + 1.0);
  const Vec2 psi = a * s.ensemble_eigs[k].vector + b * s.other_eigs[k].vector;
  return psi / psi.norm();
}

double nu_plus_stage_gap(double epsilon) {
  const MonitoringScheme s = rf_two_state_scheme(epsilon, "nu+");
  return s.ensemble_eigs[1].lambda.real() - s.other_eigs[1].lambda.real();
}

double nu_plus_threshold(double lo, double hi, double tol) {
  double flo = nu_plus_stage_gap(lo);
  const double fhi = nu_plus_stage_gap(hi);
  if ((flo < 0.0) == (fhi < 0.0)) throw NotConvergent("no stability flip inside the bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = nu_plus_stage_gap(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

nlohmann::json cjson(cplx z) { return {z.real(), z.imag()}; }

nlohmann::json vjson(const Vec2& v) { return {cjson(v(0)), cjson(v(1))}; }

}  // namespace

nlohmann::json to_json(const MonitoringScheme& s) {
  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t k = 0; k < s.K(); ++k) {
    const Mat2& Q = s.Q[k];
    stages.push_back({{"mu", cjson(s.mu[k])},
                      {"lambda_e", cjson(s.ensemble_eigs[k].lambda)},
                      {"v_e", vjson(s.ensemble_eigs[k].vector)},
                      {"lambda_o", cjson(s.other_eigs[k].lambda)},
                      {"v_o", vjson(s.other_eigs[k].vector)},
                      {"overlap", cjson(s.overlaps[k])},
                      {"Q", {{cjson(Q(0, 0)), cjson(Q(0, 1))}, {cjson(Q(1, 0)), cjson(Q(1, 1))}}}});
  }
  return {{"K", s.K()}, {"ensemble", ensemble::to_json(s.ensemble)}, {"stages", stages}};
}

nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t k = 0; k < r.stages.size(); ++k) {
    const auto& b = r.jump_bounds[k];
    stages.push_back({{"class", to_string(r.stages[k])},
                      {"lambda_min", b.lambda_min},
                      {"lambda_max", b.lambda_max},
                      {"B", b.B},
                      {"drop_possible", b.drop_possible}});
  }
  return {{"C", r.C},
          {"C_from_Q", r.C_from_Q},
          {"R", r.R},
          {"cycle_time", r.cycle_time},
          {"mean_square_stable", r.mean_square_stable},
          {"class", stability_class(r)},
          {"stages", stages}};
}

void write_stability_csv_header(std::ostream& out, std::size_t K) {
  out << "epsilon,branch,h,C,R,class";
  for (std::size_t k = 1; k <= K; ++k) out << ",stage" << k;
  out << '\n';
}

void write_stability_csv_row(std::ostream& out, double epsilon, const std::string& branch, double h,
                             const StabilityReport& r) {
  out << epsilon << ',' << branch << ',' << h << ',' << r.C << ',' << r.R << ',' << stability_class(r);
  for (StageClass c : r.stages) out << ',' << to_string(c);
  out << '\n';
}

void write_jump_csv_header(std::ostream& out, std::size_t K) {
  out << "epsilon,branch";
  for (std::size_t k = 1; k <= K; ++k) out << ",lambda_min" << k << ",lambda_max" << k << ",B" << k;
  out << '\n';
}

void write_jump_csv_row(std::ostream& out, double epsilon, const std::string& branch, const StabilityReport& r) {
  out << epsilon << ',' << branch;
  for (const auto& b : r.jump_bounds) out << ',' << b.lambda_min << ',' << b.lambda_max << ',' << b.B;
  out << '\n';
}

}  // namespace qtrack::monitor
