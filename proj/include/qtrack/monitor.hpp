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

// Adaptive jump monitoring that cycles a local oscillator amplitude mu_k on
// every detection, and the stability analysis of the resulting scheme.
//
// Between jumps a stage-k state evolves as exp(-i H(mu_k) t); an eigenvector
// v of i H(mu_k) with eigenvalue lambda decays as exp(-lambda t), so
// Re(lambda) > 0 is the amplitude decay rate.

#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtrack/bloch.hpp"
#include "qtrack/ensemble.hpp"

namespace qtrack::monitor {

using bloch::cplx;
using bloch::Mat2;
using bloch::TwoLevelModel;
using bloch::Vec2;
using ensemble::PREnsemble;

enum class StageClass { Stable, Marginal, Unstable };

std::string to_string(StageClass c);

struct EigenPair {
  cplx lambda;
  Vec2 vector;  // normalized
};

struct MonitoringScheme {
  /// The ensemble in stage order.
  PREnsemble ensemble;
  std::vector<cplx> mu;
  std::vector<Mat2> H_eff;
  std::vector<Mat2> s_ops;
  std::vector<EigenPair> ensemble_eigs;
  std::vector<EigenPair> other_eigs;
  /// s_k v^e_k = Q(0,0) v^e_{k+1} + Q(0,1) v^o_{k+1} and
  /// s_k v^o_k = Q(1,0) v^e_{k+1} + Q(1,1) v^o_{k+1}; Q(0,1) vanishes for a
  /// realizable scheme.
  std::vector<Mat2> Q;
  /// <v^e_k | v^o_k>.
  std::vector<cplx> overlaps;

  std::size_t K() const { return mu.size(); }
};

/// H - (i/2) c^+ c - i mu* c - (i/2)|mu|^2 for the model's canonical c.
Mat2 effective_hamiltonian(const TwoLevelModel& model, cplx mu);
/// c + mu.
Mat2 jump_operator(const TwoLevelModel& model, cplx mu);

/// Builds the stage data for given amplitudes without checking that the
/// ensemble is invariant. The ensemble eigenvector of stage k is the
/// eigenvector of i H(mu_k) closest to kets[k].
MonitoringScheme build_scheme(const TwoLevelModel& model, const std::vector<cplx>& mu,
                              const std::vector<Vec2>& kets);

struct SchemeOptions {
  /// For K = 2, rotate so mu_1 has positive real part, or positive imaginary
  /// part when it is purely imaginary.
  bool canonical_orientation = true;
  double match_tolerance = 1e-8;
  double identity_tolerance = 1e-10;
};

/// Solves c v_k = -mu_k v_k + b_k v_{k+1} for every stage. Throws
/// NotRealizable when some v_k is not an eigenvector of H(mu_k) or the cycle
/// operator is not proportional to the identity.
MonitoringScheme scheme_from_ensemble(const TwoLevelModel& model, const PREnsemble& e,
                                      const SchemeOptions& options = {});

/// Closed-form eigenpairs of i H(mu) for resonance fluorescence, index 0 is
/// lambda_+ and index 1 is lambda_-.
std::array<EigenPair, 2> rf_eigensystem(cplx mu, double epsilon);

/// i sqrt(1 +- sqrt(1 - 16 eps^2)) / (2 sqrt 2), eps <= 1/4.
cplx nu_plus(double epsilon);
cplx nu_minus(double epsilon);

/// prod Re l^e / prod Re l^o.
double stability_C(const MonitoringScheme& s);
/// |prod Q22|^2 / (2^K prod Re l^o).
double stability_C_from_Q(const MonitoringScheme& s);
/// Expected cycle duration sum_k 1/(2 Re l^e_k) for a scheme started in the
/// ensemble.
double cycle_time(const MonitoringScheme& s);
/// -ln C / cycle_time. Throws NotConvergent when C >= 1.
double asymptotic_rate(const MonitoringScheme& s);

std::vector<StageClass> stage_stability(const MonitoringScheme& s, double tol = 1e-12);

struct JumpBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// A jump from stage k lowers the fidelity iff the squared norm ratio
  /// ||s psi||^2 / ||psi||^2 is below B.
  double B = 0.0;
  bool drop_possible = false;
};

JumpBounds jump_fidelity_bounds(const MonitoringScheme& s, std::size_t k);

/// Components of psi in the stage-k basis {v^e_k, v^o_k}.
std::array<cplx, 2> decompose(const MonitoringScheme& s, std::size_t k, const Vec2& psi);

/// 1 - |<v^e_k|psi>|^2 / ||psi||^2, accurate for small values.
double infidelity(const MonitoringScheme& s, std::size_t k, const Vec2& psi);

struct JumpOutcome {
  double norm_ratio = 0.0;
  double B = 0.0;
  double F_before = 0.0;
  double F_after = 0.0;
  bool drop = false;
};

/// Fidelities before and after a stage-k jump from psi.
JumpOutcome jump_outcome(const MonitoringScheme& s, std::size_t k, const Vec2& psi);

struct AppendixAReport {
  double eigen_residual = 0.0;      // max |i H v - l v|
  double q12_residual = 0.0;        // max |Q(0,1)|
  double q11_product_residual = 0.0;  // relative, prod |Q11|^2 vs 2^K prod Re l^e
  double q_diagonal_residual = 0.0;   // relative, prod Q11 vs prod Q22
  double cycle_residual = 0.0;        // relative distance of s_K...s_1 from a multiple of I
  bool passes = false;
};

AppendixAReport verify_appendix_a(const MonitoringScheme& s, double tol = 1e-10);

/// s_K ... s_1.
Mat2 cycle_operator(const MonitoringScheme& s);

struct StabilityReport {
  double C = 0.0;
  double C_from_Q = 0.0;
  /// Zero when C >= 1.
  double R = 0.0;
  double cycle_time = 0.0;
  std::vector<StageClass> stages;
  std::vector<JumpBounds> jump_bounds;
  bool mean_square_stable = false;
};

StabilityReport analyze(const MonitoringScheme& s);

/// "piecewise", "mean-square" or "unstable".
std::string stability_class(const StabilityReport& r);

/// "half", "nu+", "nu-" for resonance fluorescence two-state schemes, or an
/// empty string when mu_1 matches none of them.
std::string two_state_branch(cplx mu1, double epsilon, double tol = 1e-6);

/// The resonance fluorescence two-state scheme of the named branch. Throws
/// NotRealizable when the branch has no real ensemble at this epsilon.
MonitoringScheme rf_two_state_scheme(double epsilon, const std::string& branch);

struct BranchScheme {
  std::string branch;
  double entropy = 0.0;  // bits
  MonitoringScheme scheme;
};

/// Resonance fluorescence two-state schemes in the order half, nu+, nu-
/// (those that exist at this epsilon).
std::vector<BranchScheme> rf_two_state_schemes(double epsilon);

/// Schemes for three-state ensembles named "3s-<i>" with i counting from 1 by
/// ascending entropy.
std::vector<BranchScheme> three_state_schemes(const TwoLevelModel& model, std::vector<PREnsemble> ensembles);

/// Resonance fluorescence at an exact drive strength.
std::vector<BranchScheme> rf_three_state_schemes(const poly::Rational& epsilon, const poly::SolveConfig& config = {});

/// psi = alpha v^e_k + beta v^o_k with beta = sqrt(beta_sq) and alpha > 0
/// fixed by ||psi|| = 1.
Vec2 perturbed_state(const MonitoringScheme& s, std::size_t k, double beta_sq);

/// Re l^e_2 - Re l^o_2 on the nu+ branch; changes sign at the threshold.
double nu_plus_stage_gap(double epsilon);
/// Bisection for the root of nu_plus_stage_gap in [lo, hi].
double nu_plus_threshold(double lo = 0.2, double hi = 0.2499, double tol = 1e-12);

nlohmann::json to_json(const MonitoringScheme& s);
nlohmann::json to_json(const StabilityReport& r);

/// Columns: epsilon, branch, h, C, R, class, stage1..stageK.
void write_stability_csv_header(std::ostream& out, std::size_t K);
void write_stability_csv_row(std::ostream& out, double epsilon, const std::string& branch, double h,
                             const StabilityReport& r);
/// Columns: epsilon, branch, lambda_min, lambda_max, B1..BK.
void write_jump_csv_header(std::ostream& out, std::size_t K);
void write_jump_csv_row(std::ostream& out, double epsilon, const std::string& branch, const StabilityReport& r);

}  // namespace qtrack::monitor
