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

// Physically realizable pure-state ensembles of a qubit steady state with
// cyclic jumps r_1 -> r_2 -> ... -> r_K -> r_1.

#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qtrack/bloch.hpp"
#include "qtrack/groebner.hpp"

namespace qtrack::ensemble {

using bloch::BlochAffine;
using bloch::Vec3;
using poly::Rational;

/// Which eigenvectors of A generated an ensemble. Real eigenvalues sorted
/// in decreasing order are named U1, UPlus, UMinus; for resonance
/// fluorescence this matches u1 (rate -1/2) and u+- (-3/4 +- sqrt(1/16 - eps^2)).
enum class Provenance { U1, UPlus, UMinus, ConjugatePair, RealPair, Numeric };

std::string to_string(Provenance p);

struct PREnsemble {
  std::vector<Vec3> states;
  std::vector<double> weights;
  /// rates[k] is the jump rate from state k to state k+1 (mod K).
  std::vector<double> rates;
  Provenance provenance = Provenance::Numeric;
  /// Eigenvector names, e.g. "u+" or "u1,u-".
  std::string label;

  std::size_t K() const { return states.size(); }
};

struct PRReport {
  double max_residual = 0.0;
  std::vector<double> norm_residuals;  // | |r_k|^2 - 1 |
  std::vector<double> jump_residuals;  // |A r_j + b - kappa_j (r_{j+1} - r_j)|
  double convexity_residual = 0.0;     // |sum p_k r_k - r_ss|
  double weight_sum_residual = 0.0;
  bool rates_positive = true;
  bool passes = false;
};

/// The same ensemble with state `shift` moved to the front.
PREnsemble rotated(const PREnsemble& e, std::size_t shift);

/// Checks the PR conditions; passes iff every residual is below tol and all
/// rates are strictly positive.
PRReport verify_pr(const PREnsemble& e, const BlochAffine& affine, double tol);

/// One ensemble per real eigenvector of A.
std::vector<PREnsemble> two_state_ensembles(const BlochAffine& affine);

/// Exact rational version of (A, b) for the polynomial path.
struct RationalAffine {
  std::array<std::array<Rational, 3>, 3> A;
  std::array<Rational, 3> b;

  BlochAffine to_double() const;
};

/// Resonance fluorescence at a rational drive strength.
RationalAffine rf_affine_exact(const Rational& epsilon);

/// Rationalizes every entry with denominators up to max_denominator; throws
/// NonRationalInput when some entry is further than tol from every such
/// fraction.
RationalAffine rationalize(const BlochAffine& affine, long max_denominator = 1'000'000, double tol = 1e-12);

/// Exact decimal parse: "0.23" -> 23/100, "-1.5e-2" -> -3/200. Throws
/// NonRationalInput on malformed text.
Rational parse_decimal(std::string_view text);

/// Variable order of the cyclic three-state system.
inline constexpr std::size_t kThreeStateVars = 12;
/// Names x1..x12 <-> r1x r1y r1z r2x r2y r2z r3x r3y r3z k12 k23 k31.
std::string three_state_variable_name(std::size_t index);

/// Nine cyclic jump conditions followed by three normalization conditions.
std::vector<poly::MultiPoly> three_state_system(const RationalAffine& affine);

struct ThreeStateSearch {
  std::vector<PREnsemble> ensembles;
  poly::SolveReport report;
  std::size_t real_admissible = 0;  // before cyclic deduplication
};

/// All real cyclic three-state ensembles. Each ensemble is rotated so that
/// its most probable state comes first.
ThreeStateSearch three_state_search(const RationalAffine& affine, const poly::SolveConfig& config = {});
std::vector<PREnsemble> three_state_ensembles(const RationalAffine& affine, const poly::SolveConfig& config = {});

/// (Re l)^2 > 3 (Im l)^2.
bool complex_pair_feasible(std::complex<double> lambda);

struct EnsembleGeometry {
  double total_angle = 0.0;          // degrees
  std::vector<double> angles_to_ss;  // degrees, states by decreasing weight
  std::vector<double> weights;       // decreasing
  double entropy = 0.0;              // bits
};

/// Total angle is the sum of angles between cyclically consecutive states
/// (for K = 2 the single angle between the two states).
EnsembleGeometry geometry(const PREnsemble& e, const Vec3& r_ss);

/// Geometries of the ensembles with duplicates (mirror images share total
/// angle, state angles and entropy within tol) removed, by ascending entropy.
std::vector<EnsembleGeometry> distinct_geometries(const std::vector<PREnsemble>& ensembles, const Vec3& r_ss,
                                                  double tol = 1e-6);

/// Angle in degrees between two vectors.
double angle_deg(const Vec3& a, const Vec3& b);

nlohmann::json to_json(const PREnsemble& e);
PREnsemble ensemble_from_json(const nlohmann::json& j);

/// Columns: epsilon, solution_id, h, total_angle, angle1, angle2, angle3,
/// kappa12, kappa23, kappa31.
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, double epsilon, std::size_t id, const PREnsemble& e, const Vec3& r_ss);

}  // namespace qtrack::ensemble
