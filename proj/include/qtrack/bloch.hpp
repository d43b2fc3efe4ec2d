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

// Qubit master equations with a single jump operator and their Bloch-vector
// (affine) form.
//
// Conventions used throughout the library:
//   * kets are written in the basis (|0>, |1>);
//   * sigma = |0><1| lowers |1> to |0>;
//   * r = (<sx>, <sy>, <sz>) with sz = diag(-1, 1), so |0> sits at z = -1;
//   * rates are in units of gamma, times in units of 1/gamma.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <span>

#include <json.hpp>

namespace qtrack::bloch {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

namespace pauli {
Mat2 identity();
Mat2 x();
Mat2 y();
Mat2 z();
/// |0><1|.
Mat2 lowering();
}  // namespace pauli

/// H and c of d rho/dt = -i[H, rho] + c rho c^+ - {c^+ c, rho}/2.
///
/// Construction rescales to gamma = 1 and makes the jump operator traceless:
/// c -> c - a with a = Tr(c)/2, compensated by H -> H + (i/2)(a* c' - a c'^+)
/// so the generator is unchanged. `jump_offset` keeps a, so a local
/// oscillator amplitude mu on the canonical operator corresponds to mu + a
/// on the operator that was passed in.
class TwoLevelModel {
 public:
  static TwoLevelModel make(const Mat2& hamiltonian, const Mat2& jump_op, double gamma = 1.0);

  const Mat2& hamiltonian() const { return hamiltonian_; }
  const Mat2& jump_op() const { return jump_op_; }
  cplx jump_offset() const { return jump_offset_; }

  /// The generator applied to a density matrix.
  Mat2 lindblad(const Mat2& rho) const;

 private:
  friend TwoLevelModel model_from_json(const nlohmann::json& j);

  Mat2 hamiltonian_;
  Mat2 jump_op_;
  cplx jump_offset_{0.0, 0.0};
};

/// H = (eps/2) sx and c = sigma, with gamma = 1.
TwoLevelModel resonance_fluorescence(double epsilon);

/// dr/dt = A r + b with the derived steady state r_ss = -A^{-1} b.
struct BlochAffine {
  Mat3 A;
  Vec3 b;
  Vec3 r_ss;

  /// Throws SingularGenerator when A is singular and InvalidModel when some
  /// eigenvalue of A has a non-negative real part.
  static BlochAffine make(const Mat3& A, const Vec3& b);
};

BlochAffine to_bloch(const TwoLevelModel& model);

/// -A^{-1} b. Throws SingularGenerator.
Vec3 steady_state(const Mat3& A, const Vec3& b);
inline Vec3 steady_state(const BlochAffine& affine) { return steady_state(affine.A, affine.b); }

/// Eigen-decomposition of a real 3x3 matrix. Eigenvalues come from the
/// closed-form cubic, polished by Newton steps on det(A - l I). Real
/// eigenvalues are listed first in ascending order, then the conjugate pair
/// with positive imaginary part first. For a defective matrix the repeated
/// eigenvalue shares one eigenvector and `defective` is set.
struct Eigen3 {
  std::array<cplx, 3> values;
  std::array<Eigen::Vector3cd, 3> vectors;
  std::array<bool, 3> real{};
  bool defective = false;

  int real_count() const { return int(real[0]) + int(real[1]) + int(real[2]); }
};

Eigen3 eigen3(const Mat3& A);

/// -sum p log2 p in bits. Throws InvalidDistribution unless the weights are
/// non-negative and sum to 1 within 1e-9.
double shannon_entropy(std::span<const double> weights);

/// Entropy (bits) of the state with Bloch vector r, |r| <= 1.
double von_neumann_entropy(const Vec3& r);

Mat2 density_from_bloch(const Vec3& r);
Vec3 bloch_from_density(const Mat2& rho);

class PureQubitState {
 public:
  /// Normalizes; throws InvalidModel for the zero vector.
  static PureQubitState from_ket(const Vec2& amplitudes);
  /// Requires |r| = 1 within 1e-9. The phase is fixed so the first nonzero
  /// amplitude is real and non-negative.
  static PureQubitState from_bloch(const Vec3& r);

  const Vec2& amplitudes() const { return amplitudes_; }
  const Vec3& bloch() const { return bloch_; }

 private:
  Vec2 amplitudes_;
  Vec3 bloch_;
};

/// ket -> Bloch vector -> ket.
PureQubitState bloch_ket_roundtrip(const PureQubitState& state);

/// |<a|b>|^2 for normalized kets.
double fidelity(const Vec2& a, const Vec2& b);

nlohmann::json to_json(const TwoLevelModel& model);
TwoLevelModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BlochAffine& affine);
BlochAffine affine_from_json(const nlohmann::json& j);

}  // namespace qtrack::bloch
