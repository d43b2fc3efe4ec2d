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

#include "qtrack/bloch.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtrack/errors.hpp"

namespace qtrack::bloch {

namespace pauli {
Mat2 identity() { return Mat2::Identity(); }
Mat2 x() {
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
Mat2 y() {
  Mat2 m;
  m << 0.0, cplx(0.0, 1.0), cplx(0.0, -1.0), 0.0;
  return m;
}
Mat2 z() {
  Mat2 m;
  m << -1.0, 0.0, 0.0, 1.0;
  return m;
}
Mat2 lowering() {
  Mat2 m;
  m << 0.0, 1.0, 0.0, 0.0;
  return m;
}
}  // namespace pauli

// ------------------------------------------------------------------ model

TwoLevelModel TwoLevelModel::make(const Mat2& hamiltonian, const Mat2& jump_op, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidModel("gamma must be positive and finite");
  if (!hamiltonian.allFinite() || !jump_op.allFinite()) throw InvalidModel("non-finite matrix entries");
  const double scale = std::max(1.0, hamiltonian.norm());
  if ((hamiltonian - hamiltonian.adjoint()).norm() > 1e-12 * scale)
    throw InvalidModel("Hamiltonian is not Hermitian");
  TwoLevelModel m;
  Mat2 h = hamiltonian / gamma;
  Mat2 c = jump_op / std::sqrt(gamma);
  const cplx a = c.trace() / 2.0;
  c -= a * Mat2::Identity();
  h += cplx(0.0, 0.5) * (std::conj(a) * c - a * c.adjoint());
  m.hamiltonian_ = (h + h.adjoint()) / 2.0;
  m.jump_op_ = c;
  m.jump_offset_ = a;
  return m;
}

Mat2 TwoLevelModel::lindblad(const Mat2& rho) const {
  const cplx i(0.0, 1.0);
  const Mat2& h = hamiltonian_;
  const Mat2& c = jump_op_;
  const Mat2 cdc = c.adjoint() * c;
  return -i * (h * rho - rho * h) + c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

TwoLevelModel resonance_fluorescence(double epsilon) {
  return TwoLevelModel::make((epsilon / 2.0) * pauli::x(), pauli::lowering());
}

// ------------------------------------------------------------------ affine

Vec3 steady_state(const Mat3& A, const Vec3& b) {
  Eigen::FullPivLU<Mat3> lu(A);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if (!lu.isInvertible() || std::abs(A.determinant()) < 1e-14 * scale * scale * scale)
    throw SingularGenerator("A is singular; no unique steady state");
  Vec3 r = lu.solve(-b);
  // One round of iterative refinement keeps the residual at rounding level.
  r += lu.solve(-(A * r + b));
  return r;
}

BlochAffine BlochAffine::make(const Mat3& A, const Vec3& b) {
  BlochAffine out{A, b, steady_state(A, b)};
  Eigen3 e = eigen3(A);
  for (const auto& l : e.values)
    if (!(l.real() < 0.0)) throw InvalidModel("A has an eigenvalue with non-negative real part");
  return out;
}

BlochAffine to_bloch(const TwoLevelModel& model) {
  const std::array<Mat2, 3> s{pauli::x(), pauli::y(), pauli::z()};
  Mat3 A;
  Vec3 b;
  const Mat2 li = model.lindblad(Mat2::Identity());
  for (int i = 0; i < 3; ++i) {
    b(i) = 0.5 * (s[i] * li).trace().real();
    for (int j = 0; j < 3; ++j) A(i, j) = 0.5 * (s[i] * model.lindblad(s[j])).trace().real();
  }
  return BlochAffine::make(A, b);
}

// ------------------------------------------------------------------ eigen3

namespace {

// Coefficients of det(l I - A) = l^3 + c2 l^2 + c1 l + c0.
std::array<double, 3> char_poly(const Mat3& A) {
  const double tr = A.trace();
  const double minors = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0) +
                        A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  return {-A.determinant(), minors, -tr};
}

std::array<cplx, 3> cubic_roots(const std::array<double, 3>& c) {
  const double c2 = c[2], c1 = c[1], c0 = c[0];
  const double shift = -c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  std::array<cplx, 3> r;
  if (disc <= 0.0 && p < 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) r[k] = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift;
  } else if (p == 0.0 && q == 0.0) {
    r = {shift, shift, shift};
  } else {
    const double sq = std::sqrt(std::max(disc, 0.0));
    const double u = std::cbrt(-q / 2.0 + sq);
    const double v = std::cbrt(-q / 2.0 - sq);
    const double re = -(u + v) / 2.0 + shift;
    const double im = std::sqrt(3.0) / 2.0 * (u - v);
    r = {cplx(u + v + shift, 0.0), cplx(re, std::abs(im)), cplx(re, -std::abs(im))};
  }
  return r;
}

cplx polish(const std::array<double, 3>& c, cplx l) {
  for (int it = 0; it < 8; ++it) {
    const cplx f = ((l + c[2]) * l + c[1]) * l + c[0];
    const cplx df = (3.0 * l + 2.0 * c[2]) * l + c[1];
    if (std::abs(df) < 1e-10 * std::max(1.0, std::abs(l) * std::abs(l))) break;  // near a multiple root
    const cplx step = f / df;
    l -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(l))) break;
  }
  return l;
}

// Null vector of a (numerically) rank-2 matrix: best-conditioned cross
// product of two rows. Returns a zero vector when the rank is below 2.
Eigen::Vector3cd null_vector(const Eigen::Matrix3cd& m, double tol) {
  Eigen::Vector3cd best = Eigen::Vector3cd::Zero();
  double best_norm = 0.0;
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& pr : pairs) {
    Eigen::Vector3cd a = m.row(pr[0]).transpose(), b = m.row(pr[1]).transpose();
    Eigen::Vector3cd c(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0));
    if (c.norm() > best_norm) {
      best_norm = c.norm();
      best = c;
    }
  }
  if (best_norm <= tol) return Eigen::Vector3cd::Zero();
  return best / best_norm;
}

// Fixes phase (largest component real positive) and, for real vectors, sign
// (first non-negligible component positive).
Eigen::Vector3cd canonical(Eigen::Vector3cd v, bool real) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  v *= std::conj(v(k)) / std::abs(v(k));
  v.normalize();
  if (real) {
    Eigen::Vector3cd r = v.real().cast<cplx>();
    r.normalize();
    for (int i = 0; i < 3; ++i) {
      if (std::abs(r(i)) > 1e-9) {
        if (r(i).real() < 0.0) r = -r;
        break;
      }
    }
    return r;
  }
  return v;
}

}  // namespace

Eigen3 eigen3(const Mat3& A) {
  const auto c = char_poly(A);
  auto roots = cubic_roots(c);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (auto& l : roots) {
    l = polish(c, l);
    if (std::abs(l.imag()) <= 1e-12 * scale) l = cplx(l.real(), 0.0);
  }
  std::sort(roots.begin(), roots.end(), [](const cplx& a, const cplx& b) {
    const bool ra = a.imag() == 0.0, rb = b.imag() == 0.0;
    if (ra != rb) return ra;
    if (ra) return a.real() < b.real();
    return a.imag() > b.imag();
  });

  Eigen3 out;
  out.values = roots;
  const double tie = 1e-7 * scale;
  for (int k = 0; k < 3; ++k) {
    out.real[k] = roots[k].imag() == 0.0;
    const Eigen::Matrix3cd m = A.cast<cplx>() - roots[k] * Eigen::Matrix3cd::Identity();
    Eigen::Vector3cd v = null_vector(m, 1e-10 * scale * scale);
    if (v.isZero()) {
      // Rank <= 1: a repeated, non-defective eigenvalue. Pick an orthonormal
      // pair spanning the null space.
      Eigen::JacobiSVD<Eigen::Matrix3cd> svd(m, Eigen::ComputeFullV);
      int rank_one_index = 0;
      for (int j = 0; j < k; ++j)
        if (std::abs(roots[j] - roots[k]) < tie) ++rank_one_index;
      v = svd.matrixV().col(2 - std::min(rank_one_index, 1));
    }
    out.vectors[k] = canonical(v, out.real[k]);
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      if (std::abs(roots[a] - roots[b]) < tie) {
        const Eigen::Matrix3cd m = A.cast<cplx>() - roots[a] * Eigen::Matrix3cd::Identity();
        if (!null_vector(m, 1e-10 * scale * scale).isZero()) out.defective = true;
      }
  return out;
}

// --------------------------------------------------------------- entropies

double shannon_entropy(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidDistribution("weights must be non-negative and finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidDistribution("weights do not sum to one");
  double h = 0.0;
  for (double w : weights)
    if (w > 0.0) h -= w * std::log2(w);
  return std::max(h, 0.0);
}

double von_neumann_entropy(const Vec3& r) {
  const double n = std::min(r.norm(), 1.0);
  const double p = (1.0 + n) / 2.0, q = (1.0 - n) / 2.0;
  double s = 0.0;
  if (p > 0.0) s -= p * std::log2(p);
  if (q > 0.0) s -= q * std::log2(q);
  return std::clamp(s, 0.0, 1.0);
}

// ------------------------------------------------------------ pure states

Mat2 density_from_bloch(const Vec3& r) {
  return 0.5 * (pauli::identity() + r(0) * pauli::x() + r(1) * pauli::y() + r(2) * pauli::z());
}

Vec3 bloch_from_density(const Mat2& rho) {
  return Vec3((rho * pauli::x()).trace().real(), (rho * pauli::y()).trace().real(),
              (rho * pauli::z()).trace().real());
}

PureQubitState PureQubitState::from_ket(const Vec2& amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidModel("zero or non-finite ket");
  PureQubitState s;
  s.amplitudes_ = amplitudes / n;
  s.bloch_ = bloch_from_density(s.amplitudes_ * s.amplitudes_.adjoint());
  return s;
}

PureQubitState PureQubitState::from_bloch(const Vec3& r) {
  if (std::abs(r.norm() - 1.0) > 1e-9) throw InvalidModel("Bloch vector is not a unit vector");
  const Vec3 u = r.normalized();
  const Mat2 rho = density_from_bloch(u);
  Vec2 psi;
  if (rho(0, 0).real() >= rho(1, 1).real()) {
    const double a = std::sqrt(rho(0, 0).real());
    psi << a, rho(1, 0) / a;
  } else {
    const double b = std::sqrt(rho(1, 1).real());
    psi << rho(0, 1) / b, b;
    if (std::abs(psi(0)) > 1e-12) psi *= std::conj(psi(0)) / std::abs(psi(0));
  }
  PureQubitState s;
  s.amplitudes_ = psi.normalized();
  s.bloch_ = u;
  return s;
}

PureQubitState bloch_ket_roundtrip(const PureQubitState& state) {
  return PureQubitState::from_bloch(bloch_from_density(state.amplitudes() * state.amplitudes().adjoint()));
}

double fidelity(const Vec2& a, const Vec2& b) { return std::norm(a.dot(b)); }

// -------------------------------------------------------------------- JSON

namespace {

nlohmann::json mat2_json(const Mat2& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 2; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < 2; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Mat2 mat2_from(const nlohmann::json& j) {
  Mat2 m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = cplx(j.at(r).at(c).at(0).get<double>(), j.at(r).at(c).at(1).get<double>());
  return m;
}

nlohmann::json vec3_json(const Vec3& v) { return {v(0), v(1), v(2)}; }

}  // namespace

nlohmann::json to_json(const TwoLevelModel& model) {
  return {{"hamiltonian", mat2_json(model.hamiltonian())},
          {"jump_op", mat2_json(model.jump_op())},
          {"jump_offset", {model.jump_offset().real(), model.jump_offset().imag()}}};
}

TwoLevelModel model_from_json(const nlohmann::json& j) {
  // Stored fields are already canonical; a nonzero trace in hand-written
  // input is still canonicalized by make().
  TwoLevelModel m = TwoLevelModel::make(mat2_from(j.at("hamiltonian")), mat2_from(j.at("jump_op")),
                                        j.value("gamma", 1.0));
  if (j.contains("jump_offset"))
    m.jump_offset_ += cplx(j["jump_offset"].at(0).get<double>(), j["jump_offset"].at(1).get<double>());
  return m;
}

nlohmann::json to_json(const BlochAffine& affine) {
  nlohmann::json A = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) A.push_back({affine.A(i, 0), affine.A(i, 1), affine.A(i, 2)});
  return {{"A", A}, {"b", vec3_json(affine.b)}, {"r_ss", vec3_json(affine.r_ss)}};
}

BlochAffine affine_from_json(const nlohmann::json& j) {
  Mat3 A;
  Vec3 b;
  for (int i = 0; i < 3; ++i) {
    b(i) = j.at("b").at(i).get<double>();
    for (int k = 0; k < 3; ++k) A(i, k) = j.at("A").at(i).at(k).get<double>();
  }
  return BlochAffine::make(A, b);
}

}  // namespace qtrack::bloch
