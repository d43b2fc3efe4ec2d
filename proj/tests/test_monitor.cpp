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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qtrack/errors.hpp"
#include "qtrack/monitor.hpp"

using namespace qtrack;
using namespace qtrack::monitor;

namespace {

const cplx I(0, 1);

Vec2 random_ket(std::mt19937& rng) {
  std::normal_distribution<double> n;
  Vec2 v(cplx(n(rng), n(rng)), cplx(n(rng), n(rng)));
  return v.normalized();
}

}  // namespace

TEST_CASE("effective Hamiltonian dissipator is -(i/2) s^+ s") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = bloch::resonance_fluorescence(std::abs(u(rng)) * 2);
    const cplx mu(u(rng), u(rng));
    const Mat2 H = effective_hamiltonian(model, mu);
    const Mat2 s = jump_operator(model, mu);
    CHECK((H - H.adjoint() + I * s.adjoint() * s).norm() < 1e-14);
  }
}

TEST_CASE("closed-form eigensystem matches numerics") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double eps = 0.05 + std::abs(u(rng));
    const cplx mu(u(rng), u(rng));
    const auto model = bloch::resonance_fluorescence(eps);
    const Mat2 iH = I * effective_hamiltonian(model, mu);
    for (const auto& ep : rf_eigensystem(mu, eps)) {
      CHECK((iH * ep.vector - ep.lambda * ep.vector).norm() < 1e-12);
      CHECK(ep.vector.norm() == doctest::Approx(1.0));
      CHECK(ep.lambda.real() > 0.0);
    }
  }
}

TEST_CASE("half-branch constants") {
  for (double eps : {0.05, 0.1, 0.25, 1.0, 3.0}) {
    const auto s = rf_two_state_scheme(eps, "half");
    CHECK(s.K() == 2);
    CHECK(s.mu[0].real() == doctest::Approx(0.5));
    CHECK(s.mu[1].real() == doctest::Approx(-0.5));
    CHECK(stability_C(s) == doctest::Approx(0.04).epsilon(1e-11));
    CHECK(stability_C_from_Q(s) == doctest::Approx(0.04).epsilon(1e-11));
    CHECK(cycle_time(s) == doctest::Approx(8.0).epsilon(1e-11));
    CHECK(asymptotic_rate(s) == doctest::Approx(std::log(5.0) / 4).epsilon(1e-11));
    for (std::size_t k = 0; k < 2; ++k) {
      const auto jb = jump_fidelity_bounds(s, k);
      CHECK(jb.B == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(jb.lambda_min == doctest::Approx(0.75 - 1 / std::sqrt(2.0)).epsilon(1e-12));
      CHECK(jb.lambda_max == doctest::Approx(0.75 + 1 / std::sqrt(2.0)).epsilon(1e-12));
      CHECK(jb.drop_possible);
    }
    CHECK(stage_stability(s) == std::vector<StageClass>{StageClass::Stable, StageClass::Stable});
  }
}

TEST_CASE("branch enumeration and naming") {
  const auto b = rf_two_state_schemes(0.2);
  REQUIRE(b.size() == 3);
  CHECK(b[0].branch == "half");
  CHECK(b[1].branch == "nu+");
  CHECK(b[2].branch == "nu-");
  CHECK(b[1].scheme.mu[0].imag() == doctest::Approx(nu_plus(0.2).imag()));
  CHECK(b[2].scheme.mu[0].imag() == doctest::Approx(nu_minus(0.2).imag()));
  for (const auto& x : b) CHECK(two_state_branch(x.scheme.mu[0], 0.2) == x.branch);
  CHECK(rf_two_state_schemes(0.3).size() == 1);
  CHECK_THROWS_AS(rf_two_state_scheme(0.3, "nu+"), NotRealizable);
  CHECK(two_state_branch(cplx(0.123, 0.456), 0.2).empty());
}

TEST_CASE("Appendix identities hold for every branch") {
  for (int i = 1; i <= 24; ++i) {
    const double eps = 0.01 * i;
    for (const auto& b : rf_two_state_schemes(eps)) {
      const auto rep = verify_appendix_a(b.scheme, 1e-10);
      CHECK(rep.passes);
      CHECK(stability_C(b.scheme) == doctest::Approx(stability_C_from_Q(b.scheme)).epsilon(1e-10));
      const Mat2 cyc = cycle_operator(b.scheme);
      CHECK(std::abs(cyc(0, 1)) + std::abs(cyc(1, 0)) < 1e-10 * cyc.norm());
    }
  }
}

TEST_CASE("stage classes along the branches") {
  for (double eps : {0.01, 0.1, 0.2, 0.24, 0.249}) {
    CHECK(stage_stability(rf_two_state_scheme(eps, "nu-")) ==
          std::vector<StageClass>{StageClass::Stable, StageClass::Unstable});
    CHECK(stability_class(analyze(rf_two_state_scheme(eps, "nu-"))) == "mean-square");
  }
  CHECK(stability_class(analyze(rf_two_state_scheme(0.2, "nu+"))) == "piecewise");
  CHECK(stability_class(analyze(rf_two_state_scheme(0.246, "nu+"))) == "mean-square");
}

TEST_CASE("nu+ threshold") {
  const double eps0 = nu_plus_threshold();
  CHECK(eps0 == doctest::Approx(0.24293413584).epsilon(1e-8));
  CHECK(nu_plus_stage_gap(eps0 - 1e-3) * nu_plus_stage_gap(eps0 + 1e-3) < 0.0);
  // Independent characterisation: lambda_+(-nu+) = lambda_-(-nu+) there.
  CHECK(std::abs(nu_plus(eps0)) == doctest::Approx((0.25 - eps0 * eps0) / (2 * eps0)).epsilon(1e-9));
}

TEST_CASE("jump outcome agrees with the bound") {
  std::mt19937 rng(8);
  for (const char* br : {"half", "nu+", "nu-"}) {
    const auto s = rf_two_state_scheme(0.15, br);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto jb = jump_fidelity_bounds(s, k);
      for (int trial = 0; trial < 200; ++trial) {
        const Vec2 psi = random_ket(rng);
        const auto o = jump_outcome(s, k, psi);
        CHECK(o.B == doctest::Approx(jb.B));
        CHECK(o.norm_ratio >= jb.lambda_min - 1e-12);
        CHECK(o.norm_ratio <= jb.lambda_max + 1e-12);
        if (std::abs(o.norm_ratio - o.B) > 1e-9 && o.F_before < 1 - 1e-9) CHECK(o.drop == (o.norm_ratio < o.B));
        CHECK(o.drop == (o.F_after < o.F_before));
      }
    }
  }
}

TEST_CASE("decomposition and infidelity") {
  const auto s = rf_two_state_scheme(0.1, "nu+");
  std::mt19937 rng(6);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(infidelity(s, k, s.ensemble_eigs[k].vector) < 1e-15);
    const double o2 = std::norm(s.overlaps[k]);
    CHECK(infidelity(s, k, s.other_eigs[k].vector) == doctest::Approx(1 - o2).epsilon(1e-12));
    const Vec2 psi = random_ket(rng);
    const auto c = decompose(s, k, psi);
    CHECK((c[0] * s.ensemble_eigs[k].vector + c[1] * s.other_eigs[k].vector - psi).norm() < 1e-12);
    const Vec2 p = perturbed_state(s, k, 0.2);
    CHECK(p.norm() == doctest::Approx(1.0));
    CHECK(std::norm(decompose(s, k, p)[1]) == doctest::Approx(0.2));
  }
}

TEST_CASE("ensemble invariance is enforced") {
  const auto model = bloch::resonance_fluorescence(0.1);
  const auto aff = bloch::to_bloch(model);
  auto e = ensemble::two_state_ensembles(aff)[0];
  const auto s = scheme_from_ensemble(model, e);
  CHECK(s.mu[0].real() > 0);
  e.states[1] = (e.states[1] + bloch::Vec3(0.05, 0, 0)).normalized();
  CHECK_THROWS_AS(scheme_from_ensemble(model, e), NotRealizable);
}

TEST_CASE("three-state schemes") {
  const auto b = rf_three_state_schemes(poly::Rational(27, 100));
  REQUIRE(b.size() == 2);
  CHECK(b[0].branch == "3s-1");
  CHECK(b[0].entropy <= b[1].entropy);
  for (const auto& x : b) {
    CHECK(x.scheme.K() == 3);
    CHECK(verify_appendix_a(x.scheme).passes);
    const auto r = analyze(x.scheme);
    CHECK(r.C == doctest::Approx(r.C_from_Q).epsilon(1e-9));
    CHECK(r.stages.size() == 3);
  }
}

TEST_CASE("rate collapse on nu-") {
  double prev = 1.0;
  for (double eps : {0.05, 0.03, 0.01}) {
    const double R = asymptotic_rate(rf_two_state_scheme(eps, "nu-"));
    CHECK(R < prev);
    prev = R;
    const double ratio = R / (std::pow(eps, 4) * std::abs(std::log(eps * eps)));
    CHECK(ratio > 1.0);
    CHECK(ratio < 1.5);
  }
}

TEST_CASE("report output") {
  const auto s = rf_two_state_scheme(0.1, "half");
  const auto r = analyze(s);
  const auto j = to_json(r);
  CHECK(j.at("C").get<double>() == doctest::Approx(0.04));
  CHECK(to_json(s).at("stages").size() == 2);
  std::ostringstream os;
  write_stability_csv_header(os, 2);
  write_stability_csv_row(os, 0.1, "half", 1.0, r);
  write_jump_csv_header(os, 2);
  write_jump_csv_row(os, 0.1, "half", r);
  CHECK(os.str().find("piecewise") != std::string::npos);
}

TEST_CASE("half branch stays exact at small drive") {
  for (double eps : {0.003, 0.005, 0.01, 0.02}) {
    const auto s = rf_two_state_scheme(eps, "half");
    CHECK(std::abs(stability_C(s) - 0.04) < 1e-14);
    CHECK(std::abs(s.mu[0] - cplx(0.5, 0.0)) < 1e-13);
    CHECK(verify_appendix_a(rf_two_state_scheme(eps, "nu-")).passes);
  }
}
