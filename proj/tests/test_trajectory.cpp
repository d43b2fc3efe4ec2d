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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "qtrack/errors.hpp"
#include "qtrack/monitor.hpp"
#include "qtrack/trajectory.hpp"

using namespace qtrack;
using namespace qtrack::traj;
using bloch::cplx;

namespace {

const cplx I(0, 1);

const monitor::MonitoringScheme& half() {
  static const auto s = monitor::rf_two_state_scheme(0.1, "half");
  return s;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST_CASE("uniform stream") {
  RandomStream a(7, 0), b(7, 0), c(7, 1);
  double sum = 0.0, sum2 = 0.0;
  bool differs = false;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform();
    CHECK_MESSAGE((x > 0.0 && x <= 1.0), "out of range");
    CHECK(x == b.uniform());
    differs |= x != c.uniform();
    sum += x;
    sum2 += x * x;
  }
  CHECK(differs);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
}

TEST_CASE("propagator matches the matrix exponential") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = bloch::resonance_fluorescence(std::abs(u(rng)) * 2);
    const Mat2 H = monitor::effective_hamiltonian(model, cplx(u(rng), u(rng)));
    for (double tau : {0.0, 1e-6, 0.3, 2.0, 17.0}) {
      const Mat2 ref = (Mat2(-I * H * tau)).exp();
      CHECK((propagator(H, tau) - ref).norm() <= 1e-13 * std::max(1.0, ref.norm()));
    }
  }
  // Defective generator: the nu+ stage at its exceptional point.
  const double eps = 0.2;
  const auto model = bloch::resonance_fluorescence(eps);
  const Mat2 H = monitor::effective_hamiltonian(model, -cplx(0, (0.25 - eps * eps) / (2 * eps)));
  const Mat2 ref = (Mat2(-I * H * 3.0)).exp();
  CHECK((propagator(H, 3.0) - ref).norm() < 1e-12);
}

TEST_CASE("survival is a norm and decreasing") {
  const auto& s = half();
  const Vec2 psi = monitor::perturbed_state(s, 0, 0.3);
  double prev = 1.0;
  for (double tau = 0.0; tau < 40.0; tau += 0.5) {
    const double p = survival(s.H_eff[0], psi, tau);
    CHECK(p == doctest::Approx(evolve_between(s.H_eff[0], psi, tau).squaredNorm()).epsilon(1e-12));
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("waiting time inverts the survival function") {
  const auto& s = half();
  const Vec2 psi = monitor::perturbed_state(s, 1, 0.4);
  for (double eta : {0.9, 0.5, 0.1, 1e-3, 1e-8}) {
    const auto t = waiting_time(s.H_eff[1], psi, eta);
    REQUIRE(t.has_value());
    CHECK(survival(s.H_eff[1], psi, *t) == doctest::Approx(eta).epsilon(1e-10));
  }
  CHECK_FALSE(waiting_time(s.H_eff[1], psi, 1e-8, 1e-12, 1.0).has_value());
}

TEST_CASE("waiting times from an ensemble state are exponential") {
  // From v^e the survival is exp(-2 Re l^e t); for the half branch 2 Re l^e = 1/4.
  const auto& s = half();
  const double rate = 2 * s.ensemble_eigs[0].lambda.real();
  CHECK(rate == doctest::Approx(0.25).epsilon(1e-12));
  RandomStream rng(11, 0);
  const int n = 20000;
  std::vector<double> t(n);
  for (auto& x : t) x = *sample_waiting_time(s.H_eff[0], s.ensemble_eigs[0].vector, rng);
  double mean = 0.0;
  for (double x : t) mean += x;
  mean /= n;
  CHECK(std::abs(mean - 4.0) < 4 * 4.0 / std::sqrt(double(n)));
  std::sort(t.begin(), t.end());
  double D = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = 1 - std::exp(-rate * t[std::size_t(i)]);
    D = std::max({D, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }
  CHECK(D < 1.63 / std::sqrt(double(n)));  // KS at the 1% level
}

TEST_CASE("jumps") {
  const auto model = bloch::resonance_fluorescence(0.1);
  const Mat2 c = monitor::jump_operator(model, 0.0);
  CHECK_THROWS_AS(apply_jump(c, Vec2(1, 0)), AnnihilatedState);
  const auto r = apply_jump(c, Vec2(0, 1));
  CHECK(r.norm_sq == doctest::Approx(1.0));
  CHECK(r.state.norm() == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(validate(c));
  c.n_trajectories = 0;
  CHECK_THROWS_AS(validate(c), InvalidModel);
  c = SimConfig{};
  c.root_tol = -1;
  CHECK_THROWS_AS(validate(c), InvalidModel);
}

TEST_CASE("ensemble states stay in the ensemble") {
  // Starting in v^e_1, every jump lands exactly in the next ensemble state.
  const auto& s = half();
  SimConfig cfg;
  cfg.max_jumps = 40;
  RandomStream rng(5, 0);
  const auto rec = simulate(s, s.ensemble_eigs[0].vector, cfg, rng);
  CHECK(rec.jump_times.size() == 40);
  for (const auto& d : rec.jump_fidelity_deltas) {
    CHECK(d.F_before == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.F_after == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t j = 0; j < rec.stage_indices.size(); ++j) CHECK(rec.stage_indices[j] == j % 2);
}

TEST_CASE("simulation is deterministic and its density is reproducible") {
  const auto& s = half();
  const Vec2 psi0 = monitor::perturbed_state(s, 0, 0.2);
  SimConfig cfg;
  cfg.max_jumps = 30;
  cfg.sample_dt = 0.5;
  RandomStream r1(99, 3), r2(99, 3), r3(100, 3);
  const auto a = simulate(s, psi0, cfg, r1), b = simulate(s, psi0, cfg, r2), c = simulate(s, psi0, cfg, r3);
  CHECK(a.jump_times == b.jump_times);
  CHECK(a.log_density == b.log_density);
  CHECK(a.jump_times != c.jump_times);
  CHECK(record_log_density(s, psi0, a) == doctest::Approx(a.log_density).epsilon(1e-10));
  // Fidelity samples are time ordered and in [0, 1].
  for (std::size_t i = 1; i < a.fidelity_series.size(); ++i) {
    CHECK(a.fidelity_series[i].t >= a.fidelity_series[i - 1].t);
    CHECK(a.fidelity_series[i].F >= 0.0);
    CHECK(a.fidelity_series[i].F <= 1.0 + 1e-12);
  }
}

TEST_CASE("between jumps fidelity never drops on a stable stage") {
  const auto& s = half();
  SimConfig cfg;
  cfg.max_jumps = 20;
  cfg.sample_dt = 0.05;
  RandomStream rng(12, 0);
  const auto rec = simulate(s, monitor::perturbed_state(s, 0, 0.5), cfg, rng);
  for (std::size_t i = 1; i < rec.fidelity_series.size(); ++i) {
    const auto& p = rec.fidelity_series[i - 1];
    const auto& q = rec.fidelity_series[i];
    if (q.dN == 0 && p.stage == q.stage) CHECK(q.F >= p.F - 1e-12);
  }
}

TEST_CASE("time limit") {
  const auto& s = half();
  SimConfig cfg;
  cfg.max_jumps = 1000;
  cfg.max_time = 5.0;
  RandomStream rng(1, 0);
  const auto rec = simulate(s, s.ensemble_eigs[0].vector, cfg, rng);
  CHECK(rec.end_time == doctest::Approx(5.0));
  for (double t : rec.jump_times) CHECK(t <= 5.0);
}

TEST_CASE("Monte Carlo is independent of the thread count") {
  const auto& s = half();
  const Vec2 psi0 = monitor::perturbed_state(s, 0, 0.2);
  SimConfig cfg;
  cfg.seed = 4;
  cfg.n_trajectories = 3000;
  cfg.threads = 1;
  const auto a = monte_carlo_fidelity(s, psi0, cfg, 4);
  cfg.threads = 3;
  const auto b = monte_carlo_fidelity(s, psi0, cfg, 4);
  REQUIRE(a.cycles.size() == 5);
  for (std::size_t l = 0; l < 5; ++l) {
    CHECK(a.cycles[l].mean_infidelity == b.cycles[l].mean_infidelity);
    CHECK(a.cycles[l].stderr_infidelity == b.cycles[l].stderr_infidelity);
  }
  CHECK(a.fit.slope == b.fit.slope);
  // The first cycles are well inside the light-tailed regime.
  const auto pred = predicted_infidelity(s, psi0, 4);
  for (std::size_t l = 1; l <= 2; ++l)
    CHECK(std::abs(a.cycles[l].mean_infidelity - pred[l]) < 4 * a.cycles[l].stderr_infidelity);
}

TEST_CASE("predicted infidelity decays by C per cycle") {
  const auto& s = half();
  const auto pred = predicted_infidelity(s, monitor::perturbed_state(s, 0, 0.2), 5);
  for (std::size_t l = 1; l < pred.size(); ++l) CHECK(pred[l] / pred[l - 1] == doctest::Approx(0.04).epsilon(1e-9));
}

TEST_CASE("log-linear fit recovers an exact geometric sequence") {
  std::vector<CycleStats> cs;
  for (std::size_t l = 0; l <= 6; ++l) cs.push_back({l, 0.3 * std::pow(0.04, double(l)), 1e-3 * std::pow(0.04, double(l))});
  const auto f = fit_log_infidelity(cs);
  CHECK(f.slope == doctest::Approx(std::log(0.04)).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(0.3)).epsilon(1e-12));
}

TEST_CASE("cycle time estimate") {
  SimConfig cfg;
  cfg.seed = 2;
  cfg.n_trajectories = 4000;
  const auto e = empirical_cycle_time(half(), cfg);
  CHECK(std::abs(e.mean - 8.0) < 4 * e.stderr);
}

TEST_CASE("trajectory CSV") {
  const auto& s = half();
  SimConfig cfg;
  cfg.max_jumps = 3;
  RandomStream rng(1, 0);
  const auto rec = simulate(s, s.ensemble_eigs[0].vector, cfg, rng);
  std::ostringstream os;
  write_trajectory_csv(os, rec);
  CHECK(os.str().rfind("t,F,stage,dN\n", 0) == 0);
}
