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

// Quantum-jump trajectories under an adaptive monitoring scheme, with exact
// waiting-time sampling.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "qtrack/monitor.hpp"

namespace qtrack::traj {

using bloch::Mat2;
using bloch::Vec2;
using monitor::MonitoringScheme;

/// Philox4x32-10 counter-based generator.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Uniform draws for one trajectory: key = seed, counter = (block, stream).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on (0, 1] with 53-bit resolution.
  double uniform();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// exp(-i H tau) in closed form.
Mat2 propagator(const Mat2& H, double tau);

/// exp(-i H tau) psi, unnormalized.
Vec2 evolve_between(const Mat2& H, const Vec2& psi, double tau);

/// ||exp(-i H tau) psi||^2.
double survival(const Mat2& H, const Vec2& psi, double tau);

/// Solves survival(tau) = eta for normalized psi. Returns nullopt when the
/// survival is still above eta at tau_max.
std::optional<double> waiting_time(const Mat2& H, const Vec2& psi, double eta, double tol = 1e-12,
                                   double tau_max = std::numeric_limits<double>::infinity());

std::optional<double> sample_waiting_time(const Mat2& H, const Vec2& psi, RandomStream& rng, double tol = 1e-12,
                                          double tau_max = std::numeric_limits<double>::infinity());

struct JumpResult {
  Vec2 state;      // normalized
  double norm_sq;  // ||s psi||^2
};

/// Throws AnnihilatedState when ||s psi||^2 < 1e-20.
JumpResult apply_jump(const Mat2& s, const Vec2& psi);

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t n_trajectories = 1;
  std::size_t max_jumps = 100;
  double max_time = std::numeric_limits<double>::infinity();
  double root_tol = 1e-12;
  /// Spacing of the fidelity time series; 0 records jump instants only.
  double sample_dt = 0.0;
  std::size_t max_samples = 1'000'000;
  /// 0 uses the hardware concurrency.
  unsigned threads = 0;
};

/// Throws InvalidModel unless tolerances are positive and counts at least 1.
void validate(const SimConfig& config);

struct FidelitySample {
  double t;
  double F;
  std::size_t stage;
  int dN;
};

struct JumpDelta {
  double F_before;
  double F_after;
};

struct TrajectoryRecord {
  std::vector<double> jump_times;
  /// Stage whose jump operator fired.
  std::vector<std::size_t> stage_indices;
  std::vector<FidelitySample> fidelity_series;
  std::vector<JumpDelta> jump_fidelity_deltas;
  /// ln of the record's probability density, ln ||psi~(t_end)||^2.
  double log_density = 0.0;
  double end_time = 0.0;
  Vec2 final_state;
  std::size_t final_stage = 0;
};

/// One trajectory starting in stage `start_stage`.
TrajectoryRecord simulate(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config,
                          RandomStream& rng, std::size_t start_stage = 0);

/// ln ||s_{k_n} e^{-iH tau_n} ... s_{k_1} e^{-iH tau_1} psi0||^2 recomputed
/// from the record without renormalization.
double record_log_density(const MonitoringScheme& scheme, const Vec2& psi0, const TrajectoryRecord& record,
                          std::size_t start_stage = 0);

struct CycleStats {
  std::size_t cycle = 0;
  double mean_infidelity = 0.0;
  double stderr_infidelity = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Covariance of (intercept, slope), row major.
  std::array<double, 4> covariance{};
};

struct MonteCarloResult {
  std::vector<CycleStats> cycles;  // cycle 0 is the initial state
  LinearFit fit;                   // ln(mean infidelity) against cycle, cycles >= 1
  std::size_t n_trajectories = 0;
};

/// Mean of 1 - F over trajectories after every full cycle of K jumps,
/// starting in stage 1.
MonteCarloResult monte_carlo_fidelity(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config,
                                      std::size_t cycles);

/// Weighted least squares of ln(mean) with sigma = stderr / mean.
LinearFit fit_log_infidelity(const std::vector<CycleStats>& cycles);

/// |beta_0|^2 (1 - |O_1|^2) C^l for l = 0..cycles.
std::vector<double> predicted_infidelity(const MonitoringScheme& scheme, const Vec2& psi0, std::size_t cycles);

struct Estimate {
  double mean = 0.0;
  double stderr = 0.0;
};

/// Duration of one full cycle started in v^e_1.
Estimate empirical_cycle_time(const MonitoringScheme& scheme, const SimConfig& config);

struct InitialRate {
  double R1 = 0.0;
  Estimate first_cycle;
};

/// -ln C / <T_1>, with T_1 the duration of the first cycle from psi0.
InitialRate initial_rate_R1(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config);

/// Columns t, F, stage, dN; stages are 1-based.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);

nlohmann::json to_json(const MonteCarloResult& r);

}  // namespace qtrack::traj
