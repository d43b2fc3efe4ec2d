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

#include "qtrack/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "qtrack/errors.hpp"

namespace qtrack::traj {

using bloch::cplx;

// ------------------------------------------------------------------- RNG

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t(a) * b;
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream) {}

double RandomStream::uniform() {
  if (used_ >= 4) {
    buffer_ = philox4x32({std::uint32_t(block_), std::uint32_t(block_ >> 32), std::uint32_t(stream_),
                          std::uint32_t(stream_ >> 32)},
                         key_);
    ++block_;
    used_ = 0;
  }
  const std::uint64_t bits = (std::uint64_t(buffer_[used_]) << 32 | buffer_[used_ + 1]) >> 11;
  used_ += 2;
  return double(bits + 1) * 0x1.0p-53;
}

// ------------------------------------------------------------ propagation

namespace {

// exp(z) - 1 without cancellation for small |z|.
cplx expm1c(cplx z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

}  // namespace

Mat2 propagator(const Mat2& H, double tau) {
  // M = -i H tau = m I + N with N^2 = d^2 I; exp(M) has eigenvalues m +- d.
  const Mat2 M = cplx(0.0, -tau) * H;
  const cplx m = 0.5 * M.trace();
  const Mat2 N = M - m * Mat2::Identity();
  cplx d = std::sqrt(N(0, 0) * N(0, 0) + N(0, 1) * N(1, 0));
  if (d.real() > 0.0) d = -d;
  // Factor out exp(m - d), the slower of the two modes.
  const cplx big = std::exp(m - d);
  const cplx E = expm1c(2.0 * d);
  const cplx sinhc = std::abs(d) == 0.0 ? cplx(1.0) : E / (2.0 * d);
  return big * ((0.5 * E + 1.0) * Mat2::Identity() + sinhc * N);
}

Vec2 evolve_between(const Mat2& H, const Vec2& psi, double tau) { return propagator(H, tau) * psi; }

double survival(const Mat2& H, const Vec2& psi, double tau) { return evolve_between(H, psi, tau).squaredNorm(); }

std::optional<double> waiting_time(const Mat2& H, const Vec2& psi, double eta, double tol, double tau_max) {
  if (eta >= 1.0) return 0.0;
  const double log_eta = std::log(eta);
  // g(tau) = ln S(tau) - ln eta is decreasing; g' = 2 Re <psi_t|-iH|psi_t> / S.
  auto g = [&](double tau, double* dg) {
    const Vec2 v = evolve_between(H, psi, tau);
    const double S = v.squaredNorm();
    if (dg != nullptr) *dg = 2.0 * (v.dot(cplx(0.0, -1.0) * (H * v))).real() / S;
    return S > 0.0 ? std::log(S) - log_eta : -std::numeric_limits<double>::infinity();
  };
  double lo = 0.0, hi = 1.0;
  while (g(hi, nullptr) > 0.0) {
    lo = hi;
    if (hi >= tau_max) return std::nullopt;
    hi = std::min(2.0 * hi, tau_max);
    if (hi == lo) return std::nullopt;
  }
  double tau = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    double dg = 0.0;
    const double gv = g(tau, &dg);
    if (gv > 0.0)
      lo = tau;
    else
      hi = tau;
    const double scale = std::max(1.0, tau);
    double next = (dg < 0.0 && std::isfinite(gv)) ? tau - gv / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - tau);
    tau = next;
    if (step <= tol * scale || hi - lo <= tol * scale) break;
  }
  return tau;
}

std::optional<double> sample_waiting_time(const Mat2& H, const Vec2& psi, RandomStream& rng, double tol,
                                          double tau_max) {
  return waiting_time(H, psi, rng.uniform(), tol, tau_max);
}

JumpResult apply_jump(const Mat2& s, const Vec2& psi) {
  const Vec2 out = s * psi;
  const double n = out.squaredNorm();
  if (n < 1e-20) throw AnnihilatedState("jump operator annihilates the state");
  return {out / std::sqrt(n), n};
}

void validate(const SimConfig& c) {
  if (c.n_trajectories < 1 || c.max_jumps < 1) throw InvalidModel("trajectory and jump counts must be at least 1");
  if (!(c.root_tol > 0.0) || !(c.max_time > 0.0) || c.sample_dt < 0.0)
    throw InvalidModel("tolerances and times must be positive");
}

// ------------------------------------------------------------- simulation

namespace {

double fidelity_of(const MonitoringScheme& s, std::size_t k, const Vec2& psi) {
  return 1.0 - monitor::infidelity(s, k, psi);
}

}  // namespace

TrajectoryRecord simulate(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config,
                          RandomStream& rng, std::size_t start_stage) {
  validate(config);
  const std::size_t K = scheme.K();
  TrajectoryRecord rec;
  Vec2 psi = psi0.normalized();
  std::size_t k = start_stage % K;
  double t = 0.0;
  double next_sample = 0.0;
  auto sample_until = [&](double t_end, bool inclusive) {
    if (config.sample_dt <= 0.0) return;
    while ((next_sample < t_end || (inclusive && next_sample <= t_end)) &&
           rec.fidelity_series.size() < config.max_samples) {
      const Vec2 v = evolve_between(scheme.H_eff[k], psi, next_sample - t);
      rec.fidelity_series.push_back({next_sample, fidelity_of(scheme, k, v), k, 0});
      next_sample += config.sample_dt;
    }
  };
  if (config.sample_dt <= 0.0) rec.fidelity_series.push_back({0.0, fidelity_of(scheme, k, psi), k, 0});
  while (rec.jump_times.size() < config.max_jumps) {
    const auto tau = sample_waiting_time(scheme.H_eff[k], psi, rng, config.root_tol, config.max_time - t);
    if (!tau) break;
    sample_until(t + *tau, false);
    const Vec2 pre = evolve_between(scheme.H_eff[k], psi, *tau);
    const double S = pre.squaredNorm();
    const Vec2 pre_n = pre / std::sqrt(S);
    const JumpResult jr = apply_jump(scheme.s_ops[k], pre_n);
    const std::size_t n = (k + 1) % K;
    const JumpDelta delta{fidelity_of(scheme, k, pre_n), fidelity_of(scheme, n, jr.state)};
    t += *tau;
    rec.log_density += std::log(S) + std::log(jr.norm_sq);
    rec.jump_times.push_back(t);
    rec.stage_indices.push_back(k);
    rec.jump_fidelity_deltas.push_back(delta);
    rec.fidelity_series.push_back({t, delta.F_before, k, 0});
    rec.fidelity_series.push_back({t, delta.F_after, n, 1});
    psi = jr.state;
    k = n;
  }
  if (std::isfinite(config.max_time) && t < config.max_time) {
    sample_until(config.max_time, true);
    const Vec2 v = evolve_between(scheme.H_eff[k], psi, config.max_time - t);
    const double S = v.squaredNorm();
    rec.log_density += std::log(S);
    psi = v / std::sqrt(S);
    t = config.max_time;
  }
  rec.end_time = t;
  rec.final_state = psi;
  rec.final_stage = k;
  return rec;
}

double record_log_density(const MonitoringScheme& scheme, const Vec2& psi0, const TrajectoryRecord& record,
                          std::size_t start_stage) {
  Vec2 v = psi0.normalized();
  double log_scale = 0.0;
  double t = 0.0;
  std::size_t k = start_stage % scheme.K();
  for (std::size_t j = 0; j < record.jump_times.size(); ++j) {
    v = scheme.s_ops[k] * evolve_between(scheme.H_eff[k], v, record.jump_times[j] - t);
    t = record.jump_times[j];
    k = (k + 1) % scheme.K();
    // Rescale only to stay in floating-point range.
    const double n = v.norm();
    log_scale += 2.0 * std::log(n);
    v /= n;
  }
  if (record.end_time > t) {
    v = evolve_between(scheme.H_eff[k], v, record.end_time - t);
  }
  return log_scale + std::log(v.squaredNorm());
}

// ------------------------------------------------------------ Monte Carlo

namespace {

struct Kahan {
  double sum = 0.0;
  double c = 0.0;

  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

constexpr std::size_t kChunk = 256;

unsigned thread_count(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(chunk) for every chunk of kChunk trajectory indices. Chunk
// boundaries do not depend on the thread count, so per-chunk partial sums
// combined in chunk order give identical results for any thread count.
template <class Body>
void for_each_chunk(std::size_t n, unsigned threads, Body body) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const unsigned workers = std::min<std::size_t>(thread_count(threads), std::max<std::size_t>(chunks, 1));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) body(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Moments {
  Kahan s1, s2;
};

Estimate finish(const std::vector<std::vector<Moments>>& chunks, std::size_t slot, std::size_t n) {
  Kahan s1, s2;
  for (const auto& c : chunks) {
    s1.add(c[slot].s1.sum);
    s2.add(c[slot].s2.sum);
  }
  Estimate e;
  e.mean = s1.sum / double(n);
  if (n > 1) {
    const double var = std::max(0.0, (s2.sum - double(n) * e.mean * e.mean) / double(n - 1));
    e.stderr = std::sqrt(var / double(n));
  }
  return e;
}

// Advances psi through one full stage: waiting time then jump. Returns the
// elapsed time, or nullopt when no jump occurs before max_time.
std::optional<double> step(const MonitoringScheme& s, std::size_t k, Vec2& psi, RandomStream& rng,
                           const SimConfig& config, double remaining) {
  const auto tau = sample_waiting_time(s.H_eff[k], psi, rng, config.root_tol, remaining);
  if (!tau) return std::nullopt;
  const Vec2 pre = evolve_between(s.H_eff[k], psi, *tau).normalized();
  psi = apply_jump(s.s_ops[k], pre).state;
  return *tau;
}

}  // namespace

MonteCarloResult monte_carlo_fidelity(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config,
                                      std::size_t cycles) {
  validate(config);
  const std::size_t n = config.n_trajectories;
  const std::size_t K = scheme.K();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<Moments>> partial(chunks, std::vector<Moments>(cycles + 1));
  for_each_chunk(n, config.threads, [&](std::size_t c) {
    auto& acc = partial[c];
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      RandomStream rng(config.seed, i);
      Vec2 psi = psi0.normalized();
      double t = 0.0;
      bool dark = false;
      for (std::size_t l = 0; l <= cycles; ++l) {
        if (l > 0 && !dark) {
          for (std::size_t k = 0; k < K && !dark; ++k) {
            const auto dt = step(scheme, k, psi, rng, config, config.max_time - t);
            if (dt)
              t += *dt;
            else
              dark = true;
          }
        }
        // A censored trajectory keeps its last state for the remaining cycles.
        const double x = monitor::infidelity(scheme, 0, psi);
        acc[l].s1.add(x);
        acc[l].s2.add(x * x);
      }
    }
  });
  MonteCarloResult r;
  r.n_trajectories = n;
  for (std::size_t l = 0; l <= cycles; ++l) {
    const Estimate e = finish(partial, l, n);
    r.cycles.push_back({l, e.mean, e.stderr});
  }
  r.fit = fit_log_infidelity(r.cycles);
  return r;
}

LinearFit fit_log_infidelity(const std::vector<CycleStats>& cycles) {
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& c : cycles) {
    if (c.cycle == 0 || !(c.mean_infidelity > 0.0)) continue;
    const double sigma = c.stderr_infidelity > 0.0 ? c.stderr_infidelity / c.mean_infidelity : 1.0;
    const double w = 1.0 / (sigma * sigma);
    const double x = double(c.cycle), y = std::log(c.mean_infidelity);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  LinearFit f;
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) return f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.covariance = {sxx / det, -sx / det, -sx / det, sw / det};
  return f;
}

std::vector<double> predicted_infidelity(const MonitoringScheme& scheme, const Vec2& psi0, std::size_t cycles) {
  const auto ab = monitor::decompose(scheme, 0, psi0.normalized());
  const double a0 = std::norm(ab[1]) * (1.0 - std::norm(scheme.overlaps[0]));
  const double C = monitor::stability_C(scheme);
  std::vector<double> out;
  for (std::size_t l = 0; l <= cycles; ++l) out.push_back(a0 * std::pow(C, double(l)));
  return out;
}

namespace {

Estimate mean_first_cycle(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config) {
  validate(config);
  const std::size_t n = config.n_trajectories;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<Moments>> partial(chunks, std::vector<Moments>(1));
  for_each_chunk(n, config.threads, [&](std::size_t c) {
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      RandomStream rng(config.seed, i);
      Vec2 psi = psi0.normalized();
      double t = 0.0;
      for (std::size_t k = 0; k < scheme.K(); ++k) {
        const auto dt = step(scheme, k, psi, rng, config, config.max_time - t);
        if (!dt) {
          t = config.max_time;
          break;
        }
        t += *dt;
      }
      partial[c][0].s1.add(t);
      partial[c][0].s2.add(t * t);
    }
  });
  return finish(partial, 0, n);
}

}  // namespace

Estimate empirical_cycle_time(const MonitoringScheme& scheme, const SimConfig& config) {
  return mean_first_cycle(scheme, scheme.ensemble_eigs[0].vector, config);
}

InitialRate initial_rate_R1(const MonitoringScheme& scheme, const Vec2& psi0, const SimConfig& config) {
  InitialRate r;
  r.first_cycle = mean_first_cycle(scheme, psi0, config);
  r.R1 = -std::log(monitor::stability_C(scheme)) / r.first_cycle.mean;
  return r;
}

// -------------------------------------------------------------------- I/O

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  out << "t,F,stage,dN\n";
  for (const auto& s : record.fidelity_series) out << s.t << ',' << s.F << ',' << s.stage + 1 << ',' << s.dN << '\n';
}

nlohmann::json to_json(const MonteCarloResult& r) {
  nlohmann::json cycles = nlohmann::json::array();
  for (const auto& c : r.cycles)
    cycles.push_back({{"cycle", c.cycle},
                      {"mean_fidelity", 1.0 - c.mean_infidelity},
                      {"mean_infidelity", c.mean_infidelity},
                      {"stderr", c.stderr_infidelity}});
  return {{"n_trajectories", r.n_trajectories},
          {"cycles", cycles},
          {"fit",
           {{"slope", r.fit.slope},
            {"intercept", r.fit.intercept},
            {"covariance", {{r.fit.covariance[0], r.fit.covariance[1]}, {r.fit.covariance[2], r.fit.covariance[3]}}}}}};
}

}  // namespace qtrack::traj
