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

// Acceptance harness: one PASS/FAIL line per criterion with pinned
// tolerances. Exit status is zero when every failure is a known deviation.
//
//   qtrack_acceptance [--skip-supplementary]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "commands.hpp"
#include "qtrack/bloch.hpp"
#include "qtrack/ensemble.hpp"
#include "qtrack/errors.hpp"
#include "qtrack/groebner.hpp"
#include "qtrack/monitor.hpp"
#include "qtrack/trajectory.hpp"
#include "reference_values.hpp"

namespace {

using namespace qtrack;
using Clock = std::chrono::steady_clock;

// Criteria whose failure is analysed in the decision ledger.
const std::set<int> kKnownDeviations = {5, 6, 8, 11};

constexpr double kTolC = 1e-12;
constexpr double kTolR = 1e-10;
constexpr double kTolTable = 1e-2;
constexpr double kTolAppendixA = 1e-10;
constexpr double kSlopeRel = 0.05;
constexpr double kCycleSE = 3.0;
constexpr double kThresholdRef = 0.243;
constexpr double kThresholdTol = 1e-3;
constexpr double kEntropyRel = 0.05;
constexpr double kRateRatioSpread = 2.0;  // max/min of R / (eps^4 |ln eps^2|)
constexpr double kThreeStateBudget = 600.0;  // seconds per epsilon
constexpr std::uint64_t kSeed = 42;
constexpr double kBetaSq = 0.2;

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> g_lines;

void report(int id, bool pass, const std::string& detail) {
  g_lines.push_back({id, pass, detail});
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

void info(const std::string& text) {
  std::printf("  info: %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct ThreeState {
  std::vector<ensemble::PREnsemble> ensembles;
  double seconds = 0.0;
  std::string error;
};

std::map<std::string, ThreeState> g_three;

const ThreeState& three_state(const std::string& eps) {
  auto it = g_three.find(eps);
  if (it != g_three.end()) return it->second;
  ThreeState ts;
  const auto t0 = Clock::now();
  try {
    ts.ensembles = ensemble::three_state_ensembles(ensemble::rf_affine_exact(ensemble::parse_decimal(eps)));
  } catch (const std::exception& e) {
    ts.error = e.what();
  }
  ts.seconds = seconds_since(t0);
  return g_three.emplace(eps, std::move(ts)).first->second;
}

void criteria_1_2() {
  bool ok1 = true, ok2 = true;
  double worst_c = 0.0, worst_r = 0.0;
  const double R_ref = std::log(5.0) / 4.0;
  for (double eps : {0.05, 0.1, 0.25, 1.0}) {
    const auto s = monitor::rf_two_state_scheme(eps, "half");
    const double dc = std::abs(monitor::stability_C(s) - 1.0 / 25.0);
    const double dr = std::abs(monitor::asymptotic_rate(s) - R_ref);
    worst_c = std::max(worst_c, dc);
    worst_r = std::max(worst_r, dr);
    ok1 &= dc <= kTolC;
    ok2 &= dr <= kTolR;
  }
  report(1, ok1, "max |C - 1/25| = " + fmt("%.3g", worst_c) + " (tol 1e-12)");
  report(2, ok2, "max |R - ln5/4| = " + fmt("%.3g", worst_r) + " (tol 1e-10)");
}

void criterion_3() {
  const auto a = monitor::rf_two_state_schemes(0.23).size();
  const auto b = monitor::rf_two_state_schemes(0.3).size();
  const auto ea = ensemble::two_state_ensembles(bloch::to_bloch(bloch::resonance_fluorescence(0.23))).size();
  const auto eb = ensemble::two_state_ensembles(bloch::to_bloch(bloch::resonance_fluorescence(0.3))).size();
  report(3, a == 3 && b == 1 && ea == 3 && eb == 1,
         "branches eps=0.23: " + std::to_string(a) + " (want 3), eps=0.3: " + std::to_string(b) + " (want 1)");
}

void criterion_4() {
  const std::vector<std::pair<std::string, std::size_t>> want = {{"0.27", 2}, {"0.23", 6}, {"0.18", 8}, {"0.30", 0}};
  bool ok = true;
  std::string detail;
  for (const auto& [eps, n] : want) {
    const auto& ts = three_state(eps);
    const bool row = ts.error.empty() && ts.ensembles.size() == n && ts.seconds <= kThreeStateBudget;
    ok &= row;
    detail += "eps=" + eps + ": " + (ts.error.empty() ? std::to_string(ts.ensembles.size()) : "error") + "/" +
              std::to_string(n) + fmt(" (%.1fs)  ", ts.seconds);
  }
  report(4, ok, detail);
}

void criterion_5() {
  const auto& ts = three_state("0.15");
  const auto r_ss = bloch::to_bloch(bloch::resonance_fluorescence(0.15)).r_ss;
  const auto rows = ensemble::distinct_geometries(ts.ensembles, r_ss);
  const auto& ref = reference::kThreeStateGeometry015;
  if (rows.size() != ref.size()) {
    report(5, false, "distinct geometries " + std::to_string(rows.size()) + " (want 6)");
    return;
  }
  double worst = 0.0;
  std::string where;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> a = rows[i].angles_to_ss, b(ref[i].angles.begin(), ref[i].angles.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::pair<double, double>> pairs = {{rows[i].total_angle, ref[i].total_angle},
                                                    {rows[i].entropy, ref[i].entropy}};
    for (std::size_t c = 0; c < 3; ++c) pairs.emplace_back(a[c], b[c]);
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const double rel = std::abs(pairs[c].first - pairs[c].second) / std::abs(pairs[c].second);
      if (rel > kTolTable) where += " row" + std::to_string(i + 1) + fmt(":%.3g", rel);
      worst = std::max(worst, rel);
    }
  }
  report(5, where.empty(), "max relative deviation " + fmt("%.3g", worst) + " (tol 1e-2)" +
                               (where.empty() ? "" : ", over tolerance:" + where));
}

void criterion_6() {
  cli::RunResult r = cli::run({"appendixb", "--check"});
  std::string failed;
  if (!r.outputs.empty()) {
    const std::string& text = r.outputs.front().content;
    std::size_t pos = 0;
    while ((pos = text.find("check ", pos)) != std::string::npos) {
      const std::size_t end = text.find('\n', pos);
      const std::string line = text.substr(pos, end - pos);
      if (line.find("FAIL") != std::string::npos) failed += " [" + line.substr(6) + "]";
      pos = end;
    }
  }
  report(6, r.exit_code == cli::kExitOk, failed.empty() ? "basis, standard monomials, m_x and residuals match"
                                                        : "mismatches:" + failed);
}

void criterion_7() {
  double worst = 0.0;
  std::size_t count = 0;
  bool ok = true;
  for (int i = 1; i <= 20; ++i) {
    const double eps = 0.012 * i;
    for (const auto& b : monitor::rf_two_state_schemes(eps)) {
      const auto rep = monitor::verify_appendix_a(b.scheme, kTolAppendixA);
      ok &= rep.passes;
      worst = std::max({worst, rep.eigen_residual, rep.q12_residual, rep.q11_product_residual,
                        rep.q_diagonal_residual, rep.cycle_residual});
      ++count;
    }
  }
  const std::size_t two = count;
  for (const char* eps : {"0.18", "0.23", "0.27"}) {
    const auto& ts = three_state(eps);
    const auto model = bloch::resonance_fluorescence(ensemble::parse_decimal(eps).get_d());
    try {
      for (const auto& b : monitor::three_state_schemes(model, ts.ensembles)) {
        const auto rep = monitor::verify_appendix_a(b.scheme, kTolAppendixA);
        ok &= rep.passes;
        worst = std::max({worst, rep.eigen_residual, rep.q12_residual, rep.q11_product_residual,
                          rep.q_diagonal_residual, rep.cycle_residual});
        ++count;
      }
    } catch (const Error& e) {
      ok = false;
      info(std::string("three-state scheme at ") + eps + ": " + e.what());
    }
  }
  ok &= two == 60 && count == 60 + 2 + 6 + 8;
  report(7, ok, std::to_string(two) + " two-state and " + std::to_string(count - two) +
                    " three-state schemes, max residual " + fmt("%.3g", worst) + " (tol 1e-10)");
}

void criterion_8(bool supplementary) {
  const auto s = monitor::rf_two_state_scheme(0.1, "half");
  const auto psi0 = monitor::perturbed_state(s, 0, kBetaSq);
  traj::SimConfig cfg;
  cfg.seed = kSeed;
  cfg.n_trajectories = 10000;
  const auto t0 = Clock::now();
  const auto mc = traj::monte_carlo_fidelity(s, psi0, cfg, 8);
  const double elapsed = seconds_since(t0);
  const auto pred = traj::predicted_infidelity(s, psi0, 8);
  const double want = std::log(1.0 / 25.0);
  const double slope_rel = std::abs(mc.fit.slope - want) / std::abs(want);
  std::string z;
  bool cycles_ok = true;
  for (std::size_t l = 1; l <= 8; ++l) {
    const auto& c = mc.cycles[l];
    const double zl = (c.mean_infidelity - pred[l]) / c.stderr_infidelity;
    cycles_ok &= std::abs(zl) <= kCycleSE;
    z += fmt(" %+.1f", zl);
  }
  const bool ok = slope_rel <= kSlopeRel && cycles_ok && elapsed <= 120.0;
  report(8, ok, "slope " + fmt("%.4f", mc.fit.slope) + " vs ln(1/25) " + fmt("(rel %.3g, tol 0.05)", slope_rel) +
                    ", per-cycle z:" + z + " (tol 3)" + fmt(", %.1fs", elapsed));
  if (!supplementary) return;
  cfg.n_trajectories = 1000000;
  const auto t1 = Clock::now();
  const auto big = traj::monte_carlo_fidelity(s, psi0, cfg, 8);
  std::string zb;
  for (std::size_t l = 1; l <= 8; ++l)
    zb += fmt(" %+.1f", (big.cycles[l].mean_infidelity - pred[l]) / big.cycles[l].stderr_infidelity);
  info("1e6 trajectories: slope " + fmt("%.4f", big.fit.slope) +
       fmt(" (rel %.3g)", std::abs(big.fit.slope - want) / std::abs(want)) + ", per-cycle z:" + zb +
       fmt(", %.1fs", seconds_since(t1)));
}

void criterion_9() {
  bool ok = true;
  std::string detail;
  using monitor::StageClass;
  for (double eps : {0.05, 0.1, 0.2, 0.25, 0.5, 1.0}) {
    const auto st = monitor::stage_stability(monitor::rf_two_state_scheme(eps, "half"));
    ok &= st == std::vector<StageClass>{StageClass::Stable, StageClass::Stable};
  }
  bool minus_ok = true;
  for (int i = 1; i <= 249; ++i) {
    const double eps = 0.001 * i;
    const auto st = monitor::stage_stability(monitor::rf_two_state_scheme(eps, "nu-"));
    minus_ok &= st == std::vector<StageClass>{StageClass::Stable, StageClass::Unstable};
  }
  ok &= minus_ok;
  const double eps0 = monitor::nu_plus_threshold();
  const bool below = monitor::stage_stability(monitor::rf_two_state_scheme(eps0 - 2e-3, "nu+")) ==
                     std::vector<StageClass>{StageClass::Stable, StageClass::Stable};
  const auto above = monitor::stage_stability(monitor::rf_two_state_scheme(eps0 + 2e-3, "nu+"));
  const bool flips = std::count(above.begin(), above.end(), StageClass::Unstable) == 1;
  ok &= below && flips && std::abs(eps0 - kThresholdRef) <= kThresholdTol;
  detail = std::string("half stable/stable, nu- stable/unstable on (0, 0.249]: ") + (minus_ok ? "yes" : "no") +
           ", nu+ flips at " + fmt("%.10f", eps0) + " (want 0.243 +- 0.001)";
  report(9, ok, detail);
}

void criterion_10() {
  const auto s = monitor::rf_two_state_scheme(0.1, "half");
  const auto jb = monitor::jump_fidelity_bounds(s, 0);
  traj::SimConfig cfg;
  cfg.seed = kSeed;
  cfg.max_jumps = 50;
  traj::RandomStream rng(kSeed, 0);
  const auto rec = traj::simulate(s, monitor::perturbed_state(s, 0, kBetaSq), cfg, rng);
  std::size_t drops = 0;
  for (const auto& d : rec.jump_fidelity_deltas) drops += d.F_after < d.F_before;
  const bool ok = std::abs(jb.lambda_min - 0.043) < 5e-4 && jb.lambda_min < jb.B && std::abs(jb.B - 0.25) < 1e-12 &&
                  jb.drop_possible && drops >= 1;
  report(10, ok, "lambda_min " + fmt("%.6f", jb.lambda_min) + " < B " + fmt("%.6f", jb.B) + ", seeded trajectory has " +
                     std::to_string(drops) + " fidelity-lowering jumps of " +
                     std::to_string(rec.jump_fidelity_deltas.size()));
}

void criterion_11() {
  const double eps = 0.05;
  const auto aff = bloch::to_bloch(bloch::resonance_fluorescence(eps));
  const double S = bloch::von_neumann_entropy(aff.r_ss);
  double h = -1.0;
  for (const auto& b : monitor::rf_two_state_schemes(eps))
    if (b.branch == "nu-") h = b.entropy;
  const double lead = (std::log2(10.0) - 4.0 * std::log2(eps)) * std::pow(eps, 4);
  const double rh = std::abs(h - lead) / lead, rs = std::abs(S - lead) / lead;
  const bool ok = h > 0 && rh <= kEntropyRel && rs <= kEntropyRel && h - S > 0;
  report(11, ok, "h " + fmt("%.6g", h) + fmt(" (rel %.3g)", rh) + ", S " + fmt("%.6g", S) + fmt(" (rel %.3g)", rs) +
                     " vs leading " + fmt("%.6g", lead) + ", h - S " + fmt("%.3g", h - S));
  const double lead_e = (std::log2(std::exp(1.0)) - 4.0 * std::log2(eps)) * std::pow(eps, 4);
  info("with constant log2(e): h rel " + fmt("%.3g", std::abs(h - lead_e) / lead_e) + ", S rel " +
       fmt("%.3g", std::abs(S - lead_e) / lead_e));
}

void criterion_12() {
  double lo = INFINITY, hi = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double eps = 0.01 + 0.001 * i;
    const double R = monitor::asymptotic_rate(monitor::rf_two_state_scheme(eps, "nu-"));
    const double ratio = R / (std::pow(eps, 4) * std::abs(std::log(eps * eps)));
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  report(12, lo > 0 && hi / lo <= kRateRatioSpread,
         "R / (eps^4 |ln eps^2|) in [" + fmt("%.4g", lo) + ", " + fmt("%.4g", hi) + "] on [0.01, 0.05]" +
             fmt(", spread %.3g (tol 2)", hi / lo));
}

template <class F>
void guarded(int id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  bool supplementary = true;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--skip-supplementary") == 0) supplementary = false;
  guarded(1, criteria_1_2);
  guarded(3, criterion_3);
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  guarded(6, criterion_6);
  guarded(7, criterion_7);
  guarded(8, [&] { criterion_8(supplementary); });
  guarded(9, criterion_9);
  guarded(10, criterion_10);
  guarded(11, criterion_11);
  guarded(12, criterion_12);

  int unexpected = 0, passed = 0;
  for (const auto& l : g_lines) {
    if (l.pass) ++passed;
    else if (!kKnownDeviations.count(l.id)) ++unexpected;
  }
  std::printf("summary: %d/%zu PASS, %d unexpected FAIL, known deviations:", passed, g_lines.size(), unexpected);
  for (int id : kKnownDeviations) std::printf(" %d", id);
  std::printf("\n");
  return unexpected == 0 ? 0 : 1;
}
