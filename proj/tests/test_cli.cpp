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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "commands.hpp"

using namespace qtrack::cli;
namespace fs = std::filesystem;

namespace {

std::string text_of(const RunResult& r, const std::string& name) {
  for (const auto& o : r.outputs)
    if (o.name == name) return o.content;
  return {};
}

fs::path scratch_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / ("qtrack_cli_test_" + std::string(name));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("model") {
  const auto r = run({"model", "--epsilon", "1"});
  CHECK(r.exit_code == kExitOk);
  CHECK(text_of(r, "model.txt").find("r_ss: (0, 0.666666666667, -0.333333333333)") != std::string::npos);
  const auto j = nlohmann::json::parse(text_of(run({"model", "--epsilon", "0.5", "--format", "json"}), "model.json"));
  CHECK(j.at("epsilon").get<double>() == 0.5);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).exit_code == kExitUsage);
  CHECK(run({"model"}).exit_code == kExitUsage);
  CHECK(run({"model", "--epsilon", "abc"}).exit_code == kExitUsage);
  CHECK(run({"ensembles", "--k", "4", "--epsilon", "0.1"}).exit_code == kExitUsage);
  CHECK(run({"stability", "--epsilon", "0.1", "--format", "xml"}).exit_code == kExitUsage);
  CHECK(run({"simulate", "--psi0", "0,0"}).exit_code == kExitUsage);
  CHECK(run({"sweep", "--epsilon-grid", "0.3:0.1:0.1"}).exit_code == kExitUsage);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.exit_code == kExitOk);
  CHECK(r.message.find("simulate") != std::string::npos);
}

TEST_CASE("missing branch is a solver failure") {
  CHECK(run({"simulate", "--epsilon", "0.3", "--branch", "nu-"}).exit_code == kExitSolver);
}

TEST_CASE("stability formats") {
  const auto csv = text_of(run({"stability", "--k", "2", "--epsilon", "0.1", "--format", "csv"}), "stability.csv");
  CHECK(csv.rfind("epsilon,branch,h,C,R,class,stage1,stage2\n", 0) == 0);
  CHECK(csv.find("0.1,half,1,0.04,") != std::string::npos);
  const auto j = nlohmann::json::parse(
      text_of(run({"stability", "--epsilon", "0.1", "--format", "json"}), "stability.json"));
  CHECK(j.at("schemes").size() == 3);
}

TEST_CASE("ensembles formats") {
  const auto j = nlohmann::json::parse(
      text_of(run({"ensembles", "--k", "2", "--epsilon", "0.23", "--format", "json"}), "ensembles.json"));
  CHECK(j.at("ensembles").size() == 3);
  const auto csv = text_of(run({"ensembles", "--epsilon", "0.3", "--format", "csv"}), "ensembles.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("sweep is independent of threads and finds the threshold") {
  const auto a = run({"sweep", "--epsilon-grid", "0.240:0.246:0.001", "--threads", "1"});
  const auto b = run({"sweep", "--epsilon-grid", "0.240:0.246:0.001", "--threads", "3"});
  REQUIRE(a.exit_code == kExitOk);
  CHECK(a.manifest.output_hashes == b.manifest.output_hashes);
  const auto j = nlohmann::json::parse(text_of(a, "sweep_summary.json"));
  CHECK(j.at("nu_plus_threshold").get<double>() == doctest::Approx(0.24293413584).epsilon(1e-8));
}

TEST_CASE("simulate is reproducible and honours the seed variable") {
  const std::vector<std::string> args = {"simulate", "--epsilon", "0.1", "--beta2", "0.2", "--max-jumps", "10"};
  ::setenv(kSeedEnv, "17", 1);
  const auto a = run(args);
  const auto b = run(args);
  ::setenv(kSeedEnv, "18", 1);
  const auto c = run(args);
  ::unsetenv(kSeedEnv);
  REQUIRE(a.exit_code == kExitOk);
  CHECK(a.manifest.seed == 17);
  CHECK(a.manifest.output_hashes == b.manifest.output_hashes);
  CHECK(a.manifest.output_hashes != c.manifest.output_hashes);
  auto explicit_seed = args;
  explicit_seed.insert(explicit_seed.end(), {"--seed", "17"});
  CHECK(run(explicit_seed).manifest.output_hashes == a.manifest.output_hashes);
}

TEST_CASE("simulate modes") {
  const auto mc = run({"simulate", "--mode", "mc", "--ntraj", "500", "--cycles", "3", "--beta2", "0.2"});
  REQUIRE(mc.exit_code == kExitOk);
  CHECK(nlohmann::json::parse(text_of(mc, "mc.json")).at("cycles").size() == 4);
  const auto cy = run({"simulate", "--mode", "cycle", "--ntraj", "500"});
  REQUIRE(cy.exit_code == kExitOk);
  CHECK(nlohmann::json::parse(text_of(cy, "cycle.json")).at("cycle_time_analytic").get<double>() ==
        doctest::Approx(8.0));
}

TEST_CASE("worked example check reports only the printed m_x entry") {
  const auto r = run({"appendixb", "--check"});
  CHECK(r.exit_code == kExitCheck);
  const auto t = text_of(r, "appendixb.txt");
  CHECK(t.find("check basis ideal-equivalent: PASS") != std::string::npos);
  CHECK(t.find("check standard monomials: PASS") != std::string::npos);
  CHECK(t.find("FAIL (6,4): computed 0 reference 1\n") != std::string::npos);
  CHECK(t.find("check residuals < 1e-10: PASS") != std::string::npos);
  CHECK(run({"appendixb"}).exit_code == kExitOk);
}

TEST_CASE("system and solve round trip") {
  const fs::path dir = scratch_dir("solve");
  fs::create_directories(dir);
  const auto sys = run({"system", "--epsilon", "0.3"});
  REQUIRE(sys.exit_code == kExitOk);
  {
    std::ofstream f(dir / "system.txt");
    f << text_of(sys, "system.txt");
  }
  const auto r = run({"solve", "--system", (dir / "system.txt").string()});
  REQUIRE(r.exit_code == kExitOk);
  const auto j = nlohmann::json::parse(text_of(r, "solutions.json"));
  CHECK(j.at("quotient_dimension").get<int>() > 0);
  for (const auto& s : j.at("solutions")) CHECK(s.at("residual").get<double>() < 1e-8);
  CHECK(run({"solve", "--system", (dir / "missing.txt").string()}).exit_code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("output directory, manifest and replay") {
  const fs::path dir = scratch_dir("replay");
  const auto r = run({"stability", "--epsilon", "0.2", "--format", "csv", "--out", dir.string()});
  CHECK(emit(r) == kExitOk);
  REQUIRE(fs::exists(dir / "stability.csv"));
  REQUIRE(fs::exists(dir / "manifest.json"));
  std::ifstream in(dir / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  CHECK(m.at("command") == "stability");
  CHECK(m.at("parameters").at("epsilon") == "0.2");
  CHECK(m.at("version") == "0.1.0");
  const auto ok = run({"replay", "--manifest", (dir / "manifest.json").string()});
  CHECK(ok.exit_code == kExitOk);
  CHECK(text_of(ok, "replay.txt").find("stability.csv: identical") != std::string::npos);

  auto bad = m;
  bad["outputs"]["stability.csv"] = "0000000000000000";
  {
    std::ofstream f(dir / "manifest.json");
    f << bad.dump();
  }
  CHECK(run({"replay", "--manifest", (dir / "manifest.json").string()}).exit_code == kExitCheck);
  fs::remove_all(dir);
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

// Cells equal as text, or as numbers within 1e-9 relative.
void check_csv(const std::string& got, const std::string& want) {
  const auto a = split_csv(got), b = split_csv(want);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    REQUIRE(a[r].size() == b[r].size());
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      if (a[r][c] == b[r][c]) continue;
      char* e1 = nullptr;
      char* e2 = nullptr;
      const double x = std::strtod(a[r][c].c_str(), &e1), y = std::strtod(b[r][c].c_str(), &e2);
      INFO("row " << r << " col " << c << ": " << a[r][c] << " vs " << b[r][c]);
      CHECK((*e1 == '\0' && *e2 == '\0'));
      CHECK(std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)));
    }
  }
}

const fs::path kGolden = QTRACK_GOLDEN_DIR;

}  // namespace

TEST_CASE("golden: two-state stability table") {
  check_csv(text_of(run({"stability", "--k", "2", "--epsilon", "0.1", "--format", "csv"}), "stability.csv"),
            read_file(kGolden / "stability_k2_eps0.1.csv"));
}

TEST_CASE("golden: two-state sweep") {
  const auto r = run({"sweep", "--k", "2", "--epsilon-grid", "0.01:0.25:0.005"});
  check_csv(text_of(r, "sweep_stability.csv"), read_file(kGolden / "sweep_k2_stability.csv"));
  const auto rows = split_csv(text_of(r, "sweep_stability.csv"));
  for (const auto& row : rows)
    if (row[1] == "half") CHECK(row[3] == "0.04");
}

TEST_CASE("golden: worked Groebner example") {
  const std::string got = text_of(run({"appendixb"}), "appendixb.txt");
  const std::string want = read_file(kGolden / "appendixb.txt");
  const std::string stop = "solutions:\n";
  CHECK(got.substr(0, got.find(stop)) == want.substr(0, want.find(stop)));
}

TEST_CASE("golden: three-state geometry table") {
  const auto r = run({"table1"});
  const std::string csv = text_of(r, "table1.csv");
  check_csv(csv, read_file(kGolden / "table1_eps0.15.csv"));
  const auto rows = split_csv(csv);
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][4]) > std::stod(rows[i - 1][4]));  // entropy increasing
    CHECK(std::stod(rows[i][0]) < std::stod(rows[i - 1][0]));  // total angle decreasing
  }
}
