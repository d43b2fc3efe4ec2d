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

// Reference values used by the --check modes and the acceptance binary.

#pragma once

#include <array>

namespace qtrack::reference {

// Three-state resonance fluorescence ensembles at eps = 0.15, one row per
// distinct geometry: total angle, three angles to r_ss (degrees), entropy.
struct GeometryRow {
  double total_angle;
  std::array<double, 3> angles;
  double entropy;
};

inline constexpr std::array<GeometryRow, 6> kThreeStateGeometry015 = {{
    {235.489, {115.323, 2.42085, 0.0313546}, 0.020},
    {221.528, {109.238, 3.5805, 0.0390626}, 0.023},
    {189.578, {94.7316, 5.87493, 0.0575965}, 0.026},
    {26.9345, {0.654795, 12.8124, 5.30314}, 0.466},
    {14.2435, {1.6635, 5.45759, 2.77901}, 1.171},
    {13.0614, {3.06505, 1.4863, 3.46569}, 1.299},
}};

// Two-variable worked example: x = x1, y = x2.
inline constexpr std::array<const char*, 2> kWorkedSystem = {
    "+(1)*x1^2-(1)*x2^2+(1)*x1*x2",
    "+(1)*x1^2*x2+(1)*x2-(1)",
};

// Its reduced DRL basis.
inline constexpr std::array<const char*, 3> kWorkedBasis = {
    "+(1)*x1^2+(1)*x1*x2-(1)*x2^2",
    "+(1)*x2^3-(1)*x1*x2^2+(1)*x2-(1)",
    "+(1)*x2^4+(1)*x1*x2+(2)*x2^2-(1)*x1-(2)*x2",
};

// Standard monomials as (deg x, deg y): 1, x, y, xy, y^2, y^3.
inline constexpr std::array<std::array<int, 2>, 6> kWorkedStandard = {{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 2}, {0, 3}}};

// Multiplication by x on that basis, column j = [x * b_j].
inline constexpr std::array<std::array<int, 6>, 6> kWorkedMx = {{
    {0, 0, 0, 1, -1, 0},
    {1, 0, 0, 0, 0, 1},
    {0, 0, 0, -1, 1, 1},
    {0, -1, 1, 0, 0, -1},
    {0, 1, 0, 0, 0, -1},
    {0, 0, 0, 1, 1, 0},
}};

}  // namespace qtrack::reference
