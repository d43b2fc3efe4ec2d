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

#pragma once

#include <stdexcept>
#include <string>

namespace qtrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QTRACK_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// blochcore
QTRACK_DEFINE_ERROR(SingularGenerator);
QTRACK_DEFINE_ERROR(InvalidDistribution);
QTRACK_DEFINE_ERROR(InvalidModel);

// polysolve
QTRACK_DEFINE_ERROR(ZeroPolynomial);
QTRACK_DEFINE_ERROR(NotZeroDimensional);
QTRACK_DEFINE_ERROR(SolverDegeneracy);
QTRACK_DEFINE_ERROR(ResourceLimit);
QTRACK_DEFINE_ERROR(ParseError);

// prensemble
QTRACK_DEFINE_ERROR(NonRationalInput);

// monitor
QTRACK_DEFINE_ERROR(NotRealizable);
QTRACK_DEFINE_ERROR(NotConvergent);

// trajectory
QTRACK_DEFINE_ERROR(AnnihilatedState);

#undef QTRACK_DEFINE_ERROR

}  // namespace qtrack
