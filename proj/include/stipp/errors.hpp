// Copyright 2026 The stipp Authors
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

#ifndef STIPP_ERRORS_HPP
#define STIPP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stipp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the operation's domain (non-finite input, bad id, out of workspace).
struct DomainError : Error {
  using Error::Error;
};

// Caller broke a documented precondition (empty dataset, empty grid, ...).
struct PreconditionError : Error {
  using Error::Error;
};

// Factorization or other numerical failure.
struct NumericError : Error {
  using Error::Error;
};

// Two records under one provenance key disagree.
struct IntegrityError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct InfeasibleError : Error {
  using Error::Error;
};

// The communication graph split during a run. The message carries the state.
struct ConnectivityError : Error {
  using Error::Error;
};

}  // namespace stipp

#endif  // STIPP_ERRORS_HPP
