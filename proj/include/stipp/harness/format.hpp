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

#ifndef STIPP_HARNESS_FORMAT_HPP
#define STIPP_HARNESS_FORMAT_HPP

#include <charconv>
#include <string>

namespace stipp::harness {

// Shortest text that reads back to the same double; locale independent.
inline std::string fmt(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace stipp::harness

#endif  // STIPP_HARNESS_FORMAT_HPP
