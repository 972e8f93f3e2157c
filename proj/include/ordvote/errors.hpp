// Copyright 2026 The ordvote Authors.
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

namespace ordvote {

/// Malformed, inconsistent or missing input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (flags, config file, model hyperparameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model invariant was broken (unordered cutpoints, off-simplex weights...).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A posterior draw on which a per-draw functional is undefined.
class DegenerateDrawError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace ordvote
