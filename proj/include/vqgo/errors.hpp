// Copyright 2026 The VQGO Authors
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

namespace vqgo {

/// Raised when an input violates a mathematical precondition (shape, unitarity,
/// Hermiticity, parameter range).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for a request the simulator deliberately does not support.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when an optimizer meets a non-finite cost or gradient.
class OptimizerAbort : public std::runtime_error {
 public:
  OptimizerAbort(const std::string& what, int restart_index = -1)
      : std::runtime_error(what), restart_index_(restart_index) {}
  int restart_index() const { return restart_index_; }

 private:
  int restart_index_;
};

}  // namespace vqgo
