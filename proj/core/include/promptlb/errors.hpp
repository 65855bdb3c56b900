// Copyright 2026 The promptlb Authors.
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

#ifndef PROMPTLB_ERRORS_HPP_
#define PROMPTLB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace promptlb {

// Parameters that are representable but invalid at evaluation time,
// e.g. a Rao-Kupper tie coefficient implying negative tie probability.
class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input data: bad files, unknown models, inconsistent dimensions.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A maximum-likelihood fit whose optimum is not unique: the comparison graph
// is disconnected and no regularization is active.
class NotIdentifiableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Routing budget below the cheapest model's cost.
class InfeasibleBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote coefficient server failures, kept distinct so callers can react
// differently to each; there is never a silent fallback.
class RemoteTimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RemoteProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RemoteDimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace promptlb

#endif  // PROMPTLB_ERRORS_HPP_
