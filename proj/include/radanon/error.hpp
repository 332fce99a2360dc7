// Copyright 2026 The Radanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef RADANON_ERROR_HPP_
#define RADANON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace radanon {

// Bad arguments: shape mismatches, out-of-range parameters, malformed configs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable or unwritable files, malformed containers.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called in the wrong order (e.g. a second backward pass).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace radanon

#endif  // RADANON_ERROR_HPP_
