// Copyright 2026 The FAAL Desk Authors.
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

namespace faal {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not chain (matmul, batch/label/weight lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Value outside the domain of an operation (log of a non-positive entry,
// negative tau, label out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed IDX or checkpoint file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid or unknown configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace faal
