// Copyright 2026 The vecmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace vecmpc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Real value outside the fixed-point domain.
class EncodingError : public Error {
 public:
  using Error::Error;
};

// Invalid public parameter (k > n, headroom exceeded, bad scheme...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Not enough shares to interpolate.
class ReconstructionError : public Error {
 public:
  using Error::Error;
};

// Preprocessing exhausted or not matching the request.
class MaterialError : public Error {
 public:
  using Error::Error;
};

// Transport or round-schedule failure: timeouts, malformed envelopes,
// parties diverging from the schedule.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class BuildError : public Error {
 public:
  using Error::Error;
};

// Malformed file or wire bytes.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace vecmpc
