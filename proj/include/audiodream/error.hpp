/*
 * Copyright 2026 The audiodream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace audiodream {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that are invalid or do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (e.g. backward from a
/// non-scalar loss).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid training, evaluation or dreaming configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Class label outside the genre range.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Batch normalization asked to compute statistics over fewer than two values.
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

/// Sample rate the resampler cannot handle.
class UnsupportedRateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace audiodream
