// Copyright 2026 The sslvi Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace sslvi {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data is unusable (too short, non-finite, corrupt).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or a factorization failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File-system or format failure.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

[[noreturn]] inline void ThrowContract(const std::string& what) {
  throw ContractError(what);
}

}  // namespace detail

#define SSLVI_REQUIRE(cond, msg)                 \
  do {                                           \
    if (!(cond)) ::sslvi::detail::ThrowContract(msg); \
  } while (0)

}  // namespace sslvi
