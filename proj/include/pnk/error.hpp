// Copyright 2026 The pnk authors
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

#ifndef PNK_ERROR_HPP_
#define PNK_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pnk {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed source text; carries a source position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int col)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(col) + ")"),
        line(line),
        col(col) {}
  int line;
  int col;
};

// A configured resource cap (state-space size, oracle universe) was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Semantically invalid input: overlapping case guards, bad topology
// attributes, packets missing fields, and the like.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A condition the implementation guarantees can't happen did happen.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pnk

#endif  // PNK_ERROR_HPP_
