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

#ifndef PNK_PARSER_HPP_
#define PNK_PARSER_HPP_

#include <map>
#include <string>

#include "pnk/syntax.hpp"

namespace pnk {

// Optional per-field range declarations. They pin variable bounds for the
// model-checker exporter; the matrix pipeline ignores them.
using FieldRanges = std::map<std::string, Value>;  // field -> max value

struct ParsedModule {
  FieldRanges ranges;
  ProgPtr program;
};

// Parses a program in the concrete grammar:
//
//   prog   := seq ("+[" rat "]" seq)*                  // left-assoc choice
//   seq    := atom (";" atom)*
//   atom   := "drop" | "skip" | field ":=" nat
//           | "if" pred "then" "{" prog "}" "else" "{" prog "}"
//           | "while" pred "do" "{" prog "}"
//           | "do" "{" prog "}" "while" pred
//           | "case" "{" (pred "->" prog ("|" ...))* "}"
//           | "choice" "{" (rat "->" prog ("," ...))* "}"
//           | "var" field ":=" nat "in" "{" prog "}"
//           | pred-atom | "(" prog ")"
//   pred   := "true" | "false" | field "=" nat | "!" pred
//           | pred "&" pred | pred "|" pred | "(" pred ")"
//   rat    := nat | nat "/" nat | decimal
//
// ";" binds tighter than "+[r]". Inside case branches a top-level "|"
// terminates the branch; parenthesize disjunction filters there.
//
// An optional header of lines `range f = 0..N;` may precede the program.
ProgPtr parse_program(const std::string& text);
ParsedModule parse_module(const std::string& text);

}  // namespace pnk

#endif  // PNK_PARSER_HPP_
