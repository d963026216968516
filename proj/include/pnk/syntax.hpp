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

#ifndef PNK_SYNTAX_HPP_
#define PNK_SYNTAX_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pnk/rational.hpp"

namespace pnk {

// Packet field values are bounded naturals.
using Value = uint32_t;

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

struct Pred;
using PredPtr = std::shared_ptr<const Pred>;

struct Pred {
  enum class Kind { False, True, Test, Or, And, Neg };

  Kind kind;
  std::string field;  // Test
  Value value = 0;    // Test
  PredPtr left, right;

  static PredPtr falsum();
  static PredPtr verum();
  static PredPtr test(std::string field, Value value);
  static PredPtr disj(PredPtr a, PredPtr b);
  static PredPtr conj(PredPtr a, PredPtr b);
  static PredPtr neg(PredPtr a);
};

bool pred_equal(const PredPtr& a, const PredPtr& b);
std::string to_string(const PredPtr& p);

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------
//
// The surface language is the guarded fragment: no raw union and no star.
// Union and Star constructors exist for the reference semantics (the oracle
// interprets them); the parser never produces them and the compiler rejects
// them.

struct Prog;
using ProgPtr = std::shared_ptr<const Prog>;

struct ChoiceBranch {
  Rat prob;
  ProgPtr prog;
};

struct CaseBranch {
  PredPtr guard;
  ProgPtr body;
};

struct Prog {
  enum class Kind {
    Filter,   // pred
    Assign,   // field := value
    Seq,      // left; right
    Choice,   // branches (probs sum to 1)
    If,       // pred ? left : right
    While,    // while pred do left
    DoWhile,  // do left while pred
    Case,     // cases (disjoint guards), uncovered inputs drop
    VarIn,    // var field := value in left
    Union,    // left & right   (oracle only)
    Star,     // left*          (oracle only)
  };

  Kind kind;
  PredPtr pred;
  std::string field;
  Value value = 0;
  ProgPtr left, right;
  std::vector<ChoiceBranch> branches;
  std::vector<CaseBranch> cases;

  static ProgPtr filter(PredPtr p);
  static ProgPtr skip();
  static ProgPtr drop();
  static ProgPtr assign(std::string field, Value value);
  static ProgPtr seq(ProgPtr a, ProgPtr b);
  // Convenience: right-nested sequence of all parts; empty list is skip.
  static ProgPtr seq_all(std::vector<ProgPtr> parts);
  static ProgPtr choice(std::vector<ChoiceBranch> branches);
  // p +[r] q
  static ProgPtr choice2(const Rat& r, ProgPtr p, ProgPtr q);
  static ProgPtr ite(PredPtr a, ProgPtr p, ProgPtr q);
  static ProgPtr while_loop(PredPtr a, ProgPtr body);
  static ProgPtr do_while(ProgPtr body, PredPtr a);
  static ProgPtr case_of(std::vector<CaseBranch> cases);
  static ProgPtr var_in(std::string field, Value value, ProgPtr body);
  static ProgPtr union_of(ProgPtr a, ProgPtr b);  // oracle only
  static ProgPtr star(ProgPtr a);                 // oracle only
};

bool prog_equal(const ProgPtr& a, const ProgPtr& b);
std::string to_string(const ProgPtr& p);

// Rewrites VarIn and DoWhile into core constructs:
//   var f:=n in p   =>  f:=n; p; f:=0
//   do p while a    =>  p; while a do p
// Case nodes are kept (they carry the parallel-compilation hint) but their
// bodies are desugared. Total on well-formed ASTs and idempotent.
ProgPtr desugar(const ProgPtr& p);

// AST node count (used for the linear-size bound on the PRISM translation).
int ast_size(const ProgPtr& p);

}  // namespace pnk

#endif  // PNK_SYNTAX_HPP_
