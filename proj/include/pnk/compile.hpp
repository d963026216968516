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

#ifndef PNK_COMPILE_HPP_
#define PNK_COMPILE_HPP_

#include <cstdint>

#include "pnk/domain.hpp"
#include "pnk/fdd.hpp"
#include "pnk/linalg.hpp"
#include "pnk/syntax.hpp"

namespace pnk {

enum class SolverMode { Exact, Float };

struct CompileConfig {
  SolverMode mode = SolverMode::Exact;
  int jobs = 1;                        // worker count for top-level cases
  uint64_t state_cap = 10'000'000;     // symbolic state-space cap for loops
};

// Compiles a guarded program to its canonical diagram. The program is
// desugared first; Union/Star nodes are rejected (oracle-only constructs).
// The result is deterministic and independent of the worker count.
Fdd compile(FddManager& man, const ProgPtr& p, const CompileConfig& cfg = {});

// Loop solve: absorbing states are the classes falsifying the guard (plus
// drop); guard-satisfying classes step by the body diagram. Solved over the
// joint domain of guard and body only.
Fdd compile_while(FddManager& man, Fdd guard, Fdd body,
                  const CompileConfig& cfg = {});

// Case compilation with concurrent branch compilation and a deterministic
// left-to-right combine; guards must be pairwise disjoint.
Fdd compile_case(FddManager& man, const std::vector<CaseBranch>& cases,
                 const CompileConfig& cfg = {});

// Cumulative loop-solver accounting, for the timing reports.
struct CompileStats {
  uint64_t loop_solves = 0;
  uint64_t solve_ns = 0;
  uint64_t solved_states = 0;
};
CompileStats compile_stats();
void reset_compile_stats();

struct MatrixResult {
  StateSpace space;
  SparseMatrix<Rat> matrix;  // square over space.count()
  bool exact;
};

// The diagram's stochastic matrix over its dynamically reduced state space.
// Row/column 0 is the drop state; its row is a point mass on itself.
MatrixResult fdd_to_matrix(const FddManager& man, Fdd f,
                           uint64_t state_cap = 10'000'000);

// Same, but over a caller-supplied (super)space of the diagram's domain.
SparseMatrix<Rat> fdd_to_matrix_over(const FddManager& man, Fdd f,
                                     const StateSpace& space);

// Inverse rendering: rows become leaf distributions whose actions write all
// concretely-valued fields of the target class (write-normalization prunes
// the identity writes). Mass on a wildcard target is only legal from the
// matching source class, where it renders as the identity.
Fdd matrix_to_fdd(FddManager& man, const StateSpace& space,
                  const SparseMatrix<Rat>& m, bool exact);

// Row of a diagram's matrix for one symbolic class, as (state index, prob).
std::vector<std::pair<uint64_t, Prob>> eval_class(const FddManager& man,
                                                  Fdd f,
                                                  const StateSpace& space,
                                                  const SymPacket& cls);

// For 0/1 diagrams: does the class satisfy the predicate?
bool class_accepts(const FddManager& man, Fdd cond, const StateSpace& space,
                   const SymPacket& cls);

}  // namespace pnk

#endif  // PNK_COMPILE_HPP_
