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

#ifndef PNK_PRISMGEN_HPP_
#define PNK_PRISMGEN_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnk/fdd.hpp"
#include "pnk/syntax.hpp"

namespace pnk {

// Guarded-command automaton in the shape the model-checker backend emits:
// per state, the guards of the outgoing edges partition the packet space,
// and per (state, guard) the edge probabilities sum to one.
struct AutomatonEdge {
  uint32_t src;
  PredPtr guard;
  Rat prob;
  std::vector<std::pair<std::string, Value>> updates;  // applied in order
  uint32_t dst;
};

struct GuardedAutomaton {
  uint32_t states = 0;
  uint32_t initial = 0;
  uint32_t halt = 0;  // normal termination, absorbing
  uint32_t sink = 0;  // drop, absorbing
  std::vector<AutomatonEdge> edges;

  std::vector<const AutomatonEdge*> out(uint32_t state) const;
};

// Thompson-style construction; the result is well-formed and linear in the
// program size (at most 4 states per AST node).
GuardedAutomaton to_automaton(const ProgPtr& core_prog);

// Fuses basic blocks: states whose single outgoing edge is unguarded and
// deterministic are folded into their predecessors, concatenating updates
// (later writes win per field). Idempotent; never grows the automaton.
GuardedAutomaton collapse_blocks(const GuardedAutomaton& a);

// Throws unless guards partition and probabilities sum to one per guard.
void check_wellformed(const GuardedAutomaton& a);

// Emits the model text: one dtmc module, a pc variable, one bounded
// variable per field, and one command per (state, guard). Fields default
// to the range [0 .. max mentioned value] unless pinned by `ranges`.
std::string emit_text(const GuardedAutomaton& a,
                      const std::map<std::string, Value>& ranges = {},
                      const std::optional<std::string>& reachability_query =
                          std::nullopt);

// Internal validation oracle for the translation: the explicit chain over
// (pc, packet) states, solved for absorption; must match the compiled
// semantics. The walk is restricted to packets reachable from `pk`.
PacketDist simulate_automaton(FddManager& man, const GuardedAutomaton& a,
                              const Packet& pk,
                              uint64_t state_cap = 1'000'000);

}  // namespace pnk

#endif  // PNK_PRISMGEN_HPP_
