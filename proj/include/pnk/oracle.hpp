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

#ifndef PNK_ORACLE_HPP_
#define PNK_ORACLE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pnk/fdd.hpp"
#include "pnk/linalg.hpp"
#include "pnk/syntax.hpp"

namespace pnk {

// Deliberately naive reference implementation of the packet-set semantics
// over a tiny explicit universe, used as ground truth in differential tests.
// Performance is a non-goal; everything is exact rationals. Union and Star
// are admitted here even though the surface language is guarded.
//
// Packet sets are bitmasks over the enumerated universe (at most 64 packets).
using SetMask = uint64_t;
using SetDist = std::map<SetMask, Rat>;

class Oracle {
 public:
  // The universe is the product of the given per-field value lists.
  Oracle(FddManager& man,
         std::vector<std::pair<std::string, std::vector<Value>>> field_values,
         uint32_t max_packets = 64);

  uint32_t packet_count() const {
    return static_cast<uint32_t>(packets_.size());
  }
  const Packet& packet(uint32_t i) const { return packets_[i]; }
  // Mask of the singleton set {pk}; the packet must be in the universe.
  SetMask singleton(const Packet& pk) const;

  // Exact distribution over output sets on input set `a`.
  SetDist bigstep(const ProgPtr& p, SetMask a);

  // Convenience for guarded-fragment agreement checks: input {pk}, output
  // masses folded onto packets and drop.
  PacketDist bigstep_packet(const ProgPtr& p, const Packet& pk);

  // Explicit small-step chain over all (set, accumulator) pairs for the
  // body of a star. States are indexed by a*2^|Pk| + b over masks.
  struct Chain {
    std::vector<std::pair<SetMask, SetMask>> states;
    std::vector<bool> saturated;
    SparseMatrix<Rat> S, U, SU;
    uint32_t index(SetMask a, SetMask b) const;
  };
  Chain smallstep_chain(const ProgPtr& body);

  // (SU)^infty absorption from (a, empty), read off at the (empty, b)
  // states; computed over the states reachable from the start only.
  SetDist closed_form_star(const ProgPtr& body, SetMask a);

  // Number of (a,b) states reachable from (a0, empty) under S (used by the
  // chain-shape tests).
  std::size_t reachable_states(const ProgPtr& body, SetMask a0);

  bool pred_holds(const PredPtr& t, const Packet& pk) const;

 private:
  SetMask filter_mask(const PredPtr& t, SetMask a) const;
  SetDist star(const ProgPtr& body, SetMask a);

  // Derived encodings (if/while/case rewrites) are cached per node so the
  // memo keys below stay pointer-stable.
  const ProgPtr& derived(const ProgPtr& p);

  FddManager& man_;
  std::vector<FieldId> fields_;
  std::vector<Packet> packets_;
  std::map<Packet, uint32_t> index_;
  std::map<const Prog*, ProgPtr> derived_;
  // Every evaluated node is pinned for the oracle's lifetime; the memo is
  // keyed by node address, so evaluated terms must never be recycled.
  std::map<const Prog*, ProgPtr> pinned_;
  std::map<std::pair<const Prog*, SetMask>, SetDist> memo_;
};

}  // namespace pnk

#endif  // PNK_ORACLE_HPP_
