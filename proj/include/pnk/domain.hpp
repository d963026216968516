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

#ifndef PNK_DOMAIN_HPP_
#define PNK_DOMAIN_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "pnk/fdd.hpp"

namespace pnk {

// Per-field sets of mentioned values (tests and modifications). Each field
// additionally has an implicit wildcard class covering every value not
// mentioned; fields are conceptually unbounded here, so wildcards are never
// empty. Declared ranges matter only to the model-checker exporter.
struct Domain {
  std::map<FieldId, std::vector<Value>> values;  // sorted, deduplicated

  void add(FieldId f, Value v);
  void merge(const Domain& other);
  bool operator==(const Domain&) const = default;
};

// Values mentioned anywhere in the diagram, in a test or a modification.
Domain infer_domain(const FddManager& man, Fdd f);

// A symbolic packet: one digit per field; digit == |values(f)| encodes the
// wildcard class of f.
struct SymPacket {
  std::vector<uint32_t> digits;
  bool operator==(const SymPacket&) const = default;
};

// The symbolic state space induced by a domain: the product of per-field
// classes plus the distinguished empty (drop) state at index 0.
class StateSpace {
 public:
  // Fields are ordered by name, matching the diagram test order.
  StateSpace(const FddManager& man, Domain d, uint64_t cap);

  static constexpr uint64_t kEmpty = 0;

  uint64_t count() const { return count_; }  // includes the empty state
  const std::vector<FieldId>& fields() const { return fields_; }
  const std::vector<std::vector<Value>>& values() const { return values_; }

  uint64_t index(const SymPacket& s) const;   // >= 1
  SymPacket decode(uint64_t idx) const;       // idx >= 1

  // The unique class containing a concrete packet (partition property).
  // The packet must be total over the space's fields.
  SymPacket classify(const Packet& pk) const;

  // A concrete representative of a class; wildcard digits take a value
  // outside the mentioned set.
  Packet representative(const SymPacket& s) const;

  bool wildcard_digit(std::size_t field_pos, uint32_t digit) const {
    return digit == values_[field_pos].size();
  }

 private:
  std::vector<FieldId> fields_;  // ascending field name
  std::vector<std::vector<Value>> values_;
  std::vector<uint64_t> stride_;
  uint64_t count_ = 1;
};

}  // namespace pnk

#endif  // PNK_DOMAIN_HPP_
