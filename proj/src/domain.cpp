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

#include "pnk/domain.hpp"

#include <algorithm>
#include <unordered_set>

#include "pnk/error.hpp"

namespace pnk {

void Domain::add(FieldId f, Value v) {
  auto& vs = values[f];
  auto it = std::lower_bound(vs.begin(), vs.end(), v);
  if (it == vs.end() || *it != v) vs.insert(it, v);
}

void Domain::merge(const Domain& other) {
  for (const auto& [f, vs] : other.values)
    for (Value v : vs) add(f, v);
}

Domain infer_domain(const FddManager& man, Fdd f) {
  Domain d;
  std::unordered_set<uint32_t> seen;
  std::vector<Fdd> stack{f};
  while (!stack.empty()) {
    Fdd x = stack.back();
    stack.pop_back();
    if (!seen.insert(x.id).second) continue;
    if (man.is_leaf(x)) {
      for (const auto& e : man.dist_entries(man.leaf_dist(x))) {
        if (e.action == kActionDrop || e.action == kActionIdentity) continue;
        for (auto& [fld, val] : man.action_writes(e.action)) d.add(fld, val);
      }
    } else {
      d.add(man.top_field(x), man.top_value(x));
      stack.push_back(man.hi(x));
      stack.push_back(man.lo(x));
    }
  }
  return d;
}

StateSpace::StateSpace(const FddManager& man, Domain d, uint64_t cap) {
  for (auto& [f, vs] : d.values) fields_.push_back(f);
  std::sort(fields_.begin(), fields_.end(), [&](FieldId a, FieldId b) {
    return man.fields().name(a) < man.fields().name(b);
  });
  for (FieldId f : fields_) values_.push_back(d.values[f]);
  // count = 1 + prod over fields of (|values|+1), guarded against overflow.
  uint64_t prod = 1;
  for (const auto& vs : values_) {
    uint64_t classes = vs.size() + 1;
    if (prod > cap / classes + 1)
      throw ResourceError("state space exceeds cap");
    prod *= classes;
    if (prod > cap) throw ResourceError("state space exceeds cap");
  }
  stride_.resize(values_.size());
  uint64_t s = 1;
  for (std::size_t i = values_.size(); i-- > 0;) {
    stride_[i] = s;
    s *= values_[i].size() + 1;
  }
  count_ = 1 + prod;
}

uint64_t StateSpace::index(const SymPacket& s) const {
  uint64_t idx = 0;
  for (std::size_t i = 0; i < stride_.size(); ++i)
    idx += stride_[i] * s.digits[i];
  return idx + 1;
}

SymPacket StateSpace::decode(uint64_t idx) const {
  if (idx == kEmpty) throw InternalError("decode of the empty state");
  uint64_t x = idx - 1;
  SymPacket s;
  s.digits.resize(stride_.size());
  for (std::size_t i = 0; i < stride_.size(); ++i) {
    s.digits[i] = static_cast<uint32_t>(x / stride_[i]);
    x %= stride_[i];
  }
  return s;
}

SymPacket StateSpace::classify(const Packet& pk) const {
  SymPacket s;
  s.digits.resize(fields_.size());
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    auto v = pk.get(fields_[i]);
    if (!v) throw ValidationError("packet missing a domain field");
    const auto& vs = values_[i];
    auto it = std::lower_bound(vs.begin(), vs.end(), *v);
    s.digits[i] = (it != vs.end() && *it == *v)
                      ? static_cast<uint32_t>(it - vs.begin())
                      : static_cast<uint32_t>(vs.size());
  }
  return s;
}

Packet StateSpace::representative(const SymPacket& s) const {
  Packet pk;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const auto& vs = values_[i];
    Value v;
    if (s.digits[i] < vs.size()) {
      v = vs[s.digits[i]];
    } else {
      v = vs.empty() ? 0 : vs.back() + 1;  // any unmentioned value
    }
    pk.set(fields_[i], v);  // entries stay sorted by field id
  }
  return pk;
}

}  // namespace pnk
