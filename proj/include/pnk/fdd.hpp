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

#ifndef PNK_FDD_HPP_
#define PNK_FDD_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pnk/rational.hpp"
#include "pnk/syntax.hpp"

namespace pnk {

using FieldId = uint32_t;

// Interned field names. Test order on (field, value) pairs is lexicographic
// by field name, then by value; it is fixed for the lifetime of a manager.
class FieldTable {
 public:
  FieldId intern(const std::string& name);
  std::string name(FieldId f) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, FieldId> ids_;
};

// A concrete packet: total map from (active) fields to values.
struct Packet {
  std::vector<std::pair<FieldId, Value>> entries;  // sorted by field id

  std::optional<Value> get(FieldId f) const;
  void set(FieldId f, Value v);
  auto operator<=>(const Packet&) const = default;
};

// Distribution over output packets plus the drop outcome.
struct PacketDist {
  std::map<Packet, Prob> mass;
  Prob drop{Rat(0), true};
};

// An action is drop or a set of field modifications applied as simultaneous
// final writes; the empty modification set is the identity.
using ActionId = uint32_t;
inline constexpr ActionId kActionDrop = 0;
inline constexpr ActionId kActionIdentity = 1;

struct DistEntry {
  ActionId action;
  Prob prob;
};
using DistId = uint32_t;

// Value-type handle into a manager. Id 0 is the drop diagram, id 1 is skip.
struct Fdd {
  uint32_t id = 0;
  bool operator==(const Fdd&) const = default;
};

// Hash-consed, ordered, reduced probabilistic forwarding decision diagrams.
//
// Invariants maintained by construction:
//   - tests strictly increase along every root-to-leaf path;
//   - hi != lo at every interior node;
//   - the true-branch of a test (f,v) contains no further test on f and no
//     leaf modification f:=v (such writes are identities there);
//   - leaf distributions are canonical (sorted, positive, distinct actions).
//
// With fields treated as unbounded, this form is unique per denotation, so
// structural identity decides semantic equality of exact diagrams.
//
// All operations are safe to call from multiple threads sharing a manager;
// results are canonical, so racing workers converge on identical ids.
class FddManager {
 public:
  FddManager();
  FddManager(const FddManager&) = delete;
  FddManager& operator=(const FddManager&) = delete;

  FieldTable& fields() { return fields_; }
  const FieldTable& fields() const { return fields_; }
  bool test_less(FieldId f, Value v, FieldId g, Value w) const;

  // --- interning -----------------------------------------------------------
  ActionId action_mods(std::vector<std::pair<FieldId, Value>> writes);
  bool action_is_drop(ActionId a) const { return a == kActionDrop; }
  std::vector<std::pair<FieldId, Value>> action_writes(ActionId a) const;
  DistId make_dist(std::vector<DistEntry> entries);
  std::vector<DistEntry> dist_entries(DistId d) const;

  // --- structure -----------------------------------------------------------
  Fdd leaf(DistId d);
  Fdd drop_fdd() const { return Fdd{0}; }
  Fdd skip_fdd() const { return Fdd{1}; }
  bool is_leaf(Fdd f) const;
  FieldId top_field(Fdd f) const;
  Value top_value(Fdd f) const;
  Fdd hi(Fdd f) const;
  Fdd lo(Fdd f) const;
  DistId leaf_dist(Fdd f) const;
  bool exact(Fdd f) const;
  bool zero_one(Fdd f) const;
  std::size_t node_count() const;

  // Normalizing node constructor; operands need not be cofactor-clean.
  Fdd branch(FieldId f, Value v, Fdd hi, Fdd lo);

  // --- program operations --------------------------------------------------
  Fdd of_pred(const PredPtr& p);
  Fdd seq(Fdd f, Fdd g);
  Fdd convex(const Prob& r, Fdd f, Fdd g);  // r*f + (1-r)*g
  Fdd mix(const std::vector<std::pair<Prob, Fdd>>& parts);  // weights sum to 1
  Fdd ite(Fdd cond, Fdd then_f, Fdd else_f);
  Fdd neg01(Fdd cond);

  // Cofactor/normalization: the diagram specialized to f=v (resp. f!=v).
  Fdd assume_eq(Fdd x, FieldId f, Value v);
  Fdd assume_neq(Fdd x, FieldId f, Value v);

  // --- queries -------------------------------------------------------------
  PacketDist eval(Fdd f, const Packet& pk) const;
  // For 0/1 diagrams: does the diagram accept the packet?
  bool accepts(Fdd cond, const Packet& pk) const;

  std::string to_dot(Fdd f) const;
  // Checks all structural invariants; throws InternalError on violation.
  // Non-const: the redundancy check runs the normalization ops.
  void validate(Fdd f);

  // Scratch memo surface for layered operations (loop solves cache their
  // results here, keyed by operand ids and solver configuration).
  std::optional<uint32_t> aux_find(const std::vector<uint64_t>& key) const {
    return aux_cache_.find(key);
  }
  void aux_put(const std::vector<uint64_t>& key, uint32_t value) {
    aux_cache_.put(key, value);
  }

 private:
  struct NodeRec {
    FieldId field = 0;  // kLeaf for leaves
    Value value = 0;
    uint32_t hi = 0;  // dist id for leaves
    uint32_t lo = 0;
    uint64_t tested = 0;   // field bits tested in the subtree
    uint64_t written = 0;  // field bits written by any leaf action
    bool exact = true;
    bool zero_one = false;
  };
  static constexpr FieldId kLeaf = 0xffffffffu;
  static uint64_t field_bit(FieldId f) { return 1ull << (f & 63u); }

  NodeRec rec(uint32_t id) const;
  Fdd intern_node(FieldId f, Value v, Fdd hi, Fdd lo);
  Fdd apply_action(ActionId a, Fdd g);
  Fdd subst(Fdd g, ActionId mods);
  uint32_t rat_id(const Rat& r);

  struct KeyHash {
    std::size_t operator()(const std::vector<uint64_t>& k) const {
      std::size_t h = k.size();
      for (uint64_t x : k)
        h ^= std::hash<uint64_t>()(x) + 0x9e3779b97f4a7c15ull + (h << 6) +
             (h >> 2);
      return h;
    }
  };
  using Key = std::vector<uint64_t>;

  class Cache {
   public:
    std::optional<uint32_t> find(const Key& k) const;
    void put(const Key& k, uint32_t v);

   private:
    static constexpr std::size_t kShards = 16;
    struct Shard {
      mutable std::mutex mu;
      std::unordered_map<Key, uint32_t, KeyHash> map;
    };
    mutable Shard shards_[kShards];
    Shard& shard(const Key& k) const {
      return shards_[KeyHash()(k) % kShards];
    }
  };

  FieldTable fields_;

  mutable std::shared_mutex store_mu_;
  std::vector<NodeRec> recs_;
  std::unordered_map<Key, uint32_t, KeyHash> node_ids_;
  std::vector<std::vector<std::pair<FieldId, Value>>> actions_;
  std::unordered_map<Key, uint32_t, KeyHash> action_ids_;
  std::vector<std::vector<DistEntry>> dists_;
  std::unordered_map<Key, uint32_t, KeyHash> dist_ids_;
  std::vector<Rat> rats_;
  std::map<Rat, uint32_t> rat_ids_;

  Cache seq_cache_, ite_cache_, convex_cache_, assume_eq_cache_,
      assume_neq_cache_, subst_cache_, neg_cache_, aux_cache_;
};

}  // namespace pnk

#endif  // PNK_FDD_HPP_
