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

#include "pnk/fdd.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "pnk/error.hpp"

namespace pnk {

// --------------------------------------------------------------------------
// FieldTable
// --------------------------------------------------------------------------

FieldId FieldTable::intern(const std::string& name) {
  {
    std::shared_lock lk(mu_);
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
  }
  std::unique_lock lk(mu_);
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  FieldId id = static_cast<FieldId>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

std::string FieldTable::name(FieldId f) const {
  std::shared_lock lk(mu_);
  if (f >= names_.size()) throw InternalError("unknown field id");
  return names_[f];
}

std::size_t FieldTable::size() const {
  std::shared_lock lk(mu_);
  return names_.size();
}

// --------------------------------------------------------------------------
// Packet
// --------------------------------------------------------------------------

std::optional<Value> Packet::get(FieldId f) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), f,
      [](const auto& e, FieldId x) { return e.first < x; });
  if (it != entries.end() && it->first == f) return it->second;
  return std::nullopt;
}

void Packet::set(FieldId f, Value v) {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), f,
      [](const auto& e, FieldId x) { return e.first < x; });
  if (it != entries.end() && it->first == f) {
    it->second = v;
  } else {
    entries.insert(it, {f, v});
  }
}

// --------------------------------------------------------------------------
// Caches
// --------------------------------------------------------------------------

std::optional<uint32_t> FddManager::Cache::find(const Key& k) const {
  Shard& s = shard(k);
  std::lock_guard lk(s.mu);
  auto it = s.map.find(k);
  if (it == s.map.end()) return std::nullopt;
  return it->second;
}

void FddManager::Cache::put(const Key& k, uint32_t v) {
  Shard& s = shard(k);
  std::lock_guard lk(s.mu);
  s.map.emplace(k, v);
}

// --------------------------------------------------------------------------
// Interning
// --------------------------------------------------------------------------

FddManager::FddManager() {
  // Fixed ids: action 0 = drop, action 1 = identity; dist 0 = point mass on
  // drop, dist 1 = point mass on identity; fdd 0 = drop, fdd 1 = skip.
  actions_.push_back({});  // drop (writes unused)
  actions_.push_back({});  // identity

  DistId d0 = make_dist({{kActionDrop, Prob(Rat(1))}});
  DistId d1 = make_dist({{kActionIdentity, Prob(Rat(1))}});
  if (d0 != 0 || d1 != 1) throw InternalError("dist seeding out of order");

  NodeRec drop_rec;
  drop_rec.field = kLeaf;
  drop_rec.hi = 0;
  drop_rec.zero_one = true;
  recs_.push_back(drop_rec);
  NodeRec skip_rec;
  skip_rec.field = kLeaf;
  skip_rec.hi = 1;
  skip_rec.zero_one = true;
  recs_.push_back(skip_rec);
}

bool FddManager::test_less(FieldId f, Value v, FieldId g, Value w) const {
  if (f == g) return v < w;
  return fields_.name(f) < fields_.name(g);
}

FddManager::NodeRec FddManager::rec(uint32_t id) const {
  std::shared_lock lk(store_mu_);
  return recs_[id];
}

ActionId FddManager::action_mods(
    std::vector<std::pair<FieldId, Value>> writes) {
  std::sort(writes.begin(), writes.end());
  for (std::size_t i = 1; i < writes.size(); ++i) {
    if (writes[i].first == writes[i - 1].first)
      throw InternalError("action writes a field twice");
  }
  if (writes.empty()) return kActionIdentity;
  Key key;
  key.reserve(writes.size());
  for (auto& [f, v] : writes)
    key.push_back((static_cast<uint64_t>(f) << 32) | v);
  {
    std::shared_lock lk(store_mu_);
    auto it = action_ids_.find(key);
    if (it != action_ids_.end()) return it->second;
  }
  std::unique_lock lk(store_mu_);
  auto it = action_ids_.find(key);
  if (it != action_ids_.end()) return it->second;
  ActionId id = static_cast<ActionId>(actions_.size());
  actions_.push_back(std::move(writes));
  action_ids_.emplace(std::move(key), id);
  return id;
}

std::vector<std::pair<FieldId, Value>> FddManager::action_writes(
    ActionId a) const {
  if (a == kActionDrop) throw InternalError("drop action has no writes");
  std::shared_lock lk(store_mu_);
  return actions_[a];
}

uint32_t FddManager::rat_id(const Rat& r) {
  {
    std::shared_lock lk(store_mu_);
    auto it = rat_ids_.find(r);
    if (it != rat_ids_.end()) return it->second;
  }
  std::unique_lock lk(store_mu_);
  auto it = rat_ids_.find(r);
  if (it != rat_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(rats_.size());
  rats_.push_back(r);
  rat_ids_.emplace(r, id);
  return id;
}

DistId FddManager::make_dist(std::vector<DistEntry> entries) {
  // Canonicalize: merge duplicate actions, drop zero mass, sort by action.
  std::sort(entries.begin(), entries.end(),
            [](const DistEntry& a, const DistEntry& b) {
              return a.action < b.action;
            });
  std::vector<DistEntry> out;
  for (auto& e : entries) {
    if (e.prob.value == 0) continue;
    if (!out.empty() && out.back().action == e.action) {
      out.back().prob = out.back().prob + e.prob;
    } else {
      out.push_back(e);
    }
  }
  if (out.empty()) throw InternalError("empty action distribution");
  Rat sum(0);
  bool exact = true;
  for (const auto& e : out) {
    if (e.prob.value < 0) throw InternalError("negative probability in dist");
    sum += e.prob.value;
    exact = exact && e.prob.exact;
  }
  if (exact) {
    if (sum != 1) throw InternalError("action distribution mass != 1");
  } else {
    Rat slack = sum - 1;
    if (abs(slack) > make_rat(1, 1u << 30))
      throw InternalError("inexact action distribution far from mass 1");
  }
  Key key;
  key.reserve(out.size() * 3);
  for (auto& e : out) {
    key.push_back(e.action);
    key.push_back(rat_id(e.prob.value));
    key.push_back(e.prob.exact ? 1 : 0);
  }
  {
    std::shared_lock lk(store_mu_);
    auto it = dist_ids_.find(key);
    if (it != dist_ids_.end()) return it->second;
  }
  std::unique_lock lk(store_mu_);
  auto it = dist_ids_.find(key);
  if (it != dist_ids_.end()) return it->second;
  DistId id = static_cast<DistId>(dists_.size());
  dists_.push_back(std::move(out));
  dist_ids_.emplace(std::move(key), id);
  return id;
}

std::vector<DistEntry> FddManager::dist_entries(DistId d) const {
  std::shared_lock lk(store_mu_);
  return dists_[d];
}

Fdd FddManager::leaf(DistId d) {
  if (d == 0) return drop_fdd();
  if (d == 1) return skip_fdd();
  Key key{0xffffffffull << 32, d};
  {
    std::shared_lock lk(store_mu_);
    auto it = node_ids_.find(key);
    if (it != node_ids_.end()) return Fdd{it->second};
  }
  std::unique_lock lk(store_mu_);
  auto it = node_ids_.find(key);
  if (it != node_ids_.end()) return Fdd{it->second};
  NodeRec r;
  r.field = kLeaf;
  r.hi = d;
  bool exact = true;
  uint64_t written = 0;
  bool zero_one = true;
  for (const auto& e : dists_[d]) {
    exact = exact && e.prob.exact;
    if (e.action != kActionDrop) {
      for (auto& [f, v] : actions_[e.action]) written |= field_bit(f);
    }
    zero_one = false;  // ids 0/1 are the only 0/1 leaves and were shortcut
  }
  r.exact = exact;
  r.written = written;
  r.zero_one = zero_one;
  uint32_t id = static_cast<uint32_t>(recs_.size());
  recs_.push_back(r);
  node_ids_.emplace(std::move(key), id);
  return Fdd{id};
}

Fdd FddManager::intern_node(FieldId f, Value v, Fdd hi, Fdd lo) {
  Key key{(static_cast<uint64_t>(f) << 32) | v, hi.id, lo.id};
  {
    std::shared_lock lk(store_mu_);
    auto it = node_ids_.find(key);
    if (it != node_ids_.end()) return Fdd{it->second};
  }
  NodeRec h = rec(hi.id), l = rec(lo.id);
  std::unique_lock lk(store_mu_);
  auto it = node_ids_.find(key);
  if (it != node_ids_.end()) return Fdd{it->second};
  NodeRec r;
  r.field = f;
  r.value = v;
  r.hi = hi.id;
  r.lo = lo.id;
  r.tested = field_bit(f) | h.tested | l.tested;
  r.written = h.written | l.written;
  r.exact = h.exact && l.exact;
  r.zero_one = h.zero_one && l.zero_one;
  uint32_t id = static_cast<uint32_t>(recs_.size());
  recs_.push_back(r);
  node_ids_.emplace(std::move(key), id);
  return Fdd{id};
}

// --------------------------------------------------------------------------
// Structure accessors
// --------------------------------------------------------------------------

bool FddManager::is_leaf(Fdd f) const { return rec(f.id).field == kLeaf; }
FieldId FddManager::top_field(Fdd f) const {
  NodeRec r = rec(f.id);
  if (r.field == kLeaf) throw InternalError("top_field on leaf");
  return r.field;
}
Value FddManager::top_value(Fdd f) const {
  NodeRec r = rec(f.id);
  if (r.field == kLeaf) throw InternalError("top_value on leaf");
  return r.value;
}
Fdd FddManager::hi(Fdd f) const {
  NodeRec r = rec(f.id);
  if (r.field == kLeaf) throw InternalError("hi on leaf");
  return Fdd{r.hi};
}
Fdd FddManager::lo(Fdd f) const {
  NodeRec r = rec(f.id);
  if (r.field == kLeaf) throw InternalError("lo on leaf");
  return Fdd{r.lo};
}
DistId FddManager::leaf_dist(Fdd f) const {
  NodeRec r = rec(f.id);
  if (r.field != kLeaf) throw InternalError("leaf_dist on interior node");
  return r.hi;
}
bool FddManager::exact(Fdd f) const { return rec(f.id).exact; }
bool FddManager::zero_one(Fdd f) const { return rec(f.id).zero_one; }
std::size_t FddManager::node_count() const {
  std::shared_lock lk(store_mu_);
  return recs_.size();
}

// --------------------------------------------------------------------------
// Normalization
// --------------------------------------------------------------------------

Fdd FddManager::assume_eq(Fdd x, FieldId f, Value v) {
  NodeRec r = rec(x.id);
  if (((r.tested | r.written) & field_bit(f)) == 0) return x;
  Key key{x.id, (static_cast<uint64_t>(f) << 32) | v};
  if (auto hit = assume_eq_cache_.find(key)) return Fdd{*hit};
  Fdd out;
  if (r.field == kLeaf) {
    // Erase writes f:=v; they are identities under the pin f=v.
    std::vector<DistEntry> entries = dist_entries(r.hi);
    bool changed = false;
    for (auto& e : entries) {
      if (e.action == kActionDrop || e.action == kActionIdentity) continue;
      auto writes = action_writes(e.action);
      auto it = std::find(writes.begin(), writes.end(),
                          std::make_pair(f, v));
      if (it != writes.end()) {
        writes.erase(it);
        e.action = action_mods(std::move(writes));
        changed = true;
      }
    }
    out = changed ? leaf(make_dist(std::move(entries))) : x;
  } else if (r.field == f) {
    out = (r.value == v) ? assume_eq(Fdd{r.hi}, f, v)
                         : assume_eq(Fdd{r.lo}, f, v);
  } else {
    out = branch(r.field, r.value, assume_eq(Fdd{r.hi}, f, v),
                 assume_eq(Fdd{r.lo}, f, v));
  }
  assume_eq_cache_.put(key, out.id);
  return out;
}

Fdd FddManager::assume_neq(Fdd x, FieldId f, Value v) {
  NodeRec r = rec(x.id);
  if ((r.tested & field_bit(f)) == 0) return x;
  if (r.field == kLeaf) return x;
  Key key{x.id, (static_cast<uint64_t>(f) << 32) | v};
  if (auto hit = assume_neq_cache_.find(key)) return Fdd{*hit};
  Fdd out;
  if (r.field == f && r.value == v) {
    // Ordering forbids a second (f,v) test below; the lo branch is final.
    out = Fdd{r.lo};
  } else if (r.field == f) {
    // Test (f,w), w != v: its true branch pins f=w which already implies
    // f != v, so only the false branch needs rewriting.
    out = branch(r.field, r.value, Fdd{r.hi}, assume_neq(Fdd{r.lo}, f, v));
  } else {
    out = branch(r.field, r.value, assume_neq(Fdd{r.hi}, f, v),
                 assume_neq(Fdd{r.lo}, f, v));
  }
  assume_neq_cache_.put(key, out.id);
  return out;
}

Fdd FddManager::branch(FieldId f, Value v, Fdd h, Fdd l) {
  // General merge of "if f=v then h else l": operands whose top test
  // precedes (f,v) are split first so the path order is restored.
  NodeRec rh = rec(h.id), rl = rec(l.id);
  FieldId mf = f;
  Value mv = v;
  for (const NodeRec* r : {&rh, &rl}) {
    if (r->field != kLeaf && test_less(r->field, r->value, mf, mv)) {
      mf = r->field;
      mv = r->value;
    }
  }
  if (mf != f || mv != v) {
    if (mf == f) {
      // Same field, smaller value w: under f=w the test f=v is false.
      return branch(mf, mv, assume_eq(l, mf, mv),
                    branch(f, v, assume_neq(h, mf, mv),
                           assume_neq(l, mf, mv)));
    }
    return branch(
        mf, mv,
        branch(f, v, assume_eq(h, mf, mv), assume_eq(l, mf, mv)),
        branch(f, v, assume_neq(h, mf, mv), assume_neq(l, mf, mv)));
  }
  h = assume_eq(h, f, v);
  l = assume_neq(l, f, v);
  // Redundancy is up to write-normalization: the node collapses when the
  // true branch is the false branch specialized to f=v (this subsumes the
  // plain hi==lo rule and is what makes the form unique per denotation,
  // e.g. branch(g=1, skip, leaf{g:=1}) is just leaf{g:=1}).
  if (h == assume_eq(l, f, v)) return l;
  return intern_node(f, v, h, l);
}

// --------------------------------------------------------------------------
// Predicate diagrams
// --------------------------------------------------------------------------

Fdd FddManager::of_pred(const PredPtr& p) {
  switch (p->kind) {
    case Pred::Kind::False:
      return drop_fdd();
    case Pred::Kind::True:
      return skip_fdd();
    case Pred::Kind::Test:
      return branch(fields_.intern(p->field), p->value, skip_fdd(),
                    drop_fdd());
    case Pred::Kind::Neg:
      return neg01(of_pred(p->left));
    case Pred::Kind::And:
      return ite(of_pred(p->left), of_pred(p->right), drop_fdd());
    case Pred::Kind::Or:
      return ite(of_pred(p->left), skip_fdd(), of_pred(p->right));
  }
  throw InternalError("of_pred: unhandled predicate");
}

Fdd FddManager::neg01(Fdd c) {
  if (!zero_one(c)) throw ValidationError("negation of a non-0/1 diagram");
  if (c == skip_fdd()) return drop_fdd();
  if (c == drop_fdd()) return skip_fdd();
  Key key{c.id};
  if (auto hit = neg_cache_.find(key)) return Fdd{*hit};
  NodeRec r = rec(c.id);
  Fdd out = branch(r.field, r.value, neg01(Fdd{r.hi}), neg01(Fdd{r.lo}));
  neg_cache_.put(key, out.id);
  return out;
}

// --------------------------------------------------------------------------
// Sequential composition
// --------------------------------------------------------------------------

Fdd FddManager::subst(Fdd g, ActionId mods) {
  if (mods == kActionIdentity) return g;
  Key key{g.id, mods};
  if (auto hit = subst_cache_.find(key)) return Fdd{*hit};
  auto writes = action_writes(mods);
  NodeRec r = rec(g.id);
  Fdd out;
  if (r.field == kLeaf) {
    // Post-compose: first apply `mods`, then the leaf's own action. Later
    // writes win per field.
    std::vector<DistEntry> entries = dist_entries(r.hi);
    for (auto& e : entries) {
      if (e.action == kActionDrop) continue;
      std::vector<std::pair<FieldId, Value>> merged = writes;
      if (e.action != kActionIdentity) {
        for (auto& [f, v] : action_writes(e.action)) {
          bool found = false;
          for (auto& m : merged) {
            if (m.first == f) {
              m.second = v;
              found = true;
              break;
            }
          }
          if (!found) merged.push_back({f, v});
        }
      }
      e.action = action_mods(std::move(merged));
    }
    out = leaf(make_dist(std::move(entries)));
  } else {
    auto it = std::find_if(writes.begin(), writes.end(),
                           [&](const auto& w) { return w.first == r.field; });
    if (it != writes.end()) {
      out = (it->second == r.value) ? subst(Fdd{r.hi}, mods)
                                    : subst(Fdd{r.lo}, mods);
    } else {
      out = branch(r.field, r.value, subst(Fdd{r.hi}, mods),
                   subst(Fdd{r.lo}, mods));
    }
  }
  subst_cache_.put(key, out.id);
  return out;
}

Fdd FddManager::apply_action(ActionId a, Fdd g) {
  if (a == kActionDrop) return drop_fdd();
  return subst(g, a);
}

Fdd FddManager::seq(Fdd f, Fdd g) {
  if (f == drop_fdd()) return f;
  if (f == skip_fdd()) return g;
  if (g == skip_fdd()) return f;
  Key key{f.id, g.id};
  if (auto hit = seq_cache_.find(key)) return Fdd{*hit};
  NodeRec r = rec(f.id);
  Fdd out;
  if (r.field == kLeaf) {
    std::vector<std::pair<Prob, Fdd>> parts;
    for (const auto& e : dist_entries(r.hi))
      parts.push_back({e.prob, apply_action(e.action, g)});
    out = mix(parts);
  } else {
    out = branch(r.field, r.value, seq(Fdd{r.hi}, g), seq(Fdd{r.lo}, g));
  }
  seq_cache_.put(key, out.id);
  return out;
}

// --------------------------------------------------------------------------
// Convex combination
// --------------------------------------------------------------------------

Fdd FddManager::convex(const Prob& p, Fdd f, Fdd g) {
  if (p.exact && p.value == 1) return f;
  if (p.exact && p.value == 0) return g;
  if (f == g) return f;
  Key key{rat_id(p.value), p.exact ? 1u : 0u, f.id, g.id};
  if (auto hit = convex_cache_.find(key)) return Fdd{*hit};
  NodeRec rf = rec(f.id), rg = rec(g.id);
  Fdd out;
  if (rf.field == kLeaf && rg.field == kLeaf) {
    Prob q(Rat(1) - p.value, p.exact);
    std::vector<DistEntry> entries;
    for (const auto& e : dist_entries(rf.hi))
      entries.push_back({e.action, e.prob * p});
    for (const auto& e : dist_entries(rg.hi))
      entries.push_back({e.action, e.prob * q});
    out = leaf(make_dist(std::move(entries)));
  } else {
    FieldId tf;
    Value tv;
    bool f_has = rf.field != kLeaf, g_has = rg.field != kLeaf;
    if (f_has && (!g_has || test_less(rf.field, rf.value, rg.field,
                                      rg.value))) {
      tf = rf.field;
      tv = rf.value;
    } else {
      tf = rg.field;
      tv = rg.value;
    }
    out = branch(tf, tv,
                 convex(p, assume_eq(f, tf, tv), assume_eq(g, tf, tv)),
                 convex(p, assume_neq(f, tf, tv), assume_neq(g, tf, tv)));
  }
  convex_cache_.put(key, out.id);
  return out;
}

Fdd FddManager::mix(const std::vector<std::pair<Prob, Fdd>>& parts) {
  std::vector<std::pair<Prob, Fdd>> live;
  Rat total(0);
  for (const auto& [p, f] : parts) {
    if (p.value == 0) continue;
    total += p.value;
    live.push_back({p, f});
  }
  if (live.empty()) throw InternalError("mix with zero total mass");
  // Right fold of binary convex combinations with renormalized weights.
  Fdd acc = live.back().second;
  Rat seen = live.back().first.value;
  bool exact = live.back().first.exact;
  for (auto it = live.rbegin() + 1; it != live.rend(); ++it) {
    seen += it->first.value;
    exact = exact && it->first.exact;
    Prob w(it->first.value / seen, exact);
    acc = convex(w, it->second, acc);
  }
  return acc;
}

// --------------------------------------------------------------------------
// Guarded conditional
// --------------------------------------------------------------------------

Fdd FddManager::ite(Fdd c, Fdd t, Fdd e) {
  if (!zero_one(c))
    throw ValidationError("ite condition is not a 0/1 diagram");
  if (c == skip_fdd()) return t;
  if (c == drop_fdd()) return e;
  if (t == e) return t;
  Key key{c.id, t.id, e.id};
  if (auto hit = ite_cache_.find(key)) return Fdd{*hit};
  // c is an interior node here; pick the least test among the three.
  FieldId tf = top_field(c);
  Value tv = top_value(c);
  for (Fdd x : {t, e}) {
    NodeRec r = rec(x.id);
    if (r.field != kLeaf && test_less(r.field, r.value, tf, tv)) {
      tf = r.field;
      tv = r.value;
    }
  }
  Fdd out = branch(
      tf, tv,
      ite(assume_eq(c, tf, tv), assume_eq(t, tf, tv), assume_eq(e, tf, tv)),
      ite(assume_neq(c, tf, tv), assume_neq(t, tf, tv),
          assume_neq(e, tf, tv)));
  ite_cache_.put(key, out.id);
  return out;
}

// --------------------------------------------------------------------------
// Evaluation
// --------------------------------------------------------------------------

bool FddManager::accepts(Fdd cond, const Packet& pk) const {
  NodeRec r = rec(cond.id);
  while (r.field != kLeaf) {
    auto v = pk.get(r.field);
    if (!v)
      throw ValidationError("packet missing field " + fields_.name(r.field));
    r = rec(*v == r.value ? r.hi : r.lo);
  }
  if (r.hi == 1) return true;   // identity point mass
  if (r.hi == 0) return false;  // drop point mass
  throw ValidationError("accepts on a non-0/1 diagram");
}

PacketDist FddManager::eval(Fdd f, const Packet& pk) const {
  NodeRec r = rec(f.id);
  while (r.field != kLeaf) {
    auto v = pk.get(r.field);
    if (!v)
      throw ValidationError("packet missing field " + fields_.name(r.field));
    r = rec(*v == r.value ? r.hi : r.lo);
  }
  PacketDist out;
  for (const auto& e : dist_entries(r.hi)) {
    if (e.action == kActionDrop) {
      out.drop = out.drop + e.prob;
    } else {
      Packet q = pk;
      if (e.action != kActionIdentity) {
        for (auto& [fld, val] : action_writes(e.action)) q.set(fld, val);
      }
      auto [it, fresh] = out.mass.try_emplace(std::move(q), e.prob);
      if (!fresh) it->second = it->second + e.prob;
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Diagnostics
// --------------------------------------------------------------------------

std::string FddManager::to_dot(Fdd f) const {
  std::ostringstream os;
  os << "digraph fdd {\n  node [shape=circle];\n";
  std::set<uint32_t> seen;
  std::vector<uint32_t> stack{f.id};
  while (!stack.empty()) {
    uint32_t id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    NodeRec r = rec(id);
    if (r.field == kLeaf) {
      os << "  n" << id << " [shape=box,label=\"";
      bool first = true;
      for (const auto& e : dist_entries(r.hi)) {
        if (!first) os << "\\n";
        first = false;
        if (e.action == kActionDrop) {
          os << "drop";
        } else if (e.action == kActionIdentity) {
          os << "id";
        } else {
          bool f1 = true;
          for (auto& [fld, val] : action_writes(e.action)) {
            if (!f1) os << ", ";
            f1 = false;
            os << fields_.name(fld) << ":=" << val;
          }
        }
        os << " @ " << rat_to_string(e.prob.value);
        if (!e.prob.exact) os << "~";
      }
      os << "\"];\n";
    } else {
      os << "  n" << id << " [label=\"" << fields_.name(r.field) << "="
         << r.value << "\"];\n";
      os << "  n" << id << " -> n" << r.hi << " [style=solid];\n";
      os << "  n" << id << " -> n" << r.lo << " [style=dashed];\n";
      stack.push_back(r.hi);
      stack.push_back(r.lo);
    }
  }
  os << "}\n";
  return os.str();
}

void FddManager::validate(Fdd f) {
  // Walk every root-to-leaf path checking order, reduction, and
  // write-normalization against the pins accumulated on the path.
  struct Frame {
    uint32_t id;
    std::vector<std::pair<FieldId, Value>> pins;  // positive pins
    std::optional<std::pair<FieldId, Value>> last;
  };
  std::vector<Frame> stack{{f.id, {}, std::nullopt}};
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    NodeRec r = rec(fr.id);
    if (r.field == kLeaf) {
      Rat sum(0);
      bool exact = true;
      const auto entries = dist_entries(r.hi);
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (i > 0 && entries[i - 1].action >= e.action)
          throw InternalError("validate: unsorted leaf distribution");
        if (e.prob.value <= 0)
          throw InternalError("validate: non-positive leaf probability");
        sum += e.prob.value;
        exact = exact && e.prob.exact;
        if (e.action != kActionDrop && e.action != kActionIdentity) {
          for (auto& w : action_writes(e.action)) {
            for (auto& pin : fr.pins) {
              if (pin == w)
                throw InternalError(
                    "validate: identity write not normalized away");
            }
          }
        }
      }
      if (exact && sum != 1)
        throw InternalError("validate: exact leaf mass != 1");
      continue;
    }
    if (r.hi == r.lo ||
        assume_eq(Fdd{r.lo}, r.field, r.value) == Fdd{r.hi})
      throw InternalError("validate: redundant node");
    if (fr.last &&
        !test_less(fr.last->first, fr.last->second, r.field, r.value))
      throw InternalError("validate: tests out of order");
    for (auto& pin : fr.pins) {
      if (pin.first == r.field)
        throw InternalError("validate: repeated field test on true branch");
    }
    Frame hi_frame{r.hi, fr.pins, {{r.field, r.value}}};
    hi_frame.pins.push_back({r.field, r.value});
    stack.push_back(std::move(hi_frame));
    Frame lo_frame{r.lo, fr.pins, {{r.field, r.value}}};
    stack.push_back(std::move(lo_frame));
  }
}

}  // namespace pnk
