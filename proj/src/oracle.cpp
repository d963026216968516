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

#include "pnk/oracle.hpp"

#include <algorithm>
#include <queue>

#include "pnk/error.hpp"

namespace pnk {

Oracle::Oracle(
    FddManager& man,
    std::vector<std::pair<std::string, std::vector<Value>>> field_values,
    uint32_t max_packets)
    : man_(man) {
  uint64_t count = 1;
  std::vector<std::vector<Value>> values;
  for (auto& [name, vals] : field_values) {
    if (vals.empty()) throw ValidationError("oracle field with empty range");
    fields_.push_back(man_.fields().intern(name));
    values.push_back(vals);
    count *= vals.size();
    if (count > max_packets || count > 64)
      throw ResourceError("oracle universe exceeds the packet cap");
  }
  // Enumerate the product universe.
  std::vector<std::size_t> digit(fields_.size(), 0);
  while (true) {
    Packet pk;
    for (std::size_t i = 0; i < fields_.size(); ++i)
      pk.entries.push_back({fields_[i], values[i][digit[i]]});
    std::sort(pk.entries.begin(), pk.entries.end());
    index_.emplace(pk, static_cast<uint32_t>(packets_.size()));
    packets_.push_back(std::move(pk));
    std::size_t i = fields_.size();
    while (i > 0) {
      --i;
      if (++digit[i] < values[i].size()) break;
      digit[i] = 0;
      if (i == 0) return;
    }
    if (fields_.empty()) return;
  }
}

SetMask Oracle::singleton(const Packet& pk) const {
  auto it = index_.find(pk);
  if (it == index_.end())
    throw ValidationError("packet outside the oracle universe");
  return SetMask(1) << it->second;
}

bool Oracle::pred_holds(const PredPtr& t, const Packet& pk) const {
  switch (t->kind) {
    case Pred::Kind::False:
      return false;
    case Pred::Kind::True:
      return true;
    case Pred::Kind::Test: {
      // Field ids are interned lazily; an unknown field can't match.
      for (auto& [f, v] : pk.entries) {
        if (man_.fields().name(f) == t->field) return v == t->value;
      }
      throw ValidationError("predicate tests a field outside the universe: " +
                            t->field);
    }
    case Pred::Kind::Or:
      return pred_holds(t->left, pk) || pred_holds(t->right, pk);
    case Pred::Kind::And:
      return pred_holds(t->left, pk) && pred_holds(t->right, pk);
    case Pred::Kind::Neg:
      return !pred_holds(t->left, pk);
  }
  return false;
}

SetMask Oracle::filter_mask(const PredPtr& t, SetMask a) const {
  SetMask out = 0;
  for (uint32_t i = 0; i < packet_count(); ++i) {
    if ((a >> i) & 1) {
      if (pred_holds(t, packets_[i])) out |= SetMask(1) << i;
    }
  }
  return out;
}

namespace {

SetDist point(SetMask b) { return SetDist{{b, Rat(1)}}; }

SetDist scale_add(const SetDist& a, const Rat& ra, const SetDist& b,
                  const Rat& rb) {
  SetDist out;
  for (auto& [m, p] : a) out[m] += ra * p;
  for (auto& [m, p] : b) out[m] += rb * p;
  return out;
}

}  // namespace

const ProgPtr& Oracle::derived(const ProgPtr& p) {
  auto it = derived_.find(p.get());
  if (it != derived_.end()) return it->second;
  ProgPtr enc;
  switch (p->kind) {
    case Prog::Kind::If:
      // if a then p else q == a;p & !a;q
      enc = Prog::union_of(
          Prog::seq(Prog::filter(p->pred), p->left),
          Prog::seq(Prog::filter(Pred::neg(p->pred)), p->right));
      break;
    case Prog::Kind::While:
      // while a do p == (a;p)* ; !a
      enc = Prog::seq(Prog::star(Prog::seq(Prog::filter(p->pred), p->left)),
                      Prog::filter(Pred::neg(p->pred)));
      break;
    case Prog::Kind::Case: {
      enc = Prog::drop();
      for (auto it2 = p->cases.rbegin(); it2 != p->cases.rend(); ++it2)
        enc = Prog::ite(it2->guard, it2->body, enc);
      break;
    }
    case Prog::Kind::DoWhile:
    case Prog::Kind::VarIn:
      enc = desugar(p);
      break;
    default:
      throw InternalError("derived encoding requested for a core node");
  }
  return derived_.emplace(p.get(), std::move(enc)).first->second;
}

SetDist Oracle::bigstep(const ProgPtr& p, SetMask a) {
  pinned_.emplace(p.get(), p);
  auto key = std::make_pair(p.get(), a);
  auto hit = memo_.find(key);
  if (hit != memo_.end()) return hit->second;
  SetDist out;
  switch (p->kind) {
    case Prog::Kind::Filter:
      out = point(filter_mask(p->pred, a));
      break;
    case Prog::Kind::Assign: {
      FieldId f = man_.fields().intern(p->field);
      SetMask b = 0;
      for (uint32_t i = 0; i < packet_count(); ++i) {
        if ((a >> i) & 1) {
          Packet q = packets_[i];
          q.set(f, p->value);
          auto it = index_.find(q);
          if (it == index_.end())
            throw ValidationError("assignment leaves the oracle universe");
          b |= SetMask(1) << it->second;
        }
      }
      out = point(b);
      break;
    }
    case Prog::Kind::Seq: {
      for (auto& [c, pc] : bigstep(p->left, a))
        for (auto& [b, qb] : bigstep(p->right, c)) out[b] += pc * qb;
      break;
    }
    case Prog::Kind::Union: {
      // Convolution: independent runs joined by set union.
      SetDist l = bigstep(p->left, a), r = bigstep(p->right, a);
      for (auto& [c, pc] : l)
        for (auto& [d, qd] : r) out[c | d] += pc * qd;
      break;
    }
    case Prog::Kind::Choice: {
      for (const auto& br : p->branches) {
        SetDist d = bigstep(br.prog, a);
        for (auto& [b, q] : d) out[b] += br.prob * q;
      }
      break;
    }
    case Prog::Kind::If:
    case Prog::Kind::While:
    case Prog::Kind::Case:
    case Prog::Kind::DoWhile:
    case Prog::Kind::VarIn:
      out = bigstep(derived(p), a);
      break;
    case Prog::Kind::Star:
      out = star(p->left, a);
      break;
  }
  memo_.emplace(key, out);
  return out;
}

PacketDist Oracle::bigstep_packet(const ProgPtr& p, const Packet& pk) {
  PacketDist out;
  for (auto& [b, q] : bigstep(p, singleton(pk))) {
    if (b == 0) {
      out.drop = out.drop + Prob(q);
      continue;
    }
    if ((b & (b - 1)) != 0)
      throw InternalError("guarded program produced a non-singleton set");
    uint32_t i = 0;
    while (((b >> i) & 1) == 0) ++i;
    Packet q_pk = packets_[i];
    auto [it, fresh] = out.mass.try_emplace(std::move(q_pk), Prob(q));
    if (!fresh) it->second = it->second + Prob(q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small-step chain
// ---------------------------------------------------------------------------

uint32_t Oracle::Chain::index(SetMask a, SetMask b) const {
  for (uint32_t i = 0; i < states.size(); ++i)
    if (states[i] == std::make_pair(a, b)) return i;
  throw InternalError("state not in chain");
}

Oracle::Chain Oracle::smallstep_chain(const ProgPtr& body) {
  if (packet_count() > 8)
    throw ResourceError("explicit chain needs |Pk| <= 8");
  const uint32_t sets = 1u << packet_count();
  Oracle::Chain ch;
  ch.states.reserve(static_cast<std::size_t>(sets) * sets);
  for (SetMask a = 0; a < sets; ++a)
    for (SetMask b = 0; b < sets; ++b) ch.states.push_back({a, b});
  const uint32_t n = static_cast<uint32_t>(ch.states.size());
  auto idx = [&](SetMask a, SetMask b) {
    return static_cast<uint32_t>(a * sets + b);
  };

  ch.S.rows = ch.S.cols = n;
  ch.S.row.resize(n);
  for (uint32_t s = 0; s < n; ++s) {
    auto [a, b] = ch.states[s];
    SetMask b2 = b | a;
    for (auto& [a2, p] : bigstep(body, a))
      ch.S.row[s].push_back({idx(a2, b2), p});
    std::sort(ch.S.row[s].begin(), ch.S.row[s].end());
  }

  // Saturated: no reachable step can still grow the accumulator.
  // Unsaturated states are those with a not within b, closed backwards.
  std::vector<bool> unsat(n, false);
  std::queue<uint32_t> work;
  std::vector<std::vector<uint32_t>> preds(n);
  for (uint32_t s = 0; s < n; ++s) {
    for (auto& [t, p] : ch.S.row[s]) preds[t].push_back(s);
    auto [a, b] = ch.states[s];
    if ((a | b) != b) {
      unsat[s] = true;
      work.push(s);
    }
  }
  while (!work.empty()) {
    uint32_t t = work.front();
    work.pop();
    for (uint32_t s : preds[t]) {
      if (!unsat[s]) {
        unsat[s] = true;
        work.push(s);
      }
    }
  }
  ch.saturated.resize(n);
  for (uint32_t s = 0; s < n; ++s) ch.saturated[s] = !unsat[s];

  ch.U.rows = ch.U.cols = n;
  ch.U.row.resize(n);
  for (uint32_t s = 0; s < n; ++s) {
    auto [a, b] = ch.states[s];
    ch.U.row[s].push_back({ch.saturated[s] ? idx(0, b) : s, Rat(1)});
  }

  ch.SU.rows = ch.SU.cols = n;
  ch.SU.row.resize(n);
  for (uint32_t s = 0; s < n; ++s) {
    std::map<uint32_t, Rat> acc;
    for (auto& [t, p] : ch.S.row[s]) acc[ch.U.row[t][0].first] += p;
    for (auto& [t, p] : acc) ch.SU.row[s].push_back({t, p});
  }
  return ch;
}

// ---------------------------------------------------------------------------
// Closed-form star over the reachable sub-chain
// ---------------------------------------------------------------------------

namespace {
struct ReachedChain {
  std::vector<std::pair<SetMask, SetMask>> states;
  std::map<std::pair<SetMask, SetMask>, uint32_t> index;
  std::vector<std::vector<std::pair<uint32_t, Rat>>> step;  // S-transitions
};
}  // namespace

std::size_t Oracle::reachable_states(const ProgPtr& body, SetMask a0) {
  std::map<std::pair<SetMask, SetMask>, uint32_t> seen;
  std::queue<std::pair<SetMask, SetMask>> work;
  seen.emplace(std::make_pair(a0, SetMask(0)), 0);
  work.push({a0, 0});
  while (!work.empty()) {
    auto [a, b] = work.front();
    work.pop();
    SetMask b2 = b | a;
    for (auto& [a2, p] : bigstep(body, a)) {
      auto key = std::make_pair(a2, b2);
      if (seen.emplace(key, static_cast<uint32_t>(seen.size())).second)
        work.push(key);
    }
  }
  return seen.size();
}

SetDist Oracle::closed_form_star(const ProgPtr& body, SetMask a) {
  // Build the S-reachable sub-chain from (a, empty), then quotient by U and
  // solve for absorption at the canonical saturated states (empty, b).
  ReachedChain rc;
  auto intern = [&](SetMask x, SetMask y) {
    auto key = std::make_pair(x, y);
    auto it = rc.index.find(key);
    if (it != rc.index.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(rc.states.size());
    rc.index.emplace(key, id);
    rc.states.push_back(key);
    return id;
  };
  std::queue<uint32_t> work;
  work.push(intern(a, 0));
  while (!work.empty()) {
    uint32_t s = work.front();
    work.pop();
    if (s >= rc.step.size()) rc.step.resize(s + 1);
    auto [x, y] = rc.states[s];
    SetMask y2 = y | x;
    for (auto& [x2, p] : bigstep(body, x)) {
      std::size_t before = rc.states.size();
      uint32_t t = intern(x2, y2);
      rc.step[s].push_back({t, p});
      if (rc.states.size() != before) work.push(t);
    }
  }
  rc.step.resize(rc.states.size());
  const uint32_t n = static_cast<uint32_t>(rc.states.size());

  // Saturation on the reachable graph.
  std::vector<bool> unsat(n, false);
  std::vector<std::vector<uint32_t>> preds(n);
  std::queue<uint32_t> q;
  for (uint32_t s = 0; s < n; ++s) {
    for (auto& [t, p] : rc.step[s]) preds[t].push_back(s);
    auto [x, y] = rc.states[s];
    if ((x | y) != y) {
      unsat[s] = true;
      q.push(s);
    }
  }
  while (!q.empty()) {
    uint32_t t = q.front();
    q.pop();
    for (uint32_t s : preds[t])
      if (!unsat[s]) {
        unsat[s] = true;
        q.push(s);
      }
  }

  // SU over the closure: quotient targets through U, adding the canonical
  // (empty, b) states as needed.
  std::map<std::pair<SetMask, SetMask>, uint32_t> all_index = rc.index;
  std::vector<std::pair<SetMask, SetMask>> all_states = rc.states;
  auto intern_all = [&](SetMask x, SetMask y) {
    auto key = std::make_pair(x, y);
    auto it = all_index.find(key);
    if (it != all_index.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(all_states.size());
    all_index.emplace(key, id);
    all_states.push_back(key);
    return id;
  };
  auto quotient = [&](uint32_t t) {
    auto [x, y] = rc.states[t];
    if (!unsat[t]) return intern_all(0, y);
    return t;
  };
  std::vector<std::map<uint32_t, Rat>> su(n);
  for (uint32_t s = 0; s < n; ++s) {
    uint32_t qs = quotient(s);
    if (qs != s) continue;  // saturated states act through their canonical
    for (auto& [t, p] : rc.step[s]) su[s][quotient(t)] += p;
  }
  const uint32_t total = static_cast<uint32_t>(all_states.size());
  SparseMatrix<Rat> m;
  m.rows = m.cols = total;
  m.row.resize(total);
  for (uint32_t s = 0; s < total; ++s) {
    if (s < n && quotient(s) == s) {
      for (auto& [t, p] : su[s]) m.row[s].push_back({t, p});
    } else if (s < n) {
      // Saturated reachable state: one U-step to its canonical form.
      m.row[s].push_back({quotient(s), Rat(1)});
    } else {
      // Canonical (empty, b): absorbing.
      m.row[s].push_back({s, Rat(1)});
    }
  }
  for (auto& row : m.row) std::sort(row.begin(), row.end());

  uint32_t start = rc.index.at({a, 0});
  AbsorbingSystem<Rat> sys = partition_absorbing(m);
  // Distribution over absorbing states from the start.
  std::map<uint32_t, Rat> absorbed;
  bool start_absorbing = false;
  for (std::size_t i = 0; i < sys.absorbing.size(); ++i) {
    if (sys.absorbing[i] == start) {
      absorbed[start] = Rat(1);
      start_absorbing = true;
    }
  }
  if (!start_absorbing) {
    SparseMatrix<Rat> A = absorbing_limit<Rat>(sys, std::nullopt);
    uint32_t tpos = 0;
    for (std::size_t i = 0; i < sys.transient.size(); ++i)
      if (sys.transient[i] == start) tpos = static_cast<uint32_t>(i);
    for (auto& [c, w] : A.row[tpos]) absorbed[sys.absorbing[c]] += w;
  }
  SetDist out;
  for (auto& [s, w] : absorbed) {
    auto [x, y] = all_states[s];
    if (x != 0)
      throw InternalError("absorbed in a non-canonical state");
    out[y] += w;
  }
  return out;
}

SetDist Oracle::star(const ProgPtr& body, SetMask a) {
  return closed_form_star(body, a);
}

}  // namespace pnk
