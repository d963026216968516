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

#include "pnk/prismgen.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "pnk/error.hpp"
#include "pnk/linalg.hpp"

namespace pnk {

std::vector<const AutomatonEdge*> GuardedAutomaton::out(uint32_t state) const {
  std::vector<const AutomatonEdge*> o;
  for (const auto& e : edges)
    if (e.src == state) o.push_back(&e);
  return o;
}

// --------------------------------------------------------------------------
// Construction
// --------------------------------------------------------------------------

namespace {

struct Builder {
  GuardedAutomaton a;

  uint32_t fresh() { return a.states++; }

  void edge(uint32_t src, PredPtr guard, Rat prob,
            std::vector<std::pair<std::string, Value>> updates, uint32_t dst) {
    a.edges.push_back({src, std::move(guard), std::move(prob),
                       std::move(updates), dst});
  }

  // Builds the fragment for `p` between `entry` and `exit`.
  void build(const ProgPtr& p, uint32_t entry, uint32_t exit) {
    switch (p->kind) {
      case Prog::Kind::Filter:
        if (p->pred->kind == Pred::Kind::True) {
          edge(entry, Pred::verum(), Rat(1), {}, exit);
        } else if (p->pred->kind == Pred::Kind::False) {
          edge(entry, Pred::verum(), Rat(1), {}, a.sink);
        } else {
          edge(entry, p->pred, Rat(1), {}, exit);
          edge(entry, Pred::neg(p->pred), Rat(1), {}, a.sink);
        }
        return;
      case Prog::Kind::Assign:
        edge(entry, Pred::verum(), Rat(1), {{p->field, p->value}}, exit);
        return;
      case Prog::Kind::Seq: {
        uint32_t mid = fresh();
        build(p->left, entry, mid);
        build(p->right, mid, exit);
        return;
      }
      case Prog::Kind::Choice: {
        for (const auto& b : p->branches) {
          uint32_t in = fresh();
          edge(entry, Pred::verum(), b.prob, {}, in);
          build(b.prog, in, exit);
        }
        return;
      }
      case Prog::Kind::If: {
        uint32_t t = fresh(), e = fresh();
        edge(entry, p->pred, Rat(1), {}, t);
        edge(entry, Pred::neg(p->pred), Rat(1), {}, e);
        build(p->left, t, exit);
        build(p->right, e, exit);
        return;
      }
      case Prog::Kind::While: {
        // entry is the loop head: guarded into the body, negated out.
        uint32_t body = fresh();
        edge(entry, p->pred, Rat(1), {}, body);
        edge(entry, Pred::neg(p->pred), Rat(1), {}, exit);
        build(p->left, body, entry);
        return;
      }
      case Prog::Kind::Case: {
        // Explicit else-guards keep the partition literal.
        PredPtr seen;
        for (const auto& c : p->cases) {
          PredPtr g = seen ? Pred::conj(Pred::neg(seen), c.guard) : c.guard;
          uint32_t in = fresh();
          edge(entry, g, Rat(1), {}, in);
          build(c.body, in, exit);
          seen = seen ? Pred::disj(seen, c.guard) : c.guard;
        }
        edge(entry, Pred::neg(seen), Rat(1), {}, a.sink);
        return;
      }
      case Prog::Kind::DoWhile:
      case Prog::Kind::VarIn:
        build(desugar(p), entry, exit);
        return;
      case Prog::Kind::Union:
      case Prog::Kind::Star:
        throw ValidationError(
            "union/star have no guarded-command translation");
    }
  }
};

}  // namespace

GuardedAutomaton to_automaton(const ProgPtr& core_prog) {
  Builder b;
  b.a.initial = b.fresh();
  b.a.halt = b.fresh();
  b.a.sink = b.fresh();
  b.build(desugar(core_prog), b.a.initial, b.a.halt);
  // Halt and drop are absorbing by convention and carry no commands.
  return std::move(b.a);
}

// --------------------------------------------------------------------------
// Basic-block collapsing
// --------------------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, Value>> fuse_updates(
    std::vector<std::pair<std::string, Value>> first,
    const std::vector<std::pair<std::string, Value>>& second) {
  for (const auto& [f, v] : second) {
    bool found = false;
    for (auto& u : first) {
      if (u.first == f) {
        u.second = v;  // later write wins
        found = true;
        break;
      }
    }
    if (!found) first.push_back({f, v});
  }
  return first;
}

GuardedAutomaton renumber(const GuardedAutomaton& a) {
  // Densely renumber the states reachable from the initial state, in BFS
  // order, keeping the initial state at pc 0.
  std::vector<uint32_t> id(a.states, UINT32_MAX);
  uint32_t next = 0;
  std::queue<uint32_t> work;
  id[a.initial] = next++;
  work.push(a.initial);
  std::vector<std::vector<const AutomatonEdge*>> out(a.states);
  for (const auto& e : a.edges) out[e.src].push_back(&e);
  while (!work.empty()) {
    uint32_t v = work.front();
    work.pop();
    for (const auto* e : out[v]) {
      if (id[e->dst] == UINT32_MAX) {
        id[e->dst] = next++;
        work.push(e->dst);
      }
    }
  }
  GuardedAutomaton r;
  r.states = next;
  r.initial = id[a.initial];
  // Halt or sink may be unreachable; give them fresh trailing ids so the
  // fields stay meaningful.
  if (id[a.halt] == UINT32_MAX) {
    r.halt = r.states++;
  } else {
    r.halt = id[a.halt];
  }
  if (id[a.sink] == UINT32_MAX) {
    r.sink = r.states++;
  } else {
    r.sink = id[a.sink];
  }
  for (const auto& e : a.edges) {
    if (id[e.src] == UINT32_MAX) continue;
    uint32_t dst = id[e.dst];
    if (dst == UINT32_MAX) throw InternalError("edge into unreachable state");
    r.edges.push_back({id[e.src], e.guard, e.prob, e.updates, dst});
  }
  return r;
}

}  // namespace

GuardedAutomaton collapse_blocks(const GuardedAutomaton& input) {
  GuardedAutomaton a = input;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::vector<uint32_t>> out(a.states);
    for (uint32_t i = 0; i < a.edges.size(); ++i)
      out[a.edges[i].src].push_back(i);
    for (uint32_t s = 0; s < a.states; ++s) {
      if (s == a.initial || s == a.halt || s == a.sink) continue;
      if (out[s].size() != 1) continue;
      const AutomatonEdge& e = a.edges[out[s][0]];
      if (e.guard->kind != Pred::Kind::True || e.prob != 1 || e.dst == s)
        continue;
      // Fold this block into every incoming edge.
      for (auto& in : a.edges) {
        if (in.dst != s) continue;
        in.dst = e.dst;
        in.updates = fuse_updates(in.updates, e.updates);
        changed = true;
      }
      // The block's own edge dies with it once unreachable.
    }
    if (changed) a = renumber(a);
  }
  return renumber(a);
}

// --------------------------------------------------------------------------
// Well-formedness
// --------------------------------------------------------------------------

namespace {

// Enumerates the value assignments a predicate distinguishes, over the
// per-field mentioned values plus one out-of-range representative.
void collect_fields(const PredPtr& p, std::map<std::string, std::set<Value>>& v) {
  switch (p->kind) {
    case Pred::Kind::Test:
      v[p->field].insert(p->value);
      return;
    case Pred::Kind::Neg:
      collect_fields(p->left, v);
      return;
    case Pred::Kind::And:
    case Pred::Kind::Or:
      collect_fields(p->left, v);
      collect_fields(p->right, v);
      return;
    default:
      return;
  }
}

bool holds(const PredPtr& p, const std::map<std::string, Value>& pk) {
  switch (p->kind) {
    case Pred::Kind::True:
      return true;
    case Pred::Kind::False:
      return false;
    case Pred::Kind::Test: {
      auto it = pk.find(p->field);
      return it != pk.end() && it->second == p->value;
    }
    case Pred::Kind::Neg:
      return !holds(p->left, pk);
    case Pred::Kind::And:
      return holds(p->left, pk) && holds(p->right, pk);
    case Pred::Kind::Or:
      return holds(p->left, pk) || holds(p->right, pk);
  }
  return false;
}

}  // namespace

void check_wellformed(const GuardedAutomaton& a) {
  for (uint32_t s = 0; s < a.states; ++s) {
    if (s == a.halt || s == a.sink) continue;  // absorbing by convention
    auto edges = a.out(s);
    if (edges.empty()) throw ValidationError("state without outgoing edges");
    // Build a small universe distinguishing the guards.
    std::map<std::string, std::set<Value>> mention;
    for (auto* e : edges) collect_fields(e->guard, mention);
    std::vector<std::pair<std::string, std::vector<Value>>> fields;
    for (auto& [f, vals] : mention) {
      std::vector<Value> vs(vals.begin(), vals.end());
      Value fresh = *vals.rbegin() + 1;
      vs.push_back(fresh);  // the "anything else" class
      fields.push_back({f, vs});
    }
    std::vector<std::size_t> digit(fields.size(), 0);
    while (true) {
      std::map<std::string, Value> pk;
      for (std::size_t i = 0; i < fields.size(); ++i)
        pk[fields[i].first] = fields[i].second[digit[i]];
      // Exactly one guard class must hold, with probability mass one.
      Rat mass(0);
      std::set<std::size_t> held;
      for (std::size_t ei = 0; ei < edges.size(); ++ei) {
        if (holds(edges[ei]->guard, pk)) {
          held.insert(ei);
          mass += edges[ei]->prob;
        }
      }
      if (held.empty())
        throw ValidationError("guards do not cover the packet space");
      if (mass != 1)
        throw ValidationError("edge probabilities under a guard sum to " +
                              rat_to_string(mass));
      // Any two held guards must be the same predicate (one class).
      for (std::size_t i : held)
        for (std::size_t j : held)
          if (!pred_equal(edges[i]->guard, edges[j]->guard))
            throw ValidationError("overlapping distinct guards");
      std::size_t i = fields.size();
      bool done = fields.empty();
      while (i > 0) {
        --i;
        if (++digit[i] < fields[i].second.size()) break;
        digit[i] = 0;
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }
}

// --------------------------------------------------------------------------
// Emission
// --------------------------------------------------------------------------

namespace {

void pred_text(const PredPtr& p, std::ostream& os, int min_level) {
  int level;
  switch (p->kind) {
    case Pred::Kind::Or:
      level = 0;
      break;
    case Pred::Kind::And:
      level = 1;
      break;
    default:
      level = 2;
      break;
  }
  bool paren = level < min_level;
  if (paren) os << "(";
  switch (p->kind) {
    case Pred::Kind::True:
      os << "true";
      break;
    case Pred::Kind::False:
      os << "false";
      break;
    case Pred::Kind::Test:
      os << p->field << "=" << p->value;
      break;
    case Pred::Kind::Or:
      pred_text(p->left, os, 0);
      os << " | ";
      pred_text(p->right, os, 1);
      break;
    case Pred::Kind::And:
      pred_text(p->left, os, 1);
      os << " & ";
      pred_text(p->right, os, 2);
      break;
    case Pred::Kind::Neg:
      os << "!";
      pred_text(p->left, os, 2);
      break;
  }
  if (paren) os << ")";
}

void collect_prog_fields(const GuardedAutomaton& a,
                         std::map<std::string, Value>& maxval) {
  std::map<std::string, std::set<Value>> mention;
  for (const auto& e : a.edges) {
    collect_fields(e.guard, mention);
    for (auto& [f, v] : e.updates) mention[f].insert(v);
  }
  for (auto& [f, vals] : mention) {
    Value m = vals.empty() ? 0 : *vals.rbegin();
    auto it = maxval.find(f);
    if (it == maxval.end() || it->second < m) maxval[f] = m;
  }
}

}  // namespace

std::string emit_text(const GuardedAutomaton& a,
                      const std::map<std::string, Value>& ranges,
                      const std::optional<std::string>& reachability_query) {
  std::map<std::string, Value> maxval;
  for (auto& [f, v] : ranges) maxval[f] = v;
  collect_prog_fields(a, maxval);
  for (auto& [f, v] : ranges) {
    if (maxval[f] > v)
      throw ValidationError("declared range for " + f + " is too small");
    maxval[f] = v;
  }
  std::ostringstream os;
  os << "dtmc\n\nmodule program\n";
  os << "  pc : [0.." << (a.states - 1) << "] init " << a.initial << ";\n";
  for (auto& [f, v] : maxval)
    os << "  " << f << " : [0.." << v << "] init 0;\n";
  os << "\n";
  // One command per (state, guard), states ascending, guards in edge order.
  for (uint32_t s = 0; s < a.states; ++s) {
    std::vector<const AutomatonEdge*> edges = a.out(s);
    std::vector<const AutomatonEdge*> pending = edges;
    while (!pending.empty()) {
      PredPtr guard = pending.front()->guard;
      std::vector<const AutomatonEdge*> group;
      std::vector<const AutomatonEdge*> rest;
      for (auto* e : pending) {
        (pred_equal(e->guard, guard) ? group : rest).push_back(e);
      }
      pending = std::move(rest);
      os << "  [] (pc=" << s;
      if (guard->kind != Pred::Kind::True) {
        os << " & ";
        pred_text(guard, os, 1);
      }
      os << ") -> ";
      for (std::size_t i = 0; i < group.size(); ++i) {
        if (i) os << " + ";
        os << rat_to_string(group[i]->prob) << ":";
        for (auto& [f, v] : group[i]->updates)
          os << "(" << f << "'=" << v << ")&";
        os << "(pc'=" << group[i]->dst << ")";
      }
      os << ";\n";
    }
  }
  os << "endmodule\n";
  if (reachability_query) {
    os << "\n// P=? [ F pc=" << a.halt << " & " << *reachability_query
       << " ]\n";
  }
  return os.str();
}

// --------------------------------------------------------------------------
// Simulation
// --------------------------------------------------------------------------

PacketDist simulate_automaton(FddManager& man, const GuardedAutomaton& a,
                              const Packet& pk, uint64_t state_cap) {
  check_wellformed(a);
  // Explicit chain over (pc, packet), restricted to the reachable part.
  using State = std::pair<uint32_t, Packet>;
  std::map<State, uint32_t> index;
  std::vector<State> states;
  std::vector<std::vector<std::pair<uint32_t, Rat>>> step;
  auto holds_pk = [&](const PredPtr& p, const Packet& q) {
    std::map<std::string, Value> env;
    for (auto& [f, v] : q.entries) env[man.fields().name(f)] = v;
    return holds(p, env);
  };
  auto intern = [&](uint32_t pc, const Packet& q) {
    auto key = std::make_pair(pc, q);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    if (states.size() >= state_cap)
      throw ResourceError("automaton simulation exceeds the state cap");
    uint32_t id = static_cast<uint32_t>(states.size());
    index.emplace(key, id);
    states.push_back(key);
    return id;
  };
  std::queue<uint32_t> work;
  work.push(intern(a.initial, pk));
  std::vector<std::vector<const AutomatonEdge*>> out(a.states);
  for (const auto& e : a.edges) out[e.src].push_back(&e);
  while (!work.empty()) {
    uint32_t s = work.front();
    work.pop();
    if (s >= step.size()) step.resize(s + 1);
    auto [pc, q] = states[s];
    if (pc == a.halt || pc == a.sink) {
      step[s].push_back({s, Rat(1)});
      continue;
    }
    for (const auto* e : out[pc]) {
      if (!holds_pk(e->guard, q)) continue;
      Packet q2 = q;
      for (auto& [f, v] : e->updates) q2.set(man.fields().intern(f), v);
      std::size_t before = states.size();
      uint32_t t = intern(e->dst, q2);
      step[s].push_back({t, e->prob});
      if (states.size() != before) work.push(t);
    }
  }
  step.resize(states.size());
  // A virtual divergence state soaks up trapped cycles (a spinning loop
  // never halts, which the packet semantics reads as drop).
  const uint32_t diverge = static_cast<uint32_t>(states.size());
  SparseMatrix<Rat> m;
  m.rows = m.cols = diverge + 1;
  m.row.resize(m.rows);
  for (uint32_t s = 0; s < diverge; ++s) {
    std::map<uint32_t, Rat> acc;
    for (auto& [t, p] : step[s]) acc[t] += p;
    for (auto& [t, p] : acc) m.row[s].push_back({t, p});
  }
  m.row[diverge].push_back({diverge, Rat(1)});
  AbsorbingSystem<Rat> sys = partition_absorbing(m);
  uint32_t start = index.at({a.initial, pk});
  std::map<uint32_t, Rat> absorbed;
  bool start_absorbing = false;
  for (uint32_t abs : sys.absorbing)
    if (abs == start) {
      absorbed[start] = Rat(1);
      start_absorbing = true;
    }
  if (!start_absorbing) {
    uint32_t empty_pos = 0;
    for (std::size_t i = 0; i < sys.absorbing.size(); ++i)
      if (sys.absorbing[i] == diverge) empty_pos = static_cast<uint32_t>(i);
    SparseMatrix<Rat> A = absorbing_limit<Rat>(sys, empty_pos);
    uint32_t tpos = 0;
    for (std::size_t i = 0; i < sys.transient.size(); ++i)
      if (sys.transient[i] == start) tpos = static_cast<uint32_t>(i);
    for (auto& [c, w] : A.row[tpos]) absorbed[sys.absorbing[c]] += w;
  }
  PacketDist outd;
  for (auto& [s, w] : absorbed) {
    if (s >= diverge) {
      outd.drop = outd.drop + Prob(w);
      continue;
    }
    auto [pc, q] = states[s];
    if (pc == a.halt) {
      auto [it, fresh] = outd.mass.try_emplace(q, Prob(w));
      if (!fresh) it->second = it->second + Prob(w);
    } else {
      // Sink, or an absorbing non-halt cycle: both read as drop.
      outd.drop = outd.drop + Prob(w);
    }
  }
  return outd;
}

}  // namespace pnk
