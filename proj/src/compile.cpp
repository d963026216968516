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

#include "pnk/compile.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>
#include <unordered_map>

#include "pnk/error.hpp"

namespace pnk {

namespace {
std::atomic<uint64_t> g_loop_solves{0}, g_solve_ns{0}, g_solved_states{0};
}  // namespace

CompileStats compile_stats() {
  return {g_loop_solves.load(), g_solve_ns.load(), g_solved_states.load()};
}

void reset_compile_stats() {
  g_loop_solves = 0;
  g_solve_ns = 0;
  g_solved_states = 0;
}

namespace {

// Walks the diagram along a symbolic class: concrete digits decide tests,
// wildcards fall to the false branch (mentioned values never match them).
Fdd walk_class(const FddManager& man, Fdd f, const StateSpace& space,
               const SymPacket& cls,
               const std::unordered_map<FieldId, std::size_t>& pos) {
  while (!man.is_leaf(f)) {
    FieldId fld = man.top_field(f);
    Value v = man.top_value(f);
    auto it = pos.find(fld);
    if (it == pos.end())
      throw InternalError("diagram tests a field outside the state space");
    std::size_t i = it->second;
    uint32_t digit = cls.digits[i];
    bool match = !space.wildcard_digit(i, digit) &&
                 space.values()[i][digit] == v;
    f = match ? man.hi(f) : man.lo(f);
  }
  return f;
}

std::unordered_map<FieldId, std::size_t> field_positions(
    const StateSpace& space) {
  std::unordered_map<FieldId, std::size_t> pos;
  for (std::size_t i = 0; i < space.fields().size(); ++i)
    pos.emplace(space.fields()[i], i);
  return pos;
}

}  // namespace

std::vector<std::pair<uint64_t, Prob>> eval_class(const FddManager& man,
                                                  Fdd f,
                                                  const StateSpace& space,
                                                  const SymPacket& cls) {
  auto pos = field_positions(space);
  Fdd leaf = walk_class(man, f, space, cls, pos);
  std::vector<std::pair<uint64_t, Prob>> row;
  for (const auto& e : man.dist_entries(man.leaf_dist(leaf))) {
    if (e.action == kActionDrop) {
      row.push_back({StateSpace::kEmpty, e.prob});
      continue;
    }
    SymPacket target = cls;
    if (e.action != kActionIdentity) {
      for (auto& [fld, val] : man.action_writes(e.action)) {
        auto it = pos.find(fld);
        if (it == pos.end())
          throw InternalError("action writes a field outside the state space");
        std::size_t i = it->second;
        const auto& vs = space.values()[i];
        auto vit = std::lower_bound(vs.begin(), vs.end(), val);
        if (vit == vs.end() || *vit != val)
          throw InternalError("action writes an unmentioned value");
        target.digits[i] = static_cast<uint32_t>(vit - vs.begin());
      }
    }
    row.push_back({space.index(target), e.prob});
  }
  std::sort(row.begin(), row.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Merge duplicate targets (distinct actions can coincide on a class).
  std::vector<std::pair<uint64_t, Prob>> out;
  for (auto& e : row) {
    if (!out.empty() && out.back().first == e.first) {
      out.back().second = out.back().second + e.second;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

bool class_accepts(const FddManager& man, Fdd cond, const StateSpace& space,
                   const SymPacket& cls) {
  auto pos = field_positions(space);
  Fdd leaf = walk_class(man, cond, space, cls, pos);
  if (leaf == man.skip_fdd()) return true;
  if (leaf == man.drop_fdd()) return false;
  throw ValidationError("class_accepts on a non-0/1 diagram");
}

MatrixResult fdd_to_matrix(const FddManager& man, Fdd f, uint64_t state_cap) {
  StateSpace space(man, infer_domain(man, f), state_cap);
  SparseMatrix<Rat> m = fdd_to_matrix_over(man, f, space);
  return {std::move(space), std::move(m), man.exact(f)};
}

SparseMatrix<Rat> fdd_to_matrix_over(const FddManager& man, Fdd f,
                                     const StateSpace& space) {
  const uint64_t n = space.count();
  if (n > UINT32_MAX) throw ResourceError("state space too large for matrix");
  SparseMatrix<Rat> m;
  m.rows = m.cols = static_cast<uint32_t>(n);
  m.row.resize(n);
  m.row[StateSpace::kEmpty].push_back({StateSpace::kEmpty, Rat(1)});
  for (uint64_t s = 1; s < n; ++s) {
    for (auto& [t, p] : eval_class(man, f, space, space.decode(s)))
      m.row[s].push_back({static_cast<uint32_t>(t), p.value});
  }
  return m;
}

namespace {

// Recursive construction over fields in test order; the per-class rows are
// rendered as leaves at the bottom of the value-chain skeleton.
struct MatrixToFdd {
  FddManager& man;
  const StateSpace& space;
  const SparseMatrix<Rat>& m;
  bool exact;
  SymPacket digits;

  Fdd build(std::size_t field_pos) {
    if (field_pos == space.fields().size()) return render_leaf();
    const auto& vs = space.values()[field_pos];
    digits.digits[field_pos] = static_cast<uint32_t>(vs.size());  // wildcard
    Fdd acc = build(field_pos + 1);
    for (std::size_t vi = vs.size(); vi-- > 0;) {
      digits.digits[field_pos] = static_cast<uint32_t>(vi);
      Fdd hi = build(field_pos + 1);
      acc = man.branch(space.fields()[field_pos], vs[vi], hi, acc);
    }
    return acc;
  }

  Fdd render_leaf() {
    uint64_t s = space.index(digits);
    std::vector<DistEntry> entries;
    for (const auto& [t, w] : m.row[s]) {
      Prob p(w, exact);
      if (t == StateSpace::kEmpty) {
        entries.push_back({kActionDrop, p});
        continue;
      }
      SymPacket target = space.decode(t);
      std::vector<std::pair<FieldId, Value>> writes;
      for (std::size_t i = 0; i < space.fields().size(); ++i) {
        if (space.wildcard_digit(i, target.digits[i])) {
          if (target.digits[i] != digits.digits[i])
            throw ValidationError(
                "row assigns mass to a foreign wildcard class");
          continue;  // identity on the wildcard class
        }
        writes.push_back(
            {space.fields()[i], space.values()[i][target.digits[i]]});
      }
      entries.push_back({man.action_mods(std::move(writes)), p});
    }
    if (entries.empty())
      throw ValidationError("matrix row with no mass");
    return man.leaf(man.make_dist(std::move(entries)));
  }
};

}  // namespace

Fdd matrix_to_fdd(FddManager& man, const StateSpace& space,
                  const SparseMatrix<Rat>& m, bool exact) {
  if (m.rows != space.count())
    throw ValidationError("matrix dimensions do not match the state space");
  MatrixToFdd builder{man, space, m, exact, {}};
  builder.digits.digits.resize(space.fields().size());
  return builder.build(0);
}

Fdd compile_while(FddManager& man, Fdd guard, Fdd body,
                  const CompileConfig& cfg) {
  if (!man.zero_one(guard))
    throw ValidationError("loop guard is not a 0/1 diagram");
  const std::vector<uint64_t> memo_key{
      0x100ful, guard.id, body.id,
      cfg.mode == SolverMode::Exact ? 1ul : 0ul, cfg.state_cap};
  if (auto hit = man.aux_find(memo_key)) return Fdd{*hit};
  auto solve_start = std::chrono::steady_clock::now();
  Domain dom = infer_domain(man, guard);
  dom.merge(infer_domain(man, body));
  StateSpace space(man, dom, cfg.state_cap);
  const uint64_t n = space.count();
  if (n > UINT32_MAX) throw ResourceError("loop state space too large");

  // Absorbing set is known by construction: drop plus the guard-false
  // classes. Guard-true classes step by the body even if that step is the
  // identity, so self-looping guard states stay transient (and are trapped
  // unless they can leave).
  std::vector<bool> absorbing(n, false);
  absorbing[StateSpace::kEmpty] = true;
  std::vector<std::vector<std::pair<uint64_t, Prob>>> rows(n);
  bool exact_rows = true;
  for (uint64_t s = 1; s < n; ++s) {
    SymPacket cls = space.decode(s);
    if (class_accepts(man, guard, space, cls)) {
      rows[s] = eval_class(man, body, space, cls);
      for (auto& [t, p] : rows[s]) exact_rows = exact_rows && p.exact;
    } else {
      absorbing[s] = true;
    }
  }

  AbsorbingSystem<Rat> sys;
  std::vector<uint32_t> abs_pos(n), trans_pos(n);
  for (uint64_t s = 0; s < n; ++s) {
    if (absorbing[s]) {
      abs_pos[s] = static_cast<uint32_t>(sys.absorbing.size());
      sys.absorbing.push_back(static_cast<uint32_t>(s));
    } else {
      trans_pos[s] = static_cast<uint32_t>(sys.transient.size());
      sys.transient.push_back(static_cast<uint32_t>(s));
    }
  }
  sys.Q.rows = sys.Q.cols = static_cast<uint32_t>(sys.transient.size());
  sys.Q.row.resize(sys.Q.rows);
  sys.R.rows = sys.Q.rows;
  sys.R.cols = static_cast<uint32_t>(sys.absorbing.size());
  sys.R.row.resize(sys.R.rows);
  for (uint32_t i = 0; i < sys.Q.rows; ++i) {
    for (auto& [t, p] : rows[sys.transient[i]]) {
      if (absorbing[t]) {
        sys.R.row[i].push_back({abs_pos[t], p.value});
      } else {
        sys.Q.row[i].push_back({trans_pos[t], p.value});
      }
    }
  }

  const uint32_t empty_abs = abs_pos[StateSpace::kEmpty];
  SparseMatrix<Rat> full;
  full.rows = full.cols = static_cast<uint32_t>(n);
  full.row.resize(n);
  bool exact_result;
  if (cfg.mode == SolverMode::Exact) {
    if (!exact_rows)
      throw ValidationError("exact mode with inexact loop body");
    SparseMatrix<Rat> A = absorbing_limit(sys, empty_abs);
    for (uint32_t i = 0; i < sys.Q.rows; ++i)
      for (auto& [c, w] : A.row[i])
        full.row[sys.transient[i]].push_back({sys.absorbing[c], w});
    exact_result = true;
  } else {
    AbsorbingSystem<double> fsys;
    fsys.absorbing = sys.absorbing;
    fsys.transient = sys.transient;
    fsys.Q = to_float(sys.Q);
    fsys.R = to_float(sys.R);
    SparseMatrix<double> A = absorbing_limit(fsys, empty_abs);
    for (uint32_t i = 0; i < sys.Q.rows; ++i) {
      for (auto& [c, w] : A.row[i]) {
        if (w <= 0) continue;  // numerical dust
        full.row[sys.transient[i]].push_back(
            {sys.absorbing[c], rat_from_double(w)});
      }
    }
    exact_result = false;
  }
  for (uint32_t s : sys.absorbing) full.row[s].push_back({s, Rat(1)});
  for (auto& row : full.row)
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  g_loop_solves.fetch_add(1);
  g_solved_states.fetch_add(n);
  g_solve_ns.fetch_add(std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - solve_start)
                           .count());
  Fdd out = matrix_to_fdd(man, space, full, exact_result);
  man.aux_put(memo_key, out.id);
  return out;
}

namespace {

Fdd compile_rec(FddManager& man, const ProgPtr& p, const CompileConfig& cfg,
                int case_depth);

Fdd fold_cases(FddManager& man, const std::vector<CaseBranch>& cases,
               const std::vector<Fdd>& guards, const std::vector<Fdd>& bodies) {
  // Disjointness: the conjunction of any two guards must be empty.
  for (std::size_t i = 0; i < guards.size(); ++i) {
    for (std::size_t j = i + 1; j < guards.size(); ++j) {
      if (man.ite(guards[i], guards[j], man.drop_fdd()) != man.drop_fdd())
        throw ValidationError(
            "overlapping case guards: branch " + std::to_string(i + 1) +
            " (" + to_string(cases[i].guard) + ") and branch " +
            std::to_string(j + 1) + " (" + to_string(cases[j].guard) + ")");
    }
  }
  Fdd acc = man.drop_fdd();  // uncovered inputs drop
  for (std::size_t i = guards.size(); i-- > 0;)
    acc = man.ite(guards[i], bodies[i], acc);
  return acc;
}

Fdd compile_case_impl(FddManager& man, const std::vector<CaseBranch>& cases,
                      const CompileConfig& cfg, int case_depth) {
  std::vector<Fdd> guards(cases.size()), bodies(cases.size());
  int jobs = std::max(1, cfg.jobs);
  if (case_depth > 0 || jobs == 1 || cases.size() == 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      guards[i] = man.of_pred(cases[i].guard);
      bodies[i] = compile_rec(man, cases[i].body, cfg, case_depth + 1);
    }
  } else {
    // One worker pool per top-level case; branches are strided across
    // workers and combined afterwards in branch order.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (std::size_t i = w; i < cases.size(); i += jobs) {
            guards[i] = man.of_pred(cases[i].guard);
            bodies[i] = compile_rec(man, cases[i].body, cfg, case_depth + 1);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return fold_cases(man, cases, guards, bodies);
}

Fdd compile_rec(FddManager& man, const ProgPtr& p, const CompileConfig& cfg,
                int case_depth) {
  switch (p->kind) {
    case Prog::Kind::Filter:
      return man.of_pred(p->pred);
    case Prog::Kind::Assign: {
      ActionId a = man.action_mods({{man.fields().intern(p->field), p->value}});
      return man.leaf(man.make_dist({{a, Prob(Rat(1))}}));
    }
    case Prog::Kind::Seq: {
      Fdd f = compile_rec(man, p->left, cfg, case_depth);
      Fdd g = compile_rec(man, p->right, cfg, case_depth);
      return man.seq(f, g);
    }
    case Prog::Kind::Choice: {
      std::vector<std::pair<Prob, Fdd>> parts;
      for (const auto& b : p->branches)
        parts.push_back(
            {Prob(b.prob), compile_rec(man, b.prog, cfg, case_depth)});
      return man.mix(parts);
    }
    case Prog::Kind::If:
      return man.ite(man.of_pred(p->pred),
                     compile_rec(man, p->left, cfg, case_depth),
                     compile_rec(man, p->right, cfg, case_depth));
    case Prog::Kind::While:
      return compile_while(man, man.of_pred(p->pred),
                           compile_rec(man, p->left, cfg, case_depth), cfg);
    case Prog::Kind::Case:
      return compile_case_impl(man, p->cases, cfg, case_depth);
    case Prog::Kind::DoWhile:
    case Prog::Kind::VarIn:
      throw InternalError("compile of non-desugared program");
    case Prog::Kind::Union:
    case Prog::Kind::Star:
      throw ValidationError(
          "union/star are outside the guarded fragment; use the reference "
          "semantics");
  }
  throw InternalError("compile: unhandled node");
}

}  // namespace

Fdd compile(FddManager& man, const ProgPtr& p, const CompileConfig& cfg) {
  return compile_rec(man, desugar(p), cfg, 0);
}

Fdd compile_case(FddManager& man, const std::vector<CaseBranch>& cases,
                 const CompileConfig& cfg) {
  std::vector<CaseBranch> ds;
  for (const auto& c : cases) ds.push_back({c.guard, desugar(c.body)});
  return compile_case_impl(man, ds, cfg, 0);
}

}  // namespace pnk
