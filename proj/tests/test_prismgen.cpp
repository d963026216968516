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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pnk/compile.hpp"
#include "pnk/parser.hpp"
#include "pnk/prismgen.hpp"
#include "testutil.hpp"

using namespace pnk;

namespace {

// Compares the simulated automaton against the compiled diagram on every
// class of the diagram's domain.
void check_translation(FddManager& man, const ProgPtr& p,
                       const GuardedAutomaton& a) {
  Fdd f = compile(man, p);
  Domain dom = infer_domain(man, f);
  // Also include fields the automaton mentions but the diagram optimized
  // away, so packets are total for both.
  for (const auto& e : a.edges)
    for (auto& [fld, v] : e.updates) dom.add(man.fields().intern(fld), v);
  StateSpace space(man, dom, 1 << 20);
  for (uint64_t idx = 1; idx < space.count(); ++idx) {
    Packet pk = space.representative(space.decode(idx));
    PacketDist want = man.eval(f, pk);
    PacketDist got = simulate_automaton(man, a, pk);
    REQUIRE(want.drop.value == got.drop.value);
    REQUIRE(want.mass.size() == got.mass.size());
    for (auto& [out, w] : want.mass) {
      REQUIRE(got.mass.count(out));
      CHECK(got.mass.at(out).value == w.value);
    }
  }
}

}  // namespace

TEST_CASE("skip is one true edge into halt") {
  GuardedAutomaton a = to_automaton(Prog::skip());
  check_wellformed(a);
  auto out = a.out(a.initial);
  REQUIRE(out.size() == 1);
  CHECK(out[0]->guard->kind == Pred::Kind::True);
  CHECK(out[0]->prob == 1);
  CHECK(out[0]->updates.empty());
  CHECK(out[0]->dst == a.halt);
}

TEST_CASE("a fair coin is one state with two half edges") {
  GuardedAutomaton a =
      collapse_blocks(to_automaton(parse_program("f:=0 +[1/2] f:=1")));
  check_wellformed(a);
  auto out = a.out(a.initial);
  REQUIRE(out.size() == 2);
  CHECK(out[0]->prob == make_rat(1, 2));
  CHECK(out[1]->prob == make_rat(1, 2));
  CHECK(out[0]->dst == a.halt);
  CHECK(out[1]->dst == a.halt);
}

TEST_CASE("loops keep a guarded head with a negated exit") {
  GuardedAutomaton a = to_automaton(parse_program("while f=0 do { f:=1 }"));
  check_wellformed(a);
  auto out = a.out(a.initial);
  REQUIRE(out.size() == 2);
  bool has_guard = false, has_exit = false;
  for (auto* e : out) {
    has_guard |= e->guard->kind == Pred::Kind::Test;
    has_exit |= e->guard->kind == Pred::Kind::Neg && e->dst == a.halt;
  }
  CHECK(has_guard);
  CHECK(has_exit);
}

TEST_CASE("straight-line sequences collapse to two states") {
  GuardedAutomaton a =
      collapse_blocks(to_automaton(parse_program("skip; skip; skip")));
  check_wellformed(a);
  // initial and halt, plus the (unreachable, renumbered) sink.
  auto out = a.out(a.initial);
  REQUIRE(out.size() == 1);
  CHECK(out[0]->dst == a.halt);
  CHECK(a.states <= 3);
}

TEST_CASE("collapsing fuses updates with later writes winning") {
  GuardedAutomaton a =
      collapse_blocks(to_automaton(parse_program("f:=1; g:=2; f:=3")));
  auto out = a.out(a.initial);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0]->updates.size() == 2);
  CHECK(out[0]->updates[0] == std::pair<std::string, Value>{"f", 3});
  CHECK(out[0]->updates[1] == std::pair<std::string, Value>{"g", 2});
}

TEST_CASE("collapsing is idempotent") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    testutil::ProgGen gen(seed, {"f", "g"}, {0, 1}, 1);
    GuardedAutomaton once = collapse_blocks(to_automaton(gen.prog(3)));
    GuardedAutomaton twice = collapse_blocks(once);
    CHECK(once.states == twice.states);
    CHECK(once.edges.size() == twice.edges.size());
  }
}

TEST_CASE("the three-branch conditional keeps one state per arm") {
  GuardedAutomaton a =
      collapse_blocks(to_automaton(testutil::coin_router()));
  check_wellformed(a);
  // One pc value per conditional arm (the coin and the two inner
  // conditionals), plus initial, halt, and drop.
  CHECK(a.states == 6);
}

TEST_CASE("emitted text has the documented shape") {
  GuardedAutomaton a = collapse_blocks(to_automaton(Prog::skip()));
  CHECK(emit_text(a) ==
        "dtmc\n\nmodule program\n"
        "  pc : [0..2] init 0;\n\n"
        "  [] (pc=0) -> 1:(pc'=1);\n"
        "endmodule\n");

  GuardedAutomaton coin =
      collapse_blocks(to_automaton(parse_program("f:=0 +[1/2] f:=1")));
  std::string text = emit_text(coin);
  CHECK(text.find("f : [0..1] init 0;") != std::string::npos);
  CHECK(text.find("1/2:(f'=0)&(pc'=") != std::string::npos);
  CHECK(text.find(" + 1/2:(f'=1)&(pc'=") != std::string::npos);

  // Declared ranges pin the bounds.
  std::string wide = emit_text(coin, {{"f", 7}});
  CHECK(wide.find("f : [0..7] init 0;") != std::string::npos);
  CHECK_THROWS_AS(emit_text(coin, {{"f", 0}}), ValidationError);

  std::string with_query = emit_text(coin, {}, std::string("f=1"));
  CHECK(with_query.find("P=? [ F pc=") != std::string::npos);
}

TEST_CASE("simulation matches compilation on the coin router") {
  FddManager man;
  ProgPtr p = testutil::coin_router();
  GuardedAutomaton a = collapse_blocks(to_automaton(p));
  check_translation(man, p, a);
}

TEST_CASE("simulation matches compilation on a geometric loop") {
  FddManager man;
  ProgPtr p = parse_program("while f=0 do { f:=0 +[1/2] f:=1 }");
  GuardedAutomaton a = collapse_blocks(to_automaton(p));
  check_translation(man, p, a);
}

TEST_CASE("translation is sound on random programs, before and after collapse") {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed, {"f", "g"}, {0, 1}, 2);
    ProgPtr p = gen.prog(3);
    GuardedAutomaton raw = to_automaton(p);
    check_wellformed(raw);
    GuardedAutomaton small = collapse_blocks(raw);
    check_wellformed(small);
    CHECK(small.states <= raw.states);
    check_translation(man, p, small);
  }
}

TEST_CASE("the automaton is linear in the program size") {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    testutil::ProgGen gen(seed + 101, {"f", "g"}, {0, 1}, 2);
    ProgPtr p = gen.prog(4);
    GuardedAutomaton a = to_automaton(p);
    CHECK(a.states <= 4u * static_cast<uint32_t>(ast_size(desugar(p))));
  }
}
