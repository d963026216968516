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

#include "pnk/error.hpp"
#include "pnk/parser.hpp"
#include "pnk/syntax.hpp"
#include "testutil.hpp"

using namespace pnk;

TEST_CASE("drop parses to the false filter") {
  ProgPtr p = parse_program("drop");
  CHECK(p->kind == Prog::Kind::Filter);
  CHECK(p->pred->kind == Pred::Kind::False);
}

TEST_CASE("the coin-router program parses to the expected AST") {
  ProgPtr p = parse_program(
      "if pt=1 then { pt:=2 +[1/2] pt:=3 } else { if pt=2 then { pt:=1 } "
      "else { if pt=3 then { pt:=1 } else { drop } } }");
  CHECK(prog_equal(p, testutil::coin_router()));
}

TEST_CASE("choice probabilities must sum to one") {
  CHECK_THROWS_WITH_AS(
      parse_program("choice { 1/3 -> skip, 1/3 -> skip }"),
      doctest::Contains("sum to 2/3"), ParseError);
}

TEST_CASE("decimal probabilities become exact rationals") {
  ProgPtr p = parse_program("f:=1 +[0.8] f:=0");
  REQUIRE(p->kind == Prog::Kind::Choice);
  CHECK(p->branches[0].prob == make_rat(4, 5));
  CHECK(p->branches[1].prob == make_rat(1, 5));
}

TEST_CASE("unweighted choice is uniform") {
  ProgPtr p = parse_program("choice { f:=0, f:=1, f:=2 }");
  REQUIRE(p->kind == Prog::Kind::Choice);
  REQUIRE(p->branches.size() == 3);
  for (const auto& b : p->branches) CHECK(b.prob == make_rat(1, 3));
}

TEST_CASE("sequence binds tighter than probabilistic choice") {
  ProgPtr p = parse_program("f:=1; f:=2 +[1/2] f:=3");
  REQUIRE(p->kind == Prog::Kind::Choice);
  CHECK(p->branches[0].prog->kind == Prog::Kind::Seq);
}

TEST_CASE("case separators and trailing bars") {
  ProgPtr a = parse_program("case { sw=1 -> pt:=2 | sw=2 -> drop | }");
  ProgPtr b = parse_program("case { sw=1 -> pt:=2 | sw=2 -> drop }");
  CHECK(prog_equal(a, b));
  REQUIRE(a->kind == Prog::Kind::Case);
  CHECK(a->cases.size() == 2);
}

TEST_CASE("compound predicate filters parse in program position") {
  ProgPtr p = parse_program("(sw=1 & pt=1); sw:=2");
  REQUIRE(p->kind == Prog::Kind::Seq);
  CHECK(p->left->kind == Prog::Kind::Filter);
  CHECK(p->left->pred->kind == Pred::Kind::And);
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_program("if pt=1 then { skip }");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("else") != std::string::npos);
  }
}

TEST_CASE("range headers are accepted and recorded") {
  ParsedModule m = parse_module("range pt = 0..7;\nrange sw = 0..3;\nskip");
  CHECK(m.ranges.at("pt") == 7);
  CHECK(m.ranges.at("sw") == 3);
  CHECK(prog_equal(m.program, Prog::skip()));
}

TEST_CASE("var desugars to assign-body-erase") {
  ProgPtr p = parse_program("var up2:=1 in { skip }");
  ProgPtr d = desugar(p);
  ProgPtr expect = Prog::seq(
      Prog::assign("up2", 1), Prog::seq(Prog::skip(), Prog::assign("up2", 0)));
  CHECK(prog_equal(d, expect));
}

TEST_CASE("do-while desugars to one unrolling") {
  ProgPtr p = parse_program("do { f:=1 } while !sw=1");
  ProgPtr d = desugar(p);
  REQUIRE(d->kind == Prog::Kind::Seq);
  CHECK(d->left->kind == Prog::Kind::Assign);
  CHECK(d->right->kind == Prog::Kind::While);
}

TEST_CASE("if is already core") {
  ProgPtr p = parse_program("if f=1 then { skip } else { drop }");
  CHECK(prog_equal(desugar(p), p));
}

TEST_CASE("desugar is idempotent on random programs") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    testutil::ProgGen gen(seed, {"f", "g"}, {0, 1});
    ProgPtr p = gen.prog(4);
    ProgPtr once = desugar(p);
    CHECK(prog_equal(desugar(once), once));
  }
}

TEST_CASE("pretty-print then parse is the identity on random programs") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    testutil::ProgGen gen(seed, {"f", "g"}, {0, 1});
    ProgPtr p = gen.prog(4);
    std::string text = to_string(p);
    CAPTURE(text);
    ProgPtr q = parse_program(text);
    CHECK(prog_equal(p, q));
  }
}

TEST_CASE("round-trip covers the sugared constructs") {
  for (const char* text :
       {"var up2:=1 in { do { f:=1 } while !sw=1 }",
        "case { sw=1 -> pt:=2 | sw=2 -> pt:=1 }",
        "choice { 1/3 -> f:=0, 1/3 -> f:=1, 1/3 -> f:=2, }",
        "while (f=1 | g=2) do { g:=1 +[3/4] skip }"}) {
    ProgPtr p = parse_program(text);
    CHECK(prog_equal(parse_program(to_string(p)), p));
  }
}
