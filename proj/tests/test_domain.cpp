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

#include <random>

#include "pnk/compile.hpp"
#include "pnk/domain.hpp"
#include "pnk/error.hpp"
#include "testutil.hpp"

using namespace pnk;

TEST_CASE("the coin router mentions exactly pt in {1,2,3}") {
  FddManager man;
  Fdd f = compile(man, testutil::coin_router());
  Domain d = infer_domain(man, f);
  REQUIRE(d.values.size() == 1);
  CHECK(d.values.at(man.fields().intern("pt")) ==
        std::vector<Value>{1, 2, 3});
}

TEST_CASE("skip has an empty domain") {
  FddManager man;
  CHECK(infer_domain(man, man.skip_fdd()).values.empty());
}

TEST_CASE("tests and modifications both contribute values") {
  FddManager man;
  Fdd f = compile(man, Prog::seq(Prog::filter(Pred::test("f", 1)),
                                 Prog::assign("f", 5)));
  Domain d = infer_domain(man, f);
  CHECK(d.values.at(man.fields().intern("f")) == std::vector<Value>{1, 5});
}

TEST_CASE("state counts follow the product formula") {
  FddManager man;
  Fdd router = compile(man, testutil::coin_router());
  StateSpace s1(man, infer_domain(man, router), 1 << 20);
  CHECK(s1.count() == 5);  // empty, pt=1, pt=2, pt=3, pt=*

  Domain empty_domain;
  empty_domain.values[man.fields().intern("f")] = {};
  StateSpace s2(man, empty_domain, 1 << 20);
  CHECK(s2.count() == 2);  // empty, f=*

  Domain two;
  two.add(man.fields().intern("f"), 0);
  two.add(man.fields().intern("f"), 1);
  two.add(man.fields().intern("g"), 7);
  StateSpace s3(man, two, 1 << 20);
  CHECK(s3.count() == 7);  // 1 + 3*2
}

TEST_CASE("the state-space cap raises a resource error") {
  FddManager man;
  Domain d;
  for (Value v = 0; v < 100; ++v) d.add(man.fields().intern("a"), v);
  for (Value v = 0; v < 100; ++v) d.add(man.fields().intern("b"), v);
  CHECK_THROWS_AS(StateSpace(man, d, 1000), ResourceError);
}

TEST_CASE("partition property: every concrete packet has exactly one class") {
  FddManager man;
  Domain d;
  FieldId f = man.fields().intern("f"), g = man.fields().intern("g");
  d.add(f, 1);
  d.add(f, 3);
  d.add(g, 2);
  StateSpace space(man, d, 1 << 20);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Packet pk;
    pk.set(f, rng() % 6);
    pk.set(g, rng() % 6);
    SymPacket cls = space.classify(pk);
    uint64_t idx = space.index(cls);
    CHECK(idx >= 1);
    CHECK(idx < space.count());
    // Round trip through decode.
    CHECK(space.decode(idx) == cls);
    // The representative lands in the same class.
    CHECK(space.classify(space.representative(cls)) == cls);
  }
}

TEST_CASE("refining the domain leaves concrete answers unchanged") {
  FddManager man;
  Fdd f = compile(man, testutil::coin_router());
  Domain base = infer_domain(man, f);
  Domain refined = base;
  refined.add(man.fields().intern("pt"), 9);
  refined.add(man.fields().intern("spare"), 1);
  StateSpace coarse(man, base, 1 << 20);
  StateSpace fine(man, refined, 1 << 20);
  auto coarse_m = fdd_to_matrix_over(man, f, coarse);
  auto fine_m = fdd_to_matrix_over(man, f, fine);
  // Every concrete packet gets the same answer through either space.
  for (Value ptv : {1u, 2u, 3u, 9u, 12u}) {
    Packet pk;
    pk.set(man.fields().intern("pt"), ptv);
    pk.set(man.fields().intern("spare"), 7);
    PacketDist want = man.eval(f, pk);
    uint64_t row = fine.index(fine.classify(pk));
    Rat drop_mass(0);
    Rat total(0);
    for (auto& [c, w] : fine_m.row[row]) {
      total += w;
      if (c == StateSpace::kEmpty) drop_mass += w;
    }
    CHECK(total == 1);
    CHECK(drop_mass == want.drop.value);
  }
  (void)coarse_m;
}

TEST_CASE("index and decode are mutually inverse over the whole space") {
  FddManager man;
  Domain d;
  d.add(man.fields().intern("f"), 0);
  d.add(man.fields().intern("f"), 1);
  d.add(man.fields().intern("g"), 7);
  StateSpace space(man, d, 1 << 20);
  for (uint64_t i = 1; i < space.count(); ++i)
    CHECK(space.index(space.decode(i)) == i);
}
