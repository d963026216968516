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
#include "pnk/oracle.hpp"
#include "testutil.hpp"

using namespace pnk;

namespace {

// Dense product of two square sparse rational matrices (test-local; the
// chains here are tiny).
SparseMatrix<Rat> mul(const SparseMatrix<Rat>& a, const SparseMatrix<Rat>& b) {
  SparseMatrix<Rat> out;
  out.rows = a.rows;
  out.cols = b.cols;
  out.row.resize(out.rows);
  for (uint32_t r = 0; r < a.rows; ++r) {
    std::map<uint32_t, Rat> acc;
    for (auto& [k, w] : a.row[r])
      for (auto& [c, u] : b.row[k]) acc[c] += w * u;
    for (auto& [c, w] : acc)
      if (w != 0) out.row[r].push_back({c, w});
  }
  return out;
}

bool same(const SparseMatrix<Rat>& a, const SparseMatrix<Rat>& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (uint32_t r = 0; r < a.rows; ++r)
    if (a.row[r] != b.row[r]) return false;
  return true;
}

}  // namespace

TEST_CASE("drop sends every input set to the empty set") {
  FddManager man;
  Oracle orc(man, {{"f", {0, 1}}});
  for (SetMask a = 0; a < 4; ++a) {
    SetDist d = orc.bigstep(Prog::drop(), a);
    REQUIRE(d.size() == 1);
    CHECK(d.at(0) == 1);
  }
}

TEST_CASE("union of two coin flips convolves to the three-outcome law") {
  FddManager man;
  Oracle orc(man, {{"f", {0, 1}}});
  ProgPtr flip =
      Prog::choice2(make_rat(1, 2), Prog::assign("f", 0), Prog::assign("f", 1));
  Packet pk;
  pk.set(man.fields().intern("f"), 0);
  SetDist d = orc.bigstep(Prog::union_of(flip, flip), orc.singleton(pk));
  Packet pk1;
  pk1.set(man.fields().intern("f"), 1);
  SetMask m0 = orc.singleton(pk), m1 = orc.singleton(pk1);
  REQUIRE(d.size() == 3);
  CHECK(d.at(m0) == make_rat(1, 4));
  CHECK(d.at(m1) == make_rat(1, 4));
  CHECK(d.at(m0 | m1) == make_rat(1, 2));
}

TEST_CASE("the coin-flip star saturates the accumulator") {
  FddManager man;
  Oracle orc(man, {{"f", {0, 1}}});
  ProgPtr flip =
      Prog::choice2(make_rat(1, 2), Prog::assign("f", 0), Prog::assign("f", 1));
  Packet pk0;
  pk0.set(man.fields().intern("f"), 0);
  SetDist d = orc.bigstep(Prog::star(flip), orc.singleton(pk0));
  REQUIRE(d.size() == 1);
  CHECK(d.begin()->first == 3);  // both packets
  CHECK(d.begin()->second == 1);
}

TEST_CASE("the reachable small-step graph has the textbook shape") {
  FddManager man;
  Oracle orc(man, {{"f", {0, 1}}});
  ProgPtr flip =
      Prog::choice2(make_rat(1, 2), Prog::assign("f", 0), Prog::assign("f", 1));
  Packet pk0;
  pk0.set(man.fields().intern("f"), 0);
  // (0,{}), (0,{0}), (1,{0}), (0,{0,1}), (1,{0,1}).
  CHECK(orc.reachable_states(flip, orc.singleton(pk0)) == 5);
}

TEST_CASE("U is identity on unsaturated states and renames saturated ones") {
  FddManager man;
  Oracle orc(man, {{"f", {0, 1}}});
  ProgPtr flip =
      Prog::choice2(make_rat(1, 2), Prog::assign("f", 0), Prog::assign("f", 1));
  auto ch = orc.smallstep_chain(flip);
  for (uint32_t s = 0; s < ch.states.size(); ++s) {
    auto [a, b] = ch.states[s];
    REQUIRE(ch.U.row[s].size() == 1);
    if (ch.saturated[s]) {
      CHECK(ch.states[ch.U.row[s][0].first] == std::make_pair(SetMask(0), b));
    } else {
      CHECK(ch.U.row[s][0].first == s);
    }
  }
  // (1,{0}) is unsaturated; (1,{0,1}) is saturated.
  uint32_t unsat = ch.index(2, 1), sat = ch.index(2, 3);
  CHECK(!ch.saturated[unsat]);
  CHECK(ch.saturated[sat]);
}

TEST_CASE("S is stochastic and monotone on random programs") {
  for (uint64_t seed = 0; seed < 25; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed, {"f", "g"}, {0, 1}, 0);
    Oracle orc(man, {{"f", {0, 1}}, {"g", {0, 1}}});
    auto ch = orc.smallstep_chain(gen.prog(3));
    for (uint32_t s = 0; s < ch.states.size(); ++s) {
      Rat sum(0);
      for (auto& [t, p] : ch.S.row[s]) {
        sum += p;
        // Monotone accumulator along every transition.
        auto b = ch.states[s].second;
        auto b2 = ch.states[t].second;
        CHECK((b & b2) == b);
      }
      CHECK(sum == 1);
    }
  }
}

TEST_CASE("(SU)^n equals S^n U for small n") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed + 100, {"f"}, {0, 1}, 0);
    Oracle orc(man, {{"f", {0, 1}}});
    auto ch = orc.smallstep_chain(gen.prog(3));
    SparseMatrix<Rat> su_n = ch.SU;
    SparseMatrix<Rat> s_n = ch.S;
    for (int n = 1; n <= 4; ++n) {
      CHECK(same(su_n, mul(s_n, ch.U)));
      su_n = mul(su_n, ch.SU);
      s_n = mul(s_n, ch.S);
    }
  }
}

TEST_CASE("finite unrollings match the (n+1)-step marginal") {
  // B[p^(n)]_{a,b} = sum over a' of S^{n+1}_{(a,empty),(a',b)}
  for (uint64_t seed = 0; seed < 8; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed + 55, {"f"}, {0, 1}, 0);
    ProgPtr p = gen.prog(2);
    Oracle orc(man, {{"f", {0, 1}}});
    auto ch = orc.smallstep_chain(p);
    const SetMask sets = 4;
    SparseMatrix<Rat> s_pow = ch.S;  // S^1
    ProgPtr unroll = Prog::skip();   // p^(0)
    for (int n = 0; n <= 5; ++n) {
      for (SetMask a = 0; a < sets; ++a) {
        SetDist big = orc.bigstep(unroll, a);
        for (SetMask b = 0; b < sets; ++b) {
          Rat lhs = big.count(b) ? big.at(b) : Rat(0);
          Rat rhs(0);
          uint32_t row = ch.index(a, 0);
          for (auto& [t, w] : s_pow.row[row]) {
            if (ch.states[t].second == b) rhs += w;
          }
          CHECK(lhs == rhs);
        }
      }
      // p^(n+1) = skip & p;p^(n)
      unroll = Prog::union_of(Prog::skip(), Prog::seq(p, unroll));
      s_pow = mul(s_pow, ch.S);
    }
  }
}

TEST_CASE("finite unrollings are monotone in the CPO order") {
  // mu below nu iff mu(up(a)) <= nu(up(a)) for every witness set a.
  for (uint64_t seed = 0; seed < 8; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed + 7, {"f"}, {0, 1}, 0);
    ProgPtr p = gen.prog(2);
    Oracle orc(man, {{"f", {0, 1}}});
    const SetMask sets = 4;
    ProgPtr unroll = Prog::skip();
    std::vector<std::vector<Rat>> prev;
    for (int n = 0; n <= 4; ++n) {
      std::vector<std::vector<Rat>> cur;
      for (SetMask a = 0; a < sets; ++a) {
        SetDist d = orc.bigstep(unroll, a);
        std::vector<Rat> up(sets, Rat(0));
        for (SetMask witness = 0; witness < sets; ++witness) {
          for (auto& [b, w] : d)
            if ((b & witness) == witness) up[witness] += w;
        }
        cur.push_back(std::move(up));
      }
      if (!prev.empty()) {
        for (SetMask a = 0; a < sets; ++a)
          for (SetMask w = 0; w < sets; ++w)
            CHECK(prev[a][w] <= cur[a][w]);
      }
      prev = std::move(cur);
      unroll = Prog::union_of(Prog::skip(), Prog::seq(p, unroll));
    }
  }
}

TEST_CASE("guarded programs agree with the compiled diagrams exactly") {
  for (uint64_t seed = 0; seed < 60; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed, {"f", "g"}, {0, 1}, 2);
    ProgPtr p = gen.prog(3);
    Oracle orc(man, {{"f", {0, 1}}, {"g", {0, 1}}});
    Fdd fdd = compile(man, p);
    for (uint32_t i = 0; i < orc.packet_count(); ++i) {
      const Packet& pk = orc.packet(i);
      PacketDist ref = orc.bigstep_packet(p, pk);
      PacketDist got = man.eval(fdd, pk);
      CHECK(ref.drop.value == got.drop.value);
      CHECK(ref.mass.size() == got.mass.size());
      for (auto& [out, w] : ref.mass) {
        REQUIRE(got.mass.count(out));
        CHECK(got.mass.at(out).value == w.value);
      }
    }
  }
}

TEST_CASE("guarded encodings hold under the reference semantics") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    FddManager man;
    testutil::ProgGen gen(seed + 31, {"f"}, {0, 1}, 0);
    ProgPtr p = gen.prog(2), q = gen.prog(2);
    PredPtr a = Pred::test("f", seed % 2 ? 0 : 1);
    Oracle orc(man, {{"f", {0, 1}}});
    ProgPtr ite = Prog::ite(a, p, q);
    ProgPtr enc = Prog::union_of(Prog::seq(Prog::filter(a), p),
                                 Prog::seq(Prog::filter(Pred::neg(a)), q));
    ProgPtr loop = Prog::while_loop(a, p);
    ProgPtr loop_enc = Prog::seq(Prog::star(Prog::seq(Prog::filter(a), p)),
                                 Prog::filter(Pred::neg(a)));
    for (SetMask in = 0; in < 4; ++in) {
      CHECK(orc.bigstep(ite, in) == orc.bigstep(enc, in));
      CHECK(orc.bigstep(loop, in) == orc.bigstep(loop_enc, in));
    }
    ProgPtr dw = Prog::do_while(p, a);
    ProgPtr dw_enc = Prog::seq(p, loop);
    ProgPtr case2 =
        Prog::case_of({{Pred::test("f", 0), p}, {Pred::test("f", 1), q}});
    ProgPtr case_enc =
        Prog::ite(Pred::test("f", 0), p,
                  Prog::ite(Pred::test("f", 1), q, Prog::drop()));
    for (SetMask in = 0; in < 4; ++in) {
      CHECK(orc.bigstep(dw, in) == orc.bigstep(dw_enc, in));
      CHECK(orc.bigstep(case2, in) == orc.bigstep(case_enc, in));
    }
  }
}

TEST_CASE("divergence agrees between oracle and compiler") {
  FddManager man;
  Oracle orc(man, {{"f", {0, 1}}});
  ProgPtr spin = Prog::while_loop(Pred::verum(), Prog::skip());
  Packet pk0;
  pk0.set(man.fields().intern("f"), 0);
  PacketDist ref = orc.bigstep_packet(spin, pk0);
  CHECK(ref.drop.value == 1);
  CHECK(compile(man, spin) == man.drop_fdd());
}
