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

#include <cmath>
#include <random>

#include "pnk/linalg.hpp"

using namespace pnk;

namespace {

SparseMatrix<Rat> from_dense(const std::vector<std::vector<Rat>>& d) {
  SparseMatrix<Rat> m;
  m.rows = d.size();
  m.cols = d.empty() ? 0 : d[0].size();
  m.row.resize(m.rows);
  for (uint32_t r = 0; r < m.rows; ++r)
    for (uint32_t c = 0; c < m.cols; ++c)
      if (d[r][c] != 0) m.row[r].push_back({c, d[r][c]});
  return m;
}

Rat entry(const SparseMatrix<Rat>& m, uint32_t r, uint32_t c) {
  for (auto& [col, w] : m.row[r])
    if (col == c) return w;
  return Rat(0);
}

}  // namespace

TEST_CASE("identity matrices are entirely absorbing") {
  auto sys = partition_absorbing(SparseMatrix<Rat>::identity(4));
  CHECK(sys.absorbing.size() == 4);
  CHECK(sys.transient.empty());
  CHECK(sys.Q.rows == 0);
}

TEST_CASE("two-state geometric chain partitions and solves to certainty") {
  // [[1, 0], [1/2, 1/2]]: state 1 leaks half its mass to state 0 each step.
  auto m = from_dense({{Rat(1), Rat(0)}, {make_rat(1, 2), make_rat(1, 2)}});
  auto sys = partition_absorbing(m);
  REQUIRE(sys.absorbing == std::vector<uint32_t>{0});
  REQUIRE(sys.transient == std::vector<uint32_t>{1});
  CHECK(entry(sys.Q, 0, 0) == make_rat(1, 2));
  CHECK(entry(sys.R, 0, 0) == make_rat(1, 2));
  auto A = absorbing_limit(sys);
  CHECK(entry(A, 0, 0) == 1);  // geometric series sums to one
}

TEST_CASE("Q = 0 gives A = R") {
  auto m = from_dense({{Rat(1), Rat(0), Rat(0)},
                       {Rat(0), Rat(1), Rat(0)},
                       {make_rat(1, 3), make_rat(2, 3), Rat(0)}});
  auto sys = partition_absorbing(m);
  auto A = absorbing_limit(sys);
  CHECK(entry(A, 0, 0) == make_rat(1, 3));
  CHECK(entry(A, 0, 1) == make_rat(2, 3));
}

TEST_CASE("trapped self-loops route all mass to the designated empty state") {
  // State 1 loops forever; state 0 is the empty absorbing state.
  auto m = from_dense({{Rat(1), Rat(0)}, {Rat(0), Rat(1)}});
  // Built by hand: a probability-one self-loop reads as absorbing to the
  // structural partition, but the loop solver marks guard-satisfying
  // states transient by construction, which is the case exercised here.
  AbsorbingSystem<Rat> sys;
  sys.absorbing = {0};
  sys.transient = {1};
  sys.Q.rows = sys.Q.cols = 1;
  sys.Q.row = {{{0u, Rat(1)}}};
  sys.R.rows = 1;
  sys.R.cols = 1;
  sys.R.row = {{}};
  CHECK_THROWS_AS(absorbing_limit<Rat>(sys, std::nullopt), ValidationError);
  auto A = absorbing_limit<Rat>(sys, 0);
  CHECK(entry(A, 0, 0) == 1);
  (void)m;
}

TEST_CASE("power_step against the identity and the geometric chain") {
  auto id = SparseMatrix<Rat>::identity(3);
  std::vector<Rat> v{make_rat(1, 4), make_rat(1, 4), make_rat(1, 2)};
  CHECK(power_step(id, v) == v);

  auto m = from_dense({{Rat(1), Rat(0)}, {make_rat(1, 2), make_rat(1, 2)}});
  std::vector<Rat> u{Rat(0), Rat(1)};
  for (int i = 0; i < 50; ++i) u = power_step(m, u);
  // Mass on the absorbing state is 1 - 2^-50.
  Rat expect = Rat(1) - make_rat(1, 1) / Rat(mpz_class(1) << 50);
  CHECK(u[0] == expect);
}

TEST_CASE("random absorbing systems: closed form equals the power limit") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    // Random row-stochastic matrix over <=6 states with denominator 8;
    // state 0 forced absorbing so the chain has somewhere to drain.
    uint32_t n = 3 + rng() % 4;
    std::vector<std::vector<Rat>> d(n, std::vector<Rat>(n, Rat(0)));
    d[0][0] = 1;
    for (uint32_t r = 1; r < n; ++r) {
      int left = 8;
      for (uint32_t c = 0; c < n && left > 0; ++c) {
        int take = (c + 1 == n) ? left : static_cast<int>(rng() % (left + 1));
        d[r][c] = make_rat(take, 8);
        left -= take;
      }
    }
    auto m = from_dense(d);
    auto sys = partition_absorbing(m);
    SparseMatrix<Rat> A;
    bool trapped_without_empty = false;
    try {
      A = absorbing_limit<Rat>(sys, std::nullopt);
    } catch (const ValidationError&) {
      // Some random chains trap; mapping trapped mass to state 0 keeps the
      // comparison meaningful.
      A = absorbing_limit<Rat>(sys, 0);
      trapped_without_empty = true;
    }
    // Rows of A are stochastic.
    for (uint32_t i = 0; i < A.rows; ++i) {
      Rat sum(0);
      for (auto& [c, w] : A.row[i]) sum += w;
      CHECK(sum == 1);
    }
    if (trapped_without_empty) continue;
    // Power iteration in floats approaches the same limit.
    auto mf = to_float(m);
    for (uint32_t i = 0; i < sys.Q.rows; ++i) {
      std::vector<double> v(n, 0.0);
      v[sys.transient[i]] = 1.0;
      for (int step = 0; step < 1000; ++step) v = power_step(mf, v);
      for (std::size_t a = 0; a < sys.absorbing.size(); ++a) {
        double want = rat_to_double(entry(A, i, a));
        CHECK(std::fabs(v[sys.absorbing[a]] - want) < 1e-9);
      }
    }
    // Rational and float solves agree to 1e-9.
    AbsorbingSystem<double> fsys;
    fsys.absorbing = sys.absorbing;
    fsys.transient = sys.transient;
    fsys.Q = to_float(sys.Q);
    fsys.R = to_float(sys.R);
    auto Af = absorbing_limit<double>(fsys, std::nullopt);
    for (uint32_t i = 0; i < A.rows; ++i) {
      for (std::size_t a = 0; a < sys.absorbing.size(); ++a) {
        double fl = 0;
        for (auto& [c, w] : Af.row[i])
          if (c == a) fl = w;
        CHECK(std::fabs(fl - rat_to_double(entry(A, i, a))) < 1e-9);
      }
    }
  }
}

TEST_CASE("dump format is one nonzero per line") {
  auto m = from_dense({{Rat(1), Rat(0)}, {make_rat(1, 2), make_rat(1, 2)}});
  CHECK(dump_matrix(m) == "2 2\n0 0 1/1\n1 0 1/2\n1 1 1/2\n");
}
