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

#ifndef PNK_TESTS_TESTUTIL_HPP_
#define PNK_TESTS_TESTUTIL_HPP_

#include <random>
#include <string>
#include <vector>

#include "pnk/fdd.hpp"
#include "pnk/syntax.hpp"

namespace pnk::testutil {

// The running three-branch conditional from the worked example: a packet at
// port 1 flips a fair coin between ports 2 and 3; ports 2 and 3 route back
// to port 1; everything else drops.
inline ProgPtr coin_router() {
  using P = Prog;
  return P::ite(
      Pred::test("pt", 1),
      P::choice2(make_rat(1, 2), P::assign("pt", 2), P::assign("pt", 3)),
      P::ite(Pred::test("pt", 2), P::assign("pt", 1),
             P::ite(Pred::test("pt", 3), P::assign("pt", 1), P::drop())));
}

// Random guarded programs over a tiny vocabulary, for differential tests.
// `loop_budget` bounds the number of while loops in the generated term.
class ProgGen {
 public:
  ProgGen(uint64_t seed, std::vector<std::string> fields,
          std::vector<Value> values, int loop_budget = 2)
      : rng_(seed),
        fields_(std::move(fields)),
        values_(std::move(values)),
        loops_left_(loop_budget) {}

  ProgPtr prog(int depth = 3) { return gen_prog(depth); }
  PredPtr pred(int depth = 2) { return gen_pred(depth); }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  const std::string& field() { return fields_[pick(fields_.size())]; }
  Value value() { return values_[pick(values_.size())]; }

  PredPtr gen_pred(int depth) {
    if (depth == 0) {
      switch (pick(4)) {
        case 0:
          return Pred::verum();
        case 1:
          return Pred::falsum();
        default:
          return Pred::test(field(), value());
      }
    }
    switch (pick(6)) {
      case 0:
        return Pred::conj(gen_pred(depth - 1), gen_pred(depth - 1));
      case 1:
        return Pred::disj(gen_pred(depth - 1), gen_pred(depth - 1));
      case 2:
        return Pred::neg(gen_pred(depth - 1));
      default:
        return gen_pred(0);
    }
  }

  ProgPtr gen_prog(int depth) {
    if (depth == 0) {
      switch (pick(4)) {
        case 0:
          return Prog::filter(gen_pred(1));
        default:
          return Prog::assign(field(), value());
      }
    }
    int kind = pick(10);
    if (kind < 2) return Prog::filter(gen_pred(depth > 1 ? 2 : 1));
    if (kind < 4) return Prog::assign(field(), value());
    if (kind < 6)
      return Prog::seq(gen_prog(depth - 1), gen_prog(depth - 1));
    if (kind < 8) {
      Rat r = make_rat(1 + pick(3), 4);  // 1/4, 1/2, 3/4
      return Prog::choice2(r, gen_prog(depth - 1), gen_prog(depth - 1));
    }
    if (kind == 8)
      return Prog::ite(gen_pred(1), gen_prog(depth - 1), gen_prog(depth - 1));
    if (loops_left_ > 0) {
      --loops_left_;
      // Guard on a test so most loops touch a fraction of the space.
      PredPtr guard = Pred::test(field(), value());
      return Prog::while_loop(guard, gen_prog(depth - 1));
    }
    return Prog::ite(gen_pred(1), gen_prog(depth - 1), gen_prog(depth - 1));
  }

  std::mt19937_64 rng_;
  std::vector<std::string> fields_;
  std::vector<Value> values_;
  int loops_left_;
};

}  // namespace pnk::testutil

#endif  // PNK_TESTS_TESTUTIL_HPP_
