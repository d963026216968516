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

#ifndef PNK_RATIONAL_HPP_
#define PNK_RATIONAL_HPP_

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace pnk {

// Exact arithmetic throughout the pipeline is mpq-backed. `Rat` values are
// kept canonical (reduced, positive denominator) by the helpers below.
using Rat = mpq_class;

Rat make_rat(long num, long den);

// Parses "n", "n/d", or a decimal like "0.8" (-> 4/5) into an exact rational.
Rat rat_from_string(const std::string& text);

// Exact conversion; every double is a dyadic rational.
Rat rat_from_double(double x);

double rat_to_double(const Rat& r);

// "0", "1", "4/5".
std::string rat_to_string(const Rat& r);

std::size_t rat_hash(const Rat& r);

inline const Rat& rat_zero() {
  static const Rat z(0);
  return z;
}
inline const Rat& rat_one() {
  static const Rat o(1);
  return o;
}

// A probability with an exactness tag. Values produced by the float loop
// solver are tagged inexact; inexactness is contagious through arithmetic
// and switches downstream equality checks to epsilon comparison.
struct Prob {
  Rat value;
  bool exact = true;

  Prob() : value(0), exact(true) {}
  explicit Prob(Rat v, bool exact = true) : value(std::move(v)), exact(exact) {}

  friend Prob operator+(const Prob& a, const Prob& b) {
    return Prob(a.value + b.value, a.exact && b.exact);
  }
  friend Prob operator*(const Prob& a, const Prob& b) {
    return Prob(a.value * b.value, a.exact && b.exact);
  }
  friend bool operator==(const Prob& a, const Prob& b) {
    return a.exact == b.exact && a.value == b.value;
  }
};

}  // namespace pnk

#endif  // PNK_RATIONAL_HPP_
