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

#include "pnk/rational.hpp"

#include <cmath>
#include <cstddef>

#include "pnk/error.hpp"

namespace pnk {

Rat make_rat(long num, long den) {
  if (den == 0) throw ValidationError("rational with zero denominator");
  Rat r(num, den);
  r.canonicalize();
  return r;
}

Rat rat_from_string(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rat r;
    if (r.set_str(text, 10) != 0)
      throw ValidationError("bad rational literal: " + text);
    if (r.get_den() == 0)
      throw ValidationError("rational with zero denominator: " + text);
    r.canonicalize();
    return r;
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) {
    Rat r;
    if (r.set_str(text, 10) != 0)
      throw ValidationError("bad rational literal: " + text);
    r.canonicalize();
    return r;
  }
  // Decimal literal: digits '.' digits, converted exactly.
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  std::size_t frac_len = text.size() - dot - 1;
  if (digits.empty() || frac_len == 0)
    throw ValidationError("bad decimal literal: " + text);
  mpz_class num;
  if (num.set_str(digits, 10) != 0)
    throw ValidationError("bad decimal literal: " + text);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
  Rat r(num, den);
  r.canonicalize();
  return r;
}

Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw ValidationError("non-finite float probability");
  Rat r;
  mpq_set_d(r.get_mpq_t(), x);
  r.canonicalize();
  return r;
}

double rat_to_double(const Rat& r) { return r.get_d(); }

std::string rat_to_string(const Rat& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

namespace {

std::size_t mpz_hash(const mpz_class& z) {
  const mp_limb_t* limbs = mpz_limbs_read(z.get_mpz_t());
  int n = std::abs(z.get_mpz_t()->_mp_size);
  std::size_t h = static_cast<std::size_t>(z.get_mpz_t()->_mp_size);
  for (int i = 0; i < n; ++i) {
    h ^= static_cast<std::size_t>(limbs[i]) + 0x9e3779b97f4a7c15ull + (h << 6) +
         (h >> 2);
  }
  return h;
}

}  // namespace

std::size_t rat_hash(const Rat& r) {
  std::size_t h = mpz_hash(r.get_num());
  h ^= mpz_hash(r.get_den()) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

}  // namespace pnk
