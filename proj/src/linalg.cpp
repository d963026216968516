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

#include "pnk/linalg.hpp"

#include <sstream>

namespace pnk {

std::string dump_matrix(const SparseMatrix<Rat>& m) {
  std::ostringstream os;
  os << m.rows << " " << m.cols << "\n";
  for (uint32_t r = 0; r < m.rows; ++r) {
    for (const auto& [c, w] : m.row[r]) {
      os << r << " " << c << " " << w.get_num().get_str() << "/"
         << w.get_den().get_str() << "\n";
    }
  }
  return os.str();
}

SparseMatrix<double> to_float(const SparseMatrix<Rat>& m) {
  SparseMatrix<double> out;
  out.rows = m.rows;
  out.cols = m.cols;
  out.row.resize(m.rows);
  for (uint32_t r = 0; r < m.rows; ++r) {
    out.row[r].reserve(m.row[r].size());
    for (const auto& [c, w] : m.row[r])
      out.row[r].push_back({c, rat_to_double(w)});
  }
  return out;
}

}  // namespace pnk
