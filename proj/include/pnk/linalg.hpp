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

#ifndef PNK_LINALG_HPP_
#define PNK_LINALG_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnk/error.hpp"
#include "pnk/rational.hpp"

namespace pnk {

// Row-major sparse matrix; rows hold (col, weight) sorted by column.
// Weights are exact rationals or 64-bit floats depending on the solver mode.
template <typename T>
struct SparseMatrix {
  uint32_t rows = 0, cols = 0;
  std::vector<std::vector<std::pair<uint32_t, T>>> row;

  static SparseMatrix identity(uint32_t n) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.row.resize(n);
    for (uint32_t i = 0; i < n; ++i) m.row[i].push_back({i, T(1)});
    return m;
  }
};

// (Q, R) partition of a row-stochastic matrix with the absorbing states
// factored out.
template <typename T>
struct AbsorbingSystem {
  std::vector<uint32_t> absorbing;  // original state indices
  std::vector<uint32_t> transient;
  SparseMatrix<T> Q;  // transient x transient
  SparseMatrix<T> R;  // transient x absorbing
};

namespace detail {

inline bool is_zero(const Rat& x) { return x == 0; }
inline bool is_zero(double x) { return x == 0.0; }
inline double magnitude(const Rat&) { return 0.0; }  // exact mode: first pivot
inline double magnitude(double x) { return std::fabs(x); }

}  // namespace detail

// Splits a square row-stochastic matrix into its absorbing system. A state
// is absorbing iff its row is exactly the unit row on itself.
template <typename T>
AbsorbingSystem<T> partition_absorbing(const SparseMatrix<T>& m) {
  if (m.rows != m.cols) throw ValidationError("partition of non-square matrix");
  AbsorbingSystem<T> sys;
  std::vector<int64_t> abs_pos(m.rows, -1), trans_pos(m.rows, -1);
  for (uint32_t s = 0; s < m.rows; ++s) {
    const auto& r = m.row[s];
    bool absorbing = r.size() == 1 && r[0].first == s && r[0].second == T(1);
    if (absorbing) {
      abs_pos[s] = static_cast<int64_t>(sys.absorbing.size());
      sys.absorbing.push_back(s);
    } else {
      trans_pos[s] = static_cast<int64_t>(sys.transient.size());
      sys.transient.push_back(s);
    }
  }
  sys.Q.rows = sys.Q.cols = static_cast<uint32_t>(sys.transient.size());
  sys.Q.row.resize(sys.Q.rows);
  sys.R.rows = sys.Q.rows;
  sys.R.cols = static_cast<uint32_t>(sys.absorbing.size());
  sys.R.row.resize(sys.R.rows);
  for (uint32_t i = 0; i < sys.Q.rows; ++i) {
    for (const auto& [c, w] : m.row[sys.transient[i]]) {
      if (abs_pos[c] >= 0) {
        sys.R.row[i].push_back({static_cast<uint32_t>(abs_pos[c]), w});
      } else {
        sys.Q.row[i].push_back({static_cast<uint32_t>(trans_pos[c]), w});
      }
    }
  }
  return sys;
}

// Absorption probabilities A = (I - Q)^-1 R, solved blockwise over the SCC
// condensation of Q's support graph in reverse topological order. Transient
// states that cannot reach any absorbing state (trapped) receive a unit row
// on `empty_absorbing` (an index into sys.absorbing); if any state is
// trapped and no empty state was designated, this throws.
//
// Classification of trapped states uses the support graph only, so it is
// independent of the weights' magnitudes.
template <typename T>
SparseMatrix<T> absorbing_limit(
    const AbsorbingSystem<T>& sys,
    std::optional<uint32_t> empty_absorbing = std::nullopt) {
  const uint32_t n = sys.Q.rows;
  SparseMatrix<T> A;
  A.rows = n;
  A.cols = sys.R.cols;
  A.row.resize(n);
  if (n == 0) return A;

  // Tarjan SCC, iterative. Components come out sinks-first.
  std::vector<uint32_t> comp(n, UINT32_MAX), low(n), idx(n, UINT32_MAX), st;
  std::vector<bool> on_stack(n, false);
  std::vector<std::vector<uint32_t>> comps;
  uint32_t counter = 0;
  struct Frame {
    uint32_t v;
    std::size_t ei;
  };
  for (uint32_t root = 0; root < n; ++root) {
    if (idx[root] != UINT32_MAX) continue;
    std::vector<Frame> call{{root, 0}};
    idx[root] = low[root] = counter++;
    st.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& fr = call.back();
      const auto& edges = sys.Q.row[fr.v];
      if (fr.ei < edges.size()) {
        uint32_t w = edges[fr.ei++].first;
        if (idx[w] == UINT32_MAX) {
          idx[w] = low[w] = counter++;
          st.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[fr.v] = std::min(low[fr.v], idx[w]);
        }
      } else {
        uint32_t v = fr.v;
        call.pop_back();
        if (!call.empty())
          low[call.back().v] = std::min(low[call.back().v], low[v]);
        if (low[v] == idx[v]) {
          comps.emplace_back();
          while (true) {
            uint32_t w = st.back();
            st.pop_back();
            on_stack[w] = false;
            comp[w] = static_cast<uint32_t>(comps.size() - 1);
            comps.back().push_back(w);
            if (w == v) break;
          }
        }
      }
    }
  }

  // Reachability of an absorbing state per component (sinks processed
  // first, so successors are already classified).
  std::vector<bool> can_reach(comps.size(), false);
  std::vector<bool> solved(n, false);
  for (std::size_t ci = 0; ci < comps.size(); ++ci) {
    bool reach = false;
    for (uint32_t v : comps[ci]) {
      if (!sys.R.row[v].empty()) reach = true;
      for (const auto& [w, _] : sys.Q.row[v])
        if (comp[w] != ci && can_reach[comp[w]]) reach = true;
    }
    can_reach[ci] = reach;
    if (!reach) {
      if (!empty_absorbing)
        throw ValidationError(
            "trapped transient states with no designated empty state");
      for (uint32_t v : comps[ci]) {
        A.row[v] = {{*empty_absorbing, T(1)}};
        solved[v] = true;
      }
      continue;
    }
    // Solve (I - Q_SS) X = RHS for this component. RHS rows collect R plus
    // flows into already-solved downstream states.
    const auto& members = comps[ci];
    const std::size_t k = members.size();
    std::vector<uint32_t> pos(n, UINT32_MAX);
    for (std::size_t i = 0; i < k; ++i) pos[members[i]] = i;
    // Dense RHS over the set of absorbing columns that actually occur.
    std::vector<uint32_t> cols_used;
    std::vector<int64_t> col_pos(sys.R.cols, -1);
    auto use_col = [&](uint32_t c) {
      if (col_pos[c] < 0) {
        col_pos[c] = static_cast<int64_t>(cols_used.size());
        cols_used.push_back(c);
      }
    };
    for (uint32_t v : members) {
      for (const auto& [c, w] : sys.R.row[v]) use_col(c);
      for (const auto& [t, w] : sys.Q.row[v])
        if (pos[t] == UINT32_MAX)
          for (const auto& [c, aw] : A.row[t]) use_col(c);
    }
    const std::size_t m = cols_used.size();
    std::vector<std::vector<T>> mat(k, std::vector<T>(k, T(0)));
    std::vector<std::vector<T>> rhs(k, std::vector<T>(m, T(0)));
    for (std::size_t i = 0; i < k; ++i) {
      mat[i][i] = T(1);
      uint32_t v = members[i];
      for (const auto& [c, w] : sys.R.row[v])
        rhs[i][col_pos[c]] += w;
      for (const auto& [t, w] : sys.Q.row[v]) {
        if (pos[t] != UINT32_MAX) {
          mat[i][pos[t]] -= w;
        } else {
          for (const auto& [c, aw] : A.row[t]) rhs[i][col_pos[c]] += w * aw;
        }
      }
    }
    // Gaussian elimination; partial pivoting by magnitude in float mode,
    // first non-zero in exact mode.
    for (std::size_t col = 0; col < k; ++col) {
      std::size_t piv = k;
      if constexpr (std::is_same_v<T, double>) {
        double best = 0.0;
        for (std::size_t r2 = col; r2 < k; ++r2) {
          double mag = detail::magnitude(mat[r2][col]);
          if (mag > best) {
            best = mag;
            piv = r2;
          }
        }
      } else {
        for (std::size_t r2 = col; r2 < k; ++r2) {
          if (!detail::is_zero(mat[r2][col])) {
            piv = r2;
            break;
          }
        }
      }
      if (piv >= k)
        throw InternalError("singular system among non-trapped states");
      if (piv != col) {
        std::swap(mat[piv], mat[col]);
        std::swap(rhs[piv], rhs[col]);
      }
      T inv = mat[col][col];
      for (std::size_t r2 = 0; r2 < k; ++r2) {
        if (r2 == col || detail::is_zero(mat[r2][col])) continue;
        T factor = mat[r2][col] / inv;
        for (std::size_t c2 = col; c2 < k; ++c2)
          mat[r2][c2] -= factor * mat[col][c2];
        for (std::size_t c2 = 0; c2 < m; ++c2)
          rhs[r2][c2] -= factor * rhs[col][c2];
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      uint32_t v = members[i];
      T inv = mat[i][i];
      auto& out = A.row[v];
      for (std::size_t c2 = 0; c2 < m; ++c2) {
        T x = rhs[i][c2] / inv;
        if (!detail::is_zero(x)) out.push_back({cols_used[c2], x});
      }
      std::sort(out.begin(), out.end());
      solved[v] = true;
    }
  }
  return A;
}

// One step of the chain: v' = v * T (row vector times matrix).
template <typename T>
std::vector<T> power_step(const SparseMatrix<T>& m, const std::vector<T>& v) {
  if (v.size() != m.rows) throw ValidationError("power_step dimension mismatch");
  std::vector<T> out(m.cols, T(0));
  for (uint32_t r = 0; r < m.rows; ++r) {
    if (detail::is_zero(v[r])) continue;
    for (const auto& [c, w] : m.row[r]) out[c] += v[r] * w;
  }
  return out;
}

// Golden dump format: header "n m", one line per nonzero "row col num/den".
std::string dump_matrix(const SparseMatrix<Rat>& m);

SparseMatrix<double> to_float(const SparseMatrix<Rat>& m);

}  // namespace pnk

#endif  // PNK_LINALG_HPP_
