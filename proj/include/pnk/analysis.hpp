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

#ifndef PNK_ANALYSIS_HPP_
#define PNK_ANALYSIS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnk/compile.hpp"
#include "pnk/fdd.hpp"
#include "pnk/syntax.hpp"

namespace pnk {

struct AnalysisOptions {
  CompileConfig cfg;
  // Entrywise tolerance when any side carries float-solver leaves.
  Rat epsilon = make_rat(1, 1000000000);
};

// Structural identity for exact diagrams, entrywise epsilon comparison over
// the joint class partition otherwise.
bool canonical_eq(FddManager& man, Fdd f, Fdd g, const Rat& epsilon);

bool equivalent(FddManager& man, const ProgPtr& p, const ProgPtr& q,
                const AnalysisOptions& opts = {});

enum class Order { Equal, Less, Greater, Incomparable };

struct OrderWitness {
  std::string input_class;   // conjunction of pinned tests ("*" elsewhere)
  std::string output_class;  // rendered action
  Rat left_prob, right_prob;
};

struct OrderResult {
  Order order = Order::Equal;
  std::optional<OrderWitness> witness;  // present when not Equal
};

// Entrywise comparison of the two programs' matrices restricted to non-drop
// output columns: Less means <= everywhere and < somewhere.
OrderResult compare_order(FddManager& man, const ProgPtr& p, const ProgPtr& q,
                          const AnalysisOptions& opts = {});
OrderResult compare_order_fdd(FddManager& man, Fdd f, Fdd g,
                              const Rat& epsilon);

PacketDist output_distribution(FddManager& man, const ProgPtr& p,
                               const Packet& pk,
                               const AnalysisOptions& opts = {});

bool eval_pred(const FddManager& man, const PredPtr& t, const Packet& pk);

struct IngressStats {
  Packet ingress;
  Prob delivered;
  std::map<Value, Prob> hop_hist;    // delivered mass per hop count
  std::optional<Rat> expected_hops;  // conditioned on delivery
};

struct QueryReport {
  std::vector<IngressStats> per_ingress;
  Rat min_delivery{0};
  Rat mean_delivery{0};
  bool exact = true;
  bool counter_saturated = false;
  std::map<Value, Rat> hop_hist;            // mean delivered mass per hops
  std::optional<Rat> expected_hops;         // aggregate, given delivery
};

// Per-ingress mass on outputs satisfying the egress predicate.
QueryReport delivery_probability(FddManager& man, const ProgPtr& model,
                                 const std::vector<Packet>& ingress,
                                 const PredPtr& egress,
                                 const AnalysisOptions& opts = {});

// Delivery plus the histogram of the hop-counter field at egress; expected
// hop count is conditioned on delivery. Sets counter_saturated when
// delivered mass sits at the counter bound.
QueryReport hop_stats(FddManager& man, const ProgPtr& model,
                      const std::vector<Packet>& ingress, const PredPtr& egress,
                      const std::string& hops_field, Value max_hops,
                      const AnalysisOptions& opts = {});

}  // namespace pnk

#endif  // PNK_ANALYSIS_HPP_
