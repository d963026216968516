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

#include "pnk/analysis.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "pnk/error.hpp"

namespace pnk {

namespace {

// Simultaneous traversal over the joint class partition. Pins applied via
// assume_eq normalize identity writes away on both sides, so leaf actions
// compare directly by id. Drop entries are excluded from the order (the
// refinement order reads "delivers with higher probability"), which makes
// Less attainable despite mass conservation.
struct OrderWalker {
  FddManager& man;
  const Rat& eps;
  bool left_above = false;   // f > g somewhere
  bool right_above = false;  // g > f somewhere
  std::optional<OrderWitness> wit_left, wit_right;
  std::set<std::pair<uint32_t, uint32_t>> visited;
  std::vector<std::pair<FieldId, Value>> pins;

  void leaf_pair(Fdd f, Fdd g) {
    std::map<ActionId, std::pair<Rat, Rat>> merged;
    for (const auto& e : man.dist_entries(man.leaf_dist(f)))
      if (e.action != kActionDrop) merged[e.action].first = e.prob.value;
    for (const auto& e : man.dist_entries(man.leaf_dist(g)))
      if (e.action != kActionDrop) merged[e.action].second = e.prob.value;
    for (auto& [action, probs] : merged) {
      auto& [pl, pr] = probs;
      Rat diff = pl - pr;
      if (diff > eps && (!left_above || !wit_left)) {
        left_above = true;
        record(wit_left, action, pl, pr);
      } else if (diff > eps) {
        left_above = true;
      }
      if (-diff > eps && (!right_above || !wit_right)) {
        right_above = true;
        record(wit_right, action, pl, pr);
      } else if (-diff > eps) {
        right_above = true;
      }
    }
  }

  void record(std::optional<OrderWitness>& slot, ActionId action,
              const Rat& pl, const Rat& pr) {
    OrderWitness w;
    std::ostringstream in;
    if (pins.empty()) {
      in << "true";
    } else {
      for (std::size_t i = 0; i < pins.size(); ++i) {
        if (i) in << " & ";
        in << man.fields().name(pins[i].first) << "=" << pins[i].second;
      }
    }
    w.input_class = in.str();
    std::ostringstream out;
    if (action == kActionIdentity) {
      out << "id";
    } else {
      auto writes = man.action_writes(action);
      for (std::size_t i = 0; i < writes.size(); ++i) {
        if (i) out << ", ";
        out << man.fields().name(writes[i].first) << ":=" << writes[i].second;
      }
    }
    w.output_class = out.str();
    w.left_prob = pl;
    w.right_prob = pr;
    slot = w;
  }

  void walk(Fdd f, Fdd g) {
    if (f == g) return;
    if (left_above && right_above) return;  // already incomparable
    if (man.is_leaf(f) && man.is_leaf(g)) {
      leaf_pair(f, g);
      return;
    }
    // The contribution of a pair is a function of the pair alone: pins were
    // already folded into both sides by assume_eq.
    if (!visited.insert({f.id, g.id}).second) return;
    FieldId tf = 0;
    Value tv = 0;
    bool have = false;
    for (Fdd x : {f, g}) {
      if (man.is_leaf(x)) continue;
      FieldId xf = man.top_field(x);
      Value xv = man.top_value(x);
      if (!have || man.test_less(xf, xv, tf, tv)) {
        tf = xf;
        tv = xv;
        have = true;
      }
    }
    pins.push_back({tf, tv});
    walk(man.assume_eq(f, tf, tv), man.assume_eq(g, tf, tv));
    pins.pop_back();
    walk(man.assume_neq(f, tf, tv), man.assume_neq(g, tf, tv));
  }
};

}  // namespace

OrderResult compare_order_fdd(FddManager& man, Fdd f, Fdd g,
                              const Rat& epsilon) {
  Rat eps = (man.exact(f) && man.exact(g)) ? Rat(0) : epsilon;
  OrderWalker w{man, eps};
  w.walk(f, g);
  OrderResult r;
  if (!w.left_above && !w.right_above) {
    r.order = Order::Equal;
  } else if (w.left_above && w.right_above) {
    r.order = Order::Incomparable;
    r.witness = w.wit_left;
  } else if (w.left_above) {
    r.order = Order::Greater;
    r.witness = w.wit_left;
  } else {
    r.order = Order::Less;
    r.witness = w.wit_right;
  }
  return r;
}

bool canonical_eq(FddManager& man, Fdd f, Fdd g, const Rat& epsilon) {
  if (f == g) return true;
  if (man.exact(f) && man.exact(g)) return false;
  // Epsilon fallback must also compare drop masses; equality of all
  // non-drop entries within eps plus mass conservation nearly does it, but
  // the inexact leaves are only close to stochastic, so check drops too.
  struct EqWalker {
    FddManager& man;
    const Rat& eps;
    bool equal = true;
    std::set<std::pair<uint32_t, uint32_t>> visited;
    void walk(Fdd f, Fdd g) {
      if (!equal || f == g) return;
      if (!visited.insert({f.id, g.id}).second) return;
      if (man.is_leaf(f) && man.is_leaf(g)) {
        std::map<ActionId, std::pair<Rat, Rat>> merged;
        for (const auto& e : man.dist_entries(man.leaf_dist(f)))
          merged[e.action].first = e.prob.value;
        for (const auto& e : man.dist_entries(man.leaf_dist(g)))
          merged[e.action].second = e.prob.value;
        for (auto& [a, pq] : merged)
          if (abs(pq.first - pq.second) > eps) equal = false;
        return;
      }
      FieldId tf = 0;
      Value tv = 0;
      bool have = false;
      for (Fdd x : {f, g}) {
        if (man.is_leaf(x)) continue;
        FieldId xf = man.top_field(x);
        Value xv = man.top_value(x);
        if (!have || man.test_less(xf, xv, tf, tv)) {
          tf = xf;
          tv = xv;
          have = true;
        }
      }
      walk(man.assume_eq(f, tf, tv), man.assume_eq(g, tf, tv));
      walk(man.assume_neq(f, tf, tv), man.assume_neq(g, tf, tv));
    }
  } walker{man, epsilon};
  walker.walk(f, g);
  return walker.equal;
}

bool equivalent(FddManager& man, const ProgPtr& p, const ProgPtr& q,
                const AnalysisOptions& opts) {
  Fdd f = compile(man, p, opts.cfg);
  Fdd g = compile(man, q, opts.cfg);
  return canonical_eq(man, f, g, opts.epsilon);
}

OrderResult compare_order(FddManager& man, const ProgPtr& p, const ProgPtr& q,
                          const AnalysisOptions& opts) {
  Fdd f = compile(man, p, opts.cfg);
  Fdd g = compile(man, q, opts.cfg);
  return compare_order_fdd(man, f, g, opts.epsilon);
}

PacketDist output_distribution(FddManager& man, const ProgPtr& p,
                               const Packet& pk, const AnalysisOptions& opts) {
  Fdd f = compile(man, p, opts.cfg);
  return man.eval(f, pk);
}

bool eval_pred(const FddManager& man, const PredPtr& t, const Packet& pk) {
  switch (t->kind) {
    case Pred::Kind::False:
      return false;
    case Pred::Kind::True:
      return true;
    case Pred::Kind::Test: {
      for (auto& [f, v] : pk.entries)
        if (man.fields().name(f) == t->field) return v == t->value;
      throw ValidationError("packet missing predicate field " + t->field);
    }
    case Pred::Kind::Or:
      return eval_pred(man, t->left, pk) || eval_pred(man, t->right, pk);
    case Pred::Kind::And:
      return eval_pred(man, t->left, pk) && eval_pred(man, t->right, pk);
    case Pred::Kind::Neg:
      return !eval_pred(man, t->left, pk);
  }
  return false;
}

namespace {

// Fills a packet so it is total over the diagram's domain: fields not set
// by the caller default to 0 (the canonical out-of-scope value).
Packet total_packet(const FddManager& man, Fdd f, const Packet& pk) {
  Domain dom = infer_domain(man, f);
  Packet out = pk;
  for (auto& [fld, vals] : dom.values) {
    if (!out.get(fld)) out.set(fld, 0);
  }
  return out;
}

}  // namespace

QueryReport delivery_probability(FddManager& man, const ProgPtr& model,
                                 const std::vector<Packet>& ingress,
                                 const PredPtr& egress,
                                 const AnalysisOptions& opts) {
  if (ingress.empty()) throw ValidationError("empty ingress list");
  Fdd f = compile(man, model, opts.cfg);
  QueryReport rep;
  rep.exact = man.exact(f);
  bool first = true;
  Rat sum(0);
  for (const Packet& pk : ingress) {
    Packet total = total_packet(man, f, pk);
    PacketDist d = man.eval(f, total);
    IngressStats st;
    st.ingress = total;
    Prob delivered;
    for (auto& [out, p] : d.mass)
      if (eval_pred(man, egress, out)) delivered = delivered + p;
    st.delivered = delivered;
    if (first || delivered.value < rep.min_delivery)
      rep.min_delivery = delivered.value;
    sum += delivered.value;
    first = false;
    rep.per_ingress.push_back(std::move(st));
  }
  rep.mean_delivery = sum / Rat(static_cast<long>(ingress.size()));
  return rep;
}

QueryReport hop_stats(FddManager& man, const ProgPtr& model,
                      const std::vector<Packet>& ingress, const PredPtr& egress,
                      const std::string& hops_field, Value max_hops,
                      const AnalysisOptions& opts) {
  if (ingress.empty()) throw ValidationError("empty ingress list");
  Fdd f = compile(man, model, opts.cfg);
  FieldId hops = man.fields().intern(hops_field);
  QueryReport rep;
  rep.exact = man.exact(f);
  bool first = true;
  Rat sum(0);
  std::map<Value, Rat> agg;
  Rat agg_weighted(0), agg_delivered(0);
  for (const Packet& pk : ingress) {
    Packet total = total_packet(man, f, pk);
    PacketDist d = man.eval(f, total);
    IngressStats st;
    st.ingress = total;
    Prob delivered;
    Rat weighted(0);
    for (auto& [out, p] : d.mass) {
      if (!eval_pred(man, egress, out)) continue;
      delivered = delivered + p;
      auto h = out.get(hops);
      Value hv = h ? *h : 0;
      auto [it, fresh] = st.hop_hist.try_emplace(hv, p);
      if (!fresh) it->second = it->second + p;
      weighted += Rat(static_cast<long>(hv)) * p.value;
      if (hv >= max_hops) rep.counter_saturated = true;
    }
    st.delivered = delivered;
    if (delivered.value > 0) st.expected_hops = weighted / delivered.value;
    for (auto& [h, p] : st.hop_hist) agg[h] += p.value;
    agg_weighted += weighted;
    agg_delivered += delivered.value;
    if (first || delivered.value < rep.min_delivery)
      rep.min_delivery = delivered.value;
    sum += delivered.value;
    first = false;
    rep.per_ingress.push_back(std::move(st));
  }
  Rat count(static_cast<long>(ingress.size()));
  rep.mean_delivery = sum / count;
  for (auto& [h, p] : agg) rep.hop_hist[h] = p / count;
  if (agg_delivered > 0) rep.expected_hops = agg_weighted / agg_delivered;
  return rep;
}

}  // namespace pnk
