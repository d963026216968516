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

#ifndef PNK_NETMODEL_HPP_
#define PNK_NETMODEL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnk/fdd.hpp"
#include "pnk/syntax.hpp"

namespace pnk {

enum class NodeKind { Switch, Host };
enum class NodeLevel { None, Edge, Agg, Core };

struct TopoNode {
  std::string name;
  NodeKind kind = NodeKind::Switch;
  NodeLevel level = NodeLevel::None;
  char subtree = 0;  // 'A' or 'B' for the rewired fat trees, else 0
  Value sw = 0;      // switch value in programs; 0 for hosts
  int pod = 0;       // fabric metadata (0 when not applicable)
  int pos = 0;       // index within the pod / core group
};

// Directed link; every physical link appears as an oriented pair.
struct TopoLink {
  uint32_t src, dst;
  uint32_t src_port, dst_port;
  bool failable = false;  // marked by generators (chain) or failure scope
};

struct Topology {
  std::vector<TopoNode> nodes;
  std::vector<TopoLink> links;

  uint32_t node_by_name(const std::string& name) const;
  std::optional<uint32_t> switch_by_value(Value sw) const;
  std::size_t switch_count() const;
  std::size_t host_count() const;
  // Outgoing directed links of a node.
  std::vector<uint32_t> out_links(uint32_t node) const;
};

// DOT dialect: node attrs kind=switch|host, level=edge|agg|core,
// subtree=A|B; edge attrs src_port, dst_port. Every edge line gives one
// direction; generators emit both orientations.
Topology load_dot(const std::string& text);
std::string to_dot(const Topology& topo);

// k-ary fat tree: k pods of k/2 edge and k/2 aggregation switches, (k/2)^2
// cores, k/2 hosts per edge switch. Edge switches are numbered first, so
// switch 1 is the first edge switch of pod 1.
Topology gen_fattree(int k);

// Same node set with the aggregation-to-core wiring alternating between
// pod types A (blocked) and B (staggered).
Topology gen_ab_fattree(int k);

// k diamonds in series; within each diamond the lower branch's last link is
// failable. Hosts h1 and h2 hang off the ends.
Topology gen_chain(int k);

enum class Scheme { Ecmp, F10_0, F10_3, F10_35, Chain };

struct RoutingResult {
  ProgPtr program;  // per-switch case program
  std::vector<std::string> unreachable;  // switches with no route to dst
};

// Builds the forwarding program for a destination switch. Guards on the
// per-port up flags are emitted for failable links only.
RoutingResult routing(Scheme scheme, const Topology& topo, Value dst_sw);

// Marks the failability used by the data-center studies: the downward
// (core to aggregation) direction of every core-agg link. Pass
// all_links=true to widen the scope to every switch-switch link.
void mark_downward_failures(Topology& topo, bool all_links = false);

struct FailureSpec {
  Rat pr;
  std::optional<int> k;  // nullopt means unbounded
};

// Global-flag failure program over the topology's failable links: one
// boolean field per link, named up<src_port>. k=0 sets all
// flags, k=1 emits the (m+1)-way choice, unbounded k the independent
// product, and finite k>=2 the budget-guarded sequence over field "cnt".
ProgPtr failure_program(const FailureSpec& spec, const Topology& topo);

enum class ModelForm { WhileEgress, DoWhileSwitch };

struct ModelSpec {
  ProgPtr policy;
  ProgPtr topo_prog;
  ProgPtr failure;
  PredPtr ingress;
  PredPtr egress;
  ModelForm form = ModelForm::DoWhileSwitch;
  std::vector<std::pair<std::string, Value>> vars;  // var wrapping, outermost first
  std::vector<std::string> reset_fields;  // reassigned 1 at body end
  std::optional<std::pair<std::string, Value>> hop_counter;  // field, bound
};

ProgPtr assemble(const ModelSpec& spec);

// The ideal specification: ingress filter then direct writes, wrapped in
// the same var declarations as the model it is compared against.
ProgPtr teleport(const ModelSpec& spec,
                 std::vector<std::pair<std::string, Value>> dst_writes);

// Saturating increment cascade for a bounded counter field.
ProgPtr increment_cascade(const std::string& field, Value bound);

// --------------------------------------------------------------------------
// Prebuilt studies
// --------------------------------------------------------------------------

// The three-switch running example: switch 1 forwards to switch 2 directly
// (port 2) or around via switch 3 (port 3); the two links out of switch 1
// can fail (flags up2, up3).
struct Sec2Study {
  ProgPtr naive_policy;      // p
  ProgPtr resilient_policy;  // p-hat
  ProgPtr topo_prog;         // t-hat
  PredPtr ingress, egress;
  Topology topo;

  // f in {0,1,2}: no failures; one failure at 25%; independent at 20%.
  ProgPtr failure(int which) const;
  ModelSpec model(bool resilient, int which) const;
  ProgPtr teleport_prog() const;
  std::vector<Packet> ingress_packets(FddManager& man) const;
};
Sec2Study sec2_study();

// Data-center study models over a fat-tree family.
struct DcOptions {
  Scheme scheme = Scheme::F10_0;
  std::optional<int> kfail;  // nullopt = unbounded
  Rat pr = make_rat(1, 4);
  bool hop_counter = false;
  Value hop_bound = 12;
  // Reserved vars are included uniformly when comparing across schemes.
  bool force_cnt_var = false;
  bool force_det_var = false;
};

struct DcStudy {
  ModelSpec spec;
  ProgPtr model;
  ProgPtr teleport_prog;
  PredPtr egress;
  std::vector<std::string> unreachable;
  std::vector<Packet> ingress_packets(FddManager& man) const;

  std::vector<std::pair<Value, Value>> ingress_locs;  // (sw, pt=0)
};
DcStudy dc_study(const Topology& topo, Value dst_sw, const DcOptions& opts);

}  // namespace pnk

#endif  // PNK_NETMODEL_HPP_
