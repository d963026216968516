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

#include "pnk/netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <queue>
#include <set>
#include <iostream>
#include <sstream>

#include "pnk/error.hpp"

namespace pnk {

// --------------------------------------------------------------------------
// Topology basics
// --------------------------------------------------------------------------

uint32_t Topology::node_by_name(const std::string& name) const {
  for (uint32_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == name) return i;
  throw ValidationError("unknown node: " + name);
}

std::optional<uint32_t> Topology::switch_by_value(Value sw) const {
  for (uint32_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == NodeKind::Switch && nodes[i].sw == sw) return i;
  return std::nullopt;
}

std::size_t Topology::switch_count() const {
  std::size_t n = 0;
  for (const auto& nd : nodes) n += nd.kind == NodeKind::Switch;
  return n;
}

std::size_t Topology::host_count() const {
  return nodes.size() - switch_count();
}

std::vector<uint32_t> Topology::out_links(uint32_t node) const {
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < links.size(); ++i)
    if (links[i].src == node) out.push_back(i);
  return out;
}

namespace {

struct TopoBuilder {
  Topology topo;
  std::map<uint32_t, uint32_t> next_port;

  uint32_t add(std::string name, NodeKind kind, NodeLevel level,
               char subtree = 0, int pod = 0, int pos = 0) {
    TopoNode nd;
    nd.name = std::move(name);
    nd.kind = kind;
    nd.level = level;
    nd.subtree = subtree;
    nd.pod = pod;
    nd.pos = pos;
    topo.nodes.push_back(std::move(nd));
    return static_cast<uint32_t>(topo.nodes.size() - 1);
  }

  // Adds both orientations with fresh ports on each endpoint.
  void link(uint32_t a, uint32_t b, bool failable_ab = false) {
    uint32_t pa = ++next_port[a];
    uint32_t pb = ++next_port[b];
    topo.links.push_back({a, b, pa, pb, failable_ab});
    topo.links.push_back({b, a, pb, pa, false});
  }

  Topology finish() {
    Value sw = 0;
    for (auto& nd : topo.nodes)
      nd.sw = nd.kind == NodeKind::Switch ? ++sw : 0;
    return std::move(topo);
  }
};

std::string level_name(NodeLevel l) {
  switch (l) {
    case NodeLevel::Edge:
      return "edge";
    case NodeLevel::Agg:
      return "agg";
    case NodeLevel::Core:
      return "core";
    default:
      return "";
  }
}

NodeLevel level_from(const std::string& s) {
  if (s == "edge") return NodeLevel::Edge;
  if (s == "agg") return NodeLevel::Agg;
  if (s == "core") return NodeLevel::Core;
  throw ValidationError("unknown level attribute: " + s);
}

std::string port_flag(uint32_t port) { return "up" + std::to_string(port); }

}  // namespace

// --------------------------------------------------------------------------
// Generators
// --------------------------------------------------------------------------

namespace {

Topology gen_tree(int k, bool rewired) {
  if (k < 2 || k % 2 != 0) throw ValidationError("fat-tree arity must be even");
  if (rewired && k < 4)
    throw ValidationError("rewired fat-tree arity must be at least 4");
  const int half = k / 2;
  TopoBuilder b;
  auto pod_type = [&](int pod) -> char {
    return rewired ? (pod % 2 == 1 ? 'A' : 'B') : 0;
  };
  std::vector<std::vector<uint32_t>> edges(k + 1), aggs(k + 1);
  // Edge switches first so switch 1 is edge switch 1 of pod 1.
  for (int pod = 1; pod <= k; ++pod) {
    for (int i = 1; i <= half; ++i) {
      int n = (pod - 1) * half + i;
      edges[pod].push_back(b.add("s" + std::to_string(n), NodeKind::Switch,
                                 NodeLevel::Edge, pod_type(pod), pod, i));
    }
  }
  for (int pod = 1; pod <= k; ++pod) {
    for (int i = 1; i <= half; ++i) {
      aggs[pod].push_back(
          b.add("a" + std::to_string(pod) + "_" + std::to_string(i),
                NodeKind::Switch, NodeLevel::Agg, pod_type(pod), pod, i));
    }
  }
  std::vector<uint32_t> cores;
  for (int c = 1; c <= half * half; ++c)
    cores.push_back(b.add("c" + std::to_string(c), NodeKind::Switch,
                          NodeLevel::Core, 0, 0, c));
  for (int pod = 1; pod <= k; ++pod)
    for (int e = 0; e < half; ++e)
      for (int a = 0; a < half; ++a) b.link(edges[pod][e], aggs[pod][a]);
  for (int pod = 1; pod <= k; ++pod) {
    for (int m = 1; m <= half; ++m) {
      for (int t = 0; t < half; ++t) {
        // Type A pods use the blocked wiring; type B pods stagger their
        // aggregation switches across the blocks.
        int core = pod_type(pod) == 'B' ? m + t * half : (m - 1) * half + t + 1;
        b.link(aggs[pod][m - 1], cores[core - 1]);
      }
    }
  }
  int h = 0;
  for (int pod = 1; pod <= k; ++pod)
    for (int e = 0; e < half; ++e)
      for (int i = 0; i < half; ++i) {
        uint32_t host =
            b.add("h" + std::to_string(++h), NodeKind::Host, NodeLevel::None);
        b.link(edges[pod][e], host);
      }
  return b.finish();
}

}  // namespace

Topology gen_fattree(int k) { return gen_tree(k, false); }
Topology gen_ab_fattree(int k) { return gen_tree(k, true); }

Topology gen_chain(int k) {
  if (k < 1) throw ValidationError("chain length must be positive");
  TopoBuilder b;
  std::vector<uint32_t> sw;
  for (int i = 0; i < 4 * k; ++i)
    sw.push_back(
        b.add("s" + std::to_string(i), NodeKind::Switch, NodeLevel::None));
  uint32_t h1 = b.add("h1", NodeKind::Host, NodeLevel::None);
  uint32_t h2 = b.add("h2", NodeKind::Host, NodeLevel::None);
  b.link(h1, sw[0]);
  for (int i = 0; i < k; ++i) {
    int base = 4 * i;
    b.link(sw[base], sw[base + 1]);
    b.link(sw[base], sw[base + 2]);
    b.link(sw[base + 1], sw[base + 3]);
    // The lower branch's closing link is the one that can fail.
    b.link(sw[base + 2], sw[base + 3], /*failable_ab=*/true);
    if (i + 1 < k) b.link(sw[base + 3], sw[base + 4]);
  }
  b.link(sw[4 * k - 1], h2);
  return b.finish();
}

// --------------------------------------------------------------------------
// DOT ingestion and emission
// --------------------------------------------------------------------------

namespace {

void derive_fabric_metadata(Topology& topo) {
  bool has_levels = false;
  for (auto& nd : topo.nodes)
    has_levels |= nd.level == NodeLevel::Edge || nd.level == NodeLevel::Agg;
  if (!has_levels) return;
  // Pods: connected components of the edge/agg subgraph.
  std::vector<int> comp(topo.nodes.size(), 0);
  int pods = 0;
  for (uint32_t i = 0; i < topo.nodes.size(); ++i) {
    auto lv = topo.nodes[i].level;
    if ((lv != NodeLevel::Edge && lv != NodeLevel::Agg) || comp[i]) continue;
    ++pods;
    std::queue<uint32_t> work;
    work.push(i);
    comp[i] = pods;
    while (!work.empty()) {
      uint32_t v = work.front();
      work.pop();
      for (uint32_t l : topo.out_links(v)) {
        uint32_t w = topo.links[l].dst;
        auto wl = topo.nodes[w].level;
        if ((wl == NodeLevel::Edge || wl == NodeLevel::Agg) && !comp[w]) {
          comp[w] = pods;
          work.push(w);
        }
      }
    }
  }
  std::vector<std::pair<Value, int>> order;
  for (int p = 1; p <= pods; ++p) {
    Value least = UINT32_MAX;
    for (uint32_t i = 0; i < topo.nodes.size(); ++i)
      if (comp[i] == p && topo.nodes[i].level == NodeLevel::Edge)
        least = std::min(least, topo.nodes[i].sw);
    order.push_back({least, p});
  }
  std::sort(order.begin(), order.end());
  std::vector<int> renum(pods + 1, 0);
  for (std::size_t r = 0; r < order.size(); ++r)
    renum[order[r].second] = static_cast<int>(r + 1);
  for (uint32_t i = 0; i < topo.nodes.size(); ++i)
    if (comp[i]) topo.nodes[i].pod = renum[comp[i]];

  // Core indices by switch value; aggregation positions from the least
  // adjacent core (blocked for type A, staggered for type B).
  int cores_total = 0;
  for (auto& nd : topo.nodes)
    if (nd.level == NodeLevel::Core) ++cores_total;
  int half = 1;
  while (half * half < cores_total) ++half;
  std::vector<std::pair<Value, uint32_t>> core_order;
  for (uint32_t i = 0; i < topo.nodes.size(); ++i)
    if (topo.nodes[i].level == NodeLevel::Core)
      core_order.push_back({topo.nodes[i].sw, i});
  std::sort(core_order.begin(), core_order.end());
  for (std::size_t c = 0; c < core_order.size(); ++c)
    topo.nodes[core_order[c].second].pos = static_cast<int>(c + 1);
  for (uint32_t i = 0; i < topo.nodes.size(); ++i) {
    auto& nd = topo.nodes[i];
    if (nd.level != NodeLevel::Agg) continue;
    int least_core = 0;
    for (uint32_t l : topo.out_links(i)) {
      const auto& peer = topo.nodes[topo.links[l].dst];
      if (peer.level == NodeLevel::Core &&
          (least_core == 0 || peer.pos < least_core))
        least_core = peer.pos;
    }
    if (least_core == 0) continue;
    nd.pos = nd.subtree == 'B' ? least_core : (least_core - 1) / half + 1;
  }
  std::map<int, std::vector<uint32_t>> pod_edges;
  for (uint32_t i = 0; i < topo.nodes.size(); ++i)
    if (topo.nodes[i].level == NodeLevel::Edge)
      pod_edges[topo.nodes[i].pod].push_back(i);
  for (auto& [pod, list] : pod_edges) {
    std::sort(list.begin(), list.end(), [&](uint32_t a, uint32_t b) {
      return topo.nodes[a].sw < topo.nodes[b].sw;
    });
    for (std::size_t i = 0; i < list.size(); ++i)
      topo.nodes[list[i]].pos = static_cast<int>(i + 1);
  }
}

std::map<std::string, std::string> parse_attrs(const std::string& s,
                                               int line) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  while (true) {
    skip_ws();
    if (i >= s.size()) break;
    std::size_t eq = s.find('=', i);
    if (eq == std::string::npos)
      throw ParseError("malformed attribute list", line, 1);
    std::string key = s.substr(i, eq - i);
    while (!key.empty() &&
           std::isspace(static_cast<unsigned char>(key.back())))
      key.pop_back();
    i = eq + 1;
    skip_ws();
    std::size_t end = i;
    while (end < s.size() && s[end] != ',') ++end;
    std::string val = s.substr(i, end - i);
    while (!val.empty() &&
           std::isspace(static_cast<unsigned char>(val.back())))
      val.pop_back();
    out[key] = val;
    if (end >= s.size()) break;
    i = end + 1;
  }
  return out;
}

}  // namespace

Topology load_dot(const std::string& text) {
  Topology topo;
  std::map<std::string, uint32_t> names;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Value sw = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t h = line.find("//");
    if (h != std::string::npos) line = line.substr(0, h);
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::size_t last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.empty() || line == "{" || line == "}") continue;
    if (line.rfind("digraph", 0) == 0) continue;
    if (line.back() == ';') line.pop_back();
    std::size_t arrow = line.find("->");
    std::size_t battr = line.find('[');
    std::map<std::string, std::string> attrs;
    if (battr != std::string::npos) {
      std::size_t eattr = line.rfind(']');
      if (eattr == std::string::npos || eattr < battr)
        throw ParseError("unterminated attribute list", lineno, 1);
      attrs = parse_attrs(line.substr(battr + 1, eattr - battr - 1), lineno);
    }
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t");
      std::size_t z = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, z - a + 1);
    };
    if (arrow == std::string::npos) {
      std::string name = trim(
          line.substr(0, battr == std::string::npos ? line.size() : battr));
      if (name.empty()) throw ParseError("missing node name", lineno, 1);
      if (!attrs.count("kind"))
        throw ParseError("node without kind attribute: " + name, lineno, 1);
      if (attrs["kind"] != "host" && attrs["kind"] != "switch")
        throw ParseError("bad kind attribute: " + attrs["kind"], lineno, 1);
      TopoNode nd;
      nd.name = name;
      nd.kind = attrs["kind"] == "host" ? NodeKind::Host : NodeKind::Switch;
      if (attrs.count("level")) nd.level = level_from(attrs["level"]);
      if (attrs.count("subtree")) nd.subtree = attrs["subtree"][0];
      nd.sw = nd.kind == NodeKind::Switch ? ++sw : 0;
      names.emplace(name, static_cast<uint32_t>(topo.nodes.size()));
      topo.nodes.push_back(std::move(nd));
    } else {
      std::string a = trim(line.substr(0, arrow));
      std::string rest = line.substr(arrow + 2);
      std::size_t rb = rest.find('[');
      std::string bname =
          trim(rest.substr(0, rb == std::string::npos ? rest.size() : rb));
      if (!names.count(a) || !names.count(bname))
        throw ParseError("edge references unknown node", lineno, 1);
      if (!attrs.count("src_port") || !attrs.count("dst_port"))
        throw ParseError("edge without src_port/dst_port", lineno, 1);
      TopoLink l;
      l.src = names[a];
      l.dst = names[bname];
      l.src_port = std::stoul(attrs["src_port"]);
      l.dst_port = std::stoul(attrs["dst_port"]);
      l.failable = attrs.count("failable") && attrs["failable"] == "true";
      topo.links.push_back(l);
    }
  }
  // Every directed link needs its reverse orientation, and ports must be
  // unique per node.
  std::set<std::pair<uint32_t, uint32_t>> ports;
  for (const auto& l : topo.links) {
    if (!ports.insert({l.src, l.src_port}).second)
      throw ValidationError("duplicate port " + std::to_string(l.src_port) +
                            " on node " + topo.nodes[l.src].name);
    bool paired = false;
    for (const auto& m : topo.links)
      paired |= m.src == l.dst && m.dst == l.src &&
                m.src_port == l.dst_port && m.dst_port == l.src_port;
    if (!paired) throw ValidationError("dangling link orientation in topology");
  }
  derive_fabric_metadata(topo);
  return topo;
}

std::string to_dot(const Topology& topo) {
  std::ostringstream os;
  os << "digraph net {\n";
  for (const auto& nd : topo.nodes) {
    os << "  " << nd.name << " [kind="
       << (nd.kind == NodeKind::Host ? "host" : "switch");
    if (nd.level != NodeLevel::None) os << ", level=" << level_name(nd.level);
    if (nd.subtree) os << ", subtree=" << nd.subtree;
    os << "];\n";
  }
  for (const auto& l : topo.links) {
    os << "  " << topo.nodes[l.src].name << " -> " << topo.nodes[l.dst].name
       << " [src_port=" << l.src_port << ", dst_port=" << l.dst_port;
    if (l.failable) os << ", failable=true";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

// --------------------------------------------------------------------------
// Routing
// --------------------------------------------------------------------------

namespace {

std::vector<int> switch_distances(const Topology& topo, uint32_t dst_node) {
  std::vector<int> dist(topo.nodes.size(), -1);
  std::queue<uint32_t> work;
  dist[dst_node] = 0;
  work.push(dst_node);
  while (!work.empty()) {
    uint32_t v = work.front();
    work.pop();
    for (uint32_t l : topo.out_links(v)) {
      uint32_t w = topo.links[l].dst;
      if (topo.nodes[w].kind != NodeKind::Switch || dist[w] >= 0) continue;
      dist[w] = dist[v] + 1;
      work.push(w);
    }
  }
  return dist;
}

ProgPtr uniform_ports(const std::vector<uint32_t>& ports) {
  if (ports.empty()) return Prog::drop();
  std::vector<ChoiceBranch> branches;
  Rat w = make_rat(1, static_cast<long>(ports.size()));
  for (uint32_t p : ports) branches.push_back({w, Prog::assign("pt", p)});
  return branches.size() == 1 ? branches[0].prog
                              : Prog::choice(std::move(branches));
}

struct Candidate {
  uint32_t port;
  bool guarded;
};

// Uniform choice over the available candidates, conditioning on the flag of
// each guarded one; `fallback` handles the all-down case.
ProgPtr pick_available(const std::vector<Candidate>& cands, std::size_t i,
                       std::vector<uint32_t> avail, const ProgPtr& fallback) {
  if (i == cands.size()) {
    if (avail.empty()) return fallback;
    return uniform_ports(avail);
  }
  if (!cands[i].guarded) {
    avail.push_back(cands[i].port);
    return pick_available(cands, i + 1, std::move(avail), fallback);
  }
  std::vector<uint32_t> with = avail;
  with.push_back(cands[i].port);
  return Prog::ite(Pred::test(port_flag(cands[i].port), 1),
                   pick_available(cands, i + 1, std::move(with), fallback),
                   pick_available(cands, i + 1, std::move(avail), fallback));
}

struct FabricView {
  const Topology& topo;
  uint32_t dst_node;
  int dst_pod;
  char dst_type;
  int groups;  // aggregation switches per pod
};

uint32_t port_to(const Topology& topo, uint32_t sw_node, uint32_t peer) {
  for (uint32_t l : topo.out_links(sw_node))
    if (topo.links[l].dst == peer) return topo.links[l].src_port;
  throw InternalError("no port between adjacent nodes");
}

// Core forwarding: the unique downward port when its link is up; otherwise
// 3-hop rerouting through an opposite-type pod, then (F10_3,5 only) 5-hop
// rerouting through a same-type pod with the target group flagged.
ProgPtr core_program(const FabricView& fv, uint32_t c, Scheme scheme) {
  const Topology& topo = fv.topo;
  uint32_t primary_link = UINT32_MAX;
  std::vector<uint32_t> opposite, same;
  for (uint32_t l : topo.out_links(c)) {
    const auto& peer = topo.nodes[topo.links[l].dst];
    if (peer.kind != NodeKind::Switch || peer.level != NodeLevel::Agg)
      continue;
    if (peer.pod == fv.dst_pod) {
      primary_link = l;
    } else if ((peer.subtree ? peer.subtree : 'A') == fv.dst_type) {
      same.push_back(l);
    } else {
      opposite.push_back(l);
    }
  }
  if (primary_link == UINT32_MAX)
    throw ValidationError("core switch has no link toward the destination pod");
  const TopoLink& pl = topo.links[primary_link];
  int group = topo.nodes[pl.dst].pos;  // destination-pod agg this core reaches
  ProgPtr take_primary = Prog::assign("pt", pl.src_port);
  ProgPtr on_primary_down = Prog::drop();
  if (scheme == Scheme::F10_3 || scheme == Scheme::F10_35) {
    ProgPtr five_hop = Prog::drop();
    if (scheme == Scheme::F10_35 && !same.empty()) {
      std::vector<int> others;
      for (int g = 1; g <= fv.groups; ++g)
        if (g != group) others.push_back(g);
      std::vector<ChoiceBranch> targets;
      Rat w = make_rat(1, static_cast<long>(others.size()));
      for (int g : others)
        targets.push_back({w, Prog::assign("det", static_cast<Value>(g))});
      ProgPtr set_det = targets.size() == 1 ? targets[0].prog
                                            : Prog::choice(std::move(targets));
      std::vector<Candidate> cands;
      for (uint32_t l : same)
        cands.push_back({topo.links[l].src_port, topo.links[l].failable});
      five_hop = Prog::seq(set_det, pick_available(cands, 0, {}, Prog::drop()));
    }
    std::vector<Candidate> cands;
    for (uint32_t l : opposite)
      cands.push_back({topo.links[l].src_port, topo.links[l].failable});
    on_primary_down =
        cands.empty() ? five_hop : pick_available(cands, 0, {}, five_hop);
  }
  ProgPtr route = pl.failable
                      ? Prog::ite(Pred::test(port_flag(pl.src_port), 1),
                                  take_primary, on_primary_down)
                      : take_primary;
  // A core terminates any detour in progress.
  if (scheme == Scheme::F10_35)
    route = Prog::seq(Prog::assign("det", 0), route);
  return route;
}

ProgPtr agg_program(const FabricView& fv, uint32_t a, Scheme scheme) {
  const Topology& topo = fv.topo;
  const TopoNode& nd = topo.nodes[a];
  if (nd.pod == fv.dst_pod)
    return Prog::assign("pt", port_to(topo, a, fv.dst_node));
  std::vector<uint32_t> core_ports, edge_ports;
  for (uint32_t l : topo.out_links(a)) {
    const auto& peer = topo.nodes[topo.links[l].dst];
    if (peer.kind != NodeKind::Switch) continue;
    if (peer.level == NodeLevel::Core)
      core_ports.push_back(topo.links[l].src_port);
    else if (peer.level == NodeLevel::Edge)
      edge_ports.push_back(topo.links[l].src_port);
  }
  ProgPtr up = uniform_ports(core_ports);
  if (scheme != Scheme::F10_35) return up;
  // Flagged packets climb through their target group, descending first when
  // they arrive at an aggregation switch of another group.
  ProgPtr out = up;
  for (int g = fv.groups; g >= 1; --g) {
    ProgPtr when = g == nd.pos ? up : uniform_ports(edge_ports);
    out = Prog::ite(Pred::test("det", static_cast<Value>(g)), when, out);
  }
  return out;
}

ProgPtr edge_program(const FabricView& fv, uint32_t e, Scheme scheme,
                     const std::vector<int>& dist) {
  const Topology& topo = fv.topo;
  std::vector<uint32_t> next_ports;
  std::map<int, uint32_t> agg_port_by_group;
  for (uint32_t l : topo.out_links(e)) {
    uint32_t peer = topo.links[l].dst;
    const auto& pn = topo.nodes[peer];
    if (pn.kind != NodeKind::Switch) continue;
    if (dist[peer] >= 0 && dist[peer] + 1 == dist[e])
      next_ports.push_back(topo.links[l].src_port);
    if (pn.level == NodeLevel::Agg)
      agg_port_by_group[pn.pos] = topo.links[l].src_port;
  }
  if (next_ports.empty()) return Prog::drop();
  ProgPtr up = uniform_ports(next_ports);
  if (scheme != Scheme::F10_35) return up;
  ProgPtr out = up;
  for (int g = fv.groups; g >= 1; --g) {
    auto it = agg_port_by_group.find(g);
    if (it == agg_port_by_group.end()) continue;
    out = Prog::ite(Pred::test("det", static_cast<Value>(g)),
                    Prog::assign("pt", it->second), out);
  }
  return out;
}

}  // namespace

RoutingResult routing(Scheme scheme, const Topology& topo, Value dst_sw) {
  auto dst_node = topo.switch_by_value(dst_sw);
  if (!dst_node) throw ValidationError("destination switch not in topology");
  bool f10 = scheme == Scheme::F10_3 || scheme == Scheme::F10_35;
  if (f10 && topo.nodes[*dst_node].level != NodeLevel::Edge)
    throw ValidationError("F10 schemes route to an edge switch");
  std::vector<int> dist = switch_distances(topo, *dst_node);
  RoutingResult result;
  FabricView fv{topo, *dst_node, topo.nodes[*dst_node].pod,
                topo.nodes[*dst_node].subtree
                    ? topo.nodes[*dst_node].subtree
                    : 'A',
                0};
  for (const auto& nd : topo.nodes)
    if (nd.level == NodeLevel::Agg && nd.pod == fv.dst_pod) ++fv.groups;

  std::vector<std::pair<Value, uint32_t>> switches;
  for (uint32_t i = 0; i < topo.nodes.size(); ++i)
    if (topo.nodes[i].kind == NodeKind::Switch && i != *dst_node)
      switches.push_back({topo.nodes[i].sw, i});
  std::sort(switches.begin(), switches.end());

  std::vector<CaseBranch> cases;
  for (auto& [sw, i] : switches) {
    const TopoNode& nd = topo.nodes[i];
    ProgPtr body;
    if (dist[i] < 0) {
      result.unreachable.push_back(nd.name);
      body = Prog::drop();
    } else if (f10 && nd.level == NodeLevel::Core) {
      body = core_program(fv, i, scheme);
    } else if (f10 && nd.level == NodeLevel::Agg) {
      body = agg_program(fv, i, scheme);
    } else if (f10 && nd.level == NodeLevel::Edge) {
      body = edge_program(fv, i, scheme, dist);
    } else {
      std::vector<Candidate> cands;
      for (uint32_t l : topo.out_links(i)) {
        uint32_t peer = topo.links[l].dst;
        if (topo.nodes[peer].kind != NodeKind::Switch) continue;
        if (dist[peer] >= 0 && dist[peer] + 1 == dist[i])
          cands.push_back({topo.links[l].src_port, topo.links[l].failable});
      }
      body = pick_available(cands, 0, {}, Prog::drop());
    }
    cases.push_back({Pred::test("sw", sw), body});
  }
  result.program = Prog::case_of(std::move(cases));
  return result;
}

void mark_downward_failures(Topology& topo, bool all_links) {
  for (auto& l : topo.links) {
    const auto& src = topo.nodes[l.src];
    const auto& dst = topo.nodes[l.dst];
    if (src.kind != NodeKind::Switch || dst.kind != NodeKind::Switch) continue;
    if (all_links) {
      l.failable = true;
    } else if (src.level == NodeLevel::Core && dst.level == NodeLevel::Agg) {
      l.failable = true;
    }
  }
}

// --------------------------------------------------------------------------
// Failure programs
// --------------------------------------------------------------------------

namespace {

PredPtr budget_left(int k) {
  PredPtr out = Pred::test("cnt", 0);
  for (int i = 1; i < k; ++i)
    out = Pred::disj(out, Pred::test("cnt", static_cast<Value>(i)));
  return out;
}

ProgPtr sample_flag(const std::string& flag, const Rat& pr,
                    std::optional<int> k) {
  ProgPtr up = Prog::assign(flag, 1);
  if (!k) return Prog::choice2(Rat(1) - pr, up, Prog::assign(flag, 0));
  ProgPtr down = Prog::seq(Prog::assign(flag, 0),
                           increment_cascade("cnt", static_cast<Value>(*k)));
  return Prog::ite(budget_left(*k), Prog::choice2(Rat(1) - pr, up, down), up);
}

}  // namespace

ProgPtr increment_cascade(const std::string& field, Value bound) {
  ProgPtr out = Prog::skip();  // saturates at the bound
  for (Value v = bound; v-- > 0;)
    out = Prog::ite(Pred::test(field, v), Prog::assign(field, v + 1), out);
  return out;
}

ProgPtr failure_program(const FailureSpec& spec, const Topology& topo) {
  if (spec.pr < 0 || spec.pr > 1)
    throw ValidationError("failure probability outside [0,1]");
  std::vector<uint32_t> failable;
  for (uint32_t l = 0; l < topo.links.size(); ++l)
    if (topo.links[l].failable) failable.push_back(l);
  if (failable.empty() && spec.k.value_or(1) != 0)
    throw ValidationError(
        "failure model over a topology with no failable links");
  std::set<uint32_t> seen_ports;
  bool ambiguous = false;
  for (uint32_t l : failable)
    ambiguous |= !seen_ports.insert(topo.links[l].src_port).second;
  std::vector<std::string> flags;
  for (uint32_t l : failable) {
    const auto& link = topo.links[l];
    flags.push_back(ambiguous
                        ? "up_s" + std::to_string(topo.nodes[link.src].sw) +
                              "p" + std::to_string(link.src_port)
                        : port_flag(link.src_port));
  }
  long m = static_cast<long>(failable.size());
  if (spec.k && *spec.k == 0) {
    std::vector<ProgPtr> parts;
    for (auto& f : flags) parts.push_back(Prog::assign(f, 1));
    return Prog::seq_all(std::move(parts));
  }
  if (spec.k && *spec.k == 1) {
    // (m+1)-way choice: each link fails alone with probability pr.
    if (Rat(m) * spec.pr > 1)
      throw ValidationError("single-failure model needs m*pr <= 1");
    std::vector<ChoiceBranch> branches;
    std::vector<ProgPtr> all_up;
    for (auto& f : flags) all_up.push_back(Prog::assign(f, 1));
    branches.push_back({Rat(1) - Rat(m) * spec.pr, Prog::seq_all(all_up)});
    for (long i = 0; i < m; ++i) {
      std::vector<ProgPtr> parts;
      for (long j = 0; j < m; ++j)
        parts.push_back(Prog::assign(flags[j], i == j ? 0 : 1));
      branches.push_back({spec.pr, Prog::seq_all(std::move(parts))});
    }
    return Prog::choice(std::move(branches));
  }
  std::optional<int> k = spec.k;
  if (k && *k > m) {
    std::cerr << "warning: failure budget " << *k << " exceeds the "
              << m << " failable links; clamping\n";
    k = static_cast<int>(m);
  }
  std::vector<ProgPtr> parts;
  for (auto& f : flags) parts.push_back(sample_flag(f, spec.pr, k));
  return Prog::seq_all(std::move(parts));
}

// --------------------------------------------------------------------------
// Model assembly
// --------------------------------------------------------------------------

namespace {

ProgPtr topo_program(const Topology& topo, ModelForm form) {
  ProgPtr out = Prog::drop();
  for (std::size_t i = topo.links.size(); i-- > 0;) {
    const auto& l = topo.links[i];
    const auto& src = topo.nodes[l.src];
    const auto& dst = topo.nodes[l.dst];
    if (src.kind != NodeKind::Switch || dst.kind != NodeKind::Switch) continue;
    PredPtr guard =
        Pred::conj(Pred::test("sw", src.sw), Pred::test("pt", l.src_port));
    if (l.failable)
      guard = Pred::conj(guard, Pred::test(port_flag(l.src_port), 1));
    // While-form models use arrival ports; switch-destination models park
    // arriving packets at the canonical position 0.
    ProgPtr move = Prog::seq(
        Prog::assign("sw", dst.sw),
        Prog::assign("pt", form == ModelForm::WhileEgress ? l.dst_port : 0));
    out = Prog::ite(guard, move, out);
  }
  return out;
}

}  // namespace

ProgPtr assemble(const ModelSpec& spec) {
  ProgPtr hop_init, hop_inc;
  if (spec.hop_counter) {
    hop_init = Prog::assign(spec.hop_counter->first, 0);
    hop_inc =
        increment_cascade(spec.hop_counter->first, spec.hop_counter->second);
  }
  ProgPtr core;
  if (spec.form == ModelForm::WhileEgress) {
    // in; f; p; while !out do (t; f; p)
    std::vector<ProgPtr> body{spec.topo_prog};
    if (hop_inc) body.push_back(hop_inc);
    body.push_back(spec.failure);
    body.push_back(spec.policy);
    std::vector<ProgPtr> head{Prog::filter(spec.ingress)};
    if (hop_init) head.push_back(hop_init);
    head.push_back(spec.failure);
    head.push_back(spec.policy);
    head.push_back(Prog::while_loop(Pred::neg(spec.egress),
                                    Prog::seq_all(std::move(body))));
    core = Prog::seq_all(std::move(head));
  } else {
    // in; do (f; p; t) while !out
    std::vector<ProgPtr> body{spec.failure, spec.policy, spec.topo_prog};
    if (hop_inc) body.push_back(hop_inc);
    for (const auto& f : spec.reset_fields) body.push_back(Prog::assign(f, 1));
    std::vector<ProgPtr> head{Prog::filter(spec.ingress)};
    if (hop_init) head.push_back(hop_init);
    head.push_back(Prog::do_while(Prog::seq_all(std::move(body)),
                                  Pred::neg(spec.egress)));
    core = Prog::seq_all(std::move(head));
  }
  for (auto it = spec.vars.rbegin(); it != spec.vars.rend(); ++it)
    core = Prog::var_in(it->first, it->second, core);
  return core;
}

ProgPtr teleport(const ModelSpec& spec,
                 std::vector<std::pair<std::string, Value>> dst_writes) {
  std::vector<ProgPtr> parts{Prog::filter(spec.ingress)};
  for (auto& [f, v] : dst_writes) parts.push_back(Prog::assign(f, v));
  ProgPtr core = Prog::seq_all(std::move(parts));
  for (auto it = spec.vars.rbegin(); it != spec.vars.rend(); ++it)
    core = Prog::var_in(it->first, it->second, core);
  return core;
}

// --------------------------------------------------------------------------
// The three-switch running example
// --------------------------------------------------------------------------

Sec2Study sec2_study() {
  Sec2Study st;
  TopoBuilder b;
  uint32_t s1 = b.add("s1", NodeKind::Switch, NodeLevel::None);
  uint32_t s2 = b.add("s2", NodeKind::Switch, NodeLevel::None);
  uint32_t s3 = b.add("s3", NodeKind::Switch, NodeLevel::None);
  uint32_t hsrc = b.add("hsrc", NodeKind::Host, NodeLevel::None);
  uint32_t hdst = b.add("hdst", NodeKind::Host, NodeLevel::None);
  b.link(s1, hsrc);                        // s1 port 1: ingress
  b.link(s1, s2, /*failable_ab=*/true);    // s1 port 2 -> s2 port 1
  b.link(s2, hdst);                        // s2 port 2: egress
  b.link(s1, s3, /*failable_ab=*/true);    // s1 port 3 -> s3 port 1
  b.link(s3, s2);                          // s3 port 2 -> s2 port 3
  st.topo = b.finish();

  st.ingress = Pred::conj(Pred::test("sw", 1), Pred::test("pt", 1));
  st.egress = Pred::conj(Pred::test("sw", 2), Pred::test("pt", 2));

  st.naive_policy = Prog::ite(
      Pred::test("sw", 1), Prog::assign("pt", 2),
      Prog::ite(Pred::test("sw", 2), Prog::assign("pt", 2), Prog::drop()));
  // The resilient switch-1 rule falls back to the detour port when its
  // primary link is down; switches 2 and 3 need no fallback.
  ProgPtr p1 = Prog::ite(
      Pred::test("up2", 1), Prog::assign("pt", 2),
      Prog::ite(Pred::test("up2", 0), Prog::assign("pt", 3), Prog::drop()));
  st.resilient_policy = Prog::ite(
      Pred::test("sw", 1), p1,
      Prog::ite(Pred::test("sw", 2), Prog::assign("pt", 2),
                Prog::assign("pt", 2)));
  st.topo_prog = topo_program(st.topo, ModelForm::WhileEgress);
  return st;
}

ProgPtr Sec2Study::failure(int which) const {
  FailureSpec spec;
  switch (which) {
    case 0:
      spec.pr = Rat(0);
      spec.k = 0;
      break;
    case 1:
      spec.pr = make_rat(1, 4);
      spec.k = 1;
      break;
    case 2:
      spec.pr = make_rat(1, 5);
      spec.k = std::nullopt;
      break;
    default:
      throw ValidationError("no such preset failure model");
  }
  return failure_program(spec, topo);
}

ModelSpec Sec2Study::model(bool resilient, int which) const {
  ModelSpec spec;
  spec.policy = resilient ? resilient_policy : naive_policy;
  spec.topo_prog = topo_prog;
  spec.failure = failure(which);
  spec.ingress = ingress;
  spec.egress = egress;
  spec.form = ModelForm::WhileEgress;
  spec.vars = {{"up2", 1}, {"up3", 1}};
  return spec;
}

ProgPtr Sec2Study::teleport_prog() const {
  return teleport(model(true, 0), {{"sw", 2}, {"pt", 2}});
}

std::vector<Packet> Sec2Study::ingress_packets(FddManager& man) const {
  Packet pk;
  pk.set(man.fields().intern("sw"), 1);
  pk.set(man.fields().intern("pt"), 1);
  return {pk};
}

// --------------------------------------------------------------------------
// Data-center studies
// --------------------------------------------------------------------------

DcStudy dc_study(const Topology& topo_in, Value dst_sw, const DcOptions& opts) {
  Topology topo = topo_in;
  bool chain = opts.scheme == Scheme::Chain;
  if (!chain) mark_downward_failures(topo);
  RoutingResult rr = routing(opts.scheme, topo, dst_sw);

  DcStudy st;
  st.unreachable = rr.unreachable;

  std::set<uint32_t> flag_ports;
  std::set<Value> failure_switches;
  for (const auto& l : topo.links) {
    if (!l.failable) continue;
    flag_ports.insert(l.src_port);
    failure_switches.insert(topo.nodes[l.src].sw);
  }

  ModelSpec spec;
  spec.policy = rr.program;
  spec.topo_prog = topo_program(topo, ModelForm::DoWhileSwitch);
  spec.form = ModelForm::DoWhileSwitch;
  spec.egress = Pred::test("sw", dst_sw);

  bool failures_active = (!opts.kfail || *opts.kfail > 0) && !flag_ports.empty();
  if (failures_active) {
    ProgPtr f = Prog::skip();
    for (auto it = failure_switches.rbegin(); it != failure_switches.rend();
         ++it) {
      Value sw = *it;
      uint32_t node = *topo.switch_by_value(sw);
      std::vector<ProgPtr> samples;
      for (uint32_t l : topo.out_links(node)) {
        if (!topo.links[l].failable) continue;
        samples.push_back(sample_flag(port_flag(topo.links[l].src_port),
                                      opts.pr, opts.kfail));
      }
      f = Prog::ite(Pred::test("sw", sw), Prog::seq_all(std::move(samples)), f);
    }
    spec.failure = f;
    for (uint32_t p : flag_ports) spec.reset_fields.push_back(port_flag(p));
  } else {
    spec.failure = Prog::skip();
  }

  for (uint32_t p : flag_ports) spec.vars.push_back({port_flag(p), 1});
  bool want_cnt =
      (failures_active && opts.kfail && *opts.kfail >= 1) || opts.force_cnt_var;
  if (want_cnt) spec.vars.push_back({"cnt", 0});
  if (opts.scheme == Scheme::F10_35 || opts.force_det_var)
    spec.vars.push_back({"det", 0});
  if (opts.hop_counter) spec.hop_counter = {{"hops", opts.hop_bound}};

  std::vector<Value> in_sw;
  if (chain) {
    in_sw.push_back(topo.nodes[topo.node_by_name("s0")].sw);
  } else {
    for (const auto& nd : topo.nodes)
      if (nd.kind == NodeKind::Switch && nd.level == NodeLevel::Edge &&
          nd.sw != dst_sw)
        in_sw.push_back(nd.sw);
    std::sort(in_sw.begin(), in_sw.end());
  }
  PredPtr ingress;
  for (Value sw : in_sw) {
    PredPtr here = Pred::conj(Pred::test("sw", sw), Pred::test("pt", 0));
    ingress = ingress ? Pred::disj(ingress, here) : here;
  }
  spec.ingress = ingress;
  for (Value sw : in_sw) st.ingress_locs.push_back({sw, 0});

  st.spec = spec;
  st.model = assemble(spec);
  st.teleport_prog = teleport(spec, {{"sw", dst_sw}, {"pt", 0}});
  st.egress = spec.egress;
  return st;
}

std::vector<Packet> DcStudy::ingress_packets(FddManager& man) const {
  std::vector<Packet> out;
  for (auto& [sw, pt] : ingress_locs) {
    Packet pk;
    pk.set(man.fields().intern("sw"), sw);
    pk.set(man.fields().intern("pt"), pt);
    out.push_back(std::move(pk));
  }
  return out;
}

}  // namespace pnk
