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

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "pnk/analysis.hpp"
#include "pnk/compile.hpp"
#include "pnk/error.hpp"
#include "pnk/netmodel.hpp"
#include "pnk/oracle.hpp"
#include "pnk/parser.hpp"
#include "pnk/prismgen.hpp"

using json = nlohmann::json;
using namespace pnk;
using Clock = std::chrono::steady_clock;

namespace {

struct CommonFlags {
  std::string mode = "exact";
  int jobs = 1;
  uint64_t cap = 10'000'000;
  std::string format = "json";
  uint64_t seed = 0;  // reserved for randomized corpora; semantics-free

  CompileConfig cfg() const {
    CompileConfig c;
    c.mode = mode == "float" ? SolverMode::Float : SolverMode::Exact;
    c.jobs = jobs;
    c.state_cap = cap;
    return c;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--mode", f.mode, "solver mode")
      ->check(CLI::IsMember({"exact", "float"}));
  cmd->add_option("--jobs", f.jobs, "worker count for case compilation")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cap", f.cap, "symbolic state-space cap");
  cmd->add_option("--format", f.format, "output format")
      ->check(CLI::IsMember({"json", "table"}));
  cmd->add_option("--seed", f.seed,
                  "seed for randomized test corpora (never affects results)");
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

Rat parse_rat_flag(const std::string& s) { return rat_from_string(s); }

std::optional<int> parse_kfail(const std::string& s) {
  if (s == "inf") return std::nullopt;
  return std::stoi(s);
}

Scheme parse_scheme(const std::string& s) {
  if (s == "ecmp") return Scheme::Ecmp;
  if (s == "f10_0") return Scheme::F10_0;
  if (s == "f10_3") return Scheme::F10_3;
  if (s == "f10_35") return Scheme::F10_35;
  if (s == "chain") return Scheme::Chain;
  throw ValidationError("unknown scheme: " + s);
}

// Model sources for equiv/order: a .pnk file, or a generated study program:
//   gen:sec2:naive|resilient:f0|f1|f2        the three-switch example
//   gen:sec2:teleport
//   gen:abfattree:K:SCHEME:KFAIL:PR[:teleport]
//   gen:fattree:K:SCHEME:KFAIL:PR[:teleport]
//   gen:chain:K:PFAIL[:teleport]
ProgPtr load_model(const std::string& spec, FieldRanges* ranges) {
  if (spec.rfind("gen:", 0) != 0) {
    ParsedModule m = parse_module(slurp(spec));
    if (ranges) *ranges = m.ranges;
    return m.program;
  }
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 2) throw ValidationError("bad generator spec: " + spec);
  const std::string& kind = parts[1];
  if (kind == "sec2") {
    Sec2Study st = sec2_study();
    if (parts.size() == 3 && parts[2] == "teleport") return st.teleport_prog();
    if (parts.size() != 4) throw ValidationError("bad generator spec: " + spec);
    bool resilient = parts[2] == "resilient";
    int f = parts[3] == "f0" ? 0 : parts[3] == "f1" ? 1 : 2;
    return assemble(st.model(resilient, f));
  }
  if (kind == "fattree" || kind == "abfattree" || kind == "chain") {
    DcOptions opts;
    Topology topo;
    Value dst;
    if (kind == "chain") {
      if (parts.size() < 4) throw ValidationError("bad generator spec: " + spec);
      int k = std::stoi(parts[2]);
      topo = gen_chain(k);
      dst = static_cast<Value>(4 * k);
      opts.scheme = Scheme::Chain;
      opts.pr = parse_rat_flag(parts[3]);
      opts.kfail = std::nullopt;
    } else {
      if (parts.size() < 6) throw ValidationError("bad generator spec: " + spec);
      int k = std::stoi(parts[2]);
      topo = kind == "fattree" ? gen_fattree(k) : gen_ab_fattree(k);
      dst = 1;
      opts.scheme = parse_scheme(parts[3]);
      opts.kfail = parse_kfail(parts[4]);
      opts.pr = parse_rat_flag(parts[5]);
      // Uniform reserved fields so generated models stay comparable.
      opts.force_det_var = true;
      opts.force_cnt_var = opts.kfail && *opts.kfail >= 1;
    }
    DcStudy st = dc_study(topo, dst, opts);
    if (parts.back() == "teleport") return st.teleport_prog;
    return st.model;
  }
  throw ValidationError("bad generator spec: " + spec);
}

json timings_json(double parse_ms, double compile_ms, double query_ms) {
  CompileStats st = compile_stats();
  return json{{"parse_ms", parse_ms},
              {"compile_ms", compile_ms},
              {"solve_ms", st.solve_ns / 1e6},
              {"loop_solves", st.loop_solves},
              {"query_ms", query_ms}};
}

void emit(const CommonFlags& flags, const json& out) {
  if (flags.format == "json") {
    std::cout << out.dump(2) << "\n";
    return;
  }
  std::cout << out["query"].get<std::string>() << " (" <<
      out["mode"].get<std::string>() << ")\n";
  std::cout << "result: " << out["result"].dump() << "\n";
  if (out.contains("witnesses")) {
    std::cout << "witnesses: " << out["witnesses"].dump() << "\n";
  }
  std::cout << "timings: " << out["timings"].dump() << "\n";
}

json report_json(const QueryReport& rep, bool with_hops) {
  json per = json::array();
  for (const auto& st : rep.per_ingress) {
    json e{{"delivered", rat_to_string(st.delivered.value)},
           {"delivered_approx", rat_to_double(st.delivered.value)}};
    if (with_hops) {
      json hist = json::object();
      for (auto& [h, p] : st.hop_hist)
        hist[std::to_string(h)] = rat_to_string(p.value);
      e["hop_hist"] = hist;
      if (st.expected_hops)
        e["expected_hops"] = rat_to_double(*st.expected_hops);
    }
    per.push_back(e);
  }
  json out{{"min", rat_to_string(rep.min_delivery)},
           {"min_approx", rat_to_double(rep.min_delivery)},
           {"mean", rat_to_string(rep.mean_delivery)},
           {"mean_approx", rat_to_double(rep.mean_delivery)},
           {"exact", rep.exact},
           {"per_ingress", per}};
  if (with_hops) {
    json hist = json::object();
    for (auto& [h, p] : rep.hop_hist) hist[std::to_string(h)] = rat_to_double(p);
    out["hop_hist_mean"] = hist;
    if (rep.expected_hops)
      out["expected_hops"] = rat_to_double(*rep.expected_hops);
    out["counter_saturated"] = rep.counter_saturated;
  }
  return out;
}

struct StudyFlags {
  std::string topo = "abfattree";
  int k = 4;
  std::string scheme = "f10_0";
  std::string kfail = "inf";
  std::string pfail = "1/4";
  std::string policy = "resilient";
  int failures = 2;
  Value hops_bound = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--topo", topo, "sec2|chain|fattree|abfattree");
    cmd->add_option("--k", k, "family parameter (arity or chain length)");
    cmd->add_option("--scheme", scheme, "ecmp|f10_0|f10_3|f10_35|chain");
    cmd->add_option("--kfail", kfail, "max simultaneous failures, or inf");
    cmd->add_option("--pfail", pfail, "per-link failure probability");
    cmd->add_option("--policy", policy, "sec2 policy: naive|resilient");
    cmd->add_option("--failures", failures, "sec2 failure preset: 0|1|2");
    cmd->add_option("--hops", hops_bound, "enable the hop counter, bound N");
  }

  // Builds the study model and query inputs.
  struct Built {
    ProgPtr model;
    ProgPtr teleport;
    PredPtr egress;
    std::vector<Packet> ingress;
  };
  Built build(FddManager& man) const {
    if (topo == "sec2") {
      Sec2Study st = sec2_study();
      return {assemble(st.model(policy == "resilient", failures)),
              st.teleport_prog(), st.egress, st.ingress_packets(man)};
    }
    DcOptions opts;
    Topology t;
    Value dst;
    if (topo == "chain") {
      t = gen_chain(k);
      dst = static_cast<Value>(4 * k);
      opts.scheme = Scheme::Chain;
      opts.kfail = std::nullopt;
    } else if (topo == "fattree" || topo == "abfattree") {
      t = topo == "fattree" ? gen_fattree(k) : gen_ab_fattree(k);
      dst = 1;
      opts.scheme = parse_scheme(scheme);
      opts.kfail = parse_kfail(kfail);
    } else {
      throw ValidationError("unknown topology family: " + topo);
    }
    opts.pr = parse_rat_flag(pfail);
    if (hops_bound > 0) {
      opts.hop_counter = true;
      opts.hop_bound = hops_bound;
    }
    DcStudy st = dc_study(t, dst, opts);
    return {st.model, st.teleport_prog, st.egress, st.ingress_packets(man)};
  }
};

int run(int argc, char** argv) {
  CLI::App app{"verifier for probabilistic network programs"};
  app.require_subcommand(1);

  CommonFlags flags;

  // --- compile -------------------------------------------------------------
  auto* c_compile = app.add_subcommand("compile", "compile a program file");
  std::string in_path, matrix_out, dot_out;
  c_compile->add_option("file", in_path, "program file or gen: spec")
      ->required();
  c_compile->add_option("--dump-matrix", matrix_out, "write the matrix dump");
  c_compile->add_option("--dot", dot_out, "write the diagram in DOT form");
  add_common(c_compile, flags);

  // --- equiv / order ---------------------------------------------------
  auto* c_equiv = app.add_subcommand("equiv", "decide program equivalence");
  std::string a_path, b_path;
  c_equiv->add_option("a", a_path, "left program")->required();
  c_equiv->add_option("b", b_path, "right program")->required();
  add_common(c_equiv, flags);

  auto* c_order = app.add_subcommand("order", "compare in the refinement order");
  c_order->add_option("a", a_path, "left program")->required();
  c_order->add_option("b", b_path, "right program")->required();
  add_common(c_order, flags);

  // --- delivery / hops -------------------------------------------------
  StudyFlags study;
  auto* c_delivery =
      app.add_subcommand("delivery", "per-ingress delivery probability");
  study.add(c_delivery);
  add_common(c_delivery, flags);

  auto* c_hops = app.add_subcommand("hops", "hop-count statistics at egress");
  study.add(c_hops);
  add_common(c_hops, flags);

  // --- gen-topo ---------------------------------------------------------
  auto* c_gen = app.add_subcommand("gen-topo", "emit a generated topology");
  std::string family, out_path;
  int gk = 4;
  c_gen->add_option("family", family, "fattree|abfattree|chain")->required();
  c_gen->add_option("--k", gk, "family parameter")->required();
  c_gen->add_option("--out", out_path, "output path (default stdout)");

  // --- export-prism -------------------------------------------------------
  auto* c_prism =
      app.add_subcommand("export-prism", "translate to the model checker");
  std::string query;
  c_prism->add_option("file", in_path, "program file or gen: spec")->required();
  c_prism->add_option("--out", out_path, "output path (default stdout)");
  c_prism->add_option("--query", query,
                      "egress predicate for the reachability query");
  add_common(c_prism, flags);

  // --- benches ---------------------------------------------------------
  auto* c_bchain = app.add_subcommand("bench-chain", "chain family benchmark");
  study.add(c_bchain);
  add_common(c_bchain, flags);
  auto* c_bft = app.add_subcommand("bench-fattree", "fat-tree benchmark");
  study.add(c_bft);
  add_common(c_bft, flags);

  CLI11_PARSE(app, argc, argv);
  AnalysisOptions opts;
  opts.cfg = flags.cfg();

  if (app.got_subcommand(c_compile)) {
    auto t0 = Clock::now();
    FieldRanges ranges;
    ProgPtr p = load_model(in_path, &ranges);
    double parse_ms = ms_since(t0);
    reset_compile_stats();
    auto t1 = Clock::now();
    FddManager man;
    Fdd f = compile(man, p, opts.cfg);
    double compile_ms = ms_since(t1);
    auto t2 = Clock::now();
    json result{{"exact", man.exact(f)}, {"nodes", man.node_count()}};
    if (!matrix_out.empty()) {
      MatrixResult mr = fdd_to_matrix(man, f, opts.cfg.state_cap);
      result["states"] = mr.space.count();
      spit(matrix_out, dump_matrix(mr.matrix));
    }
    if (!dot_out.empty()) spit(dot_out, man.to_dot(f));
    emit(flags, json{{"query", "compile"},
                     {"mode", flags.mode},
                     {"result", result},
                     {"timings", timings_json(parse_ms, compile_ms,
                                              ms_since(t2))}});
    return 0;
  }

  if (app.got_subcommand(c_equiv) || app.got_subcommand(c_order)) {
    auto t0 = Clock::now();
    ProgPtr a = load_model(a_path, nullptr);
    ProgPtr b = load_model(b_path, nullptr);
    double parse_ms = ms_since(t0);
    reset_compile_stats();
    auto t1 = Clock::now();
    FddManager man;
    Fdd fa = compile(man, a, opts.cfg);
    Fdd fb = compile(man, b, opts.cfg);
    double compile_ms = ms_since(t1);
    auto t2 = Clock::now();
    if (app.got_subcommand(c_equiv)) {
      bool eq = canonical_eq(man, fa, fb, opts.epsilon);
      emit(flags, json{{"query", "equiv"},
                       {"mode", flags.mode},
                       {"result", eq},
                       {"timings", timings_json(parse_ms, compile_ms,
                                                ms_since(t2))}});
      return eq ? 0 : 1;
    }
    OrderResult ord = compare_order_fdd(man, fa, fb, opts.epsilon);
    const char* name = ord.order == Order::Equal      ? "equal"
                       : ord.order == Order::Less     ? "less"
                       : ord.order == Order::Greater  ? "greater"
                                                      : "incomparable";
    json out{{"query", "order"},
             {"mode", flags.mode},
             {"result", name},
             {"timings", timings_json(parse_ms, compile_ms, ms_since(t2))}};
    if (ord.witness) {
      out["witnesses"] = json::array({json{
          {"input_class", ord.witness->input_class},
          {"output_class", ord.witness->output_class},
          {"left", rat_to_string(ord.witness->left_prob)},
          {"right", rat_to_string(ord.witness->right_prob)}}});
    }
    emit(flags, out);
    return 0;
  }

  if (app.got_subcommand(c_delivery) || app.got_subcommand(c_hops) ||
      app.got_subcommand(c_bchain) || app.got_subcommand(c_bft)) {
    bool hops_query = app.got_subcommand(c_hops);
    bool bench = app.got_subcommand(c_bchain) || app.got_subcommand(c_bft);
    if (app.got_subcommand(c_bchain)) study.topo = "chain";
    if (app.got_subcommand(c_bft) && study.topo == "chain")
      study.topo = "abfattree";
    if (hops_query && study.hops_bound == 0) study.hops_bound = 12;
    auto t0 = Clock::now();
    FddManager man;
    StudyFlags::Built built = study.build(man);
    double parse_ms = ms_since(t0);
    reset_compile_stats();
    auto t1 = Clock::now();
    Fdd model = compile(man, built.model, opts.cfg);
    double compile_ms = ms_since(t1);
    auto t2 = Clock::now();
    json result;
    if (hops_query) {
      QueryReport rep = hop_stats(man, built.model, built.ingress,
                                  built.egress, "hops", study.hops_bound,
                                  opts);
      result = report_json(rep, true);
    } else {
      QueryReport rep = delivery_probability(man, built.model, built.ingress,
                                             built.egress, opts);
      result = report_json(rep, false);
    }
    if (bench) {
      result["nodes"] = man.node_count();
      bool eq = canonical_eq(man, model, compile(man, built.teleport, opts.cfg),
                             opts.epsilon);
      result["teleport_equivalent"] = eq;
    }
    emit(flags, json{{"query", hops_query ? "hops" : "delivery"},
                     {"mode", flags.mode},
                     {"result", result},
                     {"timings", timings_json(parse_ms, compile_ms,
                                              ms_since(t2))}});
    return 0;
  }

  if (app.got_subcommand(c_gen)) {
    Topology t;
    if (family == "fattree") {
      t = gen_fattree(gk);
    } else if (family == "abfattree") {
      t = gen_ab_fattree(gk);
    } else if (family == "chain") {
      t = gen_chain(gk);
    } else {
      throw ValidationError("unknown topology family: " + family);
    }
    std::string text = to_dot(t);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      spit(out_path, text);
    }
    return 0;
  }

  if (app.got_subcommand(c_prism)) {
    FieldRanges ranges;
    ProgPtr p = load_model(in_path, &ranges);
    GuardedAutomaton a = collapse_blocks(to_automaton(p));
    check_wellformed(a);
    std::map<std::string, Value> pins(ranges.begin(), ranges.end());
    std::string text = emit_text(
        a, pins,
        query.empty() ? std::nullopt : std::optional<std::string>(query));
    if (out_path.empty()) {
      std::cout << text;
    } else {
      spit(out_path, text);
    }
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ResourceError& e) {
    std::cerr << "resource cap exceeded: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
