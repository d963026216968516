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

#include "pnk/syntax.hpp"

#include <sstream>
#include <utility>

#include "pnk/error.hpp"

namespace pnk {

// --------------------------------------------------------------------------
// Predicate factories
// --------------------------------------------------------------------------

namespace {
PredPtr mk_pred(Pred p) { return std::make_shared<const Pred>(std::move(p)); }
ProgPtr mk_prog(Prog p) { return std::make_shared<const Prog>(std::move(p)); }
}  // namespace

PredPtr Pred::falsum() {
  static const PredPtr f = mk_pred({Pred::Kind::False});
  return f;
}

PredPtr Pred::verum() {
  static const PredPtr t = mk_pred({Pred::Kind::True});
  return t;
}

PredPtr Pred::test(std::string field, Value value) {
  Pred p{Kind::Test};
  p.field = std::move(field);
  p.value = value;
  return mk_pred(std::move(p));
}

PredPtr Pred::disj(PredPtr a, PredPtr b) {
  Pred p{Kind::Or};
  p.left = std::move(a);
  p.right = std::move(b);
  return mk_pred(std::move(p));
}

PredPtr Pred::conj(PredPtr a, PredPtr b) {
  Pred p{Kind::And};
  p.left = std::move(a);
  p.right = std::move(b);
  return mk_pred(std::move(p));
}

PredPtr Pred::neg(PredPtr a) {
  Pred p{Kind::Neg};
  p.left = std::move(a);
  return mk_pred(std::move(p));
}

bool pred_equal(const PredPtr& a, const PredPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case Pred::Kind::False:
    case Pred::Kind::True:
      return true;
    case Pred::Kind::Test:
      return a->field == b->field && a->value == b->value;
    case Pred::Kind::Neg:
      return pred_equal(a->left, b->left);
    case Pred::Kind::Or:
    case Pred::Kind::And:
      return pred_equal(a->left, b->left) && pred_equal(a->right, b->right);
  }
  return false;
}

// --------------------------------------------------------------------------
// Program factories
// --------------------------------------------------------------------------

ProgPtr Prog::filter(PredPtr p) {
  Prog q{Kind::Filter};
  q.pred = std::move(p);
  return mk_prog(std::move(q));
}

ProgPtr Prog::skip() {
  static const ProgPtr s = filter(Pred::verum());
  return s;
}

ProgPtr Prog::drop() {
  static const ProgPtr d = filter(Pred::falsum());
  return d;
}

ProgPtr Prog::assign(std::string field, Value value) {
  Prog q{Kind::Assign};
  q.field = std::move(field);
  q.value = value;
  return mk_prog(std::move(q));
}

ProgPtr Prog::seq(ProgPtr a, ProgPtr b) {
  Prog q{Kind::Seq};
  q.left = std::move(a);
  q.right = std::move(b);
  return mk_prog(std::move(q));
}

ProgPtr Prog::seq_all(std::vector<ProgPtr> parts) {
  if (parts.empty()) return skip();
  ProgPtr out = parts.back();
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it)
    out = seq(*it, out);
  return out;
}

ProgPtr Prog::choice(std::vector<ChoiceBranch> branches) {
  if (branches.empty()) throw ValidationError("empty choice");
  Rat sum(0);
  for (const auto& b : branches) {
    if (b.prob < 0 || b.prob > 1)
      throw ValidationError("choice probability outside [0,1]: " +
                            rat_to_string(b.prob));
    sum += b.prob;
  }
  if (sum != 1)
    throw ValidationError("choice probabilities sum to " + rat_to_string(sum) +
                          ", expected 1");
  Prog q{Kind::Choice};
  q.branches = std::move(branches);
  return mk_prog(std::move(q));
}

ProgPtr Prog::choice2(const Rat& r, ProgPtr p, ProgPtr q) {
  return choice({{r, std::move(p)}, {Rat(1) - r, std::move(q)}});
}

ProgPtr Prog::ite(PredPtr a, ProgPtr p, ProgPtr q) {
  Prog out{Kind::If};
  out.pred = std::move(a);
  out.left = std::move(p);
  out.right = std::move(q);
  return mk_prog(std::move(out));
}

ProgPtr Prog::while_loop(PredPtr a, ProgPtr body) {
  Prog out{Kind::While};
  out.pred = std::move(a);
  out.left = std::move(body);
  return mk_prog(std::move(out));
}

ProgPtr Prog::do_while(ProgPtr body, PredPtr a) {
  Prog out{Kind::DoWhile};
  out.pred = std::move(a);
  out.left = std::move(body);
  return mk_prog(std::move(out));
}

ProgPtr Prog::case_of(std::vector<CaseBranch> cases) {
  if (cases.empty()) throw ValidationError("empty case");
  Prog out{Kind::Case};
  out.cases = std::move(cases);
  return mk_prog(std::move(out));
}

ProgPtr Prog::var_in(std::string field, Value value, ProgPtr body) {
  Prog out{Kind::VarIn};
  out.field = std::move(field);
  out.value = value;
  out.left = std::move(body);
  return mk_prog(std::move(out));
}

ProgPtr Prog::union_of(ProgPtr a, ProgPtr b) {
  Prog out{Kind::Union};
  out.left = std::move(a);
  out.right = std::move(b);
  return mk_prog(std::move(out));
}

ProgPtr Prog::star(ProgPtr a) {
  Prog out{Kind::Star};
  out.left = std::move(a);
  return mk_prog(std::move(out));
}

bool prog_equal(const ProgPtr& a, const ProgPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case Prog::Kind::Filter:
      return pred_equal(a->pred, b->pred);
    case Prog::Kind::Assign:
      return a->field == b->field && a->value == b->value;
    case Prog::Kind::Seq:
    case Prog::Kind::Union:
      return prog_equal(a->left, b->left) && prog_equal(a->right, b->right);
    case Prog::Kind::Choice: {
      if (a->branches.size() != b->branches.size()) return false;
      for (std::size_t i = 0; i < a->branches.size(); ++i) {
        if (a->branches[i].prob != b->branches[i].prob ||
            !prog_equal(a->branches[i].prog, b->branches[i].prog))
          return false;
      }
      return true;
    }
    case Prog::Kind::If:
      return pred_equal(a->pred, b->pred) && prog_equal(a->left, b->left) &&
             prog_equal(a->right, b->right);
    case Prog::Kind::While:
    case Prog::Kind::DoWhile:
      return pred_equal(a->pred, b->pred) && prog_equal(a->left, b->left);
    case Prog::Kind::Case: {
      if (a->cases.size() != b->cases.size()) return false;
      for (std::size_t i = 0; i < a->cases.size(); ++i) {
        if (!pred_equal(a->cases[i].guard, b->cases[i].guard) ||
            !prog_equal(a->cases[i].body, b->cases[i].body))
          return false;
      }
      return true;
    }
    case Prog::Kind::VarIn:
      return a->field == b->field && a->value == b->value &&
             prog_equal(a->left, b->left);
    case Prog::Kind::Star:
      return prog_equal(a->left, b->left);
  }
  return false;
}

// --------------------------------------------------------------------------
// Pretty printing (emits the concrete grammar; see parser.cpp)
// --------------------------------------------------------------------------

namespace {

// Predicate precedence: Or < And < Neg/atom.
void print_pred(std::ostream& os, const PredPtr& p, int min_level) {
  int level;
  switch (p->kind) {
    case Pred::Kind::Or:
      level = 0;
      break;
    case Pred::Kind::And:
      level = 1;
      break;
    default:
      level = 2;
      break;
  }
  bool paren = level < min_level;
  if (paren) os << "(";
  switch (p->kind) {
    case Pred::Kind::False:
      os << "false";
      break;
    case Pred::Kind::True:
      os << "true";
      break;
    case Pred::Kind::Test:
      os << p->field << "=" << p->value;
      break;
    case Pred::Kind::Or:
      print_pred(os, p->left, 0);
      os << " | ";
      print_pred(os, p->right, 1);
      break;
    case Pred::Kind::And:
      print_pred(os, p->left, 1);
      os << " & ";
      print_pred(os, p->right, 2);
      break;
    case Pred::Kind::Neg:
      os << "!";
      print_pred(os, p->left, 2);
      break;
  }
  if (paren) os << ")";
}

bool is_skip(const ProgPtr& p) {
  return p->kind == Prog::Kind::Filter && p->pred->kind == Pred::Kind::True;
}
bool is_drop(const ProgPtr& p) {
  return p->kind == Prog::Kind::Filter && p->pred->kind == Pred::Kind::False;
}

// Program precedence: choice2 < seq < atom.
void print_prog(std::ostream& os, const ProgPtr& p, int min_level) {
  // Binary choices print as `p +[r] q`; other arities as choice{...}.
  int level;
  switch (p->kind) {
    case Prog::Kind::Choice:
      level = p->branches.size() == 2 ? 0 : 2;
      break;
    case Prog::Kind::Seq:
    case Prog::Kind::Union:
      level = 1;
      break;
    default:
      level = 2;
      break;
  }
  bool paren = level < min_level;
  if (paren) os << "(";
  switch (p->kind) {
    case Prog::Kind::Filter:
      if (is_skip(p)) {
        os << "skip";
      } else if (is_drop(p)) {
        os << "drop";
      } else if (p->pred->kind == Pred::Kind::Test ||
                 p->pred->kind == Pred::Kind::Neg) {
        print_pred(os, p->pred, 2);
      } else {
        os << "(";
        print_pred(os, p->pred, 0);
        os << ")";
      }
      break;
    case Prog::Kind::Assign:
      os << p->field << ":=" << p->value;
      break;
    case Prog::Kind::Seq:
      print_prog(os, p->left, 2);
      os << "; ";
      print_prog(os, p->right, 1);
      break;
    case Prog::Kind::Choice:
      if (p->branches.size() == 2) {
        print_prog(os, p->branches[0].prog, 1);
        os << " +[" << rat_to_string(p->branches[0].prob) << "] ";
        print_prog(os, p->branches[1].prog, 1);
      } else {
        os << "choice { ";
        for (const auto& b : p->branches) {
          os << rat_to_string(b.prob) << " -> ";
          print_prog(os, b.prog, 0);
          os << ", ";
        }
        os << "}";
      }
      break;
    case Prog::Kind::If:
      os << "if ";
      print_pred(os, p->pred, 0);
      os << " then { ";
      print_prog(os, p->left, 0);
      os << " } else { ";
      print_prog(os, p->right, 0);
      os << " }";
      break;
    case Prog::Kind::While:
      os << "while ";
      print_pred(os, p->pred, 0);
      os << " do { ";
      print_prog(os, p->left, 0);
      os << " }";
      break;
    case Prog::Kind::DoWhile:
      os << "do { ";
      print_prog(os, p->left, 0);
      os << " } while ";
      print_pred(os, p->pred, 1);
      break;
    case Prog::Kind::Case:
      os << "case { ";
      for (const auto& c : p->cases) {
        print_pred(os, c.guard, 0);
        os << " -> ";
        print_prog(os, c.body, 0);
        os << " | ";
      }
      os << "}";
      break;
    case Prog::Kind::VarIn:
      os << "var " << p->field << ":=" << p->value << " in { ";
      print_prog(os, p->left, 0);
      os << " }";
      break;
    case Prog::Kind::Union:
      print_prog(os, p->left, 2);
      os << " ?& ";  // not surface syntax; oracle-internal
      print_prog(os, p->right, 1);
      break;
    case Prog::Kind::Star:
      print_prog(os, p->left, 2);
      os << "?*";  // not surface syntax; oracle-internal
      break;
  }
  if (paren) os << ")";
}

}  // namespace

std::string to_string(const PredPtr& p) {
  std::ostringstream os;
  print_pred(os, p, 0);
  return os.str();
}

std::string to_string(const ProgPtr& p) {
  std::ostringstream os;
  print_prog(os, p, 0);
  return os.str();
}

// --------------------------------------------------------------------------
// Desugaring
// --------------------------------------------------------------------------

ProgPtr desugar(const ProgPtr& p) {
  switch (p->kind) {
    case Prog::Kind::Filter:
    case Prog::Kind::Assign:
      return p;
    case Prog::Kind::Seq: {
      auto l = desugar(p->left), r = desugar(p->right);
      if (l == p->left && r == p->right) return p;
      return Prog::seq(l, r);
    }
    case Prog::Kind::Union: {
      auto l = desugar(p->left), r = desugar(p->right);
      if (l == p->left && r == p->right) return p;
      return Prog::union_of(l, r);
    }
    case Prog::Kind::Star: {
      auto l = desugar(p->left);
      if (l == p->left) return p;
      return Prog::star(l);
    }
    case Prog::Kind::Choice: {
      std::vector<ChoiceBranch> bs;
      bool changed = false;
      for (const auto& b : p->branches) {
        auto d = desugar(b.prog);
        changed |= d != b.prog;
        bs.push_back({b.prob, d});
      }
      if (!changed) return p;
      return Prog::choice(std::move(bs));
    }
    case Prog::Kind::If: {
      auto l = desugar(p->left), r = desugar(p->right);
      if (l == p->left && r == p->right) return p;
      return Prog::ite(p->pred, l, r);
    }
    case Prog::Kind::While: {
      auto l = desugar(p->left);
      if (l == p->left) return p;
      return Prog::while_loop(p->pred, l);
    }
    case Prog::Kind::DoWhile: {
      // do p while a  =>  p; while a do p
      auto body = desugar(p->left);
      return Prog::seq(body, Prog::while_loop(p->pred, body));
    }
    case Prog::Kind::Case: {
      std::vector<CaseBranch> cs;
      bool changed = false;
      for (const auto& c : p->cases) {
        auto d = desugar(c.body);
        changed |= d != c.body;
        cs.push_back({c.guard, d});
      }
      if (!changed) return p;
      return Prog::case_of(std::move(cs));
    }
    case Prog::Kind::VarIn: {
      // var f:=n in p  =>  f:=n; p; f:=0
      auto body = desugar(p->left);
      return Prog::seq(Prog::assign(p->field, p->value),
                       Prog::seq(body, Prog::assign(p->field, 0)));
    }
  }
  throw InternalError("desugar: unhandled node");
}

int ast_size(const ProgPtr& p) {
  int n = 1;
  switch (p->kind) {
    case Prog::Kind::Filter:
    case Prog::Kind::Assign:
      break;
    case Prog::Kind::Seq:
    case Prog::Kind::Union:
      n += ast_size(p->left) + ast_size(p->right);
      break;
    case Prog::Kind::Choice:
      for (const auto& b : p->branches) n += ast_size(b.prog);
      break;
    case Prog::Kind::If:
      n += ast_size(p->left) + ast_size(p->right);
      break;
    case Prog::Kind::While:
    case Prog::Kind::DoWhile:
    case Prog::Kind::Star:
    case Prog::Kind::VarIn:
      n += ast_size(p->left);
      break;
    case Prog::Kind::Case:
      for (const auto& c : p->cases) n += 1 + ast_size(c.body);
      break;
  }
  return n;
}

}  // namespace pnk
