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

#include "pnk/parser.hpp"

#include <cctype>
#include <optional>
#include <vector>

#include "pnk/error.hpp"

namespace pnk {

namespace {

enum class Tok {
  Ident,    // fields and keywords
  Nat,      // 123
  Decimal,  // 0.5
  Assign,   // :=
  Eq,       // =
  Semi,     // ;
  PlusLBrack,  // +[
  RBrack,   // ]
  Arrow,    // ->
  Comma,    // ,
  Bar,      // |
  Amp,      // &
  Bang,     // !
  LParen,
  RParen,
  LBrace,
  RBrace,
  Slash,    // /
  DotDot,   // ..
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string t, int l, int c) {
    out.push_back({k, std::move(t), l, c});
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++col;
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    int tl = line, tc = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                              s[j] == '_'))
        ++j;
      push(Tok::Ident, s.substr(i, j - i), tl, tc);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
        ++j;
      bool decimal = false;
      if (j + 1 < s.size() && s[j] == '.' && s[j + 1] != '.' &&
          std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        decimal = true;
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
          ++j;
      }
      push(decimal ? Tok::Decimal : Tok::Nat, s.substr(i, j - i), tl, tc);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < s.size() && s[i + 1] == b;
    };
    if (two(':', '=')) {
      push(Tok::Assign, ":=", tl, tc);
      i += 2;
      col += 2;
      continue;
    }
    if (two('+', '[')) {
      push(Tok::PlusLBrack, "+[", tl, tc);
      i += 2;
      col += 2;
      continue;
    }
    if (two('-', '>')) {
      push(Tok::Arrow, "->", tl, tc);
      i += 2;
      col += 2;
      continue;
    }
    if (two('.', '.')) {
      push(Tok::DotDot, "..", tl, tc);
      i += 2;
      col += 2;
      continue;
    }
    Tok k;
    switch (c) {
      case '=': k = Tok::Eq; break;
      case ';': k = Tok::Semi; break;
      case ']': k = Tok::RBrack; break;
      case ',': k = Tok::Comma; break;
      case '|': k = Tok::Bar; break;
      case '&': k = Tok::Amp; break;
      case '!': k = Tok::Bang; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case '/': k = Tok::Slash; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line,
                         col);
    }
    push(k, std::string(1, c), tl, tc);
    ++i;
    ++col;
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {}

  ParsedModule module() {
    ParsedModule m;
    while (at_ident("range")) {
      next();
      std::string f = expect_ident("field name");
      expect(Tok::Eq, "=");
      Value lo = nat("range lower bound");
      if (lo != 0) err("range lower bound must be 0");
      expect(Tok::DotDot, "..");
      Value hi = nat("range upper bound");
      expect(Tok::Semi, ";");
      m.ranges[f] = hi;
    }
    m.program = prog(false);
    expect(Tok::End, "end of input");
    return m;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(int k = 1) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  void next() { ++pos_; }
  [[noreturn]] void err(const std::string& msg) const {
    throw ParseError(msg + ", got '" + (cur().kind == Tok::End ? "<end>"
                                                               : cur().text) +
                         "'",
                     cur().line, cur().col);
  }
  void expect(Tok k, const std::string& what) {
    if (cur().kind != k) err("expected " + what);
    next();
  }
  bool at_ident(const std::string& kw) const {
    return cur().kind == Tok::Ident && cur().text == kw;
  }
  bool accept_ident(const std::string& kw) {
    if (!at_ident(kw)) return false;
    next();
    return true;
  }
  std::string expect_ident(const std::string& what) {
    if (cur().kind != Tok::Ident) err("expected " + what);
    std::string t = cur().text;
    next();
    return t;
  }
  Value nat(const std::string& what) {
    if (cur().kind != Tok::Nat) err("expected " + what);
    unsigned long v = std::stoul(cur().text);
    next();
    return static_cast<Value>(v);
  }

  Rat rational() {
    if (cur().kind == Tok::Decimal) {
      Rat r = rat_from_string(cur().text);
      next();
      return r;
    }
    if (cur().kind != Tok::Nat) err("expected probability");
    std::string num = cur().text;
    next();
    if (cur().kind == Tok::Slash) {
      next();
      if (cur().kind != Tok::Nat) err("expected denominator");
      std::string den = cur().text;
      next();
      return rat_from_string(num + "/" + den);
    }
    return rat_from_string(num);
  }

  // inCase: a top-level '|' belongs to the enclosing case and ends the branch.
  ProgPtr prog(bool in_case) {
    ProgPtr lhs = seq(in_case);
    while (cur().kind == Tok::PlusLBrack) {
      int l = cur().line, c = cur().col;
      next();
      Rat r = rational();
      if (r < 0 || r > 1)
        throw ParseError("choice probability outside [0,1]", l, c);
      expect(Tok::RBrack, "]");
      ProgPtr rhs = seq(in_case);
      lhs = Prog::choice2(r, lhs, rhs);
    }
    return lhs;
  }

  // ';' associates to the right (sequencing is associative; this matches
  // the printer and seq_all).
  ProgPtr seq(bool in_case) {
    ProgPtr lhs = atom(in_case);
    if (cur().kind == Tok::Semi) {
      next();
      return Prog::seq(lhs, seq(in_case));
    }
    return lhs;
  }

  ProgPtr atom(bool in_case) {
    switch (cur().kind) {
      case Tok::Ident:
        break;
      case Tok::Bang: {
        return Prog::filter(pred(in_case ? 1 : 0));
      }
      case Tok::LParen: {
        // Could be a parenthesized program or a parenthesized predicate;
        // try the program first and fall back.
        std::size_t save = pos_;
        try {
          next();
          ProgPtr p = prog(false);
          expect(Tok::RParen, ")");
          return p;
        } catch (const ParseError&) {
          pos_ = save;
        }
        return Prog::filter(pred(in_case ? 1 : 0));
      }
      default:
        err("expected a program");
    }
    if (accept_ident("drop")) return Prog::drop();
    if (accept_ident("skip")) return Prog::skip();
    if (at_ident("true") || at_ident("false"))
      return Prog::filter(pred(in_case ? 1 : 0));
    if (accept_ident("if")) {
      PredPtr a = pred(0);
      if (!accept_ident("then")) err("expected 'then'");
      expect(Tok::LBrace, "{");
      ProgPtr t = prog(false);
      expect(Tok::RBrace, "}");
      if (!accept_ident("else")) err("expected 'else'");
      expect(Tok::LBrace, "{");
      ProgPtr e = prog(false);
      expect(Tok::RBrace, "}");
      return Prog::ite(a, t, e);
    }
    if (accept_ident("while")) {
      PredPtr a = pred(0);
      if (!accept_ident("do")) err("expected 'do'");
      expect(Tok::LBrace, "{");
      ProgPtr body = prog(false);
      expect(Tok::RBrace, "}");
      return Prog::while_loop(a, body);
    }
    if (accept_ident("do")) {
      expect(Tok::LBrace, "{");
      ProgPtr body = prog(false);
      expect(Tok::RBrace, "}");
      if (!accept_ident("while")) err("expected 'while'");
      PredPtr a = pred(1);  // no top-level '|': keep `do{..}while a | b` sane
      return Prog::do_while(body, a);
    }
    if (accept_ident("case")) {
      expect(Tok::LBrace, "{");
      std::vector<CaseBranch> cases;
      while (cur().kind != Tok::RBrace) {
        PredPtr g = pred(1);
        expect(Tok::Arrow, "->");
        ProgPtr b = prog(true);
        cases.push_back({g, b});
        if (cur().kind == Tok::Bar) {
          next();
        } else {
          break;
        }
      }
      expect(Tok::RBrace, "}");
      if (cases.empty()) err("empty case");
      return Prog::case_of(std::move(cases));
    }
    if (accept_ident("choice")) {
      int l = cur().line, c = cur().col;
      expect(Tok::LBrace, "{");
      std::vector<ChoiceBranch> branches;
      bool weighted = cur().kind == Tok::Nat || cur().kind == Tok::Decimal;
      std::vector<ProgPtr> unweighted;
      while (cur().kind != Tok::RBrace) {
        if (weighted) {
          Rat r = rational();
          expect(Tok::Arrow, "->");
          ProgPtr b = prog(false);
          branches.push_back({r, b});
        } else {
          unweighted.push_back(prog(false));
        }
        if (cur().kind == Tok::Comma) {
          next();
        } else {
          break;
        }
      }
      expect(Tok::RBrace, "}");
      if (!weighted) {
        // Omitted weights: executed uniformly at random.
        if (unweighted.empty()) err("empty choice");
        Rat w = make_rat(1, static_cast<long>(unweighted.size()));
        for (auto& p : unweighted) branches.push_back({w, p});
      }
      try {
        return Prog::choice(std::move(branches));
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), l, c);
      }
    }
    if (accept_ident("var")) {
      std::string f = expect_ident("field name");
      expect(Tok::Assign, ":=");
      Value v = nat("initial value");
      if (!accept_ident("in")) err("expected 'in'");
      expect(Tok::LBrace, "{");
      ProgPtr body = prog(false);
      expect(Tok::RBrace, "}");
      return Prog::var_in(f, v, body);
    }
    // field := nat, or a test used as a filter.
    if (peek().kind == Tok::Assign) {
      std::string f = expect_ident("field name");
      next();
      Value v = nat("value");
      return Prog::assign(f, v);
    }
    return Prog::filter(pred(in_case ? 1 : 0));
  }

  // min_level: 0 allows '|', 1 allows '&' but not top-level '|', 2 = atom.
  PredPtr pred(int min_level) {
    PredPtr lhs = pred_and();
    if (min_level >= 1) return lhs;
    while (cur().kind == Tok::Bar) {
      next();
      PredPtr rhs = pred_and();
      lhs = Pred::disj(lhs, rhs);
    }
    return lhs;
  }

  PredPtr pred_and() {
    PredPtr lhs = pred_atom();
    while (cur().kind == Tok::Amp) {
      next();
      PredPtr rhs = pred_atom();
      lhs = Pred::conj(lhs, rhs);
    }
    return lhs;
  }

  PredPtr pred_atom() {
    if (cur().kind == Tok::Bang) {
      next();
      return Pred::neg(pred_atom());
    }
    if (cur().kind == Tok::LParen) {
      next();
      PredPtr p = pred(0);
      expect(Tok::RParen, ")");
      return p;
    }
    if (accept_ident("true")) return Pred::verum();
    if (accept_ident("false")) return Pred::falsum();
    if (cur().kind == Tok::Ident) {
      std::string f = expect_ident("field name");
      expect(Tok::Eq, "=");
      Value v = nat("value");
      return Pred::test(f, v);
    }
    err("expected a predicate");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ProgPtr parse_program(const std::string& text) {
  return parse_module(text).program;
}

ParsedModule parse_module(const std::string& text) {
  Parser p(text);
  return p.module();
}

}  // namespace pnk
