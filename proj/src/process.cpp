#include "mpst/process.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <queue>
#include <sstream>

#include "mpst/lexer.hpp"

namespace mpst {

// ---------------------------------------------------------------------------
// Data

std::string Data::str() const {
  switch (kind) {
    case Kind::Unit: return "()";
    case Kind::Int: return std::to_string(int_v);
    case Kind::Str: {
      std::string out = "\"";
      for (char c : str_v) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      return out + "\"";
    }
    case Kind::Chan: return chan.str();
  }
  return "?";
}

Sort Data::sort() const {
  switch (kind) {
    case Kind::Int: return Sort::Int;
    case Kind::Str: return Sort::Str;
    default: return Sort::Unit;
  }
}

// ---------------------------------------------------------------------------
// Constructors

ProcPtr Process::nil() {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Nil;
  return p;
}

ProcPtr Process::par(std::vector<ProcPtr> parts) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Par;
  p->parts = std::move(parts);
  return p;
}

ProcPtr Process::res(std::string session, std::vector<ResBinding> ann, ProcPtr body) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Res;
  p->session = std::move(session);
  p->annotation = std::move(ann);
  p->body = std::move(body);
  return p;
}

ProcPtr Process::select(ChanId chan, std::string other, bool affine, std::string label,
                        Data data, ProcPtr cont) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Select;
  p->chan = std::move(chan);
  p->other = std::move(other);
  p->affine = affine;
  p->label = std::move(label);
  p->data = std::move(data);
  p->cont = std::move(cont);
  return p;
}

ProcPtr Process::branch(ChanId chan, std::string other, bool affine,
                        std::vector<ProcArm> arms) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Branch;
  p->chan = std::move(chan);
  p->other = std::move(other);
  p->affine = affine;
  p->arms = std::move(arms);
  return p;
}

ProcPtr Process::def(std::string name, std::vector<DefParam> params, ProcPtr body,
                     ProcPtr cont) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Def;
  p->name = std::move(name);
  p->params = std::move(params);
  p->body = std::move(body);
  p->cont = std::move(cont);
  return p;
}

ProcPtr Process::call(std::string name, std::vector<ChanId> args) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Call;
  p->name = std::move(name);
  p->args = std::move(args);
  return p;
}

ProcPtr Process::try_catch(ProcPtr body, ProcPtr handler) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Try;
  p->body = std::move(body);
  p->handler = std::move(handler);
  return p;
}

ProcPtr Process::cancel(ChanId chan, ProcPtr cont) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Cancel;
  p->chan = std::move(chan);
  p->cont = std::move(cont);
  return p;
}

ProcPtr Process::kill(std::string session) {
  auto p = std::make_shared<Process>();
  p->kind = Kind::Kill;
  p->session = std::move(session);
  return p;
}

// ---------------------------------------------------------------------------
// Printing
//
// Parallel binds loosest; every other form is a "term". Nested parallels are
// parenthesised; `. 0` continuations are omitted.

namespace {

void print_proc(const ProcPtr& p, std::ostream& os);

void print_term(const ProcPtr& p, std::ostream& os) {
  if (p->kind == Process::Kind::Par) {
    os << "(";
    print_proc(p, os);
    os << ")";
  } else {
    print_proc(p, os);
  }
}

void print_opt_cont(const ProcPtr& cont, std::ostream& os) {
  if (cont && cont->kind != Process::Kind::Nil) {
    os << ". ";
    print_term(cont, os);
  }
}

void print_proc(const ProcPtr& p, std::ostream& os) {
  switch (p->kind) {
    case Process::Kind::Nil:
      os << "0";
      return;
    case Process::Kind::Par:
      for (size_t i = 0; i < p->parts.size(); ++i) {
        if (i) os << " | ";
        print_term(p->parts[i], os);
      }
      return;
    case Process::Kind::Res:
      os << "(new " << p->session;
      if (!p->annotation.empty()) {
        os << ": {";
        for (size_t i = 0; i < p->annotation.size(); ++i) {
          if (i) os << ", ";
          os << p->annotation[i].chan.str() << ": "
             << payload_to_string(p->annotation[i].type);
        }
        os << "}";
      }
      os << ") ";
      print_term(p->body, os);
      return;
    case Process::Kind::Select:
      if (p->affine) os << "?";
      os << p->chan.str() << "[" << p->other << "]+" << p->label;
      if (p->data.kind != Data::Kind::Unit) os << "<" << p->data.str() << ">";
      print_opt_cont(p->cont, os);
      return;
    case Process::Kind::Branch:
      if (p->affine) os << "?";
      os << p->chan.str() << "[" << p->other << "]&{";
      for (size_t i = 0; i < p->arms.size(); ++i) {
        if (i) os << ", ";
        os << p->arms[i].label;
        if (!p->arms[i].var.empty()) os << "(" << p->arms[i].var << ")";
        if (p->arms[i].cont && p->arms[i].cont->kind != Process::Kind::Nil) {
          os << ". ";
          print_proc(p->arms[i].cont, os);  // braces delimit; bare parallel ok
        }
      }
      os << "}";
      return;
    case Process::Kind::Def:
      os << "def " << p->name << "(";
      for (size_t i = 0; i < p->params.size(); ++i) {
        if (i) os << ", ";
        os << p->params[i].var << ": " << payload_to_string(p->params[i].type);
      }
      os << ") = ";
      print_proc(p->body, os);
      os << " in ";
      print_term(p->cont, os);
      return;
    case Process::Kind::Call:
      os << p->name << "<";
      for (size_t i = 0; i < p->args.size(); ++i) {
        if (i) os << ", ";
        os << p->args[i].str();
      }
      os << ">";
      return;
    case Process::Kind::Try:
      os << "try ";
      print_term(p->body, os);
      os << " catch ";
      print_term(p->handler, os);
      return;
    case Process::Kind::Cancel:
      os << "cancel(" << p->chan.str() << ")";
      print_opt_cont(p->cont, os);
      return;
    case Process::Kind::Kill:
      os << "kill " << p->session;
      return;
  }
}

}  // namespace

std::string to_string(const ProcPtr& p) {
  std::ostringstream os;
  print_proc(p, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

using detail::Lexer;
using detail::Token;

class ProcParser {
 public:
  explicit ProcParser(const std::string& text) : lx_(text) {}

  ProcPtr parse() {
    ProcPtr p = parse_par();
    lx_.expect_eof();
    return p;
  }

 private:
  Lexer lx_;

  ProcPtr parse_par() {
    std::vector<ProcPtr> parts;
    parts.push_back(parse_term());
    while (lx_.eat("|")) parts.push_back(parse_term());
    return parts.size() == 1 ? parts[0] : Process::par(std::move(parts));
  }

  // True when the upcoming token cannot start a continuation (so `. P` was
  // legitimately omitted, standing for `. 0`).
  bool at_cont_end() const {
    const Token& t = lx_.peek();
    if (t.kind == Token::Kind::Eof) return true;
    if (t.kind == Token::Kind::Punct)
      return t.text == "|" || t.text == ")" || t.text == "," || t.text == "}" ||
             t.text == ">";
    if (t.kind == Token::Kind::Ident) return t.text == "in" || t.text == "catch";
    return false;
  }

  ProcPtr parse_opt_cont() {
    if (lx_.eat(".")) return parse_term();
    if (at_cont_end()) return Process::nil();
    lx_.fail("expected '.' before continuation");
  }

  ChanId parse_chan() {
    std::string name = lx_.expect_ident("channel");
    if (lx_.eat("[")) {
      std::string role = lx_.expect_ident("role");
      lx_.expect("]");
      return ChanId::endpoint(name, role);
    }
    return ChanId::variable(name);
  }

  Data parse_data() {
    const Token& t = lx_.peek();
    if (t.kind == Token::Kind::Int) return Data::of_int(std::stoll(lx_.next().text));
    if (t.kind == Token::Kind::Str) return Data::of_str(lx_.next().text);
    if (lx_.eat("()")) return Data::unit();
    return Data::of_chan(parse_chan());
  }

  std::vector<ResBinding> parse_annotation() {
    std::vector<ResBinding> out;
    lx_.expect("{");
    if (!lx_.eat("}")) {
      for (;;) {
        ResBinding b;
        b.chan = parse_chan();
        lx_.expect(":");
        b.type = detail::parse_payload_at(lx_);
        out.push_back(std::move(b));
        if (lx_.eat(",")) continue;
        lx_.expect("}");
        break;
      }
    }
    return out;
  }

  ProcPtr parse_prefix(ChanId chan, std::string partner, bool affine) {
    if (lx_.eat("+")) {
      std::string label = lx_.expect_ident("label");
      Data d = Data::unit();
      if (lx_.eat("<")) {
        d = parse_data();
        lx_.expect(">");
      }
      ProcPtr cont = parse_opt_cont();
      return Process::select(std::move(chan), std::move(partner), affine,
                             std::move(label), std::move(d), std::move(cont));
    }
    if (lx_.eat("&")) {
      lx_.expect("{");
      std::vector<ProcArm> arms;
      for (;;) {
        ProcArm arm;
        arm.label = lx_.expect_ident("label");
        if (lx_.eat("(")) {
          arm.var = lx_.expect_ident("payload binder");
          lx_.expect(")");
        }
        arm.cont = lx_.eat(".") ? parse_par() : Process::nil();
        arms.push_back(std::move(arm));
        if (lx_.eat(",")) continue;
        lx_.expect("}");
        break;
      }
      return Process::branch(std::move(chan), std::move(partner), affine,
                             std::move(arms));
    }
    lx_.fail("expected '+' or '&' after channel");
  }

  // IDENT already consumed; decide var/endpoint and partner role.
  ProcPtr parse_prefix_or_call(std::string head, bool affine) {
    if (!affine && lx_.eat("<")) {  // process call
      std::vector<ChanId> args;
      if (!lx_.at(">")) {
        args.push_back(parse_chan());
        while (lx_.eat(",")) args.push_back(parse_chan());
      }
      lx_.expect(">");
      return Process::call(std::move(head), std::move(args));
    }
    lx_.expect("[");
    std::string first = lx_.expect_ident("role");
    lx_.expect("]");
    if (lx_.eat("[")) {
      std::string partner = lx_.expect_ident("role");
      lx_.expect("]");
      return parse_prefix(ChanId::endpoint(head, first), partner, affine);
    }
    return parse_prefix(ChanId::variable(head), first, affine);
  }

  ProcPtr parse_term() {
    const Token& t = lx_.peek();
    if (t.kind == Token::Kind::Int) {
      if (t.text == "0") {
        lx_.next();
        return Process::nil();
      }
      lx_.fail("expected a process");
    }
    if (lx_.eat("?")) return parse_prefix_or_call(lx_.expect_ident("channel"), true);
    if (lx_.eat("(")) {
      if (lx_.eat_ident("new")) {
        std::string session = lx_.expect_ident("session");
        std::vector<ResBinding> ann;
        if (lx_.eat(":")) ann = parse_annotation();
        lx_.expect(")");
        return Process::res(std::move(session), std::move(ann), parse_term());
      }
      ProcPtr inner = parse_par();
      lx_.expect(")");
      return inner;
    }
    if (lx_.eat_ident("try")) {
      ProcPtr body = parse_term();
      if (!lx_.eat_ident("catch")) lx_.fail("expected 'catch'");
      return Process::try_catch(std::move(body), parse_term());
    }
    if (lx_.eat_ident("cancel")) {
      lx_.expect("(");
      ChanId c = parse_chan();
      lx_.expect(")");
      return Process::cancel(std::move(c), parse_opt_cont());
    }
    if (lx_.eat_ident("kill")) return Process::kill(lx_.expect_ident("session"));
    if (lx_.eat_ident("def")) {
      std::string name = lx_.expect_ident("definition name");
      lx_.expect("(");
      std::vector<DefParam> params;
      if (!lx_.at(")")) {
        for (;;) {
          DefParam dp;
          dp.var = lx_.expect_ident("parameter");
          lx_.expect(":");
          dp.type = detail::parse_payload_at(lx_);
          params.push_back(std::move(dp));
          if (lx_.eat(",")) continue;
          break;
        }
      }
      lx_.expect(")");
      lx_.expect("=");
      ProcPtr body = parse_par();
      if (!lx_.eat_ident("in")) lx_.fail("expected 'in'");
      return Process::def(std::move(name), std::move(params), std::move(body),
                          parse_term());
    }
    if (t.kind == Token::Kind::Ident)
      return parse_prefix_or_call(lx_.next().text, false);
    lx_.fail("expected a process");
  }
};

}  // namespace

ProcPtr parse_process(const std::string& text) { return ProcParser(text).parse(); }

// ---------------------------------------------------------------------------
// Free names

namespace {

void walk_free(const ProcPtr& p, std::set<std::string>& bound_vars,
               std::set<std::string>& bound_sessions, std::set<ChanId>* chans,
               std::set<std::string>* sessions) {
  auto chan_occ = [&](const ChanId& c) {
    if (c.is_var) {
      if (!bound_vars.count(c.var) && chans) chans->insert(c);
    } else if (!bound_sessions.count(c.session)) {
      if (chans) chans->insert(c);
      if (sessions) sessions->insert(c.session);
    }
  };
  switch (p->kind) {
    case Process::Kind::Nil:
      return;
    case Process::Kind::Par:
      for (const auto& q : p->parts) walk_free(q, bound_vars, bound_sessions, chans, sessions);
      return;
    case Process::Kind::Res: {
      bool added = bound_sessions.insert(p->session).second;
      walk_free(p->body, bound_vars, bound_sessions, chans, sessions);
      if (added) bound_sessions.erase(p->session);
      return;
    }
    case Process::Kind::Select:
      chan_occ(p->chan);
      if (p->data.kind == Data::Kind::Chan) chan_occ(p->data.chan);
      walk_free(p->cont, bound_vars, bound_sessions, chans, sessions);
      return;
    case Process::Kind::Branch:
      chan_occ(p->chan);
      for (const auto& arm : p->arms) {
        bool added = !arm.var.empty() && bound_vars.insert(arm.var).second;
        walk_free(arm.cont, bound_vars, bound_sessions, chans, sessions);
        if (added) bound_vars.erase(arm.var);
      }
      return;
    case Process::Kind::Def: {
      std::vector<std::string> added;
      for (const auto& dp : p->params)
        if (bound_vars.insert(dp.var).second) added.push_back(dp.var);
      walk_free(p->body, bound_vars, bound_sessions, chans, sessions);
      for (const auto& v : added) bound_vars.erase(v);
      walk_free(p->cont, bound_vars, bound_sessions, chans, sessions);
      return;
    }
    case Process::Kind::Call:
      for (const auto& a : p->args) chan_occ(a);
      return;
    case Process::Kind::Try:
      walk_free(p->body, bound_vars, bound_sessions, chans, sessions);
      walk_free(p->handler, bound_vars, bound_sessions, chans, sessions);
      return;
    case Process::Kind::Cancel:
      chan_occ(p->chan);
      walk_free(p->cont, bound_vars, bound_sessions, chans, sessions);
      return;
    case Process::Kind::Kill:
      if (!bound_sessions.count(p->session) && sessions) sessions->insert(p->session);
      return;
  }
}

}  // namespace

std::set<ChanId> free_chans(const ProcPtr& p) {
  std::set<std::string> bv, bs;
  std::set<ChanId> out;
  walk_free(p, bv, bs, &out, nullptr);
  return out;
}

std::set<std::string> free_sessions(const ProcPtr& p) {
  std::set<std::string> bv, bs, out;
  walk_free(p, bv, bs, nullptr, &out);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

ProcPtr subst_map(const ProcPtr& p, const std::map<std::string, Data>& m);

ChanId fix_chan(const ChanId& c, const std::map<std::string, Data>& m) {
  if (c.is_var) {
    auto it = m.find(c.var);
    if (it != m.end() && it->second.kind == Data::Kind::Chan) return it->second.chan;
  }
  return c;
}

Data fix_data(const Data& d, const std::map<std::string, Data>& m) {
  if (d.kind == Data::Kind::Chan && d.chan.is_var) {
    auto it = m.find(d.chan.var);
    if (it != m.end()) return it->second;
  }
  return d;
}

ProcPtr subst_map(const ProcPtr& p, const std::map<std::string, Data>& m) {
  if (m.empty()) return p;
  switch (p->kind) {
    case Process::Kind::Nil:
    case Process::Kind::Kill:
      return p;
    case Process::Kind::Par: {
      std::vector<ProcPtr> parts;
      for (const auto& q : p->parts) parts.push_back(subst_map(q, m));
      return Process::par(std::move(parts));
    }
    case Process::Kind::Res:
      return Process::res(p->session, p->annotation, subst_map(p->body, m));
    case Process::Kind::Select:
      return Process::select(fix_chan(p->chan, m), p->other, p->affine, p->label,
                             fix_data(p->data, m), subst_map(p->cont, m));
    case Process::Kind::Branch: {
      std::vector<ProcArm> arms;
      for (const auto& arm : p->arms) {
        ProcArm out = arm;
        if (!arm.var.empty() && m.count(arm.var)) {
          auto m2 = m;
          m2.erase(arm.var);
          out.cont = subst_map(arm.cont, m2);
        } else {
          out.cont = subst_map(arm.cont, m);
        }
        arms.push_back(std::move(out));
      }
      return Process::branch(fix_chan(p->chan, m), p->other, p->affine, std::move(arms));
    }
    case Process::Kind::Def: {
      auto m2 = m;
      for (const auto& dp : p->params) m2.erase(dp.var);
      return Process::def(p->name, p->params, subst_map(p->body, m2),
                          subst_map(p->cont, m));
    }
    case Process::Kind::Call: {
      std::vector<ChanId> args;
      for (const auto& a : p->args) args.push_back(fix_chan(a, m));
      return Process::call(p->name, std::move(args));
    }
    case Process::Kind::Try:
      return Process::try_catch(subst_map(p->body, m), subst_map(p->handler, m));
    case Process::Kind::Cancel:
      return Process::cancel(fix_chan(p->chan, m), subst_map(p->cont, m));
  }
  return p;
}

}  // namespace

ProcPtr subst_var(const ProcPtr& p, const std::string& var, const Data& value) {
  return subst_map(p, {{var, value}});
}

ProcPtr rename_session(const ProcPtr& p, const std::string& from, const std::string& to) {
  auto fix = [&](const ChanId& c) {
    if (!c.is_var && c.session == from) return ChanId::endpoint(to, c.role);
    return c;
  };
  switch (p->kind) {
    case Process::Kind::Nil:
      return p;
    case Process::Kind::Par: {
      std::vector<ProcPtr> parts;
      for (const auto& q : p->parts) parts.push_back(rename_session(q, from, to));
      return Process::par(std::move(parts));
    }
    case Process::Kind::Res: {
      if (p->session == from) return p;  // binder shadows
      std::vector<ResBinding> ann;
      for (const auto& b : p->annotation) ann.push_back({fix(b.chan), b.type});
      return Process::res(p->session, std::move(ann), rename_session(p->body, from, to));
    }
    case Process::Kind::Select: {
      Data d = p->data;
      if (d.kind == Data::Kind::Chan) d.chan = fix(d.chan);
      return Process::select(fix(p->chan), p->other, p->affine, p->label, std::move(d),
                             rename_session(p->cont, from, to));
    }
    case Process::Kind::Branch: {
      std::vector<ProcArm> arms;
      for (const auto& arm : p->arms)
        arms.push_back({arm.label, arm.var, rename_session(arm.cont, from, to)});
      return Process::branch(fix(p->chan), p->other, p->affine, std::move(arms));
    }
    case Process::Kind::Def:
      return Process::def(p->name, p->params, rename_session(p->body, from, to),
                          rename_session(p->cont, from, to));
    case Process::Kind::Call: {
      std::vector<ChanId> args;
      for (const auto& a : p->args) args.push_back(fix(a));
      return Process::call(p->name, std::move(args));
    }
    case Process::Kind::Try:
      return Process::try_catch(rename_session(p->body, from, to),
                                rename_session(p->handler, from, to));
    case Process::Kind::Cancel:
      return Process::cancel(fix(p->chan), rename_session(p->cont, from, to));
    case Process::Kind::Kill:
      return p->session == from ? Process::kill(to) : p;
  }
  return p;
}

namespace {

// Renames calls of a definition (respecting def-binder shadowing).
ProcPtr rename_calls(const ProcPtr& p, const std::string& from, const std::string& to) {
  switch (p->kind) {
    case Process::Kind::Nil:
    case Process::Kind::Kill:
      return p;
    case Process::Kind::Par: {
      std::vector<ProcPtr> parts;
      for (const auto& q : p->parts) parts.push_back(rename_calls(q, from, to));
      return Process::par(std::move(parts));
    }
    case Process::Kind::Res:
      return Process::res(p->session, p->annotation, rename_calls(p->body, from, to));
    case Process::Kind::Select:
      return Process::select(p->chan, p->other, p->affine, p->label, p->data,
                             rename_calls(p->cont, from, to));
    case Process::Kind::Branch: {
      std::vector<ProcArm> arms;
      for (const auto& arm : p->arms)
        arms.push_back({arm.label, arm.var, rename_calls(arm.cont, from, to)});
      return Process::branch(p->chan, p->other, p->affine, std::move(arms));
    }
    case Process::Kind::Def:
      if (p->name == from) return p;  // shadows in both body and scope
      return Process::def(p->name, p->params, rename_calls(p->body, from, to),
                          rename_calls(p->cont, from, to));
    case Process::Kind::Call:
      return p->name == from ? Process::call(to, p->args) : p;
    case Process::Kind::Try:
      return Process::try_catch(rename_calls(p->body, from, to),
                                rename_calls(p->handler, from, to));
    case Process::Kind::Cancel:
      return Process::cancel(p->chan, rename_calls(p->cont, from, to));
  }
  return p;
}

// Call names not bound by an enclosing definition.
void collect_free_calls(const ProcPtr& p, std::set<std::string>& bound,
                        std::set<std::string>& out) {
  switch (p->kind) {
    case Process::Kind::Nil:
    case Process::Kind::Kill:
      return;
    case Process::Kind::Par:
      for (const auto& q : p->parts) collect_free_calls(q, bound, out);
      return;
    case Process::Kind::Res:
      collect_free_calls(p->body, bound, out);
      return;
    case Process::Kind::Select:
    case Process::Kind::Cancel:
      collect_free_calls(p->cont, bound, out);
      return;
    case Process::Kind::Branch:
      for (const auto& arm : p->arms) collect_free_calls(arm.cont, bound, out);
      return;
    case Process::Kind::Def: {
      bool added = bound.insert(p->name).second;
      collect_free_calls(p->body, bound, out);
      collect_free_calls(p->cont, bound, out);
      if (added) bound.erase(p->name);
      return;
    }
    case Process::Kind::Call:
      if (!bound.count(p->name)) out.insert(p->name);
      return;
    case Process::Kind::Try:
      collect_free_calls(p->body, bound, out);
      collect_free_calls(p->handler, bound, out);
      return;
  }
}

std::set<std::string> free_calls(const ProcPtr& p) {
  std::set<std::string> bound, out;
  collect_free_calls(p, bound, out);
  return out;
}

// Every session string appearing anywhere (free or bound).
void collect_all_sessions(const ProcPtr& p, std::set<std::string>& out) {
  switch (p->kind) {
    case Process::Kind::Nil:
      return;
    case Process::Kind::Par:
      for (const auto& q : p->parts) collect_all_sessions(q, out);
      return;
    case Process::Kind::Res:
      out.insert(p->session);
      collect_all_sessions(p->body, out);
      return;
    case Process::Kind::Select:
      if (!p->chan.is_var) out.insert(p->chan.session);
      if (p->data.kind == Data::Kind::Chan && !p->data.chan.is_var)
        out.insert(p->data.chan.session);
      collect_all_sessions(p->cont, out);
      return;
    case Process::Kind::Branch:
      if (!p->chan.is_var) out.insert(p->chan.session);
      for (const auto& arm : p->arms) collect_all_sessions(arm.cont, out);
      return;
    case Process::Kind::Def:
      collect_all_sessions(p->body, out);
      collect_all_sessions(p->cont, out);
      return;
    case Process::Kind::Call:
      for (const auto& a : p->args)
        if (!a.is_var) out.insert(a.session);
      return;
    case Process::Kind::Try:
      collect_all_sessions(p->body, out);
      collect_all_sessions(p->handler, out);
      return;
    case Process::Kind::Cancel:
      if (!p->chan.is_var) out.insert(p->chan.session);
      collect_all_sessions(p->cont, out);
      return;
    case Process::Kind::Kill:
      out.insert(p->session);
      return;
  }
}

// Every definition/call name appearing anywhere.
void collect_all_names(const ProcPtr& p, std::set<std::string>& out) {
  switch (p->kind) {
    case Process::Kind::Nil:
    case Process::Kind::Kill:
      return;
    case Process::Kind::Par:
      for (const auto& q : p->parts) collect_all_names(q, out);
      return;
    case Process::Kind::Res:
      collect_all_names(p->body, out);
      return;
    case Process::Kind::Select:
    case Process::Kind::Cancel:
      collect_all_names(p->cont, out);
      return;
    case Process::Kind::Branch:
      for (const auto& arm : p->arms) collect_all_names(arm.cont, out);
      return;
    case Process::Kind::Def:
      out.insert(p->name);
      collect_all_names(p->body, out);
      collect_all_names(p->cont, out);
      return;
    case Process::Kind::Call:
      out.insert(p->name);
      return;
    case Process::Kind::Try:
      collect_all_names(p->body, out);
      collect_all_names(p->handler, out);
      return;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Subjects

namespace {

void subjects_impl(const ProcPtr& p, std::map<std::string, ProcPtr>& env, int depth,
                   std::set<ChanId>& out) {
  switch (p->kind) {
    case Process::Kind::Nil:
    case Process::Kind::Kill:
      return;
    case Process::Kind::Par:
      for (const auto& q : p->parts) subjects_impl(q, env, depth, out);
      return;
    case Process::Kind::Res: {
      std::set<ChanId> inner;
      subjects_impl(p->body, env, depth, inner);
      for (const auto& c : inner)
        if (c.is_var || c.session != p->session) out.insert(c);
      return;
    }
    case Process::Kind::Select:
    case Process::Kind::Branch:
    case Process::Kind::Cancel:
      out.insert(p->chan);
      return;
    case Process::Kind::Def: {
      auto saved = env.find(p->name) != env.end() ? env[p->name] : nullptr;
      env[p->name] = p;
      subjects_impl(p->cont, env, depth, out);
      if (saved)
        env[p->name] = saved;
      else
        env.erase(p->name);
      return;
    }
    case Process::Kind::Call: {
      if (depth >= 64) return;  // unfolding budget: under-approximate
      auto it = env.find(p->name);
      if (it == env.end() || it->second->params.size() != p->args.size()) return;
      std::map<std::string, Data> m;
      for (size_t i = 0; i < p->args.size(); ++i)
        m[it->second->params[i].var] = Data::of_chan(p->args[i]);
      subjects_impl(subst_map(it->second->body, m), env, depth + 1, out);
      return;
    }
    case Process::Kind::Try:
      subjects_impl(p->body, env, depth, out);
      return;
  }
}

}  // namespace

std::set<ChanId> subjects(const ProcPtr& p, const std::vector<ProcPtr>& defs) {
  std::map<std::string, ProcPtr> env;
  for (const auto& d : defs)
    if (d->kind == Process::Kind::Def) env[d->name] = d;
  std::set<ChanId> out;
  subjects_impl(p, env, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Structural-congruence normal form

namespace {

struct Spine {
  std::vector<std::pair<std::string, std::vector<ResBinding>>> ress;
  std::vector<ProcPtr> defs;  // Def nodes; their `cont` is unused
  std::vector<ProcPtr> comps;
};

ProcPtr rebuild(const Spine& sp) {
  ProcPtr inner;
  if (sp.comps.empty())
    inner = Process::nil();
  else if (sp.comps.size() == 1)
    inner = sp.comps[0];
  else
    inner = Process::par(sp.comps);
  for (auto it = sp.defs.rbegin(); it != sp.defs.rend(); ++it)
    inner = Process::def((*it)->name, (*it)->params, (*it)->body, inner);
  for (auto it = sp.ress.rbegin(); it != sp.ress.rend(); ++it)
    inner = Process::res(it->first, it->second, inner);
  return inner;
}

class Normalizer {
 public:
  ProcPtr run(const ProcPtr& p) {
    Spine sp;
    collect(p, sp);
    gc(sp);
    canonical_rename(sp);
    std::stable_sort(sp.comps.begin(), sp.comps.end(),
                     [](const ProcPtr& a, const ProcPtr& b) {
                       return to_string(a) < to_string(b);
                     });
    return rebuild(sp);
  }

 private:
  int counter_ = 0;

  std::string fresh_temp() { return "\x01tmp" + std::to_string(counter_++); }

  void collect(const ProcPtr& p, Spine& sp) {
    switch (p->kind) {
      case Process::Kind::Nil:
        return;
      case Process::Kind::Par:
        for (const auto& q : p->parts) collect(q, sp);
        return;
      case Process::Kind::Res: {
        std::string tmp = fresh_temp();
        std::vector<ResBinding> ann;
        for (const auto& b : p->annotation) {
          ChanId c = b.chan;
          if (!c.is_var && c.session == p->session) c = ChanId::endpoint(tmp, c.role);
          ann.push_back({c, b.type});
        }
        std::sort(ann.begin(), ann.end(),
                  [](const ResBinding& a, const ResBinding& b) { return a.chan < b.chan; });
        sp.ress.emplace_back(tmp, std::move(ann));
        collect(rename_session(p->body, p->session, tmp), sp);
        return;
      }
      case Process::Kind::Def: {
        std::string tmp = fresh_temp();
        ProcPtr body = run(rename_calls(p->body, p->name, tmp));
        sp.defs.push_back(Process::def(tmp, p->params, body, Process::nil()));
        collect(rename_calls(p->cont, p->name, tmp), sp);
        return;
      }
      default:
        sp.comps.push_back(normalize_subterms(p));
        return;
    }
  }

  ProcPtr normalize_subterms(const ProcPtr& p) {
    switch (p->kind) {
      case Process::Kind::Select:
        return Process::select(p->chan, p->other, p->affine, p->label, p->data,
                               run(p->cont));
      case Process::Kind::Branch: {
        std::vector<ProcArm> arms;
        for (const auto& arm : p->arms)
          arms.push_back({arm.label, arm.var, run(arm.cont)});
        return Process::branch(p->chan, p->other, p->affine, std::move(arms));
      }
      case Process::Kind::Try:
        return Process::try_catch(run(p->body), run(p->handler));
      case Process::Kind::Cancel:
        return Process::cancel(p->chan, run(p->cont));
      default:
        return p;  // Kill, Call
    }
  }

  void gc(Spine& sp) {
    bool changed = true;
    while (changed) {
      changed = false;

      // Merge duplicate kills of the same session.
      std::set<std::string> seen_kills;
      std::vector<ProcPtr> comps;
      for (const auto& c : sp.comps) {
        if (c->kind == Process::Kind::Kill) {
          if (!seen_kills.insert(c->session).second) {
            changed = true;
            continue;
          }
        }
        comps.push_back(c);
      }
      sp.comps = std::move(comps);

      // Definitions reachable from the components.
      std::set<std::string> live;
      for (const auto& c : sp.comps)
        for (const auto& n : free_calls(c)) live.insert(n);
      bool grow = true;
      while (grow) {
        grow = false;
        for (const auto& d : sp.defs)
          if (live.count(d->name))
            for (const auto& n : free_calls(d->body))
              if (live.insert(n).second) grow = true;
      }
      std::vector<ProcPtr> defs;
      for (const auto& d : sp.defs) {
        if (live.count(d->name))
          defs.push_back(d);
        else
          changed = true;
      }
      sp.defs = std::move(defs);

      // Session binders: drop unused ones; collect exhausted sessions whose
      // sole remnant is their own kill.
      std::vector<std::pair<std::string, std::vector<ResBinding>>> ress;
      for (const auto& r : sp.ress) {
        int mentions = 0;
        int kill_comp = -1;
        for (size_t i = 0; i < sp.comps.size(); ++i) {
          if (free_sessions(sp.comps[i]).count(r.first)) {
            ++mentions;
            if (sp.comps[i]->kind == Process::Kind::Kill &&
                sp.comps[i]->session == r.first)
              kill_comp = static_cast<int>(i);
          }
        }
        for (const auto& d : sp.defs)
          if (free_sessions(d->body).count(r.first)) ++mentions;
        if (mentions == 0) {
          changed = true;
          continue;
        }
        if (mentions == 1 && kill_comp >= 0) {
          sp.comps.erase(sp.comps.begin() + kill_comp);
          changed = true;
          continue;
        }
        ress.push_back(r);
      }
      sp.ress = std::move(ress);
    }
  }

  void canonical_rename(Spine& sp) {
    std::set<std::string> avoid_sessions, avoid_names;
    for (const auto& c : sp.comps) {
      collect_all_sessions(c, avoid_sessions);
      collect_all_names(c, avoid_names);
    }
    for (const auto& d : sp.defs) {
      collect_all_sessions(d->body, avoid_sessions);
      collect_all_names(d->body, avoid_names);
    }
    for (const auto& r : sp.ress)
      for (const auto& b : r.second)
        if (!b.chan.is_var) avoid_sessions.insert(b.chan.session);

    auto pick = [](const std::string& base, int& i, const std::set<std::string>& avoid) {
      for (;;) {
        std::string cand = base + std::to_string(i++);
        if (!avoid.count(cand)) return cand;
      }
    };

    int si = 0;
    for (auto& r : sp.ress) {
      std::string nm = pick("s", si, avoid_sessions);
      rename_everywhere_session(sp, r, nm);
    }
    int xi = 0;
    for (auto& d : sp.defs) {
      std::string nm = pick("X", xi, avoid_names);
      rename_everywhere_call(sp, d, nm);
    }
  }

  void rename_everywhere_session(Spine& sp,
                                 std::pair<std::string, std::vector<ResBinding>>& binder,
                                 const std::string& nm) {
    const std::string old = binder.first;
    binder.first = nm;
    for (auto& b : binder.second)
      if (!b.chan.is_var && b.chan.session == old) b.chan = ChanId::endpoint(nm, b.chan.role);
    for (auto& c : sp.comps) c = rename_session(c, old, nm);
    for (auto& d : sp.defs)
      d = Process::def(d->name, d->params, rename_session(d->body, old, nm),
                       Process::nil());
  }

  void rename_everywhere_call(Spine& sp, ProcPtr& binder, const std::string& nm) {
    const std::string old = binder->name;
    binder = Process::def(nm, binder->params, rename_calls(binder->body, old, nm),
                          Process::nil());
    for (auto& c : sp.comps) c = rename_calls(c, old, nm);
    for (auto& d : sp.defs)
      if (d->name != nm)
        d = Process::def(d->name, d->params, rename_calls(d->body, old, nm),
                         Process::nil());
  }
};

void peel_spine(const ProcPtr& p, Spine& sp) {
  ProcPtr cur = p;
  for (;;) {
    if (cur->kind == Process::Kind::Res) {
      sp.ress.emplace_back(cur->session, cur->annotation);
      cur = cur->body;
    } else if (cur->kind == Process::Kind::Def) {
      sp.defs.push_back(Process::def(cur->name, cur->params, cur->body, Process::nil()));
      cur = cur->cont;
    } else {
      break;
    }
  }
  if (cur->kind == Process::Kind::Par)
    sp.comps = cur->parts;
  else if (cur->kind != Process::Kind::Nil)
    sp.comps.push_back(cur);
}

}  // namespace

ProcPtr congruent_normalize(const ProcPtr& p) { return Normalizer().run(p); }

bool is_nil(const ProcPtr& p) { return p->kind == Process::Kind::Nil; }

// ---------------------------------------------------------------------------
// Reduction

namespace {

// Peels try frames: the body-position chain a communication or cancellation
// discards when it fires.
const Process* peel_try(const ProcPtr& comp, int& depth) {
  const Process* cur = comp.get();
  depth = 0;
  while (cur->kind == Process::Kind::Try) {
    cur = cur->body.get();
    ++depth;
  }
  return cur;
}

ProcPtr with_comp(const Spine& sp, size_t i, ProcPtr repl,
                  std::vector<ProcPtr> extra = {}) {
  Spine out = sp;
  out.comps[i] = std::move(repl);
  for (auto& e : extra) out.comps.push_back(std::move(e));
  return rebuild(out);
}

std::string fresh_session_for(const ProcPtr& node, const std::string& base) {
  std::set<std::string> used;
  collect_all_sessions(node, used);
  for (int i = 0;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!used.count(cand)) return cand;
  }
}

}  // namespace

std::vector<Step> step(const ProcPtr& normalized, const StepOptions& opts) {
  Spine sp;
  peel_spine(normalized, sp);
  std::vector<Step> out;

  std::set<std::string> kills;  // sessions with an active kill component
  for (const auto& c : sp.comps)
    if (c->kind == Process::Kind::Kill) kills.insert(c->session);

  for (size_t i = 0; i < sp.comps.size(); ++i) {
    int di = 0;
    const Process* ci = peel_try(sp.comps[i], di);

    // R-Com: a branch here, a select elsewhere, on the same session with
    // matching roles and a label the branch offers. Both try-chains drop.
    if (ci->kind == Process::Kind::Branch && !ci->chan.is_var) {
      for (size_t j = 0; j < sp.comps.size(); ++j) {
        if (j == i) continue;
        int dj = 0;
        const Process* cj = peel_try(sp.comps[j], dj);
        if (cj->kind != Process::Kind::Select || cj->chan.is_var) continue;
        if (cj->chan.session != ci->chan.session) continue;
        if (cj->chan.role != ci->other || cj->other != ci->chan.role) continue;
        const ProcArm* arm = nullptr;
        for (const auto& a : ci->arms)
          if (a.label == cj->label) arm = &a;
        if (!arm) continue;
        ProcPtr recv = arm->var.empty() ? arm->cont : subst_var(arm->cont, arm->var, cj->data);
        Spine next = sp;
        next.comps[i] = recv;
        next.comps[j] = cj->cont;
        out.push_back({"R-Com",
                       ci->chan.session + ": " + cj->chan.role + "->" + ci->chan.role +
                           ":" + cj->label,
                       rebuild(next)});
      }
    }

    // Spontaneous failure of affine prefixes (bare, or directly under try).
    if (di == 0 && ci->kind == Process::Kind::Select && ci->affine &&
        !ci->chan.is_var && opts.inject.allows(ci->chan)) {
      ProcPtr plain = Process::select(ci->chan, ci->other, false, ci->label, ci->data,
                                      ci->cont);
      out.push_back({"C-?Sel", ci->chan.str() + " fails",
                     with_comp(sp, i, plain, {Process::kill(ci->chan.session)})});
    }
    if (di == 0 && ci->kind == Process::Kind::Branch && ci->affine &&
        !ci->chan.is_var && opts.inject.allows(ci->chan)) {
      ProcPtr plain = Process::branch(ci->chan, ci->other, false, ci->arms);
      out.push_back({"C-?Br", ci->chan.str() + " fails",
                     with_comp(sp, i, plain, {Process::kill(ci->chan.session)})});
    }
    if (sp.comps[i]->kind == Process::Kind::Try) {
      int d1 = 0;
      const Process* inner = peel_try(sp.comps[i]->body, d1);
      if (d1 == 0 && inner->kind == Process::Kind::Select && inner->affine &&
          !inner->chan.is_var && opts.inject.allows(inner->chan)) {
        out.push_back({"T?Sel", inner->chan.str() + " fails",
                       with_comp(sp, i, sp.comps[i]->handler,
                                 {Process::kill(inner->chan.session)})});
      }
      if (d1 == 0 && inner->kind == Process::Kind::Branch && inner->affine &&
          !inner->chan.is_var && opts.inject.allows(inner->chan)) {
        out.push_back({"T?Br", inner->chan.str() + " fails",
                       with_comp(sp, i, sp.comps[i]->handler,
                                 {Process::kill(inner->chan.session)})});
      }
    }

    // Kill-driven collection of prefixes on a dead session.
    if (di == 0 && ci->kind == Process::Kind::Select && !ci->chan.is_var &&
        kills.count(ci->chan.session)) {
      std::vector<ProcPtr> extra;
      if (ci->data.kind == Data::Kind::Chan && !ci->data.chan.is_var)
        extra.push_back(Process::kill(ci->data.chan.session));
      out.push_back({"C-Sel", ci->chan.str() + " discarded",
                     with_comp(sp, i, ci->cont, std::move(extra))});
    }
    if (di == 0 && ci->kind == Process::Kind::Branch && !ci->chan.is_var &&
        kills.count(ci->chan.session)) {
      for (const auto& arm : ci->arms) {
        std::string fresh = fresh_session_for(normalized, "c");
        ProcPtr cont = arm.cont;
        if (!arm.var.empty())
          cont = subst_var(cont, arm.var,
                           Data::of_chan(ChanId::endpoint(fresh, ci->chan.role)));
        ProcPtr repl = Process::res(
            fresh, {}, Process::par({cont, Process::kill(fresh)}));
        out.push_back({"C-Br", ci->chan.str() + " discarded:" + arm.label,
                       with_comp(sp, i, repl)});
      }
    }

    // R-Can: explicit cancellation; the try-chain drops.
    if (ci->kind == Process::Kind::Cancel && !ci->chan.is_var) {
      out.push_back({"R-Can", "cancel " + ci->chan.str(),
                     with_comp(sp, i, ci->cont,
                               {Process::kill(ci->chan.session)})});
    }

    // C-Cat: a try whose block is entirely about one dead endpoint yields to
    // its handler.
    if (sp.comps[i]->kind == Process::Kind::Try) {
      std::set<ChanId> sbj = subjects(sp.comps[i]->body, sp.defs);
      if (sbj.size() == 1 && !sbj.begin()->is_var && kills.count(sbj.begin()->session)) {
        out.push_back({"C-Cat", sbj.begin()->str() + " dead",
                       with_comp(sp, i, sp.comps[i]->handler)});
      }
    }

    // R-Def: expand a process call.
    if (sp.comps[i]->kind == Process::Kind::Call) {
      for (const auto& d : sp.defs) {
        if (d->name != sp.comps[i]->name ||
            d->params.size() != sp.comps[i]->args.size())
          continue;
        std::map<std::string, Data> m;
        for (size_t k = 0; k < d->params.size(); ++k)
          m[d->params[k].var] = Data::of_chan(sp.comps[i]->args[k]);
        out.push_back({"R-Def", sp.comps[i]->name + " expands",
                       with_comp(sp, i, subst_map(d->body, m))});
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exploration

std::vector<std::string> ProcGraph::trace_to(int node) const {
  std::vector<int> chain;
  for (int cur = node; cur >= 0; cur = parent[cur]) chain.push_back(cur);
  std::reverse(chain.begin(), chain.end());
  std::vector<std::string> out;
  for (size_t i = 0; i < chain.size(); ++i) {
    std::string line = i == 0 ? "" : "--" + parent_rule[chain[i]] + "--> ";
    out.push_back(line + to_string(nodes[chain[i]]));
  }
  return out;
}

ProcGraph explore(const ProcPtr& p0, const ExploreOptions& opts) {
  ProcGraph g;
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };

  std::map<std::string, int> ids;
  std::vector<int> unfolds;
  using Entry = std::tuple<int, long, int>;  // (unfold count, insertion seq, node)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  long seq = 0;

  auto add_node = [&](const ProcPtr& p, int u, int parent, const std::string& rule) {
    std::string key = to_string(p);
    auto it = ids.find(key);
    if (it != ids.end()) {
      if (u < unfolds[it->second]) {
        unfolds[it->second] = u;
        queue.emplace(u, seq++, it->second);
      }
      return it->second;
    }
    int id = static_cast<int>(g.nodes.size());
    ids.emplace(std::move(key), id);
    g.nodes.push_back(p);
    g.edges.emplace_back();
    g.parent.push_back(parent);
    g.parent_rule.push_back(rule);
    g.expanded.push_back(0);
    unfolds.push_back(u);
    queue.emplace(u, seq++, id);
    return id;
  };

  add_node(congruent_normalize(p0), 0, -1, "");

  while (!queue.empty()) {
    auto [u, s, id] = queue.top();
    queue.pop();
    if (g.expanded[id] || u > unfolds[id]) continue;
    if (g.nodes.size() >= opts.max_nodes || elapsed() > opts.max_seconds) {
      g.truncated = true;
      break;
    }
    g.expanded[id] = 1;
    for (const auto& st : step(g.nodes[id], opts.step)) {
      int nu = u + (st.rule == "R-Def" ? 1 : 0);
      if (nu > opts.def_unroll_cap) {
        g.truncated = true;
        continue;
      }
      int to = add_node(congruent_normalize(st.result), nu, id, st.rule);
      g.edges[id].emplace_back(st.rule, to);
    }
  }
  return g;
}

std::string graph_to_dot(const ProcGraph& g) {
  auto esc = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream os;
  os << "digraph states {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n";
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    os << "  n" << i << " [label=\"" << esc(to_string(g.nodes[i])) << "\"";
    if (!g.expanded[i]) os << ", style=dashed";
    os << "];\n";
  }
  for (size_t i = 0; i < g.edges.size(); ++i)
    for (const auto& [rule, to] : g.edges[i])
      os << "  n" << i << " -> n" << to << " [label=\"" << esc(rule) << "\"];\n";
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Whole-graph checks

std::string ProcReport::to_text() const {
  std::ostringstream os;
  os << property << ": " << (ok ? "pass" : "FAIL");
  if (truncated) os << " (truncated)";
  os << " [" << nodes << " states]";
  if (!detail.empty()) os << "\n  " << detail;
  for (const auto& line : trace) os << "\n  " << line;
  return os.str();
}

ProcReport check_deadlock_free(const ProcPtr& p, const ExploreOptions& opts) {
  ProcGraph g = explore(p, opts);
  ProcReport r;
  r.property = "deadlock-freedom";
  r.truncated = g.truncated;
  r.nodes = g.nodes.size();
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (!g.expanded[i] || !g.edges[i].empty() || is_nil(g.nodes[i])) continue;
    r.ok = false;
    r.detail = "stuck state: " + to_string(g.nodes[i]);
    r.trace = g.trace_to(static_cast<int>(i));
    return r;
  }
  return r;
}

ProcReport check_cancellation_termination(const ProcPtr& p, const ExploreOptions& opts) {
  ExploreOptions o = opts;
  o.step.inject = FailureInjection::all();
  ProcGraph g = explore(p, o);
  ProcReport r;
  r.property = "cancellation-termination";
  r.truncated = g.truncated;
  r.nodes = g.nodes.size();
  if (g.truncated) {
    r.ok = false;
    r.detail = "state space truncated; cannot certify";
    return r;
  }

  // Backward reachability from the terminated state.
  std::vector<std::vector<int>> rev(g.nodes.size());
  for (size_t i = 0; i < g.edges.size(); ++i)
    for (const auto& [rule, to] : g.edges[i]) rev[to].push_back(static_cast<int>(i));
  std::vector<char> reaches(g.nodes.size(), 0);
  std::deque<int> work;
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (is_nil(g.nodes[i])) {
      reaches[i] = 1;
      work.push_back(static_cast<int>(i));
    }
  while (!work.empty()) {
    int cur = work.front();
    work.pop_front();
    for (int pred : rev[cur])
      if (!reaches[pred]) {
        reaches[pred] = 1;
        work.push_back(pred);
      }
  }

  for (size_t i = 0; i < g.nodes.size(); ++i) {
    Spine sp;
    peel_spine(g.nodes[i], sp);
    bool has_kill = false;
    for (const auto& c : sp.comps)
      if (c->kind == Process::Kind::Kill) has_kill = true;
    if (has_kill && !reaches[i]) {
      r.ok = false;
      r.detail = "cancellation cannot drain: " + to_string(g.nodes[i]);
      r.trace = g.trace_to(static_cast<int>(i));
      return r;
    }
  }
  return r;
}

}  // namespace mpst
