#include "mpst/frontend.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mpst/lexer.hpp"

namespace mpst::fe {

namespace {

using detail::Lexer;
using detail::Token;

[[noreturn]] void err(ErrCode c, int line, int col, const std::string& msg) {
  throw FrontendError(c, line, col, "line " + std::to_string(line) + ":" +
                                        std::to_string(col) + ": " + msg);
}

class ProtocolParser {
 public:
  explicit ProtocolParser(const std::string& text) : lx_(text) {}

  std::vector<Protocol> parse_all() {
    std::vector<Protocol> out;
    while (lx_.peek().kind != Token::Kind::Eof) out.push_back(parse_one());
    if (out.empty()) syntax("expected 'global protocol'");
    return out;
  }

 private:
  [[noreturn]] void syntax(const std::string& msg) {
    err(ErrCode::Syntax, lx_.peek().line, lx_.peek().col, msg);
  }

  void expect_kw(const std::string& kw) {
    if (!lx_.eat_ident(kw)) syntax("expected '" + kw + "'");
  }

  std::string expect_name(const std::string& what) {
    if (lx_.peek().kind != Token::Kind::Ident) syntax("expected " + what);
    return lx_.next().text;
  }

  void expect_punct(const std::string& p) {
    if (!lx_.eat(p)) syntax("expected '" + p + "'");
  }

  void check_role(const std::string& r, int line, int col) {
    if (!roles_.count(r))
      err(ErrCode::UndeclaredRole, line, col, "undeclared role '" + r + "'");
  }

  Protocol parse_one() {
    expect_kw("global");
    expect_kw("protocol");
    Protocol p;
    p.name = expect_name("protocol name");
    expect_punct("(");
    roles_.clear();
    for (;;) {
      expect_kw("role");
      Token t = lx_.peek();
      std::string r = expect_name("role name");
      if (!roles_.insert(r).second)
        err(ErrCode::DuplicateRole, t.line, t.col, "duplicate role '" + r + "'");
      p.roles.push_back(r);
      if (lx_.eat(",")) continue;
      expect_punct(")");
      break;
    }
    rec_scope_.clear();
    p.body = parse_block();
    return p;
  }

  std::vector<Stmt> parse_block() {
    expect_punct("{");
    std::vector<Stmt> stmts;
    while (!lx_.eat("}")) stmts.push_back(parse_stmt());
    return stmts;
  }

  Payload parse_payload_opt() {
    if (lx_.eat("()")) return Payload::unit();
    expect_punct("(");
    Payload pl = Payload::unit();
    if (!lx_.at(")")) {
      if (lx_.eat_ident("int")) pl = Payload::of(Sort::Int);
      else if (lx_.eat_ident("str")) pl = Payload::of(Sort::Str);
      else if (lx_.eat_ident("bool")) pl = Payload::of(Sort::Bool);
      else if (lx_.eat_ident("unit")) pl = Payload::unit();
      else syntax("expected payload sort (int, str, bool, unit)");
    }
    expect_punct(")");
    return pl;
  }

  Stmt parse_stmt() {
    Token head = lx_.peek();
    if (head.kind != Token::Kind::Ident) syntax("expected statement");

    if (head.text == "choice") {
      lx_.next();
      expect_kw("at");
      Stmt s;
      s.kind = Stmt::Kind::Choice;
      s.line = head.line;
      s.col = head.col;
      Token rt = lx_.peek();
      s.at = expect_name("role name");
      check_role(s.at, rt.line, rt.col);
      s.alts.push_back(parse_block());
      while (lx_.eat_ident("or")) s.alts.push_back(parse_block());
      if (s.alts.size() < 2) syntax("choice needs at least two alternatives ('or { ... }')");
      return s;
    }

    if (head.text == "rec") {
      lx_.next();
      Stmt s;
      s.kind = Stmt::Kind::Rec;
      s.line = head.line;
      s.col = head.col;
      s.var = expect_name("recursion label");
      rec_scope_.push_back(s.var);
      s.rec_body = parse_block();
      rec_scope_.pop_back();
      return s;
    }

    if (head.text == "continue") {
      lx_.next();
      Stmt s;
      s.kind = Stmt::Kind::Continue;
      s.line = head.line;
      s.col = head.col;
      Token vt = lx_.peek();
      s.var = expect_name("recursion label");
      if (std::find(rec_scope_.begin(), rec_scope_.end(), s.var) == rec_scope_.end())
        err(ErrCode::DanglingContinue, vt.line, vt.col,
            "continue '" + s.var + "' has no enclosing rec");
      expect_punct(";");
      return s;
    }

    // Message: Label(T) from A to B;
    Stmt s;
    s.kind = Stmt::Kind::Msg;
    s.line = head.line;
    s.col = head.col;
    s.label = expect_name("message label");
    s.payload = parse_payload_opt();
    expect_kw("from");
    Token ft = lx_.peek();
    s.from = expect_name("sender role");
    check_role(s.from, ft.line, ft.col);
    expect_kw("to");
    Token tt = lx_.peek();
    s.to = expect_name("receiver role");
    check_role(s.to, tt.line, tt.col);
    if (s.from == s.to)
      err(ErrCode::Syntax, tt.line, tt.col, "role '" + s.to + "' cannot message itself");
    expect_punct(";");
    return s;
  }

  Lexer lx_;
  std::set<std::string> roles_;
  std::vector<std::string> rec_scope_;
};

}  // namespace

Protocol parse_protocol(const std::string& text) {
  return ProtocolParser(text).parse_all().front();
}

std::vector<Protocol> parse_protocols(const std::string& text) {
  return ProtocolParser(text).parse_all();
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void render_payload(const Payload& pl, std::ostream& os) {
  os << "(";
  if (pl.is_session() || pl.sort != Sort::Unit) os << payload_to_string(pl);
  os << ")";
}

void render_block(const std::vector<Stmt>& stmts, int indent, std::ostream& os) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  for (const auto& s : stmts) {
    switch (s.kind) {
      case Stmt::Kind::Msg:
        os << pad << s.label;
        render_payload(s.payload, os);
        os << " from " << s.from << " to " << s.to << ";\n";
        break;
      case Stmt::Kind::Choice:
        os << pad << "choice at " << s.at << " {\n";
        for (size_t i = 0; i < s.alts.size(); ++i) {
          if (i) os << pad << "} or {\n";
          render_block(s.alts[i], indent + 1, os);
        }
        os << pad << "}\n";
        break;
      case Stmt::Kind::Rec:
        os << pad << "rec " << s.var << " {\n";
        render_block(s.rec_body, indent + 1, os);
        os << pad << "}\n";
        break;
      case Stmt::Kind::Continue:
        os << pad << "continue " << s.var << ";\n";
        break;
    }
  }
}

}  // namespace

std::string render(const Protocol& p) {
  std::ostringstream os;
  os << "global protocol " << p.name << "(";
  for (size_t i = 0; i < p.roles.size(); ++i) {
    if (i) os << ", ";
    os << "role " << p.roles[i];
  }
  os << ") {\n";
  render_block(p.body, 1, os);
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Lowering

namespace {

GlobalTypePtr lower_seq(const std::vector<Stmt>& stmts, size_t i, const GlobalTypePtr& tail);

GlobalTypePtr lower_stmt_then(const Stmt& s, const GlobalTypePtr& then) {
  switch (s.kind) {
    case Stmt::Kind::Msg:
      return GlobalType::make_comm(s.from, s.to,
                                   {GlobalArm{s.label, s.payload, then}});
    case Stmt::Kind::Choice: {
      std::vector<GlobalArm> arms;
      std::string receiver;
      for (const auto& alt : s.alts) {
        if (alt.empty() || alt[0].kind != Stmt::Kind::Msg || alt[0].from != s.at)
          err(ErrCode::NonDirectedChoice, s.line, s.col,
              "every alternative of 'choice at " + s.at +
                  "' must start with a message from " + s.at);
        const Stmt& first = alt[0];
        if (receiver.empty()) receiver = first.to;
        if (first.to != receiver)
          err(ErrCode::NonDirectedChoice, first.line, first.col,
              "choice alternatives must address one receiver (got '" + first.to +
                  "' after '" + receiver + "')");
        for (const auto& a : arms)
          if (a.label == first.label)
            err(ErrCode::DuplicateLabel, first.line, first.col,
                "duplicate label '" + first.label + "' in choice");
        arms.push_back(GlobalArm{first.label, first.payload, lower_seq(alt, 1, then)});
      }
      try {
        return GlobalType::make_comm(s.at, receiver, std::move(arms));
      } catch (const std::invalid_argument& e) {
        err(ErrCode::Syntax, s.line, s.col, e.what());
      }
    }
    case Stmt::Kind::Rec:
      return GlobalType::make_rec(s.var, lower_seq(s.rec_body, 0, then));
    case Stmt::Kind::Continue:
      return GlobalType::make_var(s.var);
  }
  return GlobalType::make_end();
}

GlobalTypePtr lower_seq(const std::vector<Stmt>& stmts, size_t i, const GlobalTypePtr& tail) {
  if (i >= stmts.size()) return tail;
  const Stmt& s = stmts[i];
  if (s.kind == Stmt::Kind::Continue && i + 1 < stmts.size())
    err(ErrCode::UnreachableCode, stmts[i + 1].line, stmts[i + 1].col,
        "statements after 'continue' are unreachable");
  return lower_stmt_then(s, lower_seq(stmts, i + 1, tail));
}

}  // namespace

GlobalTypePtr lower(const Protocol& p) {
  return lower_seq(p.body, 0, GlobalType::make_end());
}

LoadedProtocol load_protocol_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  LoadedProtocol lp;
  lp.protocol = parse_protocol(ss.str());
  lp.global = lower(lp.protocol);
  return lp;
}

}  // namespace mpst::fe
