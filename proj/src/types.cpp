#include "mpst/types.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "mpst/lexer.hpp"

namespace mpst {

std::string sort_name(Sort s) {
  switch (s) {
    case Sort::Unit: return "unit";
    case Sort::Int: return "int";
    case Sort::Str: return "str";
    case Sort::Bool: return "bool";
  }
  return "?";
}

bool payload_equal(const Payload& a, const Payload& b) {
  if (a.is_session() != b.is_session()) return false;
  if (a.is_session()) return alpha_equal(a.session, b.session);
  return a.sort == b.sort;
}

std::string payload_to_string(const Payload& p) {
  return p.is_session() ? to_string(p.session) : sort_name(p.sort);
}

// ---------------------------------------------------------------------------
// Constructors

namespace {

void check_labels_distinct(const std::vector<std::string>& labels) {
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second)
      throw std::invalid_argument("duplicate label '" + l + "' in choice");
}

template <typename Arm>
std::vector<std::string> labels_of(const std::vector<Arm>& arms) {
  std::vector<std::string> ls;
  ls.reserve(arms.size());
  for (const auto& a : arms) ls.push_back(a.label);
  return ls;
}

}  // namespace

LocalTypePtr LocalType::make_end() {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::End;
  return t;
}

LocalTypePtr LocalType::make_var(std::string name) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Var;
  t->var = std::move(name);
  return t;
}

LocalTypePtr LocalType::make_rec(std::string binder, LocalTypePtr body) {
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Rec;
  t->var = std::move(binder);
  t->body = std::move(body);
  return t;
}

LocalTypePtr LocalType::make_branch(std::string peer, std::vector<LocalArm> arms) {
  if (arms.empty()) throw std::invalid_argument("empty branch");
  check_labels_distinct(labels_of(arms));
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Branch;
  t->peer = std::move(peer);
  t->arms = std::move(arms);
  return t;
}

LocalTypePtr LocalType::make_select(std::string peer, std::vector<LocalArm> arms) {
  if (arms.empty()) throw std::invalid_argument("empty select");
  check_labels_distinct(labels_of(arms));
  auto t = std::make_shared<LocalType>();
  t->kind = Kind::Select;
  t->peer = std::move(peer);
  t->arms = std::move(arms);
  return t;
}

GlobalTypePtr GlobalType::make_end() {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::End;
  return g;
}

GlobalTypePtr GlobalType::make_var(std::string name) {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Var;
  g->var = std::move(name);
  return g;
}

GlobalTypePtr GlobalType::make_rec(std::string binder, GlobalTypePtr body) {
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Rec;
  g->var = std::move(binder);
  g->body = std::move(body);
  return g;
}

GlobalTypePtr GlobalType::make_comm(std::string from, std::string to,
                                    std::vector<GlobalArm> arms) {
  if (from == to) throw std::invalid_argument("self-communication " + from + "->" + to);
  if (arms.empty()) throw std::invalid_argument("empty communication");
  check_labels_distinct(labels_of(arms));
  auto g = std::make_shared<GlobalType>();
  g->kind = Kind::Comm;
  g->from = std::move(from);
  g->to = std::move(to);
  g->arms = std::move(arms);
  return g;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

bool payload_is_unit(const Payload& p) { return !p.is_session() && p.sort == Sort::Unit; }

void print_local(const LocalTypePtr& t, std::ostream& os);

void print_local_arm(const LocalArm& a, std::ostream& os) {
  os << a.label;
  if (!payload_is_unit(a.payload)) os << "(" << payload_to_string(a.payload) << ")";
  os << ". ";
  print_local(a.cont, os);
}

void print_local(const LocalTypePtr& t, std::ostream& os) {
  switch (t->kind) {
    case LocalType::Kind::End: os << "end"; return;
    case LocalType::Kind::Var: os << t->var; return;
    case LocalType::Kind::Rec:
      os << "mu " << t->var << ". ";
      print_local(t->body, os);
      return;
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select:
      os << t->peer << (t->kind == LocalType::Kind::Branch ? "&{" : "+{");
      for (size_t i = 0; i < t->arms.size(); ++i) {
        if (i) os << ", ";
        print_local_arm(t->arms[i], os);
      }
      os << "}";
      return;
  }
}

void print_global(const GlobalTypePtr& g, std::ostream& os) {
  switch (g->kind) {
    case GlobalType::Kind::End: os << "end"; return;
    case GlobalType::Kind::Var: os << g->var; return;
    case GlobalType::Kind::Rec:
      os << "mu " << g->var << ". ";
      print_global(g->body, os);
      return;
    case GlobalType::Kind::Comm:
      os << g->from << "->" << g->to << "{";
      for (size_t i = 0; i < g->arms.size(); ++i) {
        if (i) os << ", ";
        const auto& a = g->arms[i];
        os << a.label;
        if (!payload_is_unit(a.payload)) os << "(" << payload_to_string(a.payload) << ")";
        os << ". ";
        print_global(a.cont, os);
      }
      os << "}";
      return;
  }
}

}  // namespace

std::string to_string(const LocalTypePtr& t) {
  std::ostringstream os;
  print_local(t, os);
  return os.str();
}

std::string to_string(const GlobalTypePtr& g) {
  std::ostringstream os;
  print_global(g, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

using detail::Lexer;

Payload parse_payload(Lexer& lx);
LocalTypePtr parse_local(Lexer& lx);

LocalArm parse_local_arm(Lexer& lx) {
  LocalArm arm;
  arm.label = lx.expect_ident("label");
  arm.payload = Payload::unit();
  if (lx.eat("(")) {
    arm.payload = parse_payload(lx);
    lx.expect(")");
  }
  if (lx.eat(".")) {
    arm.cont = parse_local(lx);
  } else {
    arm.cont = LocalType::make_end();
  }
  return arm;
}

Payload parse_payload(Lexer& lx) {
  if (lx.at_ident("int")) { lx.next(); return Payload::of(Sort::Int); }
  if (lx.at_ident("str")) { lx.next(); return Payload::of(Sort::Str); }
  if (lx.at_ident("bool")) { lx.next(); return Payload::of(Sort::Bool); }
  if (lx.at_ident("unit")) { lx.next(); return Payload::unit(); }
  if (lx.at("()")) { lx.next(); return Payload::unit(); }
  return Payload::of(parse_local(lx));
}

std::vector<LocalArm> parse_local_arms(Lexer& lx) {
  lx.expect("{");
  std::vector<LocalArm> arms;
  for (;;) {
    arms.push_back(parse_local_arm(lx));
    if (lx.eat(",")) continue;
    lx.expect("}");
    break;
  }
  return arms;
}

LocalTypePtr parse_local(Lexer& lx) {
  if (lx.eat_ident("end")) return LocalType::make_end();
  if (lx.eat_ident("mu")) {
    std::string binder = lx.expect_ident("recursion variable");
    lx.expect(".");
    return LocalType::make_rec(binder, parse_local(lx));
  }
  std::string head = lx.expect_ident("type variable or peer role");
  if (lx.at("&") || lx.at("+")) {
    bool branch = lx.at("&");
    lx.next();
    auto arms = parse_local_arms(lx);
    return branch ? LocalType::make_branch(head, std::move(arms))
                  : LocalType::make_select(head, std::move(arms));
  }
  return LocalType::make_var(head);
}

GlobalTypePtr parse_global(Lexer& lx) {
  if (lx.eat_ident("end")) return GlobalType::make_end();
  if (lx.eat_ident("mu")) {
    std::string binder = lx.expect_ident("recursion variable");
    lx.expect(".");
    return GlobalType::make_rec(binder, parse_global(lx));
  }
  std::string head = lx.expect_ident("type variable or sender role");
  if (lx.eat("->")) {
    std::string to = lx.expect_ident("receiver role");
    lx.expect("{");
    std::vector<GlobalArm> arms;
    for (;;) {
      GlobalArm arm;
      arm.label = lx.expect_ident("label");
      arm.payload = Payload::unit();
      if (lx.eat("(")) {
        arm.payload = parse_payload(lx);
        lx.expect(")");
      }
      if (lx.eat(".")) {
        arm.cont = parse_global(lx);
      } else {
        arm.cont = GlobalType::make_end();
      }
      arms.push_back(std::move(arm));
      if (lx.eat(",")) continue;
      lx.expect("}");
      break;
    }
    return GlobalType::make_comm(head, to, std::move(arms));
  }
  return GlobalType::make_var(head);
}

}  // namespace

LocalTypePtr parse_local_type(const std::string& text) {
  Lexer lx(text);
  auto t = parse_local(lx);
  lx.expect_eof();
  return t;
}

namespace detail {
LocalTypePtr parse_local_at(Lexer& lx) { return parse_local(lx); }
Payload parse_payload_at(Lexer& lx) { return parse_payload(lx); }
}  // namespace detail

GlobalTypePtr parse_global_type(const std::string& text) {
  Lexer lx(text);
  auto g = parse_global(lx);
  lx.expect_eof();
  return g;
}

// ---------------------------------------------------------------------------
// Substitution / unfolding
//
// Payload session types are treated as closed terms: substitution and
// free-variable collection do not descend into them.

namespace {

void collect_free(const LocalTypePtr& t, std::vector<std::string>& bound,
                  std::vector<std::string>& out) {
  switch (t->kind) {
    case LocalType::Kind::End: return;
    case LocalType::Kind::Var:
      if (std::find(bound.begin(), bound.end(), t->var) == bound.end() &&
          std::find(out.begin(), out.end(), t->var) == out.end())
        out.push_back(t->var);
      return;
    case LocalType::Kind::Rec:
      bound.push_back(t->var);
      collect_free(t->body, bound, out);
      bound.pop_back();
      return;
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select:
      for (const auto& a : t->arms) collect_free(a.cont, bound, out);
      return;
  }
}

std::string fresh_name(const std::string& base, const std::vector<std::string>& avoid) {
  for (int i = 0;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (std::find(avoid.begin(), avoid.end(), cand) == avoid.end()) return cand;
  }
}

}  // namespace

std::vector<std::string> free_vars(const LocalTypePtr& t) {
  std::vector<std::string> bound, out;
  collect_free(t, bound, out);
  return out;
}

std::vector<std::string> g_free_vars(const GlobalTypePtr& g) {
  switch (g->kind) {
    case GlobalType::Kind::End: return {};
    case GlobalType::Kind::Var: return {g->var};
    case GlobalType::Kind::Rec: {
      auto fv = g_free_vars(g->body);
      fv.erase(std::remove(fv.begin(), fv.end(), g->var), fv.end());
      return fv;
    }
    case GlobalType::Kind::Comm: {
      std::vector<std::string> out;
      for (const auto& a : g->arms)
        for (const auto& v : g_free_vars(a.cont))
          if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
      return out;
    }
  }
  return {};
}

LocalTypePtr subst(const LocalTypePtr& t, const std::string& var, const LocalTypePtr& repl) {
  switch (t->kind) {
    case LocalType::Kind::End: return t;
    case LocalType::Kind::Var: return t->var == var ? repl : t;
    case LocalType::Kind::Rec: {
      if (t->var == var) return t;  // shadowed
      auto fv = free_vars(repl);
      if (std::find(fv.begin(), fv.end(), t->var) != fv.end()) {
        // Binder would capture a free variable of repl: rename it first.
        auto avoid = fv;
        for (const auto& v : free_vars(t->body)) avoid.push_back(v);
        std::string nv = fresh_name(t->var, avoid);
        auto renamed = subst(t->body, t->var, LocalType::make_var(nv));
        return LocalType::make_rec(nv, subst(renamed, var, repl));
      }
      return LocalType::make_rec(t->var, subst(t->body, var, repl));
    }
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select: {
      std::vector<LocalArm> arms;
      arms.reserve(t->arms.size());
      for (const auto& a : t->arms)
        arms.push_back(LocalArm{a.label, a.payload, subst(a.cont, var, repl)});
      return t->kind == LocalType::Kind::Branch
                 ? LocalType::make_branch(t->peer, std::move(arms))
                 : LocalType::make_select(t->peer, std::move(arms));
    }
  }
  return t;
}

LocalTypePtr unfold_head(const LocalTypePtr& t) {
  LocalTypePtr cur = t;
  for (int i = 0; i < 64; ++i) {
    if (cur->kind != LocalType::Kind::Rec) return cur;
    cur = subst(cur->body, cur->var, cur);
  }
  throw std::runtime_error("unguarded recursion in " + to_string(t));
}

// ---------------------------------------------------------------------------
// Alpha-equivalence

namespace {

using Env = std::vector<std::pair<std::string, std::string>>;

bool var_match(const Env& env, const std::string& a, const std::string& b) {
  for (auto it = env.rbegin(); it != env.rend(); ++it) {
    if (it->first == a || it->second == b) return it->first == a && it->second == b;
  }
  return a == b;  // both free
}

bool aeq(const LocalTypePtr& a, const LocalTypePtr& b, Env& env);

bool arms_aeq(const std::vector<LocalArm>& xs, const std::vector<LocalArm>& ys, Env& env) {
  if (xs.size() != ys.size()) return false;
  for (const auto& x : xs) {
    auto it = std::find_if(ys.begin(), ys.end(),
                           [&](const LocalArm& y) { return y.label == x.label; });
    if (it == ys.end()) return false;
    if (!payload_equal(x.payload, it->payload)) return false;
    if (!aeq(x.cont, it->cont, env)) return false;
  }
  return true;
}

bool aeq(const LocalTypePtr& a, const LocalTypePtr& b, Env& env) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case LocalType::Kind::End: return true;
    case LocalType::Kind::Var: return var_match(env, a->var, b->var);
    case LocalType::Kind::Rec: {
      env.emplace_back(a->var, b->var);
      bool ok = aeq(a->body, b->body, env);
      env.pop_back();
      return ok;
    }
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select:
      return a->peer == b->peer && arms_aeq(a->arms, b->arms, env);
  }
  return false;
}

bool g_aeq(const GlobalTypePtr& a, const GlobalTypePtr& b, Env& env) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case GlobalType::Kind::End: return true;
    case GlobalType::Kind::Var: return var_match(env, a->var, b->var);
    case GlobalType::Kind::Rec: {
      env.emplace_back(a->var, b->var);
      bool ok = g_aeq(a->body, b->body, env);
      env.pop_back();
      return ok;
    }
    case GlobalType::Kind::Comm: {
      if (a->from != b->from || a->to != b->to) return false;
      if (a->arms.size() != b->arms.size()) return false;
      for (const auto& x : a->arms) {
        auto it = std::find_if(b->arms.begin(), b->arms.end(),
                               [&](const GlobalArm& y) { return y.label == x.label; });
        if (it == b->arms.end()) return false;
        if (!payload_equal(x.payload, it->payload)) return false;
        if (!g_aeq(x.cont, it->cont, env)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

bool alpha_equal(const LocalTypePtr& a, const LocalTypePtr& b) {
  Env env;
  return aeq(a, b, env);
}

bool alpha_equal(const GlobalTypePtr& a, const GlobalTypePtr& b) {
  Env env;
  return g_aeq(a, b, env);
}

bool is_ended(const LocalTypePtr& t) {
  try {
    return unfold_head(t)->kind == LocalType::Kind::End;
  } catch (const std::runtime_error&) {
    return false;
  }
}

std::vector<std::string> peers_of(const LocalTypePtr& t) {
  std::vector<std::string> out;
  std::vector<const LocalType*> stack{t.get()};
  while (!stack.empty()) {
    const LocalType* cur = stack.back();
    stack.pop_back();
    switch (cur->kind) {
      case LocalType::Kind::End:
      case LocalType::Kind::Var:
        break;
      case LocalType::Kind::Rec:
        stack.push_back(cur->body.get());
        break;
      case LocalType::Kind::Branch:
      case LocalType::Kind::Select:
        if (std::find(out.begin(), out.end(), cur->peer) == out.end())
          out.push_back(cur->peer);
        for (auto it = cur->arms.rbegin(); it != cur->arms.rend(); ++it)
          stack.push_back(it->cont.get());
        break;
    }
  }
  return out;
}

std::vector<std::string> roles_of(const GlobalTypePtr& g) {
  std::vector<std::string> out;
  std::vector<const GlobalType*> stack{g.get()};
  auto add = [&](const std::string& r) {
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  };
  while (!stack.empty()) {
    const GlobalType* cur = stack.back();
    stack.pop_back();
    switch (cur->kind) {
      case GlobalType::Kind::End:
      case GlobalType::Kind::Var:
        break;
      case GlobalType::Kind::Rec:
        stack.push_back(cur->body.get());
        break;
      case GlobalType::Kind::Comm:
        add(cur->from);
        add(cur->to);
        for (auto it = cur->arms.rbegin(); it != cur->arms.rend(); ++it)
          stack.push_back(it->cont.get());
        break;
    }
  }
  return out;
}

}  // namespace mpst
