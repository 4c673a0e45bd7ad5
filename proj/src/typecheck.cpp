#include "mpst/typecheck.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "mpst/algebra.hpp"

namespace mpst {

namespace {

struct TypeError {
  std::string msg;
};

[[noreturn]] void fail(const std::string& msg) { throw TypeError{msg}; }

bool payload_ended(const Payload& p) {
  return !p.is_session() || is_ended(p.session);
}

void require_all_ended(const TypingContext& ctx, const std::string& where) {
  for (const auto& [c, t] : ctx.entries)
    if (!payload_ended(t))
      fail(where + ": channel " + c.str() + " still has obligations: " +
           payload_to_string(t));
}

// Definition environment: signatures for calls, bodies for subject analysis.
struct DefEnv {
  std::map<std::string, std::vector<Payload>> sigs;
  std::vector<ProcPtr> bodies;  // Def nodes
};

LocalTypePtr entry_session(const TypingContext& ctx, const ChanId& c) {
  auto it = ctx.entries.find(c);
  if (it == ctx.entries.end()) fail("no context entry for " + c.str());
  if (!it->second.is_session())
    fail(c.str() + " has base type " + payload_to_string(it->second) +
         ", not a session");
  return it->second.session;
}

void check(TypingContext ctx, const ProcPtr& p, DefEnv& env);

void check_select(TypingContext ctx, const ProcPtr& p, DefEnv& env) {
  LocalTypePtr t = unfold_head(entry_session(ctx, p->chan));
  if (t->kind != LocalType::Kind::Select)
    fail(p->chan.str() + ": type " + to_string(t) + " does not permit a select");
  if (t->peer != p->other)
    fail(p->chan.str() + ": select toward " + p->other + " but type expects peer " +
         t->peer);
  const LocalArm* arm = nullptr;
  for (const auto& a : t->arms)
    if (a.label == p->label) arm = &a;
  if (!arm)
    fail(p->chan.str() + ": label " + p->label + " not offered by " + to_string(t));

  if (p->data.kind == Data::Kind::Chan) {
    auto it = ctx.entries.find(p->data.chan);
    if (it == ctx.entries.end())
      fail("payload channel " + p->data.chan.str() + " is not in the context");
    if (arm->payload.is_session()) {
      if (!it->second.is_session() ||
          !subtype(it->second.session, arm->payload.session))
        fail("payload " + p->data.chan.str() + ": " + payload_to_string(it->second) +
             " is not a subtype of " + payload_to_string(arm->payload));
      ctx.entries.erase(p->data.chan);  // delegated: consumed here
    } else {
      if (it->second.is_session() || it->second.sort != arm->payload.sort)
        fail("payload " + p->data.chan.str() + ": expected sort " +
             payload_to_string(arm->payload) + ", context has " +
             payload_to_string(it->second));
    }
  } else {
    if (arm->payload.is_session())
      fail("label " + p->label + " carries a session; a literal cannot supply it");
    if (arm->payload.sort != p->data.sort())
      fail("label " + p->label + ": literal " + p->data.str() + " is not of sort " +
           payload_to_string(arm->payload));
  }
  ctx.entries[p->chan] = Payload::of(arm->cont);
  check(std::move(ctx), p->cont, env);
}

void check_branch(TypingContext ctx, const ProcPtr& p, DefEnv& env) {
  LocalTypePtr t = unfold_head(entry_session(ctx, p->chan));
  if (t->kind != LocalType::Kind::Branch)
    fail(p->chan.str() + ": type " + to_string(t) + " does not permit a branch");
  if (t->peer != p->other)
    fail(p->chan.str() + ": branch from " + p->other + " but type expects peer " +
         t->peer);
  for (const auto& ta : t->arms) {
    const ProcArm* pa = nullptr;
    for (const auto& a : p->arms)
      if (a.label == ta.label) pa = &a;
    if (!pa)
      fail(p->chan.str() + ": label " + ta.label + " can arrive but is not handled");
    TypingContext sub = ctx;
    sub.entries[p->chan] = Payload::of(ta.cont);
    if (!pa->var.empty()) {
      ChanId x = ChanId::variable(pa->var);
      if (sub.entries.count(x))
        fail("binder " + pa->var + " shadows an existing context entry");
      sub.entries[x] = ta.payload;
    } else if (ta.payload.is_session() && !is_ended(ta.payload.session)) {
      fail(p->chan.str() + ": label " + ta.label +
           " delivers a live session; the arm must bind it");
    }
    check(std::move(sub), pa->cont, env);
  }
  // Arms for labels the type can never deliver are unreachable: not checked.
}

void check_par(TypingContext ctx, const ProcPtr& p, DefEnv& env) {
  if (p->parts.empty()) {
    require_all_ended(ctx, "inactive process");
    return;
  }
  std::vector<std::set<ChanId>> fcs;
  for (const auto& q : p->parts) fcs.push_back(free_chans(q));
  std::vector<TypingContext> split(p->parts.size());
  for (const auto& [c, t] : ctx.entries) {
    int owner = -1;
    for (size_t i = 0; i < fcs.size(); ++i) {
      if (!fcs[i].count(c)) continue;
      if (owner >= 0)
        fail("channel " + c.str() + " is used by two parallel components");
      owner = static_cast<int>(i);
    }
    if (owner < 0) {
      if (payload_ended(t)) {
        owner = 0;
      } else if (!c.is_var) {
        for (size_t i = 0; i < p->parts.size() && owner < 0; ++i)
          if (p->parts[i]->kind == Process::Kind::Kill &&
              p->parts[i]->session == c.session)
            owner = static_cast<int>(i);
      }
      if (owner < 0)
        fail("channel " + c.str() + " has obligations but no component uses it");
    }
    split[owner].entries[c] = t;
  }
  for (size_t i = 0; i < p->parts.size(); ++i)
    check(std::move(split[i]), p->parts[i], env);
}

void check(TypingContext ctx, const ProcPtr& p, DefEnv& env) {
  switch (p->kind) {
    case Process::Kind::Nil:
      require_all_ended(ctx, "inactive process");
      return;
    case Process::Kind::Par:
      check_par(std::move(ctx), p, env);
      return;
    case Process::Kind::Res: {
      for (const auto& [c, t] : ctx.entries)
        if (!c.is_var && c.session == p->session)
          fail("restriction on " + p->session + " shadows live entries");
      TypingContext ann;
      for (const auto& b : p->annotation) {
        if (b.chan.is_var || b.chan.session != p->session)
          fail("restriction on " + p->session + " annotates foreign channel " +
               b.chan.str());
        if (ann.entries.count(b.chan))
          fail("duplicate annotation for " + b.chan.str());
        ann.entries[b.chan] = b.type;
      }
      auto safety = check_safety(ann);
      if (!safety.ok)
        fail("annotation of " + p->session + " is unsafe: " + safety.detail);
      TypingContext inner = ctx;
      for (const auto& [c, t] : ann.entries) inner.entries[c] = t;
      check(std::move(inner), p->body, env);
      return;
    }
    case Process::Kind::Select:
      check_select(std::move(ctx), p, env);
      return;
    case Process::Kind::Branch:
      check_branch(std::move(ctx), p, env);
      return;
    case Process::Kind::Def: {
      TypingContext body_ctx;
      for (const auto& dp : p->params) {
        ChanId x = ChanId::variable(dp.var);
        if (body_ctx.entries.count(x)) fail("duplicate parameter " + dp.var);
        body_ctx.entries[x] = dp.type;
      }
      std::vector<Payload> sig;
      for (const auto& dp : p->params) sig.push_back(dp.type);
      auto saved_sig = env.sigs.count(p->name)
                           ? std::optional<std::vector<Payload>>(env.sigs[p->name])
                           : std::nullopt;
      env.sigs[p->name] = std::move(sig);
      env.bodies.push_back(p);
      check(std::move(body_ctx), p->body, env);
      check(std::move(ctx), p->cont, env);
      env.bodies.pop_back();
      if (saved_sig)
        env.sigs[p->name] = *saved_sig;
      else
        env.sigs.erase(p->name);
      return;
    }
    case Process::Kind::Call: {
      auto it = env.sigs.find(p->name);
      if (it == env.sigs.end()) fail("call of undefined process " + p->name);
      if (it->second.size() != p->args.size())
        fail("call of " + p->name + " with " + std::to_string(p->args.size()) +
             " arguments; expected " + std::to_string(it->second.size()));
      for (size_t i = 0; i < p->args.size(); ++i) {
        auto e = ctx.entries.find(p->args[i]);
        if (e == ctx.entries.end())
          fail("call argument " + p->args[i].str() + " is not in the context");
        const Payload& want = it->second[i];
        if (want.is_session()) {
          if (!e->second.is_session() || !subtype(e->second.session, want.session))
            fail("call argument " + p->args[i].str() + ": " +
                 payload_to_string(e->second) + " is not a subtype of " +
                 payload_to_string(want));
          ctx.entries.erase(e);
        } else if (e->second.is_session() || e->second.sort != want.sort) {
          fail("call argument " + p->args[i].str() + ": expected sort " +
               payload_to_string(want));
        }
      }
      require_all_ended(ctx, "call of " + p->name);
      return;
    }
    case Process::Kind::Try: {
      auto sbj = subjects(p->body, env.bodies);
      if (sbj.size() != 1)
        fail("try block must be about exactly one channel; found " +
             std::to_string(sbj.size()));
      check(ctx, p->body, env);
      check(std::move(ctx), p->handler, env);
      return;
    }
    case Process::Kind::Cancel: {
      if (!ctx.entries.count(p->chan))
        fail("cancel of " + p->chan.str() + " which is not in the context");
      ctx.entries.erase(p->chan);
      check(std::move(ctx), p->cont, env);
      return;
    }
    case Process::Kind::Kill:
      for (const auto& [c, t] : ctx.entries)
        if ((c.is_var || c.session != p->session) && !payload_ended(t))
          fail("kill " + p->session + ": channel " + c.str() +
               " of another session still has obligations");
      return;
  }
}

}  // namespace

TypecheckReport typecheck(const TypingContext& ctx, const ProcPtr& p) {
  DefEnv env;
  try {
    check(ctx, p, env);
    return {};
  } catch (const TypeError& e) {
    return {false, e.msg};
  } catch (const std::exception& e) {  // e.g. unguarded recursion in an entry
    return {false, e.what()};
  }
}

// ---------------------------------------------------------------------------
// Initial-program shape

namespace {

bool contains_kill(const ProcPtr& p) {
  switch (p->kind) {
    case Process::Kind::Kill:
      return true;
    case Process::Kind::Par:
      for (const auto& q : p->parts)
        if (contains_kill(q)) return true;
      return false;
    case Process::Kind::Res:
      return contains_kill(p->body);
    case Process::Kind::Select:
    case Process::Kind::Cancel:
      return contains_kill(p->cont);
    case Process::Kind::Branch:
      for (const auto& arm : p->arms)
        if (contains_kill(arm.cont)) return true;
      return false;
    case Process::Kind::Def:
      return contains_kill(p->body) || contains_kill(p->cont);
    case Process::Kind::Try:
      return contains_kill(p->body) || contains_kill(p->handler);
    default:
      return false;
  }
}

bool contains_call(const ProcPtr& p) {
  switch (p->kind) {
    case Process::Kind::Call:
      return true;
    case Process::Kind::Par:
      for (const auto& q : p->parts)
        if (contains_call(q)) return true;
      return false;
    case Process::Kind::Res:
      return contains_call(p->body);
    case Process::Kind::Select:
    case Process::Kind::Cancel:
      return contains_call(p->cont);
    case Process::Kind::Branch:
      for (const auto& arm : p->arms)
        if (contains_call(arm.cont)) return true;
      return false;
    case Process::Kind::Def:
      return contains_call(p->body) || contains_call(p->cont);
    case Process::Kind::Try:
      return contains_call(p->body) || contains_call(p->handler);
    default:
      return false;
  }
}

// Every definition body must be a try with a call-free handler, so a failure
// anywhere inside an unfolded body cannot restart the loop.
bool defs_guarded(const ProcPtr& p, std::string& why) {
  switch (p->kind) {
    case Process::Kind::Par:
      for (const auto& q : p->parts)
        if (!defs_guarded(q, why)) return false;
      return true;
    case Process::Kind::Res:
      return defs_guarded(p->body, why);
    case Process::Kind::Select:
    case Process::Kind::Cancel:
      return defs_guarded(p->cont, why);
    case Process::Kind::Branch:
      for (const auto& arm : p->arms)
        if (!defs_guarded(arm.cont, why)) return false;
      return true;
    case Process::Kind::Def:
      if (p->body->kind != Process::Kind::Try) {
        why = "definition " + p->name + " is not a try/catch";
        return false;
      }
      if (contains_call(p->body->handler)) {
        why = "definition " + p->name + " has a handler that re-enters a call";
        return false;
      }
      return defs_guarded(p->body, why) && defs_guarded(p->cont, why);
    case Process::Kind::Try:
      return defs_guarded(p->body, why) && defs_guarded(p->handler, why);
    default:
      return true;
  }
}

}  // namespace

InitialCheck initial_program_check(const ProcPtr& p, const GlobalTypePtr& g) {
  auto bad = [](std::string msg) { return InitialCheck{false, std::move(msg)}; };

  if (p->kind != Process::Kind::Res)
    return bad("program must start with one restriction carrying the session");
  const std::string& s = p->session;

  if (contains_kill(p)) return bad("initial programs contain no kill");
  std::string why;
  if (!defs_guarded(p->body, why)) return bad(why);

  TypingContext ann;
  for (const auto& b : p->annotation) {
    if (b.chan.is_var || b.chan.session != s)
      return bad("annotation names foreign channel " + b.chan.str());
    if (ann.entries.count(b.chan)) return bad("duplicate annotation " + b.chan.str());
    ann.entries[b.chan] = b.type;
  }

  // Annotation = projections of g, plus only ended extras.
  std::vector<std::string> roles = roles_of(g);
  for (const auto& r : roles) {
    ChanId c = ChanId::endpoint(s, r);
    auto it = ann.entries.find(c);
    if (it == ann.entries.end()) return bad("annotation is missing " + c.str());
    LocalTypePtr want;
    try {
      want = project(g, r);
    } catch (const std::exception& e) {
      return bad(std::string("global type does not project: ") + e.what());
    }
    if (!it->second.is_session() || !alpha_equal(it->second.session, want))
      return bad(c.str() + " is annotated " + payload_to_string(it->second) +
                 " but the projection is " + to_string(want));
  }
  for (const auto& [c, t] : ann.entries) {
    if (std::find(roles.begin(), roles.end(), c.role) != roles.end()) continue;
    if (!(!t.is_session() || is_ended(t.session)))
      return bad("extra annotation entry " + c.str() + " is not ended");
  }

  // One component per role, each playing exactly its own endpoint.
  std::vector<ProcPtr> comps;
  if (p->body->kind == Process::Kind::Par)
    comps = p->body->parts;
  else
    comps.push_back(p->body);
  if (comps.size() != roles.size())
    return bad("expected " + std::to_string(roles.size()) + " components, found " +
               std::to_string(comps.size()));
  std::set<std::string> seen;
  for (const auto& comp : comps) {
    auto fc = free_chans(comp);
    if (fc.size() != 1 || fc.begin()->is_var || fc.begin()->session != s)
      return bad("component must use exactly one endpoint of " + s + ": " +
                 to_string(comp));
    const std::string& role = fc.begin()->role;
    if (std::find(roles.begin(), roles.end(), role) == roles.end())
      return bad("component plays " + role + " which is not a role of the protocol");
    if (!seen.insert(role).second) return bad("two components play role " + role);
  }

  auto tc = typecheck(ann, p->body);
  if (!tc.ok) return bad(tc.error);
  return {};
}

}  // namespace mpst
