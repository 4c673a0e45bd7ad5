// Typing contexts: finite maps from channels (session endpoints s[p] or
// variables x) to types, their synchronous reduction semantics, and the
// safety / deadlock-freedom / liveness checks over the reduction graph.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/types.hpp"

namespace mpst {

// A channel: either a session endpoint s[p] or a variable x.
struct ChanId {
  bool is_var = false;
  std::string session, role;  // endpoint
  std::string var;            // variable

  static ChanId endpoint(std::string s, std::string p) {
    ChanId c;
    c.session = std::move(s);
    c.role = std::move(p);
    return c;
  }
  static ChanId variable(std::string x) {
    ChanId c;
    c.is_var = true;
    c.var = std::move(x);
    return c;
  }

  std::string str() const { return is_var ? var : session + "[" + role + "]"; }

  auto tie() const { return std::tie(is_var, session, role, var); }
  bool operator<(const ChanId& o) const { return tie() < o.tie(); }
  bool operator==(const ChanId& o) const { return tie() == o.tie(); }
};

// Entries hold a session type or a base sort (payload bindings).
struct TypingContext {
  std::map<ChanId, Payload> entries;

  bool contains(const ChanId& c) const { return entries.count(c) > 0; }
  std::string str() const;
};

struct CompositionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Disjoint union; throws CompositionError if a channel occurs in both.
TypingContext ctx_compose(const TypingContext& a, const TypingContext& b);

// Every session entry unfolds to end; base-sort entries count as ended.
bool ctx_ended(const TypingContext& g);

// Pointwise subtyping with equal domains (sorts must agree exactly).
bool ctx_subtype(const TypingContext& sub, const TypingContext& sup);

// {s[p] : G|p for each role p of G}
TypingContext ctx_of_global(const GlobalTypePtr& g, const std::string& session);

// One synchronous reduction: a select at s[p] toward q meets a branch at
// s[q] from p on a common label; both endpoints advance.
struct CtxAction {
  std::string session, from, to, label;
  std::string str() const { return session + ": " + from + "->" + to + ":" + label; }
};

std::vector<std::pair<CtxAction, TypingContext>> ctx_reduce(const TypingContext& g);

// ---------------------------------------------------------------------------
// Reduction graph and property checks

struct CtxExploreOptions {
  size_t max_nodes = 1'000'000;
  double max_seconds = 10.0;
};

struct CtxGraph {
  std::vector<TypingContext> nodes;
  std::vector<std::vector<std::pair<CtxAction, int>>> edges;
  std::vector<int> parent;                 // BFS tree for traces
  std::vector<CtxAction> parent_action;
  bool truncated = false;
  size_t expanded = 0;  // prefix of nodes with complete successor lists

  std::vector<std::string> trace_to(int node) const;
};

CtxGraph ctx_explore(const TypingContext& g0, const CtxExploreOptions& opts = {});

struct CtxReport {
  bool ok = true;
  std::string property;  // "safety" | "deadlock-freedom" | "liveness"
  bool truncated = false;
  size_t nodes = 0;
  std::string detail;
  std::vector<std::string> trace;

  std::string to_text() const;
};

// Safety: whenever s[p] selects toward q and s[q] branches from p, the
// select's labels are a subset of the branch's and payloads are compatible —
// at every reachable context.
CtxReport check_safety(const TypingContext& g0, const CtxExploreOptions& opts = {});

// Deadlock-freedom: every reduction-terminal reachable context is ended.
CtxReport check_df(const TypingContext& g0, const CtxExploreOptions& opts = {});

// Liveness: from every reachable context, every branch entry is eventually
// advanced along some extension, and every select entry can fire each of its
// labels as its next interaction along some extension.
CtxReport check_live(const TypingContext& g0, const CtxExploreOptions& opts = {});

}  // namespace mpst
