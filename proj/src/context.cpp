#include "mpst/context.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <sstream>

#include "mpst/algebra.hpp"

namespace mpst {

std::string TypingContext::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [c, t] : entries) {
    if (!first) os << "; ";
    first = false;
    os << c.str() << ": " << payload_to_string(t);
  }
  return os.str();
}

TypingContext ctx_compose(const TypingContext& a, const TypingContext& b) {
  TypingContext out = a;
  for (const auto& [c, t] : b.entries) {
    if (!out.entries.emplace(c, t).second)
      throw CompositionError("channel " + c.str() + " bound in both contexts");
  }
  return out;
}

bool ctx_ended(const TypingContext& g) {
  for (const auto& [c, t] : g.entries)
    if (t.is_session() && !is_ended(t.session)) return false;
  return true;
}

bool ctx_subtype(const TypingContext& sub, const TypingContext& sup) {
  if (sub.entries.size() != sup.entries.size()) return false;
  for (const auto& [c, t] : sub.entries) {
    auto it = sup.entries.find(c);
    if (it == sup.entries.end()) return false;
    if (t.is_session() != it->second.is_session()) return false;
    if (t.is_session()) {
      if (!subtype(t.session, it->second.session)) return false;
    } else if (t.sort != it->second.sort) {
      return false;
    }
  }
  return true;
}

TypingContext ctx_of_global(const GlobalTypePtr& g, const std::string& session) {
  TypingContext ctx;
  for (const auto& role : roles_of(g))
    ctx.entries[ChanId::endpoint(session, role)] = Payload::of(project(g, role));
  return ctx;
}

std::vector<std::pair<CtxAction, TypingContext>> ctx_reduce(const TypingContext& g) {
  std::vector<std::pair<CtxAction, TypingContext>> out;
  for (const auto& [c, t] : g.entries) {
    if (c.is_var || !t.is_session()) continue;
    LocalTypePtr sel;
    try {
      sel = unfold_head(t.session);
    } catch (const std::runtime_error&) {
      continue;
    }
    if (sel->kind != LocalType::Kind::Select) continue;
    ChanId peer = ChanId::endpoint(c.session, sel->peer);
    auto it = g.entries.find(peer);
    if (it == g.entries.end() || !it->second.is_session()) continue;
    LocalTypePtr br;
    try {
      br = unfold_head(it->second.session);
    } catch (const std::runtime_error&) {
      continue;
    }
    if (br->kind != LocalType::Kind::Branch || br->peer != c.role) continue;
    for (const auto& sa : sel->arms) {
      auto ba = std::find_if(br->arms.begin(), br->arms.end(),
                             [&](const LocalArm& a) { return a.label == sa.label; });
      if (ba == br->arms.end()) continue;  // non-common label: safety's concern
      TypingContext nxt = g;
      nxt.entries[c] = Payload::of(sa.cont);
      nxt.entries[peer] = Payload::of(ba->cont);
      out.push_back({CtxAction{c.session, c.role, sel->peer, sa.label}, nxt});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exploration

std::vector<std::string> CtxGraph::trace_to(int node) const {
  std::vector<std::string> steps;
  for (int c = node; parent[c] >= 0; c = parent[c])
    steps.push_back(parent_action[c].str());
  std::reverse(steps.begin(), steps.end());
  return steps;
}

CtxGraph ctx_explore(const TypingContext& g0, const CtxExploreOptions& opts) {
  CtxGraph gr;
  std::map<std::string, int> seen;
  auto started = std::chrono::steady_clock::now();

  gr.nodes.push_back(g0);
  gr.edges.emplace_back();
  gr.parent.push_back(-1);
  gr.parent_action.emplace_back();
  seen[g0.str()] = 0;

  size_t head = 0;
  for (; head < gr.nodes.size(); ++head) {
    if (gr.nodes.size() > opts.max_nodes) { gr.truncated = true; break; }
    if (std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >
        opts.max_seconds) {
      gr.truncated = true;
      break;
    }
    auto succs = ctx_reduce(gr.nodes[head]);
    for (auto& [act, nxt] : succs) {
      auto key = nxt.str();
      auto it = seen.find(key);
      int to;
      if (it == seen.end()) {
        to = static_cast<int>(gr.nodes.size());
        seen.emplace(key, to);
        gr.nodes.push_back(std::move(nxt));
        gr.edges.emplace_back();
        gr.parent.push_back(static_cast<int>(head));
        gr.parent_action.push_back(act);
      } else {
        to = it->second;
      }
      gr.edges[head].push_back({act, to});
    }
  }
  gr.expanded = head;
  return gr;
}

std::string CtxReport::to_text() const {
  std::ostringstream os;
  os << property << ": " << (ok ? "pass" : "fail") << " nodes=" << nodes
     << (truncated ? " (truncated)" : "");
  if (!ok) {
    os << "\nviolation: " << detail << "\ntrace:";
    for (const auto& s : trace) os << "\n  " << s;
  }
  return os.str();
}

namespace {

CtxReport base_report(const char* prop, const CtxGraph& gr) {
  CtxReport rep;
  rep.property = prop;
  rep.truncated = gr.truncated;
  rep.nodes = gr.nodes.size();
  return rep;
}

void fill_violation(CtxReport& rep, const CtxGraph& gr, int node, std::string detail) {
  rep.ok = false;
  rep.detail = std::move(detail);
  rep.trace = gr.trace_to(node);
  rep.trace.push_back("context: " + gr.nodes[node].str());
}

// Unfolded session head of an entry, or null for sorts/unguarded types.
LocalTypePtr head_of(const Payload& t) {
  if (!t.is_session()) return nullptr;
  try {
    return unfold_head(t.session);
  } catch (const std::runtime_error&) {
    return nullptr;
  }
}

}  // namespace

CtxReport check_safety(const TypingContext& g0, const CtxExploreOptions& opts) {
  auto gr = ctx_explore(g0, opts);
  auto rep = base_report("safety", gr);
  for (size_t i = 0; i < gr.nodes.size(); ++i) {
    const auto& ctx = gr.nodes[i];
    for (const auto& [c, t] : ctx.entries) {
      if (c.is_var) continue;
      auto sel = head_of(t);
      if (!sel || sel->kind != LocalType::Kind::Select) continue;
      auto it = ctx.entries.find(ChanId::endpoint(c.session, sel->peer));
      if (it == ctx.entries.end()) continue;
      auto br = head_of(it->second);
      if (!br || br->kind != LocalType::Kind::Branch || br->peer != c.role) continue;
      for (const auto& sa : sel->arms) {
        auto ba = std::find_if(br->arms.begin(), br->arms.end(),
                               [&](const LocalArm& a) { return a.label == sa.label; });
        if (ba == br->arms.end()) {
          fill_violation(rep, gr, static_cast<int>(i),
                         "label '" + sa.label + "' selected at " + c.str() +
                             " is not offered by " + it->first.str());
          return rep;
        }
        bool payload_ok =
            sa.payload.is_session()
                ? (ba->payload.is_session() && subtype(sa.payload.session, ba->payload.session))
                : (!ba->payload.is_session() && sa.payload.sort == ba->payload.sort);
        if (!payload_ok) {
          fill_violation(rep, gr, static_cast<int>(i),
                         "payload mismatch on '" + sa.label + "' between " + c.str() +
                             " (" + payload_to_string(sa.payload) + ") and " +
                             it->first.str() + " (" + payload_to_string(ba->payload) + ")");
          return rep;
        }
      }
    }
  }
  return rep;
}

CtxReport check_df(const TypingContext& g0, const CtxExploreOptions& opts) {
  auto gr = ctx_explore(g0, opts);
  auto rep = base_report("deadlock-freedom", gr);
  for (size_t i = 0; i < gr.expanded; ++i) {
    if (!gr.edges[i].empty()) continue;
    if (!ctx_ended(gr.nodes[i])) {
      fill_violation(rep, gr, static_cast<int>(i),
                     "terminal context is not ended");
      return rep;
    }
  }
  return rep;
}

CtxReport check_live(const TypingContext& g0, const CtxExploreOptions& opts) {
  auto gr = ctx_explore(g0, opts);
  auto rep = base_report("liveness", gr);
  if (gr.truncated) {
    // Liveness needs complete futures; an incomplete graph cannot certify it.
    rep.ok = false;
    rep.detail = "exploration truncated before liveness could be established";
    return rep;
  }
  const int n = static_cast<int>(gr.nodes.size());

  // Reverse adjacency, with the acting channels of each edge.
  std::vector<std::vector<int>> rev(n);
  for (int c = 0; c < n; ++c)
    for (const auto& [act, to] : gr.edges[c]) rev[to].push_back(c);

  auto touches = [](const CtxAction& a, const ChanId& c) {
    return !c.is_var && a.session == c.session && (a.from == c.role || a.to == c.role);
  };

  // Channels ever appearing with a communication head.
  std::vector<ChanId> channels;
  for (const auto& node : gr.nodes)
    for (const auto& [c, t] : node.entries) {
      if (c.is_var || !t.is_session()) continue;
      if (std::find(channels.begin(), channels.end(), c) == channels.end())
        channels.push_back(c);
    }

  for (const auto& c : channels) {
    // can_touch: some extension has an edge touching c.
    std::vector<char> can_touch(n, 0);
    std::deque<int> work;
    for (int i = 0; i < n; ++i)
      for (const auto& [act, to] : gr.edges[i])
        if (touches(act, c)) {
          if (!can_touch[i]) { can_touch[i] = 1; work.push_back(i); }
          break;
        }
    while (!work.empty()) {
      int i = work.front();
      work.pop_front();
      for (int p : rev[i])
        if (!can_touch[p]) { can_touch[p] = 1; work.push_back(p); }
    }

    // Per select label: some extension whose first c-interaction fires it.
    // Seeds are nodes with a qualifying out-edge; propagation only along
    // edges that do not touch c.
    std::map<std::string, std::vector<char>> first_fire;
    for (int i = 0; i < n; ++i) {
      const auto& node = gr.nodes[i];
      auto it = node.entries.find(c);
      if (it == node.entries.end()) continue;
      auto head = head_of(it->second);
      if (!head) continue;

      if (head->kind == LocalType::Kind::Branch) {
        if (!can_touch[i]) {
          fill_violation(rep, gr, i,
                         "branch entry " + c.str() + " is never advanced along any extension");
          return rep;
        }
      } else if (head->kind == LocalType::Kind::Select) {
        for (const auto& arm : head->arms) {
          auto ff = first_fire.find(arm.label);
          if (ff == first_fire.end()) {
            std::vector<char> can(n, 0);
            std::deque<int> w2;
            for (int j = 0; j < n; ++j)
              for (const auto& [act, to] : gr.edges[j])
                if (act.session == c.session && act.from == c.role && act.label == arm.label) {
                  if (!can[j]) { can[j] = 1; w2.push_back(j); }
                  break;
                }
            while (!w2.empty()) {
              int j = w2.front();
              w2.pop_front();
              for (int p : rev[j]) {
                if (can[p]) continue;
                // Only propagate along edges from p that do not touch c.
                for (const auto& [act, to] : gr.edges[p])
                  if (to == j && !touches(act, c)) {
                    can[p] = 1;
                    w2.push_back(p);
                    break;
                  }
              }
            }
            ff = first_fire.emplace(arm.label, std::move(can)).first;
          }
          if (!ff->second[i]) {
            fill_violation(rep, gr, i,
                           "select entry " + c.str() + " can never fire label '" +
                               arm.label + "' as its next interaction");
            return rep;
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace mpst
