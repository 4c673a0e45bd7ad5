#include "mpst/cfsm.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>
#include <sstream>

namespace mpst {

// ---------------------------------------------------------------------------
// Local type -> CFSM

Cfsm to_cfsm(const LocalTypePtr& t, std::string role) {
  Cfsm m;
  m.role = std::move(role);

  std::map<std::string, int> ids;  // canonical unfolded print -> state
  std::vector<LocalTypePtr> todo_types;

  auto state_of = [&](const LocalTypePtr& ty) {
    auto u = unfold_head(ty);
    auto key = to_string(u);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(m.out.size());
    ids.emplace(key, id);
    m.out.emplace_back();
    m.is_final.push_back(u->kind == LocalType::Kind::End);
    todo_types.push_back(u);
    return id;
  };

  m.init = state_of(t);
  for (size_t i = 0; i < todo_types.size(); ++i) {
    auto u = todo_types[i];
    int from = static_cast<int>(i);
    if (u->kind != LocalType::Kind::Branch && u->kind != LocalType::Kind::Select) continue;
    bool send = u->kind == LocalType::Kind::Select;
    for (const auto& arm : u->arms) {
      CfsmTransition tr;
      tr.from = from;
      tr.to = state_of(arm.cont);
      tr.peer = u->peer;
      tr.send = send;
      tr.label = arm.label;
      tr.payload = arm.payload;
      m.out[from].push_back(std::move(tr));
    }
  }
  return m;
}

std::string cfsm_to_dot(const Cfsm& m) {
  std::ostringstream os;
  os << "digraph \"" << m.role << "\" {\n  rankdir=LR;\n";
  os << "  node [shape=circle];\n";
  for (int s = 0; s < m.num_states(); ++s)
    if (m.is_final[s]) os << "  q" << s << " [shape=doublecircle];\n";
  os << "  __start [shape=point];\n  __start -> q" << m.init << ";\n";
  for (const auto& trs : m.out)
    for (const auto& tr : trs)
      os << "  q" << tr.from << " -> q" << tr.to << " [label=\"" << tr.peer
         << (tr.send ? "!" : "?") << tr.label << "\"];\n";
  os << "}\n";
  return os.str();
}

std::vector<std::string> transition_multiset(const Cfsm& m) {
  std::vector<std::string> out;
  for (const auto& trs : m.out)
    for (const auto& tr : trs)
      out.push_back(tr.peer + (tr.send ? "!" : "?") + tr.label);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// k-bounded compatibility

namespace {

struct Config {
  std::vector<int> states;
  std::vector<std::vector<std::string>> buffers;  // [sender*n + receiver] -> labels

  std::string key() const {
    std::ostringstream os;
    for (int s : states) os << s << ";";
    os << "|";
    for (const auto& b : buffers) {
      for (const auto& l : b) os << l << ",";
      os << ";";
    }
    return os.str();
  }
};

struct Edge {
  int to;
  int actor;        // role index that moved
  bool send;
  int buffer;       // sender*n + receiver index of the touched buffer
  std::string text; // rendered action
};

}  // namespace

std::string KmcReport::to_text() const {
  std::ostringstream os;
  os << (ok ? "pass" : "fail") << " configs=" << configs
     << (truncated ? " (truncated)" : "");
  if (violation) {
    os << "\nviolation: " << violation->kind << " — " << violation->detail << "\ntrace:";
    for (const auto& step : violation->trace) os << "\n  " << step;
  }
  return os.str();
}

KmcReport kmc_check(const std::map<std::string, LocalTypePtr>& locals,
                    const KmcOptions& opts) {
  KmcReport rep;
  const int n = static_cast<int>(locals.size());
  std::vector<std::string> roles;
  std::vector<Cfsm> machines;
  roles.reserve(locals.size());
  for (const auto& [role, ty] : locals) {
    roles.push_back(role);
    machines.push_back(to_cfsm(ty, role));
  }
  auto role_idx = [&](const std::string& r) {
    auto it = std::find(roles.begin(), roles.end(), r);
    return it == roles.end() ? -1 : static_cast<int>(it - roles.begin());
  };

  // Breadth-first construction of the k-bounded configuration graph.
  auto started = std::chrono::steady_clock::now();
  std::vector<Config> configs;
  std::map<std::string, int> seen;
  std::vector<std::vector<Edge>> out;
  std::vector<std::pair<int, std::string>> parent;  // (config, action text)

  Config init;
  init.states.reserve(n);
  for (const auto& mch : machines) init.states.push_back(mch.init);
  init.buffers.assign(static_cast<size_t>(n) * n, {});
  configs.push_back(init);
  seen[init.key()] = 0;
  out.emplace_back();
  parent.emplace_back(-1, "");

  size_t expanded = 0;
  for (size_t head = 0; head < configs.size(); ++head, expanded = head) {
    if (configs.size() > opts.max_configs) { rep.truncated = true; break; }
    if (std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >
        opts.max_seconds) {
      rep.truncated = true;
      break;
    }
    Config cur = configs[head];
    for (int r = 0; r < n; ++r) {
      for (const auto& tr : machines[r].out[cur.states[r]]) {
        int peer = role_idx(tr.peer);
        if (peer < 0) continue;  // peer outside this system: transition disabled
        // Messages travel as label plus payload shape; a receive is enabled
        // only when both agree with the front of the FIFO.
        std::string msg = tr.label;
        if (tr.payload.is_session() || tr.payload.sort != Sort::Unit)
          msg += "(" + payload_to_string(tr.payload) + ")";
        Config nxt = cur;
        int buf;
        std::string text;
        if (tr.send) {
          buf = r * n + peer;
          if (static_cast<int>(cur.buffers[buf].size()) >= opts.k) continue;
          nxt.buffers[buf].push_back(msg);
          text = roles[r] + "!" + roles[peer] + ":" + msg;
        } else {
          buf = peer * n + r;
          if (cur.buffers[buf].empty() || cur.buffers[buf].front() != msg) continue;
          nxt.buffers[buf].erase(nxt.buffers[buf].begin());
          text = roles[r] + "?" + roles[peer] + ":" + msg;
        }
        nxt.states[r] = tr.to;
        auto key = nxt.key();
        auto it = seen.find(key);
        int to;
        if (it == seen.end()) {
          to = static_cast<int>(configs.size());
          seen.emplace(key, to);
          configs.push_back(nxt);
          out.emplace_back();
          parent.emplace_back(static_cast<int>(head), text);
        } else {
          to = it->second;
        }
        out[head].push_back(Edge{to, r, tr.send, buf, text});
      }
    }
  }
  rep.configs = configs.size();

  auto trace_to = [&](int node) {
    std::vector<std::string> steps;
    for (int c = node; parent[c].first >= 0; c = parent[c].first)
      steps.push_back(parent[c].second);
    std::reverse(steps.begin(), steps.end());
    return steps;
  };

  auto fail = [&](std::string kind, std::string detail, int node) {
    rep.ok = false;
    rep.violation = KmcViolation{std::move(kind), std::move(detail), trace_to(node)};
  };

  // Only nodes expanded before hitting a cap have a complete successor list;
  // property checks are restricted to them.
  const int explored = static_cast<int>(expanded);

  // Terminal configurations must be final with drained buffers.
  for (int c = 0; c < explored; ++c) {
    if (!out[c].empty()) continue;
    bool drained = true;
    for (const auto& b : configs[c].buffers) drained &= b.empty();
    bool finals = true;
    std::string blocked;
    for (int r = 0; r < n; ++r)
      if (!machines[r].is_final[configs[c].states[r]]) {
        finals = false;
        blocked = roles[r];
      }
    if (!drained) {
      std::string pending;
      for (int buf = 0; buf < n * n; ++buf)
        for (const auto& msg : configs[c].buffers[buf])
          pending += " " + roles[buf / n] + "->" + roles[buf % n] + ":" + msg;
      if (!finals) {
        fail("stuck", "terminal configuration with role " + blocked +
                          " mid-protocol; undelivered:" + pending, c);
      } else {
        fail("orphan", "terminal configuration with undelivered messages:" + pending, c);
      }
      return rep;
    }
    if (!finals) {
      fail("stuck", "terminal configuration with role " + blocked + " mid-protocol", c);
      return rep;
    }
  }

  // Backward reachability helper over the reversed graph.
  std::vector<std::vector<int>> rev(explored);
  for (int c = 0; c < explored; ++c)
    for (const auto& e : out[c])
      if (e.to < explored) rev[e.to].push_back(c);
  auto backward = [&](const std::vector<char>& seed) {
    std::vector<char> can = seed;
    std::deque<int> work;
    for (int c = 0; c < explored; ++c)
      if (can[c]) work.push_back(c);
    while (!work.empty()) {
      int c = work.front();
      work.pop_front();
      for (int p : rev[c])
        if (!can[p]) {
          can[p] = 1;
          work.push_back(p);
        }
    }
    return can;
  };

  // The liveness-flavoured checks need complete futures; under truncation the
  // bounded graph is incomplete, so they are skipped (reported as truncated).
  if (rep.truncated) return rep;

  // Progress: a role stuck in a non-final receive-only state must have some
  // future in which it moves.
  for (int r = 0; r < n; ++r) {
    std::vector<char> seed(explored, 0);
    for (int c = 0; c < explored; ++c)
      for (const auto& e : out[c])
        if (e.actor == r) { seed[c] = 1; break; }
    auto can_move = backward(seed);
    for (int c = 0; c < explored; ++c) {
      int st = configs[c].states[r];
      const auto& trs = machines[r].out[st];
      bool recv_only = !trs.empty() &&
                       std::all_of(trs.begin(), trs.end(),
                                   [](const CfsmTransition& t) { return !t.send; });
      if (recv_only && !can_move[c]) {
        fail("progress",
             "role " + roles[r] + " waits forever (receive-only state, no enabling future)",
             c);
        return rep;
      }
    }
  }

  // Eventual reception: every nonempty buffer can eventually be popped.
  for (int buf = 0; buf < n * n; ++buf) {
    std::vector<char> seed(explored, 0);
    bool any = false;
    for (int c = 0; c < explored; ++c)
      for (const auto& e : out[c])
        if (!e.send && e.buffer == buf) { seed[c] = 1; any = true; break; }
    std::vector<char> can_pop;
    bool computed = false;
    for (int c = 0; c < explored; ++c) {
      if (configs[c].buffers[buf].empty()) continue;
      if (!computed) {
        can_pop = any ? backward(seed) : std::vector<char>(explored, 0);
        computed = true;
      }
      if (!can_pop[c]) {
        fail("reception",
             "message '" + configs[c].buffers[buf].front() + "' from " + roles[buf / n] +
                 " to " + roles[buf % n] + " can never be received",
             c);
        return rep;
      }
    }
  }

  return rep;
}

}  // namespace mpst
