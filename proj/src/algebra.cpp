#include "mpst/algebra.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace mpst {

// ---------------------------------------------------------------------------
// Merge

namespace {

const LocalArm* find_arm(const std::vector<LocalArm>& arms, const std::string& label) {
  for (const auto& a : arms)
    if (a.label == label) return &a;
  return nullptr;
}

[[noreturn]] void merge_fail(const std::string& msg, const std::vector<std::string>& path) {
  std::ostringstream os;
  os << "merge undefined";
  if (!path.empty()) {
    os << " at ";
    for (size_t i = 0; i < path.size(); ++i) os << (i ? "/" : "") << path[i];
  }
  os << ": " << msg;
  throw MergeError(os.str(), path);
}

LocalTypePtr merge_impl(const LocalTypePtr& a, const LocalTypePtr& b,
                        std::vector<std::string>& path) {
  if (alpha_equal(a, b)) return a;

  if (a->kind == LocalType::Kind::Rec && b->kind == LocalType::Kind::Rec) {
    // Unify binders, merge bodies.
    auto body_b =
        a->var == b->var ? b->body : subst(b->body, b->var, LocalType::make_var(a->var));
    path.push_back("mu " + a->var);
    auto body = merge_impl(a->body, body_b, path);
    path.pop_back();
    return LocalType::make_rec(a->var, body);
  }

  if (a->kind == LocalType::Kind::Branch && b->kind == LocalType::Kind::Branch &&
      a->peer == b->peer) {
    std::vector<LocalArm> arms;
    for (const auto& x : a->arms) {
      if (const LocalArm* y = find_arm(b->arms, x.label)) {
        if (!payload_equal(x.payload, y->payload))
          merge_fail("payload mismatch on label '" + x.label + "' (" +
                         payload_to_string(x.payload) + " vs " + payload_to_string(y->payload) +
                         ")",
                     path);
        path.push_back(x.label);
        auto cont = merge_impl(x.cont, y->cont, path);
        path.pop_back();
        arms.push_back(LocalArm{x.label, x.payload, cont});
      } else {
        arms.push_back(x);
      }
    }
    for (const auto& y : b->arms)
      if (!find_arm(a->arms, y.label)) arms.push_back(y);
    return LocalType::make_branch(a->peer, std::move(arms));
  }

  if (a->kind == LocalType::Kind::Select && b->kind == LocalType::Kind::Select)
    merge_fail("distinct internal choices (selects merge only when identical)", path);
  merge_fail("incompatible shapes: " + to_string(a) + " vs " + to_string(b), path);
}

}  // namespace

LocalTypePtr merge(const LocalTypePtr& a, const LocalTypePtr& b) {
  std::vector<std::string> path;
  return merge_impl(a, b, path);
}

// ---------------------------------------------------------------------------
// Projection

namespace {

bool role_occurs(const GlobalTypePtr& g, const std::string& role) {
  auto rs = roles_of(g);
  return std::find(rs.begin(), rs.end(), role) != rs.end();
}

LocalTypePtr project_impl(const GlobalTypePtr& g, const std::string& role,
                          std::vector<std::string>& path) {
  switch (g->kind) {
    case GlobalType::Kind::End: return LocalType::make_end();
    case GlobalType::Kind::Var: return LocalType::make_var(g->var);
    case GlobalType::Kind::Rec: {
      if (role_occurs(g->body, role) || !g_free_vars(g).empty()) {
        path.push_back("mu " + g->var);
        auto body = project_impl(g->body, role, path);
        path.pop_back();
        return LocalType::make_rec(g->var, body);
      }
      return LocalType::make_end();
    }
    case GlobalType::Kind::Comm: {
      auto proj_arms = [&](bool) {
        std::vector<LocalArm> arms;
        arms.reserve(g->arms.size());
        for (const auto& a : g->arms) {
          path.push_back(a.label);
          arms.push_back(LocalArm{a.label, a.payload, project_impl(a.cont, role, path)});
          path.pop_back();
        }
        return arms;
      };
      if (g->from == role) return LocalType::make_select(g->to, proj_arms(true));
      if (g->to == role) return LocalType::make_branch(g->from, proj_arms(false));
      // Bystander: all continuations must merge.
      LocalTypePtr acc;
      for (const auto& a : g->arms) {
        path.push_back(a.label);
        auto p = project_impl(a.cont, role, path);
        path.pop_back();
        if (!acc) {
          acc = p;
        } else {
          try {
            acc = merge_impl(acc, p, path);
          } catch (const MergeError& e) {
            throw ProjectionError(role, e.what(), e.path);
          }
        }
      }
      return acc;
    }
  }
  return LocalType::make_end();
}

// Guardedness: inside every recursion, stripping nested binders must not
// reach a variable bound by one of them.
void check_guarded(const GlobalTypePtr& g, std::vector<std::string>& errors) {
  switch (g->kind) {
    case GlobalType::Kind::End:
    case GlobalType::Kind::Var:
      return;
    case GlobalType::Kind::Rec: {
      std::set<std::string> binders;
      const GlobalType* cur = g.get();
      while (cur->kind == GlobalType::Kind::Rec) {
        binders.insert(cur->var);
        cur = cur->body.get();
      }
      if (cur->kind == GlobalType::Kind::Var && binders.count(cur->var))
        errors.push_back("unguarded recursion variable '" + cur->var + "'");
      check_guarded(g->body, errors);
      return;
    }
    case GlobalType::Kind::Comm:
      for (const auto& a : g->arms) check_guarded(a.cont, errors);
      return;
  }
}

}  // namespace

LocalTypePtr project(const GlobalTypePtr& g, const std::string& role) {
  std::vector<std::string> path;
  return project_impl(g, role, path);
}

WellFormedReport well_formed(const GlobalTypePtr& g) {
  WellFormedReport rep;
  for (const auto& v : g_free_vars(g))
    rep.errors.push_back("free recursion variable '" + v + "'");
  check_guarded(g, rep.errors);
  if (rep.errors.empty()) {
    for (const auto& role : roles_of(g)) {
      try {
        rep.projections[role] = project(g, role);
      } catch (const ProjectionError& e) {
        rep.errors.push_back(e.what());
      }
    }
  }
  rep.ok = rep.errors.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Subtyping

namespace {

bool payload_sub(const Payload& sub, const Payload& sup);

bool subtype_impl(const LocalTypePtr& a, const LocalTypePtr& b,
                  std::set<std::pair<std::string, std::string>>& seen) {
  LocalTypePtr x, y;
  try {
    x = unfold_head(a);
    y = unfold_head(b);
  } catch (const std::runtime_error&) {
    return false;
  }
  auto key = std::make_pair(to_string(x), to_string(y));
  if (!seen.insert(key).second) return true;  // coinductive assumption

  if (x->kind == LocalType::Kind::End && y->kind == LocalType::Kind::End) return true;
  if (x->kind == LocalType::Kind::Var && y->kind == LocalType::Kind::Var)
    return x->var == y->var;

  if (x->kind == LocalType::Kind::Branch && y->kind == LocalType::Kind::Branch &&
      x->peer == y->peer) {
    // x's labels must all be handled by y; payloads/continuations covariant.
    for (const auto& xa : x->arms) {
      const LocalArm* ya = find_arm(y->arms, xa.label);
      if (!ya) return false;
      if (!payload_sub(xa.payload, ya->payload)) return false;
      if (!subtype_impl(xa.cont, ya->cont, seen)) return false;
    }
    return true;
  }

  if (x->kind == LocalType::Kind::Select && y->kind == LocalType::Kind::Select &&
      x->peer == y->peer) {
    // y's labels must all be selectable in x; payloads contravariant.
    for (const auto& ya : y->arms) {
      const LocalArm* xa = find_arm(x->arms, ya.label);
      if (!xa) return false;
      if (!payload_sub(ya.payload, xa->payload)) return false;
      if (!subtype_impl(xa->cont, ya.cont, seen)) return false;
    }
    return true;
  }
  return false;
}

bool payload_sub(const Payload& sub, const Payload& sup) {
  if (sub.is_session() != sup.is_session()) return false;
  if (!sub.is_session()) return sub.sort == sup.sort;
  std::set<std::pair<std::string, std::string>> seen;
  return subtype_impl(sub.session, sup.session, seen);
}

}  // namespace

bool subtype(const LocalTypePtr& sub, const LocalTypePtr& sup) {
  std::set<std::pair<std::string, std::string>> seen;
  return subtype_impl(sub, sup, seen);
}

// ---------------------------------------------------------------------------
// Duality

LocalTypePtr dual(const LocalTypePtr& t) {
  switch (t->kind) {
    case LocalType::Kind::End:
    case LocalType::Kind::Var:
      return t;
    case LocalType::Kind::Rec:
      return LocalType::make_rec(t->var, dual(t->body));
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select: {
      std::vector<LocalArm> arms;
      arms.reserve(t->arms.size());
      for (const auto& a : t->arms) arms.push_back(LocalArm{a.label, a.payload, dual(a.cont)});
      return t->kind == LocalType::Kind::Branch
                 ? LocalType::make_select(t->peer, std::move(arms))
                 : LocalType::make_branch(t->peer, std::move(arms));
    }
  }
  return t;
}

namespace {

// Renames every interaction peer to `to` (used to compare the two ends of a
// binary behaviour, whose peer fields name each other).
LocalTypePtr rename_peers(const LocalTypePtr& t, const std::string& to) {
  switch (t->kind) {
    case LocalType::Kind::End:
    case LocalType::Kind::Var:
      return t;
    case LocalType::Kind::Rec:
      return LocalType::make_rec(t->var, rename_peers(t->body, to));
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select: {
      std::vector<LocalArm> arms;
      for (const auto& a : t->arms)
        arms.push_back(LocalArm{a.label, a.payload, rename_peers(a.cont, to)});
      return t->kind == LocalType::Kind::Branch
                 ? LocalType::make_branch(to, std::move(arms))
                 : LocalType::make_select(to, std::move(arms));
    }
  }
  return t;
}

}  // namespace

bool mutually_dual(const LocalTypePtr& mine, const std::string& me,
                   const LocalTypePtr& theirs, const std::string& other) {
  for (const auto& p : peers_of(mine))
    if (p != other) return false;
  for (const auto& p : peers_of(theirs))
    if (p != me) return false;
  return alpha_equal(rename_peers(dual(mine), me), theirs);
}

// ---------------------------------------------------------------------------
// Binary views

namespace {

// Pointwise join of two views of the same role toward the same peer across
// the arms of a choice the peer does not (yet) observe: branch heads union
// like merge, select heads union dually (late learners see an internal
// choice), everything else must agree.
LocalTypePtr view_join(const LocalTypePtr& a, const LocalTypePtr& b) {
  if (alpha_equal(a, b)) return a;

  if (a->kind == LocalType::Kind::Rec && b->kind == LocalType::Kind::Rec) {
    auto body_b =
        a->var == b->var ? b->body : subst(b->body, b->var, LocalType::make_var(a->var));
    return LocalType::make_rec(a->var, view_join(a->body, body_b));
  }

  bool both_branch =
      a->kind == LocalType::Kind::Branch && b->kind == LocalType::Kind::Branch;
  bool both_select =
      a->kind == LocalType::Kind::Select && b->kind == LocalType::Kind::Select;
  if ((both_branch || both_select) && a->peer == b->peer) {
    std::vector<LocalArm> arms;
    for (const auto& x : a->arms) {
      if (const LocalArm* y = find_arm(b->arms, x.label)) {
        if (!payload_equal(x.payload, y->payload))
          throw ViewError("binary view join: payload mismatch on label '" + x.label + "'");
        arms.push_back(LocalArm{x.label, x.payload, view_join(x.cont, y->cont)});
      } else {
        arms.push_back(x);
      }
    }
    for (const auto& y : b->arms)
      if (!find_arm(a->arms, y.label)) arms.push_back(y);
    return both_branch ? LocalType::make_branch(a->peer, std::move(arms))
                       : LocalType::make_select(a->peer, std::move(arms));
  }
  throw ViewError("binary view join undefined: " + to_string(a) + " vs " + to_string(b));
}

bool peer_occurs(const LocalTypePtr& t, const std::string& peer) {
  auto ps = peers_of(t);
  return std::find(ps.begin(), ps.end(), peer) != ps.end();
}

}  // namespace

LocalTypePtr binary_view(const LocalTypePtr& t, const std::string& peer) {
  switch (t->kind) {
    case LocalType::Kind::End: return t;
    case LocalType::Kind::Var: return t;
    case LocalType::Kind::Rec: {
      if (peer_occurs(t->body, peer) || !free_vars(t).empty())
        return LocalType::make_rec(t->var, binary_view(t->body, peer));
      return LocalType::make_end();
    }
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select: {
      if (t->peer == peer) {
        std::vector<LocalArm> arms;
        for (const auto& a : t->arms)
          arms.push_back(LocalArm{a.label, a.payload, binary_view(a.cont, peer)});
        return t->kind == LocalType::Kind::Branch
                   ? LocalType::make_branch(peer, std::move(arms))
                   : LocalType::make_select(peer, std::move(arms));
      }
      LocalTypePtr acc;
      for (const auto& a : t->arms) {
        auto v = binary_view(a.cont, peer);
        acc = acc ? view_join(acc, v) : v;
      }
      return acc;
    }
  }
  return LocalType::make_end();
}

std::map<std::string, LocalTypePtr> to_binary_views(const LocalTypePtr& t) {
  std::map<std::string, LocalTypePtr> out;
  for (const auto& peer : peers_of(t)) out[peer] = binary_view(t, peer);
  return out;
}

// ---------------------------------------------------------------------------
// Stacks

std::vector<StackEntry> stack_of(const LocalTypePtr& t) {
  std::vector<StackEntry> out;
  const LocalType* cur = t.get();
  for (;;) {
    switch (cur->kind) {
      case LocalType::Kind::End:
      case LocalType::Kind::Var:
        out.push_back(StackEntry{StackEntry::Kind::End, ""});
        return out;
      case LocalType::Kind::Rec:
        cur = cur->body.get();
        break;
      case LocalType::Kind::Branch:
        out.push_back(StackEntry{StackEntry::Kind::Peer, cur->peer});
        if (cur->arms.size() != 1) return out;  // segment ends at received choice
        cur = cur->arms[0].cont.get();
        break;
      case LocalType::Kind::Select:
        if (cur->arms.size() != 1) {
          out.push_back(StackEntry{StackEntry::Kind::Broadcast, ""});
          return out;  // segment ends at owned choice
        }
        out.push_back(StackEntry{StackEntry::Kind::Peer, cur->peer});
        cur = cur->arms[0].cont.get();
        break;
    }
  }
}

std::map<std::string, std::vector<StackEntry>> arm_stacks(const LocalTypePtr& t) {
  std::map<std::string, std::vector<StackEntry>> out;
  const LocalType* cur = t.get();
  while (cur->kind == LocalType::Kind::Rec) cur = cur->body.get();
  if ((cur->kind == LocalType::Kind::Branch || cur->kind == LocalType::Kind::Select) &&
      cur->arms.size() > 1) {
    for (const auto& a : cur->arms) {
      std::vector<StackEntry> st{StackEntry{StackEntry::Kind::Peer, cur->peer}};
      auto rest = stack_of(a.cont);
      st.insert(st.end(), rest.begin(), rest.end());
      out[a.label] = std::move(st);
    }
  }
  return out;
}

std::string stack_to_string(const std::vector<StackEntry>& st) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < st.size(); ++i) {
    if (i) os << ", ";
    switch (st[i].kind) {
      case StackEntry::Kind::Peer: os << st[i].role; break;
      case StackEntry::Kind::Broadcast: os << "Broadcast"; break;
      case StackEntry::Kind::End: os << "End"; break;
    }
  }
  os << "]";
  return os.str();
}

// ---------------------------------------------------------------------------
// Channel matrix

int64_t channel_index(int64_t i, int64_t j, int64_t n) {
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw std::invalid_argument("channel_index: rank out of range");
  if (i == j) return 0;
  bool flip = i > j;
  if (flip) std::swap(i, j);
  int64_t idx = i * (2 * n - i - 1) / 2 + (j - i);
  return flip ? -idx : idx;
}

int64_t channel_index(const std::vector<std::string>& sorted_roles,
                      const std::string& a, const std::string& b) {
  auto rank = [&](const std::string& r) -> int64_t {
    auto it = std::find(sorted_roles.begin(), sorted_roles.end(), r);
    if (it == sorted_roles.end())
      throw std::invalid_argument("role '" + r + "' not in role list");
    return it - sorted_roles.begin();
  };
  return channel_index(rank(a), rank(b),
                       static_cast<int64_t>(sorted_roles.size()));
}

std::vector<std::vector<int64_t>> channel_matrix(std::vector<std::string> roles) {
  std::sort(roles.begin(), roles.end());
  size_t n = roles.size();
  std::vector<std::vector<int64_t>> m(n, std::vector<int64_t>(n, 0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (i != j) m[i][j] = channel_index(roles, roles[i], roles[j]);
  return m;
}

}  // namespace mpst
