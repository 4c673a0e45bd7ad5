// Affine multiparty processes: syntax, structural-congruence normal forms,
// the labelled reduction relation (communication, cancellation, exception
// handling, process definitions), and bounded state-space exploration.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mpst/context.hpp"
#include "mpst/types.hpp"

namespace mpst {

// Select payloads: unit, literals, or a channel (delegation / forwarding).
struct Data {
  enum class Kind { Unit, Int, Str, Chan } kind = Kind::Unit;
  int64_t int_v = 0;
  std::string str_v;
  ChanId chan;

  static Data unit() { return {}; }
  static Data of_int(int64_t v) { Data d; d.kind = Kind::Int; d.int_v = v; return d; }
  static Data of_str(std::string v) { Data d; d.kind = Kind::Str; d.str_v = std::move(v); return d; }
  static Data of_chan(ChanId c) { Data d; d.kind = Kind::Chan; d.chan = std::move(c); return d; }

  std::string str() const;
  Sort sort() const;  // literal sort (Chan has none; returns Unit for unit)
};

struct Process;
using ProcPtr = std::shared_ptr<const Process>;

struct ProcArm {
  std::string label;
  std::string var;  // payload binder; empty when the arm binds nothing
  ProcPtr cont;
};

struct DefParam {
  std::string var;
  Payload type;
};

struct ResBinding {
  ChanId chan;
  Payload type;
};

// P ::= 0 | P|P | (new s: {anns}) P | c[q]+l<d>.P | c[q]&{l(x).P, ...}
//     | ?-prefixed affine variants | try P catch Q | cancel(c).P | kill s
//     | def X(x:T,...) = P in Q | X<c,...>
struct Process {
  enum class Kind { Nil, Par, Res, Select, Branch, Def, Call, Try, Cancel, Kill };
  Kind kind;

  std::vector<ProcPtr> parts;          // Par
  std::string session;                 // Res / Kill
  std::vector<ResBinding> annotation;  // Res
  ProcPtr body;                        // Res / Def (definition body) / Try (block)
  ChanId chan;                         // Select / Branch / Cancel
  std::string other;                   // Select / Branch partner role
  bool affine = false;                 // Select / Branch
  std::string label;                   // Select
  Data data;                           // Select
  ProcPtr cont;                        // Select / Cancel / Def (scope)
  std::vector<ProcArm> arms;           // Branch
  std::string name;                    // Def / Call
  std::vector<DefParam> params;        // Def
  std::vector<ChanId> args;            // Call
  ProcPtr handler;                     // Try

  static ProcPtr nil();
  static ProcPtr par(std::vector<ProcPtr> parts);
  static ProcPtr res(std::string session, std::vector<ResBinding> ann, ProcPtr body);
  static ProcPtr select(ChanId chan, std::string other, bool affine, std::string label,
                        Data data, ProcPtr cont);
  static ProcPtr branch(ChanId chan, std::string other, bool affine,
                        std::vector<ProcArm> arms);
  static ProcPtr def(std::string name, std::vector<DefParam> params, ProcPtr body,
                     ProcPtr cont);
  static ProcPtr call(std::string name, std::vector<ChanId> args);
  static ProcPtr try_catch(ProcPtr body, ProcPtr handler);
  static ProcPtr cancel(ChanId chan, ProcPtr cont);
  static ProcPtr kill(std::string session);
};

std::string to_string(const ProcPtr& p);
ProcPtr parse_process(const std::string& text);

// Free channels (endpoints and variables) and free session names.
std::set<ChanId> free_chans(const ProcPtr& p);
std::set<std::string> free_sessions(const ProcPtr& p);

// Subjects: the channels a process is about to use. Calls resolve through
// `defs` with a bounded number of unfoldings.
std::set<ChanId> subjects(const ProcPtr& p,
                          const std::vector<ProcPtr>& defs = {});

// Capture-avoiding substitutions.
ProcPtr subst_var(const ProcPtr& p, const std::string& var, const Data& value);
ProcPtr rename_session(const ProcPtr& p, const std::string& from, const std::string& to);

// Structural-congruence normal form: restrictions and definitions floated to
// a spine (alpha-renamed canonically), parallel flattened and sorted, nils
// dropped, duplicate kills merged, exhausted sessions collected. The result
// is a deterministic representative; its printed form is the node key.
ProcPtr congruent_normalize(const ProcPtr& p);

bool is_nil(const ProcPtr& p);  // after normalization

// ---------------------------------------------------------------------------
// Reduction

// Which affine prefixes may spontaneously fail.
struct FailureInjection {
  bool enabled = true;
  std::set<std::string> sessions;  // empty: any session
  std::set<std::string> roles;     // empty: any role

  static FailureInjection none() { FailureInjection f; f.enabled = false; return f; }
  static FailureInjection all() { return FailureInjection{}; }
  bool allows(const ChanId& c) const {
    return enabled && (sessions.empty() || sessions.count(c.session)) &&
           (roles.empty() || roles.count(c.role));
  }
};

struct StepOptions {
  FailureInjection inject = FailureInjection::all();
};

struct Step {
  std::string rule;  // R-Com, C-?Sel, T?Sel, C-Sel, C-?Br, T?Br, C-Br, R-Can, C-Cat, R-Def
  std::string action;  // human-readable description
  ProcPtr result;      // not yet normalized
};

// All single reductions of a normalized process, in deterministic order.
std::vector<Step> step(const ProcPtr& normalized, const StepOptions& opts = {});

// ---------------------------------------------------------------------------
// Exploration

struct ExploreOptions {
  StepOptions step;
  size_t max_nodes = 100'000;
  double max_seconds = 30.0;
  int def_unroll_cap = 8;  // per-path process-call unfoldings
};

struct ProcGraph {
  std::vector<ProcPtr> nodes;  // normalized representatives
  std::vector<std::vector<std::pair<std::string, int>>> edges;  // (rule, to)
  std::vector<int> parent;
  std::vector<std::string> parent_rule;
  bool truncated = false;
  std::vector<char> expanded;  // per node: successor list complete

  std::vector<std::string> trace_to(int node) const;
};

ProcGraph explore(const ProcPtr& p0, const ExploreOptions& opts = {});

std::string graph_to_dot(const ProcGraph& g);

// ---------------------------------------------------------------------------
// Whole-graph checks

struct ProcReport {
  bool ok = true;
  std::string property;
  bool truncated = false;
  size_t nodes = 0;
  std::string detail;
  std::vector<std::string> trace;

  std::string to_text() const;
};

// Every terminal node of the exploration is structurally 0.
ProcReport check_deadlock_free(const ProcPtr& p, const ExploreOptions& opts = {});

// With failure injection enabled, every reachable node containing a kill can
// still reduce to 0.
ProcReport check_cancellation_termination(const ProcPtr& p, const ExploreOptions& opts = {});

}  // namespace mpst
