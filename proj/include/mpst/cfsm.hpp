// Communicating finite-state machines derived from local types, and the
// k-bounded compatibility check over their asynchronous product.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/types.hpp"

namespace mpst {

struct CfsmTransition {
  int from = 0, to = 0;
  std::string peer;
  bool send = false;  // true: !, false: ?
  std::string label;
  Payload payload;
};

struct Cfsm {
  std::string role;
  int init = 0;
  std::vector<bool> is_final;                     // per state
  std::vector<std::vector<CfsmTransition>> out;   // per state, in arm order

  int num_states() const { return static_cast<int>(out.size()); }
};

// States are the type's subterms up to unfolding; select arms become sends,
// branch arms receives; `end` states are final. Deterministic by
// (direction, peer, label) by construction (labels are per-node distinct).
Cfsm to_cfsm(const LocalTypePtr& t, std::string role);

std::string cfsm_to_dot(const Cfsm& m);

// Sorted multiset of "peer!label" / "peer?label" transition strings.
std::vector<std::string> transition_multiset(const Cfsm& m);

// ---------------------------------------------------------------------------
// k-bounded multiparty compatibility

struct KmcOptions {
  int k = 1;                        // per ordered pair FIFO bound
  size_t max_configs = 1'000'000;   // exploration cap
  double max_seconds = 10.0;        // wall-clock cap
};

struct KmcViolation {
  std::string kind;    // "stuck" | "orphan" | "progress" | "reception"
  std::string detail;
  std::vector<std::string> trace;  // path from the initial configuration
};

struct KmcReport {
  bool ok = true;
  bool truncated = false;  // hit a cap before exhausting the k-bounded space
  size_t configs = 0;
  std::optional<KmcViolation> violation;

  std::string to_text() const;
};

// Explores the k-bounded asynchronous product of the machines (one per role,
// FIFO buffer per ordered pair) and checks:
//  - every terminal configuration is final with drained buffers,
//  - a machine in a non-final receive-only state can always eventually move,
//  - every buffered message can eventually be received.
KmcReport kmc_check(const std::map<std::string, LocalTypePtr>& locals,
                    const KmcOptions& opts = {});

}  // namespace mpst
