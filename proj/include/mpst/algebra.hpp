// Operations on the type algebra: projection of global types onto roles,
// branch merging, subtyping, well-formedness, binary-view decomposition,
// duality, interaction stacks, and the pair-index channel matrix.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpst/types.hpp"

namespace mpst {

// Merge failure: carries the path (role + branch trail) at which the two
// candidate behaviours disagree.
struct MergeError : std::runtime_error {
  std::vector<std::string> path;
  explicit MergeError(std::string msg, std::vector<std::string> path_ = {})
      : std::runtime_error(std::move(msg)), path(std::move(path_)) {}
};

// Partial merge of two local behaviours of the same role:
//  - branches on the same peer combine arms (common labels need identical
//    payloads and mergeable continuations; disjoint labels union),
//  - selects and everything else must be alpha-equal,
//  - recursions merge bodywise.
// Throws MergeError with a breadcrumb path when undefined.
LocalTypePtr merge(const LocalTypePtr& a, const LocalTypePtr& b);

struct ProjectionError : std::runtime_error {
  std::string role;
  std::vector<std::string> path;
  ProjectionError(std::string role_, std::string msg, std::vector<std::string> path_)
      : std::runtime_error("projection onto " + role_ + ": " + msg),
        role(std::move(role_)), path(std::move(path_)) {}
};

// Projects a global type onto one role. Throws ProjectionError when the
// bystander merge is undefined.
LocalTypePtr project(const GlobalTypePtr& g, const std::string& role);

// Well-formedness: closed, guarded, distinct labels, no self-messaging, and
// every role's projection defined.
struct WellFormedReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::map<std::string, LocalTypePtr> projections;  // only roles that project
};

WellFormedReport well_formed(const GlobalTypePtr& g);

// Coinductive subtyping on local types (channel-oriented order):
//  - branch: fewer labels <= more labels, payloads and continuations covariant;
//  - select: more labels <= fewer labels, payloads contravariant,
//    continuations covariant;
//  - recursion by unfolding, with an assumption set for cycles.
bool subtype(const LocalTypePtr& sub, const LocalTypePtr& sup);

// Syntactic dual of a binary behaviour: swaps branch/select throughout,
// keeping peers, labels and payloads.
LocalTypePtr dual(const LocalTypePtr& t);

// True iff `mine` (owned by `me`, peers all equal the other role) and
// `theirs` (owned by the other role, peers all equal `me`) are two ends of
// one binary protocol: flipping mine and renaming its peer to `me` yields
// theirs.
bool mutually_dual(const LocalTypePtr& mine, const std::string& me,
                   const LocalTypePtr& theirs, const std::string& other);

// ---------------------------------------------------------------------------
// Binary-view decomposition
//
// to_binary_views restricts a role's local type to its conversation with each
// peer. Choice points not involving the peer join pointwise: branch heads
// union like merge, select heads union dually (the owner or an informed
// forwarder appears as an internal chooser to late learners).

struct ViewError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// View of `t` restricted to interactions with `peer`.
LocalTypePtr binary_view(const LocalTypePtr& t, const std::string& peer);

// Views toward every peer occurring in `t`, keyed by peer role.
std::map<std::string, LocalTypePtr> to_binary_views(const LocalTypePtr& t);

// ---------------------------------------------------------------------------
// Interaction stacks

struct StackEntry {
  enum class Kind { Peer, Broadcast, End } kind;
  std::string role;  // Kind::Peer
};

// Straight-line interaction order of a type segment: singleton nodes emit
// their peer; the first multi-arm point emits its peer (received choice) or
// Broadcast (owned choice) and terminates the segment; end / loop-back emit
// the End marker.
std::vector<StackEntry> stack_of(const LocalTypePtr& t);

// When the head (under recursion) is a multi-arm choice: per-label segment
// stacks, each starting with the choice interaction itself. Empty otherwise.
std::map<std::string, std::vector<StackEntry>> arm_stacks(const LocalTypePtr& t);

std::string stack_to_string(const std::vector<StackEntry>& st);

// ---------------------------------------------------------------------------
// Channel matrix
//
// With roles sorted alphanumerically and ranked from 0, the binary channel
// between distinct roles a<b gets index i*(2n-i-1)/2 + (j-i) (1-based); the
// reverse direction is the negated index.

int64_t channel_index(const std::vector<std::string>& sorted_roles,
                      const std::string& a, const std::string& b);

// Rank form: 0-based ranks i, j (i != j) out of n roles.
int64_t channel_index(int64_t i, int64_t j, int64_t n);

// Full n x n matrix (diagonal 0) for display; roles sorted internally.
std::vector<std::vector<int64_t>> channel_matrix(std::vector<std::string> roles);

}  // namespace mpst
