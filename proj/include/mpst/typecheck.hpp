// Typechecking of affine processes against typing contexts, and the shape
// checks a freshly-started program must satisfy before exploration results
// (deadlock-freedom, cancellation termination) transfer to it.
#pragma once

#include <string>

#include "mpst/context.hpp"
#include "mpst/process.hpp"
#include "mpst/types.hpp"

namespace mpst {

struct TypecheckReport {
  bool ok = true;
  std::string error;  // first failure, with a breadcrumb path
};

// Syntax-directed checking of `p` against `ctx`:
//  - 0 and leftover entries must be ended (base sorts count as ended);
//  - selects need the label in the (unfolded) entry and a compatible payload,
//    session payloads are consumed, base values are not;
//  - branches must handle every label the entry can deliver; arms binding a
//    session payload introduce it, arms without a binder may only drop units
//    and base values;
//  - parallel splits the context by free-channel ownership; entries used by
//    no component must be ended, or belong to a kill of their session;
//  - try blocks must be about exactly one channel, and block and handler both
//    consume the whole context;
//  - cancellation consumes its entry; kill accepts any entries of its own
//    session and ended ones otherwise;
//  - definitions type their bodies under exactly the declared parameters and
//    may recurse; call arguments may be subtypes of the declared parameters.
TypecheckReport typecheck(const TypingContext& ctx, const ProcPtr& p);

// A program is in initial shape for a global type G when it is a single
// restriction (new s: ann) over one component per role of G, where:
//  (1) ann gives s[p] exactly G's projection onto p (extra entries ended),
//  (2) component i uses exactly the free channel s[p_i], each role once,
//  (3) every definition body is `try ... catch H` with a call-free handler,
//  (4) no kill appears anywhere, and
//  (5) the body typechecks against ann.
struct InitialCheck {
  bool ok = true;
  std::string error;
};

InitialCheck initial_program_check(const ProcPtr& p, const GlobalTypePtr& g);

}  // namespace mpst
