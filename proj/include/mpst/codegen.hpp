// Deterministic protocol-binding generation.
//
// From a global type, generate() derives one bundle: per-role local types,
// binary views, interaction stacks, choice alternative declarations, the
// channel-pair matrix, and backend source files.
//
//  - Backend::Neutral renders the bundle as a declarative text file.
//  - Backend::Host renders a C++ header of per-state typestate handles
//    wrapping the channel runtime: one named struct per monitor state,
//    move-only and &&-qualified, exposing exactly the operations the state
//    permits (send/recv on straight-line states, choose per owned label,
//    offer returning a std::variant of per-label alternatives, close at end).
//
// Regenerating from the same input is byte-identical: states are numbered by
// a deterministic traversal and every map iterates in sorted order.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpst/types.hpp"

namespace mpst {

enum class Backend { Neutral, Host };

struct CodegenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RoleBundle {
  std::string role;
  std::string local_type;                    // printed projection
  std::map<std::string, std::string> views;  // peer -> binary view text
  std::string stack;                         // interaction stack text
  std::vector<std::string> choices;          // choice alternative declarations
};

struct GeneratedBundle {
  std::string protocol;
  std::vector<std::string> roles;                // alphanumeric order
  std::vector<RoleBundle> per_role;              // same order
  std::vector<std::vector<std::int64_t>> matrix; // pair indices, diagonal 0
  std::map<std::string, std::string> files;      // file name -> contents
};

// Projects `g` onto every role and assembles the bundle.  The given roles
// are united with those occurring in `g`; extra roles get end behaviour.
// The host backend rejects delegated payloads (CodegenError); projection
// failures propagate.
GeneratedBundle generate(const std::string& protocol_name,
                         const std::vector<std::string>& roles,
                         const GlobalTypePtr& g, Backend backend);

}  // namespace mpst
