// Protocol description frontend: a small Scribble-like surface syntax.
//
//   global protocol Name(role A, role B, ...) {
//     Label(int) from A to B;
//     choice at A { ... } or { ... }
//     rec X { ... continue X; }
//   }
//
// `//` comments; LF or CRLF line endings. parse/render round-trip; lower()
// produces the global type.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mpst/types.hpp"

namespace mpst::fe {

enum class ErrCode {
  Syntax,
  UndeclaredRole,
  DuplicateRole,
  DuplicateLabel,
  DanglingContinue,
  NonDirectedChoice,
  UnreachableCode,
};

struct FrontendError : std::runtime_error {
  ErrCode code;
  int line, col;
  FrontendError(ErrCode c, int line_, int col_, const std::string& msg)
      : std::runtime_error(msg), code(c), line(line_), col(col_) {}
};

struct Stmt;

struct Protocol {
  std::string name;
  std::vector<std::string> roles;  // declaration order
  std::vector<Stmt> body;
};

struct Stmt {
  enum class Kind { Msg, Choice, Rec, Continue };
  Kind kind;
  int line = 0, col = 0;

  // Msg
  std::string label;
  Payload payload;
  std::string from, to;

  // Choice
  std::string at;
  std::vector<std::vector<Stmt>> alts;

  // Rec / Continue
  std::string var;
  std::vector<Stmt> rec_body;
};

// Parses the first protocol declaration; throws FrontendError.
Protocol parse_protocol(const std::string& text);

// Parses every protocol declaration in the file.
std::vector<Protocol> parse_protocols(const std::string& text);

// Canonical pretty-print; parse(render(p)) reproduces p.
std::string render(const Protocol& p);

// Lowers to a global type:
//  - message sequences become singleton communications,
//  - `choice at A` becomes one communication from A whose arms are the
//    alternatives' first messages (every alternative must open with a message
//    from A to one common receiver),
//  - rec/continue become recursion binder/variable,
//  - an exhausted block becomes `end`.
GlobalTypePtr lower(const Protocol& p);

// Convenience: load + lower a .mpst file (first protocol).
struct LoadedProtocol {
  Protocol protocol;
  GlobalTypePtr global;
};
LoadedProtocol load_protocol_file(const std::string& path);

}  // namespace mpst::fe
