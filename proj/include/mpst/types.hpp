// Core type syntax: global types, local (session) types, payload sorts.
//
// Both type families are immutable shared trees.  Branch/select arms keep
// their source order; all set-like operations (merge, subtyping, equality)
// index arms by label, so order never affects semantics, only printing.
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpst {

// ---------------------------------------------------------------------------
// Payloads

enum class Sort { Unit, Int, Str, Bool };

std::string sort_name(Sort s);

struct LocalType;
using LocalTypePtr = std::shared_ptr<const LocalType>;

// A payload is either a base sort or a session type (channel delegation).
struct Payload {
  Sort sort = Sort::Unit;
  LocalTypePtr session;  // non-null => delegated session, `sort` ignored

  bool is_session() const { return session != nullptr; }
  static Payload unit() { return Payload{}; }
  static Payload of(Sort s) { return Payload{s, nullptr}; }
  static Payload of(LocalTypePtr s) { return Payload{Sort::Unit, std::move(s)}; }
};

bool payload_equal(const Payload& a, const Payload& b);
std::string payload_to_string(const Payload& p);

// ---------------------------------------------------------------------------
// Local types
//
//   S ::= end | t | mu t. S | p&{ l(T). S, ... } | p+{ l(T). S, ... }

struct LocalArm {
  std::string label;
  Payload payload;
  LocalTypePtr cont;
};

struct LocalType {
  enum class Kind { End, Var, Rec, Branch, Select };

  Kind kind;
  std::string var;             // Var name / Rec binder
  LocalTypePtr body;           // Rec
  std::string peer;            // Branch / Select
  std::vector<LocalArm> arms;  // Branch / Select; labels pairwise distinct

  static LocalTypePtr make_end();
  static LocalTypePtr make_var(std::string name);
  static LocalTypePtr make_rec(std::string binder, LocalTypePtr body);
  static LocalTypePtr make_branch(std::string peer, std::vector<LocalArm> arms);
  static LocalTypePtr make_select(std::string peer, std::vector<LocalArm> arms);
};

// Canonical text form, e.g. `mu t. B&{b. A&{c. t}, e. A&{f. end}}`.
// Unit payloads are omitted; arms print in stored order.
std::string to_string(const LocalTypePtr& t);

// Parses the canonical text form produced by to_string (whitespace-insensitive).
// Throws ParseError on malformed input.
LocalTypePtr parse_local_type(const std::string& text);

// Capture-avoiding substitution of `var := repl`.
LocalTypePtr subst(const LocalTypePtr& t, const std::string& var, const LocalTypePtr& repl);

// Unrolls top-level recursion until the head is End/Var/Branch/Select.
// Throws on unguarded recursion (loop bound exceeded).
LocalTypePtr unfold_head(const LocalTypePtr& t);

// Alpha-equivalence; arms compared as label-indexed sets.
bool alpha_equal(const LocalTypePtr& a, const LocalTypePtr& b);

// Free type variables, in first-occurrence order.
std::vector<std::string> free_vars(const LocalTypePtr& t);

// True iff the type unfolds to `end` (entries of ended sessions).
bool is_ended(const LocalTypePtr& t);

// Roles appearing as interaction peers anywhere in the type.
std::vector<std::string> peers_of(const LocalTypePtr& t);

// ---------------------------------------------------------------------------
// Global types
//
//   G ::= end | t | mu t. G | p->q{ l(T). G, ... }

struct GlobalType;
using GlobalTypePtr = std::shared_ptr<const GlobalType>;

struct GlobalArm {
  std::string label;
  Payload payload;
  GlobalTypePtr cont;
};

struct GlobalType {
  enum class Kind { End, Var, Rec, Comm };

  Kind kind;
  std::string var;    // Var / Rec binder
  GlobalTypePtr body; // Rec
  std::string from, to;
  std::vector<GlobalArm> arms;

  static GlobalTypePtr make_end();
  static GlobalTypePtr make_var(std::string name);
  static GlobalTypePtr make_rec(std::string binder, GlobalTypePtr body);
  static GlobalTypePtr make_comm(std::string from, std::string to, std::vector<GlobalArm> arms);
};

std::string to_string(const GlobalTypePtr& g);
GlobalTypePtr parse_global_type(const std::string& text);
bool alpha_equal(const GlobalTypePtr& a, const GlobalTypePtr& b);
std::vector<std::string> g_free_vars(const GlobalTypePtr& g);

// Roles occurring as sender or receiver, in first-occurrence order.
std::vector<std::string> roles_of(const GlobalTypePtr& g);

// ---------------------------------------------------------------------------
// Errors

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int line_, int col_, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_), col(col_) {}
};

// Mid-stream entry points for parsers that embed the type syntax.
namespace detail {
class Lexer;
LocalTypePtr parse_local_at(Lexer& lx);
Payload parse_payload_at(Lexer& lx);
}  // namespace detail

}  // namespace mpst
