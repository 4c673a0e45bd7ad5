// Process typechecking against typing contexts, and the initial-program
// shape check. The accepted/rejected verdicts are frozen from hand
// derivations in the typing rules.
#include <doctest.h>

#include <string>

#include "mpst/typecheck.hpp"

using namespace mpst;

namespace {

TypingContext ctx_of(std::initializer_list<std::pair<std::string, std::string>> items) {
  TypingContext g;
  for (const auto& [chan, type] : items) {
    ChanId c;
    auto lb = chan.find('[');
    if (lb == std::string::npos) {
      c = ChanId::variable(chan);
    } else {
      c = ChanId::endpoint(chan.substr(0, lb),
                           chan.substr(lb + 1, chan.size() - lb - 2));
    }
    if (type == "int" || type == "str" || type == "bool" || type == "unit") {
      Sort s = type == "int" ? Sort::Int
               : type == "str" ? Sort::Str
               : type == "bool" ? Sort::Bool
                                : Sort::Unit;
      g.entries[c] = Payload::of(s);
    } else {
      g.entries[c] = Payload::of(parse_local_type(type));
    }
  }
  return g;
}

TypecheckReport run(const TypingContext& g, const std::string& proc) {
  return typecheck(g, parse_process(proc));
}

}  // namespace

TEST_CASE("inactive processes need exhausted contexts") {
  CHECK(run(ctx_of({}), "0").ok);
  CHECK(run(ctx_of({{"s[p]", "end"}, {"x", "int"}}), "0").ok);  // base = ended
  CHECK(run(ctx_of({{"s[p]", "mu t. end"}}), "0").ok);
  auto r = run(ctx_of({{"s[p]", "q+{l. end}"}}), "0");
  CHECK_FALSE(r.ok);
  CHECK(r.error.find("s[p]") != std::string::npos);
}

TEST_CASE("selects follow the entry's arms and consume session payloads") {
  CHECK(run(ctx_of({{"s[p]", "q+{l(int). end}"}}), "s[p][q]+l<7>").ok);
  CHECK(run(ctx_of({{"s[p]", "q+{l. end}"}}), "s[p][q]+l").ok);
  CHECK(run(ctx_of({{"s[p]", "q+{l(str). end}"}}), "s[p][q]+l<\"x\">").ok);
  CHECK(run(ctx_of({{"s[p]", "q+{l(int). end}"}, {"v", "int"}}),
            "s[p][q]+l<v>")
            .ok);
  // Delegation consumes the payload entry.
  CHECK(run(ctx_of({{"s[p]", "q+{l(a&{go. end}). end}"},
                    {"t[r]", "a&{go. end}"}}),
            "s[p][q]+l<t[r]>")
            .ok);

  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l(int). end}"}}), "s[p][q]+l<\"x\">").ok);
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l. end}"}}), "s[p][q]+m").ok);
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l. end}"}}), "s[p][r]+l").ok);  // wrong peer
  CHECK_FALSE(run(ctx_of({{"s[p]", "q&{l. end}"}}), "s[p][q]+l").ok);  // wrong polarity
  // Using the delegated endpoint afterwards is rejected: it was consumed.
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l(a&{go. end}). end}"},
                          {"t[r]", "a&{go. end}"}}),
                  "s[p][q]+l<t[r]>. t[r][a]&{go. 0}")
                  .ok);
  // Recursion unfolds before checking.
  CHECK(run(ctx_of({{"s[p]", "mu t. q+{more. t, stop. end}"}}),
            "s[p][q]+more. s[p][q]+stop")
            .ok);
}

TEST_CASE("branches must cover the entry's labels") {
  auto g = ctx_of({{"s[q]", "p&{l(int). end, m. end}"}});
  CHECK(run(g, "s[q][p]&{l(v). 0, m. 0}").ok);
  CHECK(run(g, "s[q][p]&{l(v). 0, m. 0, extra. s[q][p]+nonsense}").ok);  // unreachable arm
  CHECK_FALSE(run(g, "s[q][p]&{l(v). 0}").ok);  // m unhandled
  CHECK_FALSE(run(g, "s[q][p]&{l(v). v[a]+go, m. 0}").ok);  // v is an int

  // A live session payload must be bound; units and base values may be dropped.
  auto d = ctx_of({{"s[q]", "p&{l(a+{go. end}). end}"}});
  CHECK(run(d, "s[q][p]&{l(x). x[a]+go}").ok);
  CHECK_FALSE(run(d, "s[q][p]&{l. 0}").ok);
  CHECK(run(ctx_of({{"s[q]", "p&{l(int). end}"}}), "s[q][p]&{l. 0}").ok);
}

TEST_CASE("parallel splits the context linearly") {
  auto g = ctx_of({{"s[p]", "q+{l. end}"}, {"s[q]", "p&{l. end}"}});
  CHECK(run(g, "s[p][q]+l | s[q][p]&{l. 0}").ok);
  // One channel in two components is rejected.
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l. q+{m. end}}"}}),
                  "s[p][q]+l | s[p][q]+m")
                  .ok);
  // Live entries no component uses are rejected...
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l. end}"}}), "0 | 0").ok);
  // ...unless a kill of their session absorbs them.
  CHECK(run(ctx_of({{"s[p]", "q+{l. end}"}}), "kill s | 0").ok);
  CHECK_FALSE(run(ctx_of({{"t[a]", "q+{l. end}"}}), "kill s | 0").ok);
}

TEST_CASE("kill absorbs only its own session") {
  CHECK(run(ctx_of({{"s[p]", "q+{l. end}"}, {"s[q]", "p&{l. end}"}}), "kill s").ok);
  CHECK(run(ctx_of({{"s[p]", "q+{l. end}"}, {"t[a]", "end"}}), "kill s").ok);
  CHECK_FALSE(run(ctx_of({{"t[a]", "q+{l. end}"}}), "kill s").ok);
}

TEST_CASE("cancellation discards one entry") {
  CHECK(run(ctx_of({{"s[p]", "q+{l. end}"}}), "cancel(s[p])").ok);
  CHECK(run(ctx_of({{"s[p]", "q+{l. end}"}, {"s[q]", "end"}}),
            "cancel(s[p])")
            .ok);
  CHECK_FALSE(run(ctx_of({}), "cancel(s[p])").ok);
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l. end}"}, {"s[q]", "p&{l. end}"}}),
                  "cancel(s[p])")
                  .ok);  // s[q] left live
}

TEST_CASE("try blocks are about one channel and share the context") {
  auto g = ctx_of({{"s[p]", "q+{l. end}"}});
  CHECK(run(g, "try s[p][q]+l catch cancel(s[p])").ok);
  // Handler must also consume the context.
  CHECK_FALSE(run(g, "try s[p][q]+l catch 0").ok);
  // Blocks touching two channels are rejected.
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{l. end}"}, {"t[a]", "b+{m. end}"}}),
                  "try (s[p][q]+l | t[a][b]+m) catch (cancel(s[p]). cancel(t[a]))")
                  .ok);
  // An empty block has no subject.
  CHECK_FALSE(run(ctx_of({}), "try 0 catch 0").ok);
}

TEST_CASE("definitions and calls") {
  auto g = ctx_of({{"s[p]", "q+{l. end}"}});
  CHECK(run(g, "def X(x: q+{l. end}) = try x[q]+l catch cancel(x) in X<s[p]>").ok);
  // Call-site subtyping: the argument may offer more selections.
  CHECK(run(ctx_of({{"s[p]", "q+{l. end, m. end}"}}),
            "def X(x: q+{l. end}) = try x[q]+l catch cancel(x) in X<s[p]>")
            .ok);
  // Not fewer.
  CHECK_FALSE(run(ctx_of({{"s[p]", "q+{m. end}"}}),
                  "def X(x: q+{l. end}) = try x[q]+l catch cancel(x) in X<s[p]>")
                  .ok);
  CHECK_FALSE(run(g, "def X(x: q+{l. end}) = try x[q]+l catch cancel(x) in X<s[p], s[p]>").ok);
  CHECK_FALSE(run(g, "X<s[p]>").ok);  // undefined

  // Recursion through the parameter.
  CHECK(run(ctx_of({{"s[p]", "mu t. q+{more. t, stop. end}"}}),
            "def Loop(x: mu t. q+{more. t, stop. end}) = "
            "try x[q]+more. Loop<x> catch cancel(x) in Loop<s[p]>")
            .ok);
}

TEST_CASE("restrictions require safe annotations") {
  // A compatible select/branch pair is safe.
  CHECK(run(ctx_of({}),
            "(new t: {t[q]: r+{l. end}, t[r]: q&{l. end}}) "
            "(t[q][r]+l | t[r][q]&{l. 0})")
            .ok);
  // Label mismatch inside the annotation is unsafe.
  auto r = run(ctx_of({}),
               "(new t: {t[q]: r+{l. end}, t[r]: q&{m. end}}) "
               "(t[q][r]+l | t[r][q]&{m. 0})");
  CHECK_FALSE(r.ok);
  CHECK(r.error.find("unsafe") != std::string::npos);
}

// ---------------------------------------------------------------------------
// The three worked acceptance terms.

TEST_CASE("worked: guarded affine send with a payload variable") {
  auto g = ctx_of({{"d", "end"}, {"s[p]", "r+{res(end). end}"}});
  CHECK(run(g, "try ?s[p][r]+res<d> catch cancel(s[p])").ok);

  // Mutations are rejected: wrong label, live payload, missing entry.
  CHECK_FALSE(run(ctx_of({{"d", "end"}, {"s[p]", "r+{other(end). end}"}}),
                  "try ?s[p][r]+res<d> catch cancel(s[p])")
                  .ok);
  CHECK_FALSE(run(ctx_of({{"d", "a+{x. end}"}, {"s[p]", "r+{res(end). end}"}}),
                  "try ?s[p][r]+res<d> catch cancel(s[p])")
                  .ok);
  CHECK_FALSE(run(ctx_of({{"s[p]", "r+{res(end). end}"}}),
                  "try ?s[p][r]+res<d> catch cancel(s[p])")
                  .ok);
}

TEST_CASE("worked: nested try-catch across two sessions") {
  const std::string r1 =
      "try s[p][r]+l1. (try t[q][r]+l2 catch cancel(t[q])) "
      "catch (cancel(s[p]). cancel(t[q]))";
  auto g = ctx_of({{"t[q]", "r+{l2. end}"}, {"s[p]", "r+{l1. end}"}});
  CHECK(run(g, r1).ok);

  auto wrong_label = ctx_of({{"t[q]", "r+{l2. end}"}, {"s[p]", "r+{l2. end}"}});
  auto rep = run(wrong_label, r1);
  CHECK_FALSE(rep.ok);
  CHECK(rep.error.find("l1") != std::string::npos);

  // Dropping the inner session from the context breaks both paths.
  CHECK_FALSE(run(ctx_of({{"s[p]", "r+{l1. end}"}}), r1).ok);
}

TEST_CASE("worked: delegation out of a fresh restriction") {
  const std::string r4 =
      "try s[p][r]+l1. "
      "(new t: {t[q]: r+{l2. end}, t[r]: q&{l2. end}}) "
      "(s[p][r]+l3<t[r]> | try t[q][r]+l2 catch cancel(t[q])) "
      "catch cancel(s[p])";
  auto g = ctx_of({{"s[p]", "r+{l1. r+{l3(q&{l2. end}). end}}"}});
  CHECK(run(g, r4).ok);

  // Mutate the delegated payload type: no longer a supertype of t[r].
  CHECK_FALSE(
      run(ctx_of({{"s[p]", "r+{l1. r+{l3(q&{other. end}). end}}"}}), r4).ok);
  // Mutate the first label.
  CHECK_FALSE(
      run(ctx_of({{"s[p]", "r+{lX. r+{l3(q&{l2. end}). end}}"}}), r4).ok);
}

// ---------------------------------------------------------------------------
// Initial-program shape

namespace {

const char* kTinyGlobal = "p->q{l(int). end}";

std::string tiny_program(const std::string& ann_p, const std::string& ann_q) {
  return "(new s: {s[p]: " + ann_p + ", s[q]: " + ann_q +
         "}) (s[p][q]+l<7> | s[q][p]&{l(v). 0})";
}

// One component per role; every definition body is a try/catch whose handler
// cancels and never re-enters the loop.
const char* kVideoGlobal =
    "mu Loop. C->A{ReqVideo(int). A->S{ReqVideo(int). S->A{ResVideo(int). "
    "A->C{ResVideo(int). Loop}}}, close. A->S{close. end}}";

const char* kVideoProgram =
    "(new s: {"
    "s[C]: mu t. A+{ReqVideo(int). A&{ResVideo(int). t}, close. end}, "
    "s[A]: mu t. C&{ReqVideo(int). S+{ReqVideo(int). S&{ResVideo(int). "
    "C+{ResVideo(int). t}}}, close. S+{close. end}}, "
    "s[S]: mu t. A&{ReqVideo(int). A+{ResVideo(int). t}, close. end}}) "
    "( try ?s[C][A]+ReqVideo<1>. s[C][A]&{ResVideo(v). s[C][A]+close} "
    "  catch cancel(s[C]) "
    "| def XA(x: mu t. C&{ReqVideo(int). S+{ReqVideo(int). S&{ResVideo(int). "
    "C+{ResVideo(int). t}}}, close. S+{close. end}}) = "
    "    try x[C]&{ReqVideo(u). ?x[S]+ReqVideo<2>. x[S]&{ResVideo(w). "
    "?x[C]+ResVideo<3>. XA<x>}, close. ?x[S]+close} "
    "    catch cancel(x) "
    "  in XA<s[A]> "
    "| def XS(x: mu t. A&{ReqVideo(int). A+{ResVideo(int). t}, close. end}) = "
    "    try x[A]&{ReqVideo(u). ?x[A]+ResVideo<4>. XS<x>, close. 0} "
    "    catch cancel(x) "
    "  in XS<s[S]> )";

}  // namespace

TEST_CASE("initial-program shape accepts the canonical forms") {
  auto g = parse_global_type(kTinyGlobal);
  CHECK(initial_program_check(
            parse_process(tiny_program("q+{l(int). end}", "p&{l(int). end}")), g)
            .ok);

  auto video = parse_global_type(kVideoGlobal);
  auto r = initial_program_check(parse_process(kVideoProgram), video);
  CAPTURE(r.error);
  CHECK(r.ok);
}

TEST_CASE("initial-program shape rejects malformed programs") {
  auto g = parse_global_type(kTinyGlobal);

  // Wrong annotation (not the projection).
  CHECK_FALSE(initial_program_check(
                  parse_process(tiny_program("q+{m(int). end}", "p&{l(int). end}")), g)
                  .ok);
  // Missing a role's component.
  CHECK_FALSE(
      initial_program_check(
          parse_process("(new s: {s[p]: q+{l(int). end}, s[q]: p&{l(int). end}}) "
                        "s[p][q]+l<7>"),
          g)
          .ok);
  // A component playing two endpoints.
  CHECK_FALSE(
      initial_program_check(
          parse_process("(new s: {s[p]: q+{l(int). end}, s[q]: p&{l(int). end}}) "
                        "(s[p][q]+l<7>. s[q][p]&{l(v). 0} | 0)"),
          g)
          .ok);
  // Kills are not initial.
  CHECK_FALSE(
      initial_program_check(
          parse_process("(new s: {s[p]: q+{l(int). end}, s[q]: p&{l(int). end}}) "
                        "(s[p][q]+l<7> | s[q][p]&{l(v). kill s})"),
          g)
          .ok);
  // No top-level restriction.
  CHECK_FALSE(initial_program_check(parse_process("0"), g).ok);
  // Definition bodies must be try/catch with a call-free handler.
  auto bad_def = parse_process(
      "(new s: {s[p]: q+{l(int). end}, s[q]: p&{l(int). end}}) "
      "(def X(x: q+{l(int). end}) = x[q]+l<7> in X<s[p]> | s[q][p]&{l(v). 0})");
  auto r = initial_program_check(bad_def, g);
  CHECK_FALSE(r.ok);
  CHECK(r.error.find("try") != std::string::npos);
}

TEST_CASE("the video program terminates under full failure injection") {
  auto p = parse_process(kVideoProgram);
  auto ct = check_cancellation_termination(p);
  CAPTURE(ct.detail);
  CHECK(ct.ok);
  CHECK_FALSE(ct.truncated);
  CHECK(ct.nodes > 50);
  CHECK(ct.nodes < 100000);
}
