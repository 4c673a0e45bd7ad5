// Type algebra: printing/parsing, unfolding, projection, merge, subtyping,
// duality, binary views, stacks, channel matrix.
#include <set>

#include "doctest.h"
#include "mpst/algebra.hpp"
#include "mpst/types.hpp"

using namespace mpst;

namespace {

// Two-role loop used by several subtyping cases.
const char* kPingPong = "mu t. p+{ping(int). p&{pong(int). t}}";

// Three-role running example: A drives B, B relays to C, payloads all unit.
const char* kRunningExample =
    "mu t. A->B{a. B->C{b. A->C{c. t}}, d. B->C{e. A->C{f. end}}}";

// Video-on-demand: C requests through proxy A, S serves, C decides the loop.
const char* kVideo =
    "mu t. C->A{ReqVideo(int). A->S{ReqVideo(int). S->A{ResVideo(int). "
    "A->C{ResVideo(int). t}}}, close. A->S{close. end}}";

LocalTypePtr L(const std::string& s) { return parse_local_type(s); }
GlobalTypePtr G(const std::string& s) { return parse_global_type(s); }

}  // namespace

TEST_CASE("local type print/parse round trip") {
  for (const char* src : {
           "end",
           "mu t. p&{l. t}",
           "p+{a(int). end, b(str). end, c(bool). end}",
           "q&{l(r+{x. end}). end}",
           kPingPong,
       }) {
    auto t = L(src);
    CHECK(to_string(t) == src);
    CHECK(alpha_equal(parse_local_type(to_string(t)), t));
  }
}

TEST_CASE("global type print/parse round trip") {
  for (const char* src : {
           "end",
           "A->B{l(int). end}",
           kRunningExample,
           kVideo,
       }) {
    auto g = G(src);
    CHECK(to_string(g) == src);
    CHECK(alpha_equal(parse_global_type(to_string(g)), g));
  }
}

TEST_CASE("alpha equivalence ignores binder names and arm order") {
  CHECK(alpha_equal(L("mu t. p&{l. t}"), L("mu u. p&{l. u}")));
  CHECK(alpha_equal(L("p&{a. end, b(int). end}"), L("p&{b(int). end, a. end}")));
  CHECK_FALSE(alpha_equal(L("mu t. p&{l. t}"), L("mu t. p&{l. end}")));
  CHECK_FALSE(alpha_equal(L("p&{a. end}"), L("q&{a. end}")));
  CHECK_FALSE(alpha_equal(L("p&{a(int). end}"), L("p&{a(str). end}")));
}

TEST_CASE("unfold_head exposes a communication head") {
  auto t = L("mu t. p&{l. t}");
  auto u = unfold_head(t);
  CHECK(u->kind == LocalType::Kind::Branch);
  CHECK(alpha_equal(u, L("p&{l. mu t. p&{l. t}}")));
  // Nested binders unfold all the way to the first communication.
  auto nested = L("mu a. mu b. p+{l. b}");
  CHECK(unfold_head(nested)->kind == LocalType::Kind::Select);
  CHECK_THROWS_AS(unfold_head(L("mu t. t")), std::runtime_error);
}

TEST_CASE("is_ended sees through recursion") {
  CHECK(is_ended(L("end")));
  CHECK(is_ended(L("mu t. end")));
  CHECK_FALSE(is_ended(L("p&{l. end}")));
  CHECK_FALSE(is_ended(L("mu t. p+{l. t}")));
}

TEST_CASE("projection of the running example") {
  auto g = G(kRunningExample);
  CHECK(roles_of(g) == std::vector<std::string>{"A", "B", "C"});
  CHECK(alpha_equal(project(g, "C"), L("mu t. B&{b. A&{c. t}, e. A&{f. end}}")));
  CHECK(alpha_equal(project(g, "A"), L("mu t. B+{a. C+{c. t}, d. C+{f. end}}")));
  CHECK(alpha_equal(project(g, "B"), L("mu t. A&{a. C+{b. t}, d. C+{e. end}}")));
}

TEST_CASE("projection of the video protocol") {
  auto g = G(kVideo);
  CHECK(alpha_equal(project(g, "C"),
                    L("mu t. A+{ReqVideo(int). A&{ResVideo(int). t}, close. end}")));
  CHECK(alpha_equal(
      project(g, "A"),
      L("mu t. C&{ReqVideo(int). S+{ReqVideo(int). S&{ResVideo(int). "
        "C+{ResVideo(int). t}}}, close. S+{close. end}}")));
  CHECK(alpha_equal(project(g, "S"),
                    L("mu t. A&{ReqVideo(int). A+{ResVideo(int). t}, close. end}")));
}

TEST_CASE("projection drops recursion the role never enters") {
  auto g = G("A->B{go. mu t. B->C{tick. t}}");
  CHECK(alpha_equal(project(g, "A"), L("B+{go. end}")));
  CHECK(alpha_equal(project(g, "B"), L("A&{go. mu t. C+{tick. t}}")));
}

TEST_CASE("bystander merge combines disjoint branches and rejects conflicts") {
  // C passively learns the outcome from B: disjoint labels union.
  auto ok = G("A->B{l. B->C{x. end}, r. B->C{y(int). end}}");
  CHECK(alpha_equal(project(ok, "C"), L("B&{x. end, y(int). end}")));

  // Same label, different payload: undefined.
  auto bad_payload = G("A->B{l. B->C{x(int). end}, r. B->C{x(str). end}}");
  CHECK_THROWS_AS(project(bad_payload, "C"), ProjectionError);

  // C would have to choose differently without knowing the outcome.
  auto bad_select = G("A->B{l. C->A{u. end}, r. C->A{v. end}}");
  CHECK_THROWS_AS(project(bad_select, "C"), ProjectionError);

  // Common label continues mergeably.
  auto deep = G("A->B{l. B->C{x. B->C{p. end}}, r. B->C{x. B->C{q. end}}}");
  CHECK(alpha_equal(project(deep, "C"), L("B&{x. B&{p. end, q. end}}")));
}

TEST_CASE("merge error carries the failure path") {
  auto bad = G("A->B{l. B->C{x(int). end}, r. B->C{x(str). end}}");
  try {
    project(bad, "C");
    FAIL("projection should be undefined");
  } catch (const ProjectionError& e) {
    CHECK(std::string(e.what()).find("payload mismatch") != std::string::npos);
    CHECK(std::string(e.what()).find("x") != std::string::npos);
  }
}

TEST_CASE("well_formed reports per-role projectability") {
  auto rep = well_formed(G(kVideo));
  CHECK(rep.ok);
  CHECK(rep.projections.size() == 3);

  auto bad = well_formed(G("A->B{l. C->A{u. end}, r. C->A{v. end}}"));
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.errors.size() >= 1);
  CHECK(bad.errors[0].find("C") != std::string::npos);
}

TEST_CASE("well_formed rejects open and unguarded types") {
  CHECK_FALSE(well_formed(G("A->B{l. t}")).ok);
  CHECK_FALSE(well_formed(GlobalType::make_rec("t", GlobalType::make_var("t"))).ok);
}

TEST_CASE("subtyping: width on branch and select") {
  // A channel delivering fewer branch labels works where more are handled.
  CHECK(subtype(L("p&{a. end}"), L("p&{a. end, b. end}")));
  CHECK_FALSE(subtype(L("p&{a. end, b. end}"), L("p&{a. end}")));
  // A channel allowing more selections works where fewer are needed.
  CHECK(subtype(L("p+{a. end, b. end}"), L("p+{a. end}")));
  CHECK_FALSE(subtype(L("p+{a. end}"), L("p+{a. end, b. end}")));
  // Peer must agree.
  CHECK_FALSE(subtype(L("p&{a. end}"), L("q&{a. end}")));
  CHECK_FALSE(subtype(L("p&{a. end}"), L("p+{a. end}")));
}

TEST_CASE("subtyping: payload variance") {
  // Branch payloads covariant.
  CHECK(subtype(L("p&{l(q+{a. end, b. end}). end}"), L("p&{l(q+{a. end}). end}")));
  CHECK_FALSE(subtype(L("p&{l(q+{a. end}). end}"), L("p&{l(q+{a. end, b. end}). end}")));
  // Select payloads contravariant.
  CHECK(subtype(L("p+{l(q+{a. end}). end}"), L("p+{l(q+{a. end, b. end}). end}")));
  CHECK_FALSE(subtype(L("p+{l(q+{a. end, b. end}). end}"), L("p+{l(q+{a. end}). end}")));
  // Base sorts are invariant.
  CHECK_FALSE(subtype(L("p&{l(int). end}"), L("p&{l(str). end}")));
  CHECK(subtype(L("p&{l(int). end}"), L("p&{l(int). end}")));
}

TEST_CASE("subtyping is coinductive across unfoldings") {
  auto t = L(kPingPong);
  CHECK(subtype(t, t));
  CHECK(subtype(unfold_head(t), t));
  CHECK(subtype(t, unfold_head(t)));
  // Loop offering an extra exit selects more: subtype of the plain loop.
  auto more = L("mu t. p+{ping(int). p&{pong(int). t}, quit. end}");
  CHECK(subtype(more, t));
  CHECK_FALSE(subtype(t, more));
}

TEST_CASE("dual flips branch and select throughout") {
  auto t = L(kPingPong);
  CHECK(alpha_equal(dual(t), L("mu t. p&{ping(int). p+{pong(int). t}}")));
  CHECK(alpha_equal(dual(dual(t)), t));
}

TEST_CASE("binary views of the video roles") {
  auto g = G(kVideo);
  auto a = project(g, "A");
  auto c = project(g, "C");
  auto s = project(g, "S");

  auto a_views = to_binary_views(a);
  REQUIRE(a_views.count("C"));
  REQUIRE(a_views.count("S"));
  CHECK(alpha_equal(a_views["C"],
                    L("mu t. C&{ReqVideo(int). C+{ResVideo(int). t}, close. end}")));
  CHECK(alpha_equal(a_views["S"],
                    L("mu t. S+{ReqVideo(int). S&{ResVideo(int). t}, close. end}")));

  // C and S never interact: no view either way.
  CHECK(to_binary_views(c).count("S") == 0);
  CHECK(to_binary_views(s).count("C") == 0);

  // Each pair of views is mutually dual.
  CHECK(mutually_dual(a_views["C"], "A", to_binary_views(c)["A"], "C"));
  CHECK(mutually_dual(a_views["S"], "A", to_binary_views(s)["A"], "S"));
  CHECK(mutually_dual(to_binary_views(c)["A"], "C", a_views["C"], "A"));
}

TEST_CASE("mutually_dual rejects mismatches") {
  CHECK(mutually_dual(L("p+{l(int). end}"), "q", L("q&{l(int). end}"), "p"));
  CHECK_FALSE(mutually_dual(L("p+{l(int). end}"), "q", L("q&{l(str). end}"), "p"));
  CHECK_FALSE(mutually_dual(L("p+{l. end}"), "q", L("q&{l. end, m. end}"), "p"));
  CHECK_FALSE(mutually_dual(L("p+{l. end}"), "q", L("q+{l. end}"), "p"));
}

TEST_CASE("stacks: interaction order with choice markers") {
  auto g = G(kVideo);
  auto c = project(g, "C");
  auto a = project(g, "A");

  // C owns the loop choice: its segment is just the broadcast point.
  auto st_c = stack_of(c);
  REQUIRE(st_c.size() == 1);
  CHECK(st_c[0].kind == StackEntry::Kind::Broadcast);

  // A's segments per label, starting at the received choice.
  auto arms = arm_stacks(a);
  REQUIRE(arms.count("ReqVideo"));
  REQUIRE(arms.count("close"));
  CHECK(stack_to_string(arms["ReqVideo"]) == "[C, S, S, C, End]");
  CHECK(stack_to_string(arms["close"]) == "[C, S, End]");

  // Straight-line type: peers in order then End.
  CHECK(stack_to_string(stack_of(L("p&{l. q+{m. end}}"))) == "[p, q, End]");
}

TEST_CASE("channel matrix indices for four roles") {
  std::vector<std::string> roles{"a", "b", "c", "d"};
  CHECK(channel_index(roles, "a", "b") == 1);
  CHECK(channel_index(roles, "a", "c") == 2);
  CHECK(channel_index(roles, "a", "d") == 3);
  CHECK(channel_index(roles, "b", "c") == 4);
  CHECK(channel_index(roles, "b", "d") == 5);
  CHECK(channel_index(roles, "c", "d") == 6);
  // Reverse direction is the negated index; diagonal is zero.
  CHECK(channel_index(roles, "d", "a") == -3);
  CHECK(channel_index(roles, "c", "b") == -4);
  CHECK(channel_index(roles, "b", "b") == 0);

  auto m = channel_matrix({"d", "b", "a", "c"});
  CHECK(m[0][1] == 1);
  CHECK(m[3][2] == -6);
}

TEST_CASE("channel matrix closed form scales") {
  // n roles: indices are 1..n(n-1)/2 with each unordered pair distinct.
  std::vector<std::string> roles;
  for (char c = 'a'; c < 'a' + 8; ++c) roles.emplace_back(1, c);
  std::set<int64_t> seen;
  for (size_t i = 0; i < roles.size(); ++i)
    for (size_t j = i + 1; j < roles.size(); ++j)
      seen.insert(channel_index(roles, roles[i], roles[j]));
  CHECK(seen.size() == 28);
  CHECK(*seen.begin() == 1);
  CHECK(*seen.rbegin() == 28);
}
