// Binding generation: bundle contents, both backends, and byte-level
// determinism.  The generated host header is compiled and executed by a
// separate build-time test.
#include <doctest.h>

#include <string>

#include "mpst/codegen.hpp"

using namespace mpst;

namespace {

const char* kVideoGlobal =
    "mu Loop. C->A{ReqVideo(int). A->S{ReqVideo(int). S->A{ResVideo(int). "
    "A->C{ResVideo(int). Loop}}}, close. A->S{close. end}}";

GeneratedBundle video(Backend b) {
  return generate("Video", {"A", "C", "S"}, parse_global_type(kVideoGlobal), b);
}

const RoleBundle& role_of(const GeneratedBundle& b, const std::string& r) {
  for (const auto& rb : b.per_role)
    if (rb.role == r) return rb;
  throw std::out_of_range(r);
}

}  // namespace

TEST_CASE("the bundle collects projections, views, stacks and choices") {
  auto b = video(Backend::Neutral);
  CHECK(b.protocol == "Video");
  CHECK(b.roles == std::vector<std::string>{"A", "C", "S"});

  CHECK(role_of(b, "C").local_type ==
        "mu Loop. A+{ReqVideo(int). A&{ResVideo(int). Loop}, close. end}");
  CHECK(role_of(b, "S").local_type ==
        "mu Loop. A&{ReqVideo(int). A+{ResVideo(int). Loop}, close. end}");

  // A talks to both peers; C and S each see one conversation.
  CHECK(role_of(b, "A").views.size() == 2);
  CHECK(role_of(b, "A").views.count("C") == 1);
  CHECK(role_of(b, "A").views.count("S") == 1);
  CHECK(role_of(b, "C").views.count("A") == 1);

  // Received choices: A offers C's decision, S offers A's relay; C owns its
  // choice so it declares none.
  REQUIRE(role_of(b, "A").choices.size() == 1);
  CHECK(role_of(b, "A").choices[0].find("ChoiceA_") == 0);
  CHECK(role_of(b, "A").choices[0].find("ReqVideo(int)") != std::string::npos);
  CHECK(role_of(b, "A").choices[0].find("close") != std::string::npos);
  CHECK(role_of(b, "S").choices.size() == 1);
  CHECK(role_of(b, "C").choices.empty());

  // Matrix: three roles, pairs 1..3, skew symmetric.
  REQUIRE(b.matrix.size() == 3);
  CHECK(b.matrix[0][1] == 1);
  CHECK(b.matrix[0][2] == 2);
  CHECK(b.matrix[1][2] == 3);
  CHECK(b.matrix[1][0] == -1);
  CHECK(b.matrix[2][0] == -2);
  CHECK(b.matrix[2][1] == -3);

  CHECK(role_of(b, "C").stack.find("Broadcast") != std::string::npos);
}

TEST_CASE("the neutral backend renders one declarative file") {
  auto b = video(Backend::Neutral);
  REQUIRE(b.files.size() == 1);
  REQUIRE(b.files.count("video.txt") == 1);
  const std::string& text = b.files.at("video.txt");
  CHECK(text.find("protocol Video") == 0);
  CHECK(text.find("roles: A, C, S") != std::string::npos);
  CHECK(text.find("pairs: 3") != std::string::npos);
  CHECK(text.find("channel matrix") != std::string::npos);
  CHECK(text.find("role A") != std::string::npos);
  CHECK(text.find("view C: ") != std::string::npos);
  CHECK(text.find("choice ChoiceA_") != std::string::npos);
}

TEST_CASE("the host backend emits typestate handles") {
  auto b = video(Backend::Host);
  REQUIRE(b.files.count("video.hpp") == 1);
  const std::string& hpp = b.files.at("video.hpp");

  CHECK(hpp.find("namespace video {") != std::string::npos);
  CHECK(hpp.find("struct NameA") != std::string::npos);
  CHECK(hpp.find("struct NameC") != std::string::npos);
  CHECK(hpp.find("struct NameS") != std::string::npos);

  // One handle per state; operations only where the monitor permits.
  CHECK(hpp.find("struct A_0") != std::string::npos);
  CHECK(hpp.find("offer()") != std::string::npos);
  CHECK(hpp.find("choose_ReqVideo(std::int64_t v) &&") != std::string::npos);
  CHECK(hpp.find("choose_close() &&") != std::string::npos);
  CHECK(hpp.find("using ChoiceA = ChoiceA_") != std::string::npos);
  CHECK(hpp.find("std::variant<ChoiceA_") != std::string::npos);
  CHECK(hpp.find("struct Endpoints") != std::string::npos);
  CHECK(hpp.find("inline Endpoints connect(") != std::string::npos);
  CHECK(hpp.find("kMatrix[3][3]") != std::string::npos);

  // The embedded monitors are the projections; the recursion binder name is
  // carried over from the global type (equality is up to alpha-renaming).
  CHECK(hpp.find("inline constexpr const char* LocalC = \"mu Loop. "
                 "A+{ReqVideo(int). A&{ResVideo(int). Loop}, close. end}\";") !=
        std::string::npos);
}

TEST_CASE("regeneration is byte-identical") {
  for (Backend be : {Backend::Neutral, Backend::Host}) {
    auto b1 = video(be);
    auto b2 = video(be);
    REQUIRE(b1.files.size() == b2.files.size());
    for (const auto& [name, content] : b1.files) {
      REQUIRE(b2.files.count(name) == 1);
      CHECK(content == b2.files.at(name));
    }
  }
}

TEST_CASE("four-role protocols index six pairs") {
  auto g = parse_global_type("a->b{l(int). c->d{m. end}}");
  auto b = generate("quad", {"a", "b", "c", "d"}, g, Backend::Neutral);
  const std::string& text = b.files.at("quad.txt");
  CHECK(text.find("pairs: 6") != std::string::npos);
  CHECK(b.matrix[0][3] == 3);
  CHECK(b.matrix[2][3] == 6);
  CHECK(b.matrix[3][2] == -6);
}

TEST_CASE("roles beyond the protocol body still get endpoints") {
  auto g = parse_global_type("a->b{l. end}");
  auto b = generate("padded", {"a", "b", "watcher"}, g, Backend::Host);
  CHECK(b.roles == std::vector<std::string>{"a", "b", "watcher"});
  CHECK(role_of(b, "watcher").local_type == "end");
  CHECK(b.files.at("padded.hpp").find("struct watcher_0") != std::string::npos);
}

TEST_CASE("the host backend rejects delegated payloads") {
  auto g = parse_global_type("p->q{l(q&{go. end}). end}");
  CHECK_THROWS_AS(generate("deleg", {"p", "q"}, g, Backend::Host),
                  CodegenError);
  // The neutral backend is purely descriptive and accepts it.
  auto b = generate("deleg", {"p", "q"}, g, Backend::Neutral);
  CHECK(b.files.at("deleg.txt").find("l(q&{go. end})") != std::string::npos);
}

TEST_CASE("protocol names are sanitized into identifiers") {
  auto g = parse_global_type("a->b{l. end}");
  auto b = generate("Two-Buyer 1", {"a", "b"}, g, Backend::Host);
  REQUIRE(b.files.size() == 1);
  CHECK(b.files.count("two_buyer_1.hpp") == 1);
  CHECK(b.files.at("two_buyer_1.hpp").find("namespace two_buyer_1 {") !=
        std::string::npos);
}
