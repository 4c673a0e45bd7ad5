// Affine meshed channel runtime: session construction, the four ordered
// primitives, close barriers, cancellation propagation, and timeouts.
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mpst/runtime.hpp"

using namespace mpst;
using namespace std::chrono_literals;

namespace {

// Runs every script on its own thread and polls for completion; returns
// false when the deadline passes first.  Threads are joined regardless:
// every blocking primitive times out, so joins are bounded.
bool run_all(std::vector<std::function<void()>> scripts,
             std::chrono::milliseconds deadline = 2000ms) {
  std::atomic<int> done{0};
  std::vector<std::thread> threads;
  threads.reserve(scripts.size());
  for (auto& f : scripts)
    threads.emplace_back([&done, f = std::move(f)]() mutable {
      f();
      done.fetch_add(1);
    });
  auto until = std::chrono::steady_clock::now() + deadline;
  bool ok = true;
  while (done.load() < static_cast<int>(threads.size())) {
    if (std::chrono::steady_clock::now() > until) {
      ok = false;
      break;
    }
    std::this_thread::sleep_for(2ms);
  }
  for (auto& t : threads) t.join();
  return ok;
}

Value value_for(const Payload& p) {
  switch (p.sort) {
    case Sort::Int: return Value::of_int(7);
    case Sort::Str: return Value::of_str("x");
    case Sort::Bool: return Value::of_bool(true);
    case Sort::Unit: break;
  }
  return Value::unit();
}

struct Outcome {
  bool completed = false;
  bool errored = false;
  ErrorKind kind{};
};

// Generic driver for choice-free monitors: sends on selects, receives on
// branches, closes at end.  `kill_at` cancels instead of performing that
// operation (counted from 0).
Outcome drive(MeshedChannel mc, int kill_at = -1) {
  int step = 0;
  Outcome out;
  try {
    for (;;) {
      if (kill_at >= 0 && step == kill_at) {
        std::move(mc).cancel();
        return out;
      }
      auto h = unfold_head(mc.monitor());
      if (h->kind == LocalType::Kind::End) {
        std::move(mc).close();
        out.completed = true;
        return out;
      }
      if (h->kind == LocalType::Kind::Select) {
        mc = std::move(mc).send(value_for(h->arms[0].payload));
      } else {
        auto r = std::move(mc).recv();
        mc = std::move(r.chan);
      }
      ++step;
    }
  } catch (const SessionError& e) {
    out.errored = true;
    out.kind = e.kind;
    return out;
  }
}

std::map<std::string, LocalTypePtr> parse_locals(
    std::initializer_list<std::pair<std::string, std::string>> items) {
  std::map<std::string, LocalTypePtr> m;
  for (const auto& [r, t] : items) m[r] = parse_local_type(t);
  return m;
}

// Ring sweep: r0 -> r1 -> ... -> r(n-1) -> ... -> r0, `rounds` times.
std::string ring_role_type(int i, int n, int rounds) {
  auto role = [](int k) { return std::string(1, static_cast<char>('a' + k)); };
  std::string t = "end";
  for (int r = 0; r < rounds; ++r) {
    if (i > 0) t = role(i - 1) + "+{bwd(int). " + t + "}";
    if (i < n - 1) t = role(i + 1) + "&{bwd(int). " + t + "}";
    if (i < n - 1) t = role(i + 1) + "+{fwd(int). " + t + "}";
    if (i > 0) t = role(i - 1) + "&{fwd(int). " + t + "}";
  }
  return t;
}

// Full mesh: each unordered pair exchanges one message each way per
// iteration, lower-ranked role first.
std::string mesh_role_type(int i, int n, int iters) {
  auto role = [](int k) { return std::string(1, static_cast<char>('a' + k)); };
  std::string t = "end";
  for (int it = 0; it < iters; ++it) {
    for (int j = n - 1; j >= 0; --j) {
      if (j == i) continue;
      if (j < i) {
        t = role(j) + "+{msg(int). " + t + "}";
        t = role(j) + "&{msg(int). " + t + "}";
      } else {
        t = role(j) + "&{msg(int). " + t + "}";
        t = role(j) + "+{msg(int). " + t + "}";
      }
    }
  }
  return t;
}

std::map<std::string, LocalTypePtr> ring_locals(int n, int rounds) {
  std::map<std::string, LocalTypePtr> m;
  for (int i = 0; i < n; ++i)
    m[std::string(1, static_cast<char>('a' + i))] =
        parse_local_type(ring_role_type(i, n, rounds));
  return m;
}

std::map<std::string, LocalTypePtr> mesh_locals(int n, int iters) {
  std::map<std::string, LocalTypePtr> m;
  for (int i = 0; i < n; ++i)
    m[std::string(1, static_cast<char>('a' + i))] =
        parse_local_type(mesh_role_type(i, n, iters));
  return m;
}

const char* kVideoGlobal =
    "mu Loop. C->A{ReqVideo(int). A->S{ReqVideo(int). S->A{ResVideo(int). "
    "A->C{ResVideo(int). Loop}}}, close. A->S{close. end}}";

}  // namespace

TEST_CASE("values carry sort tags") {
  CHECK(Value::of_int(-42).as_int() == -42);
  CHECK(Value::of_str("hi").as_str() == "hi");
  CHECK(Value::of_bool(true).as_bool());
  CHECK_FALSE(Value::of_bool(false).as_bool());
  CHECK(Value::unit().sort == Sort::Unit);
  CHECK_THROWS_AS(Value::of_str("7").as_int(), std::logic_error);
  CHECK_THROWS_AS(Value::unit().as_str(), std::logic_error);
}

TEST_CASE("channel ranks index the pair matrix") {
  // Four roles: the six upper-triangle indices, skew symmetric below.
  CHECK(channel_index(0, 1, 4) == 1);
  CHECK(channel_index(0, 2, 4) == 2);
  CHECK(channel_index(0, 3, 4) == 3);
  CHECK(channel_index(1, 2, 4) == 4);
  CHECK(channel_index(1, 3, 4) == 5);
  CHECK(channel_index(2, 3, 4) == 6);
  CHECK(channel_index(1, 0, 4) == -1);
  CHECK(channel_index(2, 0, 3) == -2);

  // Row-major upper-triangle enumeration oracle.
  for (int n = 2; n <= 8; ++n) {
    std::int64_t next = 1;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        CHECK(channel_index(i, j, n) == next);
        CHECK(channel_index(j, i, n) == -next);
        ++next;
      }
    }
    CHECK(next - 1 == n * (n - 1) / 2);
  }
  CHECK_THROWS_AS(channel_index(0, 2, 2), std::invalid_argument);
}

TEST_CASE("session construction distributes endpoints") {
  auto session = new_session(parse_global_type(kVideoGlobal));
  REQUIRE(session.channels.size() == 3);
  auto& a = session.channels.at("A");
  CHECK(a.role() == "A");
  CHECK(a.peer_roles() == std::vector<std::string>{"C", "S"});
  // Sorted roles A,C,S: (A,C)=1, (A,S)=2, (C,S)=3; lower rank owns the
  // positive side.
  CHECK(a.pair_index("C") == 1);
  CHECK(a.pair_index("S") == 2);
  CHECK(session.channels.at("C").pair_index("A") == -1);
  CHECK(session.channels.at("S").pair_index("A") == -2);
  CHECK(session.channels.at("C").pair_index("S") == 3);
  CHECK(session.channels.at("S").pair_index("C") == -3);

  // Stack head agrees with the monitor head: C owns the choice, A and S
  // wait on their monitor-head peer.
  CHECK(session.channels.at("C").stack().front().kind ==
        StackEntry::Kind::Broadcast);
  CHECK(session.channels.at("A").stack().front().role == "C");
  CHECK(session.channels.at("S").stack().front().role == "A");

  for (auto& kv : session.channels) std::move(kv.second).cancel();
}

TEST_CASE("session construction rejects bad inputs") {
  // Both sides sending first: views are not mutually dual.
  CHECK_THROWS_AS(new_session(parse_locals({{"a", "b+{m(int). end}"},
                                            {"b", "a+{m(int). end}"}})),
                  DualityError);
  try {
    new_session(parse_locals({{"a", "b+{m(int). end}"},
                              {"b", "a+{m(int). end}"}}));
  } catch (const DualityError& e) {
    CHECK(e.role_a == "a");
    CHECK(e.role_b == "b");
    CHECK(e.view_a.find("m") != std::string::npos);
  }
  // Unknown peer.
  CHECK_THROWS_AS(new_session(parse_locals({{"a", "c+{m. end}"},
                                            {"b", "a&{m. end}"}})),
                  std::invalid_argument);
  // Reserved close label.
  CHECK_THROWS_AS(new_session(parse_locals({{"a", "b+{__close. end}"},
                                            {"b", "a&{__close. end}"}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(new_session(std::map<std::string, LocalTypePtr>{}),
                  std::invalid_argument);
}

TEST_CASE("two ended roles close immediately") {
  auto session = new_session(parse_locals({{"a", "end"}, {"b", "end"}}));
  auto a = std::move(session.channels.at("a"));
  auto b = std::move(session.channels.at("b"));
  bool ok = run_all({[&] { std::move(a).close(); },
                     [&] { std::move(b).close(); }});
  CHECK(ok);
  CHECK(session.stats->payload_messages == 0);
  CHECK_FALSE(session.stats->cancelled.load());
}

TEST_CASE("two-role request/response completes") {
  auto session = new_session(
      parse_locals({{"p", "q+{hello(str). q&{reply(int). end}}"},
                    {"q", "p&{hello(str). p+{reply(int). end}}"}}));
  auto p = std::move(session.channels.at("p"));
  auto q = std::move(session.channels.at("q"));
  std::string got_str;
  std::int64_t got_int = 0;
  bool ok = run_all(
      {[&] {
         auto p1 = std::move(p).send(Value::of_str("ping"));
         auto r = std::move(p1).recv();
         got_int = r.value.as_int();
         std::move(r.chan).close();
       },
       [&] {
         auto r = std::move(q).recv();
         got_str = r.value.as_str();
         auto q1 = std::move(r.chan).send(Value::of_int(99));
         std::move(q1).close();
       }});
  CHECK(ok);
  CHECK(got_str == "ping");
  CHECK(got_int == 99);
  CHECK(session.stats->payload_messages == 2);
  CHECK_FALSE(session.stats->cancelled.load());
}

TEST_CASE("monitor violations cancel the session") {
  auto locals = parse_locals({{"p", "q+{hello(str). end}"},
                              {"q", "p&{hello(str). end}"}});

  SUBCASE("recv when the monitor says send") {
    auto s = new_session(locals);
    auto p = std::move(s.channels.at("p"));
    try {
      std::move(p).recv();
      FAIL("recv should violate the monitor");
    } catch (const SessionError& e) {
      CHECK(e.kind == ErrorKind::ProtocolViolation);
      CHECK(e.detail.find("hello") != std::string::npos);
    }
    // The failure poisoned the session: the peer now reports Cancelled.
    CHECK(s.stats->cancelled.load());
    try {
      std::move(s.channels.at("q")).recv();
      FAIL("peer must observe the cancellation");
    } catch (const SessionError& e) {
      CHECK(e.kind == ErrorKind::Cancelled);
    }
  }

  SUBCASE("payload sort mismatch") {
    auto s = new_session(locals);
    auto p = std::move(s.channels.at("p"));
    try {
      std::move(p).send(Value::of_int(3));
      FAIL("sort mismatch");
    } catch (const SessionError& e) {
      CHECK(e.kind == ErrorKind::ProtocolViolation);
      CHECK(e.detail.find("str") != std::string::npos);
      CHECK(e.detail.find("int") != std::string::npos);
    }
    std::move(s.channels.at("q")).cancel();
  }

  SUBCASE("close before the monitor ends") {
    auto s = new_session(locals);
    auto p = std::move(s.channels.at("p"));
    CHECK_THROWS_AS(std::move(p).close(), SessionError);
    std::move(s.channels.at("q")).cancel();
  }

  SUBCASE("offer on a plain receive") {
    auto s = new_session(locals);
    auto q = std::move(s.channels.at("q"));
    try {
      std::move(q).offer();
      FAIL("offer needs a choice");
    } catch (const SessionError& e) {
      CHECK(e.kind == ErrorKind::ProtocolViolation);
    }
    std::move(s.channels.at("p")).cancel();
  }
}

TEST_CASE("choice primitives check their monitors") {
  auto locals = parse_locals(
      {{"p", "q+{go(int). end, stop. end}"},
       {"q", "p&{go(int). end, stop. end}"}});

  SUBCASE("unknown label") {
    auto s = new_session(locals);
    auto p = std::move(s.channels.at("p"));
    try {
      std::move(p).choose("abort");
      FAIL("label is not offered");
    } catch (const SessionError& e) {
      CHECK(e.kind == ErrorKind::ProtocolViolation);
      CHECK(e.detail.find("unknown label 'abort'") != std::string::npos);
      CHECK(e.detail.find("go") != std::string::npos);
      CHECK(e.detail.find("stop") != std::string::npos);
    }
    std::move(s.channels.at("q")).cancel();
  }

  SUBCASE("send on an owned choice") {
    auto s = new_session(locals);
    auto p = std::move(s.channels.at("p"));
    CHECK_THROWS_AS(std::move(p).send(Value::of_int(1)), SessionError);
    std::move(s.channels.at("q")).cancel();
  }

  SUBCASE("choose relays label and payload") {
    auto s = new_session(locals);
    auto p = std::move(s.channels.at("p"));
    auto q = std::move(s.channels.at("q"));
    std::string label;
    std::int64_t payload = 0;
    bool ok = run_all({[&] {
                         auto p1 = std::move(p).choose("go", Value::of_int(5));
                         std::move(p1).close();
                       },
                       [&] {
                         auto o = std::move(q).offer();
                         label = o.label;
                         payload = o.value.as_int();
                         std::move(o.chan).close();
                       }});
    CHECK(ok);
    CHECK(label == "go");
    CHECK(payload == 5);
    CHECK(s.stats->payload_messages == 1);
  }
}

TEST_CASE("a consumed channel reports AlreadyConsumed without poisoning") {
  auto session = new_session(parse_locals(
      {{"p", "q+{hello(str). end}"}, {"q", "p&{hello(str). end}"}}));
  auto p = std::move(session.channels.at("p"));
  auto q = std::move(session.channels.at("q"));

  auto p1 = std::move(p).send(Value::of_str("once"));
  try {
    std::move(p).send(Value::of_str("twice"));  // stale handle
    FAIL("second use must be rejected");
  } catch (const SessionError& e) {
    CHECK(e.kind == ErrorKind::AlreadyConsumed);
  }
  // The live successor still works and the session was not cancelled.
  CHECK_FALSE(session.stats->cancelled.load());
  bool ok = run_all({[&] { std::move(p1).close(); },
                     [&] {
                       auto r = std::move(q).recv();
                       std::move(r.chan).close();
                     }});
  CHECK(ok);
  CHECK_FALSE(session.stats->cancelled.load());
}

TEST_CASE("cancellation reaches every role") {
  auto session = new_session(parse_global_type(kVideoGlobal));
  auto a = std::move(session.channels.at("A"));
  auto c = std::move(session.channels.at("C"));
  auto s = std::move(session.channels.at("S"));

  std::move(c).cancel();  // the chooser gives up before sending anything
  CHECK(session.stats->cancelled.load());

  ErrorKind ka{}, ks{};
  bool ok = run_all({[&] {
                       try {
                         std::move(a).offer();
                       } catch (const SessionError& e) {
                         ka = e.kind;
                       }
                     },
                     [&] {
                       try {
                         std::move(s).offer();
                       } catch (const SessionError& e) {
                         ks = e.kind;
                       }
                     }});
  CHECK(ok);
  CHECK(ka == ErrorKind::Cancelled);
  CHECK(ks == ErrorKind::Cancelled);
}

TEST_CASE("dropping a live channel cancels the session") {
  auto session = new_session(parse_locals(
      {{"p", "q+{hello(str). end}"}, {"q", "p&{hello(str). end}"}}));
  {
    auto doomed = std::move(session.channels.at("p"));
    (void)doomed;  // destructor acts as cancel
  }
  try {
    std::move(session.channels.at("q")).recv();
    FAIL("peer must observe the drop");
  } catch (const SessionError& e) {
    CHECK(e.kind == ErrorKind::Cancelled);
    CHECK(e.detail.find("dropped") != std::string::npos);
  }
}

TEST_CASE("blocked receives time out and cancel the session") {
  SessionConfig cfg;
  cfg.timeout = 60ms;
  auto session = new_session(parse_locals({{"p", "q+{hello(str). end}"},
                                           {"q", "p&{hello(str). end}"}}),
                             cfg);
  auto q = std::move(session.channels.at("q"));
  auto t0 = std::chrono::steady_clock::now();
  try {
    std::move(q).recv();  // nobody ever sends
    FAIL("must time out");
  } catch (const SessionError& e) {
    CHECK(e.kind == ErrorKind::Timeout);
  }
  auto elapsed = std::chrono::steady_clock::now() - t0;
  CHECK(elapsed >= 55ms);
  CHECK(session.stats->cancelled.load());
  try {
    std::move(session.channels.at("p")).send(Value::of_str("late"));
    FAIL("session is dead");
  } catch (const SessionError& e) {
    CHECK(e.kind == ErrorKind::Cancelled);
  }
}

TEST_CASE("three-role streaming loop runs to completion") {
  auto session = new_session(parse_global_type(kVideoGlobal));
  auto a = std::move(session.channels.at("A"));
  auto c = std::move(session.channels.at("C"));
  auto s = std::move(session.channels.at("S"));
  const int kLoops = 3;
  std::vector<std::int64_t> responses;

  bool ok = run_all(
      {[&] {  // C: request kLoops times, then close the loop
         auto mc = std::move(c);
         for (int k = 0; k < kLoops; ++k) {
           mc = std::move(mc).choose("ReqVideo", Value::of_int(k));
           auto r = std::move(mc).recv();
           responses.push_back(r.value.as_int());
           mc = std::move(r.chan);
         }
         mc = std::move(mc).choose("close");
         std::move(mc).close();
       },
       [&] {  // A: relay between C and S
         auto mc = std::move(a);
         for (;;) {
           auto o = std::move(mc).offer();
           if (o.label == "close") {
             auto m1 = std::move(o.chan).send(Value::unit());
             std::move(m1).close();
             break;
           }
           auto m1 = std::move(o.chan).send(o.value);  // forward request
           auto r = std::move(m1).recv();              // server result
           mc = std::move(r.chan).send(r.value);       // forward response
         }
       },
       [&] {  // S: answer requests until told to stop
         auto mc = std::move(s);
         for (;;) {
           auto o = std::move(mc).offer();
           if (o.label == "close") {
             std::move(o.chan).close();
             break;
           }
           auto v = o.value.as_int();
           mc = std::move(o.chan).send(Value::of_int(100 + v));
         }
       }});

  CHECK(ok);
  CHECK(responses == std::vector<std::int64_t>{100, 101, 102});
  // Four payload messages per loop plus the two relayed close labels.
  CHECK(session.stats->payload_messages == 4 * kLoops + 2);
  CHECK_FALSE(session.stats->cancelled.load());
}

TEST_CASE("ring sweeps deliver the exact message count") {
  const int n = 5, rounds = 3;
  auto session = new_session(ring_locals(n, rounds));
  std::vector<std::function<void()>> scripts;
  std::vector<Outcome> outcomes(n);
  int idx = 0;
  for (auto& kv : session.channels) {
    auto* out = &outcomes[idx++];
    auto holder = std::make_shared<MeshedChannel>(std::move(kv.second));
    scripts.push_back([out, holder] { *out = drive(std::move(*holder)); });
  }
  CHECK(run_all(std::move(scripts)));
  for (const auto& o : outcomes) CHECK(o.completed);
  CHECK(session.stats->payload_messages == 2 * (n - 1) * rounds);
}

TEST_CASE("mesh iterations deliver the exact message count") {
  const int n = 3, iters = 2;
  auto session = new_session(mesh_locals(n, iters));
  std::vector<std::function<void()>> scripts;
  std::vector<Outcome> outcomes(n);
  int idx = 0;
  for (auto& kv : session.channels) {
    auto* out = &outcomes[idx++];
    auto holder = std::make_shared<MeshedChannel>(std::move(kv.second));
    scripts.push_back([out, holder] { *out = drive(std::move(*holder)); });
  }
  CHECK(run_all(std::move(scripts)));
  for (const auto& o : outcomes) CHECK(o.completed);
  CHECK(session.stats->payload_messages == n * (n - 1) * iters);
}

TEST_CASE("random mid-protocol kills never hang the ring") {
  const int n = 5, rounds = 3;
  std::mt19937 rng(20260814u);
  for (int run = 0; run < 12; ++run) {
    SessionConfig cfg;
    cfg.timeout = 500ms;
    auto session = new_session(ring_locals(n, rounds), cfg);
    int victim = static_cast<int>(rng() % n);
    // Operations before close: 2 per round at the ends, 4 in the middle.
    int ops = (victim == 0 || victim == n - 1) ? 2 * rounds : 4 * rounds;
    int kill_at = static_cast<int>(rng() % ops);

    std::vector<std::function<void()>> scripts;
    std::vector<Outcome> outcomes(n);
    int idx = 0;
    for (auto& kv : session.channels) {
      int me = idx;
      auto* out = &outcomes[idx++];
      auto holder = std::make_shared<MeshedChannel>(std::move(kv.second));
      scripts.push_back([out, me, victim, kill_at, holder] {
        *out = drive(std::move(*holder), me == victim ? kill_at : -1);
      });
    }
    CHECK(run_all(std::move(scripts), 2000ms));
    CHECK(session.stats->cancelled.load());
    for (int i = 0; i < n; ++i) {
      if (i == victim) {
        CHECK_FALSE(outcomes[i].completed);
      } else {
        CHECK(outcomes[i].errored);
        CHECK(outcomes[i].kind == ErrorKind::Cancelled);
      }
    }
  }
}
