#include "mpst/bench.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mpst/runtime.hpp"
#include "mpst/types.hpp"

namespace mpst::bench {

namespace {

std::string role_name(int i) { return "r" + std::to_string(i); }

// --- unrolled monitor types (built iteratively; depth grows with iters) ---

LocalTypePtr wrap_send(const std::string& peer, const std::string& label,
                       LocalTypePtr cont) {
  return LocalType::make_select(peer,
                                {LocalArm{label, Payload::of(Sort::Int), std::move(cont)}});
}

LocalTypePtr wrap_recv(const std::string& peer, const std::string& label,
                       LocalTypePtr cont) {
  return LocalType::make_branch(peer,
                                {LocalArm{label, Payload::of(Sort::Int), std::move(cont)}});
}

// Two roles, `iters` request/response exchanges.
std::map<std::string, LocalTypePtr> ping_pong_locals(int iters) {
  LocalTypePtr a = LocalType::make_end();
  LocalTypePtr b = LocalType::make_end();
  for (int i = 0; i < iters; ++i) {
    a = wrap_send("r1", "ping", wrap_recv("r1", "pong", std::move(a)));
    b = wrap_recv("r0", "ping", wrap_send("r0", "pong", std::move(b)));
  }
  return {{"r0", std::move(a)}, {"r1", std::move(b)}};
}

// Token sweep r0 -> ... -> r(n-1) and back, `rounds` times.  Actions are
// wrapped in reverse execution order.
std::map<std::string, LocalTypePtr> ring_locals(int n, int rounds) {
  std::map<std::string, LocalTypePtr> locals;
  for (int i = 0; i < n; ++i) {
    LocalTypePtr t = LocalType::make_end();
    for (int r = 0; r < rounds; ++r) {
      if (i > 0) t = wrap_send(role_name(i - 1), "bwd", std::move(t));
      if (i < n - 1) t = wrap_recv(role_name(i + 1), "bwd", std::move(t));
      if (i < n - 1) t = wrap_send(role_name(i + 1), "fwd", std::move(t));
      if (i > 0) t = wrap_recv(role_name(i - 1), "fwd", std::move(t));
    }
    locals[role_name(i)] = std::move(t);
  }
  return locals;
}

// Every unordered pair exchanges one message each way per iteration, the
// lower-ranked role initiating; pairs are visited in ascending peer order.
std::map<std::string, LocalTypePtr> mesh_locals(int n, int iters) {
  std::map<std::string, LocalTypePtr> locals;
  for (int i = 0; i < n; ++i) {
    LocalTypePtr t = LocalType::make_end();
    for (int it = 0; it < iters; ++it) {
      for (int j = n - 1; j >= 0; --j) {
        if (j == i) continue;
        if (j < i) {
          t = wrap_send(role_name(j), "msg", std::move(t));
          t = wrap_recv(role_name(j), "msg", std::move(t));
        } else {
          t = wrap_recv(role_name(j), "msg", std::move(t));
          t = wrap_send(role_name(j), "msg", std::move(t));
        }
      }
    }
    locals[role_name(i)] = std::move(t);
  }
  return locals;
}

// --- typed runner -----------------------------------------------------------

// Sends on selects, receives on branches, closes at end.  Bench monitors are
// choice-free, so this covers every state.
void drive(MeshedChannel mc) {
  for (;;) {
    auto h = unfold_head(mc.monitor());
    if (h->kind == LocalType::Kind::End) {
      std::move(mc).close();
      return;
    }
    if (h->kind == LocalType::Kind::Select) {
      mc = std::move(mc).send(Value::of_int(1));
    } else {
      auto r = std::move(mc).recv();
      mc = std::move(r.chan);
    }
  }
}

struct TimedRun {
  std::uint64_t wall_ns = 0;
  std::uint64_t messages = 0;
  bool errored = false;
};

TimedRun run_typed(const std::map<std::string, LocalTypePtr>& locals,
                   const std::string& protocol) {
  SessionConfig cfg;
  cfg.name = protocol;
  cfg.timeout = std::chrono::milliseconds(10'000);
  Session s = new_session(locals, cfg);

  std::atomic<bool> errored{false};
  std::vector<std::thread> threads;
  threads.reserve(s.channels.size());

  auto t0 = std::chrono::steady_clock::now();
  for (auto& [role, ch] : s.channels) {
    threads.emplace_back([mc = std::move(ch), &errored]() mutable {
      try {
        drive(std::move(mc));
      } catch (const SessionError&) {
        errored.store(true);
      }
    });
  }
  for (auto& t : threads) t.join();
  auto t1 = std::chrono::steady_clock::now();

  TimedRun out;
  out.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  out.messages = s.stats->payload_messages.load();
  out.errored = errored.load();
  return out;
}

// --- bare baseline: unmonitored blocking cells, identical topology ----------

struct BareCell {
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::int64_t> q;

  void push(std::int64_t v) {
    {
      std::lock_guard<std::mutex> lock(m);
      q.push_back(v);
    }
    cv.notify_one();
  }
  std::int64_t pull() {
    std::unique_lock<std::mutex> lock(m);
    cv.wait(lock, [&] { return !q.empty(); });
    std::int64_t v = q.front();
    q.pop_front();
    return v;
  }
};

struct BareMesh {
  int n;
  std::vector<std::unique_ptr<BareCell>> cells;  // ordered pair (from, to)
  std::atomic<std::uint64_t> messages{0};

  explicit BareMesh(int n_) : n(n_), cells(static_cast<size_t>(n_) * n_) {
    for (auto& c : cells) c = std::make_unique<BareCell>();
  }
  void send(int from, int to, std::int64_t v) {
    cells[static_cast<size_t>(from) * n + to]->push(v);
    messages.fetch_add(1);
  }
  std::int64_t recv(int from, int to) {
    return cells[static_cast<size_t>(from) * n + to]->pull();
  }
};

TimedRun run_bare(int n, const std::function<void(BareMesh&, int)>& script) {
  BareMesh mesh(n);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(n));

  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i)
    threads.emplace_back([&mesh, &script, i] { script(mesh, i); });
  for (auto& t : threads) t.join();
  auto t1 = std::chrono::steady_clock::now();

  TimedRun out;
  out.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  out.messages = mesh.messages.load();
  return out;
}

BenchResult finish(const std::string& protocol, bool bare,
                   const std::string& params, std::uint64_t iterations,
                   std::uint64_t expected, const TimedRun& run) {
  BenchResult r;
  r.protocol = protocol;
  r.name = bare ? "bare" : "meshed";
  r.params = params;
  r.iterations = iterations;
  r.wall_ns = run.wall_ns;
  r.messages = run.messages;
  r.expected_messages = expected;
  return r;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

std::string csv_header() { return "protocol,name,params,iterations,wall_ns"; }

std::string csv_row(const BenchResult& r) {
  return r.protocol + "," + r.name + "," + r.params + "," +
         std::to_string(r.iterations) + "," + std::to_string(r.wall_ns);
}

BenchResult run_ping_pong(int iters, bool bare) {
  require(iters >= 1, "ping-pong: iters must be >= 1");
  const std::string params = "n=2;iters=" + std::to_string(iters);
  const auto expected = 2ull * static_cast<std::uint64_t>(iters);

  TimedRun run;
  if (bare) {
    run = run_bare(2, [iters](BareMesh& m, int i) {
      for (int it = 0; it < iters; ++it) {
        if (i == 0) {
          m.send(0, 1, it);
          m.recv(1, 0);
        } else {
          m.recv(0, 1);
          m.send(1, 0, it);
        }
      }
    });
  } else {
    run = run_typed(ping_pong_locals(iters), "ping-pong");
  }
  return finish("ping-pong", bare, params, static_cast<std::uint64_t>(iters),
                expected, run);
}

BenchResult run_ring(int n, int rounds, bool bare) {
  require(n >= 2, "ring: n must be >= 2");
  require(rounds >= 1, "ring: rounds must be >= 1");
  const std::string params =
      "n=" + std::to_string(n) + ";rounds=" + std::to_string(rounds);
  const auto expected =
      2ull * static_cast<std::uint64_t>(n - 1) * static_cast<std::uint64_t>(rounds);

  TimedRun run;
  if (bare) {
    run = run_bare(n, [n, rounds](BareMesh& m, int i) {
      for (int r = 0; r < rounds; ++r) {
        if (i > 0) m.recv(i - 1, i);
        if (i < n - 1) m.send(i, i + 1, r);
        if (i < n - 1) m.recv(i + 1, i);
        if (i > 0) m.send(i, i - 1, r);
      }
    });
  } else {
    run = run_typed(ring_locals(n, rounds), "ring");
  }
  return finish("ring", bare, params, static_cast<std::uint64_t>(rounds),
                expected, run);
}

BenchResult run_mesh(int n, int iters, bool bare) {
  require(n >= 2, "mesh: n must be >= 2");
  require(iters >= 1, "mesh: iters must be >= 1");
  const std::string params =
      "n=" + std::to_string(n) + ";iters=" + std::to_string(iters);
  const auto expected = static_cast<std::uint64_t>(n) *
                        static_cast<std::uint64_t>(n - 1) *
                        static_cast<std::uint64_t>(iters);

  TimedRun run;
  if (bare) {
    run = run_bare(n, [n, iters](BareMesh& m, int i) {
      for (int it = 0; it < iters; ++it) {
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          if (j < i) {
            m.recv(j, i);
            m.send(i, j, it);
          } else {
            m.send(i, j, it);
            m.recv(j, i);
          }
        }
      }
    });
  } else {
    run = run_typed(mesh_locals(n, iters), "mesh");
  }
  return finish("mesh", bare, params, static_cast<std::uint64_t>(iters),
                expected, run);
}

}  // namespace mpst::bench
