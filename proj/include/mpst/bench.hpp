// Benchmark harness: the three standard topologies (ping-pong, ring, full
// mesh) executed on the meshed-channel runtime, with an optional bare
// untyped-cell baseline of identical topology.  Every run spawns one thread
// per role, drives the protocol to completion, and reports wall time plus an
// exact payload-message count checked against the closed-form target.
#pragma once

#include <cstdint>
#include <string>

namespace mpst::bench {

struct BenchResult {
  std::string protocol;  // "ping-pong" | "ring" | "mesh"
  std::string name;      // "meshed" (typed runtime) | "bare" (baseline)
  std::string params;    // e.g. "n=5;rounds=100"
  std::uint64_t iterations = 0;
  std::uint64_t wall_ns = 0;

  std::uint64_t messages = 0;           // observed payload transfers
  std::uint64_t expected_messages = 0;  // closed-form target

  bool counts_ok() const { return messages == expected_messages; }
};

// CSV schema: protocol,name,params,iterations,wall_ns
std::string csv_header();
std::string csv_row(const BenchResult& r);

// Two roles exchange a request/response pair per iteration: 2*iters messages.
BenchResult run_ping_pong(int iters, bool bare);

// n roles pass a token r0 -> ... -> r(n-1) and back each round:
// 2*(n-1)*rounds messages.
BenchResult run_ring(int n, int rounds, bool bare);

// Every ordered pair exchanges one message per iteration: n*(n-1)*iters
// messages.
BenchResult run_mesh(int n, int iters, bool bare);

}  // namespace mpst::bench
