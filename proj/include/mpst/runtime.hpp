// Executable affine meshed channels.
//
// A session over roles {r1..rn} owns n(n-1)/2 binary channel pairs, one per
// unordered role pair, distributed to per-role MeshedChannel values.  Each
// MeshedChannel carries a monitor (the role's local type) that every
// operation advances by exactly one action; the binary pair to use is the
// monitor head's peer.  Messages travel over one-shot transfer cells: a
// successful transfer hands the receiver (label, payload, fresh continuation
// cell pair), so each cell is written at most once and the chain of cells is
// the "fresh continuation session" of the exchange.
//
// Channels are affine: every operation consumes its input value and returns
// a successor; reusing a consumed value reports AlreadyConsumed.  Dropping a
// live channel (destructor) cancels the whole session, as does any failed
// operation, so no peer can block forever: blocking operations wake on
// cancellation and otherwise time out (default 1 s), and a timeout itself
// cancels the session.
//
// Choices are relayed along the projection structure: the chooser's monitor
// is a multi-arm select toward one peer, and roles that learn the outcome
// later see a multi-arm branch fed by an informed forwarder.  Every message
// carries its label, so offer() reads the decision from an ordinary
// transfer.  Payloads are sort-tagged byte strings; calculus-level
// delegation is not a runtime feature (the interpreter covers it).
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpst/algebra.hpp"
#include "mpst/types.hpp"

namespace mpst {

// ---------------------------------------------------------------------------
// Values

// Runtime payload: a base-sort tag plus its byte representation.
struct Value {
  Sort sort = Sort::Unit;
  std::string bytes;

  static Value unit() { return {}; }
  static Value of_int(std::int64_t v);
  static Value of_str(std::string v);
  static Value of_bool(bool v);

  std::int64_t as_int() const;  // throws std::logic_error on tag mismatch
  const std::string& as_str() const;
  bool as_bool() const;

  friend bool operator==(const Value& a, const Value& b) {
    return a.sort == b.sort && a.bytes == b.bytes;
  }
};

// ---------------------------------------------------------------------------
// Errors

enum class ErrorKind {
  Cancelled,          // session cancelled (explicitly, by drop, or implicitly)
  Disconnected,       // session already closed by every role
  ProtocolViolation,  // operation disagrees with the monitor
  Timeout,            // blocking operation exceeded the session timeout
  AlreadyConsumed,    // the channel value was already used
};

std::string error_kind_name(ErrorKind k);

struct SessionError : std::runtime_error {
  ErrorKind kind;
  std::string session;  // session name
  std::string role;     // role that observed the error
  std::string detail;   // ProtocolViolation carries the expected action here

  SessionError(ErrorKind kind_, std::string session_, std::string role_,
               std::string detail_);
};

// new_session rejects role pairs whose binary views are not mutually dual.
struct DualityError : std::runtime_error {
  std::string role_a, role_b;  // the offending pair (role_a < role_b)
  std::string view_a, view_b;  // the two binary views, printed

  DualityError(std::string a, std::string b, std::string va, std::string vb);
};

// ---------------------------------------------------------------------------
// Session plumbing

namespace rtdetail {
struct SessionCore;
struct Cell;
struct Message;
}  // namespace rtdetail

// Counters shared by a whole session; safe to read after the threads join.
struct SessionStats {
  std::atomic<std::uint64_t> payload_messages{0};  // delivered, close excluded
  std::atomic<bool> cancelled{false};
};

struct SessionConfig {
  std::string name = "session";
  std::chrono::milliseconds timeout{1000};  // recv/offer/close block at most this
};

struct Session;
struct Received;
struct Offered;

class MeshedChannel {
 public:
  MeshedChannel();  // consumed placeholder, usable only as an assignment target
  MeshedChannel(MeshedChannel&& other) noexcept;
  MeshedChannel& operator=(MeshedChannel&& other) noexcept;
  MeshedChannel(const MeshedChannel&) = delete;
  MeshedChannel& operator=(const MeshedChannel&) = delete;
  ~MeshedChannel();  // a live channel cancels its session on destruction

  const std::string& role() const { return role_; }
  LocalTypePtr monitor() const { return monitor_; }
  bool live() const { return !consumed_; }
  std::vector<std::string> peer_roles() const;
  // Interaction order ahead of the monitor; head agrees with the monitor head.
  std::vector<StackEntry> stack() const {
    return monitor_ ? stack_of(monitor_) : std::vector<StackEntry>{};
  }
  // Signed pair index toward `peer` (negative: this side holds the dual end).
  std::int64_t pair_index(const std::string& peer) const;

  // Monitor head must be a single-arm select: transfers (label, v) to the
  // head peer and returns the successor.
  MeshedChannel send(Value v) &&;

  // Monitor head must be a single-arm branch: blocks for the transfer.
  Received recv() &&;

  // Monitor head must be a multi-arm select owned by this role: transfers
  // (label, v) to the head peer and returns the successor for that label.
  MeshedChannel choose(const std::string& label, Value v = Value::unit()) &&;

  // Monitor head must be a multi-arm branch: blocks for the decision.
  Offered offer() &&;

  // Monitor must be end: exchanges a close token with every peer (all sends
  // first, then all receives, in alphanumeric peer order) and retires the
  // channel.  Returns only when every peer reached its own close.
  void close() &&;

  // Cancels the whole session (idempotent; no-op on consumed values).
  void cancel() &&;

 private:
  friend struct SessionBuilder;
  friend Session new_session(const std::map<std::string, LocalTypePtr>&,
                             const SessionConfig&);

  struct PairEnd {
    std::int64_t index = 0;  // signed channel-matrix index from this side
    std::shared_ptr<rtdetail::Cell> write, read;
  };

  std::shared_ptr<rtdetail::SessionCore> core_;
  std::string role_;
  LocalTypePtr monitor_;
  std::map<std::string, PairEnd> peers_;  // alphanumeric by role
  bool consumed_ = true;

  [[noreturn]] void fail(ErrorKind kind, const std::string& detail);
  void require_usable();
  LocalTypePtr head();
  void drop() noexcept;
  MeshedChannel push(const std::string& peer, const std::string& label,
                     Value v, LocalTypePtr next_monitor);
  rtdetail::Message pull(const std::string& peer);
  MeshedChannel successor(const std::string& peer, LocalTypePtr next_monitor,
                          std::shared_ptr<rtdetail::Cell> write,
                          std::shared_ptr<rtdetail::Cell> read);
};

struct Received {
  Value value;
  MeshedChannel chan;
};

struct Offered {
  std::string label;
  Value value;
  MeshedChannel chan;
};

struct Session {
  std::map<std::string, MeshedChannel> channels;  // one per role
  std::shared_ptr<SessionStats> stats;
};

// Creates one meshed channel per role.  Before allocating anything, every
// role pair's binary views are checked to be mutually dual (DualityError
// otherwise); local types may only mention session roles as peers and may
// not use the reserved close label (std::invalid_argument).
Session new_session(const std::map<std::string, LocalTypePtr>& locals,
                    const SessionConfig& config = {});

// Convenience: project a well-formed global type onto all of its roles.
Session new_session(const GlobalTypePtr& global, const SessionConfig& config = {});

}  // namespace mpst
