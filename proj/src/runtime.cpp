#include "mpst/runtime.hpp"

#include <condition_variable>
#include <mutex>
#include <utility>

namespace mpst {

namespace rtdetail {

// One transfer: the label and payload plus the fresh one-shot cells on which
// the conversation between the two sides continues (receiver's orientation).
struct Message {
  std::string label;
  Value payload;
  std::shared_ptr<Cell> cont_write, cont_read;
};

// One-shot transfer cell.  All fields are guarded by the session mutex.
struct Cell {
  bool filled = false;
  bool taken = false;
  Message msg;
};

// Session-global state: one mutex/condition pair serves every cell of the
// session so that cancellation can wake every blocked receiver at once.
struct SessionCore {
  std::string name;
  std::mutex m;
  std::condition_variable cv;
  bool cancelled = false;
  std::string cancel_origin;
  bool closed = false;
  int roles = 0;
  int closed_roles = 0;
  std::chrono::milliseconds timeout{1000};
  std::shared_ptr<SessionStats> stats;
};

}  // namespace rtdetail

using rtdetail::Cell;
using rtdetail::Message;
using rtdetail::SessionCore;

namespace {
constexpr const char* kCloseLabel = "__close";
}

// ---------------------------------------------------------------------------
// Values

Value Value::of_int(std::int64_t v) { return {Sort::Int, std::to_string(v)}; }
Value Value::of_str(std::string v) { return {Sort::Str, std::move(v)}; }
Value Value::of_bool(bool v) { return {Sort::Bool, v ? "true" : "false"}; }

std::int64_t Value::as_int() const {
  if (sort != Sort::Int) throw std::logic_error("value is not an int");
  return std::stoll(bytes);
}

const std::string& Value::as_str() const {
  if (sort != Sort::Str) throw std::logic_error("value is not a str");
  return bytes;
}

bool Value::as_bool() const {
  if (sort != Sort::Bool) throw std::logic_error("value is not a bool");
  return bytes == "true";
}

// ---------------------------------------------------------------------------
// Errors

std::string error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Cancelled: return "Cancelled";
    case ErrorKind::Disconnected: return "Disconnected";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::AlreadyConsumed: return "AlreadyConsumed";
  }
  return "?";
}

SessionError::SessionError(ErrorKind kind_, std::string session_,
                           std::string role_, std::string detail_)
    : std::runtime_error("[" + session_ + "] " + role_ + ": " +
                         error_kind_name(kind_) + ": " + detail_),
      kind(kind_),
      session(std::move(session_)),
      role(std::move(role_)),
      detail(std::move(detail_)) {}

DualityError::DualityError(std::string a, std::string b, std::string va,
                           std::string vb)
    : std::runtime_error("binary views of (" + a + ", " + b +
                         ") are not mutually dual: " + a + " sees " + va +
                         ", " + b + " sees " + vb),
      role_a(std::move(a)),
      role_b(std::move(b)),
      view_a(std::move(va)),
      view_b(std::move(vb)) {}

// ---------------------------------------------------------------------------
// MeshedChannel plumbing

MeshedChannel::MeshedChannel() = default;

MeshedChannel::MeshedChannel(MeshedChannel&& other) noexcept
    : core_(std::move(other.core_)),
      role_(std::move(other.role_)),
      monitor_(std::move(other.monitor_)),
      peers_(std::move(other.peers_)),
      consumed_(other.consumed_) {
  other.consumed_ = true;
  other.core_.reset();
}

MeshedChannel& MeshedChannel::operator=(MeshedChannel&& other) noexcept {
  if (this != &other) {
    drop();
    core_ = std::move(other.core_);
    role_ = std::move(other.role_);
    monitor_ = std::move(other.monitor_);
    peers_ = std::move(other.peers_);
    consumed_ = other.consumed_;
    other.consumed_ = true;
    other.core_.reset();
  }
  return *this;
}

MeshedChannel::~MeshedChannel() { drop(); }

// Disposal contract: discarding a live channel cancels the whole session.
void MeshedChannel::drop() noexcept {
  if (consumed_ || !core_) return;
  std::lock_guard<std::mutex> lk(core_->m);
  if (!core_->cancelled) {
    core_->cancelled = true;
    core_->cancel_origin = role_ + " dropped the channel";
    core_->stats->cancelled = true;
    core_->cv.notify_all();
  }
  consumed_ = true;
}

void MeshedChannel::cancel() && {
  if (consumed_ || !core_) return;  // idempotent, stale values ignored
  std::lock_guard<std::mutex> lk(core_->m);
  if (!core_->cancelled) {
    core_->cancelled = true;
    core_->cancel_origin = role_ + " cancelled";
    core_->stats->cancelled = true;
    core_->cv.notify_all();
  }
  consumed_ = true;
}

std::vector<std::string> MeshedChannel::peer_roles() const {
  std::vector<std::string> out;
  out.reserve(peers_.size());
  for (const auto& kv : peers_) out.push_back(kv.first);
  return out;
}

std::int64_t MeshedChannel::pair_index(const std::string& peer) const {
  auto it = peers_.find(peer);
  if (it == peers_.end())
    throw std::out_of_range("no binary channel toward " + peer);
  return it->second.index;
}

// Failed operations poison the whole session (implicit cancellation), with
// two exceptions: a stale handle (AlreadyConsumed) must not kill the live
// session that moved on without it, and operations on an already-closed
// session (Disconnected) must not retroactively mark a completed session
// cancelled.
void MeshedChannel::fail(ErrorKind kind, const std::string& detail) {
  if (kind != ErrorKind::AlreadyConsumed && kind != ErrorKind::Disconnected &&
      core_) {
    std::lock_guard<std::mutex> lk(core_->m);
    if (!core_->cancelled) {
      core_->cancelled = true;
      core_->cancel_origin = role_ + ": " + error_kind_name(kind);
      core_->stats->cancelled = true;
      core_->cv.notify_all();
    }
    consumed_ = true;
  }
  throw SessionError(kind, core_ ? core_->name : "", role_, detail);
}

void MeshedChannel::require_usable() {
  if (consumed_ || !core_)
    throw SessionError(ErrorKind::AlreadyConsumed, core_ ? core_->name : "",
                       role_, "channel value already used");
}

LocalTypePtr MeshedChannel::head() {
  try {
    return unfold_head(monitor_);
  } catch (const std::exception& e) {
    fail(ErrorKind::ProtocolViolation, e.what());
  }
}

MeshedChannel MeshedChannel::successor(const std::string& peer,
                                       LocalTypePtr next_monitor,
                                       std::shared_ptr<Cell> write,
                                       std::shared_ptr<Cell> read) {
  MeshedChannel s;
  s.core_ = core_;
  s.role_ = role_;
  s.monitor_ = std::move(next_monitor);
  s.peers_ = std::move(peers_);
  auto& pe = s.peers_[peer];
  pe.write = std::move(write);
  pe.read = std::move(read);
  s.consumed_ = false;
  consumed_ = true;
  return s;
}

MeshedChannel MeshedChannel::push(const std::string& peer,
                                  const std::string& label, Value v,
                                  LocalTypePtr next_monitor) {
  auto it = peers_.find(peer);
  if (it == peers_.end())
    fail(ErrorKind::ProtocolViolation, "no binary channel toward " + peer);
  auto x = std::make_shared<Cell>();  // this side writes x next
  auto y = std::make_shared<Cell>();  // this side reads y next
  std::string origin;
  enum { Ok, WasCancelled, WasClosed, Conflict } state = Ok;
  {
    std::lock_guard<std::mutex> lk(core_->m);
    if (core_->cancelled) {
      state = WasCancelled;
      origin = core_->cancel_origin;
    } else if (core_->closed) {
      state = WasClosed;
    } else if (it->second.write->filled) {
      state = Conflict;
    } else {
      Cell& w = *it->second.write;
      w.msg = Message{label, std::move(v), y, x};
      w.filled = true;
      core_->cv.notify_all();
    }
  }
  switch (state) {
    case WasCancelled:
      fail(ErrorKind::Cancelled, "session cancelled (" + origin + ")");
    case WasClosed:
      fail(ErrorKind::Disconnected, "session already closed");
    case Conflict:
      fail(ErrorKind::ProtocolViolation,
           "binary channel toward " + peer + " already carries an unread message");
    case Ok:
      break;
  }
  return successor(peer, std::move(next_monitor), std::move(x), std::move(y));
}

Message MeshedChannel::pull(const std::string& peer) {
  auto it = peers_.find(peer);
  if (it == peers_.end())
    fail(ErrorKind::ProtocolViolation, "no binary channel toward " + peer);
  auto cell = it->second.read;
  Message m;
  std::string origin;
  enum { Ok, WasCancelled, TimedOut } state = Ok;
  {
    std::unique_lock<std::mutex> lk(core_->m);
    auto deadline = std::chrono::steady_clock::now() + core_->timeout;
    core_->cv.wait_until(lk, deadline,
                         [&] { return core_->cancelled || cell->filled; });
    if (core_->cancelled) {
      state = WasCancelled;
      origin = core_->cancel_origin;
    } else if (cell->filled) {
      cell->taken = true;
      m = std::move(cell->msg);
    } else {
      state = TimedOut;
    }
  }
  switch (state) {
    case WasCancelled:
      fail(ErrorKind::Cancelled, "session cancelled (" + origin + ")");
    case TimedOut:
      fail(ErrorKind::Timeout, "no message from " + peer + " within timeout");
    case Ok:
      break;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Operations

MeshedChannel MeshedChannel::send(Value v) && {
  require_usable();
  LocalTypePtr h = head();
  if (h->kind != LocalType::Kind::Select || h->arms.size() != 1)
    fail(ErrorKind::ProtocolViolation,
         "monitor expects " + to_string(monitor_) +
             "; send needs a single-arm select");
  const LocalArm& arm = h->arms[0];
  if (arm.payload.is_session())
    fail(ErrorKind::ProtocolViolation,
         "runtime payloads are base sorts; arm '" + arm.label +
             "' delegates a session");
  if (v.sort != arm.payload.sort)
    fail(ErrorKind::ProtocolViolation,
         "send " + arm.label + "(" + sort_name(arm.payload.sort) + ") got " +
             sort_name(v.sort));
  return push(h->peer, arm.label, std::move(v), arm.cont);
}

MeshedChannel MeshedChannel::choose(const std::string& label, Value v) && {
  require_usable();
  LocalTypePtr h = head();
  if (h->kind != LocalType::Kind::Select || h->arms.size() < 2)
    fail(ErrorKind::ProtocolViolation,
         "monitor expects " + to_string(monitor_) +
             "; choose needs an owned choice");
  const LocalArm* arm = nullptr;
  for (const auto& a : h->arms)
    if (a.label == label) arm = &a;
  if (!arm) {
    std::string offered;
    for (const auto& a : h->arms)
      offered += (offered.empty() ? "" : ", ") + a.label;
    fail(ErrorKind::ProtocolViolation,
         "unknown label '" + label + "'; monitor offers {" + offered + "}");
  }
  if (arm->payload.is_session())
    fail(ErrorKind::ProtocolViolation,
         "runtime payloads are base sorts; arm '" + arm->label +
             "' delegates a session");
  if (v.sort != arm->payload.sort)
    fail(ErrorKind::ProtocolViolation,
         "choose " + arm->label + "(" + sort_name(arm->payload.sort) +
             ") got " + sort_name(v.sort));
  return push(h->peer, arm->label, std::move(v), arm->cont);
}

Received MeshedChannel::recv() && {
  require_usable();
  LocalTypePtr h = head();
  if (h->kind != LocalType::Kind::Branch || h->arms.size() != 1)
    fail(ErrorKind::ProtocolViolation,
         "monitor expects " + to_string(monitor_) +
             "; recv needs a single-arm branch");
  const LocalArm& arm = h->arms[0];
  if (arm.payload.is_session())
    fail(ErrorKind::ProtocolViolation,
         "runtime payloads are base sorts; arm '" + arm.label +
             "' delegates a session");
  Message m = pull(h->peer);
  if (m.label != arm.label)
    fail(ErrorKind::ProtocolViolation, "reception error: expected '" +
                                           arm.label + "', got '" + m.label +
                                           "' from " + h->peer);
  if (m.payload.sort != arm.payload.sort)
    fail(ErrorKind::ProtocolViolation,
         "reception error: " + arm.label + " expects " +
             sort_name(arm.payload.sort) + ", got " + sort_name(m.payload.sort));
  core_->stats->payload_messages++;
  Received out{std::move(m.payload),
               successor(h->peer, arm.cont, std::move(m.cont_write),
                         std::move(m.cont_read))};
  return out;
}

Offered MeshedChannel::offer() && {
  require_usable();
  LocalTypePtr h = head();
  if (h->kind != LocalType::Kind::Branch || h->arms.size() < 2)
    fail(ErrorKind::ProtocolViolation,
         "monitor expects " + to_string(monitor_) +
             "; offer needs a received choice");
  Message m = pull(h->peer);
  const LocalArm* arm = nullptr;
  for (const auto& a : h->arms)
    if (a.label == m.label) arm = &a;
  if (!arm)
    fail(ErrorKind::ProtocolViolation,
         "reception error: unexpected label '" + m.label + "' from " + h->peer);
  if (m.payload.sort != arm->payload.sort ||  arm->payload.is_session())
    fail(ErrorKind::ProtocolViolation,
         "reception error: " + arm->label + " expects " +
             payload_to_string(arm->payload) + ", got " +
             sort_name(m.payload.sort));
  core_->stats->payload_messages++;
  Offered out{m.label, std::move(m.payload),
              successor(h->peer, arm->cont, std::move(m.cont_write),
                        std::move(m.cont_read))};
  return out;
}

void MeshedChannel::close() && {
  require_usable();
  LocalTypePtr h = head();
  if (h->kind != LocalType::Kind::End)
    fail(ErrorKind::ProtocolViolation,
         "monitor expects " + to_string(monitor_) + "; close needs end");

  // Publish the close token to every peer first (writes never block), then
  // collect every peer's token; peers are visited in alphanumeric order.
  std::string origin;
  enum { Ok, WasCancelled, WasClosed } state = Ok;
  {
    std::lock_guard<std::mutex> lk(core_->m);
    if (core_->cancelled) {
      state = WasCancelled;
      origin = core_->cancel_origin;
    } else if (core_->closed) {
      state = WasClosed;
    } else {
      for (auto& [peer, pe] : peers_) {
        pe.write->msg = Message{kCloseLabel, Value::unit(), nullptr, nullptr};
        pe.write->filled = true;
      }
      core_->cv.notify_all();
    }
  }
  if (state == WasCancelled)
    fail(ErrorKind::Cancelled, "session cancelled (" + origin + ")");
  if (state == WasClosed)
    fail(ErrorKind::Disconnected, "session already closed");

  for (auto& kv : peers_) {
    Message m = pull(kv.first);
    if (m.label != kCloseLabel)
      fail(ErrorKind::ProtocolViolation,
           "close barrier received '" + m.label + "' from " + kv.first);
  }
  {
    std::lock_guard<std::mutex> lk(core_->m);
    core_->closed_roles++;
    if (core_->closed_roles == core_->roles) core_->closed = true;
  }
  consumed_ = true;
}

// ---------------------------------------------------------------------------
// Session construction

struct SessionBuilder {
  static MeshedChannel make(std::shared_ptr<SessionCore> core, std::string role,
                            LocalTypePtr monitor,
                            std::map<std::string, MeshedChannel::PairEnd> ends) {
    MeshedChannel mc;
    mc.core_ = std::move(core);
    mc.role_ = std::move(role);
    mc.monitor_ = std::move(monitor);
    mc.peers_ = std::move(ends);
    mc.consumed_ = false;
    return mc;
  }
};

namespace {

void collect_labels(const LocalTypePtr& t, std::vector<std::string>& out) {
  if (!t) return;
  switch (t->kind) {
    case LocalType::Kind::End:
    case LocalType::Kind::Var:
      return;
    case LocalType::Kind::Rec:
      collect_labels(t->body, out);
      return;
    case LocalType::Kind::Branch:
    case LocalType::Kind::Select:
      for (const auto& a : t->arms) {
        out.push_back(a.label);
        if (a.payload.is_session()) collect_labels(a.payload.session, out);
        collect_labels(a.cont, out);
      }
      return;
  }
}

}  // namespace

Session new_session(const std::map<std::string, LocalTypePtr>& locals,
                    const SessionConfig& config) {
  if (locals.empty())
    throw std::invalid_argument("new_session: at least one role required");
  std::vector<std::string> roles;
  roles.reserve(locals.size());
  for (const auto& kv : locals) roles.push_back(kv.first);

  for (const auto& [r, t] : locals) {
    if (!t) throw std::invalid_argument("new_session: null type for " + r);
    for (const std::string& p : peers_of(t)) {
      if (p == r)
        throw std::invalid_argument("new_session: role " + r +
                                    " messages itself");
      if (!locals.count(p))
        throw std::invalid_argument("new_session: role " + r +
                                    "'s type mentions unknown peer " + p);
    }
    std::vector<std::string> labels;
    collect_labels(t, labels);
    for (const auto& l : labels)
      if (l == kCloseLabel)
        throw std::invalid_argument("new_session: label __close is reserved");
  }

  for (size_t i = 0; i < roles.size(); ++i) {
    for (size_t j = i + 1; j < roles.size(); ++j) {
      const std::string &a = roles[i], &b = roles[j];
      LocalTypePtr va = binary_view(locals.at(a), b);
      LocalTypePtr vb = binary_view(locals.at(b), a);
      if (!mutually_dual(va, a, vb, b))
        throw DualityError(a, b, to_string(va), to_string(vb));
    }
  }

  auto core = std::make_shared<SessionCore>();
  core->name = config.name;
  core->timeout = config.timeout;
  core->roles = static_cast<int>(roles.size());
  core->stats = std::make_shared<SessionStats>();

  std::map<std::string, std::map<std::string, MeshedChannel::PairEnd>> ends;
  for (size_t i = 0; i < roles.size(); ++i) {
    for (size_t j = i + 1; j < roles.size(); ++j) {
      const std::string &a = roles[i], &b = roles[j];
      auto ab = std::make_shared<Cell>();  // a writes, b reads
      auto ba = std::make_shared<Cell>();  // b writes, a reads
      std::int64_t idx = channel_index(roles, a, b);
      ends[a][b] = MeshedChannel::PairEnd{idx, ab, ba};
      ends[b][a] = MeshedChannel::PairEnd{-idx, ba, ab};
    }
  }

  Session session;
  session.stats = core->stats;
  for (const auto& r : roles)
    session.channels.emplace(
        r, SessionBuilder::make(core, r, locals.at(r), std::move(ends[r])));
  return session;
}

Session new_session(const GlobalTypePtr& global, const SessionConfig& config) {
  WellFormedReport wf = well_formed(global);
  if (!wf.ok) {
    std::string msg = "new_session: global type is not well-formed";
    for (const auto& e : wf.errors) msg += "; " + e;
    throw std::invalid_argument(msg);
  }
  std::map<std::string, LocalTypePtr> locals(wf.projections.begin(),
                                             wf.projections.end());
  return new_session(locals, config);
}

}  // namespace mpst
