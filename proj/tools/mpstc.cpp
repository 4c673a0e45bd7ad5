// mpstc — command-line entry point for the multiparty session types toolkit.
//
//   check     parse + lower + well-formedness; prints per-role projections
//   project   print the projection of a protocol onto one role
//   codegen   emit per-role bindings (neutral text or C++ typestate headers)
//   verify    safety / deadlock-freedom / liveness + k-bounded compatibility
//   simulate  explore a process term's reduction graph and check properties
//   bench     run ping-pong / ring / mesh on the runtime; CSV to stdout
//
// Exit codes: 0 pass, 1 verification failure, 2 usage/parse error.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpst/algebra.hpp"
#include "mpst/bench.hpp"
#include "mpst/cfsm.hpp"
#include "mpst/codegen.hpp"
#include "mpst/context.hpp"
#include "mpst/frontend.hpp"
#include "mpst/process.hpp"
#include "mpst/types.hpp"

namespace fs = std::filesystem;
using namespace mpst;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_trace(const std::vector<std::string>& trace) {
  for (const auto& line : trace) std::cout << "    " << line << "\n";
}

// --- check -------------------------------------------------------------

int cmd_check(const std::string& file) {
  auto protocols = fe::parse_protocols(read_file(file));
  if (protocols.empty()) {
    std::cerr << "error: no protocol declarations in " << file << "\n";
    return kUsage;
  }
  for (const auto& p : protocols) {
    GlobalTypePtr g = fe::lower(p);
    WellFormedReport wf = well_formed(g);
    if (!wf.ok) {
      std::cerr << "protocol " << p.name << ": not well-formed\n";
      for (const auto& e : wf.errors) std::cerr << "  " << e << "\n";
      return kFail;
    }
    std::cout << "protocol " << p.name << ": well-formed\n";
    for (const auto& role : p.roles)
      std::cout << "  " << role << ": " << to_string(project(g, role)) << "\n";
  }
  return kPass;
}

// --- project -----------------------------------------------------------

int cmd_project(const std::string& file, const std::string& role) {
  auto loaded = fe::load_protocol_file(file);
  std::cout << to_string(project(loaded.global, role)) << "\n";
  return kPass;
}

// --- codegen -----------------------------------------------------------

int cmd_codegen(const std::string& file, const std::string& out,
                const std::string& backend_name) {
  Backend backend = backend_name == "neutral" ? Backend::Neutral : Backend::Host;
  auto protocols = fe::parse_protocols(read_file(file));
  if (protocols.empty()) {
    std::cerr << "error: no protocol declarations in " << file << "\n";
    return kUsage;
  }
  fs::create_directories(out);
  for (const auto& p : protocols) {
    GlobalTypePtr g = fe::lower(p);
    GeneratedBundle bundle = generate(p.name, p.roles, g, backend);
    for (const auto& [name, content] : bundle.files) {
      fs::path path = fs::path(out) / name;
      std::ofstream o(path, std::ios::binary);
      if (!o) throw std::ios_base::failure("cannot write " + path.string());
      o << content;
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return kPass;
}

// --- verify ------------------------------------------------------------

int report_line(const CtxReport& r) {
  std::cout << "  " << r.property << ": " << (r.ok ? "PASS" : "FAIL")
            << " (nodes=" << r.nodes << ")\n";
  if (!r.ok) {
    std::cout << "    " << r.detail << "\n";
    print_trace(r.trace);
  }
  return r.ok ? kPass : kFail;
}

int verify_locals(const std::string& label,
                  const std::map<std::string, LocalTypePtr>& locals, int k) {
  std::cout << "verify " << label << "\n";
  TypingContext ctx;
  for (const auto& [role, t] : locals)
    ctx.entries[ChanId::endpoint("s", role)] = Payload::of(t);

  int rc = kPass;
  rc |= report_line(check_safety(ctx));
  rc |= report_line(check_df(ctx));
  rc |= report_line(check_live(ctx));

  KmcOptions opts;
  opts.k = k;
  KmcReport kmc = kmc_check(locals, opts);
  std::cout << "  kmc(k=" << k << "): " << (kmc.ok ? "PASS" : "FAIL")
            << " (configs=" << kmc.configs << ")\n";
  if (!kmc.ok) {
    if (kmc.violation) {
      std::cout << "    " << kmc.violation->kind << ": " << kmc.violation->detail
                << "\n";
      print_trace(kmc.violation->trace);
    }
    rc = kFail;
  }
  return rc == kPass ? kPass : kFail;
}

int cmd_verify_file(const std::string& file, int k) {
  auto protocols = fe::parse_protocols(read_file(file));
  if (protocols.empty()) {
    std::cerr << "error: no protocol declarations in " << file << "\n";
    return kUsage;
  }
  int rc = kPass;
  for (const auto& p : protocols) {
    GlobalTypePtr g = fe::lower(p);
    WellFormedReport wf = well_formed(g);
    if (!wf.ok) {
      std::cerr << "protocol " << p.name << ": not well-formed\n";
      for (const auto& e : wf.errors) std::cerr << "  " << e << "\n";
      rc = kFail;
      continue;
    }
    if (verify_locals(p.name, wf.projections, k) != kPass) rc = kFail;
  }
  return rc;
}

int cmd_verify_local(const std::string& dir, int k) {
  std::map<std::string, LocalTypePtr> locals;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".lt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "error: no .lt files in " << dir << "\n";
    return kUsage;
  }
  for (const auto& f : files)
    locals[f.stem().string()] = parse_local_type(read_file(f.string()));
  return verify_locals(fs::path(dir).filename().string(), locals, k);
}

// --- simulate ----------------------------------------------------------

bool contains_kill(const ProcPtr& p) {
  if (!p) return false;
  if (p->kind == Process::Kind::Kill) return true;
  for (const auto& q : p->parts)
    if (contains_kill(q)) return true;
  for (const auto& arm : p->arms)
    if (contains_kill(arm.cont)) return true;
  return contains_kill(p->body) || contains_kill(p->cont) ||
         contains_kill(p->handler);
}

int cmd_simulate(const std::string& file, bool list_graph, size_t max_states,
                 const std::string& fail_at, const std::string& dot_out) {
  ProcPtr p0 = parse_process(read_file(file));

  // Affine prefixes may spontaneously fail (the calculus default); --fail-at
  // narrows the injection to one role.
  ExploreOptions opts;
  opts.max_nodes = max_states;
  if (!fail_at.empty()) {
    FailureInjection inj;
    inj.roles.insert(fail_at);
    opts.step.inject = inj;
  }

  ProcGraph g = explore(p0, opts);
  size_t edge_count = 0;
  for (const auto& e : g.edges) edge_count += e.size();
  std::cout << "nodes: " << g.nodes.size() << "  edges: " << edge_count
            << "  truncated: " << (g.truncated ? "yes" : "no") << "\n";

  if (list_graph) {
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      std::cout << "  [" << i << "] " << to_string(g.nodes[i]) << "\n";
      for (const auto& [rule, to] : g.edges[i])
        std::cout << "      --" << rule << "--> [" << to << "]\n";
    }
  }
  if (!dot_out.empty()) {
    std::ofstream o(dot_out, std::ios::binary);
    if (!o) throw std::ios_base::failure("cannot write " + dot_out);
    o << graph_to_dot(g);
    std::cout << "wrote " << dot_out << "\n";
  }

  // Witness: shortest discovered path to the terminated process.
  int nil_node = -1;
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (is_nil(g.nodes[i])) {
      nil_node = static_cast<int>(i);
      break;
    }
  if (nil_node >= 0) {
    auto trace = g.trace_to(nil_node);
    std::cout << "trace to 0 (" << trace.size() - 1 << " steps):\n";
    print_trace(trace);
  } else {
    std::cout << "trace to 0: unreachable\n";
  }

  if (g.truncated) {
    std::cerr << "state space truncated at " << g.nodes.size()
              << " nodes; cannot certify\n";
    return kFail;
  }

  int rc = kPass;

  // Deadlock-freedom: every terminal node is the terminated process.
  bool df_ok = true;
  for (size_t i = 0; i < g.nodes.size() && df_ok; ++i) {
    if (!g.edges[i].empty() || is_nil(g.nodes[i])) continue;
    df_ok = false;
    std::cout << "deadlock-freedom: FAIL (stuck non-terminated node)\n";
    print_trace(g.trace_to(static_cast<int>(i)));
    rc = kFail;
  }
  if (df_ok) std::cout << "deadlock-freedom: PASS (every terminal is 0)\n";

  // Cancellation termination: every reachable node containing a kill can
  // still reach the terminated process.
  std::vector<std::vector<int>> rev(g.nodes.size());
  for (size_t i = 0; i < g.edges.size(); ++i)
    for (const auto& [rule, to] : g.edges[i]) rev[to].push_back(static_cast<int>(i));
  std::vector<char> reaches(g.nodes.size(), 0);
  std::vector<int> work;
  for (size_t i = 0; i < g.nodes.size(); ++i)
    if (is_nil(g.nodes[i])) {
      reaches[i] = 1;
      work.push_back(static_cast<int>(i));
    }
  while (!work.empty()) {
    int cur = work.back();
    work.pop_back();
    for (int pred : rev[cur])
      if (!reaches[pred]) {
        reaches[pred] = 1;
        work.push_back(pred);
      }
  }
  const std::string scope =
      fail_at.empty() ? "all failures" : "fail-at " + fail_at;
  bool ct_ok = true;
  for (size_t i = 0; i < g.nodes.size() && ct_ok; ++i) {
    if (!contains_kill(g.nodes[i]) || reaches[i]) continue;
    ct_ok = false;
    std::cout << "cancellation-termination (" << scope
              << "): FAIL (kill state cannot reach 0)\n";
    print_trace(g.trace_to(static_cast<int>(i)));
    rc = kFail;
  }
  if (ct_ok)
    std::cout << "cancellation-termination (" << scope
              << "): PASS (every kill state reaches 0)\n";
  return rc;
}

// --- bench -------------------------------------------------------------

int cmd_bench(const std::string& name, int n, int iters, bool with_bare) {
  if (name == "ping-pong" && n != 2) {
    std::cerr << "error: ping-pong is fixed at --n 2\n";
    return kUsage;
  }
  std::vector<bench::BenchResult> rows;
  auto run_one = [&](bool bare) {
    if (name == "ping-pong") {
      rows.push_back(bench::run_ping_pong(iters, bare));
    } else if (name == "ring") {
      rows.push_back(bench::run_ring(n, iters, bare));
    } else {
      rows.push_back(bench::run_mesh(n, iters, bare));
    }
  };
  run_one(false);
  if (with_bare) run_one(true);

  std::cout << bench::csv_header() << "\n";
  for (const auto& r : rows) std::cout << bench::csv_row(r) << "\n";
  for (const auto& r : rows) {
    if (!r.counts_ok()) {
      std::cerr << "message count mismatch (" << r.protocol << "/" << r.name
                << "): observed " << r.messages << ", expected "
                << r.expected_messages << "\n";
      return kFail;
    }
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiparty session types toolkit"};
  app.require_subcommand(1);

  std::string file, role, out_dir, backend = "host", local_dir, fail_at, dot_out;
  std::string bench_name, baseline;
  int k = 1, n = 2, iters = 100;
  std::size_t max_states = 100'000;
  bool list_graph = false;

  auto* check = app.add_subcommand("check", "parse, lower, and check well-formedness");
  check->add_option("file", file, "protocol file (.mpst)")->required();

  auto* project_cmd = app.add_subcommand("project", "project onto one role");
  project_cmd->add_option("file", file, "protocol file (.mpst)")->required();
  project_cmd->add_option("--role", role, "role to project onto")->required();

  auto* codegen = app.add_subcommand("codegen", "generate per-role bindings");
  codegen->add_option("file", file, "protocol file (.mpst)")->required();
  codegen->add_option("--out", out_dir, "output directory")->required();
  codegen->add_option("--backend", backend, "host | neutral")
      ->check(CLI::IsMember({"host", "neutral"}));

  auto* verify = app.add_subcommand("verify", "safety, deadlock-freedom, liveness, k-MC");
  verify->add_option("file", file, "protocol file (.mpst)");
  verify->add_option("--local", local_dir, "directory of per-role .lt files");
  verify->add_option("-k", k, "per-pair FIFO bound")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "explore a process term (.amp)");
  simulate->add_option("file", file, "process file (.amp)")->required();
  simulate->add_flag("--explore", list_graph, "list the full reduction graph");
  simulate->add_option("--max-states", max_states, "exploration node cap");
  simulate->add_option("--fail-at", fail_at, "inject failures at this role only");
  simulate->add_option("--dot", dot_out, "write the graph in DOT format");

  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark protocol");
  bench_cmd->add_option("name", bench_name, "ping-pong | ring | mesh")
      ->required()
      ->check(CLI::IsMember({"ping-pong", "ring", "mesh"}));
  bench_cmd->add_option("--n", n, "number of roles")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iters", iters, "iterations (ring: rounds)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--baseline", baseline, "also run the bare baseline")
      ->check(CLI::IsMember({"bare"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (check->parsed()) return cmd_check(file);
    if (project_cmd->parsed()) return cmd_project(file, role);
    if (codegen->parsed()) return cmd_codegen(file, out_dir, backend);
    if (verify->parsed()) {
      if (file.empty() == local_dir.empty()) {
        std::cerr << "error: verify needs exactly one of <file> or --local <dir>\n";
        return kUsage;
      }
      return file.empty() ? cmd_verify_local(local_dir, k)
                          : cmd_verify_file(file, k);
    }
    if (simulate->parsed())
      return cmd_simulate(file, list_graph, max_states, fail_at, dot_out);
    if (bench_cmd->parsed())
      return cmd_bench(bench_name, n, iters, baseline == "bare");
  } catch (const fe::FrontendError& e) {
    std::cerr << "error at " << e.line << ":" << e.col << ": " << e.what()
              << "\n";
    // Duplicate labels are a protocol defect, not a surface-syntax problem.
    return e.code == fe::ErrCode::DuplicateLabel ? kFail : kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error at " << e.line << ":" << e.col << ": " << e.what()
              << "\n";
    return kUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
