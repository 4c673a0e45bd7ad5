#include "mpst/codegen.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "mpst/algebra.hpp"
#include "mpst/cfsm.hpp"

namespace mpst {

namespace {

std::string identifier(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
               ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
               : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])))
    out = "p" + out;
  return out;
}

std::string escape_literal(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\' || c == '"') out += '\\';
    out += c;
  }
  return out;
}

std::string pad_left(const std::string& s, size_t w) {
  return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
}

// Aligned pair-index table; `prefix` starts every line (comment marker etc.).
std::string render_matrix(const std::vector<std::string>& roles,
                          const std::vector<std::vector<std::int64_t>>& m,
                          const std::string& prefix) {
  size_t w = 1;
  for (const auto& r : roles) w = std::max(w, r.size());
  for (const auto& row : m)
    for (auto v : row) w = std::max(w, std::to_string(v).size());
  std::ostringstream os;
  os << prefix << pad_left("", w);
  for (const auto& r : roles) os << "  " << pad_left(r, w);
  os << "\n";
  for (size_t i = 0; i < roles.size(); ++i) {
    os << prefix << pad_left(roles[i], w);
    for (size_t j = 0; j < roles.size(); ++j)
      os << "  " << pad_left(i == j ? "." : std::to_string(m[i][j]), w);
    os << "\n";
  }
  return os.str();
}

struct StateInfo {
  enum class Kind { Close, Send, Recv, Choose, Offer } kind;
  std::string peer;
  const std::vector<CfsmTransition>* arms = nullptr;
};

StateInfo classify(const Cfsm& m, int s) {
  const auto& out = m.out[s];
  if (out.empty()) return {StateInfo::Kind::Close, "", &out};
  for (const auto& t : out)
    if (t.peer != out[0].peer || t.send != out[0].send)
      throw CodegenError("state " + std::to_string(s) + " of " + m.role +
                         " mixes directions");
  StateInfo info;
  info.peer = out[0].peer;
  info.arms = &out;
  if (out[0].send)
    info.kind = out.size() == 1 ? StateInfo::Kind::Send : StateInfo::Kind::Choose;
  else
    info.kind = out.size() == 1 ? StateInfo::Kind::Recv : StateInfo::Kind::Offer;
  return info;
}

std::string choice_decl(const std::string& role, const Cfsm& m, int s) {
  std::ostringstream os;
  os << "Choice" << role << "_" << s << " =";
  bool first = true;
  for (const auto& t : m.out[s]) {
    os << (first ? " " : " | ") << t.label;
    if (t.payload.is_session() || t.payload.sort != Sort::Unit)
      os << "(" << payload_to_string(t.payload) << ")";
    os << " -> " << role << "_" << t.to;
    first = false;
  }
  return os.str();
}

// --- host backend helpers ---------------------------------------------------

std::string cpp_type(const Payload& p, const std::string& where) {
  if (p.is_session())
    throw CodegenError("host backend cannot delegate sessions (" + where + ")");
  switch (p.sort) {
    case Sort::Int: return "std::int64_t";
    case Sort::Str: return "std::string";
    case Sort::Bool: return "bool";
    case Sort::Unit: return "";
  }
  return "";
}

std::string pack_expr(const Payload& p) {
  switch (p.sort) {
    case Sort::Int: return "mpst::Value::of_int(v)";
    case Sort::Str: return "mpst::Value::of_str(std::move(v))";
    case Sort::Bool: return "mpst::Value::of_bool(v)";
    case Sort::Unit: return "mpst::Value::unit()";
  }
  return "mpst::Value::unit()";
}

std::string unpack_expr(const Payload& p, const std::string& v) {
  switch (p.sort) {
    case Sort::Int: return v + ".as_int()";
    case Sort::Str: return v + ".as_str()";
    case Sort::Bool: return v + ".as_bool()";
    case Sort::Unit: return "";
  }
  return "";
}

struct RoleMachine {
  std::string role;
  Cfsm cfsm;
  LocalTypePtr local;
};

std::string host_header(const std::string& proto_ns,
                        const GeneratedBundle& bundle,
                        const std::vector<RoleMachine>& machines) {
  std::ostringstream os;
  os << "// Generated bindings for protocol " << bundle.protocol << ".\n"
     << "// Regeneration from the same protocol is byte-identical; do not edit.\n"
     << "#pragma once\n\n"
     << "#include <cstdint>\n#include <map>\n#include <memory>\n"
     << "#include <string>\n#include <utility>\n#include <variant>\n\n"
     << "#include \"mpst/runtime.hpp\"\n\n"
     << "namespace " << proto_ns << " {\n\n";

  os << "// Role name tags.\n";
  for (const auto& r : bundle.roles)
    os << "struct Name" << r << " { static constexpr const char* role = \"" << r
       << "\"; };\n";
  os << "\n// Channel pair matrix (positive: this row holds the left end).\n"
     << render_matrix(bundle.roles, bundle.matrix, "//   ");
  os << "\ninline constexpr std::int64_t kMatrix[" << bundle.roles.size() << "]["
     << bundle.roles.size() << "] = {\n";
  for (const auto& row : bundle.matrix) {
    os << "    {";
    for (size_t j = 0; j < row.size(); ++j)
      os << (j ? ", " : "") << row[j];
    os << "},\n";
  }
  os << "};\n\n";

  os << "// Local types and interaction stacks.\n";
  for (const auto& rb : bundle.per_role) {
    os << "inline constexpr const char* Local" << rb.role << " = \""
       << escape_literal(rb.local_type) << "\";\n";
    os << "inline constexpr const char* Stack" << rb.role << " = \""
       << escape_literal(rb.stack) << "\";\n";
  }

  // Forward declarations: every state, every choice alternative.
  os << "\n// Per-state handles (deterministic numbering per role).\n";
  for (const auto& rm : machines)
    for (int s = 0; s < rm.cfsm.num_states(); ++s)
      os << "struct " << rm.role << "_" << s << ";\n";
  for (const auto& rm : machines)
    for (int s = 0; s < rm.cfsm.num_states(); ++s)
      if (classify(rm.cfsm, s).kind == StateInfo::Kind::Offer)
        for (const auto& t : rm.cfsm.out[s])
          os << "struct Choice" << rm.role << "_" << s << "_" << t.label
             << ";\n";
  os << "\n";

  // Variant aliases for received choices.
  for (const auto& rm : machines) {
    bool first_choice = true;
    for (int s = 0; s < rm.cfsm.num_states(); ++s) {
      if (classify(rm.cfsm, s).kind != StateInfo::Kind::Offer) continue;
      os << "using Choice" << rm.role << "_" << s << " = std::variant<";
      const auto& arms = rm.cfsm.out[s];
      for (size_t i = 0; i < arms.size(); ++i)
        os << (i ? ", " : "") << "Choice" << rm.role << "_" << s << "_"
           << arms[i].label;
      os << ">;\n";
      if (first_choice) {
        os << "using Choice" << rm.role << " = Choice" << rm.role << "_" << s
           << ";\n";
        first_choice = false;
      }
    }
  }
  os << "\n";

  // State definitions (methods declared, defined below).
  for (const auto& rm : machines) {
    for (int s = 0; s < rm.cfsm.num_states(); ++s) {
      StateInfo info = classify(rm.cfsm, s);
      std::string self = rm.role + "_" + std::to_string(s);
      os << "struct " << self << " {\n  mpst::MeshedChannel chan;\n";
      switch (info.kind) {
        case StateInfo::Kind::Close:
          os << "  void close() &&;\n";
          break;
        case StateInfo::Kind::Send: {
          const auto& t = (*info.arms)[0];
          std::string ty = cpp_type(t.payload, rm.role + " send " + t.label);
          os << "  " << rm.role << "_" << t.to << " send_" << t.label << "("
             << ty << (ty.empty() ? "" : " v") << ") &&;\n";
          break;
        }
        case StateInfo::Kind::Recv: {
          const auto& t = (*info.arms)[0];
          std::string ty = cpp_type(t.payload, rm.role + " recv " + t.label);
          if (ty.empty())
            os << "  " << rm.role << "_" << t.to << " recv_" << t.label
               << "() &&;\n";
          else
            os << "  std::pair<" << ty << ", " << rm.role << "_" << t.to
               << "> recv_" << t.label << "() &&;\n";
          break;
        }
        case StateInfo::Kind::Choose:
          for (const auto& t : *info.arms) {
            std::string ty =
                cpp_type(t.payload, rm.role + " choose " + t.label);
            os << "  " << rm.role << "_" << t.to << " choose_" << t.label
               << "(" << ty << (ty.empty() ? "" : " v") << ") &&;\n";
          }
          break;
        case StateInfo::Kind::Offer:
          os << "  Choice" << rm.role << "_" << s << " offer() &&;\n";
          break;
      }
      os << "  void cancel() &&;\n};\n";
    }
  }
  os << "\n";

  // Choice alternative payload/next carriers.
  for (const auto& rm : machines)
    for (int s = 0; s < rm.cfsm.num_states(); ++s) {
      if (classify(rm.cfsm, s).kind != StateInfo::Kind::Offer) continue;
      for (const auto& t : rm.cfsm.out[s]) {
        std::string ty = cpp_type(t.payload, rm.role + " offer " + t.label);
        os << "struct Choice" << rm.role << "_" << s << "_" << t.label
           << " {\n";
        if (!ty.empty()) os << "  " << ty << " value;\n";
        os << "  " << rm.role << "_" << t.to << " next;\n};\n";
      }
    }
  os << "\n";

  // Method bodies.
  for (const auto& rm : machines) {
    for (int s = 0; s < rm.cfsm.num_states(); ++s) {
      StateInfo info = classify(rm.cfsm, s);
      std::string self = rm.role + "_" + std::to_string(s);
      switch (info.kind) {
        case StateInfo::Kind::Close:
          os << "inline void " << self
             << "::close() && { std::move(chan).close(); }\n";
          break;
        case StateInfo::Kind::Send: {
          const auto& t = (*info.arms)[0];
          std::string ty = cpp_type(t.payload, "");
          std::string next = rm.role + "_" + std::to_string(t.to);
          os << "inline " << next << " " << self << "::send_" << t.label << "("
             << ty << (ty.empty() ? "" : " v") << ") && { return " << next
             << "{std::move(chan).send(" << pack_expr(t.payload) << ")}; }\n";
          break;
        }
        case StateInfo::Kind::Recv: {
          const auto& t = (*info.arms)[0];
          std::string ty = cpp_type(t.payload, "");
          std::string next = rm.role + "_" + std::to_string(t.to);
          if (ty.empty())
            os << "inline " << next << " " << self << "::recv_" << t.label
               << "() && { auto r = std::move(chan).recv(); return " << next
               << "{std::move(r.chan)}; }\n";
          else
            os << "inline std::pair<" << ty << ", " << next << "> " << self
               << "::recv_" << t.label
               << "() && { auto r = std::move(chan).recv(); return {"
               << unpack_expr(t.payload, "r.value") << ", " << next
               << "{std::move(r.chan)}}; }\n";
          break;
        }
        case StateInfo::Kind::Choose:
          for (const auto& t : *info.arms) {
            std::string ty = cpp_type(t.payload, "");
            std::string next = rm.role + "_" + std::to_string(t.to);
            os << "inline " << next << " " << self << "::choose_" << t.label
               << "(" << ty << (ty.empty() ? "" : " v")
               << ") && { return " << next << "{std::move(chan).choose(\""
               << t.label << "\", " << pack_expr(t.payload) << ")}; }\n";
          }
          break;
        case StateInfo::Kind::Offer: {
          os << "inline Choice" << rm.role << "_" << s << " " << self
             << "::offer() && {\n  auto o = std::move(chan).offer();\n";
          const auto& arms = *info.arms;
          for (size_t i = 0; i < arms.size(); ++i) {
            const auto& t = arms[i];
            std::string alt = "Choice" + rm.role + "_" + std::to_string(s) +
                              "_" + t.label;
            std::string next = rm.role + "_" + std::to_string(t.to);
            std::string make = alt + "{";
            std::string value = unpack_expr(t.payload, "o.value");
            if (!value.empty()) make += value + ", ";
            make += next + "{std::move(o.chan)}}";
            if (i + 1 < arms.size())
              os << "  if (o.label == \"" << t.label << "\") return " << make
                 << ";\n";
            else
              os << "  return " << make << ";\n";
          }
          os << "}\n";
          break;
        }
      }
      os << "inline void " << self
         << "::cancel() && { std::move(chan).cancel(); }\n";
    }
  }

  // Session entry point.
  os << "\nstruct Endpoints {\n";
  for (const auto& r : bundle.roles) os << "  " << r << "_0 " << r << ";\n";
  os << "  std::shared_ptr<mpst::SessionStats> stats;\n};\n\n"
     << "inline Endpoints connect(const mpst::SessionConfig& config = {}) {\n"
     << "  std::map<std::string, mpst::LocalTypePtr> locals;\n";
  for (const auto& r : bundle.roles)
    os << "  locals[\"" << r << "\"] = mpst::parse_local_type(Local" << r
       << ");\n";
  os << "  auto session = mpst::new_session(locals, config);\n"
     << "  return Endpoints{\n";
  for (const auto& r : bundle.roles)
    os << "      " << r << "_0{std::move(session.channels.at(\"" << r
       << "\"))},\n";
  os << "      session.stats};\n}\n\n"
     << "}  // namespace " << proto_ns << "\n";
  return os.str();
}

std::string neutral_text(const GeneratedBundle& bundle) {
  std::ostringstream os;
  os << "protocol " << bundle.protocol << "\n";
  os << "roles:";
  for (size_t i = 0; i < bundle.roles.size(); ++i)
    os << (i ? ", " : " ") << bundle.roles[i];
  os << "\npairs: " << bundle.roles.size() * (bundle.roles.size() - 1) / 2
     << "\n\nchannel matrix\n"
     << render_matrix(bundle.roles, bundle.matrix, "  ");
  for (const auto& rb : bundle.per_role) {
    os << "\nrole " << rb.role << "\n"
       << "  local: " << rb.local_type << "\n"
       << "  stack: " << rb.stack << "\n";
    for (const auto& [peer, view] : rb.views)
      os << "  view " << peer << ": " << view << "\n";
    for (const auto& c : rb.choices) os << "  choice " << c << "\n";
  }
  return os.str();
}

}  // namespace

GeneratedBundle generate(const std::string& protocol_name,
                         const std::vector<std::string>& roles,
                         const GlobalTypePtr& g, Backend backend) {
  if (!g) throw CodegenError("null global type");
  std::set<std::string> role_set(roles.begin(), roles.end());
  for (const auto& r : roles_of(g)) role_set.insert(r);
  if (role_set.empty()) throw CodegenError("protocol has no roles");

  GeneratedBundle bundle;
  bundle.protocol = protocol_name;
  bundle.roles.assign(role_set.begin(), role_set.end());
  bundle.matrix = channel_matrix(bundle.roles);

  std::vector<RoleMachine> machines;
  for (const auto& r : bundle.roles) {
    RoleMachine rm;
    rm.role = r;
    rm.local = project(g, r);
    rm.cfsm = to_cfsm(rm.local, r);

    RoleBundle rb;
    rb.role = r;
    rb.local_type = to_string(rm.local);
    rb.stack = stack_to_string(stack_of(rm.local));
    for (const auto& [peer, view] : to_binary_views(rm.local))
      rb.views[peer] = to_string(view);
    for (int s = 0; s < rm.cfsm.num_states(); ++s)
      if (classify(rm.cfsm, s).kind == StateInfo::Kind::Offer)
        rb.choices.push_back(choice_decl(r, rm.cfsm, s));
    bundle.per_role.push_back(std::move(rb));
    machines.push_back(std::move(rm));
  }

  std::string base = identifier(protocol_name);
  if (backend == Backend::Neutral) {
    bundle.files[base + ".txt"] = neutral_text(bundle);
  } else {
    bundle.files[base + ".hpp"] = host_header(base, bundle, machines);
  }
  return bundle;
}

}  // namespace mpst
