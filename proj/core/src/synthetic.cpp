#include "seedforge/synthetic.hpp"

#include <sstream>

#include "json.hpp"

#include "seedforge/error.hpp"

namespace seedforge {

bool BytePredicate::eval(std::string_view input) const {
  if (byte_index >= input.size()) return false;
  const std::uint8_t byte = static_cast<std::uint8_t>(input[byte_index]);
  switch (op) {
    case Op::kEq: return byte == value;
    case Op::kNe: return byte != value;
    case Op::kLt: return byte < value;
    case Op::kLe: return byte <= value;
    case Op::kGt: return byte > value;
    case Op::kGe: return byte >= value;
  }
  return false;
}

std::string BytePredicate::render() const {
  const char* symbol = "==";
  switch (op) {
    case Op::kEq: symbol = "=="; break;
    case Op::kNe: symbol = "!="; break;
    case Op::kLt: symbol = "<"; break;
    case Op::kLe: symbol = "<="; break;
    case Op::kGt: symbol = ">"; break;
    case Op::kGe: symbol = ">="; break;
  }
  std::ostringstream os;
  os << "byte(" << byte_index << ") " << symbol << " " << static_cast<int>(value);
  return os.str();
}

namespace {

BytePredicate::Op parse_op(const std::string& name) {
  if (name == "eq") return BytePredicate::Op::kEq;
  if (name == "ne") return BytePredicate::Op::kNe;
  if (name == "lt") return BytePredicate::Op::kLt;
  if (name == "le") return BytePredicate::Op::kLe;
  if (name == "gt") return BytePredicate::Op::kGt;
  if (name == "ge") return BytePredicate::Op::kGe;
  throw ConfigError("synthetic program: unknown predicate op '" + name + "'");
}

std::vector<SyntheticStatement> parse_body(const nlohmann::json& body, SyntheticFunction& fn);

SyntheticStatement parse_statement(const nlohmann::json& stmt, SyntheticFunction& fn) {
  if (!stmt.is_object()) {
    throw ConfigError("synthetic program: statement must be an object");
  }
  SyntheticStatement out;
  if (stmt.contains("call")) {
    out.call = std::make_unique<SyntheticCall>();
    out.call->callee = stmt.at("call").get<std::string>();
    fn.callees.push_back(out.call->callee);
    return out;
  }
  if (stmt.contains("if")) {
    auto branch = std::make_unique<SyntheticBranch>();
    const auto& pred = stmt.at("if");
    branch->predicate.byte_index = pred.at("byte").get<std::size_t>();
    branch->predicate.op = parse_op(pred.value("op", "eq"));
    const int value = pred.at("value").get<int>();
    if (value < 0 || value > 255) {
      throw ConfigError("synthetic program: predicate value must be a byte (0-255)");
    }
    branch->predicate.value = static_cast<std::uint8_t>(value);
    branch->site = fn.branch_sites++;
    if (stmt.contains("then")) branch->then_body = parse_body(stmt["then"], fn);
    if (stmt.contains("else")) branch->else_body = parse_body(stmt["else"], fn);
    out.branch = std::move(branch);
    return out;
  }
  throw ConfigError("synthetic program: statement must carry 'call' or 'if'");
}

std::vector<SyntheticStatement> parse_body(const nlohmann::json& body, SyntheticFunction& fn) {
  if (!body.is_array()) {
    throw ConfigError("synthetic program: body must be an array of statements");
  }
  std::vector<SyntheticStatement> out;
  out.reserve(body.size());
  for (const auto& stmt : body) {
    out.push_back(parse_statement(stmt, fn));
  }
  return out;
}

void render_body(const std::vector<SyntheticStatement>& body, int indent, std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (const auto& stmt : body) {
    if (stmt.call) {
      os << pad << stmt.call->callee << "(data, size);\n";
    } else if (stmt.branch) {
      os << pad << "if (" << stmt.branch->predicate.render() << ") {\n";
      render_body(stmt.branch->then_body, indent + 1, os);
      if (!stmt.branch->else_body.empty()) {
        os << pad << "} else {\n";
        render_body(stmt.branch->else_body, indent + 1, os);
      }
      os << pad << "}\n";
    }
  }
}

std::string render_function(const SyntheticFunction& fn) {
  std::ostringstream os;
  os << "void " << fn.id << "(const uint8_t *data, size_t size) {\n";
  render_body(fn.body, 1, os);
  os << "}\n";
  return os.str();
}

}  // namespace

SyntheticProgram SyntheticProgram::parse(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic program is not valid JSON: ") + e.what());
  }

  SyntheticProgram program;
  program.entry_ = doc.at("entry").get<std::string>();
  if (!doc.contains("functions") || !doc["functions"].is_array()) {
    throw ConfigError("synthetic program: missing 'functions' array");
  }
  for (const auto& fn_doc : doc["functions"]) {
    SyntheticFunction fn;
    fn.id = fn_doc.at("id").get<std::string>();
    if (program.functions_.count(fn.id)) {
      throw ConfigError("synthetic program: duplicate function id '" + fn.id + "'");
    }
    fn.body = parse_body(fn_doc.value("body", nlohmann::json::array()), fn);
    fn.source_text = render_function(fn);
    program.functions_.emplace(fn.id, std::move(fn));
  }
  if (!program.functions_.count(program.entry_)) {
    throw ConfigError("synthetic program: entry '" + program.entry_ + "' is not defined");
  }
  for (const auto& [id, fn] : program.functions_) {
    for (const auto& callee : fn.callees) {
      if (!program.functions_.count(callee)) {
        throw ConfigError("synthetic program: '" + id + "' calls undefined function '" +
                          callee + "'");
      }
    }
  }
  return program;
}

namespace {

void walk(const SyntheticProgram& program, const std::string& function_id,
          std::string_view input, SyntheticProgram::Observation& observation);

void walk_body(const SyntheticProgram& program, const std::string& function_id,
               const std::vector<SyntheticStatement>& body, std::string_view input,
               SyntheticProgram::Observation& observation) {
  for (const auto& stmt : body) {
    if (stmt.call) {
      walk(program, stmt.call->callee, input, observation);
    } else if (stmt.branch) {
      const bool taken = stmt.branch->predicate.eval(input);
      observation.covered_arms.emplace(function_id, stmt.branch->site, taken);
      walk_body(program, function_id, taken ? stmt.branch->then_body : stmt.branch->else_body,
                input, observation);
    }
  }
}

void walk(const SyntheticProgram& program, const std::string& function_id,
          std::string_view input, SyntheticProgram::Observation& observation) {
  if (!observation.executed.insert(function_id).second) {
    return;  // already executed on this input; nothing new can happen
  }
  const auto& fn = program.functions().at(function_id);
  walk_body(program, function_id, fn.body, input, observation);
}

}  // namespace

SyntheticProgram::Observation SyntheticProgram::execute(std::string_view input) const {
  Observation observation;
  walk(*this, entry_, input, observation);
  return observation;
}

CoverageReport SyntheticProgram::run_inputs(const std::vector<std::string>& inputs) const {
  Observation merged;
  for (const auto& input : inputs) {
    const Observation single = execute(input);
    merged.executed.insert(single.executed.begin(), single.executed.end());
    merged.covered_arms.insert(single.covered_arms.begin(), single.covered_arms.end());
  }

  CoverageReport report;
  for (const auto& [id, fn] : functions_) {
    FunctionCoverage fc;
    fc.function_id = id;
    fc.executed = merged.executed.count(id) > 0;
    fc.source_text = fn.source_text;
    for (int site = 0; site < fn.branch_sites; ++site) {
      fc.branches.push_back(
          {"b" + std::to_string(site) + "T", merged.covered_arms.count({id, site, true}) > 0});
      fc.branches.push_back(
          {"b" + std::to_string(site) + "F", merged.covered_arms.count({id, site, false}) > 0});
    }
    report.add_function(std::move(fc));
  }
  for (const auto& [id, fn] : functions_) {
    if (merged.executed.count(id) == 0) continue;
    for (const auto& callee : fn.callees) {
      report.add_call_edge(id, callee);
    }
  }
  report.set_seed_count(inputs.size());
  return report;
}

std::string SyntheticProgram::render_source(const std::string& function_id) const {
  auto it = functions_.find(function_id);
  if (it == functions_.end()) {
    throw std::invalid_argument("synthetic program has no function '" + function_id + "'");
  }
  return it->second.source_text;
}

}  // namespace seedforge
