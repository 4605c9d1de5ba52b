#include "seedforge/target.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "json.hpp"

#include "seedforge/subprocess.hpp"
#include "seedforge/util.hpp"

namespace seedforge {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& path) {
  if (path.empty()) return {};
  std::filesystem::path p(path);
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

TargetSpec TargetSpec::from_file(const std::filesystem::path& spec_file) {
  return from_json(read_file(spec_file), spec_file.parent_path());
}

TargetSpec TargetSpec::from_json(std::string_view json_text,
                                 const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("target spec is not valid JSON: ") + e.what());
  }

  TargetSpec spec;
  const std::string kind = doc.value("kind", "synthetic");
  if (kind == "synthetic") {
    spec.kind = TargetKind::kSynthetic;
  } else if (kind == "toolchain") {
    spec.kind = TargetKind::kToolchain;
  } else {
    throw ConfigError("target spec: unknown kind '" + kind + "'");
  }
  spec.entry = doc.value("entry", std::string("LLVMFuzzerTestOneInput"));

  if (spec.kind == TargetKind::kSynthetic) {
    if (doc.contains("program")) {
      spec.program_json = doc["program"].dump();
    } else if (doc.contains("program_file")) {
      spec.program_json = read_file(resolve(base_dir, doc["program_file"].get<std::string>()));
    } else {
      throw ConfigError("synthetic target spec requires 'program' or 'program_file'");
    }
  } else {
    spec.source_root = resolve(base_dir, doc.value("source_root", std::string()));
    spec.build_cmd = doc.value("build_cmd", std::string());
    spec.binary = resolve(base_dir, doc.value("binary", std::string()));
    spec.harness_file = resolve(base_dir, doc.value("harness_file", std::string()));
    if (doc.contains("tools")) {
      const auto& tools = doc["tools"];
      spec.tools.clang = tools.value("clang", spec.tools.clang);
      spec.tools.llvm_profdata = tools.value("llvm_profdata", spec.tools.llvm_profdata);
      spec.tools.llvm_cov = tools.value("llvm_cov", spec.tools.llvm_cov);
    }
    if (doc.contains("seed_run_timeout_ms")) {
      spec.seed_run_timeout = std::chrono::milliseconds(doc["seed_run_timeout_ms"].get<int>());
    }
    if (spec.binary.empty()) {
      throw ConfigError("toolchain target spec requires 'binary'");
    }
  }
  return spec;
}

namespace {

std::string newest_mtime_fingerprint(const std::filesystem::path& root) {
  std::filesystem::file_time_type newest{};
  std::uint64_t file_count = 0;
  std::error_code ec;
  for (auto it = std::filesystem::recursive_directory_iterator(root, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    file_count += 1;
    const auto mtime = it->last_write_time(ec);
    if (!ec && mtime > newest) newest = mtime;
  }
  std::ostringstream os;
  os << file_count << ":" << newest.time_since_epoch().count();
  return os.str();
}

}  // namespace

BuiltTarget build(const TargetSpec& spec) {
  BuiltTarget target;
  target.spec_ = spec;

  if (spec.kind == TargetKind::kSynthetic) {
    target.synthetic_ = std::make_unique<SyntheticProgram>(SyntheticProgram::parse(spec.program_json));
    if (!target.synthetic_->functions().count(spec.entry)) {
      throw BuildFailure("entry '" + spec.entry + "' not defined by the synthetic program");
    }
    return target;
  }

  if (!std::filesystem::exists(spec.source_root)) {
    throw BuildFailure("source root does not exist: " + spec.source_root.string());
  }

  const std::string stamp =
      sha256_hex(spec.build_cmd + "|" + newest_mtime_fingerprint(spec.source_root));
  const auto stamp_file = spec.binary.string() + ".sfstamp";
  if (std::filesystem::exists(spec.binary) && std::filesystem::exists(stamp_file) &&
      read_file(stamp_file) == stamp) {
    target.cached_ = true;
    return target;
  }

  if (spec.build_cmd.empty()) {
    throw BuildFailure("toolchain target has no build_cmd and no cached binary");
  }

  SpawnOptions options;
  options.argv = {"/bin/sh", "-c", spec.build_cmd};
  options.cwd = spec.source_root;
  options.timeout = std::chrono::minutes(10);
  options.max_capture_bytes = 16384;
  const SpawnResult result = run_process(options);
  if (result.timed_out || result.signaled || result.exit_code != 0) {
    throw BuildFailure("build command failed (exit " + std::to_string(result.exit_code) +
                       "):\n" + result.stdout_text + result.stderr_text);
  }
  if (!std::filesystem::exists(spec.binary)) {
    throw BuildFailure("build command did not produce binary: " + spec.binary.string());
  }
  const std::string binary_bytes = read_file(spec.binary);
  if (binary_bytes.find(spec.entry) == std::string::npos) {
    throw BuildFailure("entry '" + spec.entry + "' not resolvable in built artifact");
  }
  write_file(stamp_file, stamp);
  return target;
}

std::string BuiltTarget::harness_source() const {
  if (spec_.kind == TargetKind::kSynthetic) {
    return synthetic_->render_source(spec_.entry);
  }
  if (!spec_.harness_file.empty() && std::filesystem::exists(spec_.harness_file)) {
    return read_file(spec_.harness_file);
  }
  return {};
}

std::string BuiltTarget::entry_function_id(const CoverageReport& report) const {
  if (report.contains(spec_.entry)) return spec_.entry;
  for (const auto& [id, fc] : report.functions()) {
    if (id.rfind(spec_.entry + "@", 0) == 0) return id;
  }
  return {};
}

namespace {

CoverageReport run_toolchain_corpus(const TargetSpec& spec,
                                    const std::vector<std::filesystem::path>& seeds,
                                    const std::filesystem::path& crashes_dir,
                                    std::vector<std::string>& crashing_seeds) {
  const auto prof_dir =
      std::filesystem::temp_directory_path() / ("seedforge_prof_" + std::to_string(getpid()));
  std::filesystem::remove_all(prof_dir);
  std::filesystem::create_directories(prof_dir);
  std::filesystem::create_directories(crashes_dir);

  std::vector<std::string> profraws;
  int ordinal = 0;
  for (const auto& seed : seeds) {
    const auto profraw = prof_dir / (std::to_string(ordinal++) + ".profraw");
    SpawnOptions options;
    options.argv = {spec.binary.string(), seed.string()};
    options.cwd = prof_dir;
    options.timeout = spec.seed_run_timeout;
    options.extra_env.emplace_back("LLVM_PROFILE_FILE", profraw.string());
    const SpawnResult result = run_process(options);
    if (result.timed_out || result.signaled || result.exit_code != 0) {
      // Crashing seeds are first-class outputs: retained and flagged.
      crashing_seeds.push_back(seed.filename().string());
      std::error_code ec;
      std::filesystem::copy_file(seed, crashes_dir / seed.filename(),
                                 std::filesystem::copy_options::overwrite_existing, ec);
    }
    if (std::filesystem::exists(profraw)) {
      profraws.push_back(profraw.string());
    }
  }

  CoverageReport report;
  if (!profraws.empty()) {
    const auto merged = prof_dir / "merged.profdata";
    SpawnOptions merge_opts;
    merge_opts.argv = {spec.tools.llvm_profdata, "merge", "-sparse", "-o", merged.string()};
    merge_opts.argv.insert(merge_opts.argv.end(), profraws.begin(), profraws.end());
    merge_opts.timeout = std::chrono::minutes(5);
    const SpawnResult merge_result = run_process(merge_opts);
    if (merge_result.exit_code != 0) {
      std::filesystem::remove_all(prof_dir);
      throw Error("llvm-profdata merge failed: " + merge_result.stderr_text);
    }

    SpawnOptions export_opts;
    export_opts.argv = {spec.tools.llvm_cov, "export", spec.binary.string(),
                        "-instr-profile=" + merged.string()};
    export_opts.timeout = std::chrono::minutes(5);
    export_opts.max_capture_bytes = 256 * 1024 * 1024;
    const SpawnResult export_result = run_process(export_opts);
    if (export_result.exit_code != 0) {
      std::filesystem::remove_all(prof_dir);
      throw Error("llvm-cov export failed: " + export_result.stderr_text);
    }
    report = ingest_coverage_export(export_result.stdout_text, spec.source_root);
    approximate_call_edges(report);
  }
  report.set_seed_count(seeds.size());
  std::filesystem::remove_all(prof_dir);
  return report;
}

}  // namespace

CoverageReport BuiltTarget::run_seed_files(const std::vector<std::filesystem::path>& seeds,
                                           const std::filesystem::path& crashes_dir) {
  if (seeds.empty()) {
    throw std::invalid_argument("run_corpus requires a non-empty corpus");
  }
  if (spec_.kind == TargetKind::kSynthetic) {
    std::vector<std::string> inputs;
    inputs.reserve(seeds.size());
    for (const auto& seed : seeds) inputs.push_back(read_file(seed));
    return synthetic_->run_inputs(inputs);
  }
  return run_toolchain_corpus(spec_, seeds, crashes_dir, crashing_seeds_);
}

CoverageReport run_corpus(BuiltTarget& target, const SeedCorpus& corpus,
                          const std::filesystem::path& crashes_dir) {
  return target.run_seed_files(corpus.files(), crashes_dir);
}

namespace {

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw MalformedExport("malformed coverage export at " + where + ": " + what);
}

CoverageReport ingest_interchange(const nlohmann::json& doc) {
  CoverageReport report;
  if (!doc["functions"].is_array()) malformed("$.functions", "expected an array");
  for (std::size_t i = 0; i < doc["functions"].size(); ++i) {
    const auto& fn = doc["functions"][i];
    const std::string where = "$.functions[" + std::to_string(i) + "]";
    if (!fn.is_object() || !fn.contains("id")) malformed(where, "expected object with 'id'");
    FunctionCoverage fc;
    fc.function_id = fn["id"].get<std::string>();
    fc.executed = fn.value("executed", false);
    fc.source_text = fn.value("source", std::string());
    for (const auto& branch : fn.value("branches", nlohmann::json::array())) {
      if (!branch.is_object() || !branch.contains("id") || !branch.contains("covered")) {
        malformed(where + ".branches", "expected objects with 'id' and 'covered'");
      }
      fc.branches.push_back({branch["id"].get<std::string>(), branch["covered"].get<bool>()});
    }
    try {
      report.add_function(std::move(fc));
    } catch (const std::invalid_argument& e) {
      malformed(where, e.what());
    }
  }
  for (const auto& edge : doc.value("edges", nlohmann::json::array())) {
    if (!edge.is_array() || edge.size() != 2) malformed("$.edges", "expected [caller, callee]");
    try {
      report.add_call_edge(edge[0].get<std::string>(), edge[1].get<std::string>());
    } catch (const std::invalid_argument& e) {
      malformed("$.edges", e.what());
    }
  }
  report.set_seed_count(doc.value("seed_count", 0));
  return report;
}

/// Lines [first, last] of `file`, 1-based inclusive; empty on any failure
/// (SymbolizationFailure degrades to no snippet).
std::string read_line_range(const std::filesystem::path& file, long first, long last,
                            std::map<std::string, std::vector<std::string>>& cache) {
  auto it = cache.find(file.string());
  if (it == cache.end()) {
    std::vector<std::string> lines;
    try {
      std::istringstream in(read_file(file));
      std::string line;
      while (std::getline(in, line)) lines.push_back(line);
    } catch (const std::exception&) {
      // leave empty
    }
    it = cache.emplace(file.string(), std::move(lines)).first;
  }
  const auto& lines = it->second;
  if (first < 1 || lines.empty() || static_cast<std::size_t>(first) > lines.size()) return {};
  std::ostringstream os;
  const auto end = std::min<std::size_t>(static_cast<std::size_t>(last), lines.size());
  for (std::size_t i = static_cast<std::size_t>(first); i <= end; ++i) {
    os << lines[i - 1] << "\n";
  }
  return os.str();
}

CoverageReport ingest_llvm_export(const nlohmann::json& doc,
                                  const std::filesystem::path& source_base) {
  if (!doc.contains("data") || !doc["data"].is_array() || doc["data"].empty()) {
    malformed("$.data", "expected a non-empty array");
  }
  CoverageReport report;
  std::map<std::string, std::vector<std::string>> line_cache;

  const auto& data = doc["data"][0];
  if (!data.contains("functions") || !data["functions"].is_array()) {
    malformed("$.data[0].functions", "expected an array");
  }
  for (std::size_t i = 0; i < data["functions"].size(); ++i) {
    const auto& fn = data["functions"][i];
    const std::string where = "$.data[0].functions[" + std::to_string(i) + "]";
    if (!fn.contains("name") || !fn.contains("count")) {
      malformed(where, "expected 'name' and 'count'");
    }
    FunctionCoverage fc;
    const std::string name = fn["name"].get<std::string>();
    std::string file;
    if (fn.contains("filenames") && fn["filenames"].is_array() && !fn["filenames"].empty()) {
      file = fn["filenames"][0].get<std::string>();
    }
    fc.function_id = file.empty() ? name : name + "@" + file;
    fc.executed = fn["count"].get<std::uint64_t>() > 0;

    int site = 0;
    for (const auto& branch : fn.value("branches", nlohmann::json::array())) {
      if (!branch.is_array() || branch.size() < 6) {
        malformed(where + ".branches", "expected arrays of at least 6 counters");
      }
      const auto true_count = branch[4].get<std::uint64_t>();
      const auto false_count = branch[5].get<std::uint64_t>();
      fc.branches.push_back({"b" + std::to_string(site) + "T", fc.executed && true_count > 0});
      fc.branches.push_back({"b" + std::to_string(site) + "F", fc.executed && false_count > 0});
      site += 1;
    }

    if (!file.empty() && fn.contains("regions") && fn["regions"].is_array() &&
        !fn["regions"].empty() && fn["regions"][0].is_array() && fn["regions"][0].size() >= 4) {
      const long first = fn["regions"][0][0].get<long>();
      const long last = fn["regions"][0][2].get<long>();
      std::filesystem::path path(file);
      if (path.is_relative() && !source_base.empty()) path = source_base / path;
      fc.source_text = read_line_range(path, first, last, line_cache);
    }

    try {
      report.add_function(std::move(fc));
    } catch (const std::invalid_argument& e) {
      malformed(where, e.what());
    }
  }
  return report;
}

}  // namespace

CoverageReport ingest_coverage_export(std::string_view raw,
                                      const std::filesystem::path& source_base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedExport(std::string("coverage export is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw MalformedExport("coverage export must be a JSON object");
  }
  if (doc.value("type", "") == "llvm.coverage.json.export") {
    return ingest_llvm_export(doc, source_base);
  }
  if (doc.contains("functions")) {
    return ingest_interchange(doc);
  }
  throw MalformedExport(
      "unrecognized coverage export: expected the interchange schema or an llvm-cov JSON export");
}

std::string serialize_report(const CoverageReport& report) {
  nlohmann::json functions = nlohmann::json::array();
  for (const auto& [id, fc] : report.functions()) {
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& branch : fc.branches) {
      branches.push_back({{"id", branch.branch_id}, {"covered", branch.covered}});
    }
    const auto at = id.find('@');
    nlohmann::json fn{{"id", id},
                      {"file", at == std::string::npos ? "" : id.substr(at + 1)},
                      {"executed", fc.executed},
                      {"branches", std::move(branches)}};
    if (!fc.source_text.empty()) fn["source"] = fc.source_text;
    functions.push_back(std::move(fn));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [caller, callee] : report.call_edges()) {
    edges.push_back({caller, callee});
  }
  nlohmann::json doc{{"functions", std::move(functions)},
                     {"edges", std::move(edges)},
                     {"seed_count", report.seed_count()}};
  return doc.dump(2) + "\n";
}

namespace {

std::string name_part(const std::string& function_id) {
  const auto at = function_id.find('@');
  return at == std::string::npos ? function_id : function_id.substr(0, at);
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool contains_call(const std::string& source, const std::string& name) {
  std::size_t pos = 0;
  while ((pos = source.find(name, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_ident_char(source[pos - 1]);
    std::size_t after = pos + name.size();
    if (left_ok && (after >= source.size() || !is_ident_char(source[after]))) {
      while (after < source.size() &&
             std::isspace(static_cast<unsigned char>(source[after]))) {
        ++after;
      }
      if (after < source.size() && source[after] == '(') return true;
    }
    pos += name.size();
  }
  return false;
}

}  // namespace

std::string extract_function_snippet(std::string_view source, std::string_view function_name) {
  std::size_t pos = 0;
  while ((pos = source.find(function_name, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_ident_char(source[pos - 1]);
    std::size_t after = pos + function_name.size();
    while (after < source.size() && std::isspace(static_cast<unsigned char>(source[after]))) {
      ++after;
    }
    if (!left_ok || after >= source.size() || source[after] != '(') {
      pos += function_name.size();
      continue;
    }
    const std::size_t open_brace = source.find('{', after);
    if (open_brace == std::string_view::npos) return {};
    int depth = 0;
    for (std::size_t i = open_brace; i < source.size(); ++i) {
      if (source[i] == '{') depth += 1;
      if (source[i] == '}') {
        depth -= 1;
        if (depth == 0) {
          const std::size_t line_start = source.rfind('\n', pos);
          const std::size_t begin = line_start == std::string_view::npos ? 0 : line_start + 1;
          return std::string(source.substr(begin, i + 1 - begin));
        }
      }
    }
    return {};
  }
  return {};
}

void approximate_call_edges(CoverageReport& report) {
  std::map<std::string, std::string> name_to_id;
  for (const auto& [id, fc] : report.functions()) {
    name_to_id.emplace(name_part(id), id);
  }
  std::vector<CallEdge> edges;
  for (const auto& [caller_id, fc] : report.functions()) {
    if (!fc.executed || fc.source_text.empty()) continue;
    for (const auto& [name, callee_id] : name_to_id) {
      if (callee_id == caller_id) continue;
      if (contains_call(fc.source_text, name)) {
        edges.emplace_back(caller_id, callee_id);
      }
    }
  }
  for (auto& [caller, callee] : edges) {
    report.add_call_edge(caller, callee);
  }
}

}  // namespace seedforge
