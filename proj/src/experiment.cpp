#include "lyaplab/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <set>

#include "lyaplab/errors.hpp"
#include "spec_reader.hpp"

namespace lyaplab {
namespace {

struct KindEntry {
  ExperimentKind kind;
  std::string_view name;
  void (*validate)(const ExperimentSpec&, detail::Problems&);
  ExperimentResult (*run)(const ExperimentSpec&);
};

constexpr std::array<KindEntry, 6> kKinds{{
    {ExperimentKind::matrix_deriv, "matrix-deriv", detail::validate_matrix, detail::run_matrix},
    {ExperimentKind::conv_regularity, "conv-regularity", detail::validate_regularity, detail::run_regularity},
    {ExperimentKind::lyap, "lyap", detail::validate_lyap, detail::run_lyap},
    {ExperimentKind::lyap_deriv, "lyap-deriv", detail::validate_lyap_deriv, detail::run_lyap_deriv},
    {ExperimentKind::bump_sweep, "bump-sweep", detail::validate_bump, detail::run_bump},
    {ExperimentKind::family_check, "family-check", detail::validate_family, detail::run_family},
}};

const KindEntry& entry(ExperimentKind kind) {
  for (const auto& e : kKinds)
    if (e.kind == kind) return e;
  fail(ErrorCode::InvalidArgument, "unknown experiment kind");
}

const std::set<std::string> kTopLevel{"name", "kind", "seed", "params", "tolerances", "output_dir", "description"};

}  // namespace

std::string_view kind_name(ExperimentKind kind) { return entry(kind).name; }

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (const auto& e : kKinds)
    if (e.name == name) return e.kind;
  return std::nullopt;
}

double ExperimentSpec::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->get<double>();
}

std::filesystem::path ExperimentSpec::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

ExperimentSpec parse_spec(const Json& doc, const std::string& default_name, std::optional<ExperimentKind> kind_hint,
                          const std::filesystem::path& base_dir) {
  detail::Problems problems;
  ExperimentSpec spec;
  spec.base_dir = base_dir;
  if (!doc.is_object()) fail(ErrorCode::SpecInvalid, "spec: expected a JSON object");
  const detail::SpecReader top(&doc, "", problems);

  for (const auto& [key, value] : doc.items())
    if (!kTopLevel.contains(key)) problems.add(key + ": unknown field");

  spec.name = top.text("name", default_name);
  if (spec.name.empty()) problems.add("name: missing");
  else if (spec.name.find_first_of("/\\") != std::string::npos) problems.add("name: must not contain path separators");

  bool kind_ok = false;
  if (top.has("kind")) {
    const auto k = parse_kind(top.text("kind"));
    if (!k) {
      problems.add("kind: unknown experiment kind");
    } else if (kind_hint && *kind_hint != *k) {
      problems.add("kind: spec is " + std::string(kind_name(*k)) + " but the subcommand is " + std::string(kind_name(*kind_hint)));
    } else {
      spec.kind = *k;
      kind_ok = true;
    }
  } else if (kind_hint) {
    spec.kind = *kind_hint;
    kind_ok = true;
  } else {
    problems.add("kind: missing");
  }

  if (const Json* s = top.raw("seed"); !s) {
    problems.add("seed: missing");
  } else if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0)) {
    problems.add("seed: expected a non-negative integer");
  } else {
    spec.seed = s->get<std::uint64_t>();
  }

  if (const Json* p = top.raw("params"); !p) {
    problems.add("params: missing");
  } else if (!p->is_object()) {
    problems.add("params: expected an object");
  } else {
    spec.params = *p;
  }

  if (const Json* t = top.raw("tolerances")) {
    if (!t->is_object()) {
      problems.add("tolerances: expected an object");
    } else {
      for (const auto& [key, value] : t->items())
        if (!value.is_number() || !(value.get<double>() >= 0.0)) problems.add("tolerances." + key + ": expected a non-negative number");
      spec.tolerances = *t;
    }
  }
  spec.output_dir = top.text("output_dir", "");

  if (kind_ok && top.has("params") && top.raw("params")->is_object()) entry(spec.kind).validate(spec, problems);
  problems.throw_if_any("spec '" + (spec.name.empty() ? std::string("<unnamed>") : spec.name) + "'");
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path, std::optional<ExperimentKind> kind_hint) {
  const std::string text = read_text_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::SpecInvalid, path.string() + ": not valid JSON: " + e.what());
  }
  return parse_spec(doc, path.stem().string(), kind_hint, path.parent_path());
}

bool Check::passed() const {
  if (!std::isfinite(value)) return false;
  return at_most ? value <= limit : value >= limit;
}

bool ExperimentResult::passed() const {
  if (error) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

Json ExperimentResult::report(const ExperimentSpec& spec) const {
  Json checks_json = Json::array();
  for (const Check& c : checks)
    checks_json.push_back(Json{{"name", c.name},
                               {"value", c.value},
                               {"limit", c.limit},
                               {"relation", c.at_most ? "<=" : ">="},
                               {"passed", c.passed()}});
  Json out{{"schema", kReportSchema},
           {"experiment", spec.name},
           {"kind", kind_name(spec.kind)},
           {"seed", spec.seed},
           {"params", spec.params},
           {"tolerances", spec.tolerances},
           {"passed", passed()},
           {"checks", checks_json},
           {"results", results}};
  if (conservation.splittings > 0)
    out["conservation"] = Json{{"splittings", conservation.splittings},
                               {"sum_residual", conservation.sum_residual},
                               {"pair_residual", conservation.pair_residual},
                               {"invariance_residual", conservation.invariance_residual},
                               {"orthonormality_residual", conservation.orthonormality_residual}};
  if (error) out["error"] = *error;
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult result = entry(spec.kind).run(spec);
  const Conservation& c = result.conservation;
  if (c.splittings > 0) {
    result.checks.push_back({"conservation.sum_rule", c.sum_residual, spec.tolerance("sum_rule", 1e-8)});
    result.checks.push_back({"conservation.pair", c.pair_residual, spec.tolerance("pair", 1e-10)});
    result.checks.push_back({"conservation.invariance", c.invariance_residual, spec.tolerance("invariance", 1e-8)});
    result.checks.push_back({"conservation.orthonormality", c.orthonormality_residual, spec.tolerance("orthonormality", 1e-12)});
  }
  return result;
}

int run_and_write(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  ExperimentResult result;
  try {
    result = run_experiment(spec);
  } catch (const LabError& e) {
    if (is_spec_error(e.code())) throw;
    result = ExperimentResult{};
    result.error = std::string(kind_name(spec.kind)) + ": " + e.what();
  }
  for (const auto& [suffix, table] : result.tables) write_text_file(dir / (spec.name + "_" + suffix + ".csv"), table.str());
  for (const auto& [suffix, grid] : result.grids) {
    std::filesystem::create_directories(dir);
    grid.save((dir / (spec.name + "_" + suffix + ".grid")).string());
  }
  write_text_file(dir / (spec.name + ".json"), dump_json(result.report(spec)));
  return result.passed() ? 0 : 1;
}

std::filesystem::path output_directory(const ExperimentSpec& spec, const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (!spec.output_dir.empty()) return spec.resolve(spec.output_dir);
  if (const char* env = std::getenv("LYAPLAB_OUT"); env && *env) return env;
  return "lyaplab_out";
}

std::vector<std::filesystem::path> spec_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  return out;
}

}  // namespace lyaplab
