#pragma once
// Experiment specifications and their runner.
//
// A spec is a JSON object:
//   {
//     "name": "ac01_matrix_suite",     optional, defaults to the file stem
//     "kind": "matrix-deriv",          see ExperimentKind
//     "seed": 2024,                    recorded in every output
//     "params": { ... },               kind-specific, documented in README.md
//     "tolerances": { ... },           optional overrides of the check limits
//     "output_dir": "..."              optional
//   }
// Problems are collected per field and reported together as SpecInvalid.
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lyaplab/grid_field.hpp"
#include "lyaplab/report.hpp"

namespace lyaplab {

enum class ExperimentKind { matrix_deriv, conv_regularity, lyap, lyap_deriv, bump_sweep, family_check };

std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

struct ExperimentSpec {
  std::string name;
  ExperimentKind kind = ExperimentKind::matrix_deriv;
  std::uint64_t seed = 0;
  Json params = Json::object();
  Json tolerances = Json::object();
  std::string output_dir;
  std::filesystem::path base_dir;  // relative input paths resolve against this

  // Tolerance override or the default.
  double tolerance(const std::string& key, double fallback) const;
  std::filesystem::path resolve(const std::string& path) const;
};

// `kind_hint` fills a missing "kind" (the CLI subcommand); a conflicting kind is an error.
ExperimentSpec parse_spec(const Json& doc, const std::string& default_name = "",
                          std::optional<ExperimentKind> kind_hint = std::nullopt,
                          const std::filesystem::path& base_dir = {});
ExperimentSpec load_spec(const std::filesystem::path& path, std::optional<ExperimentKind> kind_hint = std::nullopt);

// One numeric acceptance check: `value` compared against `limit`.
struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool at_most = true;  // value ≤ limit, else value ≥ limit
  bool passed() const;
};

// Aggregate of every splitting an experiment computed.
struct Conservation {
  int splittings = 0;
  double sum_residual = 0.0;        // max |λ₁ + λ₂ + λ₃|
  double pair_residual = 0.0;       // max |ω(V) − 1|
  double invariance_residual = 0.0;
  double orthonormality_residual = 0.0;
};

struct ExperimentResult {
  Json results = Json::object();
  std::vector<Check> checks;
  std::map<std::string, CsvTable> tables;  // suffix → table, written as <name>_<suffix>.csv
  std::map<std::string, GridField> grids;  // suffix → field, written as <name>_<suffix>.grid
  Conservation conservation;
  std::optional<std::string> error;        // downstream failure with context

  bool passed() const;
  Json report(const ExperimentSpec& spec) const;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Runs the spec and writes <dir>/<name>.json plus its tables. Returns the exit
// status: 0 when every check passes, 1 otherwise. Spec errors propagate.
int run_and_write(const ExperimentSpec& spec, const std::filesystem::path& dir);

// Output directory: the explicit one, else the spec's, else $LYAPLAB_OUT, else "lyaplab_out".
std::filesystem::path output_directory(const ExperimentSpec& spec, const std::string& explicit_dir = "");

// Spec files in a directory, sorted by file name.
std::vector<std::filesystem::path> spec_files(const std::filesystem::path& dir);

}  // namespace lyaplab
