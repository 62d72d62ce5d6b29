#pragma once
// Field-level access to spec parameters. Missing or mistyped fields are
// recorded with their full path instead of throwing, so one pass reports all.
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lyaplab/experiment.hpp"
#include "lyaplab/families.hpp"
#include "lyaplab/splitting.hpp"

namespace lyaplab::detail {

class Problems {
 public:
  void add(std::string message) { list_.push_back(std::move(message)); }
  bool empty() const { return list_.empty(); }
  const std::vector<std::string>& list() const { return list_; }
  // Throws SpecInvalid listing every problem.
  void throw_if_any(const std::string& context) const;

 private:
  std::vector<std::string> list_;
};

class SpecReader {
 public:
  SpecReader(const Json* node, std::string path, Problems& problems) : node_(node), path_(std::move(path)), problems_(&problems) {}

  const std::string& path() const { return path_; }
  bool present() const { return node_ != nullptr && !node_->is_null(); }
  bool has(const std::string& key) const;
  const Json* raw(const std::string& key) const;
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void problem(const std::string& key, const std::string& message) const { problems_->add(where(key) + ": " + message); }
  Problems& problems() const { return *problems_; }

  // Required forms record "missing" and return a neutral value.
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  double positive(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const;
  // Rows of equal length.
  std::vector<std::vector<double>> matrix(const std::string& key) const;
  SpecReader child(const std::string& key) const;
  // Array elements as readers; missing key gives an empty list.
  std::vector<SpecReader> items(const std::string& key) const;

 private:
  const Json* node_;
  std::string path_;
  Problems* problems_;
};

// A trig vector field given by {"random": {...}} or {"file": "..."}.
struct FieldSource {
  bool random = true;
  std::uint64_t seed_offset = 0;
  RandomFieldOptions options;
  std::filesystem::path file;

  TrigField make(int dim, std::uint64_t base_seed, std::uint64_t extra_offset = 0) const;
  std::uint64_t seed(std::uint64_t base_seed, std::uint64_t extra_offset = 0) const {
    return base_seed + seed_offset + extra_offset;
  }
  Json describe(std::uint64_t base_seed, std::uint64_t extra_offset = 0) const;
};
FieldSource read_field(const SpecReader& r, const ExperimentSpec& spec);
RandomFieldOptions read_random_options(const SpecReader& r);

// {"linear": [[...]], "frozen": {"field": <field>, "t": 0.1}}; default cat map.
struct BaseSource {
  IntMat linear;
  std::optional<FieldSource> frozen_field;
  double frozen_t = 0.0;

  int dim() const { return static_cast<int>(linear.rows()); }
  TorusMap make(std::uint64_t base_seed) const;
  Json describe(std::uint64_t base_seed) const;
};
BaseSource read_base(const SpecReader& r, const ExperimentSpec& spec);

// {"blocks": [1, 1], "target": 1}; default for d = 2 is the unstable bundle.
Grouping read_grouping(const SpecReader& r, int dim);
Json describe(const Grouping& g);

// Folds one splitting's diagnostics into the aggregate.
void record(Conservation& c, const std::array<double, 3>& exponents, const SplittingDiagnostics& d);
Json describe(const SplittingDiagnostics& d);
// Column vectors become arrays, matrices arrays of rows.
template <class Derived>
Json to_json(const Eigen::MatrixBase<Derived>& m) {
  Json out = Json::array();
  if (m.cols() == 1) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(static_cast<double>(m(i, 0)));
    return out;
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(static_cast<double>(m(i, j)));
    out.push_back(row);
  }
  return out;
}

// Per-kind parameter validation (parse and discard) and execution.
void validate_matrix(const ExperimentSpec& spec, Problems& p);
void validate_regularity(const ExperimentSpec& spec, Problems& p);
void validate_lyap(const ExperimentSpec& spec, Problems& p);
void validate_lyap_deriv(const ExperimentSpec& spec, Problems& p);
void validate_bump(const ExperimentSpec& spec, Problems& p);
void validate_family(const ExperimentSpec& spec, Problems& p);

ExperimentResult run_matrix(const ExperimentSpec& spec);
ExperimentResult run_regularity(const ExperimentSpec& spec);
ExperimentResult run_lyap(const ExperimentSpec& spec);
ExperimentResult run_lyap_deriv(const ExperimentSpec& spec);
ExperimentResult run_bump(const ExperimentSpec& spec);
ExperimentResult run_family(const ExperimentSpec& spec);

}  // namespace lyaplab::detail
