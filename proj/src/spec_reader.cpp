#include "spec_reader.hpp"

#include <algorithm>
#include <cmath>

#include "lyaplab/errors.hpp"

namespace lyaplab::detail {
namespace {

bool is_integral(const Json& j) {
  if (j.is_number_integer() || j.is_number_unsigned()) return true;
  if (!j.is_number_float()) return false;
  const double x = j.get<double>();
  return std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15;
}

}  // namespace

void Problems::throw_if_any(const std::string& context) const {
  if (list_.empty()) return;
  std::string msg = context + ": " + std::to_string(list_.size()) + " problem" + (list_.size() == 1 ? "" : "s");
  for (const auto& p : list_) msg += "\n  " + p;
  fail(ErrorCode::SpecInvalid, msg);
}

bool SpecReader::has(const std::string& key) const { return raw(key) != nullptr; }

const Json* SpecReader::raw(const std::string& key) const {
  if (!node_ || !node_->is_object()) return nullptr;
  const auto it = node_->find(key);
  if (it == node_->end() || it->is_null()) return nullptr;
  return &*it;
}

double SpecReader::number(const std::string& key) const {
  const Json* j = raw(key);
  if (!j) {
    problem(key, "missing");
    return 0.0;
  }
  if (!j->is_number()) {
    problem(key, "expected a number");
    return 0.0;
  }
  return j->get<double>();
}

double SpecReader::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

double SpecReader::positive(const std::string& key, double fallback) const {
  const double x = number(key, fallback);
  if (!(x > 0.0)) problem(key, "must be positive");
  return x;
}

int SpecReader::integer(const std::string& key) const {
  const Json* j = raw(key);
  if (!j) {
    problem(key, "missing");
    return 0;
  }
  if (!is_integral(*j)) {
    problem(key, "expected an integer");
    return 0;
  }
  return static_cast<int>(j->get<double>());
}

int SpecReader::integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

bool SpecReader::boolean(const std::string& key, bool fallback) const {
  const Json* j = raw(key);
  if (!j) return fallback;
  if (!j->is_boolean()) {
    problem(key, "expected true or false");
    return fallback;
  }
  return j->get<bool>();
}

std::string SpecReader::text(const std::string& key) const {
  const Json* j = raw(key);
  if (!j) {
    problem(key, "missing");
    return {};
  }
  if (!j->is_string()) {
    problem(key, "expected a string");
    return {};
  }
  return j->get<std::string>();
}

std::string SpecReader::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

std::vector<double> SpecReader::numbers(const std::string& key) const {
  const Json* j = raw(key);
  if (!j) {
    problem(key, "missing");
    return {};
  }
  if (!j->is_array() || j->empty()) {
    problem(key, "expected a non-empty array of numbers");
    return {};
  }
  std::vector<double> out;
  for (const auto& e : *j) {
    if (!e.is_number()) {
      problem(key, "expected a non-empty array of numbers");
      return {};
    }
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> SpecReader::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<int> SpecReader::integers(const std::string& key, std::vector<int> fallback) const {
  if (!has(key)) return fallback;
  const Json* j = raw(key);
  std::vector<int> out;
  if (!j->is_array() || j->empty()) {
    problem(key, "expected a non-empty array of integers");
    return {};
  }
  for (const auto& e : *j) {
    if (!is_integral(e)) {
      problem(key, "expected a non-empty array of integers");
      return {};
    }
    out.push_back(static_cast<int>(e.get<double>()));
  }
  return out;
}

std::vector<std::vector<double>> SpecReader::matrix(const std::string& key) const {
  const Json* j = raw(key);
  if (!j) {
    problem(key, "missing");
    return {};
  }
  std::vector<std::vector<double>> rows;
  bool ok = j->is_array() && !j->empty();
  if (ok) {
    for (const auto& row : *j) {
      if (!row.is_array() || row.size() != j->size()) {
        ok = false;
        break;
      }
      std::vector<double> r;
      for (const auto& e : row) {
        if (!e.is_number()) {
          ok = false;
          break;
        }
        r.push_back(e.get<double>());
      }
      rows.push_back(std::move(r));
    }
  }
  if (!ok) {
    problem(key, "expected a square array of number rows");
    return {};
  }
  return rows;
}

SpecReader SpecReader::child(const std::string& key) const {
  const Json* j = raw(key);
  if (j && !j->is_object()) {
    problem(key, "expected an object");
    j = nullptr;
  }
  return SpecReader(j, where(key), *problems_);
}

std::vector<SpecReader> SpecReader::items(const std::string& key) const {
  std::vector<SpecReader> out;
  const Json* j = raw(key);
  if (!j) return out;
  if (!j->is_array()) {
    problem(key, "expected an array");
    return out;
  }
  for (std::size_t i = 0; i < j->size(); ++i) {
    const Json& e = (*j)[i];
    const std::string at = where(key) + "[" + std::to_string(i) + "]";
    if (!e.is_object()) {
      problems_->add(at + ": expected an object");
      continue;
    }
    out.emplace_back(&e, at, *problems_);
  }
  return out;
}

// ---- fields, maps and groupings

RandomFieldOptions read_random_options(const SpecReader& r) {
  RandomFieldOptions o;
  o.amplitude = r.positive("amplitude", o.amplitude);
  o.max_mode = r.integer("max_mode", o.max_mode);
  o.terms_per_stream = r.integer("terms", o.terms_per_stream);
  if (o.max_mode < 1) r.problem("max_mode", "must be at least 1");
  if (o.terms_per_stream < 1) r.problem("terms", "must be at least 1");
  return o;
}

FieldSource read_field(const SpecReader& r, const ExperimentSpec& spec) {
  FieldSource src;
  if (!r.present()) {
    r.problems().add(r.path() + ": missing");
    return src;
  }
  if (r.has("file")) {
    src.random = false;
    src.file = spec.resolve(r.text("file"));
    if (!std::filesystem::exists(src.file)) r.problem("file", "not found: " + src.file.string());
    return src;
  }
  if (!r.has("random")) {
    r.problems().add(r.path() + ": needs \"random\" or \"file\"");
    return src;
  }
  const SpecReader rnd = r.child("random");
  const int offset = rnd.integer("seed_offset", 0);
  if (offset < 0) rnd.problem("seed_offset", "must be non-negative");
  src.seed_offset = static_cast<std::uint64_t>(std::max(offset, 0));
  src.options = read_random_options(rnd);
  return src;
}

TrigField FieldSource::make(int dim, std::uint64_t base_seed, std::uint64_t extra_offset) const {
  if (!random) {
    TrigField f = TrigField::load(file.string());
    if (!f.is_vector() || f.dim() != dim) fail(ErrorCode::SpecInvalid, file.string() + ": expected a vector field of dimension " + std::to_string(dim));
    return f;
  }
  return random_divfree(dim, seed(base_seed, extra_offset), options);
}

Json FieldSource::describe(std::uint64_t base_seed, std::uint64_t extra_offset) const {
  if (!random) return Json{{"file", file.filename().string()}};
  return Json{{"random_seed", seed(base_seed, extra_offset)},
              {"amplitude", options.amplitude},
              {"max_mode", options.max_mode},
              {"terms", options.terms_per_stream}};
}

BaseSource read_base(const SpecReader& r, const ExperimentSpec& spec) {
  BaseSource base;
  base.linear = TorusMap::cat_map().linear();
  if (!r.present()) return base;
  if (r.has("linear")) {
    const auto rows = r.matrix("linear");
    if (!rows.empty()) {
      const auto n = static_cast<Eigen::Index>(rows.size());
      IntMat m(n, n);
      bool integral = true;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          integral = integral && v == std::round(v);
          m(i, j) = static_cast<std::int64_t>(std::llround(v));
        }
      const double det = m.cast<double>().determinant();
      if (!integral) r.problem("linear", "entries must be integers");
      else if (std::abs(std::abs(det) - 1.0) > 1e-9) r.problem("linear", "determinant must be ±1");
      else if (n < 2 || n > kMaxDim) r.problem("linear", "dimension out of range");
      else base.linear = m;
    }
  }
  if (r.has("frozen")) {
    const SpecReader fr = r.child("frozen");
    base.frozen_field = read_field(fr.child("field"), spec);
    base.frozen_t = fr.number("t");
  }
  return base;
}

TorusMap BaseSource::make(std::uint64_t base_seed) const {
  if (!frozen_field) return TorusMap(linear);
  FamilySpec fam;
  fam.base = TorusMap(linear);
  fam.x = frozen_field->make(dim(), base_seed);
  return family_map(fam, frozen_t);
}

Json BaseSource::describe(std::uint64_t base_seed) const {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < linear.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < linear.cols(); ++j) row.push_back(linear(i, j));
    rows.push_back(row);
  }
  Json out{{"linear", rows}};
  if (frozen_field) out["frozen"] = Json{{"field", frozen_field->describe(base_seed)}, {"t", frozen_t}};
  return out;
}

Grouping read_grouping(const SpecReader& r, int dim) {
  Grouping g;
  if (!r.present()) {
    if (dim == 2) return Grouping{{1, 1}, 1};
    r.problems().add(r.path() + ": missing (no default above dimension 2)");
    return Grouping{{dim}, 0};
  }
  g.blocks = r.integers("blocks", {});
  if (g.blocks.empty() && !r.has("blocks")) r.problem("blocks", "missing");
  g.target = r.integer("target");
  try {
    if (!g.blocks.empty()) g.validate(dim);
  } catch (const LabError& e) {
    r.problems().add(r.path() + ": " + e.what());
  }
  return g;
}

Json describe(const Grouping& g) { return Json{{"blocks", g.blocks}, {"target", g.target}}; }

void record(Conservation& c, const std::array<double, 3>& exponents, const SplittingDiagnostics& d) {
  c.splittings += 1;
  c.sum_residual = std::max(c.sum_residual, std::abs(exponents[0] + exponents[1] + exponents[2]));
  c.pair_residual = std::max(c.pair_residual, d.pair_residual);
  c.invariance_residual = std::max(c.invariance_residual, d.invariance_residual);
  c.orthonormality_residual = std::max(c.orthonormality_residual, d.orthonormality_residual);
}

Json describe(const SplittingDiagnostics& d) {
  return Json{{"iterations", Json{{"min", d.min_iterations}, {"max", d.max_iterations}, {"mean", d.mean_iterations}}},
              {"contraction_ratio", d.contraction_ratio},
              {"pair_residual", d.pair_residual},
              {"orthonormality_residual", d.orthonormality_residual},
              {"invariance_residual", d.invariance_residual},
              {"domination_ratio", d.domination_ratio},
              {"orientation_preserved", d.orientation_preserved}};
}

}  // namespace lyaplab::detail
