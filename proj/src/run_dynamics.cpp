// lyap and lyap-deriv: exponents of f_t = h_t ∘ f and their derivatives at t = 0.
#include <algorithm>
#include <cmath>
#include <limits>

#include "lyaplab/derivatives.hpp"
#include "lyaplab/errors.hpp"
#include "spec_reader.hpp"

namespace lyaplab::detail {
namespace {

SplittingOptions read_splitting_options(const SpecReader& r) {
  SplittingOptions o;
  if (!r.present()) return o;
  o.tolerance = r.positive("tolerance", o.tolerance);
  o.max_depth = r.integer("max_depth", o.max_depth);
  if (o.max_depth < o.min_depth) r.problem("max_depth", "must be at least " + std::to_string(o.min_depth));
  return o;
}

int read_resolution(const SpecReader& r, const std::string& key, int fallback) {
  const int n = r.integer(key, fallback);
  if (n < 16) r.problem(key, "lattice resolution must be at least 16");
  return n;
}

Json sample_json(const ExponentSample& s) {
  return Json{{"t", s.t},
              {"lambda", s.lambda},
              {"lambda_per_bundle", s.exponents},
              {"sum_check", s.exponents[0] + s.exponents[1] + s.exponents[2]},
              {"diagnostics", describe(s.diagnostics)}};
}

// ---- lyap

struct LyapConfig {
  BaseSource base;
  std::optional<FieldSource> x, y;
  std::vector<double> ts;
  Grouping grouping;
  int resolution = 64;
  SplittingOptions options;
  bool dump_fields = false;
  std::optional<std::pair<int, int>> birkhoff;  // orbit length, points per axis
};

LyapConfig read_lyap_config(const ExperimentSpec& spec, Problems& problems) {
  const SpecReader params(&spec.params, "params", problems);
  LyapConfig cfg;
  cfg.base = read_base(params.child("base"), spec);
  if (params.has("x")) cfg.x = read_field(params.child("x"), spec);
  if (params.has("y")) cfg.y = read_field(params.child("y"), spec);
  if (const Json* t = params.raw("t"); t && t->is_number()) cfg.ts = {t->get<double>()};
  else cfg.ts = params.numbers("t");
  if (cfg.ts.size() > 1 && !cfg.x) params.problem("x", "needed when sweeping t");
  cfg.grouping = read_grouping(params.child("grouping"), cfg.base.dim());
  cfg.resolution = read_resolution(params, "resolution", cfg.resolution);
  cfg.options = read_splitting_options(params.child("splitting"));
  cfg.dump_fields = params.boolean("dump_fields", false);
  if (params.has("birkhoff")) {
    const SpecReader b = params.child("birkhoff");
    cfg.birkhoff = std::pair{b.integer("n_orbit"), b.integer("n_points")};
  }
  return cfg;
}

FamilySpec make_family(const BaseSource& base, const std::optional<FieldSource>& x, const std::optional<FieldSource>& y,
                       std::uint64_t seed, std::uint64_t x_offset = 0) {
  FamilySpec fam;
  fam.base = base.make(seed);
  fam.x = x ? x->make(base.dim(), seed, x_offset) : TrigField(base.dim(), ValueRank::multivector, 1);
  if (y) fam.y = y->make(base.dim(), seed);
  return fam;
}

// ---- lyap-deriv

struct DerivConfig {
  BaseSource base;
  Grouping grouping;
  std::vector<FieldSource> fields;   // one entry per family
  std::vector<std::uint64_t> offsets;
  std::optional<FieldSource> y;
  int resolution = 64;
  SplittingOptions options;
  std::vector<double> ts;
  bool first = true;
  bool expect_critical = false;
  std::optional<std::vector<double>> holder_steps;
  std::optional<int> second_quadrature;
  std::optional<std::pair<double, int>> vprime;  // FD step, lattice resolution
};

bool has_stencil(const std::vector<double>& ts) {
  auto has = [&](double t) {
    return std::any_of(ts.begin(), ts.end(), [&](double s) { return std::abs(s - t) <= 1e-14 * std::max(1.0, std::abs(t)); });
  };
  for (double h : ts)
    if (h > 0 && has(-h) && has(2 * h) && has(-2 * h) && has(0.0)) return true;
  return false;
}

DerivConfig read_deriv_config(const ExperimentSpec& spec, Problems& problems) {
  const SpecReader params(&spec.params, "params", problems);
  DerivConfig cfg;
  cfg.base = read_base(params.child("base"), spec);
  cfg.grouping = read_grouping(params.child("grouping"), cfg.base.dim());
  if (params.has("fields")) {
    const SpecReader f = params.child("fields");
    const int count = f.integer("count");
    if (count < 1) f.problem("count", "must be at least 1");
    FieldSource src;
    if (f.has("random")) src.options = read_random_options(f.child("random"));
    for (int i = 0; i < count; ++i) {
      cfg.fields.push_back(src);
      cfg.offsets.push_back(static_cast<std::uint64_t>(i));
    }
  } else if (params.has("x")) {
    cfg.fields.push_back(read_field(params.child("x"), spec));
    cfg.offsets.push_back(0);
  } else {
    problems.add("params: needs fields or x");
  }
  if (params.has("y")) cfg.y = read_field(params.child("y"), spec);
  cfg.resolution = read_resolution(params, "resolution", cfg.resolution);
  cfg.options = read_splitting_options(params.child("splitting"));
  cfg.first = params.boolean("first", true);
  cfg.expect_critical = params.boolean("expect_critical", false);
  if (params.has("ts")) {
    cfg.ts = params.numbers("ts");
    if (!cfg.ts.empty() && !has_stencil(cfg.ts)) params.problem("ts", "needs 0, ±h and ±2h for some h > 0");
  }
  if (params.has("holder")) cfg.holder_steps = params.child("holder").numbers("steps", {0.02, 0.01});
  if (params.has("second")) {
    const SpecReader s = params.child("second");
    cfg.second_quadrature = read_resolution(s, "quadrature_resolution", 64);
    if (cfg.ts.empty()) params.problem("ts", "the second-derivative oracle needs FD samples");
  }
  if (params.has("vprime")) {
    const SpecReader v = params.child("vprime");
    cfg.vprime = std::pair{v.positive("t", 1e-3), read_resolution(v, "resolution", 32)};
  }
  if (!cfg.first && cfg.ts.empty() && !cfg.second_quadrature && !cfg.vprime && !cfg.holder_steps)
    problems.add("params: nothing to compute");
  return cfg;
}

FramedSplitting base_splitting(const TorusMap& base, const Grouping& grouping, int resolution, const SplittingOptions& options) {
  const FramedSplitting exact = exact_splitting(TorusMap(base.linear()), grouping);
  if (base.is_linear()) return exact;
  return power_splitting(base, exact, resolution, options);
}

}  // namespace

void validate_lyap(const ExperimentSpec& spec, Problems& p) { read_lyap_config(spec, p); }
void validate_lyap_deriv(const ExperimentSpec& spec, Problems& p) { read_deriv_config(spec, p); }

ExperimentResult run_lyap(const ExperimentSpec& spec) {
  Problems problems;
  const LyapConfig cfg = read_lyap_config(spec, problems);
  problems.throw_if_any("spec '" + spec.name + "'");

  ExperimentResult out;
  const FamilySpec fam = make_family(cfg.base, cfg.x, cfg.y, spec.seed);
  const FramedSplitting seed = exact_splitting(TorusMap(fam.base.linear()), cfg.grouping);
  Json samples = Json::array();
  double worst_birkhoff = 0.0;
  for (std::size_t i = 0; i < cfg.ts.size(); ++i) {
    const double t = cfg.ts[i];
    const TorusMap f = cfg.x ? family_map(fam, t) : fam.base;
    const FramedSplitting split = power_splitting(f, seed, cfg.resolution, cfg.options);
    ExponentSample s;
    s.t = t;
    s.exponents = lyapunov_exponents(split);
    s.lambda = s.exponents[1];
    s.diagnostics = split.diagnostics();
    record(out.conservation, s.exponents, s.diagnostics);
    Json rec = sample_json(s);
    rec["bounds"] = Json::array();
    for (const BundleBounds& b : split.bounds()) rec["bounds"].push_back(Json::array({b.lo, b.hi}));
    if (cfg.birkhoff) {
      const double orbit = birkhoff_oracle(f, split.dims(), seed.frame(0), cfg.birkhoff->first, cfg.birkhoff->second);
      rec["birkhoff"] = orbit;
      worst_birkhoff = std::max(worst_birkhoff, std::abs(orbit - s.lambda));
    }
    if (cfg.dump_fields) {
      const std::string tag = "t" + std::to_string(i);
      out.grids.emplace(tag + "_omega", split.omega_grid());
      out.grids.emplace(tag + "_v", split.v_grid());
    }
    samples.push_back(std::move(rec));
  }
  out.results["base"] = cfg.base.describe(spec.seed);
  if (cfg.x) out.results["x"] = cfg.x->describe(spec.seed);
  out.results["grouping"] = describe(cfg.grouping);
  out.results["resolution"] = cfg.resolution;
  out.results["samples"] = samples;
  if (cfg.birkhoff) out.checks.push_back({"birkhoff.max_abs_err", worst_birkhoff, spec.tolerance("birkhoff", 1e-4)});
  return out;
}

ExperimentResult run_lyap_deriv(const ExperimentSpec& spec) {
  Problems problems;
  const DerivConfig cfg = read_deriv_config(spec, problems);
  problems.throw_if_any("spec '" + spec.name + "'");

  ExperimentResult out;
  const TorusMap base = cfg.base.make(spec.seed);
  const FramedSplitting split = base_splitting(base, cfg.grouping, cfg.resolution, cfg.options);
  record(out.conservation, lyapunov_exponents(split), split.diagnostics());

  double max_first = 0.0, max_fe_gap = 0.0, max_fd_slope = 0.0, max_first_fd_rel = 0.0;
  double max_second_rel = 0.0, max_second_stencil_rel = 0.0, max_linear_gap = 0.0;
  double max_vp_ratio = 0.0, max_vp_fd = 0.0, max_vp_kernel = 0.0;
  CsvTable curve_csv({"family", "t", "lambda", "fit_residual"});
  Json families = Json::array();

  for (std::size_t fi = 0; fi < cfg.fields.size(); ++fi) {
    FamilySpec fam;
    fam.base = base;
    fam.x = cfg.fields[fi].make(base.dim(), spec.seed, cfg.offsets[fi]);
    if (cfg.y) fam.y = cfg.y->make(base.dim(), spec.seed);
    const FieldPtr x = make_trig_field(fam.x);
    const FieldPtr y = fam.y ? make_trig_field(*fam.y) : nullptr;
    Json rec{{"index", fi}, {"x", cfg.fields[fi].describe(spec.seed, cfg.offsets[fi])}};
    if (cfg.y) rec["y"] = cfg.y->describe(spec.seed);

    double first_f = 0.0;
    if (cfg.first) {
      first_f = lambda_prime_via_F(split, *x, cfg.resolution);
      const double first_e = lambda_prime_via_E(split, *x, cfg.resolution);
      rec["lambda_prime_F"] = first_f;
      rec["lambda_prime_E"] = first_e;
      max_first = std::max({max_first, std::abs(first_f), std::abs(first_e)});
      max_fe_gap = std::max(max_fe_gap, std::abs(first_f - first_e));
    }
    if (cfg.holder_steps) {
      const HolderDerivative h = lambda_prime_holder(split, x, *cfg.holder_steps, cfg.resolution);
      rec["lambda_prime_holder"] = Json{{"value", h.value},
                                        {"steps", h.steps},
                                        {"slopes", h.slopes},
                                        {"g0", h.g0},
                                        {"bound", h.bound},
                                        {"bound_ratio", h.bound_ratio},
                                        {"omega_exponent", h.omega_exponent},
                                        {"v_exponent", h.v_exponent}};
    }

    std::optional<double> second_value;
    if (cfg.second_quadrature) {
      const Quadrature quad =
          split.is_constant() ? lattice_quadrature(base.dim(), *cfg.second_quadrature) : lattice_quadrature(base.dim(), split.resolution());
      const SecondDerivative sd = lambda_second(base, split, x, y, quad);
      second_value = sd.value;
      rec["lambda_second"] = Json{{"value", sd.value},
                                  {"terms", sd.terms},
                                  {"series_terms", sd.series_terms},
                                  {"tail_bound", sd.tail_bound}};
    }

    if (cfg.vprime) {
      const auto [t, vres] = *cfg.vprime;
      const Quadrature probes = lattice_quadrature(base.dim(), vres);
      const VPrime vp(base, split, x, probes);
      const double residual = vp.residual(vres);
      const double kernel = vp.kernel_residual(vres);
      SplittingOptions moved_opts = cfg.options;
      moved_opts.normalization = Normalization::reference;
      moved_opts.reference_omega = split.omega_source();
      const FramedSplitting moved =
          power_splitting(family_map(fam, t), exact_splitting(TorusMap(base.linear()), cfg.grouping), vres, moved_opts);
      const std::array<double, 3> moved_exponents = lyapunov_exponents(moved);
      record(out.conservation, moved_exponents, moved.diagnostics());
      const GridField lattice = moved.v_grid();
      double fd_err = 0.0, size = 0.0;
      for (std::size_t i = 0; i < moved.num_points(); ++i) {
        const Vec p = lattice.point(i);
        const WVec v0 = split.is_constant() ? split.v_at(0) : split.sample(p).v;
        const WVec fd = (moved.v_at(i) - v0) / t;
        const WVec exact = vp.value(p);
        fd_err = std::max(fd_err, (fd - exact).cwiseAbs().maxCoeff());
        size = std::max(size, exact.cwiseAbs().maxCoeff());
      }
      const double ratio = vp.tail_bound() > 0 ? residual / (2.0 * vp.tail_bound()) : (residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      rec["vprime"] = Json{{"series_terms", vp.terms()},
                           {"nu", vp.nu()},
                           {"source_norm", vp.source_norm()},
                           {"tail_bound", vp.tail_bound()},
                           {"residual", residual},
                           {"residual_over_twice_tail", ratio},
                           {"kernel_residual", kernel},
                           {"fd_t", t},
                           {"fd_error", fd_err},
                           {"max_norm", size},
                           {"moved_exponents", moved_exponents},
                           {"moved_diagnostics", describe(moved.diagnostics())}};
      max_vp_ratio = std::max(max_vp_ratio, ratio);
      max_vp_fd = std::max(max_vp_fd, fd_err);
      max_vp_kernel = std::max(max_vp_kernel, kernel);
    }

    if (!cfg.ts.empty()) {
      const ExponentCurve curve = exponent_curve(fam, cfg.grouping, cfg.ts, cfg.resolution, cfg.options);
      Json samples = Json::array();
      for (const ExponentSample& s : curve.samples) {
        record(out.conservation, s.exponents, s.diagnostics);
        samples.push_back(sample_json(s));
      }
      const FdSlope slope = fd_slope(curve);
      const FdSecond second = fd_second(curve);
      for (std::size_t i = 0; i < curve.samples.size(); ++i)
        curve_csv.add_row({static_cast<double>(fi), curve.samples[i].t, curve.samples[i].lambda, second.residuals[i]});
      double worst_slope = 0.0;
      for (double s : slope.slopes) worst_slope = std::max(worst_slope, std::abs(s));
      max_fd_slope = std::max(max_fd_slope, worst_slope);
      rec["lambda0"] = curve.lambda_at(0.0);
      rec["fd"] = Json{{"samples", samples},
                       {"slope", Json{{"steps", slope.steps}, {"slopes", slope.slopes}, {"extrapolated", slope.extrapolated}}},
                       {"second", Json{{"step", second.step},
                                       {"stencil", second.stencil},
                                       {"parabola", second.parabola},
                                       {"linear", second.linear},
                                       {"fit_residual", second.fit_residual}}}};
      Json agreement = Json::object();
      if (cfg.first) {
        const double gap = std::abs(second.linear - first_f);
        agreement["fit_linear_minus_first"] = gap;
        max_linear_gap = std::max(max_linear_gap, gap);
        if (!cfg.expect_critical) {
          const double rel = std::abs(slope.extrapolated - first_f) / std::max(std::abs(first_f), 1e-300);
          agreement["first_fd_rel_err"] = rel;
          max_first_fd_rel = std::max(max_first_fd_rel, rel);
        }
      }
      if (second_value) {
        const double rel = std::abs(second.parabola - *second_value) / std::abs(*second_value);
        const double rel_stencil = std::abs(second.stencil - *second_value) / std::abs(*second_value);
        agreement["second_rel_err"] = rel;
        agreement["second_stencil_rel_err"] = rel_stencil;
        max_second_rel = std::max(max_second_rel, rel);
        max_second_stencil_rel = std::max(max_second_stencil_rel, rel_stencil);
      }
      rec["agreement"] = agreement;
    } else {
      rec["lambda0"] = lyapunov_exponent(split);
    }
    families.push_back(std::move(rec));
  }

  out.results["base"] = cfg.base.describe(spec.seed);
  out.results["grouping"] = describe(cfg.grouping);
  out.results["resolution"] = cfg.resolution;
  out.results["base_splitting"] = Json{{"constant", split.is_constant()}, {"diagnostics", describe(split.diagnostics())}};
  out.results["families"] = families;
  Json summary = Json::object();
  if (cfg.first) {
    summary["max_abs_lambda_prime"] = max_first;
    summary["max_F_E_gap"] = max_fe_gap;
    out.checks.push_back({"first.F_vs_E", max_fe_gap, spec.tolerance("first_agreement", 1e-8)});
    if (cfg.expect_critical) out.checks.push_back({"first.max_abs", max_first, spec.tolerance("critical", 1e-8)});
  }
  if (!cfg.ts.empty()) {
    summary["max_abs_fd_slope"] = max_fd_slope;
    if (cfg.expect_critical) out.checks.push_back({"fd.max_abs_slope", max_fd_slope, spec.tolerance("fd_slope", 1e-3)});
    if (cfg.first) {
      summary["max_fit_linear_gap"] = max_linear_gap;
      out.checks.push_back({"fd.fit_linear_vs_first", max_linear_gap, spec.tolerance("fit_linear", 1e-3)});
      if (!cfg.expect_critical) {
        summary["max_first_fd_rel_err"] = max_first_fd_rel;
        out.checks.push_back({"first.fd_rel_err", max_first_fd_rel, spec.tolerance("first_fd_rel", 1e-3)});
      }
    }
    out.tables["curve"] = std::move(curve_csv);
  }
  if (cfg.second_quadrature) {
    summary["max_second_rel_err"] = max_second_rel;
    summary["max_second_stencil_rel_err"] = max_second_stencil_rel;
    out.checks.push_back({"second.rel_err", max_second_rel, spec.tolerance("second_rel", 0.05)});
  }
  if (cfg.vprime) {
    summary["max_vprime_residual_over_twice_tail"] = max_vp_ratio;
    summary["max_vprime_fd_error"] = max_vp_fd;
    summary["max_vprime_kernel_residual"] = max_vp_kernel;
    out.checks.push_back({"vprime.residual_over_twice_tail", max_vp_ratio, 1.0});
    out.checks.push_back({"vprime.fd_error", max_vp_fd, spec.tolerance("vprime_fd", 1e-4)});
    out.checks.push_back({"vprime.kernel", max_vp_kernel, spec.tolerance("vprime_kernel", 1e-9)});
  }
  out.results["summary"] = summary;
  return out;
}

}  // namespace lyaplab::detail
