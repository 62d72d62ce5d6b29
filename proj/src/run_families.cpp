// bump-sweep and family-check.
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "lyaplab/derivatives.hpp"
#include "lyaplab/errors.hpp"
#include "lyaplab/parallel.hpp"
#include "spec_reader.hpp"

namespace lyaplab::detail {
namespace {

// ---- bump-sweep

struct BumpConfig {
  BaseSource base;
  std::vector<double> radii;
  Vec center;
  std::optional<Mat> chart;  // empty: orthonormal [E^u | E^s] of the linear map
  int power = 4;
  double amplitude = 1.0;
  int per_radius = 16;
  int k_resolution = 256;
  int return_iterates = 20;
  std::optional<int> oracle_resolution;
  std::vector<double> oracle_ts;
};

BumpConfig read_bump_config(const ExperimentSpec& spec, Problems& problems) {
  const SpecReader params(&spec.params, "params", problems);
  BumpConfig cfg;
  cfg.base = read_base(params.child("base"), spec);
  if (cfg.base.frozen_field) params.problem("base", "the sweep needs a linear base");
  if (cfg.base.dim() != 2) params.problem("base", "the sweep is implemented on T²");
  cfg.radii = params.numbers("radii");
  for (double r : cfg.radii)
    if (!(r > 0.0 && r < 0.5 * std::numbers::pi)) params.problem("radii", "each radius must lie in (0, π/2)");
  const std::vector<double> c = params.numbers("center", {std::numbers::pi, std::numbers::pi});
  cfg.center = Vec::Zero(2);
  if (c.size() == 2) cfg.center << c[0], c[1];
  else params.problem("center", "expected two coordinates");
  if (params.has("chart")) {
    if (const Json* ch = params.raw("chart"); ch->is_string()) {
      if (ch->get<std::string>() != "bundles") params.problem("chart", "expected \"bundles\" or a 2×2 matrix");
    } else {
      const auto rows = params.matrix("chart");
      if (rows.size() == 2) {
        Mat m(2, 2);
        m << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
        if (std::abs(m.determinant()) < 1e-12) params.problem("chart", "must be invertible");
        cfg.chart = m;
      } else if (!rows.empty()) {
        params.problem("chart", "expected a 2×2 matrix");
      }
    }
  }
  if (params.has("profile")) {
    const SpecReader p = params.child("profile");
    cfg.power = p.integer("power", cfg.power);
    cfg.amplitude = p.number("amplitude", cfg.amplitude);
    if (cfg.power < 3) p.problem("power", "must be at least 3 for a C² profile");
  }
  cfg.per_radius = params.integer("per_radius", cfg.per_radius);
  if (cfg.per_radius < 4) params.problem("per_radius", "must be at least 4");
  cfg.k_resolution = params.integer("k_resolution", cfg.k_resolution);
  if (cfg.k_resolution < 16) params.problem("k_resolution", "must be at least 16");
  cfg.return_iterates = params.integer("return_iterates", cfg.return_iterates);
  if (params.has("oracle")) {
    const SpecReader o = params.child("oracle");
    cfg.oracle_resolution = o.integer("resolution");
    if (*cfg.oracle_resolution < 16) o.problem("resolution", "lattice resolution must be at least 16");
    cfg.oracle_ts = o.numbers("ts", {-0.04, -0.02, 0.0, 0.02, 0.04});
  }
  return cfg;
}

// Orthonormal chart with columns along E^u and E^s, positively oriented.
Mat bundle_chart(const TorusMap& linear) {
  const FramedSplitting unstable = exact_splitting(linear, Grouping{{1, 1}, 1});
  Mat chart(2, 2);
  chart.col(0) = unstable.frame(0).col(1);
  chart.col(1) = unstable.frame(0).col(0);
  if (chart.determinant() < 0) chart.col(1) *= -1.0;
  return chart;
}

struct BundleRow {
  double formula = 0.0;
  std::array<double, 4> terms{};
  std::optional<double> stencil, parabola;
  std::vector<ExponentSample> samples;
};

struct RadiusRow {
  double r = 0.0;
  double k = 0.0;
  ReturnInfo ret;
  BundleRow stable, unstable;  // E² and E³
};

// Least-squares intercept of y against r.
double fitted_limit(const std::vector<double>& r, const std::vector<double>& y) {
  if (r.size() < 2) return y.empty() ? 0.0 : y.front();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(r.size()), 2);
  Eigen::VectorXd b(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a.row(i) << 1.0, r[static_cast<std::size_t>(i)];
    b(i) = y[static_cast<std::size_t>(i)];
  }
  return a.colPivHouseholderQr().solve(b)(0);
}

// ---- family-check

struct FamilyConfig {
  BaseSource base;
  FieldSource x;
  std::optional<FieldSource> y;
  double tangent_t = 1e-3;
  double tangent_tolerance = 1e-6;
  int tangent_probes = 8;
  std::vector<double> measure_ts{0.05, 0.1};
  int measure_resolution = 64;
  int pairs = 0;
  int probe_resolution = 32;
  double fd_h = 1e-4;
  int panels = 8;
  RandomFieldOptions pair_options;
};

FamilyConfig read_family_config(const ExperimentSpec& spec, Problems& problems) {
  const SpecReader params(&spec.params, "params", problems);
  FamilyConfig cfg;
  cfg.base = read_base(params.child("base"), spec);
  cfg.x = read_field(params.child("x"), spec);
  if (params.has("y")) cfg.y = read_field(params.child("y"), spec);
  if (params.has("tangent")) {
    const SpecReader t = params.child("tangent");
    cfg.tangent_t = t.positive("t", cfg.tangent_t);
    cfg.tangent_tolerance = t.positive("tolerance", cfg.tangent_tolerance);
    cfg.tangent_probes = t.integer("probe_resolution", cfg.tangent_probes);
  }
  if (params.has("measure")) {
    const SpecReader m = params.child("measure");
    cfg.measure_ts = m.numbers("ts", cfg.measure_ts);
    cfg.measure_resolution = m.integer("resolution", cfg.measure_resolution);
    if (cfg.measure_resolution < 8) m.problem("resolution", "must be at least 8");
  }
  if (params.has("flow_tangent")) {
    const SpecReader f = params.child("flow_tangent");
    cfg.pairs = f.integer("pairs");
    cfg.probe_resolution = f.integer("probe_resolution", cfg.probe_resolution);
    cfg.fd_h = f.positive("h", cfg.fd_h);
    cfg.panels = f.integer("panels", cfg.panels);
    if (f.has("random")) cfg.pair_options = read_random_options(f.child("random"));
    if (cfg.pairs < 1) f.problem("pairs", "must be at least 1");
    if (cfg.probe_resolution < 1) f.problem("probe_resolution", "must be at least 1");
    if (cfg.panels < 1) f.problem("panels", "must be at least 1");
  }
  return cfg;
}

// A fixed mean-zero observable with a few incommensurate harmonics.
TrigPoly observable(int dim) {
  TrigPoly g(dim);
  Freq a{}, b{}, c{};
  a[0] = 1;
  a[1] = 2;
  b[0] = 3;
  b[1] = -1;
  c[0] = 2;
  g.add(a, 1.0, 0.0);
  g.add(b, 0.0, 0.5);
  g.add(c, 0.3, 0.0);
  return g;
}

}  // namespace

void validate_bump(const ExperimentSpec& spec, Problems& p) { read_bump_config(spec, p); }
void validate_family(const ExperimentSpec& spec, Problems& p) { read_family_config(spec, p); }

ExperimentResult run_bump(const ExperimentSpec& spec) {
  Problems problems;
  const BumpConfig cfg = read_bump_config(spec, problems);
  problems.throw_if_any("spec '" + spec.name + "'");

  const TorusMap f = cfg.base.make(spec.seed);
  const FramedSplitting stable = exact_splitting(f, Grouping{{1, 1}, 0});
  const FramedSplitting unstable = exact_splitting(f, Grouping{{1, 1}, 1});
  const Mat chart = cfg.chart ? *cfg.chart : bundle_chart(f);

  std::vector<RadiusRow> rows(cfg.radii.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    RadiusRow& row = rows[i];
    BumpSpec bs;
    bs.radius = cfg.radii[i];
    bs.center = cfg.center;
    bs.chart = chart;
    bs.profile = std::make_shared<PolynomialBump>(cfg.power, cfg.amplitude);
    bs = bs.resolved();
    row.r = bs.radius;
    row.k = bump_K(bs, cfg.k_resolution);
    row.ret = return_time(f, bs, cfg.return_iterates);
    const auto field = std::make_shared<BumpField>(bs);
    const Quadrature quad = support_quadrature(*field, cfg.per_radius);
    for (BundleRow* b : {&row.stable, &row.unstable}) {
      const FramedSplitting& split = b == &row.stable ? stable : unstable;
      const SecondDerivative sd = lambda_second(f, split, field, nullptr, quad);
      b->formula = sd.value;
      b->terms = sd.terms;
      if (!cfg.oracle_resolution) continue;
      ExponentCurve curve;
      for (double t : cfg.oracle_ts) {
        const FramedSplitting moved = power_splitting(f.then_flow(field, t), split, *cfg.oracle_resolution);
        ExponentSample s;
        s.t = t;
        s.exponents = lyapunov_exponents(moved);
        s.lambda = s.exponents[1];
        s.diagnostics = moved.diagnostics();
        curve.samples.push_back(s);
      }
      const FdSecond fd = fd_second(curve);
      b->stencil = fd.stencil;
      b->parabola = fd.parabola;
      b->samples = curve.samples;
    }
  });

  ExperimentResult out;
  std::vector<double> rs, ratio2, ratio3;
  for (const RadiusRow& row : rows) {
    rs.push_back(row.r);
    ratio2.push_back(row.stable.formula / (row.r * row.r));
    ratio3.push_back(row.unstable.formula / (row.r * row.r));
  }
  const double limit2 = fitted_limit(rs, ratio2), limit3 = fitted_limit(rs, ratio3);

  std::vector<std::string> header{"r", "lambda2_E2", "lambda2_E3", "ratio_E2", "ratio_E3", "K", "limit_E2", "limit_E3"};
  if (cfg.oracle_resolution)
    for (const char* h : {"oracle_E2", "oracle_E3", "oracle_ratio_E2", "oracle_ratio_E3"}) header.emplace_back(h);
  CsvTable table(header);
  Json radii = Json::array();
  int sign_errors = 0, oracle_sign_errors = 0, periodic = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RadiusRow& row = rows[i];
    const double r2 = row.r * row.r;
    std::vector<double> csv{row.r, row.stable.formula, row.unstable.formula, ratio2[i], ratio3[i], row.k, limit2, limit3};
    sign_errors += (row.stable.formula <= 0.0) + (row.unstable.formula >= 0.0);
    periodic += row.ret.periodic;
    auto bundle_json = [&](const BundleRow& b) {
      Json j{{"lambda_second", b.formula}, {"ratio", b.formula / r2}, {"terms", b.terms}};
      if (b.stencil) {
        Json samples = Json::array();
        for (const ExponentSample& s : b.samples) {
          samples.push_back(Json{{"t", s.t}, {"lambda", s.lambda}, {"lambda_per_bundle", s.exponents}});
          record(out.conservation, s.exponents, s.diagnostics);
        }
        j["oracle"] = Json{{"stencil", *b.stencil}, {"parabola", *b.parabola}, {"ratio", *b.stencil / r2}, {"samples", samples}};
      }
      return j;
    };
    Json rec{{"r", row.r},
             {"K", row.k},
             {"E2", bundle_json(row.stable)},
             {"E3", bundle_json(row.unstable)},
             {"return", Json{{"periodic", row.ret.periodic},
                             {"period", row.ret.period},
                             {"return_time", row.ret.return_time},
                             {"min_distance", row.ret.min_distance}}}};
    if (cfg.oracle_resolution) {
      csv.insert(csv.end(), {*row.stable.stencil, *row.unstable.stencil, *row.stable.stencil / r2, *row.unstable.stencil / r2});
      oracle_sign_errors += (*row.stable.stencil <= 0.0) + (*row.unstable.stencil >= 0.0);
    }
    table.add_row(csv);
    radii.push_back(std::move(rec));
  }
  out.tables["sweep"] = std::move(table);

  // Relative distance of λ″/r² from ±K at the smallest radius.
  const auto smallest = static_cast<std::size_t>(std::min_element(rs.begin(), rs.end()) - rs.begin());
  const RadiusRow& last = rows[smallest];
  const double r2 = last.r * last.r;
  const double err2 = std::abs(last.stable.formula / r2 - last.k) / last.k;
  const double err3 = std::abs(last.unstable.formula / r2 + last.k) / last.k;
  const double tol = spec.tolerance("ratio_rel", 0.15);

  out.results["chart"] = to_json(chart);
  out.results["center"] = to_json(cfg.center);
  out.results["per_radius"] = cfg.per_radius;
  out.results["radii"] = radii;
  out.results["fitted_limit"] = Json{{"E2", limit2}, {"E3", limit3}};
  out.results["smallest_radius"] = Json{{"r", last.r}, {"E2_rel_err", err2}, {"E3_rel_err", err3}};
  out.checks.push_back({"center.periodic", static_cast<double>(periodic), 0.0});
  out.checks.push_back({"formula.sign_errors", static_cast<double>(sign_errors), 0.0});
  out.checks.push_back({"formula.E2_rel_err", err2, tol});
  out.checks.push_back({"formula.E3_rel_err", err3, tol});
  if (cfg.oracle_resolution) {
    const double o2 = std::abs(*last.stable.stencil / r2 - last.k) / last.k;
    const double o3 = std::abs(*last.unstable.stencil / r2 + last.k) / last.k;
    out.results["smallest_radius"]["oracle_E2_rel_err"] = o2;
    out.results["smallest_radius"]["oracle_E3_rel_err"] = o3;
    out.results["oracle_resolution"] = *cfg.oracle_resolution;
    out.checks.push_back({"oracle.sign_errors", static_cast<double>(oracle_sign_errors), 0.0});
    out.checks.push_back({"oracle.E2_rel_err", o2, tol});
    out.checks.push_back({"oracle.E3_rel_err", o3, tol});
  }
  return out;
}

ExperimentResult run_family(const ExperimentSpec& spec) {
  Problems problems;
  const FamilyConfig cfg = read_family_config(spec, problems);
  problems.throw_if_any("spec '" + spec.name + "'");

  ExperimentResult out;
  const int dim = cfg.base.dim();
  FamilySpec fam;
  fam.base = cfg.base.make(spec.seed);
  fam.x = cfg.x.make(dim, spec.seed);
  if (cfg.y) fam.y = cfg.y->make(dim, spec.seed);

  const double div_x = divergence_residual(fam.x);
  const double div_y = fam.y ? divergence_residual(*fam.y) : 0.0;
  const TangentFields tf = tangent_fields(fam, cfg.tangent_t, std::numeric_limits<double>::infinity(), cfg.tangent_probes);
  Json measure = Json::array();
  double worst_measure = 0.0;
  const TrigPoly g = observable(dim);
  for (double t : cfg.measure_ts) {
    const double res = measure_residual(fam, g, t, cfg.measure_resolution);
    worst_measure = std::max(worst_measure, res);
    measure.push_back(Json{{"t", t}, {"residual", res}});
  }
  out.results["base"] = cfg.base.describe(spec.seed);
  out.results["x"] = cfg.x.describe(spec.seed);
  if (cfg.y) out.results["y"] = cfg.y->describe(spec.seed);
  out.results["divergence"] = Json{{"x", div_x}, {"y", div_y}};
  out.results["tangent"] = Json{{"t", cfg.tangent_t},
                                {"x_residual", tf.check.x_residual},
                                {"y_residual", tf.check.y_residual},
                                {"probes", tf.check.probes}};
  out.results["measure"] = measure;
  out.checks.push_back({"divergence", std::max(div_x, div_y), spec.tolerance("divergence", 1e-14)});
  out.checks.push_back({"tangent.x", tf.check.x_residual, cfg.tangent_tolerance});
  out.checks.push_back({"tangent.y", tf.check.y_residual, cfg.tangent_tolerance});
  out.checks.push_back({"measure", worst_measure, spec.tolerance("measure", 1e-9)});

  if (cfg.pairs > 0) {
    if (dim != 2) fail(ErrorCode::SpecInvalid, "flow_tangent probes are laid out on T²");
    std::vector<double> errors(static_cast<std::size_t>(cfg.pairs));
    std::vector<int> nodes(errors.size());
    parallel_for(errors.size(), [&](std::size_t i) {
      const std::uint64_t sx = spec.seed + 2 * i, sp = spec.seed + 2 * i + 1;
      const TrigField x = random_divfree(2, sx, cfg.pair_options);
      const TrigField xp = random_divfree(2, sp, cfg.pair_options);
      const FlowTangent xbar(x, xp, cfg.panels);
      nodes[i] = xbar.nodes();
      double worst = 0.0;
      for (int a = 0; a < cfg.probe_resolution; ++a)
        for (int b = 0; b < cfg.probe_resolution; ++b) {
          Vec p(2);
          p << 2.0 * std::numbers::pi * a / cfg.probe_resolution, 2.0 * std::numbers::pi * b / cfg.probe_resolution;
          worst = std::max(worst, (xbar.value(p) - flow_tangent_fd(x, xp, p, cfg.fd_h)).cwiseAbs().maxCoeff());
        }
      errors[i] = worst;
    });
    Json pairs = Json::array();
    for (std::size_t i = 0; i < errors.size(); ++i)
      pairs.push_back(Json{{"x_seed", spec.seed + 2 * i}, {"x_prime_seed", spec.seed + 2 * i + 1}, {"sup_error", errors[i]}, {"nodes", nodes[i]}});
    const double worst = *std::max_element(errors.begin(), errors.end());
    out.results["flow_tangent"] = Json{{"pairs", pairs}, {"probe_resolution", cfg.probe_resolution}, {"h", cfg.fd_h}, {"max_error", worst}};
    out.checks.push_back({"flow_tangent.sup_error", worst, spec.tolerance("flow_tangent", 1e-6)});
  }
  return out;
}

}  // namespace lyaplab::detail
