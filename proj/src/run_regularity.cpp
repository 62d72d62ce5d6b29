// conv-regularity: block-decay exponents of circle convolutions.
#include <cmath>
#include <numbers>

#include "lyaplab/errors.hpp"
#include "lyaplab/regularity.hpp"
#include "spec_reader.hpp"

namespace lyaplab::detail {
namespace {

struct Expectation {
  std::optional<double> alpha;
  double band = 0.07;
  std::optional<bool> zygmund;
  std::optional<bool> lipschitz;
};

struct RegularityCase {
  std::string label;
  std::vector<double> exponents;           // one generator, or a convolved pair
  std::optional<int> terms;
  std::vector<std::filesystem::path> files;  // alternative to exponents
  Expectation expect;
  std::optional<double> quotient_exponent;
  double quotient_tolerance = 0.05;
  bool amplitude_table = false;
};

struct RegularityConfig {
  int n_max = SpectralSeries::kDefaultMax;
  int lacunarity = 4;
  double noise_floor = 1e-13;
  std::vector<RegularityCase> cases;
};

bool safe_label(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) return false;
  return true;
}

RegularityConfig read_regularity_config(const ExperimentSpec& spec, Problems& problems) {
  const SpecReader params(&spec.params, "params", problems);
  RegularityConfig cfg;
  cfg.n_max = params.integer("n_max", cfg.n_max);
  cfg.lacunarity = params.integer("lacunarity", cfg.lacunarity);
  cfg.noise_floor = params.positive("noise_floor", cfg.noise_floor);
  if (cfg.n_max < 1024) params.problem("n_max", "must be at least 1024");
  if (cfg.lacunarity < 2) params.problem("lacunarity", "must be at least 2");
  if (!params.has("cases")) params.problem("cases", "missing");

  for (const SpecReader& c : params.items("cases")) {
    RegularityCase rc;
    rc.label = c.text("label");
    if (!rc.label.empty() && !safe_label(rc.label)) c.problem("label", "use letters, digits, '.', '_' or '-'");
    for (const auto& other : cfg.cases)
      if (other.label == rc.label) c.problem("label", "duplicate");
    if (c.has("alpha")) {
      rc.exponents.push_back(c.number("alpha"));
      if (c.has("beta")) rc.exponents.push_back(c.number("beta"));
      for (double a : rc.exponents)
        if (!(a > 0.0 && a < 1.0)) c.problem("alpha", "generator exponents must lie in (0, 1)");
      if (c.has("terms")) {
        rc.terms = c.integer("terms");
        if (*rc.terms < 1) c.problem("terms", "must be at least 1");
      }
    } else if (c.has("file")) {
      rc.files.push_back(spec.resolve(c.text("file")));
    } else if (c.has("files")) {
      const Json& fs = *c.raw("files");
      if (!fs.is_array() || fs.size() != 2 || !fs[0].is_string() || !fs[1].is_string()) c.problem("files", "expected two paths");
      else
        for (const auto& f : fs) rc.files.push_back(spec.resolve(f.get<std::string>()));
    } else {
      problems.add(c.path() + ": needs alpha (and beta), file, or files");
    }
    for (const auto& f : rc.files)
      if (!std::filesystem::exists(f)) c.problem("file", "not found: " + f.string());

    if (c.has("expect")) {
      const SpecReader e = c.child("expect");
      if (e.has("alpha")) rc.expect.alpha = e.number("alpha");
      rc.expect.band = e.positive("band", rc.expect.band);
      if (e.has("zygmund")) rc.expect.zygmund = e.boolean("zygmund", false);
      if (e.has("lipschitz")) rc.expect.lipschitz = e.boolean("lipschitz", false);
    }
    if (c.has("derivative_quotient")) {
      const SpecReader q = c.child("derivative_quotient");
      rc.quotient_exponent = q.number("exponent");
      rc.quotient_tolerance = q.positive("tolerance", rc.quotient_tolerance);
    }
    rc.amplitude_table = c.boolean("amplitude_table", false);
    if (rc.amplitude_table && rc.exponents.size() != 2) c.problem("amplitude_table", "needs a generator pair alpha, beta");
    cfg.cases.push_back(std::move(rc));
  }
  return cfg;
}

SpectralSeries build(const RegularityCase& c, const RegularityConfig& cfg) {
  if (!c.exponents.empty()) {
    const int terms = c.terms ? *c.terms : weierstrass_terms(cfg.lacunarity, cfg.n_max);
    SpectralSeries h = weierstrass(c.exponents[0], cfg.lacunarity, terms, cfg.n_max);
    if (c.exponents.size() == 2) h = convolve(h, weierstrass(c.exponents[1], cfg.lacunarity, terms, cfg.n_max));
    return h;
  }
  SpectralSeries h = SpectralSeries::load(c.files[0].string(), cfg.n_max);
  if (c.files.size() == 2) h = convolve(h, SpectralSeries::load(c.files[1].string(), cfg.n_max));
  return h;
}

Json describe(const RegularityEstimate& est) {
  return Json{{"alpha", est.alpha},
              {"alpha_stderr", est.alpha_stderr},
              {"band", est.band},
              {"intercept", est.intercept},
              {"derivative_slope", est.derivative_slope},
              {"blocks", est.blocks.size()},
              {"zygmund_tested", est.zygmund_tested},
              {"zygmund", est.zygmund},
              {"lipschitz", est.lipschitz}};
}

Check flag_check(const std::string& name, bool actual, bool expected) {
  // 1 when the flag has the expected value.
  return Check{name, actual == expected ? 1.0 : 0.0, 1.0, false};
}

}  // namespace

void validate_regularity(const ExperimentSpec& spec, Problems& p) { read_regularity_config(spec, p); }

ExperimentResult run_regularity(const ExperimentSpec& spec) {
  Problems problems;
  const RegularityConfig cfg = read_regularity_config(spec, problems);
  problems.throw_if_any("spec '" + spec.name + "'");

  ExperimentResult out;
  Json cases = Json::array();
  for (const RegularityCase& c : cfg.cases) {
    const SpectralSeries h = build(c, cfg);
    Json rec{{"label", c.label}, {"max_frequency", h.max_frequency()}, {"support", h.support().size()}};
    if (!c.exponents.empty()) {
      rec["generators"] = c.exponents;
      rec["terms"] = c.terms ? *c.terms : weierstrass_terms(cfg.lacunarity, cfg.n_max);
    } else {
      Json names = Json::array();
      for (const auto& f : c.files) names.push_back(f.filename().string());
      rec["files"] = names;
    }
    if (h.declared_regularity) rec["declared_regularity"] = *h.declared_regularity;

    const bool wants_estimate = c.expect.alpha || c.expect.zygmund || c.expect.lipschitz || !c.amplitude_table;
    if (wants_estimate) {
      const RegularityEstimate est = estimate_holder(h, cfg.noise_floor);
      rec["estimate"] = describe(est);
      CsvTable blocks({"k", "S_k"});
      for (const DyadicBlock& b : est.blocks) blocks.add_row({static_cast<double>(b.k), b.energy});
      out.tables[c.label + "_blocks"] = std::move(blocks);
      if (c.expect.alpha) {
        rec["expected_alpha"] = *c.expect.alpha;
        out.checks.push_back({c.label + ".alpha_err", std::abs(est.alpha - *c.expect.alpha), c.expect.band});
      }
      if (c.expect.zygmund) out.checks.push_back(flag_check(c.label + ".zygmund", est.zygmund, *c.expect.zygmund));
      if (c.expect.lipschitz) out.checks.push_back(flag_check(c.label + ".lipschitz", est.lipschitz, *c.expect.lipschitz));
    }

    if (c.quotient_exponent) {
      const QuotientTest q = holder_quotient_test(h.derivative(), *c.quotient_exponent, c.quotient_tolerance);
      rec["derivative_quotient"] = Json{{"exponent", q.exponent},
                                        {"steps", q.steps},
                                        {"quotients", q.quotients},
                                        {"growth", q.growth},
                                        {"passed", q.passed}};
      out.checks.push_back({c.label + ".quotient_growth", q.growth, c.quotient_tolerance});
    }

    if (c.amplitude_table) {
      // convolve(W_α, W_β) has amplitude π·L^{−(α+β)j} at frequency L^j.
      const double sum = c.exponents[0] + c.exponents[1];
      Json table = Json::array();
      double worst = 0.0;
      int j = 0;
      for (long long freq = 1; freq <= h.max_frequency(); freq *= cfg.lacunarity, ++j) {
        const int n = static_cast<int>(freq);
        const double expected = std::numbers::pi * std::pow(static_cast<double>(cfg.lacunarity), -sum * j);
        const double amp = h.amplitude(n);
        worst = std::max(worst, std::abs(amp - expected));
        table.push_back(Json{{"j", j},
                             {"frequency", n},
                             {"amplitude", amp},
                             {"expected", expected},
                             {"abs_err", std::abs(amp - expected)},
                             {"coefficient", Json::array({h[n].real(), h[n].imag()})}});
      }
      rec["amplitudes"] = table;
      out.checks.push_back({c.label + ".amplitude_err", worst, spec.tolerance("amplitude", 1e-12)});
    }
    cases.push_back(std::move(rec));
  }
  out.results["cases"] = cases;
  out.results["n_max"] = cfg.n_max;
  out.results["lacunarity"] = cfg.lacunarity;
  return out;
}

}  // namespace lyaplab::detail
