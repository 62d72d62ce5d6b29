// matrix-deriv: closed-form derivatives of log η against a full-eigensolve oracle.
#include <cmath>
#include <fstream>
#include <sstream>

#include "lyaplab/errors.hpp"
#include "lyaplab/matrix_lab.hpp"
#include "spec_reader.hpp"

namespace lyaplab::detail {
namespace {

using Eigen::MatrixXd;

struct MatrixCase {
  std::string label;
  MatrixXd a, x, y;
  std::optional<double> seed_eigenvalue;
  std::optional<double> expected_d2log;
  bool in_fd_suite = true;
  std::optional<std::uint64_t> seed;
};

struct MatrixConfig {
  std::vector<MatrixCase> cases;
  double fd_step = 1e-3;
};

// Row-major decimal text; the count must be a square.
std::optional<MatrixXd> parse_matrix_text(const std::string& text) {
  std::istringstream is(text);
  std::vector<double> values;
  std::string token;
  while (is >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(values.size()))));
  if (n < 1 || static_cast<std::size_t>(n * n) != values.size()) return std::nullopt;
  MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = values[static_cast<std::size_t>(i * n + j)];
  return m;
}

// Blank-line separated blocks A, 𝔛 and optionally 𝔜; '#' starts a comment line.
std::vector<std::string> split_blocks(const std::string& text) {
  std::vector<std::string> blocks;
  std::istringstream is(text);
  std::string line, current;
  auto flush = [&] {
    if (current.find_first_not_of(" \t\r\n") != std::string::npos) blocks.push_back(current);
    current.clear();
  };
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] == '#') continue;
    if (first == std::string::npos) {
      flush();
      continue;
    }
    current += line + "\n";
  }
  flush();
  return blocks;
}

MatrixConfig read_matrix_config(const ExperimentSpec& spec, Problems& problems) {
  const SpecReader params(&spec.params, "params", problems);
  MatrixConfig cfg;
  cfg.fd_step = params.positive("fd_step", cfg.fd_step);

  if (params.has("random")) {
    const SpecReader rnd = params.child("random");
    const int count = rnd.integer("count");
    const std::vector<int> dims = rnd.integers("dims", {2, 3, 4, 6});
    if (count < 1) rnd.problem("count", "must be at least 1");
    for (int d : dims)
      if (d < 2 || d > 16) rnd.problem("dims", "dimensions must lie in [2, 16]");
    if (problems.empty()) {
      for (int i = 0; i < count; ++i) {
        const int dim = dims[static_cast<std::size_t>(i) % dims.size()];
        const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(i);
        RandomMatrixInstance inst = random_matrix_family(dim, seed);
        MatrixCase c;
        c.label = "random-" + std::to_string(i);
        c.a = inst.family.base;
        c.x = inst.family.first;
        c.y = inst.family.second;
        c.seed_eigenvalue = inst.seed_eigenvalue;
        c.seed = seed;
        cfg.cases.push_back(std::move(c));
      }
    }
  }

  if (params.has("rotation_cases")) {
    const Json& rc = *params.raw("rotation_cases");
    bool ok = rc.is_array() && !rc.empty();
    for (std::size_t i = 0; ok && i < rc.size(); ++i) {
      const Json& pair = rc[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        ok = false;
        break;
      }
      const double eta = pair[0].get<double>(), nu = pair[1].get<double>();
      if (eta == nu || eta == 0.0 || nu == 0.0) {
        params.problem("rotation_cases", "each pair needs distinct nonzero η, ν");
        continue;
      }
      MatrixCase c;
      c.label = "rotation-" + std::to_string(i);
      c.a = MatrixXd::Zero(2, 2);
      c.a(0, 0) = eta;
      c.a(1, 1) = nu;
      c.x = MatrixXd(2, 2);
      c.x << 0.0, -1.0, 1.0, 0.0;
      c.y = MatrixXd::Zero(2, 2);
      c.seed_eigenvalue = eta;
      c.expected_d2log = (eta + nu) / (nu - eta);
      c.in_fd_suite = false;
      cfg.cases.push_back(std::move(c));
    }
    if (!ok) params.problem("rotation_cases", "expected an array of [η, ν] pairs");
  }

  auto add_text_family = [&](const std::string& where, const std::string& label, const std::vector<std::string>& texts,
                             std::optional<double> seed_eig) {
    std::vector<MatrixXd> mats;
    for (std::size_t k = 0; k < texts.size(); ++k) {
      const auto m = parse_matrix_text(texts[k]);
      if (!m) {
        problems.add(where + ": matrix " + std::to_string(k) + " is not a square block of decimals");
        return;
      }
      mats.push_back(*m);
    }
    if (mats.size() < 2 || mats.size() > 3) {
      problems.add(where + ": expected A, X and optionally Y");
      return;
    }
    for (const auto& m : mats)
      if (m.rows() != mats[0].rows()) {
        problems.add(where + ": matrices differ in size");
        return;
      }
    MatrixCase c;
    c.label = label;
    c.a = mats[0];
    c.x = mats[1];
    c.y = mats.size() == 3 ? mats[2] : MatrixXd::Zero(mats[0].rows(), mats[0].cols());
    c.seed_eigenvalue = seed_eig;
    cfg.cases.push_back(std::move(c));
  };

  for (const SpecReader& fam : params.items("families")) {
    std::vector<std::string> texts{fam.text("A"), fam.text("X")};
    if (fam.has("Y")) texts.push_back(fam.text("Y"));
    const std::optional<double> seed_eig = fam.has("seed_eigenvalue") ? std::optional(fam.number("seed_eigenvalue")) : std::nullopt;
    if (problems.empty()) add_text_family(fam.path(), fam.text("label", fam.path()), texts, seed_eig);
  }

  if (params.has("family_file")) {
    const auto path = spec.resolve(params.text("family_file"));
    std::ifstream is(path);
    if (!is) {
      params.problem("family_file", "cannot open " + path.string());
    } else {
      std::stringstream ss;
      ss << is.rdbuf();
      add_text_family("params.family_file", path.filename().string(), split_blocks(ss.str()), std::nullopt);
    }
  }

  if (!params.has("random") && !params.has("rotation_cases") && !params.has("families") && !params.has("family_file"))
    problems.add("params: needs one of random, rotation_cases, families, family_file");
  return cfg;
}

// Largest-modulus real eigenvalue, the default seed.
double default_seed(const MatrixXd& a) {
  const Eigen::EigenSolver<MatrixXd> es(a, false);
  double best = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-10 * std::max(1.0, std::abs(z)) && std::abs(z.real()) > std::abs(best)) best = z.real();
  }
  if (best == 0.0) fail(ErrorCode::EigenComplex, "no real eigenvalue to seed from");
  return best;
}

double relative(double err, double ref) { return err == 0.0 ? 0.0 : err / std::abs(ref); }

}  // namespace

void validate_matrix(const ExperimentSpec& spec, Problems& p) { read_matrix_config(spec, p); }

ExperimentResult run_matrix(const ExperimentSpec& spec) {
  Problems problems;
  const MatrixConfig cfg = read_matrix_config(spec, problems);
  problems.throw_if_any("spec '" + spec.name + "'");

  ExperimentResult out;
  Json instances = Json::array();
  double worst_dlog = 0.0, worst_d2log = 0.0, worst_closed = 0.0;
  int fd_cases = 0, closed_cases = 0;
  for (const MatrixCase& c : cfg.cases) {
    const MatrixFamilyTangent fam(c.a, c.x, c.y);
    const double seed_eig = c.seed_eigenvalue ? *c.seed_eigenvalue : default_seed(c.a);
    const SimpleEigenData eig = continue_simple_eigen(c.a, seed_eig);
    const double dlog = dlog_eta(fam, eig);
    const double d2log = d2log_eta(fam, eig);
    const Eigen::VectorXd vp = v_prime(fam, eig);
    const MatrixFdEstimate fd = matrix_fd_oracle(fam, eig.eta, cfg.fd_step);
    const double err1 = std::abs(dlog - fd.dlog), err2 = std::abs(d2log - fd.d2log);

    Json rec{{"label", c.label},
             {"dim", c.a.rows()},
             {"eta", eig.eta},
             {"dlog_eta", dlog},
             {"d2log_eta", d2log},
             {"v_prime", to_json(vp)},
             {"fd_dlog", fd.dlog},
             {"fd_d2log", fd.d2log},
             {"abs_err", Json{{"dlog", err1}, {"d2log", err2}}},
             {"rel_err", Json{{"dlog", relative(err1, fd.dlog)}, {"d2log", relative(err2, fd.d2log)}}}};
    if (c.seed) rec["seed"] = *c.seed;
    if (c.in_fd_suite) {
      ++fd_cases;
      worst_dlog = std::max(worst_dlog, relative(err1, fd.dlog));
      worst_d2log = std::max(worst_d2log, relative(err2, fd.d2log));
    }
    if (c.expected_d2log) {
      ++closed_cases;
      const double e = std::abs(d2log - *c.expected_d2log);
      rec["closed_form"] = Json{{"d2log_eta", *c.expected_d2log}, {"abs_err", e}};
      worst_closed = std::max(worst_closed, e);
    }
    instances.push_back(std::move(rec));
  }

  out.results["instances"] = instances;
  out.results["fd_step"] = cfg.fd_step;
  if (fd_cases > 0) {
    out.results["fd_suite"] = Json{{"count", fd_cases}, {"max_rel_err_dlog", worst_dlog}, {"max_rel_err_d2log", worst_d2log}};
    out.checks.push_back({"dlog.max_rel_err", worst_dlog, spec.tolerance("dlog_rel", 1e-6)});
    out.checks.push_back({"d2log.max_rel_err", worst_d2log, spec.tolerance("d2log_rel", 1e-4)});
  }
  if (closed_cases > 0) {
    out.results["closed_form"] = Json{{"count", closed_cases}, {"max_abs_err", worst_closed}};
    out.checks.push_back({"closed_form.max_abs_err", worst_closed, spec.tolerance("closed_form", 1e-10)});
  }
  return out;
}

}  // namespace lyaplab::detail
