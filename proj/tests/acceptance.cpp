// Acceptance driver: runs `lyaplab reproduce-all` twice, then re-checks every
// criterion from the written reports with fixed tolerances and runtime budgets.
// Prints one PASS/FAIL line per criterion; exits 0 only if all pass.
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Verdict {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

class Runs {
 public:
  Runs(fs::path dir, std::map<std::string, double> seconds) : dir_(std::move(dir)), seconds_(std::move(seconds)) {}

  Json report(const std::string& name) const {
    const fs::path p = dir_ / (name + ".json");
    if (!fs::exists(p)) throw std::runtime_error("missing report " + p.string());
    return Json::parse(slurp(p));
  }
  double seconds(const std::string& name) const {
    const auto it = seconds_.find(name);
    if (it == seconds_.end()) throw std::runtime_error("no timing for " + name);
    return it->second;
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::map<std::string, double> seconds_;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void budget(Verdict& v, const Runs& runs, const std::string& name, double limit) {
  const double s = runs.seconds(name);
  v.require(s < limit, "runtime " + num(s) + " s >= " + num(limit) + " s");
}

void passed_flag(Verdict& v, const Json& r) {
  v.require(r.value("passed", false), "report not passed");
  v.require(!r.contains("error"), "report error: " + r.value("error", std::string()));
}

Verdict ac1(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac01_matrix_suite");
  passed_flag(v, r);
  std::set<int> dims;
  double dlog = 0.0, d2log = 0.0;
  int count = 0;
  for (const Json& inst : r["results"]["instances"]) {
    dims.insert(inst["dim"].get<int>());
    dlog = std::max(dlog, inst["rel_err"]["dlog"].get<double>());
    d2log = std::max(d2log, inst["rel_err"]["d2log"].get<double>());
    ++count;
  }
  v.require(count == 200, "instances " + std::to_string(count));
  v.require(dims == std::set<int>{2, 3, 4, 6}, "dimension set");
  v.require(dlog <= 1e-6, "dlog rel err " + num(dlog));
  v.require(d2log <= 1e-4, "d2log rel err " + num(d2log));
  budget(v, runs, "ac01_matrix_suite", 10.0);
  v.detail = "max rel err dlog " + num(dlog) + ", d2log " + num(d2log) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac2(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac02_rotation");
  passed_flag(v, r);
  const std::vector<std::pair<double, double>> want{{2, 0.5}, {3, -1}, {1.5, 0.2}};
  const Json& inst = r["results"]["instances"];
  v.require(inst.size() == want.size(), "case count");
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(inst.size(), want.size()); ++i) {
    const auto [eta, nu] = want[i];
    const double err = std::abs(inst[i]["d2log_eta"].get<double>() - (eta + nu) / (nu - eta));
    worst = std::max(worst, err);
  }
  v.require(worst <= 1e-10, "abs err " + num(worst));
  budget(v, runs, "ac02_rotation", 1.0);
  v.detail = "max abs err " + num(worst) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac3(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac03_criticality");
  passed_flag(v, r);
  v.require(r["params"]["resolution"] == 128, "lattice is not 128²");
  std::set<double> steps;
  double first = 0.0, slope = 0.0;
  const Json& fams = r["results"]["families"];
  v.require(fams.size() == 20, "family count");
  for (const Json& f : fams) {
    first = std::max({first, std::abs(f["lambda_prime_F"].get<double>()), std::abs(f["lambda_prime_E"].get<double>())});
    for (const Json& s : f["fd"]["slope"]["slopes"]) slope = std::max(slope, std::abs(s.get<double>()));
    for (const Json& h : f["fd"]["slope"]["steps"]) steps.insert(h.get<double>());
  }
  v.require(steps == std::set<double>{0.01, 0.02, 0.04}, "FD steps");
  v.require(first <= 1e-8, "|λ'(0)| " + num(first));
  v.require(slope <= 1e-3, "FD slope " + num(slope));
  budget(v, runs, "ac03_criticality", 120.0);
  v.detail = "max |λ'(0)| " + num(first) + ", max |FD slope| " + num(slope) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac4(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac04_second_derivative");
  passed_flag(v, r);
  const Json& fams = r["results"]["families"];
  v.require(fams.size() == 5, "family count");
  double worst = 0.0;
  for (const Json& f : fams) {
    const double formula = f["lambda_second"]["value"].get<double>();
    const double fit = f["fd"]["second"]["parabola"].get<double>();
    worst = std::max(worst, std::abs(formula - fit) / std::abs(fit));
  }
  v.require(worst <= 0.05, "rel err " + num(worst));
  budget(v, runs, "ac04_second_derivative", 600.0);
  v.detail = "max rel err " + num(worst) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac5(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac05_vprime");
  passed_flag(v, r);
  double ratio = 0.0, fd = 0.0;
  for (const Json& f : r["results"]["families"]) {
    const Json& vp = f["vprime"];
    ratio = std::max(ratio, vp["residual"].get<double>() / (2.0 * vp["tail_bound"].get<double>()));
    fd = std::max(fd, vp["fd_error"].get<double>());
    v.require(vp["fd_t"].get<double>() == 1e-3, "FD step is not 1e-3");
  }
  v.require(!r["results"]["families"].empty(), "no families");
  v.require(ratio <= 1.0, "residual / 2ν^N‖𝒫L_XV‖ = " + num(ratio));
  v.require(fd <= 1e-4, "FD error " + num(fd));
  v.detail = "residual/bound " + num(ratio) + ", FD error " + num(fd) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac6(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac06_bump_sweep");
  passed_flag(v, r);
  v.require(r["results"].value("oracle_resolution", 0) == 256, "oracle lattice is not 256²");
  std::set<double> radii;
  double smallest = 1.0;
  Json last;
  for (const Json& x : r["results"]["radii"]) {
    const double rad = x["r"].get<double>();
    radii.insert(rad);
    v.require(x["E3"]["lambda_second"].get<double>() < 0.0 && x["E2"]["lambda_second"].get<double>() > 0.0,
              "formula sign at r=" + num(rad));
    v.require(x["E3"]["oracle"]["stencil"].get<double>() < 0.0 && x["E2"]["oracle"]["stencil"].get<double>() > 0.0,
              "oracle sign at r=" + num(rad));
    v.require(!x["return"]["periodic"].get<bool>(), "periodic center");
    if (rad < smallest) {
      smallest = rad;
      last = x;
    }
  }
  v.require(radii == std::set<double>{0.2, 0.14, 0.1, 0.07}, "radius set");
  double e2 = 1.0, e3 = 1.0, o2 = 1.0, o3 = 1.0;
  if (!last.is_null()) {
    const double k = last["K"].get<double>();
    e2 = std::abs(last["E2"]["ratio"].get<double>() - k) / k;
    e3 = std::abs(last["E3"]["ratio"].get<double>() + k) / k;
    o2 = std::abs(last["E2"]["oracle"]["ratio"].get<double>() - k) / k;
    o3 = std::abs(last["E3"]["oracle"]["ratio"].get<double>() + k) / k;
  }
  v.require(std::max(e2, e3) <= 0.15, "formula ratio vs K " + num(std::max(e2, e3)));
  v.require(std::max(o2, o3) <= 0.15, "oracle ratio vs K " + num(std::max(o2, o3)));
  budget(v, runs, "ac06_bump_sweep", 1800.0);
  v.detail = "at r=" + num(smallest) + " formula rel " + num(std::max(e2, e3)) + ", oracle rel " + num(std::max(o2, o3)) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac7(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac07_convolution_regularity");
  passed_flag(v, r);
  v.require(r["results"]["n_max"] == 1 << 20, "n_max is not 2^20");
  std::map<std::string, Json> cases;
  for (const Json& c : r["results"]["cases"]) cases[c["label"].get<std::string>()] = c;
  std::string summary;
  for (const auto& [label, sum] : std::vector<std::pair<std::string, double>>{{"a0.3_b0.4", 0.7}, {"a0.2_b0.5", 0.7}, {"a0.6_b0.3", 0.9}}) {
    if (!cases.contains(label)) {
      v.require(false, "missing " + label);
      continue;
    }
    const double a = cases[label]["estimate"]["alpha"].get<double>();
    v.require(std::abs(a - sum) <= 0.07, label + " alpha " + num(a));
    summary += label + " α=" + num(a) + " ";
  }
  if (cases.contains("a0.5_b0.5")) {
    v.require(cases["a0.5_b0.5"]["estimate"]["zygmund"].get<bool>(), "(0.5,0.5) not Zygmund");
    v.require(!cases["a0.5_b0.5"]["estimate"]["lipschitz"].get<bool>(), "(0.5,0.5) passes Lipschitz");
  } else {
    v.require(false, "missing a0.5_b0.5");
  }
  if (cases.contains("a0.6_b0.6")) {
    const Json& q = cases["a0.6_b0.6"]["derivative_quotient"];
    v.require(q["exponent"].get<double>() == 0.2 && q["passed"].get<bool>(), "(0.6,0.6) derivative quotient");
  } else {
    v.require(false, "missing a0.6_b0.6");
  }
  budget(v, runs, "ac07_convolution_regularity", 30.0);
  v.detail = summary + (v.detail.empty() ? "" : "| " + v.detail);
  return v;
}

Verdict ac8(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac08_counterexample");
  passed_flag(v, r);
  double worst = 0.0;
  int rows = 0;
  for (const Json& row : r["results"]["cases"][0]["amplitudes"]) {
    const int n = row["j"].get<int>();
    if (n > 6) continue;
    v.require(row["frequency"].get<long long>() == (1LL << (2 * n)), "frequency at n=" + std::to_string(n));
    worst = std::max(worst, std::abs(row["amplitude"].get<double>() - std::numbers::pi * std::pow(2.0, -2.0 * n)));
    ++rows;
  }
  v.require(rows == 7, "rows " + std::to_string(rows));
  v.require(worst <= 1e-12, "abs err " + num(worst));
  budget(v, runs, "ac08_counterexample", 5.0);
  v.detail = "max abs err " + num(worst) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ac9(const Runs& runs) {
  Verdict v;
  const Json r = runs.report("ac09_flow_tangent");
  passed_flag(v, r);
  const Json& ft = r["results"]["flow_tangent"];
  v.require(ft["pairs"].size() == 5, "pair count");
  v.require(ft["probe_resolution"] == 32, "probe grid is not 32²");
  double worst = 0.0;
  for (const Json& p : ft["pairs"]) worst = std::max(worst, p["sup_error"].get<double>());
  v.require(worst <= 1e-6, "sup error " + num(worst));
  budget(v, runs, "ac09_flow_tangent", 60.0);
  v.detail = "max sup error " + num(worst) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// Every report with splittings, plus byte-identical reruns.
Verdict ac10(const Runs& run1, const fs::path& run2) {
  Verdict v;
  int reports = 0, splittings = 0;
  double sum = 0.0, pair = 0.0, inv = 0.0;
  for (const auto& e : fs::directory_iterator(run1.dir())) {
    if (e.path().extension() != ".json" || e.path().filename() == "index.json") continue;
    const Json r = Json::parse(slurp(e.path()));
    if (!r.contains("conservation")) continue;
    ++reports;
    const Json& c = r["conservation"];
    splittings += c["splittings"].get<int>();
    sum = std::max(sum, c["sum_residual"].get<double>());
    pair = std::max(pair, c["pair_residual"].get<double>());
    inv = std::max(inv, c["invariance_residual"].get<double>());
  }
  v.require(reports >= 1, "no report computed a splitting");
  v.require(sum <= 1e-8, "sum rule " + num(sum));
  v.require(pair <= 1e-10, "ω(V)−1 " + num(pair));
  v.require(inv <= 1e-8, "invariance " + num(inv));
  v.require(run1.report("ac10_conservation").value("passed", false), "ac10 report not passed");

  std::set<std::string> names1, names2;
  for (const auto& e : fs::recursive_directory_iterator(run1.dir()))
    if (e.is_regular_file()) names1.insert(fs::relative(e.path(), run1.dir()).string());
  for (const auto& e : fs::recursive_directory_iterator(run2))
    if (e.is_regular_file()) names2.insert(fs::relative(e.path(), run2).string());
  v.require(names1 == names2, "file sets differ between runs");
  int differing = 0;
  for (const auto& n : names1)
    if (names2.contains(n) && slurp(run1.dir() / n) != slurp(run2 / n)) ++differing;
  v.require(differing == 0, std::to_string(differing) + " files differ between runs");
  v.detail = std::to_string(splittings) + " splittings in " + std::to_string(reports) + " reports, sum " + num(sum) + ", pair " +
             num(pair) + ", invariance " + num(inv) + ", " + std::to_string(names1.size()) + " files identical" +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// "<name> <kind> exit=<c> seconds=<s>" lines written by reproduce-all.
std::map<std::string, double> parse_timings(const fs::path& log) {
  std::map<std::string, double> out;
  std::istringstream is(slurp(log));
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string name, kind, code, secs;
    if (!(ls >> name >> kind >> code >> secs)) continue;
    if (code.rfind("exit=", 0) != 0 || secs.rfind("seconds=", 0) != 0) continue;
    out[name] = std::stod(secs.substr(8));
  }
  return out;
}

int run_cli(const std::string& cli, const fs::path& experiments, const fs::path& out, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" reproduce-all --experiments \"" + experiments.string() + "\" --out \"" + out.string() +
                          "\" 2> \"" + log.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance driver"};
  std::string experiments, cli, workdir;
  app.add_option("--experiments", experiments)->required();
  app.add_option("--cli", cli)->required();
  app.add_option("--workdir", workdir)->required();
  CLI11_PARSE(app, argc, argv);

  const fs::path work(workdir);
  fs::remove_all(work);
  fs::create_directories(work);
  const int code1 = run_cli(cli, experiments, work / "run1", work / "run1.log");
  const int code2 = run_cli(cli, experiments, work / "run2", work / "run2.log");
  std::cout << "reproduce-all exit codes: " << code1 << ", " << code2 << "\n";
  std::cout << slurp(work / "run1.log");

  const Runs runs(work / "run1", parse_timings(work / "run1.log"));
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"AC1 matrix derivative suite", [&] { return ac1(runs); }},
      {"AC2 rotation closed form", [&] { return ac2(runs); }},
      {"AC3 criticality of the cat map", [&] { return ac3(runs); }},
      {"AC4 second derivative vs oracle", [&] { return ac4(runs); }},
      {"AC5 V' validation", [&] { return ac5(runs); }},
      {"AC6 bump non-flatness", [&] { return ac6(runs); }},
      {"AC7 convolution regularity", [&] { return ac7(runs); }},
      {"AC8 counterexample coefficients", [&] { return ac8(runs); }},
      {"AC9 flow tangent", [&] { return ac9(runs); }},
      {"AC10 conservation and determinism", [&] { return ac10(runs, work / "run2"); }},
  };
  int failed = 0;
  for (const auto& [label, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = e.what();
    }
    failed += !v.ok;
    std::cout << (v.ok ? "PASS " : "FAIL ") << label << ": " << v.detail << "\n";
  }
  if (code1 != 0 || code2 != 0) {
    std::cout << "FAIL reproduce-all returned nonzero\n";
    ++failed;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " failing") << "\n";
  return failed == 0 ? 0 : 1;
}
