#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <set>
#include <string>

#include "doctest.h"
#include "lyaplab/errors.hpp"
#include "lyaplab/experiment.hpp"
#include "test_support.hpp"

using namespace lyaplab;
using testsupport::thrown_code;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lyaplab_runner_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string spec_error_text(const Json& doc, std::optional<ExperimentKind> hint = std::nullopt) {
  try {
    parse_spec(doc, "probe", hint);
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::SpecInvalid);
    return e.what();
  }
  FAIL("spec was accepted");
  return {};
}

Json small_matrix_spec() {
  return Json::parse(R"({"kind": "matrix-deriv", "seed": 7, "params": {"random": {"count": 6}}})");
}

Json small_lyap_spec() {
  return Json::parse(R"({
    "kind": "lyap", "seed": 3,
    "params": {"x": {"random": {"amplitude": 0.05}}, "t": [0, 0.05], "resolution": 16}
  })");
}

std::string run_to_text(const Json& doc, const fs::path& dir) {
  const ExperimentSpec spec = parse_spec(doc, "det");
  CHECK(run_and_write(spec, dir) == 0);
  return read_text_file(dir / "det.json");
}

int cli_status(const std::string& args) {
  const char* cli = std::getenv("LYAPLAB_CLI");
  REQUIRE(cli != nullptr);
  const int raw = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("an empty spec lists every missing field") {
  const std::string msg = spec_error_text(Json::object());
  CHECK(msg.find("kind: missing") != std::string::npos);
  CHECK(msg.find("seed: missing") != std::string::npos);
  CHECK(msg.find("params: missing") != std::string::npos);
}

TEST_CASE("unknown fields, bad seeds and negative tolerances are rejected") {
  const std::string msg = spec_error_text(Json::parse(
      R"({"kind": "matrix-deriv", "seed": -1, "params": {"rotation_cases": [[2, 0.5]]}, "tolerances": {"dlog_rel": -1}, "colour": 1})"));
  CHECK(msg.find("colour: unknown field") != std::string::npos);
  CHECK(msg.find("seed: expected a non-negative integer") != std::string::npos);
  CHECK(msg.find("tolerances.dlog_rel") != std::string::npos);
}

TEST_CASE("the subcommand kind fills a missing kind and rejects a conflicting one") {
  Json doc = small_matrix_spec();
  doc.erase("kind");
  CHECK(parse_spec(doc, "x", ExperimentKind::matrix_deriv).kind == ExperimentKind::matrix_deriv);
  const std::string msg = spec_error_text(small_matrix_spec(), ExperimentKind::lyap);
  CHECK(msg.find("subcommand is lyap") != std::string::npos);
}

TEST_CASE("kind-specific parameter problems are reported together with their paths") {
  const std::string msg = spec_error_text(Json::parse(R"({
    "kind": "lyap-deriv", "seed": 1,
    "params": {"fields": {"count": 0}, "ts": [0, 0.01], "resolution": 4, "grouping": {"blocks": [1, 2], "target": 0}}
  })"));
  CHECK(msg.find("params.fields.count") != std::string::npos);
  CHECK(msg.find("params.ts") != std::string::npos);
  CHECK(msg.find("params.resolution") != std::string::npos);
  CHECK(msg.find("params.grouping") != std::string::npos);
}

TEST_CASE("regularity cases need unique filename-safe labels") {
  const std::string msg = spec_error_text(Json::parse(R"({
    "kind": "conv-regularity", "seed": 1,
    "params": {"cases": [{"label": "a b", "alpha": 0.3}, {"label": "c", "alpha": 1.5}, {"label": "c", "alpha": 0.2}]}
  })"));
  CHECK(msg.find("params.cases[0].label") != std::string::npos);
  CHECK(msg.find("params.cases[1].alpha") != std::string::npos);
  CHECK(msg.find("duplicate") != std::string::npos);
}

TEST_CASE("JSON output is sorted with 17 significant digits and null for non-finite values") {
  const Json doc{{"b", 0.1}, {"a", std::numeric_limits<double>::quiet_NaN()}, {"c", 1}};
  const std::string text = dump_json(doc);
  CHECK(text.find("0.10000000000000001") != std::string::npos);
  CHECK(text.find("\"a\": null") != std::string::npos);
  CHECK(text.find("\"a\"") < text.find("\"b\""));
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("CSV rows must match the header width") {
  CsvTable t({"x", "y"});
  t.add_row({1.0, 0.25});
  CHECK(t.str() == "x,y\n1,0.25\n");
  CHECK(thrown_code([&] { t.add_row({1.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("a check with a non-finite value fails") {
  CHECK_FALSE(Check{"n", std::numeric_limits<double>::quiet_NaN(), 1.0}.passed());
  CHECK(Check{"n", 0.5, 1.0}.passed());
  CHECK_FALSE(Check{"n", 0.5, 1.0, false}.passed());
}

TEST_CASE("running a spec twice gives byte-identical reports") {
  for (const Json& doc : {small_matrix_spec(), small_lyap_spec()}) {
    const std::string a = run_to_text(doc, scratch("det_a"));
    const std::string b = run_to_text(doc, scratch("det_b"));
    CHECK(a == b);
    const Json report = Json::parse(a);
    CHECK(report["schema"] == kReportSchema);
    CHECK(report["seed"] == doc["seed"]);
    CHECK(report["passed"] == true);
  }
}

TEST_CASE("lyap reports carry the conservation block") {
  const fs::path dir = scratch("cons");
  const ExperimentSpec spec = parse_spec(small_lyap_spec(), "cons");
  REQUIRE(run_and_write(spec, dir) == 0);
  const Json report = Json::parse(read_text_file(dir / "cons.json"));
  REQUIRE(report.contains("conservation"));
  CHECK(report["conservation"]["splittings"] == 2);
  CHECK(report["conservation"]["sum_residual"].get<double>() <= 1e-8);
}

TEST_CASE("a failed check gives status 1 and the report still records it") {
  const fs::path dir = scratch("fail");
  const ExperimentSpec spec = parse_spec(Json::parse(R"({
    "kind": "conv-regularity", "seed": 1, "params": {"n_max": 65536, "cases": [{"label": "w", "alpha": 0.3, "beta": 0.4, "expect": {"alpha": 0.2, "band": 0.01}}]}
  })"), "fail");
  CHECK(run_and_write(spec, dir) == 1);
  const Json report = Json::parse(read_text_file(dir / "fail.json"));
  CHECK(report["passed"] == false);
  CHECK(report["checks"][0]["passed"] == false);
  CHECK(fs::exists(dir / "fail_w_blocks.csv"));
}

TEST_CASE("a numerical failure inside a run is reported with context") {
  const fs::path dir = scratch("err");
  const ExperimentSpec spec = parse_spec(Json::parse(R"({
    "kind": "lyap", "seed": 1, "params": {"base": {"linear": [[1, 0], [0, 1]]}, "t": 0, "resolution": 16}
  })"), "err");
  CHECK(run_and_write(spec, dir) == 1);
  const Json report = Json::parse(read_text_file(dir / "err.json"));
  REQUIRE(report.contains("error"));
  CHECK(report["error"].get<std::string>().find("NoDomination") != std::string::npos);
}

TEST_CASE("output directory precedence") {
  ExperimentSpec spec = parse_spec(small_matrix_spec(), "x", std::nullopt, "/base");
  CHECK(output_directory(spec, "/explicit") == fs::path("/explicit"));
  spec.output_dir = "rel";
  CHECK(output_directory(spec) == fs::path("/base/rel"));
}

TEST_CASE("the experiments directory holds the ten acceptance specs and they parse") {
  const char* dir = std::getenv("LYAPLAB_EXPERIMENTS");
  REQUIRE(dir != nullptr);
  const auto files = spec_files(dir);
  REQUIRE(files.size() == 10);
  std::set<std::string> prefixes;
  for (const auto& f : files) {
    prefixes.insert(f.filename().string().substr(0, 4));
    CHECK_NOTHROW(load_spec(f));
  }
  CHECK(prefixes == std::set<std::string>{"ac01", "ac02", "ac03", "ac04", "ac05", "ac06", "ac07", "ac08", "ac09", "ac10"});
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("cli");
  write_text_file(dir / "ok.json", dump_json(small_matrix_spec()));
  write_text_file(dir / "bad.json", R"({"kind": "matrix-deriv", "params": {}})");
  write_text_file(dir / "broken.json", "{");
  const std::string out = " --out " + (dir / "out").string();
  CHECK(cli_status("matrix-deriv " + (dir / "ok.json").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "ok.json"));
  CHECK(cli_status("matrix-deriv " + (dir / "bad.json").string() + out) == 2);
  CHECK(cli_status("matrix-deriv " + (dir / "broken.json").string() + out) == 2);
  CHECK(cli_status("lyap " + (dir / "ok.json").string() + out) == 2);
  CHECK(cli_status("no-such-kind") == 2);
  CHECK(cli_status("reproduce-all --experiments " + dir.string() + out) == 2);
}
