// lyaplab: run experiment specs and write JSON/CSV reports.
//
//   lyaplab <kind> SPEC [--out DIR] [--jobs N]
//   lyaplab reproduce-all [--experiments DIR] [--out DIR] [--jobs N]
//
// Exit status: 0 all checks pass, 1 numeric failure, 2 invalid spec or usage.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lyaplab/errors.hpp"
#include "lyaplab/experiment.hpp"
#include "lyaplab/parallel.hpp"

namespace {

using namespace lyaplab;

constexpr ExperimentKind kKinds[] = {ExperimentKind::matrix_deriv, ExperimentKind::conv_regularity, ExperimentKind::lyap,
                                     ExperimentKind::lyap_deriv,   ExperimentKind::bump_sweep,      ExperimentKind::family_check};

int run_one(const std::string& path, ExperimentKind kind, const std::string& out) {
  try {
    const ExperimentSpec spec = load_spec(path, kind);
    const auto dir = output_directory(spec, out);
    const int code = run_and_write(spec, dir);
    std::cerr << spec.name << ": " << (code == 0 ? "passed" : "FAILED") << " -> " << (dir / (spec.name + ".json")).string() << "\n";
    return code;
  } catch (const LabError& e) {
    std::cerr << "lyaplab: " << e.what() << "\n";
    return is_spec_error(e.code()) ? 2 : 1;
  }
}

std::filesystem::path default_experiments() {
  if (const char* env = std::getenv("LYAPLAB_EXPERIMENTS"); env && *env) return env;
  return "experiments";
}

std::filesystem::path default_out() {
  if (const char* env = std::getenv("LYAPLAB_OUT"); env && *env) return env;
  return "lyaplab_out";
}

int reproduce_all(const std::string& experiments, const std::string& out) {
  const std::filesystem::path exp_dir = experiments.empty() ? default_experiments() : std::filesystem::path(experiments);
  const std::filesystem::path out_dir = out.empty() ? default_out() : std::filesystem::path(out);
  std::vector<std::filesystem::path> files;
  try {
    files = spec_files(exp_dir);
  } catch (const LabError& e) {
    std::cerr << "lyaplab: " << e.what() << "\n";
    return 2;
  }
  if (files.empty()) {
    std::cerr << "lyaplab: no *.json specs in " << exp_dir.string() << "\n";
    return 2;
  }
  bool spec_error = false, failure = false;
  Json index = Json::array();
  for (const auto& file : files) {
    Json entry{{"file", file.filename().string()}};
    const auto start = std::chrono::steady_clock::now();
    int code = 0;
    std::string name = file.stem().string(), kind = "?";
    try {
      const ExperimentSpec spec = load_spec(file);
      name = spec.name;
      kind = std::string(kind_name(spec.kind));
      code = run_and_write(spec, out_dir);
      entry["report"] = spec.name + ".json";
    } catch (const LabError& e) {
      code = is_spec_error(e.code()) ? 2 : 1;
      entry["error"] = e.what();
      std::cerr << "lyaplab: " << file.filename().string() << ": " << e.what() << "\n";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    entry["experiment"] = name;
    entry["kind"] = kind;
    entry["exit_code"] = code;
    entry["passed"] = code == 0;
    index.push_back(std::move(entry));
    spec_error |= code == 2;
    failure |= code != 0;
    char line[256];
    std::snprintf(line, sizeof line, "%-32s %-16s exit=%d seconds=%.3f", name.c_str(), kind.c_str(), code, seconds);
    std::cerr << line << "\n";
  }
  try {
    write_text_file(out_dir / "index.json", dump_json(Json{{"schema", "lyaplab.index/1"}, {"experiments", index}}));
  } catch (const LabError& e) {
    std::cerr << "lyaplab: " << e.what() << "\n";
    return 1;
  }
  return spec_error ? 2 : failure ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov exponent derivative laboratory"};
  app.require_subcommand(1);
  int jobs = 0;
  std::string out;
  app.add_option("--jobs,-j", jobs, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out,-o", out, "output directory");

  std::string spec_path;
  std::optional<ExperimentKind> chosen;
  for (ExperimentKind kind : kKinds) {
    auto* sub = app.add_subcommand(std::string(kind_name(kind)), "run a " + std::string(kind_name(kind)) + " spec");
    sub->add_option("spec", spec_path, "spec JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--jobs,-j", jobs, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out,-o", out, "output directory");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  std::string experiments;
  auto* all = app.add_subcommand("reproduce-all", "run every spec in the experiments directory");
  all->add_option("--experiments", experiments, "spec directory (default $LYAPLAB_EXPERIMENTS or ./experiments)");
  all->add_option("--jobs,-j", jobs, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  all->add_option("--out,-o", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_jobs(jobs);
  if (chosen) return run_one(spec_path, *chosen, out);
  return reproduce_all(experiments, out);
}
