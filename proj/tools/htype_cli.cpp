// Batch front end: one subcommand per task, JSON config in, JSON/CSV out.
//
// Exit codes: 0 all checks pass, 1 some check failed, 2 config or I/O error,
// 3 numerical non-convergence on a required record.

#include "htype/app/output.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv)
{
  using namespace htype::app;
  CLI::App app{"Numerical checks of p-Laplacian sign properties of Riesz potentials on H-type groups"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config_path, out_path = "-", csv_path;
  int threads = 0;
  long long seed = -1;
  for (const auto& [task, name] : task_names()) {
    CLI::App* sub = app.add_subcommand(name, "run task " + name);
    sub->add_option("--config", config_path, "task config (JSON)")->required();
    sub->add_option("--out", out_path, "JSON report path, - for stdout");
    sub->add_option("--csv", csv_path, "CSV grid path");
    sub->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", seed, "seed for randomised suites (overrides the config)")
        ->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    TaskConfig config = parse_config_file(config_path);
    if (to_string(config.task) != subcommand) {
      throw ConfigError("config field 'task': is " + to_string(config.task) + " but the subcommand is " +
                        subcommand);
    }
    if (threads > 0) config.threads = threads;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    const RunReport report = run_task(config);
    write_outputs(report, out_path, csv_path);
    int failed = 0;
    for (const htype::Record& r : report.records) failed += !r.informational && !r.pass;
    std::fprintf(stderr, "%s: %zu records, %d failed, %.2f s%s\n", subcommand.c_str(), report.records.size(), failed,
                 report.runtime_seconds, report.numerical_failure ? ", numerical failure" : "");
    for (const std::string& note : report.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
    return report.exit_code();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const htype::QuadratureError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const htype::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
