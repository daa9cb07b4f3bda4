// Command-line entry point. All the work happens in snls::dispatch; this
// file only maps flags and subcommands onto it and keeps the exit-code
// contract: 0 success, 1 experiment failure, 2 bad invocation or config.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include <snls/cli.hpp>

int main(int argc, char** argv) {
  CLI::App app{"convergence laboratory for a stochastic semiclassical "
               "Schrodinger solver"};
  app.set_version_flag("--version", std::string(snls::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int paths = 0;
  std::string out;
  unsigned threads = 0;
  auto* oconfig =
      app.add_option("--config", config_path, "experiment description (json)");
  auto* oseed = app.add_option("--seed", seed, "override the config seed");
  auto* opaths = app.add_option("--paths", paths, "override the path count");
  auto* oout =
      app.add_option("--out", out, "output root directory (default: runs)");
  auto* othreads =
      app.add_option("--threads", threads, "worker threads for path sampling");

  app.add_subcommand("run-convergence",
                     "strong-error ladder and rate fit on one axis");
  app.add_subcommand("run-lemma-tests",
                     "randomized semigroup and Cayley defect audit");
  app.add_subcommand("run-meshing",
                     "pick the coarsest resolution meeting an error target");
  app.add_subcommand("run-moments",
                     "moment level and time-regularity diagnostics");
  app.add_subcommand("print-plan", "resolve and print the config, then exit");
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and --version land here
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (oconfig->count() == 0) {
    std::fprintf(stderr, "--config is required\n");
    return 2;
  }

  snls::Overrides ov;
  if (oseed->count() > 0) ov.seed = seed;
  if (opaths->count() > 0) ov.paths = paths;
  if (oout->count() > 0) ov.out = out;
  if (othreads->count() > 0) ov.threads = threads;

  const std::string sub = app.get_subcommands().front()->get_name();
  return snls::dispatch(sub, config_path, ov);
}
