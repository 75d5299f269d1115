#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "orbitkit/cli/runner.hpp"
#include "orbitkit/cli/scenario.hpp"

namespace {

using namespace orbitkit;

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// 2 on parse errors, 1 when the file cannot be read
int load(const std::string& path, cli::Scenario& out) {
  const auto text = slurp(path);
  if (!text) {
    std::cerr << "orbitkit: cannot read '" << path << "'\n";
    return cli::kExitCommandError;
  }
  try {
    out = cli::parse_scenario(*text);
  } catch (const Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return cli::kExitParseError;
  }
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitkit: orbits of families of vector fields"};
  app.require_subcommand(1);

  std::string run_file, check_file, out_dir = "orbitkit-out";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool unsafe = false;

  auto* run = app.add_subcommand("run", "run every command of a scenario and write reports");
  run->add_option("scenario", run_file, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--tol", tol, "override the scenario tolerance")->check(CLI::PositiveNumber);
  run->add_flag("--unsafe", unsafe, "skip existence guards (recorded in the report)");

  auto* cat = app.add_subcommand("catalog", "list builtin systems");
  auto* check = app.add_subcommand("check", "parse and validate a scenario");
  check->add_option("scenario", check_file, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kExitCommandError;
  }

  if (cat->parsed()) {
    std::cout << cli::catalog_text();
    return cli::kExitOk;
  }
  if (check->parsed()) {
    cli::Scenario sc;
    if (const int rc = load(check_file, sc); rc != cli::kExitOk) return rc;
    std::cout << cli::emit_scenario(sc);
    return cli::kExitOk;
  }

  cli::Scenario sc;
  if (const int rc = load(run_file, sc); rc != cli::kExitOk) return rc;
  cli::RunOptions opts;
  opts.out_dir = out_dir;
  opts.seed = seed;
  opts.tol = tol;
  opts.unsafe = unsafe;
  try {
    const auto res = cli::run_scenario(sc, opts);
    std::cout << res.report.emit();
    if (res.failed) std::cerr << "orbitkit: " << res.failed << " command(s) failed\n";
    return res.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "orbitkit: " << e.what() << "\n";
    return cli::kExitCommandError;
  }
}
