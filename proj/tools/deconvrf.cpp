#include "deconvrf/commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>
#include <vector>

using namespace deconvrf;

namespace {

void
add_common(CLI::App* sub, CommandOptions& opts, std::uint64_t& seed, int& threads)
{
  sub->add_option("--config", opts.config, "experiment config (JSON)")->required();
  sub->add_option("--seed", seed, "override the config seed");
  sub->add_option("--threads", threads, "worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"Deconvolution density estimation on lattice random fields", "deconvrf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "deconvrf 0.1.0");

  CommandOptions opts;
  std::uint64_t seed = 0;
  int threads = 0;

  auto* simulate = app.add_subcommand("simulate", "simulate Y = X + theta on the data region");
  add_common(simulate, opts, seed, threads);
  simulate->add_option("--out", opts.out, "field CSV")->required();
  simulate->add_flag("--components", opts.components, "also write x and theta columns");

  auto* estimate = app.add_subcommand("estimate", "deconvolution density estimate from a field CSV");
  add_common(estimate, opts, seed, threads);
  estimate->add_option("--data", opts.data, "field CSV from simulate")->required();
  estimate->add_option("--out", opts.out, "estimate CSV")->required();
  estimate->add_option("--grid", opts.grid, "evaluation grid min:max:count")->required();
  estimate->add_option("--form", opts.form, "estimator form")->check(CLI::IsMember({"direct", "cf"}));

  auto* clt = app.add_subcommand("clt", "Monte Carlo check of asymptotic normality");
  add_common(clt, opts, seed, threads);
  clt->add_option("--out", opts.out, "output directory")->required();

  auto* check = app.add_subcommand("check", "admissibility, A5 and blocking-sequence checks only");
  add_common(check, opts, seed, threads);
  check->add_option("--out", opts.out, "report file (default stdout)");

  // CLI11 reads the next token as the value of an empty "--opt=".
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) {
    const std::string a = argv[i];
    if (a.size() > 3 && a.starts_with("--") && a.back() == '=') {
      args.emplace_back();
      args.push_back(a.substr(0, a.size() - 1));
    } else {
      args.push_back(a);
    }
  }

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (auto* sub : {simulate, estimate, clt, check}) {
    if (sub->count("--seed"))
      opts.seed = seed;
    if (sub->count("--threads"))
      opts.threads = threads;
  }

  if (*simulate)
    return cmd_simulate(opts, std::cerr);
  if (*estimate)
    return cmd_estimate(opts, std::cerr);
  if (*clt)
    return cmd_clt(opts, std::cerr);
  return cmd_check(opts, std::cout, std::cerr);
}
