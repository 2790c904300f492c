#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace imc::cli;
  CLI::App app{"Imprecise Markov chain toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed (default: $IMC_SEED, else 0)")->envname("IMC_SEED");

  AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "Ergodicity coefficients, PF-like verdict, stationary lower expectations");
  a->add_option("spec", analyze.spec, "Chain spec file")->required();
  a->add_option("--r-max", analyze.r_max, "Largest power searched (0: 2|X|^2)");
  a->add_option("--tol", analyze.tol, "Width of stationary intervals");
  a->add_option("--mode", analyze.mode, "Gamble search: indicators | grid");
  a->add_option("--samples", analyze.grid_samples, "Random gambles in grid mode");
  a->add_option("--gamble", analyze.gambles, "Gamble: indicator:L[,L..] or comma-separated values (repeatable)");

  HittingOptionsCli hitting;
  auto* h = app.add_subcommand("hitting", "Lower and upper expected transition times to a target state");
  h->add_option("spec", hitting.spec, "Chain spec file")->required();
  h->add_option("target", hitting.target, "Target state label")->required();
  h->add_option("--tol", hitting.tol, "Relative stopping tolerance");
  h->add_option("--max-iter", hitting.max_iter, "Iteration limit");
  h->add_option("--cap", hitting.cap, "Values above this are reported as inf");

  SimulateOptions simulate;
  auto* s = app.add_subcommand("simulate", "Monte Carlo check of long-run averages against the stationary bound");
  s->add_option("spec", simulate.spec, "Chain spec file")->required();
  s->add_option("--gamble", simulate.gamble, "indicator:L[,L..] or comma-separated values over X^r")->required();
  s->add_option("--policy", simulate.policy, "adversarial | random | fixed:K | fixed:I:R0,R1,...");
  s->add_option("--paths", simulate.n_paths, "Number of paths");
  s->add_option("--length", simulate.length, "Path length");
  s->add_option("--delta", simulate.delta, "Slack below the threshold");
  s->add_option("--out", simulate.out_csv, "CSV output file");
  s->add_option("--require", simulate.require_fraction, "Exit 1 when the passing fraction is below this");

  VerifyOptions verify;
  auto* v = app.add_subcommand("verify", "Run a property suite");
  v->add_option("spec", verify.spec, "Chain spec file")->required();
  v->add_option("--suite", verify.suite, "coherence | identity | oracle | martingale")->required();
  v->add_option("--instances", verify.instances, "Random instances per check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kInputError;
  }

  if (*a) {
    analyze.seed = seed;
    return cmd_analyze(analyze, std::cout, std::cerr);
  }
  if (*h) {
    hitting.seed = seed;
    return cmd_hitting(hitting, std::cout, std::cerr);
  }
  if (*s) {
    simulate.seed = seed;
    return cmd_simulate(simulate, std::cout, std::cerr);
  }
  verify.seed = seed;
  return cmd_verify(verify, std::cout, std::cerr);
}
