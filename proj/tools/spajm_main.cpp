#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "spajm/commands.hpp"

namespace {

void add_cut_flags(CLI::App* cmd, std::string& strategy, int& intervals, bool& merge) {
  cmd->add_option("--strategy", strategy, "interval cuts: events or quantiles")
      ->check(CLI::IsMember({"events", "quantiles"}))
      ->capture_default_str();
  cmd->add_option("--intervals", intervals, "interval count for --strategy quantiles")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--merge-obs-times", merge, "also cut at longitudinal measurement times");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"additive joint longitudinal-survival models via MCMC"};
  app.set_version_flag("--version", std::string("spajm ") + spajm::kVersion);
  app.require_subcommand(1);

  spajm::SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "draw a synthetic joint dataset");
  c_sim->add_option("--out", sim.out_dir, "output directory")->required();
  c_sim->add_option("--setting", sim.setting, "spatial-effect placement (1, 2, or 3)")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  c_sim->add_option("--n", sim.n, "subjects")->check(CLI::PositiveNumber)->capture_default_str();
  c_sim->add_option("--ni", sim.ni, "measurements per subject")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  c_sim->add_option("--map-rows", sim.map_rows, "lattice rows")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_sim->add_option("--map-cols", sim.map_cols, "lattice columns")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  spajm::AugmentArgs aug;
  CLI::App* c_aug = app.add_subcommand("augment", "expand survival data to interval rows");
  c_aug->add_option("--long", aug.long_path, "longitudinal CSV")->required();
  c_aug->add_option("--surv", aug.surv_path, "survival CSV")->required();
  c_aug->add_option("--out", aug.out_path, "output CSV")->required();
  add_cut_flags(c_aug, aug.strategy, aug.intervals, aug.merge_obs_times);
  c_aug->add_option("--locf", aug.locf, "intervals before the first measurement: backfill or drop")
      ->check(CLI::IsMember({"backfill", "drop"}))
      ->capture_default_str();

  spajm::FitArgs fit;
  long fit_iterations = 0, fit_burnin = -1, fit_thin = 0;
  std::uint64_t fit_seed = 0;
  int fit_chains = 0;
  CLI::App* c_fit = app.add_subcommand("fit", "run the MCMC sampler");
  c_fit->add_option("--config", fit.config_path, "model configuration file")->required();
  c_fit->add_option("--long", fit.long_path, "longitudinal CSV")->required();
  c_fit->add_option("--surv", fit.surv_path, "survival CSV")->required();
  c_fit->add_option("--out", fit.out_dir, "output directory")->required();
  CLI::Option* o_iter = c_fit->add_option("--iterations", fit_iterations, "override iterations");
  CLI::Option* o_burn = c_fit->add_option("--burnin", fit_burnin, "override burn-in");
  CLI::Option* o_thin = c_fit->add_option("--thin", fit_thin, "override thinning");
  CLI::Option* o_seed = c_fit->add_option("--seed", fit_seed, "override RNG seed");
  CLI::Option* o_chains = c_fit->add_option("--chains", fit_chains, "override chain count");
  add_cut_flags(c_fit, fit.strategy, fit.intervals, fit.merge_obs_times);
  c_fit->add_option("--locf", fit.locf, "intervals before the first measurement: backfill or drop")
      ->check(CLI::IsMember({"backfill", "drop"}))
      ->capture_default_str();
  c_fit->add_option("--level", fit.level, "HDI level for summary.csv")
      ->check(CLI::Range(0.5, 0.999))
      ->capture_default_str();

  spajm::SummarizeArgs sum;
  CLI::App* c_sum = app.add_subcommand("summarize", "posterior means and HDIs from draws");
  c_sum->add_option("--draws", sum.draws_path, "draws.csv or a fit directory")->required();
  c_sum->add_option("--out", sum.out_path, "output CSV (default: summary.csv next to draws)");
  c_sum->add_option("--level", sum.level, "HDI level")
      ->check(CLI::Range(0.5, 0.999))
      ->capture_default_str();

  spajm::BenchmarkArgs bench;
  CLI::App* c_bench = app.add_subcommand("benchmark", "replicate the simulation study");
  c_bench->add_option("--out", bench.out_dir, "output directory")->required();
  c_bench->add_option("--setting", bench.setting, "spatial-effect placement (1, 2, or 3)")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  c_bench->add_option("--replications", bench.replications, "replication count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_bench->add_option("--seed", bench.seed, "base RNG seed (replication r uses seed + r)")
      ->capture_default_str();
  c_bench->add_option("--workers", bench.workers, "parallel replications")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_bench->add_option("--n", bench.n, "subjects per replication")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_bench->add_option("--ni", bench.ni, "measurements per subject")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_bench->add_option("--iterations", bench.iterations, "MCMC iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_bench->add_option("--burnin", bench.burn_in, "burn-in iterations")->capture_default_str();
  c_bench->add_option("--thin", bench.thinning, "thinning stride")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_cut_flags(c_bench, bench.strategy, bench.intervals, bench.merge_obs_times);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  }

  try {
    if (c_sim->parsed()) return spajm::cmd_simulate(sim);
    if (c_aug->parsed()) return spajm::cmd_augment(aug);
    if (c_fit->parsed()) {
      if (o_iter->count() > 0) fit.iterations = fit_iterations;
      if (o_burn->count() > 0) fit.burn_in = fit_burnin;
      if (o_thin->count() > 0) fit.thinning = fit_thin;
      if (o_seed->count() > 0) fit.seed = fit_seed;
      if (o_chains->count() > 0) fit.chains = fit_chains;
      return spajm::cmd_fit(fit);
    }
    if (c_sum->parsed()) return spajm::cmd_summarize(sum);
    if (c_bench->parsed()) return spajm::cmd_benchmark(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return spajm::exit_code_for(e);
  }
  return 0;
}
