#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

namespace {

using namespace gereg::cli;

void add_chain_options(CLI::App* cmd, int& iters, int& burnin, int& thin) {
    cmd->add_option("--iters", iters, "MCMC iterations")->capture_default_str();
    cmd->add_option("--burnin", burnin, "burn-in iterations")->capture_default_str();
    cmd->add_option("--thin", thin, "keep every thin-th post-burn-in draw")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian generalized exponential regression for wet-day rainfall"};
    app.set_config("--config", "", "INI file with option values; command-line flags take precedence");
    app.require_subcommand(1);

    PreprocessConfig pre;
    auto* c_pre = app.add_subcommand("preprocess", "daily CSV -> per-region JJAS wet-day series");
    c_pre->add_option("--input", pre.input, "CSV with header date,region,rainfall_mm")->required();
    c_pre->add_option("--region", pre.region, "region label to extract")->required();
    c_pre->add_option("--out", pre.out, "output CSV (default $GEREG_OUTDIR/<region>.csv)");

    FitConfig fit;
    auto* c_fit = app.add_subcommand("fit", "fit the GE regression to a year,rainfall_mm series");
    c_fit->add_option("--input", fit.input, "series CSV")->required();
    c_fit->add_option("--outdir", fit.outdir, "output directory (default $GEREG_OUTDIR)");
    c_fit->add_option("--model", fit.model, "rate model")->check(CLI::IsMember({"linear", "spline"}))
        ->capture_default_str();
    c_fit->add_option("--K", fit.num_basis, "number of cubic B-spline basis functions")->capture_default_str();
    c_fit->add_option("--alpha-prior", fit.alpha_prior, "pc:THETA or gamma:SHAPE,RATE")->capture_default_str();
    c_fit->add_option("--theta-grid", fit.theta_grid, "a:b:step; select theta by minimum WAIC");
    add_chain_options(c_fit, fit.n_iter, fit.burn_in, fit.thin);
    c_fit->add_option("--seed", fit.seed, "random seed")->capture_default_str();
    c_fit->add_option("--probs", fit.probs, "probability-rainfall levels")->delimiter(',')->capture_default_str();
    c_fit->add_option("--from", fit.domain_lo, "covariate range start (default: earliest year)");
    c_fit->add_option("--to", fit.domain_hi, "covariate range end (default: latest year)");
    c_fit->add_option("--jobs", fit.jobs, "parallel fits over the theta grid")->capture_default_str();

    SimulateConfig sim;
    sim.sim.jobs = gereg::default_jobs();
    auto* c_sim = app.add_subcommand("simulate", "run one simulation setting");
    c_sim->add_option("--setting", sim.setting, "setting id 1..8")->required()->check(CLI::Range(1, 8));
    c_sim->add_option("--replicates", sim.replicates, "datasets per cell")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "base seed")->capture_default_str();
    c_sim->add_option("--outdir", sim.outdir, "output directory (default $GEREG_OUTDIR)");
    add_chain_options(c_sim, sim.sim.n_iter, sim.sim.burn_in, sim.sim.thin);
    c_sim->add_option("--K", sim.sim.num_basis, "basis size of the semiparametric fit")->capture_default_str();
    c_sim->add_option("--jobs", sim.sim.jobs, "parallel replicates")->capture_default_str();

    PriorDensityConfig pd;
    auto* c_pd = app.add_subcommand("prior-density", "tabulate the PC prior density of alpha");
    c_pd->add_option("--theta", pd.theta, "PC rate")->capture_default_str();
    c_pd->add_option("--grid", pd.grid, "alpha grid a:b:step")->capture_default_str();
    c_pd->add_option("--out", pd.out, "output CSV (default $GEREG_OUTDIR/prior_density.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    return run_guarded(
        [&] {
            if (c_pre->parsed()) return cmd_preprocess(pre, std::cout, std::cerr);
            if (c_fit->parsed()) return cmd_fit(fit, std::cout, std::cerr);
            if (c_sim->parsed()) return cmd_simulate(sim, std::cout, std::cerr);
            return cmd_prior_density(pd, std::cout, std::cerr);
        },
        std::cerr);
}
