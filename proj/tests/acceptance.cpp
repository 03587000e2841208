// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Exit status is the number of failing criteria (capped at 1).

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gereg/gedist.hpp>
#include <gereg/parallel.hpp>
#include <gereg/priors.hpp>
#include <gereg/random.hpp>
#include <gereg/simlab.hpp>

#include "commands.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gereg;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path workdir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "gereg_acceptance" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void kld_closed_form() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (double a : {0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0})
        for (double l : {0.1, 1.0, 7.5}) worst = std::max(worst, std::abs(kld_ge_exp(a) - oracle::kld_quadrature(a, l)));
    const double secs = seconds_since(t0);
    report(1, "KLD closed form", worst < 1e-8 && secs < 5.0,
           "max |diff| = " + fmt("%.3e", worst) + " (< 1e-8), " + fmt("%.2f", secs) + " s (< 5)");
}

void pc_normalization() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string masses;
    for (double th : {0.5, 1.5, 2.5, 5.0}) {
        const double m = oracle::pc_mass(th);
        worst = std::max(worst, std::abs(m - 1.0));
        masses += fmt(" %.8f", m);
    }
    const double secs = seconds_since(t0);
    report(2, "PC prior normalization", worst < 1e-3 && secs < 5.0,
           "masses" + masses + ", max |mass - 1| = " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s");
}

void mode_transition() {
    const double step = 1e-4;
    auto density = [](double theta) { return [theta](double a) { return pc_log_density(a, theta); }; };
    const double m12 = oracle::grid_argmax(density(1.2), step, 5.0, step);
    const double m15 = oracle::grid_argmax(density(1.5), step, 5.0, step);
    report(3, "mode transition", m12 < 1.0 - step && std::abs(m15 - 1.0) <= step,
           "argmax(theta=1.2) = " + fmt("%.4f", m12) + ", argmax(theta=1.5) = " + fmt("%.4f", m15) +
               " (grid step 1e-4)");
}

void moment_identities() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::uint64_t seed = 41;
    for (double a : {0.5, 1.0, 2.0})
        for (double l : {0.5, 2.0}) {
            const GEParams p(a, l);
            const auto m = oracle::sample_moments(sample(1'000'000, p, seed++));
            worst = std::max({worst, std::abs(m.mean / mean(p) - 1.0), std::abs(m.variance / variance(p) - 1.0),
                              std::abs(m.skewness / skewness(p) - 1.0)});
        }
    const double secs = seconds_since(t0);
    report(4, "GE moment identities", worst < 0.01 && secs < 30.0,
           "max relative error = " + fmt("%.4f", worst) + " (< 0.01), " + fmt("%.2f", secs) + " s (< 30)");
}

AggregateRow cell(int setting, std::size_t prior_index, double alpha, std::size_t n, std::size_t reps,
                  std::uint64_t seed, FitKind fit) {
    SimOptions opt;
    opt.jobs = default_jobs();
    const auto recs = run_cell(sim_setting(setting), prior_index, alpha, n, reps, seed, opt);
    for (const auto& row : aggregate(recs))
        if (row.fit == fit) return row;
    throw std::logic_error("cell not found");
}

void sampler_correctness() {
    const auto t0 = Clock::now();
    // Setting 1: linear truth, parametric fit; prior 0 is PC(2.5).
    const auto row = cell(1, 0, 2.0, 99, 200, 20250501, FitKind::parametric);
    const double secs = seconds_since(t0);
    report(5, "sampler correctness", !row.empty && row.coverage >= 0.90 && row.abs_bias < 0.15 && secs < 1200.0,
           "coverage = " + fmt("%.3f", row.coverage) + " (>= 0.90), |bias| = " + fmt("%.4f", row.abs_bias) +
               " (< 0.15), mean |error| = " + fmt("%.4f", row.mean_abs_error) + ", failed = " +
               std::to_string(row.failed) + "/200, " + fmt("%.1f", secs) + " s");
}

void pc_shrinkage() {
    const auto t0 = Clock::now();
    const auto pc = cell(1, 0, 1.0, 24, 200, 20250502, FitKind::parametric);
    const auto gam = cell(1, 3, 1.0, 24, 200, 20250502, FitKind::parametric);
    const double secs = seconds_since(t0);
    report(6, "PC shrinkage at alpha = 1", pc.mean_abs_error <= gam.mean_abs_error,
           "mean |bias| PC(2.5) = " + fmt("%.4f", pc.mean_abs_error) + ", Gamma(1,1) = " +
               fmt("%.4f", gam.mean_abs_error) + "; |mean bias| " + fmt("%.4f", pc.abs_bias) + " vs " +
               fmt("%.4f", gam.abs_bias) + ", " + fmt("%.1f", secs) + " s");
}

void waic_ordering() {
    const auto t0 = Clock::now();
    SimOptions opt;
    opt.jobs = default_jobs();
    const std::size_t reps = 100;
    auto semi_wins = [&](int setting, std::uint64_t seed) {
        // Settings 6 and 8 fit both models to each dataset; records alternate parametric, semiparametric.
        const auto recs = run_cell(sim_setting(setting), 0, 1.0, 99, reps, seed, opt);
        std::size_t wins = 0, usable = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto& par = recs[2 * r];
            const auto& semi = recs[2 * r + 1];
            if (par.failed || semi.failed) continue;
            ++usable;
            if (semi.waic < par.waic) ++wins;
        }
        return std::pair{wins, usable};
    };
    const auto [nl_wins, nl_usable] = semi_wins(8, 20250503);
    const auto [lin_semi_wins, lin_usable] = semi_wins(6, 20250504);
    const double nl_frac = static_cast<double>(nl_wins) / static_cast<double>(reps);
    const double lin_par_frac = static_cast<double>(lin_usable - lin_semi_wins) / static_cast<double>(reps);
    const double secs = seconds_since(t0);
    report(7, "WAIC model ordering", nl_frac >= 0.80 && lin_par_frac > 0.5,
           "nonlinear truth: semiparametric lower in " + fmt("%.2f", nl_frac) + " (>= 0.80); linear truth: parametric "
           "lower in " + fmt("%.2f", lin_par_frac) + " (> 0.5); usable " + std::to_string(nl_usable) + "+" +
               std::to_string(lin_usable) + "/" + std::to_string(2 * reps) + ", " + fmt("%.1f", secs) + " s");
}

Dataset century_series(std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    for (int year = 1901; year <= 2022; ++year) {
        const double u = (year - 1901) / 121.0;
        const double lambda = std::exp(-2.3 + 0.15 * std::sin(2.0 * std::numbers::pi * u) - 0.1 * u);
        const GEParams p(0.87, lambda);
        const int days = 75 + static_cast<int>(rng.uniform() * 15.0);
        for (int k = 0; k < days; ++k) {
            d.x.push_back(year);
            d.y.push_back(sample_one(rng, p));
        }
    }
    return d;
}

void application_scale() {
    const Dataset data = century_series(122);
    ChainConfig cfg = ChainConfig::application_protocol(7);
    cfg.n_iter = 10000;
    cfg.burn_in = 3000;
    cfg.thin = 5;
    std::string detail = std::to_string(data.size()) + " obs";
    bool ok = true;
    double secs[2] = {0, 0};
    for (int m = 0; m < 2; ++m) {
        const bool spline = m == 1;
        const auto spec = spline ? ModelSpec::spline(make_basis(12, 1901, 2022), AlphaPrior::pc(2.5))
                                 : ModelSpec::linear(CovariateMap(1901, 2022), AlphaPrior::pc(2.5));
        const auto t0 = Clock::now();
        const FittedModel fit = fit_model(spec, data, cfg);
        secs[m] = seconds_since(t0);
        double lo = 1.0, hi = 0.0;
        for (double r : fit.draws.acceptance_rates) lo = std::min(lo, r), hi = std::max(hi, r);
        ok = ok && !fit.draws.failed && lo >= 0.25 && hi <= 0.55;
        detail += std::string("; ") + (spline ? "spline K=12" : "linear") + ": acceptance [" + fmt("%.3f", lo) + ", " +
                  fmt("%.3f", hi) + "], " + fmt("%.2f", secs[m]) + " s";
    }
    ok = ok && secs[0] < 10.0 && secs[1] < 30.0;
    report(8, "application-scale performance", ok, detail + " (soft targets 10 s / 30 s)");
}

void write_daily(const fs::path& path, std::uint64_t seed) {
    const std::vector<std::pair<std::string, double>> regions{{"North", 0.86}, {"Central", 0.95}, {"South", 0.87}};
    Rng rng(seed);
    std::ofstream out(path);
    out << "date,region,rainfall_mm\n";
    for (int year = 1951; year <= 2020; ++year)
        for (unsigned month = 5; month <= 10; ++month) {
            const unsigned days = static_cast<unsigned>(
                std::chrono::year_month_day_last(std::chrono::year(year), std::chrono::month_day_last(std::chrono::month(month)))
                    .day());
            for (unsigned day = 1; day <= days; ++day)
                for (const auto& [region, alpha] : regions) {
                    const double u = (year - 1951) / 69.0;
                    const double lambda = std::exp(-2.2 + 0.2 * u * (region == "South" ? 1.0 : -1.0));
                    double v = 0.0;
                    if (rng.uniform() < 0.55) v = std::round(sample_one(rng, GEParams(alpha, lambda)) * 10.0) / 10.0;
                    char date[16];
                    std::snprintf(date, sizeof date, "%04d-%02u-%02u", year, month, day);
                    out << date << ',' << region << ',' << v << '\n';
                }
        }
}

void real_data_pipeline() {
    // The gridded observational archive is not bundled; a synthetic three-region
    // archive exercises the same preprocess -> fit path. Not a numerical gate.
    const fs::path dir = workdir("pipeline");
    write_daily(dir / "daily.csv", 1901);
    std::string detail;
    bool ok = true;
    for (const std::string region : {"North", "Central", "South"}) {
        std::ostringstream out, err;
        cli::PreprocessConfig pre{(dir / "daily.csv").string(), region, (dir / (region + ".csv")).string()};
        int rc = cli::run_guarded([&] { return cli::cmd_preprocess(pre, out, err); }, err);
        cli::FitConfig fit;
        if (rc == 0) {
            fit.input = pre.out;
            fit.outdir = (dir / region).string();
            fit.jobs = 1;
            rc = cli::run_guarded([&] { return cli::cmd_fit(fit, out, err); }, err);
        }
        if (rc != 0) {
            ok = false;
            detail += region + ": exit " + std::to_string(rc) + " " + err.str() + "; ";
            continue;
        }
        const auto w = nlohmann::json::parse(slurp(dir / region / "waic.json"));
        detail += region + " alpha_mean=" + fmt("%.3f", w["alpha"]["mean"].get<double>()) +
                  " decadal_shift=" + fmt("%.3f", w["decadal_shift"]["mean"].get<double>()) + "; ";
    }
    report(9, "observational pipeline (synthetic stand-in, reported not gated)", ok, detail);
}

void reproducibility() {
    bool ok = true;
    std::string detail;
    {
        std::vector<std::string> bytes;
        const fs::path base = workdir("repro_fit");
        std::ostringstream out, err;
        cli::PreprocessConfig pre{(base / "daily.csv").string(), "North", (base / "north.csv").string()};
        write_daily(pre.input, 77);
        ok = ok && cli::run_guarded([&] { return cli::cmd_preprocess(pre, out, err); }, err) == 0;
        for (unsigned jobs : {1u, 2u}) {
            cli::FitConfig fit;
            fit.input = pre.out;
            fit.outdir = (base / ("run" + std::to_string(jobs))).string();
            fit.n_iter = 2000;
            fit.burn_in = 600;
            fit.theta_grid = "1:3:1";
            fit.seed = 99;
            fit.jobs = jobs;
            ok = ok && cli::run_guarded([&] { return cli::cmd_fit(fit, out, err); }, err) == 0;
            for (const char* f : {"draws.csv", "summary.csv"}) bytes.push_back(slurp(fs::path(fit.outdir) / f));
        }
        const bool same = bytes.size() == 4 && bytes[0] == bytes[2] && bytes[1] == bytes[3] && !bytes[0].empty();
        ok = ok && same;
        detail += std::string("fit outputs ") + (same ? "identical" : "differ");
    }
    {
        std::vector<std::string> bytes;
        const fs::path base = workdir("repro_sim");
        for (unsigned jobs : {1u, 2u}) {
            cli::SimulateConfig sim;
            sim.setting = 8;
            sim.replicates = 3;
            sim.seed = 5;
            sim.outdir = (base / ("run" + std::to_string(jobs))).string();
            sim.sim.n_iter = 600;
            sim.sim.burn_in = 300;
            sim.sim.jobs = jobs;
            std::ostringstream out, err;
            ok = ok && cli::run_guarded([&] { return cli::cmd_simulate(sim, out, err); }, err) == 0;
            for (const char* f : {"replicates.csv", "aggregate.csv"}) bytes.push_back(slurp(fs::path(sim.outdir) / f));
        }
        const bool same = bytes.size() == 4 && bytes[0] == bytes[2] && bytes[1] == bytes[3] && !bytes[0].empty();
        ok = ok && same;
        detail += std::string("; simulate outputs ") + (same ? "identical" : "differ");
    }
    report(10, "deterministic reproducibility", ok, detail + " (reruns with 1 and 2 worker threads)");
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> criteria{kld_closed_form,    pc_normalization,  mode_transition,
                                                      moment_identities,  sampler_correctness, pc_shrinkage,
                                                      waic_ordering,      application_scale, real_data_pipeline,
                                                      reproducibility};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), "exception", false, e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
