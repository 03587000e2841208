#pragma once

// Subcommand implementations behind the gereg executable. Each command
// prints its resolved configuration as one JSON line before doing any work.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gereg/diagnostics.hpp>
#include <gereg/format.hpp>
#include <gereg/functionals.hpp>
#include <gereg/ingest.hpp>
#include <gereg/parallel.hpp>
#include <gereg/priors.hpp>
#include <gereg/simlab.hpp>

namespace gereg::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kUsage = 1, kSchema = 2, kEmpty = 3, kNumerical = 4 };

class CommandError : public std::runtime_error {
public:
    CommandError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

inline constexpr const char* kOutdirEnv = "GEREG_OUTDIR";

/// Points a, a + step, ... not exceeding b (with a small tolerance for
/// accumulated rounding). Text form "a:b:step".
inline std::vector<double> parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    double a = 0, b = 0, step = 0;
    if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos ||
        !parse_double(std::string_view(text).substr(0, c1), a) ||
        !parse_double(std::string_view(text).substr(c1 + 1, c2 - c1 - 1), b) ||
        !parse_double(std::string_view(text).substr(c2 + 1), step))
        throw CommandError(kUsage, "grid must have the form a:b:step, got '" + text + "'");
    if (!(step > 0.0)) throw CommandError(kUsage, "grid step must be positive in '" + text + "'");
    if (b < a) throw CommandError(kUsage, "grid end precedes its start in '" + text + "'");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 10'000'000) throw CommandError(kUsage, "grid '" + text + "' has too many points");
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = a + static_cast<double>(i) * step;
    return v;
}

inline std::filesystem::path resolve_outdir(const std::string& flag) {
    std::string dir = flag;
    if (dir.empty())
        if (const char* env = std::getenv(kOutdirEnv)) dir = env;
    if (dir.empty())
        throw CommandError(kUsage, std::string("no output directory: pass --outdir or set ") + kOutdirEnv);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw CommandError(kSchema, "cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CommandError(kSchema, "cannot open input '" + path + "'");
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CommandError(kSchema, "cannot write '" + path.string() + "'");
    return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw CommandError(kSchema, "error writing '" + path.string() + "'");
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::string percent_label(double p) {
    return "pr" + std::to_string(static_cast<long long>(std::llround(p * 100.0)));
}

}  // namespace detail

// ---------------------------------------------------------------- preprocess

struct PreprocessConfig {
    std::string input;
    std::string region;
    std::string out;  // defaults to $GEREG_OUTDIR/<region>.csv

    Json to_json() const {
        return Json{{"command", "preprocess"}, {"input", input}, {"region", region}, {"out", out}};
    }
};

inline int cmd_preprocess(PreprocessConfig cfg, std::ostream& out, std::ostream& err) {
    if (cfg.input.empty() || cfg.region.empty()) throw CommandError(kUsage, "preprocess needs --input and --region");
    std::filesystem::path target = cfg.out;
    if (cfg.out.empty()) target = resolve_outdir("") / (cfg.region + ".csv");
    cfg.out = target.string();
    out << cfg.to_json().dump() << '\n';

    auto in = detail::open_input(cfg.input);
    const auto raw = read_daily_csv(in);
    if (std::none_of(raw.begin(), raw.end(), [&](const DailyRecord& r) { return r.region == cfg.region; }))
        throw CommandError(kSchema, "unknown region '" + cfg.region + "' in " + cfg.input);
    const auto jjas = filter_jjas(raw);
    const auto wet = drop_dry_days(jjas);
    const bool any_wet =
        std::any_of(wet.begin(), wet.end(), [&](const DailyRecord& r) { return r.region == cfg.region; });
    out << "records " << raw.size() << "\njjas " << jjas.size() << "\nwet " << wet.size() << '\n';
    if (!any_wet) throw CommandError(kEmpty, "no wet days for region '" + cfg.region + "'");
    const auto series = build_series(wet, cfg.region);
    out << "series " << series.size() << '\n';
    if (series.size() < 5)
        throw CommandError(kEmpty, "only " + std::to_string(series.size()) + " wet days; outlier filter needs 5");
    const auto filtered = filter_outliers(series);
    for (const auto& w : filtered.warnings) err << "warning: " << w << '\n';
    out << "kept " << filtered.kept.size() << "\nremoved " << filtered.removed.size() << '\n';

    auto f = detail::open_output(target);
    write_series_csv(f, filtered.kept);
    detail::close_output(f, target);
    return kOk;
}

// ----------------------------------------------------------------------- fit

struct FitConfig {
    std::string input;
    std::string outdir;
    std::string model = "spline";
    std::size_t num_basis = 12;
    std::string alpha_prior = "pc:2.5";
    std::string theta_grid;  // "a:b:step", PC prior only
    int n_iter = 10000;
    int burn_in = 3000;
    int thin = 5;
    std::uint64_t seed = 1;
    std::vector<double> probs{0.3, 0.5, 0.7};
    double domain_lo = std::numeric_limits<double>::quiet_NaN();  // default: earliest year
    double domain_hi = std::numeric_limits<double>::quiet_NaN();  // default: latest year
    unsigned jobs = default_jobs();

    Json to_json() const {
        return Json{{"command", "fit"},
                    {"input", input},
                    {"outdir", outdir},
                    {"model", model},
                    {"K", num_basis},
                    {"alpha_prior", alpha_prior},
                    {"theta_grid", theta_grid},
                    {"iters", n_iter},
                    {"burnin", burn_in},
                    {"thin", thin},
                    {"seed", seed},
                    {"probs", probs},
                    {"domain", {detail::finite_or_null(domain_lo), detail::finite_or_null(domain_hi)}},
                    {"jobs", jobs}};
    }
};

struct ThetaTrial {
    double theta = 0.0;
    FittedModel fit;
};

namespace detail {

inline ModelSpec fit_spec(const FitConfig& cfg, const AlphaPrior& prior) {
    const CovariateMap map(cfg.domain_lo, cfg.domain_hi);
    if (cfg.model == "linear") return ModelSpec::linear(map, prior);
    return ModelSpec::spline(make_basis(cfg.num_basis, cfg.domain_lo, cfg.domain_hi), prior);
}

inline void write_draws(std::ostream& os, const PosteriorDraws& d) {
    os << "alpha";
    for (std::size_t c = 0; c < d.num_coefficients(); ++c) os << ",beta_" << c + 1;
    os << '\n';
    for (std::size_t s = 0; s < d.size(); ++s) {
        os << format_double(d.alpha[s]);
        for (std::size_t c = 0; c < d.num_coefficients(); ++c)
            os << ',' << format_double(d.beta(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)));
        os << '\n';
    }
}

inline void write_summary(std::ostream& os, const FittedModel& fit, const std::vector<double>& probs, double lo,
                          double hi) {
    std::vector<double> years;
    for (double t = std::ceil(lo); t <= hi; t += 1.0) years.push_back(t);
    std::vector<std::vector<Summary>> cols;
    std::vector<std::string> names;
    names.push_back("mu");
    cols.push_back(mean_curve(fit, years));
    for (double p : probs) {
        names.push_back(percent_label(p));
        cols.push_back(probability_rainfall(fit, years, p));
    }
    if (fit.spec.form() == RateForm::spline) {
        names.push_back("roc");
        cols.push_back(rate_of_change(fit, years));
    }
    os << "year";
    for (const auto& n : names) os << ',' << n << "_mean," << n << "_lo95," << n << "_hi95";
    os << '\n';
    for (std::size_t j = 0; j < years.size(); ++j) {
        os << format_double(years[j]);
        for (const auto& c : cols)
            os << ',' << format_double(c[j].mean) << ',' << format_double(c[j].lo95) << ','
               << format_double(c[j].hi95);
        os << '\n';
    }
}

inline Json ess_json(const PosteriorDraws& d) {
    Json out = Json::array();
    if (d.size() < 10) return out;
    out.push_back(finite_or_null(effective_sample_size(d.alpha).ess));
    std::vector<double> col(d.size());
    for (std::size_t c = 0; c < d.num_coefficients(); ++c) {
        for (std::size_t s = 0; s < d.size(); ++s)
            col[s] = d.beta(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
        out.push_back(finite_or_null(effective_sample_size(col).ess));
    }
    return out;
}

}  // namespace detail

inline int cmd_fit(FitConfig cfg, std::ostream& out, std::ostream& err) {
    if (cfg.input.empty()) throw CommandError(kUsage, "fit needs --input");
    if (cfg.model != "linear" && cfg.model != "spline")
        throw CommandError(kUsage, "--model must be linear or spline, got '" + cfg.model + "'");
    AlphaPrior prior = AlphaPrior::pc(1.0);
    try {
        prior = AlphaPrior::parse(cfg.alpha_prior);
    } catch (const std::exception& e) {
        throw CommandError(kUsage, e.what());
    }
    std::vector<double> thetas;
    if (!cfg.theta_grid.empty()) {
        if (prior.kind() != AlphaPrior::Kind::pc) throw CommandError(kUsage, "--theta-grid requires a pc alpha prior");
        thetas = parse_range(cfg.theta_grid);
        for (double t : thetas)
            if (!(t > 0.0)) throw CommandError(kUsage, "theta grid values must be positive");
    }
    for (double p : cfg.probs)
        if (!(p > 0.0 && p < 1.0)) throw CommandError(kUsage, "probability levels must lie in (0, 1)");
    ChainConfig chain = ChainConfig::application_protocol(cfg.seed);
    chain.n_iter = cfg.n_iter;
    chain.burn_in = cfg.burn_in;
    chain.thin = cfg.thin;
    try {
        chain.validate();
        if (cfg.model == "spline" && cfg.num_basis < 4) throw std::invalid_argument("--K must be at least 4");
    } catch (const std::invalid_argument& e) {
        throw CommandError(kUsage, e.what());
    }
    if (chain.retained() == 0) throw CommandError(kUsage, "no draws retained: increase --iters or lower --thin");
    const auto outdir = resolve_outdir(cfg.outdir);
    cfg.outdir = outdir.string();

    auto in = detail::open_input(cfg.input);
    const WetDaySeries series = read_series_csv(in);
    if (series.empty()) throw CommandError(kEmpty, "series '" + cfg.input + "' has no rows");
    const auto [min_it, max_it] = std::minmax_element(
        series.begin(), series.end(), [](const SeriesRow& a, const SeriesRow& b) { return a.year < b.year; });
    if (std::isnan(cfg.domain_lo)) cfg.domain_lo = min_it->year;
    if (std::isnan(cfg.domain_hi)) cfg.domain_hi = max_it->year;
    if (!(cfg.domain_lo < cfg.domain_hi))
        throw CommandError(kEmpty, "covariate range is degenerate: need at least two distinct years");
    out << cfg.to_json().dump() << '\n';

    Dataset data;
    for (const auto& r : series) {
        if (r.year < cfg.domain_lo || r.year > cfg.domain_hi)
            throw CommandError(kSchema, "year " + std::to_string(r.year) + " lies outside the fitting domain");
        data.x.push_back(r.year);
        data.y.push_back(r.rainfall);
    }

    if (thetas.empty()) thetas.push_back(prior.kind() == AlphaPrior::Kind::pc ? prior.theta() : 0.0);
    std::vector<std::optional<ThetaTrial>> slots(thetas.size());
    parallel_for(thetas.size(), cfg.jobs, [&](std::size_t i) {
        const AlphaPrior p = prior.kind() == AlphaPrior::Kind::pc ? AlphaPrior::pc(thetas[i]) : prior;
        slots[i].emplace(ThetaTrial{thetas[i], fit_model(detail::fit_spec(cfg, p), data, chain)});
    });
    std::vector<ThetaTrial> trials;
    for (auto& s : slots) trials.push_back(std::move(*s));
    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i)
        if (trials[i].fit.waic < trials[best].fit.waic) best = i;
    const FittedModel& fit = trials[best].fit;
    const PosteriorDraws& d = fit.draws;

    {
        const auto path = outdir / "draws.csv";
        auto f = detail::open_output(path);
        detail::write_draws(f, d);
        detail::close_output(f, path);
    }
    {
        const auto path = outdir / "summary.csv";
        auto f = detail::open_output(path);
        detail::write_summary(f, fit, cfg.probs, cfg.domain_lo, cfg.domain_hi);
        detail::close_output(f, path);
    }

    double alpha_mean = 0.0;
    for (double a : d.alpha) alpha_mean += a;
    alpha_mean /= static_cast<double>(d.size());
    double alpha_var = 0.0;
    for (double a : d.alpha) alpha_var += (a - alpha_mean) * (a - alpha_mean);
    const double alpha_sd = d.size() > 1 ? std::sqrt(alpha_var / static_cast<double>(d.size() - 1)) : 0.0;
    const Interval ci = credible_interval(d.alpha, 0.95);
    const Summary shift = decadal_shift(fit, cfg.domain_lo, cfg.domain_hi);

    Json grid = Json::array();
    if (!cfg.theta_grid.empty())
        for (const auto& t : trials) grid.push_back(Json{{"theta", t.theta}, {"waic", detail::finite_or_null(t.fit.waic)}});
    Json warnings = Json::array();
    for (const auto& t : trials)
        for (const auto& w : t.fit.draws.warnings) warnings.push_back(w);

    Json result{{"waic", detail::finite_or_null(fit.waic)},
                {"theta_selected", prior.kind() == AlphaPrior::Kind::pc ? Json(trials[best].theta) : Json(nullptr)},
                {"alpha_prior", fit.spec.alpha_prior().label()},
                {"theta_grid", grid},
                {"acceptance_rates", d.acceptance_rates},
                {"ess", detail::ess_json(d)},
                {"alpha", {{"mean", alpha_mean}, {"sd", alpha_sd}, {"lo95", ci.lo}, {"hi95", ci.hi}}},
                {"decadal_shift",
                 {{"from", cfg.domain_lo}, {"to", cfg.domain_hi}, {"mean", shift.mean}, {"lo95", shift.lo95},
                  {"hi95", shift.hi95}}},
                {"retained_draws", d.size()},
                {"warnings", warnings},
                {"config", cfg.to_json()}};
    {
        const auto path = outdir / "waic.json";
        auto f = detail::open_output(path);
        f << result.dump(2) << '\n';
        detail::close_output(f, path);
    }

    out << "waic " << format_double(fit.waic) << "\nalpha_mean " << format_double(alpha_mean)
        << "\ndecadal_shift " << format_double(shift.mean) << '\n';
    for (const auto& w : warnings) err << "warning: " << w.get<std::string>() << '\n';
    for (const auto& t : trials)
        if (t.fit.draws.failed)
            throw CommandError(kNumerical, "chain failed at theta " + format_double(t.theta) +
                                               ": a parameter accepted no post-burn-in proposals");
    return kOk;
}

// ------------------------------------------------------------------ simulate

struct SimulateConfig {
    int setting = 1;
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    std::string outdir;
    SimOptions sim;

    Json to_json() const {
        return Json{{"command", "simulate"},
                    {"setting", setting},
                    {"replicates", replicates},
                    {"seed", seed},
                    {"outdir", outdir},
                    {"iters", sim.n_iter},
                    {"burnin", sim.burn_in},
                    {"thin", sim.thin},
                    {"K", sim.num_basis},
                    {"beta_true", {sim.beta0_true, sim.beta1_true}},
                    {"jobs", sim.jobs}};
    }
};

inline int cmd_simulate(SimulateConfig cfg, std::ostream& out, std::ostream& err) {
    SimSetting setting;
    try {
        setting = sim_setting(cfg.setting);
        if (cfg.replicates == 0) throw std::invalid_argument("--replicates must be positive");
        ChainConfig c = ChainConfig::simulation_protocol(0);
        c.n_iter = cfg.sim.n_iter;
        c.burn_in = cfg.sim.burn_in;
        c.thin = cfg.sim.thin;
        c.validate();
        if (c.retained() == 0) throw std::invalid_argument("no draws retained: increase --iters or lower --thin");
        if (cfg.sim.num_basis < 4) throw std::invalid_argument("--K must be at least 4");
    } catch (const std::invalid_argument& e) {
        throw CommandError(kUsage, e.what());
    }
    const auto outdir = resolve_outdir(cfg.outdir);
    cfg.outdir = outdir.string();
    out << cfg.to_json().dump() << '\n';

    const auto records = run_setting(setting, cfg.replicates, cfg.seed, cfg.sim);
    const auto rows = aggregate(records);
    {
        const auto path = outdir / "replicates.csv";
        auto f = detail::open_output(path);
        write_replicates_csv(f, records);
        detail::close_output(f, path);
    }
    {
        const auto path = outdir / "aggregate.csv";
        auto f = detail::open_output(path);
        write_aggregate_csv(f, rows);
        detail::close_output(f, path);
    }
    out << "replicate_rows " << records.size() << "\ncells " << rows.size() << '\n';
    bool any_empty = false;
    for (const auto& r : rows) {
        if (r.failed == 0) continue;
        err << "cell fit=" << to_string(r.fit) << " prior=" << r.prior << " alpha=" << format_double(r.alpha_true)
            << " n=" << r.n << ": " << r.failed << " of " << r.replicates << " replicates failed\n";
        any_empty = any_empty || r.empty;
    }
    if (any_empty) throw CommandError(kNumerical, "at least one cell has no usable replicate");
    return kOk;
}

// ------------------------------------------------------------- prior-density

struct PriorDensityConfig {
    double theta = 2.5;
    std::string grid = "0.01:5:0.01";
    std::string out;  // defaults to $GEREG_OUTDIR/prior_density.csv

    Json to_json() const {
        return Json{{"command", "prior-density"}, {"theta", theta}, {"grid", grid}, {"out", out}};
    }
};

inline int cmd_prior_density(PriorDensityConfig cfg, std::ostream& out, std::ostream&) {
    if (!(cfg.theta > 0.0) || !std::isfinite(cfg.theta)) throw CommandError(kUsage, "--theta must be positive");
    const auto alphas = parse_range(cfg.grid);
    if (!(alphas.front() > 0.0)) throw CommandError(kUsage, "alpha grid must start above 0");
    std::filesystem::path target = cfg.out;
    if (cfg.out.empty()) target = resolve_outdir("") / "prior_density.csv";
    cfg.out = target.string();
    out << cfg.to_json().dump() << '\n';

    auto f = detail::open_output(target);
    f << "alpha,density\n";
    for (double a : alphas) f << format_double(a) << ',' << format_double(std::exp(pc_log_density(a, cfg.theta))) << '\n';
    detail::close_output(f, target);
    out << "points " << alphas.size() << '\n';
    return kOk;
}

/// Maps exceptions escaping a command to an exit code and message.
template <class Fn>
int run_guarded(Fn&& fn, std::ostream& err) {
    try {
        return fn();
    } catch (const CommandError& e) {
        err << "error: " << e.what() << '\n';
        return e.code();
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kSchema;
    } catch (const UnknownRegion& e) {
        err << "error: " << e.what() << '\n';
        return kSchema;
    } catch (const std::domain_error& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    }
}

}  // namespace gereg::cli
