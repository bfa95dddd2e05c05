#include "pnorm/consistency.hpp"
#include "pnorm/critical_values.hpp"
#include "pnorm/csv.hpp"
#include "pnorm/dominant_test.hpp"
#include "pnorm/sample_split.hpp"
#include "pnorm/simulation.hpp"
#include "pnorm/test_engine.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace pnorm;

namespace {

// Exit codes: decisions live in the reports, never in the status.
constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;
constexpr int kData = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<Exponent> parse_exponents(const std::vector<std::string>& text, const char* flag) {
    std::vector<Exponent> out;
    for (const auto& t : text) {
        try {
            out.push_back(Exponent::parse(t));
        } catch (const std::exception& e) {
            throw UsageError(std::string(flag) + ": " + e.what());
        }
    }
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--grid: cannot parse '" + text + "' (expected lo:hi:step)");
        }
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw UsageError("--grid: expected lo:hi:step with lo <= hi and step > 0");
    }
    const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    if (count > 10000000) throw UsageError("--grid: more than 1e7 points");
    std::vector<double> grid;
    for (long i = 0; i < count; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return grid;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, 0, 0, "cannot open file");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError(path, 0, 0, e.what());
    }
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError(path, 0, 0, "cannot write file");
    out << text;
    if (!out) throw DataError(path, 0, 0, "write failed");
}

std::string dump(const Json& j) {
    return j.dump(2) + "\n";
}

CovEstimator estimator_flag(const std::string& name) {
    try {
        return parse_estimator(name);
    } catch (const std::exception& e) {
        throw UsageError(std::string("--estimator: ") + e.what());
    }
}

StandaloneMode standalone_flag(const std::string& name) {
    if (name == "asymptotic") return StandaloneMode::asymptotic;
    if (name == "mc") return StandaloneMode::monte_carlo;
    throw UsageError("--standalone: expected asymptotic|mc");
}

DominantTestSpec load_spec(const std::string& path) {
    const Json j = read_json_file(path);
    DominantTestSpec spec;
    try {
        spec = DominantTestSpec::from_json(j);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(path, 0, 0, std::string("not a calibrated spec: ") + e.what());
    }
    if (!spec.calibrated()) throw DataError(path, 0, 0, "spec carries no critical-value table");
    return spec;
}

// Options shared by test, invert and split-test.
struct EngineFlags {
    double alpha = 0.05;
    std::string estimator = "trunc";
    double trunc_mult = 3.0;
    std::string standalone = "asymptotic";
    long reps = 0;
    std::uint64_t seed = 20240917;
    unsigned threads = 1;

    void add(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "Total size")->check(CLI::Range(1e-9, 1.0 - 1e-9));
        cmd->add_option("--estimator", estimator, "Covariance estimator: trunc|sample");
        cmd->add_option("--trunc-mult", trunc_mult, "Truncation multiple of the median row norm")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--standalone", standalone, "Single-exponent critical values: asymptotic|mc");
        cmd->add_option("--reps", reps, "Monte-Carlo draws (0 picks the default)")->check(CLI::NonNegativeNumber);
        cmd->add_option("--seed", seed, "Seed");
        cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    }

    TestOptions options() const {
        TestOptions o;
        o.alpha = alpha;
        o.covariance.estimator = estimator_flag(estimator);
        o.covariance.trunc_mult = trunc_mult;
        o.standalone = standalone_flag(standalone);
        if (reps > 0) o.mc_reps = reps;
        o.mc_seed = seed;
        o.threads = threads;
        return o;
    }
};

// A spec from --table, or a default one calibrated on the spot.
DominantTestSpec spec_for(const std::string& table, long d, const EngineFlags& f) {
    if (!table.empty()) {
        DominantTestSpec spec = load_spec(table);
        if (spec.d != d) {
            throw DataError(table, 0, 0, "table dimension " + std::to_string(spec.d) + " differs from data dimension "
                                             + std::to_string(d));
        }
        return spec;
    }
    if (d < 2) throw DataError("<data>", 0, 0, "the combined test needs at least 2 moments");
    DominantTestSpec spec = default_spec(d, f.alpha);
    const long reps = f.reps > 0 ? f.reps : default_calibration_reps(spec);
    return calibrate(std::move(spec), reps, f.seed, f.threads);
}

int run_tabulate(const std::vector<std::string>& p_text, const std::vector<double>& xs, const std::vector<long>& ds,
                 double alpha) {
    const auto ps = parse_exponents(p_text, "--p");
    std::cout << std::setprecision(12);
    if (!ds.empty()) {
        std::cout << "p,d,alpha,kappa_asymptotic,kappa_exact\n";
        for (const auto& p : ps) {
            for (const long d : ds) {
                std::cout << p.to_string() << ',' << d << ',' << alpha << ',';
                if (p.is_inf()) {
                    if (d >= 3) std::cout << kappa_inf_asymptotic(d, alpha);
                    std::cout << ',' << kappa_inf_exact(d, alpha) << '\n';
                } else {
                    std::cout << kappa_p_asymptotic(p.value(), d, alpha) << ",\n";
                }
            }
        }
        return kOk;
    }
    std::cout << "p,x,lambda,sigma,g\n";
    for (const auto& p : ps) {
        if (p.is_inf()) throw UsageError("--p: moments are tabulated for finite exponents only");
        for (const double x : xs) {
            std::cout << p.to_string() << ',' << x << ',' << lambda_p(p.value(), x) << ',' << sigma_p(p.value())
                      << ',' << g_p(p.value(), x) << '\n';
        }
    }
    return kOk;
}

struct CalibrateFlags {
    long d = 0;
    double alpha = 0.05;
    std::string grid = "default";
    int max_m = kDefaultMaxGrid;
    double alpha_2 = 0.0;
    double alpha_inf = 0.0;
    std::vector<double> p_grid;
    std::vector<double> shares;
    long reps = 0;
    std::uint64_t seed = 20240917;
    unsigned threads = 1;
    std::string out;
};

int run_calibrate(const CalibrateFlags& f) {
    DominantTestSpec spec;
    try {
        if (f.grid == "default") {
            spec = default_spec(f.d, f.alpha, f.max_m);
        } else if (f.grid == "custom") {
            spec = custom_spec(f.d, f.alpha, f.alpha_2, f.alpha_inf, f.p_grid, f.shares);
        } else {
            throw UsageError("--grid: expected default|custom");
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const long reps = f.reps > 0 ? f.reps : default_calibration_reps(spec);
    try {
        spec = calibrate(std::move(spec), reps, f.seed, f.threads);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    emit(f.out, dump(spec.to_json()));
    const auto& t = spec.critical_values();
    std::cerr << "calibrated d=" << spec.d << " with " << reps << " draws: c_n=" << t.c_n
              << (t.conservative ? " (clipped)" : "") << '\n';
    return kOk;
}

int run_test(const std::string& data, const std::string& table, const EngineFlags& f,
             const std::vector<std::string>& extra, int kurtosis, const std::string& out) {
    const MomentSample sample = read_moment_csv(data);
    TestOptions o = f.options();
    o.extra_exponents = parse_exponents(extra, "--p");
    o.kurtosis_directions = kurtosis;
    o.kurtosis_seed = f.seed;
    const DominantTestSpec spec = spec_for(table, static_cast<long>(sample.d()), f);
    o.alpha = spec.alpha_total;
    const TestReport report = run_tests(sample, spec, o);
    Json j = report.to_json();
    j["data"] = data;
    emit(out, dump(j));
    return kOk;
}

int run_invert(const std::string& model, const std::string& data, const std::string& grid_text,
               const std::string& p_text, const EngineFlags& f, const std::string& out) {
    if (model != "iv") throw UsageError("--model: only 'iv' is supported");
    const auto grid = parse_grid(grid_text);
    const Exponent p = parse_exponents({p_text}, "--p").front();
    const IvMomentModel iv(read_iv_csv(data));
    const ConfidenceSet cs = invert_confidence_set(iv, grid, p, f.options());
    std::cout << std::setprecision(12);
    for (const double b : cs.retained()) std::cout << b << '\n';
    long undetermined = 0;
    for (const auto& c : cs.candidates) undetermined += c.undetermined ? 1 : 0;
    std::cerr << cs.retained().size() << " of " << grid.size() << " grid points retained";
    if (undetermined > 0) std::cerr << " (" << undetermined << " kept because the covariance could not be whitened)";
    std::cerr << '\n';
    if (!out.empty()) emit(out, dump(cs.to_json()));
    return kOk;
}

struct SimulateFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<long> reps;
    std::optional<unsigned> threads;
    bool no_timing = false;
};

int run_simulate(const SimulateFlags& f) {
    Json j = read_json_file(f.config);
    if (!j.is_object()) throw ConfigError("<root>", "expected an object");
    if (f.seed) j["seed"] = *f.seed;
    if (f.reps) j["reps"] = *f.reps;
    if (f.threads) j["threads"] = *f.threads;
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const SimulationReport report = run_experiment(cfg);
    emit(f.out, dump(report.to_json(!f.no_timing)));
    std::cerr << "test,rejections,rate,mc_se\n";
    for (const auto& a : report.aggregates) {
        std::cerr << a.test << ',' << a.rejections << ',' << a.rate << ',' << a.mc_se << '\n';
    }
    return kOk;
}

int run_generate(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
    Json j = read_json_file(config);
    if (!j.is_object()) throw ConfigError("<root>", "expected an object");
    if (seed) j["seed"] = *seed;
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    std::ostringstream text;
    switch (cfg.kind) {
        case ExperimentKind::gaussian:
            write_moment_csv(text, gen_gaussian_sample(cfg.gaussian.n, cfg.gaussian.mean, cfg.gaussian.cov, cfg.seed));
            break;
        case ExperimentKind::split:
            write_moment_csv(text, gen_gaussian_sample(cfg.split.n, cfg.split.mean, cfg.split.cov, cfg.seed));
            break;
        case ExperimentKind::iv: write_iv_csv(text, gen_iv_data(cfg.iv.model, cfg.seed)); break;
        case ExperimentKind::rct:
            write_moment_csv(text, gen_rct(cfg.rct.model, cfg.rct.beta_star, cfg.seed));
            break;
        case ExperimentKind::limit:
            throw ConfigError("kind", "the limit experiment has no data set to write");
    }
    emit(out, text.str());
    return kOk;
}

int run_split(const std::string& data, const std::string& table, const std::string& select, long d, double frac1,
              const std::string& greedy_p, const EngineFlags& f, const std::string& out) {
    const MomentSample sample = read_moment_csv(data);
    if (d > sample.d()) {
        throw DataError(data, 0, 0, "--d " + std::to_string(d) + " exceeds the " + std::to_string(sample.d())
                                        + " moments in the data");
    }
    SelectionRule rule;
    try {
        rule = parse_selection_rule(select);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--select: ") + e.what());
    }
    const Exponent gp = parse_exponents({greedy_p}, "--greedy-p").front();
    TestOptions o = f.options();
    const DominantTestSpec spec = spec_for(table, d, f);
    o.alpha = spec.alpha_total;
    const SplitTestResult r = split_test(sample, d, make_selector(rule, gp, o.rank_tol, f.threads), spec, o, frac1, f.seed);
    Json j = r.to_json();
    j["data"] = data;
    j["select"] = select;
    emit(out, dump(j));
    for (const auto& w : j.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-norm tests for many moment equalities"};
    app.require_subcommand(1);

    std::vector<std::string> tab_p{"2"};
    std::vector<double> tab_x{0.0};
    std::vector<long> tab_d;
    double tab_alpha = 0.05;
    auto* tab = app.add_subcommand("tabulate", "Print lambda_p, sigma_p and g_p, or critical values, as CSV");
    tab->add_option("--p", tab_p, "Exponents (numbers or inf)");
    tab->add_option("--x", tab_x, "Shifts");
    tab->add_option("--d", tab_d, "Dimensions; switches to the critical-value table")->check(CLI::PositiveNumber);
    tab->add_option("--alpha", tab_alpha, "Size")->check(CLI::Range(1e-9, 1.0 - 1e-9));

    CalibrateFlags cal;
    auto* calc = app.add_subcommand("calibrate", "Calibrate the combined test and write its spec with critical values");
    calc->add_option("--d", cal.d, "Number of moments")->required()->check(CLI::Range(2L, 100000000L));
    calc->add_option("--alpha", cal.alpha, "Total size")->check(CLI::Range(1e-9, 1.0 - 1e-9));
    calc->add_option("--grid", cal.grid, "default|custom");
    calc->add_option("--max-m", cal.max_m, "Largest number of intermediate exponents (default grid)")
        ->check(CLI::PositiveNumber);
    calc->add_option("--alpha-2", cal.alpha_2, "Share of p=2 (custom grid)");
    calc->add_option("--alpha-inf", cal.alpha_inf, "Share of p=inf (custom grid)");
    calc->add_option("--p-grid", cal.p_grid, "Intermediate exponents (custom grid)")->delimiter(',');
    calc->add_option("--shares", cal.shares, "Their shares (custom grid)")->delimiter(',');
    calc->add_option("--reps", cal.reps, "Gaussian draws (0 picks the default)")->check(CLI::NonNegativeNumber);
    calc->add_option("--seed", cal.seed, "Seed");
    calc->add_option("--threads", cal.threads, "Worker threads")->check(CLI::PositiveNumber);
    calc->add_option("--out", cal.out, "Output JSON (default stdout)");

    std::string test_data;
    std::string test_table;
    std::string test_out;
    std::vector<std::string> test_p;
    int test_kurtosis = 0;
    EngineFlags test_flags;
    auto* test = app.add_subcommand("test", "Run every test on a CSV of moment evaluations");
    test->add_option("--data", test_data, "CSV, one observation per row")->required();
    test->add_option("--table", test_table, "Calibrated spec from `calibrate` (else calibrated here)");
    test->add_option("--p", test_p, "Extra exponents to report");
    test->add_option("--kurtosis", test_kurtosis, "Random directions for the kurtosis diagnostic")
        ->check(CLI::NonNegativeNumber);
    test->add_option("--out", test_out, "Report JSON (default stdout)");
    test_flags.add(test);

    std::string inv_model = "iv";
    std::string inv_data;
    std::string inv_grid;
    std::string inv_p = "2";
    std::string inv_out;
    EngineFlags inv_flags;
    auto* inv = app.add_subcommand("invert", "Confidence set for beta by test inversion over a grid");
    inv->add_option("--model", inv_model, "Moment model (iv)");
    inv->add_option("--data", inv_data, "CSV with columns y, Y, z1..zd")->required();
    inv->add_option("--grid", inv_grid, "lo:hi:step")->required();
    inv->add_option("--p", inv_p, "Exponent");
    inv->add_option("--out", inv_out, "Per-candidate JSON");
    inv_flags.add(inv);

    SimulateFlags sim;
    auto* simc = app.add_subcommand("simulate", "Run a simulation experiment from a JSON config");
    simc->add_option("--config", sim.config, "Experiment JSON")->required();
    simc->add_option("--out", sim.out, "Report JSON (default stdout)");
    simc->add_option("--seed", sim.seed, "Override the config seed");
    simc->add_option("--reps", sim.reps, "Override the config reps");
    simc->add_option("--threads", sim.threads, "Override the config threads")->check(CLI::PositiveNumber);
    simc->add_flag("--no-timing", sim.no_timing, "Leave wall-clock time out of the report");

    std::string gen_config;
    std::string gen_out;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("generate", "Write one data set drawn from an experiment config as CSV");
    gen->add_option("--config", gen_config, "Experiment JSON (gaussian, iv, rct or split)")->required();
    gen->add_option("--seed", gen_seed, "Override the config seed");
    gen->add_option("--out", gen_out, "CSV (default stdout)");

    std::string sp_data;
    std::string sp_table;
    std::string sp_select = "top";
    std::string sp_greedy_p = "2";
    std::string sp_out;
    long sp_d = 0;
    double sp_frac1 = 0.5;
    EngineFlags sp_flags;
    auto* spc = app.add_subcommand("split-test", "Select d moments on one fold and test them on the other");
    spc->add_option("--data", sp_data, "CSV over all D moments")->required();
    spc->add_option("--select", sp_select, "top|greedy");
    spc->add_option("--d", sp_d, "Moments to keep")->required()->check(CLI::Range(2L, 100000000L));
    spc->add_option("--frac1", sp_frac1, "Share of rows in the selection fold")->check(CLI::Range(1e-9, 1.0 - 1e-9));
    spc->add_option("--greedy-p", sp_greedy_p, "Exponent maximized by greedy selection");
    spc->add_option("--table", sp_table, "Calibrated spec for dimension d (else calibrated here)");
    spc->add_option("--out", sp_out, "Report JSON (default stdout)");
    sp_flags.add(spc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (tab->parsed()) return run_tabulate(tab_p, tab_x, tab_d, tab_alpha);
        if (calc->parsed()) return run_calibrate(cal);
        if (test->parsed()) return run_test(test_data, test_table, test_flags, test_p, test_kurtosis, test_out);
        if (inv->parsed()) return run_invert(inv_model, inv_data, inv_grid, inv_p, inv_flags, inv_out);
        if (simc->parsed()) return run_simulate(sim);
        if (gen->parsed()) return run_generate(gen_config, gen_seed, gen_out);
        if (spc->parsed()) {
            return run_split(sp_data, sp_table, sp_select, sp_d, sp_frac1, sp_greedy_p, sp_flags, sp_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kData;
    } catch (const Json::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::out_of_range& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::domain_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}
