#include "pnorm/simulation.hpp"

#include "pnorm/rng.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pnorm {

namespace {

constexpr std::uint64_t kSimTag = 0x6f;

ExperimentKind kind_at(const Json& j) {
    const auto name = required<std::string>(j, "kind", "");
    try {
        return parse_experiment_kind(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("kind", e.what());
    }
}

std::vector<Exponent> exponents_at(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of exponents");
    std::vector<Exponent> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            out.push_back(j[i].get<Exponent>());
        } catch (const std::exception& e) {
            throw ConfigError(path + "[" + std::to_string(i) + "]", e.what());
        }
    }
    return out;
}

TestSelection tests_from_json(const Json& j, const std::string& path) {
    TestSelection t;
    if (j.contains("exponents")) t.exponents = exponents_at(j.at("exponents"), path + ".exponents");
    t.psi = optional<bool>(j, "psi", path, t.psi);
    t.psi_clipped = optional<bool>(j, "psi_clipped", path, t.psi_clipped);
    if (j.contains("estimators")) {
        const auto names = required<std::vector<std::string>>(j, "estimators", path);
        if (names.empty()) throw ConfigError(path + ".estimators", "must not be empty");
        t.estimators.clear();
        for (const auto& name : names) {
            try {
                t.estimators.push_back(parse_estimator(name));
            } catch (const std::exception& e) {
                throw ConfigError(path + ".estimators", e.what());
            }
        }
    }
    t.trunc_mult = optional<double>(j, "trunc_mult", path, t.trunc_mult);
    if (!(t.trunc_mult > 0.0)) throw ConfigError(path + ".trunc_mult", "must be positive");
    const auto mode = optional<std::string>(j, "standalone", path, "asymptotic");
    if (mode == "asymptotic") {
        t.standalone = StandaloneMode::asymptotic;
    } else if (mode == "monte_carlo") {
        t.standalone = StandaloneMode::monte_carlo;
    } else {
        throw ConfigError(path + ".standalone", "expected \"asymptotic\" or \"monte_carlo\"");
    }
    t.standalone_mc_reps = optional<long>(j, "standalone_mc_reps", path, t.standalone_mc_reps);
    return t;
}

CalibrationConfig calibration_from_json(const Json& j, const std::string& path) {
    CalibrationConfig c;
    const auto grid = optional<std::string>(j, "grid", path, "default");
    if (grid == "custom") {
        c.custom = true;
        c.alpha_2 = required<double>(j, "alpha_2", path);
        c.alpha_inf = required<double>(j, "alpha_inf", path);
        c.p_grid = required<std::vector<double>>(j, "p_grid", path);
        c.shares = required<std::vector<double>>(j, "shares", path);
    } else if (grid != "default") {
        throw ConfigError(path + ".grid", "expected \"default\" or \"custom\"");
    }
    c.max_m = optional<int>(j, "max_m", path, c.max_m);
    if (c.max_m < 1) throw ConfigError(path + ".max_m", "must be >= 1");
    c.reps = optional<long>(j, "reps", path, c.reps);
    if (c.reps < 0) throw ConfigError(path + ".reps", "must be >= 0");
    c.seed = optional<std::uint64_t>(j, "seed", path, c.seed);
    return c;
}

// "mean" is in the units of the data; "mean_se" in standard errors, i.e.
// divided by sqrt(n).
Vector mean_at(const Json& j, long d, long n, const std::string& path) {
    if (j.contains("mean") && j.contains("mean_se")) throw ConfigError(path, "give either mean or mean_se");
    if (j.contains("mean_se")) return vector_field(j, "mean_se", d, path, false) / std::sqrt(static_cast<double>(n));
    return vector_field(j, "mean", d, path, true);
}

CovStructure cov_at(const Json& j, const std::string& path) {
    return j.contains("cov") ? cov_structure_from_json(j.at("cov"), path + ".cov") : CovStructure{};
}

const Json& section(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_object()) throw ConfigError(key, "missing section for this kind");
    return j.at(key);
}

std::string format_number(double x) {
    std::ostringstream out;
    out << x;
    return out.str();
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
    if (name == "gaussian") return ExperimentKind::gaussian;
    if (name == "limit") return ExperimentKind::limit;
    if (name == "iv") return ExperimentKind::iv;
    if (name == "rct") return ExperimentKind::rct;
    if (name == "split") return ExperimentKind::split;
    throw std::invalid_argument("unknown experiment kind '" + name + "' (expected gaussian|limit|iv|rct|split)");
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::gaussian: return "gaussian";
        case ExperimentKind::limit: return "limit";
        case ExperimentKind::iv: return "iv";
        case ExperimentKind::rct: return "rct";
        case ExperimentKind::split: return "split";
    }
    return "unknown";
}

DominantTestSpec CalibrationConfig::spec(long d, double alpha) const {
    if (custom) return custom_spec(d, alpha, alpha_2, alpha_inf, p_grid, shares);
    return default_spec(d, alpha, max_m);
}

long ExperimentConfig::test_dimension() const {
    switch (kind) {
        case ExperimentKind::gaussian: return gaussian.d;
        case ExperimentKind::limit: return static_cast<long>(limit.theta.d());
        case ExperimentKind::iv: return iv.model.d;
        case ExperimentKind::rct: return rct.model.d;
        case ExperimentKind::split: return split.d;
    }
    return 0;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("$", "experiment config must be a JSON object");
    const int version = required<int>(j, "schema_version", "");
    if (version != kSchemaVersion) {
        throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
    }
    ExperimentConfig c;
    c.source = j;
    c.kind = kind_at(j);
    c.id = optional<std::string>(j, "id", "", c.id);
    c.reps = optional<long>(j, "reps", "", c.reps);
    if (c.reps < 1) throw ConfigError("reps", "reps must be >= 1");
    c.seed = optional<std::uint64_t>(j, "seed", "", c.seed);
    c.threads = optional<unsigned>(j, "threads", "", c.threads);
    c.alpha = optional<double>(j, "alpha", "", c.alpha);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
    c.record_statistics = optional<bool>(j, "record_statistics", "", false);
    if (j.contains("tests")) c.tests = tests_from_json(j.at("tests"), "tests");
    if (j.contains("calibration")) c.calibration = calibration_from_json(j.at("calibration"), "calibration");

    switch (c.kind) {
        case ExperimentKind::gaussian: {
            const Json& s = section(j, "gaussian");
            auto& g = c.gaussian;
            g.n = required<long>(s, "n", "gaussian");
            g.d = required<long>(s, "d", "gaussian");
            if (g.n < 4) throw ConfigError("gaussian.n", "must be >= 4");
            if (g.d < 2) throw ConfigError("gaussian.d", "must be >= 2");
            g.mean = mean_at(s, g.d, g.n, "gaussian");
            g.cov = cov_at(s, "gaussian");
            break;
        }
        case ExperimentKind::limit: {
            const Json& s = section(j, "limit");
            const long d = required<long>(s, "d", "limit");
            if (d < 2) throw ConfigError("limit.d", "must be >= 2");
            if (s.contains("theta") && s.at("theta").is_object() && s.at("theta").contains("family")) {
                const Json& t = s.at("theta");
                AlternativeParams params;
                params.t = optional<double>(t, "t", "limit.theta", params.t);
                params.k_scale = optional<double>(t, "k_scale", "limit.theta", params.k_scale);
                params.scale = optional<double>(t, "scale", "limit.theta", params.scale);
                try {
                    c.limit.theta = make_alternative(
                        parse_alternative(required<std::string>(t, "family", "limit.theta")), d, params);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError("limit.theta", e.what());
                }
            } else {
                c.limit.theta.theta = vector_field(s, "theta", d, "limit", true);
            }
            break;
        }
        case ExperimentKind::iv: {
            const Json& s = section(j, "iv");
            c.iv.model = IvConfig::from_json(s, "iv");
            if (!s.contains("beta_star")) {
                c.iv.beta_star = {c.iv.model.beta_true};
            } else if (s.at("beta_star").is_number()) {
                c.iv.beta_star = {s.at("beta_star").get<double>()};
            } else {
                c.iv.beta_star = required<std::vector<double>>(s, "beta_star", "iv");
                if (c.iv.beta_star.empty()) throw ConfigError("iv.beta_star", "must not be empty");
            }
            break;
        }
        case ExperimentKind::rct: {
            const Json& s = section(j, "rct");
            c.rct.model = RctConfig::from_json(s, "rct");
            c.rct.beta_star = s.contains("beta_star") ? vector_field(s, "beta_star", c.rct.model.d, "rct", false)
                                                      : c.rct.model.effect;
            break;
        }
        case ExperimentKind::split: {
            const Json& s = section(j, "split");
            auto& sp = c.split;
            sp.n = required<long>(s, "n", "split");
            sp.total = required<long>(s, "D", "split");
            sp.d = required<long>(s, "d", "split");
            if (sp.total < 2) throw ConfigError("split.D", "must be >= 2");
            if (sp.d < 2 || sp.d > sp.total) throw ConfigError("split.d", "must lie in [2, D]");
            sp.frac1 = optional<double>(s, "frac1", "split", sp.frac1);
            if (!(sp.frac1 > 0.0 && sp.frac1 < 1.0)) throw ConfigError("split.frac1", "must lie in (0, 1)");
            sp.mean = mean_at(s, sp.total, sp.n, "split");
            sp.cov = cov_at(s, "split");
            if (s.contains("select")) {
                sp.rules.clear();
                for (const auto& name : required<std::vector<std::string>>(s, "select", "split")) {
                    try {
                        sp.rules.push_back(parse_selection_rule(name));
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError("split.select", e.what());
                    }
                }
                if (sp.rules.empty()) throw ConfigError("split.select", "must not be empty");
            }
            if (s.contains("greedy_p")) {
                try {
                    sp.greedy_p = s.at("greedy_p").get<Exponent>();
                } catch (const std::exception& e) {
                    throw ConfigError("split.greedy_p", e.what());
                }
            }
            break;
        }
    }
    return c;
}

const TestAggregate& SimulationReport::aggregate(const std::string& test) const {
    for (const auto& a : aggregates) {
        if (a.test == test) return a;
    }
    throw std::out_of_range("no test labelled '" + test + "' in report");
}

Json SimulationReport::to_json(bool include_timing) const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = id;
    j["seed"] = seed;
    j["reps"] = reps;
    j["config"] = config;
    j["tests"] = tests;
    j["c_n"] = c_n;
    j["conservative"] = conservative;
    Json aggs = Json::array();
    for (const auto& a : aggregates) {
        aggs.push_back({{"test", a.test}, {"rejections", a.rejections}, {"rate", a.rate}, {"mc_se", a.mc_se}});
    }
    j["aggregates"] = aggs;
    Json recs = Json::array();
    for (const auto& r : replications) {
        Json rec{{"rep", r.rep}};
        std::vector<int> flags(r.reject.begin(), r.reject.end());
        rec["reject"] = flags;
        if (!r.statistics.empty()) rec["statistics"] = r.statistics;
        recs.push_back(std::move(rec));
    }
    j["replications"] = recs;
    if (include_timing) j["wall_clock_seconds"] = wall_clock_seconds;
    return j;
}

std::vector<TestAggregate> aggregate_flags(const std::vector<std::string>& tests,
                                           const std::vector<ReplicationRecord>& records) {
    std::vector<TestAggregate> out;
    const double reps = static_cast<double>(records.size());
    for (std::size_t k = 0; k < tests.size(); ++k) {
        TestAggregate a;
        a.test = tests[k];
        for (const auto& r : records) a.rejections += r.reject.at(k) ? 1 : 0;
        a.rate = reps > 0 ? static_cast<double>(a.rejections) / reps : 0.0;
        a.mc_se = reps > 0 ? std::sqrt(a.rate * (1.0 - a.rate) / reps) : 0.0;
        out.push_back(a);
    }
    return out;
}

SimulationReport run_experiment(const ExperimentConfig& cfg, const DominantTestSpec* supplied) {
    if (cfg.reps < 1) throw ConfigError("reps", "reps must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const long d = cfg.test_dimension();

    DominantTestSpec spec;
    if (supplied != nullptr) {
        if (!supplied->calibrated() || supplied->d != d) {
            throw std::invalid_argument("run_experiment: supplied spec must be calibrated for d = " + std::to_string(d));
        }
        spec = *supplied;
    } else {
        spec = cfg.calibration.spec(d, cfg.alpha);
        const long reps = cfg.calibration.reps == 0 ? default_calibration_reps(spec) : cfg.calibration.reps;
        spec = calibrate(std::move(spec), reps, cfg.calibration.seed, cfg.threads);
    }

    TestOptions options;
    options.alpha = cfg.alpha;
    options.extra_exponents = cfg.tests.exponents;
    options.standalone = cfg.tests.standalone;
    options.mc_reps = cfg.tests.standalone_mc_reps;
    options.covariance.trunc_mult = cfg.tests.trunc_mult;
    options.threads = cfg.threads;
    const CriticalMap standalone = standalone_criticals(report_exponents(spec, options), d, options);
    options.threads = 1;

    // Contexts: one per beta* (iv) or selection rule (split); estimators:
    // none when the covariance is known.
    std::vector<std::string> contexts{""};
    if (cfg.kind == ExperimentKind::iv) {
        contexts.clear();
        for (const double b : cfg.iv.beta_star) contexts.push_back("beta=" + format_number(b) + "/");
    } else if (cfg.kind == ExperimentKind::split) {
        contexts.clear();
        for (const auto rule : cfg.split.rules) contexts.push_back(to_string(rule) + "/");
    }
    const bool known_cov = cfg.kind == ExperimentKind::limit;
    std::vector<std::string> suffixes;
    if (known_cov) {
        suffixes.push_back("");
    } else {
        for (const auto e : cfg.tests.estimators) suffixes.push_back("/" + to_string(e));
    }
    std::vector<std::string> items;
    for (const auto& p : cfg.tests.exponents) items.push_back("p=" + p.to_string());
    if (cfg.tests.psi) items.push_back("psi");
    if (cfg.tests.psi_clipped) items.push_back("psi_c1");

    SimulationReport report;
    report.id = cfg.id;
    report.config = cfg.source;
    // Reports must not depend on the thread count, so it is not echoed.
    if (report.config.is_object()) report.config.erase("threads");
    report.seed = cfg.seed;
    report.reps = cfg.reps;
    report.c_n = spec.critical_values().c_n;
    report.conservative = spec.critical_values().conservative;
    for (const auto& ctx : contexts) {
        for (const auto& suffix : suffixes) {
            for (const auto& item : items) report.tests.push_back(ctx + item + suffix);
        }
    }

    std::vector<Selector> selectors;
    for (const auto rule : cfg.split.rules) selectors.push_back(make_selector(rule, cfg.split.greedy_p, options.rank_tol));

    report.replications.resize(static_cast<std::size_t>(cfg.reps));
    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
        Stream keys(cfg.seed, {kSimTag, static_cast<std::uint64_t>(r)});
        const std::uint64_t data_seed = keys();
        const std::uint64_t split_seed = keys();

        std::vector<TestReport> reports;  // contexts x estimators
        auto with_estimators = [&](const MomentSample& s) {
            for (const auto e : cfg.tests.estimators) {
                TestOptions o = options;
                o.covariance.estimator = e;
                reports.push_back(run_tests(s, spec, o, &standalone));
            }
        };
        switch (cfg.kind) {
            case ExperimentKind::gaussian:
                with_estimators(gen_gaussian_sample(cfg.gaussian.n, cfg.gaussian.mean, cfg.gaussian.cov, data_seed));
                break;
            case ExperimentKind::limit: {
                const auto v = standardized_known_identity(gen_gaussian_limit(cfg.limit.theta, data_seed));
                reports.push_back(evaluate_standardized(v, 0, spec, standalone, options));
                break;
            }
            case ExperimentKind::iv: {
                const IvData data = gen_iv_data(cfg.iv.model, data_seed);
                for (const double b : cfg.iv.beta_star) with_estimators(iv_moments(data, b));
                break;
            }
            case ExperimentKind::rct:
                with_estimators(gen_rct(cfg.rct.model, cfg.rct.beta_star, data_seed));
                break;
            case ExperimentKind::split: {
                const MomentSample full = gen_gaussian_sample(cfg.split.n, cfg.split.mean, cfg.split.cov, data_seed);
                for (const auto& selector : selectors) {
                    for (const auto e : cfg.tests.estimators) {
                        TestOptions o = options;
                        o.covariance.estimator = e;
                        reports.push_back(
                            split_test(full, cfg.split.d, selector, spec, o, cfg.split.frac1, split_seed, &standalone)
                                .report);
                    }
                }
                break;
            }
        }

        ReplicationRecord rec;
        rec.rep = static_cast<long>(r);
        for (const auto& rep : reports) {
            for (const auto& p : cfg.tests.exponents) {
                const auto& er = rep.record(p);
                rec.reject.push_back(er.reject ? 1 : 0);
                if (cfg.record_statistics) rec.statistics.push_back(er.statistic);
            }
            if (cfg.tests.psi) {
                rec.reject.push_back(rep.dominant.reject ? 1 : 0);
                if (cfg.record_statistics) rec.statistics.push_back(rep.dominant.max_ratio);
            }
            if (cfg.tests.psi_clipped) {
                rec.reject.push_back(rep.dominant.max_ratio >= 1.0 ? 1 : 0);
                if (cfg.record_statistics) rec.statistics.push_back(rep.dominant.max_ratio);
            }
        }
        report.replications[r] = std::move(rec);
    });

    report.aggregates = aggregate_flags(report.tests, report.replications);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace pnorm
