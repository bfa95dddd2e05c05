#include "pnorm/critical_values.hpp"

#include "pnorm/norms.hpp"
#include "pnorm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace pnorm {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("alpha must lie in (0, 1)");
    }
}

void check_dim(long d) {
    if (d < 1) throw std::domain_error("dimension must be >= 1");
}

}  // namespace

double kappa_p_asymptotic(double p, long d, double alpha) {
    check_alpha(alpha);
    check_dim(d);
    const double dd = static_cast<double>(d);
    const double bracket = normal_quantile(1.0 - alpha) * std::sqrt(dd) * sigma_p(p) + dd * lambda_p(p, 0.0);
    if (!(bracket > 0.0)) {
        throw std::domain_error("asymptotic formula invalid at this (d, alpha)");
    }
    return std::pow(bracket, 1.0 / p);
}

double kappa_inf_asymptotic(long d, double alpha) {
    check_alpha(alpha);
    if (d < 3) {
        throw std::domain_error("kappa_inf_asymptotic needs d >= 3; use kappa_inf_exact");
    }
    const double log_d = std::log(static_cast<double>(d));
    const double s = std::sqrt(2.0 * log_d);
    const double kappa = s - (std::log(log_d) + std::log(4.0 * std::numbers::pi)) / (2.0 * s)
                         - std::log(-std::log1p(-alpha) / 2.0) / s;
    if (!(kappa > 0.0)) {
        throw std::domain_error("asymptotic sup-norm formula is not positive at this (d, alpha)");
    }
    return kappa;
}

double kappa_inf_exact(long d, double alpha) {
    check_alpha(alpha);
    check_dim(d);
    // (2 Phi(t) - 1)^d = 1 - alpha  <=>  1 - Phi(t) = (1 - (1 - alpha)^{1/d}) / 2,
    // with the right side formed via expm1/log1p to keep precision for large d.
    const double tail = -std::expm1(std::log1p(-alpha) / static_cast<double>(d)) / 2.0;
    return normal_upper_quantile(tail);
}

double empirical_upper_quantile(std::vector<double>& values, double alpha) {
    check_alpha(alpha);
    if (values.empty()) throw std::invalid_argument("empirical quantile of an empty sample");
    const double n = static_cast<double>(values.size());
    // The small offset keeps exact products such as 0.95 * 1e6 from rounding
    // up a whole order statistic.
    auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values.size());
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

std::vector<std::vector<double>> mc_norm_draws(const std::vector<Exponent>& exponents, long d, long reps,
                                               std::uint64_t seed, unsigned threads) {
    check_dim(d);
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    const NormSet norms(exponents);
    const std::size_t k = exponents.size();
    std::vector<std::vector<double>> out(k, std::vector<double>(static_cast<std::size_t>(reps)));
    const std::size_t block = 256;
    const std::size_t blocks = (static_cast<std::size_t>(reps) + block - 1) / block;
    parallel_for(blocks, threads, [&](std::size_t b) {
        std::vector<double> z(static_cast<std::size_t>(d));
        std::vector<double> vals(k);
        std::vector<double> scratch;
        const std::size_t lo = b * block;
        const std::size_t hi = std::min(static_cast<std::size_t>(reps), lo + block);
        for (std::size_t r = lo; r < hi; ++r) {
            Stream rng(seed, {static_cast<std::uint64_t>(r)});
            rng.fill_normal(z.begin(), z.end());
            norms.evaluate(z, vals, scratch);
            for (std::size_t j = 0; j < k; ++j) out[j][r] = vals[j];
        }
    });
    return out;
}

double mc_pnorm_quantile(Exponent p, long d, double alpha, long reps, std::uint64_t seed, unsigned threads) {
    check_alpha(alpha);
    if (reps < 1000) throw std::invalid_argument("mc_pnorm_quantile needs reps >= 1000");
    auto draws = mc_norm_draws({p}, d, reps, seed, threads);
    return empirical_upper_quantile(draws[0], alpha);
}

long min_reps_for_share(double min_share) {
    return static_cast<long>(std::ceil(100.0 / min_share - 1e-9));
}

CriticalValueTable calibrate_joint(std::vector<ExponentShare> grid, long d, double alpha_total, long reps,
                                   std::uint64_t seed, unsigned threads) {
    check_alpha(alpha_total);
    check_dim(d);
    if (grid.empty()) throw std::invalid_argument("calibrate_joint: empty exponent grid");
    std::sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    double total = 0.0;
    double min_share = 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i].share > 0.0)) throw std::invalid_argument("calibrate_joint: shares must be positive");
        if (i > 0 && grid[i].p == grid[i - 1].p) {
            throw std::invalid_argument("calibrate_joint: duplicate exponent " + grid[i].p.to_string());
        }
        total += grid[i].share;
        min_share = std::min(min_share, grid[i].share);
    }
    if (std::abs(total - alpha_total) > 1e-12) {
        throw std::invalid_argument("calibrate_joint: shares must sum to alpha_total");
    }
    if (static_cast<double>(reps) * min_share < 100.0) {
        throw std::invalid_argument("calibrate_joint: reps too small to resolve the smallest share (need >= "
                                    + std::to_string(min_reps_for_share(min_share)) + ")");
    }

    std::vector<Exponent> exps;
    for (const auto& g : grid) exps.push_back(g.p);
    const auto draws = mc_norm_draws(exps, d, reps, seed, threads);

    CriticalValueTable table;
    table.d = d;
    table.alpha_total = alpha_total;
    table.mc_reps = reps;
    table.seed = seed;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<double> copy = draws[k];
        table.entries.push_back({grid[k].p, grid[k].share, empirical_upper_quantile(copy, grid[k].share)});
    }
    std::vector<double> ratio(static_cast<std::size_t>(reps), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double inv = 1.0 / table.entries[k].kappa;
        for (std::size_t r = 0; r < ratio.size(); ++r) ratio[r] = std::max(ratio[r], draws[k][r] * inv);
    }
    const double c = empirical_upper_quantile(ratio, alpha_total);
    table.conservative = c > 1.0;
    table.c_n = std::min(c, 1.0);
    return table;
}

double CriticalValueTable::kappa(Exponent p) const {
    for (const auto& e : entries) {
        if (e.p == p) return e.kappa;
    }
    throw std::out_of_range("exponent " + p.to_string() + " is not in the critical value table");
}

std::vector<Exponent> CriticalValueTable::exponents() const {
    std::vector<Exponent> out;
    for (const auto& e : entries) out.push_back(e.p);
    return out;
}

Json CriticalValueTable::to_json() const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["d"] = d;
    j["alpha_total"] = alpha_total;
    j["c_n"] = c_n;
    j["conservative"] = conservative;
    j["mc_reps"] = mc_reps;
    j["seed"] = seed;
    j["entries"] = Json::array();
    for (const auto& e : entries) {
        j["entries"].push_back({{"p", e.p}, {"alpha_share", e.alpha_share}, {"kappa", e.kappa}});
    }
    return j;
}

CriticalValueTable CriticalValueTable::from_json(const Json& j) {
    CriticalValueTable t;
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion) {
            throw ConfigError("table.schema_version", "unsupported version");
        }
        t.d = j.at("d").get<long>();
        t.alpha_total = j.at("alpha_total").get<double>();
        t.c_n = j.at("c_n").get<double>();
        t.conservative = j.value("conservative", false);
        t.mc_reps = j.at("mc_reps").get<long>();
        t.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("entries")) {
            t.entries.push_back({e.at("p").get<Exponent>(), e.at("alpha_share").get<double>(),
                                 e.at("kappa").get<double>()});
        }
    } catch (const Json::exception& ex) {
        throw ConfigError("table", ex.what());
    }
    if (t.d < 1) throw ConfigError("table.d", "must be >= 1");
    if (!(t.c_n > 0.0 && t.c_n <= 1.0)) throw ConfigError("table.c_n", "must lie in (0, 1]");
    double total = 0.0;
    for (const auto& e : t.entries) {
        if (!(e.kappa > 0.0)) throw ConfigError("table.entries", "kappa must be positive");
        total += e.alpha_share;
    }
    if (std::abs(total - t.alpha_total) > 1e-12) {
        throw ConfigError("table.entries", "alpha shares must sum to alpha_total");
    }
    std::sort(t.entries.begin(), t.entries.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    return t;
}

double null_rejection_rate(const CriticalValueTable& table, long reps, std::uint64_t seed, unsigned threads,
                           double c_n_override) {
    const auto draws = mc_norm_draws(table.exponents(), table.d, reps, seed, threads);
    const double c = c_n_override > 0.0 ? c_n_override : table.c_n;
    long rejections = 0;
    for (std::size_t r = 0; r < static_cast<std::size_t>(reps); ++r) {
        double m = 0.0;
        for (std::size_t k = 0; k < table.entries.size(); ++k) m = std::max(m, draws[k][r] / table.entries[k].kappa);
        if (m >= c) ++rejections;
    }
    return static_cast<double>(rejections) / static_cast<double>(reps);
}

}  // namespace pnorm
