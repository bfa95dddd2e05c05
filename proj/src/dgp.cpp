#include "pnorm/dgp.hpp"

#include "pnorm/rng.hpp"

#include <boost/random/chi_squared_distribution.hpp>

#include <cmath>
#include <stdexcept>

namespace pnorm {

namespace {

constexpr std::uint64_t kIvTag = 0x1f;
constexpr std::uint64_t kRctTag = 0x2f;
constexpr std::uint64_t kGaussTag = 0x3f;
constexpr std::uint64_t kLimitTag = 0x4f;

}  // namespace

Vector vector_field(const Json& j, const char* key, long d, const std::string& path, bool allow_missing) {
    const std::string where = path + "." + key;
    if (!j.contains(key)) {
        if (allow_missing) return Vector::Zero(d);
        throw ConfigError(where, "missing required field");
    }
    const Json& v = j.at(key);
    if (v.is_number()) return Vector::Constant(d, v.get<double>());
    if (v.is_array()) {
        if (static_cast<long>(v.size()) != d) throw ConfigError(where, "expected " + std::to_string(d) + " entries");
        Vector out(d);
        for (long i = 0; i < d; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(where, "entries must be numbers");
            out(i) = v[static_cast<std::size_t>(i)].get<double>();
        }
        return out;
    }
    if (v.is_object()) {
        const double value = required<double>(v, "value", where);
        const long support = required<long>(v, "support", where);
        if (support < 0 || support > d) throw ConfigError(where + ".support", "must lie in [0, d]");
        Vector out = Vector::Zero(d);
        out.head(support).setConstant(value);
        return out;
    }
    throw ConfigError(where, "expected a number, an array or {value, support}");
}

namespace {

Json vector_json(const Vector& v) {
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Common scale for one observation's error vector.
double mixing_scale(const ErrorDist& dist, Stream& rng) {
    if (dist.kind == ErrorDist::Kind::gaussian) return 1.0;
    boost::random::chi_squared_distribution<double> chi2(dist.nu);
    const double w = chi2(rng);
    return std::sqrt(dist.nu / w) * std::sqrt((dist.nu - 2.0) / dist.nu);
}

void check_dist(const ErrorDist& e, const std::string& path) {
    if (e.kind == ErrorDist::Kind::student_t && !(e.nu > 4.0)) {
        throw ConfigError(path, "t errors need nu > 4 (four moments)");
    }
}

void check_cov(const CovStructure& c, const std::string& path) {
    if (c.kind == CovStructure::Kind::toeplitz && !(std::abs(c.r) < 1.0)) {
        throw ConfigError(path, "toeplitz parameter must satisfy |r| < 1");
    }
}

}  // namespace

SymMatrix CovStructure::matrix(long d) const {
    if (kind == Kind::identity) return SymMatrix::identity(d);
    Matrix m(d, d);
    for (long i = 0; i < d; ++i) {
        for (long j = 0; j < d; ++j) m(i, j) = std::pow(r, static_cast<double>(std::abs(i - j)));
    }
    return SymMatrix(std::move(m));
}

Matrix CovStructure::cholesky(long d) const {
    if (kind == Kind::identity) return Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt(matrix(d).matrix());
    if (llt.info() != Eigen::Success) throw std::domain_error("toeplitz covariance is not positive definite");
    return llt.matrixL();
}

CovStructure cov_structure_from_json(const Json& j, const std::string& path) {
    CovStructure c;
    if (j.is_string() && j.get<std::string>() == "identity") return c;
    if (j.is_object() && j.contains("toeplitz")) {
        c.kind = CovStructure::Kind::toeplitz;
        c.r = required<double>(j, "toeplitz", path);
        check_cov(c, path + ".toeplitz");
        return c;
    }
    throw ConfigError(path, "expected \"identity\" or {\"toeplitz\": r}");
}

ErrorDist error_dist_from_json(const Json& j, const std::string& path) {
    ErrorDist e;
    if (j.is_string() && j.get<std::string>() == "gaussian") return e;
    if (j.is_object() && j.contains("t")) {
        e.kind = ErrorDist::Kind::student_t;
        e.nu = required<double>(j, "t", path);
        check_dist(e, path + ".t");
        return e;
    }
    throw ConfigError(path, "expected \"gaussian\" or {\"t\": nu}");
}

Json to_json(const CovStructure& c) {
    if (c.kind == CovStructure::Kind::identity) return "identity";
    return {{"toeplitz", c.r}};
}

Json to_json(const ErrorDist& e) {
    if (e.kind == ErrorDist::Kind::gaussian) return "gaussian";
    return {{"t", e.nu}};
}

void IvConfig::validate() const {
    if (n < 1) throw ConfigError("iv.n", "must be >= 1");
    if (d < 1) throw ConfigError("iv.d", "must be >= 1");
    if (pi.size() != d) throw ConfigError("iv.pi", "must have d entries");
    if (!(std::abs(rho) < 1.0)) throw ConfigError("iv.rho", "must satisfy |rho| < 1");
    check_cov(instrument_cov, "iv.instrument_cov");
    check_dist(error_dist, "iv.error_dist");
}

IvConfig IvConfig::from_json(const Json& j, const std::string& path) {
    IvConfig c;
    c.n = required<long>(j, "n", path);
    c.d = required<long>(j, "d", path);
    if (c.d < 1) throw ConfigError(path + ".d", "must be >= 1");
    c.beta_true = j.contains("beta_true") ? required<double>(j, "beta_true", path) : 0.0;
    c.pi = vector_field(j, "pi", c.d, path, true);
    c.rho = j.contains("rho") ? required<double>(j, "rho", path) : 0.0;
    if (j.contains("instrument_cov")) c.instrument_cov = cov_structure_from_json(j.at("instrument_cov"), path + ".instrument_cov");
    if (j.contains("error_dist")) c.error_dist = error_dist_from_json(j.at("error_dist"), path + ".error_dist");
    c.validate();
    return c;
}

Json IvConfig::to_json() const {
    return {{"n", n},
            {"d", d},
            {"beta_true", beta_true},
            {"pi", vector_json(pi)},
            {"rho", rho},
            {"instrument_cov", pnorm::to_json(instrument_cov)},
            {"error_dist", pnorm::to_json(error_dist)}};
}

IvData gen_iv_data(const IvConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const Matrix chol = cfg.instrument_cov.cholesky(cfg.d);
    const bool identity = cfg.instrument_cov.kind == CovStructure::Kind::identity;
    Stream rng(seed, {kIvTag});
    IvData data{Vector(cfg.n), Vector(cfg.n), Matrix(cfg.n, cfg.d)};
    Vector e(cfg.d);
    const double rho_c = std::sqrt(1.0 - cfg.rho * cfg.rho);
    for (long i = 0; i < cfg.n; ++i) {
        rng.fill_normal(e.begin(), e.end());
        if (identity) {
            data.Z.row(i) = e.transpose();
        } else {
            data.Z.row(i) = (chol * e).transpose();
        }
        const double scale = mixing_scale(cfg.error_dist, rng);
        const double e1 = rng.normal() * scale;
        const double e2 = rng.normal() * scale;
        const double u = e1;
        const double v = cfg.rho * e1 + rho_c * e2;
        data.Y(i) = data.Z.row(i).dot(cfg.pi) + v;
        data.y(i) = cfg.beta_true * data.Y(i) + u;
    }
    return data;
}

MomentSample iv_moments(const IvData& data, double beta) {
    const Vector resid = data.y - beta * data.Y;
    return MomentSample(data.Z.array().colwise() * resid.array());
}

MomentSample gen_iv(const IvConfig& cfg, double beta_star, std::uint64_t seed) {
    return iv_moments(gen_iv_data(cfg, seed), beta_star);
}

Vector iv_population_moment(const IvConfig& cfg, double beta_star) {
    return (cfg.beta_true - beta_star) * (cfg.instrument_cov.matrix(cfg.d).matrix() * cfg.pi);
}

void RctConfig::validate() const {
    if (n < 1) throw ConfigError("rct.n", "must be >= 1");
    if (d < 1) throw ConfigError("rct.d", "must be >= 1");
    if (!(pi_treat > 0.0 && pi_treat < 1.0)) throw ConfigError("rct.pi_treat", "must lie in (0, 1)");
    if (effect.size() != d) throw ConfigError("rct.effect", "must have d entries");
    if (baseline.size() != 0 && baseline.size() != d) throw ConfigError("rct.baseline", "must have d entries");
    check_cov(outcome_cov, "rct.outcome_cov");
    check_dist(outcome_dist, "rct.outcome_dist");
}

RctConfig RctConfig::from_json(const Json& j, const std::string& path) {
    RctConfig c;
    c.n = required<long>(j, "n", path);
    c.d = required<long>(j, "d", path);
    if (c.d < 1) throw ConfigError(path + ".d", "must be >= 1");
    c.pi_treat = j.contains("pi_treat") ? required<double>(j, "pi_treat", path) : 0.5;
    c.effect = vector_field(j, "effect", c.d, path, true);
    if (j.contains("baseline")) c.baseline = vector_field(j, "baseline", c.d, path, false);
    if (j.contains("outcome_cov")) c.outcome_cov = cov_structure_from_json(j.at("outcome_cov"), path + ".outcome_cov");
    if (j.contains("outcome_dist")) c.outcome_dist = error_dist_from_json(j.at("outcome_dist"), path + ".outcome_dist");
    c.validate();
    return c;
}

Json RctConfig::to_json() const {
    Json j = {{"n", n},
              {"d", d},
              {"pi_treat", pi_treat},
              {"effect", vector_json(effect)},
              {"outcome_cov", pnorm::to_json(outcome_cov)},
              {"outcome_dist", pnorm::to_json(outcome_dist)}};
    if (baseline.size() > 0) j["baseline"] = vector_json(baseline);
    return j;
}

MomentSample gen_rct(const RctConfig& cfg, const Vector& beta_star, std::uint64_t seed) {
    cfg.validate();
    if (beta_star.size() != cfg.d) throw std::invalid_argument("gen_rct: beta_star must have d entries");
    const Matrix chol = cfg.outcome_cov.cholesky(cfg.d);
    const Vector baseline = cfg.baseline.size() == 0 ? Vector::Zero(cfg.d) : cfg.baseline;
    Stream rng(seed, {kRctTag});
    Matrix rows(cfg.n, cfg.d);
    Vector e(cfg.d);
    for (long i = 0; i < cfg.n; ++i) {
        const bool treated = rng.uniform() < cfg.pi_treat;
        const double scale = mixing_scale(cfg.outcome_dist, rng);
        rng.fill_normal(e.begin(), e.end());
        Vector y = baseline + scale * (chol * e);
        if (treated) {
            y += cfg.effect;
            rows.row(i) = (y / cfg.pi_treat - beta_star).transpose();
        } else {
            rows.row(i) = (-y / (1.0 - cfg.pi_treat) - beta_star).transpose();
        }
    }
    return MomentSample(std::move(rows));
}

MomentSample gen_gaussian_sample(long n, const Vector& mean, const CovStructure& cov, std::uint64_t seed) {
    const long d = static_cast<long>(mean.size());
    if (n < 1 || d < 1) throw std::invalid_argument("gen_gaussian_sample: n and d must be >= 1");
    Stream rng(seed, {kGaussTag});
    Matrix rows(n, d);
    if (cov.kind == CovStructure::Kind::identity) {
        // Row-major fill order keeps the draw sequence identical to the
        // correlated branch.
        for (long i = 0; i < n; ++i) {
            for (long j = 0; j < d; ++j) rows(i, j) = rng.normal() + mean(j);
        }
    } else {
        const Matrix chol = cov.cholesky(d);
        Vector e(d);
        for (long i = 0; i < n; ++i) {
            rng.fill_normal(e.begin(), e.end());
            rows.row(i) = (mean + chol * e).transpose();
        }
    }
    return MomentSample(std::move(rows));
}

Vector gen_gaussian_limit(const ThetaProfile& theta, std::uint64_t seed) {
    Stream rng(seed, {kLimitTag});
    Vector out(theta.d());
    rng.fill_normal(out.begin(), out.end());
    return out + theta.theta;
}

}  // namespace pnorm
