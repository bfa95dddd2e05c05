#pragma once

#include "pnorm/covariance.hpp"
#include "pnorm/json.hpp"
#include "pnorm/test_engine.hpp"

#include <cstdint>

namespace pnorm {

/// Identity, or Toeplitz r^{|i-j|}.
struct CovStructure {
    enum class Kind { identity, toeplitz };
    Kind kind = Kind::identity;
    double r = 0.0;

    SymMatrix matrix(long d) const;
    /// Lower Cholesky factor of matrix(d).
    Matrix cholesky(long d) const;
};

/// Gaussian, or Student t with nu > 4 degrees of freedom rescaled to unit
/// variance. Multivariate t vectors share one chi-square mixing draw.
struct ErrorDist {
    enum class Kind { gaussian, student_t };
    Kind kind = Kind::gaussian;
    double nu = 0.0;
};

/// Linear IV model with one endogenous regressor:
///   Y = z'pi + v,  y = beta_true Y + u,  (u, v) with correlation rho,
///   z ~ N(0, instrument_cov).
struct IvConfig {
    long n = 0;
    long d = 0;
    double beta_true = 0.0;
    Vector pi;
    double rho = 0.0;
    CovStructure instrument_cov;
    ErrorDist error_dist;

    void validate() const;
    static IvConfig from_json(const Json& j, const std::string& path = "iv");
    Json to_json() const;
};

struct IvData {
    Vector y;
    Vector Y;
    Matrix Z;  // n x d instruments
};

IvData gen_iv_data(const IvConfig& cfg, std::uint64_t seed);

/// Rows (y_i - Y_i beta) z_i.
MomentSample iv_moments(const IvData& data, double beta);

MomentSample gen_iv(const IvConfig& cfg, double beta_star, std::uint64_t seed);

/// E[(y - Y beta) z] = (beta_true - beta) Sigma_z pi.
Vector iv_population_moment(const IvConfig& cfg, double beta_star);

/// IV moment functions of a fixed data set, for confidence-set inversion.
class IvMomentModel : public MomentModel {
public:
    explicit IvMomentModel(IvData data) : data_(std::move(data)) {}
    MomentSample evaluate(double beta) const override { return iv_moments(data_, beta); }
    const IvData& data() const noexcept { return data_; }

private:
    IvData data_;
};

/// Randomized trial with d outcomes and known assignment probability
/// pi_treat: Y(1) = Y(0) + effect, Y(0) = baseline + noise.
struct RctConfig {
    long n = 0;
    long d = 0;
    double pi_treat = 0.5;
    Vector effect;
    Vector baseline;  // empty means zero
    CovStructure outcome_cov;
    ErrorDist outcome_dist;

    void validate() const;
    static RctConfig from_json(const Json& j, const std::string& path = "rct");
    Json to_json() const;
};

/// Rows D Y / pi - (1 - D) Y / (1 - pi) - beta_star.
MomentSample gen_rct(const RctConfig& cfg, const Vector& beta_star, std::uint64_t seed);

/// i.i.d. rows mean + L e with L the Cholesky factor of `cov`.
MomentSample gen_gaussian_sample(long n, const Vector& mean, const CovStructure& cov, std::uint64_t seed);

/// One draw Z_d + theta.
Vector gen_gaussian_limit(const ThetaProfile& theta, std::uint64_t seed);

/// j[key] as a d-vector: a number (every entry), an array of d numbers, or
/// {"value": a, "support": k} for k leading entries equal to a. A missing key
/// gives zeros when allow_missing, else ConfigError.
Vector vector_field(const Json& j, const char* key, long d, const std::string& path, bool allow_missing);

CovStructure cov_structure_from_json(const Json& j, const std::string& path);
ErrorDist error_dist_from_json(const Json& j, const std::string& path);
Json to_json(const CovStructure& c);
Json to_json(const ErrorDist& e);

}  // namespace pnorm
