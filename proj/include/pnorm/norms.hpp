#pragma once

#include "pnorm/gaussian_moments.hpp"

#include <span>
#include <vector>

namespace pnorm {

/// ||v||_p computed as m * (sum (|v_i|/m)^p)^{1/p} with m = max |v_i|, so
/// large p cannot overflow. p = inf gives max |v_i|; the empty vector has
/// norm 0.
double p_norm(std::span<const double> v, Exponent p);

/// Evaluates a fixed list of exponents on many vectors. Integer exponents
/// share one multiplication ladder per coordinate instead of calling pow.
class NormSet {
public:
    explicit NormSet(std::vector<Exponent> exponents);

    const std::vector<Exponent>& exponents() const noexcept { return exponents_; }
    std::size_t size() const noexcept { return exponents_.size(); }

    /// out[k] = ||v||_{exponents[k]}. `scratch` is resized as needed so the
    /// caller can reuse it across calls.
    void evaluate(std::span<const double> v, std::span<double> out, std::vector<double>& scratch) const;

private:
    std::vector<Exponent> exponents_;
    std::vector<int> ladder_slot_;  // exponent index -> integer power, or -1
    int max_power_ = 0;
};

}  // namespace pnorm
