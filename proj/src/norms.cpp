#include "pnorm/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pnorm {

namespace {

constexpr int kLadderMax = 64;

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

double p_norm(std::span<const double> v, Exponent p) {
    const double m = max_abs(v);
    if (p.is_inf() || m == 0.0) return m;
    const double e = p.value();
    double sum = 0.0;
    if (e == 2.0) {
        for (const double x : v) {
            const double r = x / m;
            sum += r * r;
        }
        return m * std::sqrt(sum);
    }
    for (const double x : v) sum += std::pow(std::abs(x) / m, e);
    return m * std::pow(sum, 1.0 / e);
}

NormSet::NormSet(std::vector<Exponent> exponents) : exponents_(std::move(exponents)) {
    ladder_slot_.assign(exponents_.size(), -1);
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
        const Exponent& e = exponents_[k];
        if (e.is_inf()) continue;
        const double p = e.value();
        if (p == std::floor(p) && p <= kLadderMax) {
            ladder_slot_[k] = static_cast<int>(p);
            max_power_ = std::max(max_power_, static_cast<int>(p));
        }
    }
}

void NormSet::evaluate(std::span<const double> v, std::span<double> out, std::vector<double>& scratch) const {
    if (out.size() != exponents_.size()) {
        throw std::invalid_argument("NormSet::evaluate: output size mismatch");
    }
    const double m = max_abs(v);
    if (m == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    // scratch[k] accumulates sum (|v_i|/m)^p for power k of the ladder.
    scratch.assign(static_cast<std::size_t>(max_power_) + 1, 0.0);
    std::fill(out.begin(), out.end(), 0.0);
    const double inv_m = 1.0 / m;
    for (const double x : v) {
        const double r = std::abs(x) * inv_m;
        if (max_power_ >= 2) {
            double cur = r * r;
            scratch[2] += cur;
            for (int k = 3; k <= max_power_; ++k) {
                cur *= r;
                scratch[static_cast<std::size_t>(k)] += cur;
            }
        }
        for (std::size_t k = 0; k < exponents_.size(); ++k) {
            if (ladder_slot_[k] < 0 && !exponents_[k].is_inf()) {
                out[k] += std::pow(r, exponents_[k].value());
            }
        }
    }
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
        const Exponent& e = exponents_[k];
        if (e.is_inf()) {
            out[k] = m;
            continue;
        }
        const double sum = ladder_slot_[k] >= 0 ? scratch[static_cast<std::size_t>(ladder_slot_[k])] : out[k];
        const double p = e.value();
        out[k] = p == 2.0 ? m * std::sqrt(sum) : m * std::pow(sum, 1.0 / p);
    }
}

}  // namespace pnorm
