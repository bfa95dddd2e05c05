#include "pnorm/sample_split.hpp"

#include "pnorm/norms.hpp"
#include "pnorm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pnorm {

namespace {

constexpr std::uint64_t kSplitTag = 0x5f;

void check_d(long d, Eigen::Index total) {
    if (d < 1 || d > total) {
        throw std::invalid_argument("selection size d must lie in [1, " + std::to_string(total) + "]");
    }
}

Selection finish(IndexSet order) {
    Selection s;
    s.order = order;
    std::sort(order.begin(), order.end());
    s.indices = std::move(order);
    return s;
}

}  // namespace

std::pair<IndexSet, IndexSet> split(long n, double frac1, std::uint64_t seed) {
    if (!(frac1 > 0.0 && frac1 < 1.0)) throw std::invalid_argument("split: frac1 must lie in (0, 1)");
    const auto n1 = static_cast<long>(std::ceil(frac1 * static_cast<double>(n) - 1e-9));
    if (n1 < 4 || n - n1 < 4) throw std::invalid_argument("split: each fold needs at least 4 observations");
    IndexSet perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Stream rng(seed, {kSplitTag});
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(perm[i], perm[j]);
    }
    IndexSet a(perm.begin(), perm.begin() + n1);
    IndexSet b(perm.begin() + n1, perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {std::move(a), std::move(b)};
}

Selection select_top_scaled(const MomentSample& fold1, long d) {
    check_d(d, fold1.d());
    const MomentSample aux = difference_pairs(fold1);
    const Vector h = central_statistic(fold1);
    const Vector var = aux.values().colwise().squaredNorm().transpose() / static_cast<double>(aux.n());
    std::vector<double> score(static_cast<std::size_t>(fold1.d()));
    for (Eigen::Index j = 0; j < fold1.d(); ++j) {
        score[static_cast<std::size_t>(j)] = var(j) > 0.0 ? std::abs(h(j)) / std::sqrt(var(j)) : 0.0;
    }
    IndexSet idx(score.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
    idx.resize(static_cast<std::size_t>(d));
    return finish(std::move(idx));
}

Selection select_greedy(const MomentSample& fold1, long d, Exponent p, double rank_tol, unsigned threads) {
    const Eigen::Index total = fold1.d();
    check_d(d, total);
    const MomentSample aux_sample = difference_pairs(fold1);
    const Matrix& aux = aux_sample.values();
    const double m = static_cast<double>(aux.rows());
    const Vector h = central_statistic(fold1);
    const Vector var = aux.colwise().squaredNorm().transpose() / m;
    const bool quadratic = !p.is_inf() && p.value() == 2.0;

    IndexSet order;
    std::vector<char> taken(static_cast<std::size_t>(total), 0);
    // cross.col(k) holds the plug-in covariances of order[k] with every column.
    Matrix cross(total, d);
    std::vector<std::string> warnings;
    constexpr double kSkipped = -std::numeric_limits<double>::infinity();
    std::vector<double> value(static_cast<std::size_t>(total));

    for (long step = 0; step < d; ++step) {
        const auto k = static_cast<Eigen::Index>(order.size());
        Matrix sigma_s(k, k);
        Vector h_s(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            h_s(a) = h(order[static_cast<std::size_t>(a)]);
            for (Eigen::Index b = 0; b < k; ++b) sigma_s(a, b) = cross(order[static_cast<std::size_t>(b)], a);
        }
        // Quadratic-form path for p = 2: S_2^2(S + j) = Q_S + (h_j - b'A^+ h_S)^2 / s
        // with s the Schur complement c_j - b'A^+ b.
        Matrix a_pinv;
        Vector a_pinv_h;
        double q_s = 0.0;
        if (quadratic && k > 0) {
            a_pinv = pinv(SymMatrix(sigma_s), rank_tol).matrix();
            a_pinv_h = a_pinv * h_s;
            q_s = h_s.dot(a_pinv_h);
        }
        std::vector<std::string> step_warnings(static_cast<std::size_t>(total));
        parallel_for(static_cast<std::size_t>(total), threads, [&](std::size_t jj) {
            const auto j = static_cast<Eigen::Index>(jj);
            if (taken[jj]) {
                value[jj] = kSkipped;
                return;
            }
            const Vector b = k > 0 ? Vector(cross.row(j).head(k).transpose()) : Vector();
            if (quadratic) {
                double q = q_s;
                const double schur = k > 0 ? var(j) - b.dot(a_pinv * b) : var(j);
                const double scale = std::max(var(j), k > 0 ? sigma_s.diagonal().maxCoeff() : 0.0);
                if (schur > rank_tol * scale && schur > 0.0) {
                    const double resid = k > 0 ? h(j) - b.dot(a_pinv_h) : h(j);
                    q += resid * resid / schur;
                }
                value[jj] = std::sqrt(std::max(q, 0.0));
                return;
            }
            Matrix sig(k + 1, k + 1);
            sig.topLeftCorner(k, k) = sigma_s;
            if (k > 0) {
                sig.block(0, k, k, 1) = b;
                sig.block(k, 0, 1, k) = b.transpose();
            }
            sig(k, k) = var(j);
            Vector hv(k + 1);
            hv.head(k) = h_s;
            hv(k) = h(j);
            try {
                const StandardizedStat v = standardize(hv, SymMatrix(sig), rank_tol);
                value[jj] = p_norm_stat(v, p);
            } catch (const std::exception& e) {
                value[jj] = kSkipped;
                step_warnings[jj] = "candidate " + std::to_string(j) + " skipped: " + e.what();
            }
        });
        for (auto& w : step_warnings) {
            if (!w.empty()) warnings.push_back(std::move(w));
        }
        Eigen::Index best = -1;
        double best_value = kSkipped;
        for (Eigen::Index j = 0; j < total; ++j) {
            if (value[static_cast<std::size_t>(j)] > best_value) {
                best_value = value[static_cast<std::size_t>(j)];
                best = j;
            }
        }
        if (best < 0) throw std::runtime_error("select_greedy: no admissible candidate at step " + std::to_string(step));
        taken[static_cast<std::size_t>(best)] = 1;
        order.push_back(best);
        cross.col(k) = aux.transpose() * aux.col(best) / m;
    }
    Selection out = finish(std::move(order));
    out.warnings = std::move(warnings);
    return out;
}

SelectionRule parse_selection_rule(const std::string& name) {
    if (name == "top") return SelectionRule::top;
    if (name == "greedy") return SelectionRule::greedy;
    throw std::invalid_argument("unknown selection rule '" + name + "' (expected top|greedy)");
}

std::string to_string(SelectionRule rule) {
    return rule == SelectionRule::top ? "top" : "greedy";
}

Selector make_selector(SelectionRule rule, Exponent greedy_p, double rank_tol, unsigned threads) {
    if (rule == SelectionRule::top) {
        return [](const MomentSample& fold1, long d) { return select_top_scaled(fold1, d); };
    }
    return [greedy_p, rank_tol, threads](const MomentSample& fold1, long d) {
        return select_greedy(fold1, d, greedy_p, rank_tol, threads);
    };
}

Selector fixed_selector(IndexSet indices) {
    return [indices = std::move(indices)](const MomentSample& fold1, long d) {
        if (static_cast<long>(indices.size()) != d) {
            throw std::invalid_argument("fixed selection has " + std::to_string(indices.size())
                                        + " indices but d = " + std::to_string(d));
        }
        for (const auto j : indices) {
            if (j < 0 || j >= fold1.d()) throw std::out_of_range("fixed selection index out of range");
        }
        return finish(indices);
    };
}

Json SplitTestResult::to_json() const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["n1"] = fold1.size();
    j["n2"] = fold2.size();
    j["selected"] = selection.indices;
    j["selection_order"] = selection.order;
    std::vector<std::string> all = warnings;
    all.insert(all.end(), selection.warnings.begin(), selection.warnings.end());
    j["warnings"] = all;
    j["report"] = report.to_json();
    return j;
}

SplitTestResult split_test(const MomentSample& sample, long d, const Selector& selector,
                           const DominantTestSpec& spec, const TestOptions& options, double frac1,
                           std::uint64_t seed, const CriticalMap* standalone) {
    if (spec.d != d) {
        throw std::invalid_argument("split_test: spec dimension " + std::to_string(spec.d)
                                    + " differs from selection size " + std::to_string(d));
    }
    SplitTestResult out;
    std::tie(out.fold1, out.fold2) = split(static_cast<long>(sample.n()), frac1, seed);
    // The folds are materialized separately: selection only ever sees fold 1.
    const MomentSample fold1 = sample.rows(out.fold1);
    out.selection = selector(fold1, d);
    const double n2 = static_cast<double>(out.fold2.size());
    if (static_cast<double>(d) > std::pow(n2, 0.4)) {
        std::ostringstream msg;
        msg << "d = " << d << " exceeds n2^(2/5) = " << std::pow(n2, 0.4)
            << "; the Gaussian approximation may be unreliable";
        out.warnings.push_back(msg.str());
    }
    const MomentSample fold2 = sample.subset(out.fold2, out.selection.indices);
    out.report = run_tests(fold2, spec, options, standalone);
    return out;
}

}  // namespace pnorm
