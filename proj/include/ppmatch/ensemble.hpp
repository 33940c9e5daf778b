#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ppmatch/metrics.hpp"

namespace ppm {

// Convex blend weights, one per model.
struct EnsembleWeights {
    std::vector<double> w;

    void validate() const {
        if (w.empty()) throw ConfigError("ensemble needs at least one weight");
        double sum = 0.0;
        for (double wi : w) {
            if (wi < 0.0) throw ConfigError("ensemble weights must be non-negative");
            sum += wi;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("ensemble weights must sum to 1");
    }
};

// y_e[id] = sum_i w_i * y_i[id]. All prediction sets must share one id set.
inline ScoreVector blend(const std::vector<ScoreVector>& preds, const EnsembleWeights& weights) {
    if (preds.empty()) throw ConfigError("blend needs at least one prediction set");
    if (preds.size() != weights.w.size()) {
        throw ConfigError("weight count " + std::to_string(weights.w.size()) +
                          " does not match model count " + std::to_string(preds.size()));
    }
    weights.validate();
    for (std::size_t i = 1; i < preds.size(); ++i) {
        if (preds[i].size() != preds[0].size()) {
            throw ValidationError("prediction sets disagree on id count");
        }
        for (const auto& [id, v] : preds[0].entries()) {
            if (!preds[i].contains(id)) {
                throw ValidationError("prediction set " + std::to_string(i) + " is missing id " + id);
            }
        }
    }

    ScoreVector out;
    for (const auto& [id, v0] : preds[0].entries()) {
        double acc = weights.w[0] * v0;
        for (std::size_t i = 1; i < preds.size(); ++i) acc += weights.w[i] * preds[i].at(id);
        out.set(id, acc);
    }
    return out;
}

inline double pearson_of_blend(const std::vector<ScoreVector>& preds, const ScoreVector& golds,
                               const EnsembleWeights& weights) {
    return evaluate(blend(preds, weights), golds);
}

struct WeightSearchResult {
    EnsembleWeights weights;
    double r = 0.0;
};

namespace detail {

// r values within this distance count as tied; exact float ties are not
// reachable for distinct blends.
inline constexpr double kWeightTieEps = 1e-12;

// Emits every composition of `total` grid slots over `models` parts, in
// lexicographic order.
inline void enumerate_simplex(int models, int total, std::vector<int>& prefix,
                              const std::function<void(const std::vector<int>&)>& emit) {
    if (static_cast<int>(prefix.size()) + 1 == models) {
        prefix.push_back(total);
        emit(prefix);
        prefix.pop_back();
        return;
    }
    for (int c = 0; c <= total; ++c) {
        prefix.push_back(c);
        enumerate_simplex(models, total - c, prefix, emit);
        prefix.pop_back();
    }
}

}  // namespace detail

// Exhaustive search over the simplex grid with spacing `step`, maximizing
// Pearson(blend, golds). Candidates are visited in lexicographic order and
// must beat the incumbent by more than the tie epsilon to replace it, so
// ties resolve to the lexicographically smallest weight vector. Candidates
// whose blend is constant are skipped; if no candidate has a defined
// correlation (degenerate golds), the pearson error propagates.
inline WeightSearchResult optimize_weights(const std::vector<ScoreVector>& preds,
                                           const ScoreVector& golds, double step = 0.05) {
    if (preds.size() < 2) throw ConfigError("weight optimization needs at least 2 models");
    if (step <= 0.0 || step > 1.0) throw ConfigError("step must be in (0, 1]");
    const double slots = 1.0 / step;
    const int total = static_cast<int>(std::llround(slots));
    if (std::abs(slots - static_cast<double>(total)) > 1e-9) {
        throw ConfigError("step must divide 1 evenly");
    }

    WeightSearchResult best;
    bool found = false;
    std::string last_error;

    std::vector<int> prefix;
    detail::enumerate_simplex(static_cast<int>(preds.size()), total, prefix,
                              [&](const std::vector<int>& counts) {
        EnsembleWeights w;
        w.w.reserve(counts.size());
        for (int c : counts) w.w.push_back(static_cast<double>(c) * step);
        // Grid rounding can leave the sum a hair off 1; absorb it into the
        // last weight so validate() holds.
        double sum = 0.0;
        for (double wi : w.w) sum += wi;
        w.w.back() += 1.0 - sum;
        if (w.w.back() < 0.0) w.w.back() = 0.0;

        double r;
        try {
            r = pearson_of_blend(preds, golds, w);
        } catch (const NumericError& e) {
            last_error = e.what();
            return;
        }
        if (!found || r > best.r + detail::kWeightTieEps) {
            best = WeightSearchResult{w, r};
            found = true;
        }
    });

    if (!found) throw NumericError(last_error);
    return best;
}

}  // namespace ppm
