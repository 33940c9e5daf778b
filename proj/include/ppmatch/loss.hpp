#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppmatch/errors.hpp"
#include "ppmatch/rng.hpp"
#include "ppmatch/sequence.hpp"

namespace ppm {

// How N in the batch loss is counted. `unmasked` is the consistent reading
// of sentinel-marked golds; `all_positions` divides by every position in
// the batch instead.
enum class BceNorm { unmasked, all_positions };

inline BceNorm bce_norm_from_name(const std::string& name) {
    if (name == "unmasked") return BceNorm::unmasked;
    if (name == "all") return BceNorm::all_positions;
    throw ConfigError("bce_norm must be 'unmasked' or 'all', got '" + name + "'");
}

struct LossReport {
    double loss = 0.0;
    std::size_t contributing = 0;  // unmasked positions
    std::string batch_id;
};

// Masked binary cross-entropy over per-token scores. Positions whose gold
// is the -1 sentinel contribute exactly zero.
inline LossReport masked_bce_loss(const std::vector<double>& pred, const std::vector<double>& gold,
                                  const std::string& batch_id = "",
                                  BceNorm norm = BceNorm::unmasked) {
    if (pred.size() != gold.size()) {
        throw ConfigError("prediction/gold length mismatch: " + std::to_string(pred.size()) + " vs " +
                          std::to_string(gold.size()));
    }
    KahanSum acc;
    std::size_t contributing = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double g = gold[i];
        if (g == kSentinel) continue;
        if (g < 0.0 || g > 1.0) {
            throw ConfigError("gold value " + std::to_string(g) + " outside {-1} U [0,1]");
        }
        const double p = pred[i];
        if (!(p > 0.0 && p < 1.0)) {
            throw ConfigError("prediction " + std::to_string(p) + " outside (0,1)");
        }
        acc.add(g * std::log(p) + (1.0 - g) * std::log1p(-p));
        ++contributing;
    }
    if (contributing == 0) {
        throw ValidationError("all positions masked: batch carries no supervision signal");
    }
    const double denom = norm == BceNorm::unmasked ? static_cast<double>(contributing)
                                                   : static_cast<double>(pred.size());
    return LossReport{-acc.value() / denom, contributing, batch_id};
}

// dL/dP at each position; zero where gold is sentinel. `denom` must be the
// same N used by the loss (pass LossReport::contributing for the default
// norm, or the full position count for BceNorm::all_positions).
inline std::vector<double> masked_bce_grad(const std::vector<double>& pred,
                                           const std::vector<double>& gold, double denom) {
    if (pred.size() != gold.size()) throw ConfigError("prediction/gold length mismatch");
    if (denom <= 0.0) throw ConfigError("loss normalizer must be positive");
    std::vector<double> grad(pred.size(), 0.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double g = gold[i];
        if (g == kSentinel) continue;
        const double p = pred[i];
        grad[i] = -(g / p - (1.0 - g) / (1.0 - p)) / denom;
    }
    return grad;
}

}  // namespace ppm
