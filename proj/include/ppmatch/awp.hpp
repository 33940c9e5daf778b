#pragma once

#include <string>
#include <vector>

#include "ppmatch/backprop.hpp"
#include "ppmatch/optim.hpp"

namespace ppm {

struct AwpConfig {
    double awp_lr = 1e-4;
    double awp_eps = 1e-2;
    int start_epoch = 1;  // first epoch (1-based) the attack runs in
    bool enabled = true;

    void validate() const {
        if (awp_lr <= 0.0 || awp_eps <= 0.0) throw ConfigError("awp_lr and awp_eps must be > 0");
    }
};

// Weight matrices are attacked; biases and layer-norm parameters are not.
inline bool awp_targets(const std::string& name) {
    auto ends_with = [&](const char* suffix) {
        std::string s(suffix);
        return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    return ends_with("tok_embedding") || ends_with("pos_embedding") || ends_with(".wq") ||
           ends_with(".wk") || ends_with(".wv") || ends_with(".wo") || ends_with("ffn_w1") ||
           ends_with("ffn_w2") || ends_with("head_weight");
}

struct AwpResult {
    GradientReport report;
    bool skipped = false;      // attack aborted (disabled or non-finite ascent)
    std::string warning;
};

// The ascent step alone: w += awp_lr * g * (||w||/(||g||+tiny)) per target
// tensor, projected into the ball ||w - w0|| <= awp_eps * ||w0||. The
// caller owns saving and restoring the parameters.
inline void awp_apply_attack(EncoderParams& params, const EncoderParams& grads,
                             const AwpConfig& awp) {
    awp.validate();
    constexpr double kTiny = 1e-12;

    auto ws = detail::tensor_list(params);
    auto gs = detail::tensor_list(grads);
    std::vector<std::string> names;
    params.visit([&](const std::string& n, Mat&) { names.push_back(n); });

    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (!awp_targets(names[i])) continue;
        Mat& w = *ws[i];
        const Mat& g = *gs[i];
        const Mat w0 = w;
        const double w_norm = w0.norm();
        const double g_norm = g.norm();
        if (g_norm == 0.0 || w_norm == 0.0) continue;
        w += awp.awp_lr * g * (w_norm / (g_norm + kTiny));

        Mat delta = w - w0;
        const double limit = awp.awp_eps * w_norm;
        const double d_norm = delta.norm();
        if (d_norm > limit) w = w0 + delta * (limit / d_norm);
    }
}

// One attack/restore cycle: ascend, take gradients at the perturbed point,
// restore the saved parameters bitwise, return the adversarial gradients.
// A non-finite perturbed pass restores and falls back to the clean
// gradients with a warning.
inline AwpResult awp_attack_restore(EncoderParams& params, const std::vector<EncodedSequence>& batch,
                                    const GradientReport& clean, const AwpConfig& awp,
                                    BceNorm norm = BceNorm::unmasked, Rng* dropout_rng = nullptr) {
    if (!awp.enabled) return AwpResult{clean, true, ""};

    const EncoderParams saved = params;
    awp_apply_attack(params, clean.grads, awp);

    AwpResult result;
    try {
        result.report = gradients(params, batch, clean.loss.batch_id, norm, dropout_rng);
    } catch (const NumericError& e) {
        params = saved;
        return AwpResult{clean, true, std::string("awp skipped: ") + e.what()};
    }
    params = saved;
    return result;
}

}  // namespace ppm
