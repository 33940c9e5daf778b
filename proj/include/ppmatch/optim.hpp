#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppmatch/encoder.hpp"

namespace ppm {

struct OptimConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-5;
    double clip_norm = 1000.0;
};

// First/second moment accumulators mirroring the parameter tensors.
struct OptimState {
    long step = 0;
    EncoderParams m;
    EncoderParams v;

    static OptimState init(const EncoderParams& params) {
        OptimState s;
        s.m = zeros_like(params);
        s.v = zeros_like(params);
        return s;
    }
};

namespace detail {

// visit() walks tensors in one fixed order, so same-shaped parameter sets
// can be zipped positionally.
inline std::vector<Mat*> tensor_list(EncoderParams& p) {
    std::vector<Mat*> out;
    p.visit([&](const std::string&, Mat& m) { out.push_back(&m); });
    return out;
}

inline std::vector<const Mat*> tensor_list(const EncoderParams& p) {
    std::vector<const Mat*> out;
    p.visit([&](const std::string&, const Mat& m) { out.push_back(&m); });
    return out;
}

}  // namespace detail

inline double global_norm(const EncoderParams& grads) {
    double sq = 0.0;
    grads.visit([&](const std::string&, const Mat& g) { sq += g.squaredNorm(); });
    return std::sqrt(sq);
}

// Scales every tensor by max_norm/g when the global L2 norm g exceeds
// max_norm; identity otherwise. Returns the pre-clip norm.
inline double clip_by_global_norm(EncoderParams& grads, double max_norm = 1000.0) {
    const double norm = global_norm(grads);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        grads.visit([&](const std::string&, Mat& g) { g *= scale; });
    }
    return norm;
}

// Bias-corrected adaptive-moment update.
inline void adam_step(OptimState& state, EncoderParams& params, const EncoderParams& grads,
                      const OptimConfig& cfg) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    auto ws = detail::tensor_list(params);
    auto ms = detail::tensor_list(state.m);
    auto vs = detail::tensor_list(state.v);
    auto gs = detail::tensor_list(grads);

    for (std::size_t i = 0; i < ws.size(); ++i) {
        Mat& w = *ws[i];
        Mat& m = *ms[i];
        Mat& v = *vs[i];
        const Mat& g = *gs[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        w.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
    }
}

}  // namespace ppm
