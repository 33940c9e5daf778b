#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppmatch/encoder.hpp"
#include "ppmatch/loss.hpp"

namespace ppm {

namespace detail {

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Stable batch BCE from logits: G*ln(sigmoid) + (1-G)*ln(1-sigmoid) equals
// -[G*softplus(-z) + (1-G)*softplus(z)].
inline double bce_term_from_logit(double z, double g) {
    return -(g * softplus(-z) + (1.0 - g) * softplus(z));
}

}  // namespace detail

struct GradientReport {
    EncoderParams grads;  // same shapes as the parameters
    LossReport loss;
};

// Exact gradient of masked_bce_loss(forward(params, seq)) summed over the
// batch. Pass an Rng to sample dropout (training mode); without one the
// computation is a pure function of (params, batch).
inline GradientReport gradients(const EncoderParams& params, const std::vector<EncodedSequence>& batch,
                                const std::string& batch_id = "", BceNorm norm = BceNorm::unmasked,
                                Rng* dropout_rng = nullptr) {
    if (batch.empty()) throw ConfigError("gradients on an empty batch");

    std::vector<detail::ForwardTrace> traces;
    traces.reserve(batch.size());
    std::size_t unmasked = 0;
    std::size_t total_positions = 0;
    for (const auto& seq : batch) {
        traces.push_back(detail::forward_trace(params, seq.ids, seq.attention, dropout_rng));
        total_positions += seq.ids.size();
        for (double g : seq.token_targets) {
            if (g != kSentinel) ++unmasked;
        }
    }
    if (unmasked == 0) throw ValidationError("all positions masked: batch carries no supervision signal");
    const double denom = norm == BceNorm::unmasked ? static_cast<double>(unmasked)
                                                   : static_cast<double>(total_positions);

    GradientReport report;
    report.grads = zeros_like(params);
    EncoderParams& g = report.grads;

    const EncoderConfig& cfg = params.config;
    const int d = cfg.embed_dim;
    const int heads = cfg.num_heads;
    const int dh = d / heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    KahanSum loss_acc;

    for (std::size_t s = 0; s < batch.size(); ++s) {
        const EncodedSequence& seq = batch[s];
        const detail::ForwardTrace& tr = traces[s];
        const Eigen::Index L = static_cast<Eigen::Index>(seq.ids.size());

        // dL/dlogit = (P - G)/N at supervised positions, 0 elsewhere.
        Eigen::VectorXd dz = Eigen::VectorXd::Zero(L);
        for (Eigen::Index p = 0; p < L; ++p) {
            const double gold = seq.token_targets[static_cast<std::size_t>(p)];
            if (gold == kSentinel) continue;
            loss_acc.add(detail::bce_term_from_logit(tr.logits(p), gold));
            dz(p) = (tr.scores[static_cast<std::size_t>(p)] - gold) / denom;
        }

        g.head_weight += tr.final_x.transpose() * dz;
        g.head_bias(0, 0) += dz.sum();
        Mat dx = dz * params.head_weight.transpose();  // L x D

        for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
            const LayerParams& lp = params.layers[static_cast<std::size_t>(li)];
            const detail::LayerTrace& lt = tr.layers[static_cast<std::size_t>(li)];
            LayerParams& lg = g.layers[static_cast<std::size_t>(li)];

            // x2 = x1 + drop(ffn(ln2(x1)))
            Mat dffn_out = dx;
            detail::apply_mask(dffn_out, lt.ffn_drop_mask);
            Mat ln2_out = lt.ln2_hat * lp.ln2_gain.row(0).asDiagonal();
            ln2_out.rowwise() += lp.ln2_bias.row(0);

            lg.ffn_w2 += lt.ffn_act.transpose() * dffn_out;
            lg.ffn_b2 += dffn_out.colwise().sum();
            Mat dffn_act = dffn_out * lp.ffn_w2.transpose();
            Mat dffn_pre = dffn_act.cwiseProduct(lt.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
            lg.ffn_w1 += ln2_out.transpose() * dffn_pre;
            lg.ffn_b1 += dffn_pre.colwise().sum();
            Mat db = dffn_pre * lp.ffn_w1.transpose();
            Mat dx1 = dx + detail::layer_norm_backward(db, lt.ln2_hat, lt.ln2_inv_std, lp.ln2_gain,
                                                       lg.ln2_gain, lg.ln2_bias);

            // x1 = x0 + drop(attn(ln1(x0)))
            Mat dattn_out = dx1;
            detail::apply_mask(dattn_out, lt.attn_drop_mask);
            lg.wo += lt.attn_concat.transpose() * dattn_out;
            Mat dconcat = dattn_out * lp.wo.transpose();

            Mat dq = Mat::Zero(L, d), dk = Mat::Zero(L, d), dv = Mat::Zero(L, d);
            for (int h = 0; h < heads; ++h) {
                const Mat& probs = lt.attn[static_cast<std::size_t>(h)];
                auto dch = dconcat.middleCols(h * dh, dh);
                auto vh = lt.v.middleCols(h * dh, dh);
                auto qh = lt.q.middleCols(h * dh, dh);
                auto kh = lt.k.middleCols(h * dh, dh);

                Mat dprobs = dch * vh.transpose();
                dv.middleCols(h * dh, dh) = probs.transpose() * dch;

                Mat dlogits(L, L);
                for (Eigen::Index r = 0; r < L; ++r) {
                    const double dot = dprobs.row(r).cwiseProduct(probs.row(r)).sum();
                    dlogits.row(r) = (probs.row(r).array() * (dprobs.row(r).array() - dot)).matrix();
                }
                dq.middleCols(h * dh, dh) = dlogits * kh * inv_sqrt_dh;
                dk.middleCols(h * dh, dh) = dlogits.transpose() * qh * inv_sqrt_dh;
            }

            Mat ln1_out = lt.ln1_hat * lp.ln1_gain.row(0).asDiagonal();
            ln1_out.rowwise() += lp.ln1_bias.row(0);
            lg.wq += ln1_out.transpose() * dq;
            lg.wk += ln1_out.transpose() * dk;
            lg.wv += ln1_out.transpose() * dv;
            Mat da = dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
            dx = dx1 + detail::layer_norm_backward(da, lt.ln1_hat, lt.ln1_inv_std, lp.ln1_gain,
                                                   lg.ln1_gain, lg.ln1_bias);
        }

        detail::apply_mask(dx, tr.emb_drop_mask);
        for (Eigen::Index p = 0; p < L; ++p) {
            g.tok_embedding.row(seq.ids[static_cast<std::size_t>(p)]) += dx.row(p);
            g.pos_embedding.row(p) += dx.row(p);
        }
    }

    g.visit([](const std::string& name, Mat& m) {
        if (!m.allFinite()) throw NumericError("non-finite gradient in tensor " + name);
    });

    report.loss = LossReport{-loss_acc.value() / denom, unmasked, batch_id};
    return report;
}

}  // namespace ppm
