#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ppmatch/errors.hpp"
#include "ppmatch/rng.hpp"
#include "ppmatch/sequence.hpp"

namespace ppm {

using Mat = Eigen::MatrixXd;

inline constexpr double kLayerNormEps = 1e-5;
// Sigmoid outputs are pinned to the open interval so BCE never sees an
// exact 0 or 1.
inline constexpr double kScoreFloor = 1e-15;

struct EncoderConfig {
    int vocab_size = 0;
    int embed_dim = 64;
    int num_heads = 2;
    int num_layers = 2;
    int ffn_dim = 128;
    int max_len = kDefaultMaxLen;
    double dropout = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (vocab_size < 1 || embed_dim < 1 || num_heads < 1 || num_layers < 1 || ffn_dim < 1 ||
            max_len < 1) {
            throw ConfigError("encoder dimensions must all be >= 1");
        }
        if (embed_dim % num_heads != 0) throw ConfigError("embed_dim must be divisible by num_heads");
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    }
};

struct LayerParams {
    Mat wq, wk, wv, wo;      // embed_dim x embed_dim, no bias
    Mat ffn_w1;              // embed_dim x ffn_dim
    Mat ffn_b1;              // 1 x ffn_dim
    Mat ffn_w2;              // ffn_dim x embed_dim
    Mat ffn_b2;              // 1 x embed_dim
    Mat ln1_gain, ln1_bias;  // 1 x embed_dim
    Mat ln2_gain, ln2_bias;  // 1 x embed_dim
};

// All learnable tensors. The same struct doubles as gradient and moment
// storage so the optimizer, clipping, AWP and checkpointing can walk one
// fixed tensor order.
struct EncoderParams {
    EncoderConfig config;
    Mat tok_embedding;  // vocab_size x embed_dim
    Mat pos_embedding;  // max_len x embed_dim
    std::vector<LayerParams> layers;
    Mat head_weight;  // embed_dim x 1
    Mat head_bias;    // 1 x 1

    template <typename Fn>
    void visit(Fn&& fn) {
        fn("tok_embedding", tok_embedding);
        fn("pos_embedding", pos_embedding);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            fn(p + "wq", layers[l].wq);
            fn(p + "wk", layers[l].wk);
            fn(p + "wv", layers[l].wv);
            fn(p + "wo", layers[l].wo);
            fn(p + "ffn_w1", layers[l].ffn_w1);
            fn(p + "ffn_b1", layers[l].ffn_b1);
            fn(p + "ffn_w2", layers[l].ffn_w2);
            fn(p + "ffn_b2", layers[l].ffn_b2);
            fn(p + "ln1_gain", layers[l].ln1_gain);
            fn(p + "ln1_bias", layers[l].ln1_bias);
            fn(p + "ln2_gain", layers[l].ln2_gain);
            fn(p + "ln2_bias", layers[l].ln2_bias);
        }
        fn("head_weight", head_weight);
        fn("head_bias", head_bias);
    }

    template <typename Fn>
    void visit(Fn&& fn) const {
        const_cast<EncoderParams*>(this)->visit(
            [&](const std::string& name, Mat& m) { fn(name, const_cast<const Mat&>(m)); });
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        visit([&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
        return n;
    }
};

inline EncoderParams zeros_like(const EncoderParams& params) {
    EncoderParams out = params;
    out.visit([](const std::string&, Mat& m) { m.setZero(); });
    return out;
}

// Embeddings and projection matrices: uniform in [-s, s) with
// s = 1/sqrt(embed_dim). Layer-norm gains 1; every bias 0.
inline EncoderParams init_params(const EncoderConfig& config) {
    config.validate();
    EncoderParams p;
    p.config = config;
    const int d = config.embed_dim;
    const int f = config.ffn_dim;

    p.tok_embedding.resize(config.vocab_size, d);
    p.pos_embedding.resize(config.max_len, d);
    p.layers.resize(static_cast<std::size_t>(config.num_layers));
    for (auto& l : p.layers) {
        l.wq.resize(d, d);
        l.wk.resize(d, d);
        l.wv.resize(d, d);
        l.wo.resize(d, d);
        l.ffn_w1.resize(d, f);
        l.ffn_b1 = Mat::Zero(1, f);
        l.ffn_w2.resize(f, d);
        l.ffn_b2 = Mat::Zero(1, d);
        l.ln1_gain = Mat::Ones(1, d);
        l.ln1_bias = Mat::Zero(1, d);
        l.ln2_gain = Mat::Ones(1, d);
        l.ln2_bias = Mat::Zero(1, d);
    }
    p.head_weight.resize(d, 1);
    p.head_bias = Mat::Zero(1, 1);

    Rng rng(config.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    auto fill = [&](Mat& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.next_symmetric(scale);
        }
    };
    fill(p.tok_embedding);
    fill(p.pos_embedding);
    for (auto& l : p.layers) {
        fill(l.wq);
        fill(l.wk);
        fill(l.wv);
        fill(l.wo);
        fill(l.ffn_w1);
        fill(l.ffn_w2);
    }
    fill(p.head_weight);
    return p;
}

// Per-position scores in (0,1), aligned with the input sequence.
using TokenScores = std::vector<double>;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

inline double sigmoid(double z) {
    double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return std::min(std::max(s, kScoreFloor), 1.0 - kScoreFloor);
}

namespace detail {

struct LayerTrace {
    Mat ln1_in, ln1_hat;          // L x D
    Eigen::VectorXd ln1_inv_std;  // per row 1/sqrt(var+eps)
    Mat q, k, v;                  // L x D
    std::vector<Mat> attn;        // per head, L x L softmax rows
    Mat attn_concat;              // L x D, heads concatenated
    Mat attn_drop_mask;           // dropout mask applied to attention output
    Mat ln2_in, ln2_hat;
    Eigen::VectorXd ln2_inv_std;
    Mat ffn_pre;                  // L x F, before GELU
    Mat ffn_act;                  // L x F, after GELU
    Mat ffn_drop_mask;
};

struct ForwardTrace {
    Mat embedded;  // L x D after embedding dropout
    Mat emb_drop_mask;
    std::vector<LayerTrace> layers;
    Mat final_x;              // L x D
    Eigen::VectorXd logits;   // L
    TokenScores scores;
};

inline void layer_norm(const Mat& x, const Mat& gain, const Mat& bias, Mat& hat, Mat& out,
                       Eigen::VectorXd& inv_std) {
    const Eigen::Index rows = x.rows(), cols = x.cols();
    hat.resize(rows, cols);
    out.resize(rows, cols);
    inv_std.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std(r) = is;
        hat.row(r) = (x.row(r).array() - mean) * is;
        out.row(r) = hat.row(r).cwiseProduct(gain.row(0)) + bias.row(0);
    }
}

// dL/dx for y = hat*gain + bias given dL/dy.
inline Mat layer_norm_backward(const Mat& dy, const Mat& hat, const Eigen::VectorXd& inv_std,
                               const Mat& gain, Mat& dgain, Mat& dbias) {
    const Eigen::Index rows = dy.rows(), cols = dy.cols();
    Mat dx(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        Eigen::RowVectorXd dhat = dy.row(r).cwiseProduct(gain.row(0));
        const double m1 = dhat.mean();
        const double m2 = dhat.cwiseProduct(hat.row(r)).mean();
        dx.row(r) = (dhat.array() - m1 - hat.row(r).array() * m2) * inv_std(r);
        dgain.row(0) += dy.row(r).cwiseProduct(hat.row(r));
        dbias.row(0) += dy.row(r);
    }
    return dx;
}

inline void check_finite(const Mat& m, int layer, const char* what) {
    if (!m.allFinite()) {
        throw NumericError(std::string("non-finite value in ") + what + " at layer " +
                           std::to_string(layer));
    }
}

// Dropout masks hold the keep/scale factor per element (1/(1-p) kept, 0
// dropped); an empty mask means identity.
inline Mat make_drop_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
    if (p <= 0.0 || rng == nullptr) return Mat();
    Mat mask(rows, cols);
    const double scale = 1.0 / (1.0 - p);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) mask(r, c) = rng->next_unit() < p ? 0.0 : scale;
    }
    return mask;
}

inline void apply_mask(Mat& x, const Mat& mask) {
    if (mask.size() > 0) x = x.cwiseProduct(mask);
}

// Pre-norm transformer encoder with a sigmoid score head. `rng` enables
// dropout (training mode); evaluation passes nullptr and is deterministic.
inline ForwardTrace forward_trace(const EncoderParams& params, const std::vector<int>& ids,
                                  const std::vector<int>& attention, Rng* rng = nullptr) {
    const EncoderConfig& cfg = params.config;
    const Eigen::Index L = static_cast<Eigen::Index>(ids.size());
    if (L == 0) throw ConfigError("cannot run the encoder on an empty sequence");
    if (L > cfg.max_len) {
        throw ConfigError("sequence length " + std::to_string(L) + " exceeds max_len " +
                          std::to_string(cfg.max_len));
    }
    if (attention.size() != ids.size()) throw ConfigError("attention mask length mismatch");

    const int d = cfg.embed_dim;
    const int heads = cfg.num_heads;
    const int dh = d / heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    ForwardTrace trace;
    Mat x(L, d);
    for (Eigen::Index p = 0; p < L; ++p) {
        const int id = ids[static_cast<std::size_t>(p)];
        if (id < 0 || id >= cfg.vocab_size) {
            throw ConfigError("token id " + std::to_string(id) + " out of range for vocab size " +
                              std::to_string(cfg.vocab_size));
        }
        x.row(p) = params.tok_embedding.row(id) + params.pos_embedding.row(p);
    }
    trace.emb_drop_mask = make_drop_mask(L, d, cfg.dropout, rng);
    apply_mask(x, trace.emb_drop_mask);
    trace.embedded = x;

    trace.layers.resize(params.layers.size());
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        const LayerParams& lp = params.layers[li];
        LayerTrace& lt = trace.layers[li];
        const int layer_no = static_cast<int>(li);

        lt.ln1_in = x;
        Mat a;
        layer_norm(x, lp.ln1_gain, lp.ln1_bias, lt.ln1_hat, a, lt.ln1_inv_std);
        lt.q = a * lp.wq;
        lt.k = a * lp.wk;
        lt.v = a * lp.wv;

        lt.attn.resize(static_cast<std::size_t>(heads));
        lt.attn_concat.resize(L, d);
        for (int h = 0; h < heads; ++h) {
            auto qh = lt.q.middleCols(h * dh, dh);
            auto kh = lt.k.middleCols(h * dh, dh);
            auto vh = lt.v.middleCols(h * dh, dh);
            Mat logits = qh * kh.transpose() * inv_sqrt_dh;
            for (Eigen::Index c = 0; c < L; ++c) {
                if (attention[static_cast<std::size_t>(c)] == 0) logits.col(c).setConstant(-1e30);
            }
            Mat& probs = lt.attn[static_cast<std::size_t>(h)];
            probs.resize(L, L);
            for (Eigen::Index r = 0; r < L; ++r) {
                const double mx = logits.row(r).maxCoeff();
                Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
                probs.row(r) = e / e.sum();
            }
            lt.attn_concat.middleCols(h * dh, dh) = probs * vh;
        }
        Mat attn_out = lt.attn_concat * lp.wo;
        lt.attn_drop_mask = make_drop_mask(L, d, cfg.dropout, rng);
        apply_mask(attn_out, lt.attn_drop_mask);
        x = x + attn_out;
        check_finite(x, layer_no, "attention block");

        lt.ln2_in = x;
        Mat b;
        layer_norm(x, lp.ln2_gain, lp.ln2_bias, lt.ln2_hat, b, lt.ln2_inv_std);
        lt.ffn_pre = (b * lp.ffn_w1).rowwise() + lp.ffn_b1.row(0);
        lt.ffn_act = lt.ffn_pre.unaryExpr([](double v) { return gelu(v); });
        Mat ffn_out = (lt.ffn_act * lp.ffn_w2).rowwise() + lp.ffn_b2.row(0);
        lt.ffn_drop_mask = make_drop_mask(L, d, cfg.dropout, rng);
        apply_mask(ffn_out, lt.ffn_drop_mask);
        x = x + ffn_out;
        check_finite(x, layer_no, "feed-forward block");
    }

    trace.final_x = x;
    trace.logits = (x * params.head_weight).col(0);
    trace.logits.array() += params.head_bias(0, 0);
    if (!trace.logits.allFinite()) {
        throw NumericError("non-finite value in score head at layer " +
                           std::to_string(params.layers.size()));
    }
    trace.scores.resize(static_cast<std::size_t>(L));
    for (Eigen::Index p = 0; p < L; ++p) {
        trace.scores[static_cast<std::size_t>(p)] = sigmoid(trace.logits(p));
    }
    return trace;
}

}  // namespace detail

// Evaluation-mode forward pass: pure function of (params, ids, mask).
inline TokenScores forward(const EncoderParams& params, const std::vector<int>& ids,
                           const std::vector<int>& attention) {
    return detail::forward_trace(params, ids, attention).scores;
}

inline TokenScores forward(const EncoderParams& params, const EncodedSequence& seq) {
    return forward(params, seq.ids, seq.attention);
}

// V1/V2 scoring convention: the [CLS] position carries the pooled score.
inline double pooled_score(const TokenScores& scores) {
    if (scores.empty()) throw ConfigError("pooled_score on an empty sequence");
    return scores[0];
}

// Per-target prediction: arithmetic mean of the token scores in its span.
inline std::vector<std::pair<std::size_t, double>> aggregate_spans(
    const TokenScores& scores, const std::vector<TargetSpan>& spans) {
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const TargetSpan& s = spans[i];
        if (s.end <= s.begin) throw ConfigError("empty span for target " + std::to_string(i));
        if (s.end > scores.size()) throw ConfigError("span outside sequence for target " + std::to_string(i));
        double sum = 0.0;
        for (std::size_t p = s.begin; p < s.end; ++p) sum += scores[p];
        out.emplace_back(i, sum / static_cast<double>(s.length()));
    }
    return out;
}

}  // namespace ppm
