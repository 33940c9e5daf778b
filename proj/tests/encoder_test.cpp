#include <gtest/gtest.h>

#include <limits>

#include "ppmatch/checkpoint.hpp"
#include "ppmatch/encoder.hpp"
#include "ppmatch/optim.hpp"
#include "test_util.hpp"

using namespace ppm;

namespace {

EncoderConfig tiny_config(std::uint64_t seed = 1) {
    EncoderConfig cfg;
    cfg.vocab_size = 40;
    cfg.embed_dim = 16;
    cfg.num_heads = 2;
    cfg.num_layers = 2;
    cfg.ffn_dim = 32;
    cfg.max_len = 32;
    cfg.seed = seed;
    return cfg;
}

std::vector<int> random_ids(Rng& rng, std::size_t len, int vocab_size) {
    std::vector<int> ids(len);
    for (auto& id : ids) id = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab_size - 1)));
    return ids;
}

bool params_equal(const EncoderParams& a, const EncoderParams& b) {
    bool equal = true;
    auto bs = detail::tensor_list(b);
    std::size_t i = 0;
    a.visit([&](const std::string&, const Mat& m) {
        if (m.rows() != bs[i]->rows() || m.cols() != bs[i]->cols() || m != *bs[i]) equal = false;
        ++i;
    });
    return equal;
}

}  // namespace

TEST(InitParams, DeterministicForFixedSeed) {
    auto a = init_params(tiny_config(7));
    auto b = init_params(tiny_config(7));
    EXPECT_TRUE(params_equal(a, b));
    auto c = init_params(tiny_config(8));
    EXPECT_FALSE(params_equal(a, c));
}

TEST(InitParams, LayerNormGainsOneBiasesZero) {
    auto p = init_params(tiny_config());
    for (const auto& l : p.layers) {
        EXPECT_TRUE(l.ln1_gain.isOnes());
        EXPECT_TRUE(l.ln2_gain.isOnes());
        EXPECT_TRUE(l.ln1_bias.isZero());
        EXPECT_TRUE(l.ln2_bias.isZero());
        EXPECT_TRUE(l.ffn_b1.isZero());
        EXPECT_TRUE(l.ffn_b2.isZero());
    }
    EXPECT_TRUE(p.head_bias.isZero());
}

TEST(InitParams, UniformScaleBound) {
    auto cfg = tiny_config();
    auto p = init_params(cfg);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
    EXPECT_LE(p.tok_embedding.cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(p.tok_embedding.cwiseAbs().maxCoeff(), 0.0);
}

// Closed-form shape arithmetic for (vocab 100, dim 16, heads 2, layers 2,
// ffn 32, max_len 32), computed independently of visit().
TEST(InitParams, ParameterCountMatchesHandComputation) {
    EncoderConfig cfg;
    cfg.vocab_size = 100;
    cfg.embed_dim = 16;
    cfg.num_heads = 2;
    cfg.num_layers = 2;
    cfg.ffn_dim = 32;
    cfg.max_len = 32;
    auto p = init_params(cfg);

    const std::size_t d = 16, f = 32, v = 100, L = 32;
    const std::size_t per_layer = 4 * d * d        // q,k,v,o projections
                                  + d * f + f      // ffn in + bias
                                  + f * d + d      // ffn out + bias
                                  + 4 * d;         // two layer-norm pairs
    const std::size_t expected = v * d + L * d + 2 * per_layer + d + 1;
    EXPECT_EQ(p.parameter_count(), expected);
}

TEST(InitParams, InvalidShapesRejected) {
    auto cfg = tiny_config();
    cfg.num_heads = 3;  // 16 % 3 != 0
    EXPECT_THROW(init_params(cfg), ConfigError);
    cfg = tiny_config();
    cfg.vocab_size = 0;
    EXPECT_THROW(init_params(cfg), ConfigError);
}

TEST(Forward, OutputLengthMatchesInputForAllLengths) {
    auto p = init_params(tiny_config());
    Rng rng(3);
    for (std::size_t len = 1; len <= 32; ++len) {
        auto ids = random_ids(rng, len, p.config.vocab_size);
        std::vector<int> mask(len, 1);
        auto scores = forward(p, ids, mask);
        ASSERT_EQ(scores.size(), len);
        for (double s : scores) {
            EXPECT_GT(s, 0.0);
            EXPECT_LT(s, 1.0);
        }
    }
}

TEST(Forward, PadContentNeverReachesRealPositions) {
    auto p = init_params(tiny_config());
    Rng rng(5);
    auto ids = random_ids(rng, 6, p.config.vocab_size);
    ids.resize(10, kPad);
    std::vector<int> mask(10, 0);
    for (int i = 0; i < 6; ++i) mask[static_cast<std::size_t>(i)] = 1;

    auto base = forward(p, ids, mask);
    auto altered = ids;
    altered[7] = 17;  // arbitrary real token id placed in a pad slot
    altered[9] = 3;
    auto scores = forward(p, altered, mask);
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(scores[static_cast<std::size_t>(i)], base[static_cast<std::size_t>(i)])
            << "non-pad output " << i << " changed";
    }
}

TEST(Forward, PositionSensitivity) {
    auto p = init_params(tiny_config());
    std::vector<int> ids{kCls, 7, 9, 11, 13, 6};
    std::vector<int> mask(ids.size(), 1);
    auto base = forward(p, ids, mask);
    std::swap(ids[1], ids[4]);
    auto swapped = forward(p, ids, mask);
    EXPECT_NE(base, swapped);
}

TEST(Forward, OutOfRangeTokenRejected) {
    auto p = init_params(tiny_config());
    std::vector<int> ids{kCls, 1000};
    std::vector<int> mask{1, 1};
    EXPECT_THROW(forward(p, ids, mask), ConfigError);
}

TEST(Forward, NonFiniteIntermediateNamesLayer) {
    auto p = init_params(tiny_config());
    p.layers[1].ffn_b2.setConstant(std::numeric_limits<double>::infinity());
    std::vector<int> ids{kCls, 7, 9};
    std::vector<int> mask{1, 1, 1};
    try {
        forward(p, ids, mask);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
    }
}

TEST(Forward, DeterministicInEvalMode) {
    auto p = init_params(tiny_config());
    std::vector<int> ids{kCls, 5, 6, 7};
    std::vector<int> mask(4, 1);
    EXPECT_EQ(forward(p, ids, mask), forward(p, ids, mask));
}

TEST(PooledScore, TakesClsPosition) {
    TokenScores scores{0.7, 0.2, 0.9};
    EXPECT_EQ(pooled_score(scores), 0.7);
    TokenScores constant{0.4, 0.4, 0.4};
    EXPECT_EQ(pooled_score(constant), 0.4);
    auto agg = aggregate_spans(scores, {TargetSpan{0, 1}});
    EXPECT_EQ(agg[0].second, pooled_score(scores));
    EXPECT_THROW(pooled_score(TokenScores{}), ConfigError);
}

TEST(AggregateSpans, MeansOverSpans) {
    TokenScores scores{0.1, 0.6, 0.4, 0.8, 0.5};
    auto agg = aggregate_spans(scores, {TargetSpan{1, 2}, TargetSpan{2, 4}});
    EXPECT_DOUBLE_EQ(agg[0].second, 0.6);
    EXPECT_DOUBLE_EQ(agg[1].second, (0.4 + 0.8) / 2.0);
}

TEST(AggregateSpans, EmptyAndOutOfBoundsSpansRejected) {
    TokenScores scores{0.1, 0.6};
    EXPECT_THROW(aggregate_spans(scores, {TargetSpan{1, 1}}), ConfigError);
    EXPECT_THROW(aggregate_spans(scores, {TargetSpan{1, 5}}), ConfigError);
}

TEST(CheckpointIo, RoundTripsBitwise) {
    ppmtest::TempDir tmp("ckpt");
    auto p = init_params(tiny_config(21));
    auto path = tmp.path("model.ckpt");
    save_checkpoint(path, p, Variant::v3, 0xabcdef0123456789ull);
    auto loaded = load_checkpoint(path);
    EXPECT_TRUE(params_equal(p, loaded.params));
    EXPECT_EQ(loaded.variant, Variant::v3);
    EXPECT_EQ(loaded.vocab_hash, 0xabcdef0123456789ull);

    // byte-stable: save(load(x)) == save-file of x
    auto path2 = tmp.path("model2.ckpt");
    save_checkpoint(path2, loaded.params, loaded.variant, loaded.vocab_hash);
    std::ifstream a(path), b(path2);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    EXPECT_EQ(sa, sb);
}

TEST(CheckpointIo, RejectsGarbage) {
    ppmtest::TempDir tmp("ckpt");
    auto path = tmp.write("bad.ckpt", "not a checkpoint\n");
    EXPECT_THROW(load_checkpoint(path), ValidationError);
    EXPECT_THROW(load_checkpoint(tmp.path("missing.ckpt")), ConfigError);
}
