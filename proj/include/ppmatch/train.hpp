#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "ppmatch/awp.hpp"
#include "ppmatch/backprop.hpp"
#include "ppmatch/optim.hpp"
#include "ppmatch/predict.hpp"

namespace ppm {

struct TrainConfig {
    Variant variant = Variant::v3;
    int max_len = kDefaultMaxLen;
    OptimConfig optim;
    AwpConfig awp;
    BceNorm bce_norm = BceNorm::unmasked;
    int batch_size = 8;
    int epochs = 3;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (max_len < 4) throw ConfigError("max_len must be >= 4");
    }
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_pearson = 0.0;
};

struct TrainResult {
    EncoderParams best_params;   // highest validation Pearson
    EncoderParams final_params;  // last completed epoch
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_pearson = 0.0;
    bool diverged = false;
    std::vector<std::string> warnings;
};

namespace detail {

// Batches group sequences of similar length to limit padding; the epoch
// rng shuffles batch order only, so batch membership is stable.
inline std::vector<std::vector<std::size_t>> length_batches(const std::vector<EncodedSequence>& seqs,
                                                            int batch_size) {
    std::vector<std::size_t> order(seqs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return seqs[a].length() < seqs[b].length();
    });
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
        std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

inline std::vector<EncodedSequence> assemble_batch(const std::vector<EncodedSequence>& seqs,
                                                   const std::vector<std::size_t>& indices) {
    std::size_t max_len = 0;
    for (std::size_t i : indices) max_len = std::max(max_len, seqs[i].length());
    std::vector<EncodedSequence> batch;
    batch.reserve(indices.size());
    for (std::size_t i : indices) batch.push_back(pad_to(seqs[i], static_cast<int>(max_len)));
    return batch;
}

}  // namespace detail

// Epoch loop: seeded batch shuffling, optional AWP before each optimizer
// step, gradient clipping, adaptive-moment update, per-epoch validation
// Pearson with best-checkpoint retention. Divergence aborts with the last
// good parameters.
inline TrainResult train(const std::vector<PhraseRecord>& train_records,
                         const std::vector<PhraseRecord>& val_records, const Vocabulary& vocab,
                         const ContextTable& ctx, const EncoderConfig& encoder_cfg,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (train_records.empty()) throw ValidationError("training partition is empty");
    if (val_records.empty()) throw ValidationError("validation partition is empty");

    EncoderConfig enc = encoder_cfg;
    enc.vocab_size = vocab.size();
    enc.max_len = cfg.max_len;
    enc.validate();

    auto sequences = build_sequences(train_records, cfg.variant, vocab, ctx, cfg.max_len);
    const ScoreVector val_gold = gold_scores(val_records);

    TrainResult result;
    EncoderParams params = init_params(enc);
    result.best_params = params;
    result.final_params = params;

    Rng order_rng(cfg.seed);
    Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    Rng* drop = enc.dropout > 0.0 ? &dropout_rng : nullptr;

    OptimState optim = OptimState::init(params);
    auto batches = detail::length_batches(sequences, cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> batch_order(batches.size());
        std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
        order_rng.shuffle(batch_order);

        KahanSum loss_sum;
        double loss_weight = 0.0;
        const bool awp_active = cfg.awp.enabled && (epoch + 1) >= cfg.awp.start_epoch;

        try {
            for (std::size_t bi : batch_order) {
                auto batch = detail::assemble_batch(sequences, batches[bi]);
                const std::string batch_id = "epoch" + std::to_string(epoch) + ".batch" + std::to_string(bi);
                GradientReport rep = gradients(params, batch, batch_id, cfg.bce_norm, drop);
                loss_sum.add(rep.loss.loss * static_cast<double>(rep.loss.contributing));
                loss_weight += static_cast<double>(rep.loss.contributing);

                EncoderParams* step_grads = &rep.grads;
                AwpResult adv;
                if (awp_active) {
                    adv = awp_attack_restore(params, batch, rep, cfg.awp, cfg.bce_norm, drop);
                    if (!adv.warning.empty()) result.warnings.push_back(adv.warning);
                    step_grads = &adv.report.grads;
                }
                clip_by_global_norm(*step_grads, cfg.optim.clip_norm);
                adam_step(optim, params, *step_grads, cfg.optim);
            }
        } catch (const NumericError& e) {
            result.diverged = true;
            result.warnings.push_back("training diverged at epoch " + std::to_string(epoch) + ": " +
                                      e.what());
            break;  // final_params still holds the last good epoch
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_weight > 0.0 ? loss_sum.value() / loss_weight : 0.0;
        stats.val_pearson = evaluate(
            predict_records(params, val_records, cfg.variant, vocab, ctx, cfg.max_len), val_gold);
        result.history.push_back(stats);
        result.final_params = params;

        if (result.best_epoch < 0 || stats.val_pearson > result.best_val_pearson) {
            result.best_epoch = epoch;
            result.best_val_pearson = stats.val_pearson;
            result.best_params = params;
        }
    }
    return result;
}

inline std::string serialize_history(const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_loss,val_pearson\n";
    char buf[96];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_pearson);
        out += buf;
    }
    return out;
}

}  // namespace ppm
