#pragma once

#include <vector>

#include "ppmatch/encoder.hpp"
#include "ppmatch/metrics.hpp"
#include "ppmatch/sequence.hpp"

namespace ppm {

// Builds the model-ready sequences for a record set under the given
// template. V1/V2 yield one sequence per record; V3 groups by
// (anchor, context) and may split large groups.
inline std::vector<EncodedSequence> build_sequences(const std::vector<PhraseRecord>& records,
                                                    Variant variant, const Vocabulary& vocab,
                                                    const ContextTable& ctx,
                                                    int max_len = kDefaultMaxLen) {
    std::vector<EncodedSequence> out;
    switch (variant) {
        case Variant::v1:
            out.reserve(records.size());
            for (const auto& r : records) out.push_back(build_v1(r, vocab, ctx, max_len));
            break;
        case Variant::v2:
            out.reserve(records.size());
            for (const auto& r : records) out.push_back(build_v2(r, vocab, ctx, max_len));
            break;
        case Variant::v3:
            for (const auto& g : group_by_anchor_context(records)) {
                for (auto& seq : build_v3(g, vocab, ctx, max_len)) out.push_back(std::move(seq));
            }
            break;
    }
    return out;
}

// One prediction per record id, re-assembled from span means. Duplicate
// coverage of an id is a hard error.
inline ScoreVector predict_sequences(const EncoderParams& params,
                                     const std::vector<EncodedSequence>& sequences) {
    ScoreVector out;
    for (const auto& seq : sequences) {
        TokenScores scores = forward(params, seq);
        for (const auto& [span_index, value] : aggregate_spans(scores, seq.spans)) {
            out.set(seq.pair_ids[span_index], value);
        }
    }
    return out;
}

inline ScoreVector predict_records(const EncoderParams& params, const std::vector<PhraseRecord>& records,
                                   Variant variant, const Vocabulary& vocab, const ContextTable& ctx,
                                   int max_len = kDefaultMaxLen) {
    ScoreVector preds = predict_sequences(params, build_sequences(records, variant, vocab, ctx, max_len));
    if (preds.size() != records.size()) {
        throw NumericError("prediction count " + std::to_string(preds.size()) +
                           " does not match record count " + std::to_string(records.size()));
    }
    return preds;
}

inline ScoreVector gold_scores(const std::vector<PhraseRecord>& records) {
    ScoreVector out;
    for (const auto& r : records) out.set(r.id, r.score);
    return out;
}

}  // namespace ppm
