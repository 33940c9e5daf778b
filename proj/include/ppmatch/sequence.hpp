#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ppmatch/dataset.hpp"
#include "ppmatch/vocab.hpp"

namespace ppm {

// Gold value marking positions excluded from the loss ([CLS], [SEP], [TAR],
// anchor, context, padding).
inline constexpr double kSentinel = -1.0;
inline constexpr int kDefaultMaxLen = 400;

// The three input-construction templates.
enum class Variant { v1, v2, v3 };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::v1: return "v1";
        case Variant::v2: return "v2";
        case Variant::v3: return "v3";
    }
    return "?";
}

inline Variant parse_variant(std::string name) {
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (name == "v1") return Variant::v1;
    if (name == "v2") return Variant::v2;
    if (name == "v3") return Variant::v3;
    throw ConfigError("unknown variant '" + name + "' (expected v1, v2 or v3)");
}

// All targets of one (anchor, context) pair, in first-appearance order.
struct GroupedExample {
    std::string anchor;
    std::string context;
    std::vector<std::string> targets;
    std::vector<double> scores;
    std::vector<std::string> ids;  // record id per target, for re-assembly
};

struct TargetSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t length() const { return end - begin; }
};

struct EncodedSequence {
    std::vector<int> ids;
    std::vector<double> token_targets;  // gold per position, kSentinel off-span
    std::vector<int> attention;         // 1 = real token, 0 = pad
    std::vector<TargetSpan> spans;      // spans[i] belongs to pair_ids[i]
    std::vector<std::string> pair_ids;

    std::size_t length() const { return ids.size(); }
};

inline std::vector<GroupedExample> group_by_anchor_context(const std::vector<PhraseRecord>& records) {
    std::vector<GroupedExample> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& r : records) {
        auto key = std::make_pair(r.anchor, r.context);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, groups.size());
            groups.push_back(GroupedExample{r.anchor, r.context, {}, {}, {}});
            it = index.find(key);
        }
        GroupedExample& g = groups[it->second];
        if (std::find(g.targets.begin(), g.targets.end(), r.target) != g.targets.end()) {
            throw ValidationError("duplicate target '" + r.target + "' for anchor '" + r.anchor +
                                  "' in context " + r.context);
        }
        g.targets.push_back(r.target);
        g.scores.push_back(r.score);
        g.ids.push_back(r.id);
    }
    return groups;
}

namespace detail {

// Context rendering: the code token, followed by the title tokens when the
// table knows the code. V2 additionally separates code and title with [SEP].
inline std::vector<int> context_tokens(const std::string& code, const Vocabulary& vocab,
                                       const ContextTable& ctx, bool sep_before_title) {
    std::vector<int> out = tokenize(code, vocab);
    if (auto title = ctx.title(code)) {
        std::vector<int> title_toks = tokenize(*title, vocab);
        if (!title_toks.empty()) {
            if (sep_before_title) out.push_back(kSep);
            out.insert(out.end(), title_toks.begin(), title_toks.end());
        }
    }
    return out;
}

inline EncodedSequence assemble_single(const PhraseRecord& record, std::vector<int> anchor_toks,
                                       std::vector<int> target_toks, std::vector<int> context_sec,
                                       int max_len) {
    auto total = [&] { return 1 + anchor_toks.size() + 1 + target_toks.size() + 1 + context_sec.size(); };
    // Truncation order: context section, then target, then anchor. [CLS]
    // and the two structural [SEP]s always survive.
    while (total() > static_cast<std::size_t>(max_len)) {
        if (!context_sec.empty()) {
            context_sec.pop_back();
            while (!context_sec.empty() && context_sec.back() == kSep) context_sec.pop_back();
        } else if (!target_toks.empty()) {
            target_toks.pop_back();
        } else if (!anchor_toks.empty()) {
            anchor_toks.pop_back();
        } else {
            throw ConfigError("max_len too small for the [CLS] a [SEP] t [SEP] c template");
        }
    }

    EncodedSequence seq;
    seq.ids.push_back(kCls);
    seq.ids.insert(seq.ids.end(), anchor_toks.begin(), anchor_toks.end());
    seq.ids.push_back(kSep);
    seq.ids.insert(seq.ids.end(), target_toks.begin(), target_toks.end());
    seq.ids.push_back(kSep);
    seq.ids.insert(seq.ids.end(), context_sec.begin(), context_sec.end());

    seq.token_targets.assign(seq.ids.size(), kSentinel);
    seq.token_targets[0] = record.score;  // pooled gold on [CLS]
    seq.attention.assign(seq.ids.size(), 1);
    seq.spans.push_back(TargetSpan{0, 1});
    seq.pair_ids.push_back(record.id);
    return seq;
}

}  // namespace detail

// V1 template: [CLS] anchor [SEP] target [SEP] context-code.
inline EncodedSequence build_v1(const PhraseRecord& record, const Vocabulary& vocab,
                                const ContextTable& ctx, int max_len = kDefaultMaxLen) {
    (void)ctx;  // V1 renders the code only; titles are V2 material
    return detail::assemble_single(record, tokenize(record.anchor, vocab),
                                   tokenize(record.target, vocab),
                                   tokenize(record.context, vocab), max_len);
}

// V2 template: [CLS] anchor [SEP] target [SEP] code [SEP] title. Without a
// title it degenerates to the V1 layout.
inline EncodedSequence build_v2(const PhraseRecord& record, const Vocabulary& vocab,
                                const ContextTable& ctx, int max_len = kDefaultMaxLen) {
    return detail::assemble_single(record, tokenize(record.anchor, vocab),
                                   tokenize(record.target, vocab),
                                   detail::context_tokens(record.context, vocab, ctx, true), max_len);
}

// V3 template: [CLS] anchor [SEP] context [SEP] [TAR] t1 [TAR] t2 ...
// Every token of target i carries gold score i; everything else is
// sentinel. Groups that exceed max_len are split into several sequences,
// each repeating the header; targets are never split mid-phrase.
inline std::vector<EncodedSequence> build_v3(const GroupedExample& group, const Vocabulary& vocab,
                                             const ContextTable& ctx, int max_len = kDefaultMaxLen) {
    if (group.targets.empty() || group.targets.size() != group.scores.size() ||
        group.targets.size() != group.ids.size()) {
        throw ValidationError("grouped example for anchor '" + group.anchor + "' is malformed");
    }

    std::vector<int> header;
    header.push_back(kCls);
    auto anchor_toks = tokenize(group.anchor, vocab);
    header.insert(header.end(), anchor_toks.begin(), anchor_toks.end());
    header.push_back(kSep);
    auto ctx_toks = detail::context_tokens(group.context, vocab, ctx, false);
    header.insert(header.end(), ctx_toks.begin(), ctx_toks.end());
    header.push_back(kSep);

    const std::size_t budget = static_cast<std::size_t>(max_len);
    if (header.size() + 2 > budget) {
        throw ConfigError("max_len " + std::to_string(max_len) + " cannot fit the V3 header for anchor '" +
                          group.anchor + "'");
    }

    std::vector<EncodedSequence> out;
    EncodedSequence seq;
    auto open_sequence = [&] {
        seq = EncodedSequence{};
        seq.ids = header;
        seq.token_targets.assign(header.size(), kSentinel);
        seq.attention.assign(header.size(), 1);
    };
    open_sequence();

    for (std::size_t t = 0; t < group.targets.size(); ++t) {
        std::vector<int> toks = tokenize(group.targets[t], vocab);
        if (toks.empty()) toks.push_back(kUnk);
        // A target that cannot fit even in a fresh sequence is truncated;
        // splitting mid-phrase would detach tokens from their span.
        std::size_t solo_capacity = budget - header.size() - 1;
        if (toks.size() > solo_capacity) toks.resize(solo_capacity);

        if (seq.ids.size() + 1 + toks.size() > budget) {
            out.push_back(std::move(seq));
            open_sequence();
        }
        seq.ids.push_back(kTar);
        seq.token_targets.push_back(kSentinel);
        seq.attention.push_back(1);

        TargetSpan span{seq.ids.size(), seq.ids.size() + toks.size()};
        for (int tok : toks) {
            seq.ids.push_back(tok);
            seq.token_targets.push_back(group.scores[t]);
            seq.attention.push_back(1);
        }
        seq.spans.push_back(span);
        seq.pair_ids.push_back(group.ids[t]);
    }
    out.push_back(std::move(seq));
    return out;
}

inline EncodedSequence pad_to(EncodedSequence seq, int max_len) {
    if (seq.ids.size() > static_cast<std::size_t>(max_len)) {
        throw ConfigError("cannot pad a sequence of length " + std::to_string(seq.ids.size()) +
                          " to " + std::to_string(max_len));
    }
    while (seq.ids.size() < static_cast<std::size_t>(max_len)) {
        seq.ids.push_back(kPad);
        seq.token_targets.push_back(kSentinel);
        seq.attention.push_back(0);
    }
    return seq;
}

// One line per sequence: ids, per-token golds and spans in a flat JSON
// object (debugging aid).
inline std::string dump_sequence(const EncodedSequence& seq) {
    std::string out = "{\"ids\":[";
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(seq.ids[i]);
    }
    out += "],\"targets\":[";
    for (std::size_t i = 0; i < seq.token_targets.size(); ++i) {
        if (i) out += ",";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", seq.token_targets[i]);
        out += buf;
    }
    out += "],\"spans\":[";
    for (std::size_t i = 0; i < seq.spans.size(); ++i) {
        if (i) out += ",";
        out += "{\"id\":\"" + seq.pair_ids[i] + "\",\"begin\":" + std::to_string(seq.spans[i].begin) +
               ",\"end\":" + std::to_string(seq.spans[i].end) + "}";
    }
    out += "]}";
    return out;
}

}  // namespace ppm
