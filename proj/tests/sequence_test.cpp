#include <gtest/gtest.h>

#include <set>

#include "ppmatch/sequence.hpp"
#include "test_util.hpp"

using namespace ppm;

namespace {

Vocabulary demo_vocab() {
    Vocabulary v;
    for (const char* t : {"a", "b", "c", "d", "a47", "furniture", "x", "y", "z", "long", "title",
                          "words", "anchor", "ctx"}) {
        v.intern(t);
    }
    return v;
}

std::vector<int> ids_of(const Vocabulary& v, const std::vector<std::string>& toks) {
    std::vector<int> out;
    for (const auto& t : toks) out.push_back(v.id_of(t));
    return out;
}

}  // namespace

TEST(BuildV1, WorkedExampleLayout) {
    auto v = demo_vocab();
    PhraseRecord rec{"r1", "a", "b", "A47", 0.5};
    auto seq = build_v1(rec, v, ContextTable{});
    EXPECT_EQ(seq.ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("b"), kSep, v.id_of("a47")}));
    EXPECT_EQ(seq.token_targets,
              (std::vector<double>{0.5, kSentinel, kSentinel, kSentinel, kSentinel, kSentinel}));
    ASSERT_EQ(seq.spans.size(), 1u);
    EXPECT_EQ(seq.spans[0].begin, 0u);
    EXPECT_EQ(seq.spans[0].end, 1u);
    EXPECT_EQ(seq.pair_ids, (std::vector<std::string>{"r1"}));
    EXPECT_EQ(seq.attention, std::vector<int>(6, 1));
}

TEST(BuildV1, ExactlyTwoSeparators) {
    auto v = demo_vocab();
    ContextTable ctx;
    ctx.add("A47", "FURNITURE");
    for (int max_len : {400, 8, 6, 5}) {
        auto seq = build_v1({"r1", "a b c", "x y", "A47", 0.25}, v, ctx, max_len);
        EXPECT_EQ(std::count(seq.ids.begin(), seq.ids.end(), kSep), 2) << "max_len " << max_len;
        EXPECT_LE(seq.ids.size(), static_cast<std::size_t>(max_len));
    }
}

TEST(BuildV1, TitleTableDoesNotChangeV1) {
    auto v = demo_vocab();
    ContextTable ctx;
    ctx.add("A47", "FURNITURE");
    PhraseRecord rec{"r1", "a", "b", "A47", 1.0};
    EXPECT_EQ(build_v1(rec, v, ctx).ids, build_v1(rec, v, ContextTable{}).ids);
}

TEST(BuildV1, TruncationDropsContextThenTarget) {
    auto v = demo_vocab();
    PhraseRecord rec{"r1", "a", "x y z", "A47", 0.5};
    // full layout: CLS a SEP x y z SEP a47 -> 8 tokens
    auto full = build_v1(rec, v, ContextTable{}, 8);
    EXPECT_EQ(full.ids.size(), 8u);
    auto no_ctx = build_v1(rec, v, ContextTable{}, 7);
    EXPECT_EQ(no_ctx.ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("x"), v.id_of("y"),
                                            v.id_of("z"), kSep}));
    auto no_z = build_v1(rec, v, ContextTable{}, 6);
    EXPECT_EQ(no_z.ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("x"), v.id_of("y"), kSep}));
    EXPECT_EQ(no_z.ids[0], kCls);  // [CLS] always survives
}

TEST(BuildV2, TitleAppendedAfterExtraSeparator) {
    auto v = demo_vocab();
    ContextTable ctx;
    ctx.add("A47", "FURNITURE");
    auto seq = build_v2({"r1", "a", "b", "A47", 0.75}, v, ctx);
    EXPECT_EQ(seq.ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("b"), kSep, v.id_of("a47"),
                                         kSep, v.id_of("furniture")}));
    EXPECT_EQ(seq.token_targets[0], 0.75);
}

TEST(BuildV2, NoTitleDegeneratesToV1) {
    auto v = demo_vocab();
    PhraseRecord rec{"r1", "a", "b", "A47", 0.25};
    auto v1 = build_v1(rec, v, ContextTable{});
    auto v2 = build_v2(rec, v, ContextTable{});
    EXPECT_EQ(v1.ids, v2.ids);
    EXPECT_EQ(v1.token_targets, v2.token_targets);
}

TEST(BuildV2, LongTitleTruncatedStructurePreserved) {
    auto v = demo_vocab();
    ContextTable ctx;
    ctx.add("A47", "long title words long title words");
    PhraseRecord rec{"r1", "a", "b", "A47", 0.5};
    auto seq = build_v2(rec, v, ctx, 9);
    EXPECT_EQ(seq.ids.size(), 9u);
    // CLS a SEP b SEP a47 SEP + first 2 title tokens
    EXPECT_EQ(seq.ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("b"), kSep, v.id_of("a47"),
                                         kSep, v.id_of("long"), v.id_of("title")}));
}

TEST(GroupByAnchorContext, SharedPairCollapsesToOneGroup) {
    std::vector<PhraseRecord> records{
        {"r1", "a", "b", "A47", 0.0},
        {"r2", "a", "c", "A47", 0.25},
        {"r3", "a", "d", "A47", 0.5},
    };
    auto groups = group_by_anchor_context(records);
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0].targets, (std::vector<std::string>{"b", "c", "d"}));
    EXPECT_EQ(groups[0].scores, (std::vector<double>{0.0, 0.25, 0.5}));
    EXPECT_EQ(groups[0].ids, (std::vector<std::string>{"r1", "r2", "r3"}));
}

TEST(GroupByAnchorContext, ContextIsPartOfTheKey) {
    std::vector<PhraseRecord> records{
        {"r1", "a", "b", "A47", 0.0},
        {"r2", "a", "b", "B05", 0.25},
    };
    EXPECT_EQ(group_by_anchor_context(records).size(), 2u);
}

TEST(GroupByAnchorContext, GroupCountMatchesDistinctPairScan) {
    auto records = ppmtest::synthetic_records(40, 5, 4);
    auto groups = group_by_anchor_context(records);
    std::set<std::pair<std::string, std::string>> pairs;
    std::size_t total_targets = 0;
    for (const auto& r : records) pairs.insert({r.anchor, r.context});
    for (const auto& g : groups) total_targets += g.targets.size();
    EXPECT_EQ(groups.size(), pairs.size());
    EXPECT_EQ(total_targets, records.size());
}

TEST(GroupByAnchorContext, DuplicateTargetInGroupRejected) {
    std::vector<PhraseRecord> records{
        {"r1", "a", "b", "A47", 0.0},
        {"r2", "a", "b", "A47", 0.25},
    };
    EXPECT_THROW(group_by_anchor_context(records), ValidationError);
}

TEST(BuildV3, WorkedExampleLayoutAndScorePlacement) {
    auto v = demo_vocab();
    GroupedExample g{"a", "A47", {"b", "c d"}, {0.5, 0.75}, {"r1", "r2"}};
    auto seqs = build_v3(g, v, ContextTable{});
    ASSERT_EQ(seqs.size(), 1u);
    const auto& seq = seqs[0];
    EXPECT_EQ(seq.ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("a47"), kSep, kTar,
                                         v.id_of("b"), kTar, v.id_of("c"), v.id_of("d")}));
    EXPECT_EQ(seq.token_targets,
              (std::vector<double>{kSentinel, kSentinel, kSentinel, kSentinel, kSentinel, kSentinel,
                                   0.5, kSentinel, 0.75, 0.75}));
    ASSERT_EQ(seq.spans.size(), 2u);
    EXPECT_EQ(seq.spans[0].begin, 6u);
    EXPECT_EQ(seq.spans[0].end, 7u);
    EXPECT_EQ(seq.spans[1].begin, 8u);
    EXPECT_EQ(seq.spans[1].end, 10u);
    EXPECT_EQ(seq.pair_ids, (std::vector<std::string>{"r1", "r2"}));
}

TEST(BuildV3, SingleTargetHasExactlyOneTarToken) {
    auto v = demo_vocab();
    GroupedExample g{"a", "A47", {"b"}, {1.0}, {"r1"}};
    auto seqs = build_v3(g, v, ContextTable{});
    ASSERT_EQ(seqs.size(), 1u);
    EXPECT_EQ(std::count(seqs[0].ids.begin(), seqs[0].ids.end(), kTar), 1);
}

TEST(BuildV3, OverflowSplitsWithHeaderRepetitionAndFullCoverage) {
    auto v = demo_vocab();
    GroupedExample g{"a", "A47", {"x y", "b c d", "z", "c d", "x"}, {0.0, 0.25, 0.5, 0.75, 1.0},
                     {"r1", "r2", "r3", "r4", "r5"}};
    auto seqs = build_v3(g, v, ContextTable{}, 12);
    ASSERT_GE(seqs.size(), 2u);

    const std::vector<int> header{kCls, v.id_of("a"), kSep, v.id_of("a47"), kSep};
    std::set<std::string> covered;
    for (const auto& seq : seqs) {
        EXPECT_LE(seq.ids.size(), 12u);
        ASSERT_GE(seq.ids.size(), header.size());
        EXPECT_TRUE(std::equal(header.begin(), header.end(), seq.ids.begin()));
        for (std::size_t i = 0; i < seq.spans.size(); ++i) {
            EXPECT_TRUE(covered.insert(seq.pair_ids[i]).second)
                << "record " << seq.pair_ids[i] << " covered twice";
        }
    }
    EXPECT_EQ(covered, (std::set<std::string>{"r1", "r2", "r3", "r4", "r5"}));
}

TEST(BuildV3, ContextTitleTokensJoinTheHeader) {
    auto v = demo_vocab();
    ContextTable ctx;
    ctx.add("A47", "FURNITURE");
    GroupedExample g{"a", "A47", {"b"}, {0.5}, {"r1"}};
    auto seqs = build_v3(g, v, ctx);
    EXPECT_EQ(seqs[0].ids, (std::vector<int>{kCls, v.id_of("a"), kSep, v.id_of("a47"),
                                             v.id_of("furniture"), kSep, kTar, v.id_of("b")}));
}

TEST(PadTo, PadsWithSentinelAndZeroAttention) {
    auto v = demo_vocab();
    auto seq = build_v1({"r1", "a", "b", "A47", 0.5}, v, ContextTable{});
    ASSERT_EQ(seq.ids.size(), 6u);
    auto padded = pad_to(seq, 8);
    EXPECT_EQ(padded.ids.size(), 8u);
    EXPECT_EQ(padded.ids[6], kPad);
    EXPECT_EQ(padded.ids[7], kPad);
    EXPECT_EQ(padded.token_targets[6], kSentinel);
    EXPECT_EQ(padded.attention[6], 0);
    EXPECT_EQ(padded.attention[5], 1);
}

TEST(PadTo, ExactLengthIsIdentityAndOverflowThrows) {
    auto v = demo_vocab();
    auto seq = build_v1({"r1", "a", "b", "A47", 0.5}, v, ContextTable{});
    auto same = pad_to(seq, 6);
    EXPECT_EQ(same.ids, seq.ids);
    EXPECT_THROW(pad_to(seq, 5), ConfigError);
}

// Round-trip property: tokens inside span i map back to target i's words
// (modulo [UNK]).
TEST(SequenceProperties, SpanTokensReproduceTargets) {
    auto records = ppmtest::synthetic_records(25, 5, 3);
    auto vocab = build_vocab(records, 1000);
    for (const auto& g : group_by_anchor_context(records)) {
        for (const auto& seq : build_v3(g, vocab, ContextTable{})) {
            for (std::size_t i = 0; i < seq.spans.size(); ++i) {
                // find the target index by record id
                std::size_t t = 0;
                while (g.ids[t] != seq.pair_ids[i]) ++t;
                auto expect = tokenize(g.targets[t], vocab);
                std::vector<int> got(seq.ids.begin() + static_cast<std::ptrdiff_t>(seq.spans[i].begin),
                                     seq.ids.begin() + static_cast<std::ptrdiff_t>(seq.spans[i].end));
                EXPECT_EQ(got, expect);
            }
        }
    }
}

// Score placement property: token_targets[p] != -1 iff p is inside a span
// (V3) or the [CLS] slot (V1/V2).
TEST(SequenceProperties, SentinelExactlyOffSpan) {
    auto records = ppmtest::synthetic_records(20, 4, 3);
    auto vocab = build_vocab(records, 1000);
    auto check = [](const EncodedSequence& seq) {
        std::vector<bool> in_span(seq.ids.size(), false);
        for (const auto& s : seq.spans) {
            for (std::size_t p = s.begin; p < s.end; ++p) in_span[p] = true;
        }
        for (std::size_t p = 0; p < seq.ids.size(); ++p) {
            EXPECT_EQ(seq.token_targets[p] != kSentinel, in_span[p]) << "position " << p;
        }
    };
    for (const auto& r : records) {
        check(build_v1(r, vocab, ContextTable{}));
        check(build_v2(r, vocab, ContextTable{}));
    }
    for (const auto& g : group_by_anchor_context(records)) {
        for (const auto& seq : build_v3(g, vocab, ContextTable{})) check(seq);
    }
}

TEST(SequenceProperties, DeterministicConstruction) {
    auto records = ppmtest::synthetic_records(10, 3, 2);
    auto vocab = build_vocab(records, 1000);
    auto groups = group_by_anchor_context(records);
    for (const auto& g : groups) {
        auto a = build_v3(g, vocab, ContextTable{});
        auto b = build_v3(g, vocab, ContextTable{});
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].ids, b[i].ids);
            EXPECT_EQ(dump_sequence(a[i]), dump_sequence(b[i]));
        }
    }
}
