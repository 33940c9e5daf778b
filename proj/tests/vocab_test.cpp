#include <gtest/gtest.h>

#include <algorithm>

#include "ppmatch/vocab.hpp"
#include "test_util.hpp"

using namespace ppm;

namespace {

std::vector<PhraseRecord> one_record_corpus(const std::string& target) {
    return {{"r1", "abatement", target, "A47", 0.5}};
}

}  // namespace

TEST(Tokenizer, LowercasesAndSplitsOnWhitespace) {
    Vocabulary v;
    v.intern("abatement");
    v.intern("of");
    v.intern("pollution");
    auto ids = tokenize("Abatement of pollution", v);
    EXPECT_EQ(ids, (std::vector<int>{v.id_of("abatement"), v.id_of("of"), v.id_of("pollution")}));
}

TEST(Tokenizer, EmptyTextGivesEmptyList) {
    Vocabulary v;
    EXPECT_TRUE(tokenize("", v).empty());
    EXPECT_TRUE(tokenize("   ", v).empty());
}

TEST(Tokenizer, PunctuationBecomesOwnToken) {
    EXPECT_EQ(split_words("anti-aging"), (std::vector<std::string>{"anti", "-", "aging"}));
    EXPECT_EQ(split_words("a47"), (std::vector<std::string>{"a47"}));
    EXPECT_EQ(split_words("foo, bar"), (std::vector<std::string>{"foo", ",", "bar"}));
}

TEST(Tokenizer, UnknownWordsMapToUnk) {
    Vocabulary v;
    auto ids = tokenize("never seen", v);
    EXPECT_EQ(ids, (std::vector<int>{kUnk, kUnk}));
}

TEST(Vocab, ReservedTokensOccupyFirstFiveIds) {
    Vocabulary v;
    EXPECT_EQ(v.size(), 5);
    EXPECT_EQ(v.token_of(kPad), "[PAD]");
    EXPECT_EQ(v.token_of(kUnk), "[UNK]");
    EXPECT_EQ(v.token_of(kCls), "[CLS]");
    EXPECT_EQ(v.token_of(kSep), "[SEP]");
    EXPECT_EQ(v.token_of(kTar), "[TAR]");
}

TEST(Vocab, BuildsFromSingleCorpusEntry) {
    auto v = build_vocab(one_record_corpus("abatement of pollution"), 100);
    EXPECT_NE(v.id_of("abatement"), kUnk);
    EXPECT_NE(v.id_of("of"), kUnk);
    EXPECT_NE(v.id_of("pollution"), kUnk);
    EXPECT_NE(v.id_of("a47"), kUnk);  // context codes are tokens too
}

TEST(Vocab, CapKeepsMostFrequentWords) {
    // 10 distinct words, cap 7 -> only the 2 most frequent survive.
    std::vector<PhraseRecord> records;
    std::string target;
    for (int i = 0; i < 10; ++i) {
        // wordN appears N+1 times
        for (int j = 0; j <= i; ++j) target += " word" + std::to_string(i);
    }
    records.push_back({"r1", "word9", target, "A47", 0.5});
    auto v = build_vocab(records, 7);
    EXPECT_EQ(v.size(), 7);
    EXPECT_NE(v.id_of("word9"), kUnk);
    EXPECT_NE(v.id_of("word8"), kUnk);
    EXPECT_EQ(v.id_of("word0"), kUnk);
    EXPECT_EQ(v.id_of("a47"), kUnk);  // crowded out by the cap
}

TEST(Vocab, FrequencyThenLexicographicOrder) {
    std::vector<PhraseRecord> records{
        {"r1", "beta beta", "alpha alpha", "A47", 0.5},
        {"r2", "beta beta", "gamma", "A47", 0.25},
    };
    auto v = build_vocab(records, 100);
    // beta x4, then a47 x2, alpha x2 lexicographic, then gamma x1
    EXPECT_EQ(v.id_of("beta"), 5);
    EXPECT_EQ(v.id_of("a47"), 6);
    EXPECT_EQ(v.id_of("alpha"), 7);
    EXPECT_EQ(v.id_of("gamma"), 8);
}

TEST(Vocab, RowOrderDoesNotChangeVocabulary) {
    auto records = ppmtest::synthetic_records(30, 4, 4);
    auto shuffled = records;
    std::reverse(shuffled.begin(), shuffled.end());
    auto a = build_vocab(records, 200);
    auto b = build_vocab(shuffled, 200);
    EXPECT_EQ(a.tokens(), b.tokens());
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
}

TEST(Vocab, EmptyCorpusKeepsReservedOnly) {
    auto v = build_vocab({}, 50);
    EXPECT_EQ(v.size(), 5);
}

TEST(Vocab, CapBelowReservedRejected) {
    EXPECT_THROW(build_vocab({}, 5), ConfigError);
}

TEST(Vocab, TitlesContributeTokens) {
    ContextTable ctx;
    ctx.add("A47", "FURNITURE");
    auto v = build_vocab(one_record_corpus("chair"), 100, ctx);
    EXPECT_NE(v.id_of("furniture"), kUnk);
}

TEST(Vocab, SaveLoadRoundTrip) {
    ppmtest::TempDir tmp("vocab");
    auto v = build_vocab(one_record_corpus("abatement of pollution"), 100);
    auto path = tmp.path("vocab.txt");
    save_vocab(v, path);
    auto loaded = load_vocab(path);
    EXPECT_EQ(loaded.tokens(), v.tokens());
    EXPECT_EQ(loaded.fingerprint(), v.fingerprint());
}

TEST(Vocab, LoadRejectsBadReservedPrefix) {
    ppmtest::TempDir tmp("vocab");
    auto path = tmp.write("bad.txt", "[PAD]\n[UNK]\nnope\n[SEP]\n[TAR]\n");
    EXPECT_THROW(load_vocab(path), ValidationError);
}
