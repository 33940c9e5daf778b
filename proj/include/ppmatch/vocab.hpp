#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ppmatch/dataset.hpp"
#include "ppmatch/errors.hpp"

namespace ppm {

// Reserved token ids. Builders insert these directly; the tokenizer never
// produces them from text.
enum ReservedToken : int {
    kPad = 0,
    kUnk = 1,
    kCls = 2,
    kSep = 3,
    kTar = 4,
};

inline const std::vector<std::string>& reserved_tokens() {
    static const std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[TAR]"};
    return tokens;
}

// Lowercases ASCII letters and splits on whitespace; punctuation characters
// become single-character tokens ("anti-aging" -> anti, -, aging).
inline std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            words.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            words.push_back(std::string(1, static_cast<char>(c)));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return words;
}

class Vocabulary {
public:
    Vocabulary() {
        for (const auto& t : reserved_tokens()) intern(t);
    }

    int intern(const std::string& token) {
        auto it = index_.find(token);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(tokens_.size());
        tokens_.push_back(token);
        index_.emplace(token, id);
        return id;
    }

    int id_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? kUnk : it->second;
    }

    const std::string& token_of(int id) const {
        if (id < 0 || id >= static_cast<int>(tokens_.size())) throw ConfigError("token id out of range");
        return tokens_[static_cast<std::size_t>(id)];
    }

    int size() const { return static_cast<int>(tokens_.size()); }

    const std::vector<std::string>& tokens() const { return tokens_; }

    // FNV-1a over the token list; embedded in checkpoints so predict can
    // reject a mismatched vocabulary.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;
        for (const auto& t : tokens_) {
            for (unsigned char c : t) {
                h ^= c;
                h *= 1099511628211ull;
            }
            h ^= '\n';
            h *= 1099511628211ull;
        }
        return h;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Frequency-ranked vocabulary (ties broken lexicographically) over anchors,
// targets, context codes and context titles. cap bounds the total size
// including the 5 reserved ids.
inline Vocabulary build_vocab(const std::vector<PhraseRecord>& records, int cap,
                              const ContextTable& ctx = ContextTable{}) {
    if (cap < 6) throw ConfigError("vocabulary cap must be >= 6");
    std::map<std::string, std::size_t> freq;
    auto count = [&](const std::string& text) {
        for (const auto& w : split_words(text)) freq[w]++;
    };
    for (const auto& r : records) {
        count(r.anchor);
        count(r.target);
        count(r.context);
        if (auto title = ctx.title(r.context)) count(*title);
    }

    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    for (const auto& [token, n] : ranked) {
        if (vocab.size() >= cap) break;
        vocab.intern(token);
    }
    return vocab;
}

inline std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> ids;
    for (const auto& w : split_words(text)) ids.push_back(vocab.id_of(w));
    return ids;
}

// One token per line; the line number is the id.
inline void save_vocab(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write vocabulary file: " + path);
    for (const auto& t : vocab.tokens()) out << t << "\n";
}

inline Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocabulary file: " + path);
    Vocabulary vocab;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno < static_cast<int>(reserved_tokens().size())) {
            if (line != reserved_tokens()[static_cast<std::size_t>(lineno)]) {
                throw ValidationError(path + ": line " + std::to_string(lineno + 1) +
                                      ": expected reserved token " +
                                      reserved_tokens()[static_cast<std::size_t>(lineno)]);
            }
        } else {
            if (vocab.id_of(line) != kUnk || line == "[UNK]") {
                throw ValidationError(path + ": duplicate token '" + line + "'");
            }
            vocab.intern(line);
        }
        ++lineno;
    }
    if (lineno < static_cast<int>(reserved_tokens().size())) {
        throw ValidationError(path + ": vocabulary file is missing reserved tokens");
    }
    return vocab;
}

}  // namespace ppm
