#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ppmatch/dataset.hpp"
#include "ppmatch/rng.hpp"

namespace ppmtest {

// Synthetic dataset: n_anchors anchor groups, 1..max_group_size records
// each, contexts and scores cycling deterministically through their
// domains.
inline std::vector<ppm::PhraseRecord> synthetic_records(std::size_t n_anchors,
                                                        std::size_t max_group_size,
                                                        std::size_t n_contexts,
                                                        std::uint64_t seed = 7) {
    static const double kScores[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    ppm::Rng rng(seed);
    std::vector<ppm::PhraseRecord> records;
    std::size_t next_id = 0;
    for (std::size_t a = 0; a < n_anchors; ++a) {
        const std::size_t group_size = 1 + rng.next_below(max_group_size);
        const std::string anchor = "anchor " + std::to_string(a) + " phrase";
        for (std::size_t t = 0; t < group_size; ++t) {
            ppm::PhraseRecord r;
            r.id = "rec" + std::to_string(next_id++);
            r.anchor = anchor;
            r.target = "target " + std::to_string(a) + " " + std::to_string(t);
            r.context = "A" + std::to_string(10 + rng.next_below(n_contexts));
            r.score = kScores[rng.next_below(5)];
            records.push_back(r);
        }
    }
    return records;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        dir_ = std::filesystem::temp_directory_path() /
               ("ppmatch_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    const std::filesystem::path& dir() const { return dir_; }

    std::string write(const std::string& name, const std::string& content) const {
        auto p = path(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

private:
    std::filesystem::path dir_;
};

inline std::string dataset_csv(const std::vector<ppm::PhraseRecord>& records) {
    std::string out = "id,anchor,target,context,score\n";
    char buf[32];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%g", r.score);
        out += r.id + "," + r.anchor + "," + r.target + "," + r.context + "," + buf + "\n";
    }
    return out;
}

}  // namespace ppmtest
