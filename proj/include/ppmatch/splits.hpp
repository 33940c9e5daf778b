#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ppmatch/dataset.hpp"
#include "ppmatch/rng.hpp"

namespace ppm {

enum class Partition { train = 0, validation = 1, test = 2 };

inline const char* partition_name(Partition p) {
    switch (p) {
        case Partition::train: return "train";
        case Partition::validation: return "validation";
        case Partition::test: return "test";
    }
    return "?";
}

inline Partition partition_from_name(const std::string& name) {
    if (name == "train") return Partition::train;
    if (name == "validation") return Partition::validation;
    if (name == "test") return Partition::test;
    throw ValidationError("unknown partition tag: " + name);
}

struct SplitAssignment {
    std::map<std::string, Partition> partition;  // record id -> tag
    std::vector<std::string> warnings;

    std::array<std::size_t, 3> counts() const {
        std::array<std::size_t, 3> c{0, 0, 0};
        for (const auto& [id, p] : partition) c[static_cast<int>(p)]++;
        return c;
    }
};

struct FoldAssignment {
    std::map<std::string, int> fold;  // record id -> fold index in [0, k)
    int k = 0;
};

namespace detail {

struct AnchorGroup {
    std::string anchor;
    std::vector<std::size_t> rows;  // indices into the record list
};

// Groups sorted by anchor string; the seed decides everything downstream.
inline std::vector<AnchorGroup> anchor_groups(const std::vector<PhraseRecord>& records) {
    std::map<std::string, std::vector<std::size_t>> by_anchor;
    for (std::size_t i = 0; i < records.size(); ++i) by_anchor[records[i].anchor].push_back(i);
    std::vector<AnchorGroup> groups;
    groups.reserve(by_anchor.size());
    for (auto& [anchor, rows] : by_anchor) groups.push_back(AnchorGroup{anchor, std::move(rows)});
    return groups;
}

// Interned multilabel census: one label per score bin plus one per context
// code. Each record contributes exactly two labels.
class LabelSpace {
public:
    explicit LabelSpace(const std::vector<PhraseRecord>& records) {
        std::set<std::string> keys;
        for (const auto& r : records) {
            keys.insert(score_key(r));
            keys.insert(context_key(r));
        }
        for (const auto& k : keys) index_.emplace(k, index_.size());
    }

    std::size_t size() const { return index_.size(); }

    std::vector<double> census(const std::vector<PhraseRecord>& records,
                               const std::vector<std::size_t>& rows) const {
        std::vector<double> counts(size(), 0.0);
        for (std::size_t i : rows) {
            counts[index_.at(score_key(records[i]))] += 1.0;
            counts[index_.at(context_key(records[i]))] += 1.0;
        }
        return counts;
    }

    static std::string score_key(const PhraseRecord& r) {
        return "s:" + std::to_string(score_bin(r.score));
    }
    static std::string context_key(const PhraseRecord& r) { return "c:" + r.context; }

private:
    std::map<std::string, std::size_t> index_;
};

}  // namespace detail

// Anchor-grouped train/validation/test split. Groups are shuffled by the
// seed and assigned greedily to the partition with the largest remaining
// record-count shortfall, then patched so every context present in >= 2
// anchor groups reaches the training partition.
inline SplitAssignment holdout_split(const std::vector<PhraseRecord>& records,
                                     std::array<double, 3> ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    for (double r : ratios) {
        if (r <= 0.0) throw ConfigError("split ratios must be positive");
    }
    if (records.empty()) throw ValidationError("cannot split an empty dataset");

    auto groups = detail::anchor_groups(records);
    SplitAssignment out;

    if (groups.size() == 1) {
        // Grouping forces a single partition; degenerate but legal.
        for (const auto& r : records) out.partition[r.id] = Partition::train;
        out.warnings.push_back("single anchor group: all records assigned to train, validation and test are empty");
        return out;
    }
    if (groups.size() < 3) {
        throw ValidationError("need at least 3 anchor groups to populate 3 partitions, got " +
                              std::to_string(groups.size()));
    }

    Rng rng(seed);
    rng.shuffle(groups);

    const double n = static_cast<double>(records.size());
    std::array<double, 3> target{ratios[0] * n, ratios[1] * n, ratios[2] * n};
    std::array<double, 3> filled{0.0, 0.0, 0.0};
    std::vector<int> group_part(groups.size(), 0);

    for (std::size_t g = 0; g < groups.size(); ++g) {
        int best = 0;
        double best_shortfall = target[0] - filled[0];
        for (int p = 1; p < 3; ++p) {
            double shortfall = target[p] - filled[p];
            if (shortfall > best_shortfall) {
                best = p;
                best_shortfall = shortfall;
            }
        }
        group_part[g] = best;
        filled[best] += static_cast<double>(groups[g].rows.size());
    }

    // Context coverage: any context spanning >= 2 anchor groups must be
    // represented in train. Move the lexicographically smallest eligible
    // group per uncovered context.
    std::map<std::string, std::set<std::size_t>> context_groups;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t i : groups[g].rows) context_groups[records[i].context].insert(g);
    }
    for (const auto& [context, gset] : context_groups) {
        if (gset.size() < 2) continue;
        bool in_train = false;
        for (std::size_t g : gset) {
            if (group_part[g] == 0) {
                in_train = true;
                break;
            }
        }
        if (in_train) continue;
        std::size_t pick = *gset.begin();
        for (std::size_t g : gset) {
            if (groups[g].anchor < groups[pick].anchor) pick = g;
        }
        group_part[pick] = 0;
        out.warnings.push_back("moved anchor group '" + groups[pick].anchor +
                               "' to train to cover context " + context);
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t i : groups[g].rows) {
            out.partition[records[i].id] = static_cast<Partition>(group_part[g]);
        }
    }
    auto counts = out.counts();
    for (int p = 0; p < 3; ++p) {
        if (counts[p] == 0) {
            out.warnings.push_back(std::string("partition '") + partition_name(static_cast<Partition>(p)) +
                                   "' is empty");
        }
    }
    return out;
}

// Anchor-grouped stratified k-fold. Groups are seeded-shuffled, ordered by
// descending size, and each is assigned to the fold whose label histogram
// (score bins + context codes) most undershoots the per-fold target, with
// a +10% fold-size cap as backstop.
inline FoldAssignment stratified_kfold(const std::vector<PhraseRecord>& records, int k,
                                       std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be >= 2");
    auto groups = detail::anchor_groups(records);
    if (groups.size() < static_cast<std::size_t>(k)) {
        throw ValidationError("k=" + std::to_string(k) + " exceeds anchor-group count " +
                              std::to_string(groups.size()));
    }

    Rng rng(seed);
    rng.shuffle(groups);
    std::stable_sort(groups.begin(), groups.end(),
                     [](const auto& a, const auto& b) { return a.rows.size() > b.rows.size(); });

    detail::LabelSpace labels(records);
    std::vector<std::size_t> all_rows(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) all_rows[i] = i;
    std::vector<double> global = labels.census(records, all_rows);
    std::vector<double> per_fold_target(global.size());
    for (std::size_t l = 0; l < global.size(); ++l) per_fold_target[l] = global[l] / k;

    const double size_target = static_cast<double>(records.size()) / k;
    std::vector<std::vector<double>> fold_counts(k, std::vector<double>(labels.size(), 0.0));
    std::vector<std::size_t> fold_sizes(k, 0);

    FoldAssignment out;
    out.k = k;

    for (const auto& group : groups) {
        std::vector<double> gcounts = labels.census(records, group.rows);

        auto affinity = [&](int f) {
            double a = 0.0;
            for (std::size_t l = 0; l < gcounts.size(); ++l) {
                if (gcounts[l] > 0.0) a += gcounts[l] * (per_fold_target[l] - fold_counts[f][l]);
            }
            return a;
        };
        auto pick_from = [&](double cap) -> int {
            int best = -1;
            double best_aff = 0.0;
            for (int f = 0; f < k; ++f) {
                if (static_cast<double>(fold_sizes[f] + group.rows.size()) > cap) continue;
                double a = affinity(f);
                if (best < 0 || a > best_aff ||
                    (a == best_aff && fold_sizes[f] < fold_sizes[best])) {
                    best = f;
                    best_aff = a;
                }
            }
            return best;
        };

        int chosen = pick_from(size_target * 1.05);
        if (chosen < 0) chosen = pick_from(size_target * 1.10);
        if (chosen < 0) {
            chosen = 0;
            for (int f = 1; f < k; ++f) {
                if (fold_sizes[f] < fold_sizes[chosen]) chosen = f;
            }
        }

        fold_sizes[chosen] += group.rows.size();
        for (std::size_t l = 0; l < gcounts.size(); ++l) fold_counts[chosen][l] += gcounts[l];
        for (std::size_t i : group.rows) out.fold[records[i].id] = chosen;
    }
    return out;
}

inline std::string serialize_split(const SplitAssignment& split) {
    std::string out = "id,partition\n";
    for (const auto& [id, p] : split.partition) {
        out += csv::format_row({id, partition_name(p)});
    }
    return out;
}

inline std::string serialize_folds(const FoldAssignment& folds) {
    std::string out = "id,fold\n";
    for (const auto& [id, f] : folds.fold) {
        out += csv::format_row({id, std::to_string(f)});
    }
    return out;
}

inline SplitAssignment parse_split(const std::vector<csv::Row>& rows, const std::string& path) {
    if (rows.empty()) throw ValidationError(path + ": empty split file");
    std::size_t ci = detail::require_column(rows.front().fields, "id", path);
    std::size_t cp = detail::require_column(rows.front().fields, "partition", path);
    SplitAssignment out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != rows.front().fields.size()) {
            throw ValidationError(path + ": line " + std::to_string(rows[r].line) + ": malformed row");
        }
        out.partition[trim(f[ci])] = partition_from_name(trim(f[cp]));
    }
    return out;
}

inline FoldAssignment parse_folds(const std::vector<csv::Row>& rows, const std::string& path) {
    if (rows.empty()) throw ValidationError(path + ": empty fold file");
    std::size_t ci = detail::require_column(rows.front().fields, "id", path);
    std::size_t cf = detail::require_column(rows.front().fields, "fold", path);
    FoldAssignment out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        int fold = std::stoi(trim(f[cf]));
        out.fold[trim(f[ci])] = fold;
        out.k = std::max(out.k, fold + 1);
    }
    return out;
}

}  // namespace ppm
