#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ppmatch/csv.hpp"
#include "ppmatch/errors.hpp"

namespace ppm {

// One dataset row: an anchor/target phrase pair judged within a CPC context.
struct PhraseRecord {
    std::string id;
    std::string anchor;
    std::string target;
    std::string context;  // CPC class code, e.g. "A47"
    double score = 0.0;   // one of {0, 0.25, 0.5, 0.75, 1}
};

// Score comparisons go through the scaled-integer form (score*100) so the
// 5-bin domain is exact. Returns -1 for anything off the grid.
inline int score_bin(double score) {
    static const double kLevels[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (double level : kLevels) {
        if (score == level) return static_cast<int>(level * 100.0);
    }
    return -1;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// CPC context codes: one ASCII letter followed by one or more digits.
inline bool valid_context_code(const std::string& code) {
    if (code.size() < 2) return false;
    if (!std::isalpha(static_cast<unsigned char>(code[0]))) return false;
    for (std::size_t i = 1; i < code.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(code[i]))) return false;
    }
    return true;
}

// Optional human-readable titles for CPC codes. Unknown codes look up to
// an absent value, never an empty string.
class ContextTable {
public:
    ContextTable() = default;

    void add(const std::string& code, const std::string& title) {
        if (titles_.count(code)) throw ValidationError("duplicate context code: " + code);
        titles_[code] = title;
    }

    std::optional<std::string> title(const std::string& code) const {
        auto it = titles_.find(code);
        if (it == titles_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return titles_.size(); }

    const std::map<std::string, std::string>& entries() const { return titles_; }

private:
    std::map<std::string, std::string> titles_;
};

namespace detail {

inline std::size_t require_column(const std::vector<std::string>& header,
                                  const std::string& name, const std::string& path) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == name) return i;
    }
    throw ValidationError(path + ": header is missing column '" + name + "'");
}

}  // namespace detail

// Parses and validates a phrase-pair dataset. Columns id,anchor,target,
// context,score are matched by header name, order-insensitive. Every
// failure names the offending line.
inline std::vector<PhraseRecord> load_records(const std::string& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw ValidationError(path + ": empty dataset (no header row)");

    const auto& header = rows.front().fields;
    std::size_t ci = detail::require_column(header, "id", path);
    std::size_t ca = detail::require_column(header, "anchor", path);
    std::size_t ct = detail::require_column(header, "target", path);
    std::size_t cc = detail::require_column(header, "context", path);
    std::size_t cs = detail::require_column(header, "score", path);

    if (rows.size() == 1) throw ValidationError(path + ": empty dataset (header only)");

    std::vector<PhraseRecord> records;
    records.reserve(rows.size() - 1);
    std::unordered_set<std::string> seen_ids;
    seen_ids.reserve(rows.size());

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = path + ": line " + std::to_string(row.line);
        if (row.fields.size() != header.size()) {
            throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(row.fields.size()));
        }
        PhraseRecord rec;
        rec.id = trim(row.fields[ci]);
        rec.anchor = trim(row.fields[ca]);
        rec.target = trim(row.fields[ct]);
        rec.context = trim(row.fields[cc]);

        if (rec.id.empty()) throw ValidationError(where + ": empty id");
        if (!seen_ids.insert(rec.id).second) throw ValidationError(where + ": duplicate id '" + rec.id + "'");
        if (rec.anchor.empty()) throw ValidationError(where + ": empty anchor");
        if (rec.target.empty()) throw ValidationError(where + ": empty target");
        if (!valid_context_code(rec.context)) {
            throw ValidationError(where + ": context '" + rec.context + "' does not match letter+digits");
        }

        const std::string raw_score = trim(row.fields[cs]);
        try {
            std::size_t pos = 0;
            rec.score = std::stod(raw_score, &pos);
            if (pos != raw_score.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw ValidationError(where + ": score '" + raw_score + "' is not a number");
        }
        if (score_bin(rec.score) < 0) {
            throw ValidationError(where + ": score " + raw_score + " is not in {0, 0.25, 0.5, 0.75, 1}");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// Optional context-title file: columns code,title.
inline ContextTable load_context_table(const std::string& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) return ContextTable{};
    const auto& header = rows.front().fields;
    std::size_t cc = detail::require_column(header, "code", path);
    std::size_t ct = detail::require_column(header, "title", path);

    ContextTable table;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.size()) {
            throw ValidationError(path + ": line " + std::to_string(row.line) + ": malformed row");
        }
        table.add(trim(row.fields[cc]), trim(row.fields[ct]));
    }
    return table;
}

struct DatasetSummary {
    std::size_t records = 0;
    std::size_t anchors = 0;
    std::size_t contexts = 0;
    std::map<int, std::size_t> score_histogram;  // scaled bin -> count
};

inline DatasetSummary summarize(const std::vector<PhraseRecord>& records) {
    DatasetSummary s;
    std::unordered_set<std::string> anchors, contexts;
    for (const auto& r : records) {
        anchors.insert(r.anchor);
        contexts.insert(r.context);
        s.score_histogram[score_bin(r.score)]++;
    }
    s.records = records.size();
    s.anchors = anchors.size();
    s.contexts = contexts.size();
    return s;
}

}  // namespace ppm
