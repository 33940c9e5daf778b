#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ppmatch/csv.hpp"
#include "ppmatch/dataset.hpp"
#include "ppmatch/ensemble.hpp"
#include "ppmatch/metrics.hpp"

namespace ppm {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("failed writing file: " + path);
}

inline std::string format_score(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Prediction file: columns id,score, sorted by id.
inline std::string serialize_predictions(const ScoreVector& preds) {
    std::string out = "id,score\n";
    for (const auto& [id, v] : preds.entries()) {
        out += csv::format_row({id, format_score(v)});
    }
    return out;
}

inline void save_predictions(const ScoreVector& preds, const std::string& path) {
    write_text_file(path, serialize_predictions(preds));
}

// Reads any CSV carrying id and score columns: prediction files and full
// datasets both qualify.
inline ScoreVector load_scores(const std::string& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw ValidationError(path + ": empty score file");
    std::size_t ci = detail::require_column(rows.front().fields, "id", path);
    std::size_t cs = detail::require_column(rows.front().fields, "score", path);
    ScoreVector out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != rows.front().fields.size()) {
            throw ValidationError(path + ": line " + std::to_string(rows[r].line) + ": malformed row");
        }
        const std::string raw = trim(f[cs]);
        try {
            std::size_t pos = 0;
            double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument("trailing junk");
            out.set(trim(f[ci]), v);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(path + ": line " + std::to_string(rows[r].line) + ": bad score '" +
                                  raw + "'");
        }
    }
    if (out.empty()) throw ValidationError(path + ": no score rows");
    return out;
}

inline std::string format_r(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", r);
    return buf;
}

// Flat JSON metrics report, r values at 4 decimal places.
inline std::string render_metrics_report(double r, std::size_t n) {
    return std::string("{\n  \"n\": ") + std::to_string(n) + ",\n  \"pearson\": " + format_r(r) +
           "\n}\n";
}

inline std::string render_cv_report(const CvReport& report, std::size_t n) {
    std::string out = "{\n  \"n\": " + std::to_string(n) + ",\n  \"folds\": " +
                      std::to_string(report.folds) + ",\n  \"fold_pearson\": [";
    for (std::size_t i = 0; i < report.fold_r.size(); ++i) {
        if (i) out += ", ";
        out += format_r(report.fold_r[i]);
    }
    out += "],\n  \"mean_pearson\": " + format_r(report.mean_r) +
           ",\n  \"pooled_pearson\": " + format_r(report.pooled_r) + "\n}\n";
    return out;
}

// Weights file: columns model,weight.
inline std::string serialize_weights(const std::vector<std::string>& model_names,
                                     const EnsembleWeights& weights) {
    if (model_names.size() != weights.w.size()) throw ConfigError("model name/weight count mismatch");
    std::string out = "model,weight\n";
    for (std::size_t i = 0; i < model_names.size(); ++i) {
        out += csv::format_row({model_names[i], format_score(weights.w[i])});
    }
    return out;
}

}  // namespace ppm
