#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ppmatch/errors.hpp"
#include "ppmatch/rng.hpp"

namespace ppm {

// Real values keyed by record id; the id alignment is what evaluate() and
// the ensemble blend on.
class ScoreVector {
public:
    ScoreVector() = default;

    void set(const std::string& id, double value) {
        if (!std::isfinite(value)) throw NumericError("non-finite score for id " + id);
        auto [it, inserted] = values_.emplace(id, value);
        if (!inserted) throw ValidationError("duplicate id in score vector: " + id);
    }

    double at(const std::string& id) const {
        auto it = values_.find(id);
        if (it == values_.end()) throw ValidationError("missing id in score vector: " + id);
        return it->second;
    }

    bool contains(const std::string& id) const { return values_.count(id) > 0; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    // Ordered by id; deterministic.
    const std::map<std::string, double>& entries() const { return values_; }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(values_.size());
        for (const auto& [id, v] : values_) out.push_back(id);
        return out;
    }

private:
    std::map<std::string, double> values_;
};

// Pearson r via two-pass compensated summation. The 1/n factors of the
// textbook formula cancel and are omitted. Zero variance in either input
// makes r undefined and is a hard error.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw ConfigError("pearson length mismatch: " + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()));
    }
    if (x.size() < 2) throw ConfigError("pearson needs at least 2 samples");

    KahanSum sx, sy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double mx = sx.value() / static_cast<double>(x.size());
    const double my = sy.value() / static_cast<double>(y.size());

    KahanSum sxy, sxx, syy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if (sxx.value() == 0.0 && syy.value() == 0.0) {
        throw NumericError("pearson undefined: both vectors are constant");
    }
    if (sxx.value() == 0.0 || syy.value() == 0.0) {
        throw NumericError("pearson undefined: an input vector is constant");
    }
    return sxy.value() / (std::sqrt(sxx.value()) * std::sqrt(syy.value()));
}

// Aligns predictions and golds by id, then delegates to pearson.
inline double evaluate(const ScoreVector& preds, const ScoreVector& golds) {
    std::vector<std::string> missing;
    for (const auto& [id, v] : golds.entries()) {
        if (!preds.contains(id)) missing.push_back(id);
    }
    for (const auto& [id, v] : preds.entries()) {
        if (!golds.contains(id)) missing.push_back(id);
    }
    if (!missing.empty()) {
        std::sort(missing.begin(), missing.end());
        std::string msg = "prediction/gold id sets differ; absent ids:";
        for (const auto& id : missing) msg += " " + id;
        throw ValidationError(msg);
    }
    std::vector<double> xs, ys;
    xs.reserve(golds.size());
    ys.reserve(golds.size());
    for (const auto& [id, gold] : golds.entries()) {
        xs.push_back(preds.at(id));
        ys.push_back(gold);
    }
    return pearson(xs, ys);
}

struct CvReport {
    std::vector<double> fold_r;
    double pooled_r = 0.0;  // out-of-fold concatenation; the headline score
    double mean_r = 0.0;
    int folds = 0;
};

inline CvReport cv_report(const std::vector<ScoreVector>& fold_preds,
                          const std::vector<ScoreVector>& fold_golds) {
    if (fold_preds.size() != fold_golds.size()) throw ConfigError("fold count mismatch");
    if (fold_preds.empty()) throw ConfigError("cv report needs at least one fold");

    std::set<std::string> seen;
    for (const auto& fold : fold_preds) {
        for (const auto& [id, v] : fold.entries()) {
            if (!seen.insert(id).second) throw ValidationError("folds overlap on id " + id);
        }
    }

    CvReport report;
    report.folds = static_cast<int>(fold_preds.size());
    ScoreVector pooled_preds, pooled_golds;
    KahanSum mean_acc;
    for (std::size_t f = 0; f < fold_preds.size(); ++f) {
        if (fold_preds[f].empty()) throw ValidationError("fold " + std::to_string(f) + " is empty");
        const double r = evaluate(fold_preds[f], fold_golds[f]);
        report.fold_r.push_back(r);
        mean_acc.add(r);
        for (const auto& [id, v] : fold_preds[f].entries()) pooled_preds.set(id, v);
        for (const auto& [id, v] : fold_golds[f].entries()) pooled_golds.set(id, v);
    }
    report.pooled_r = evaluate(pooled_preds, pooled_golds);
    report.mean_r = mean_acc.value() / static_cast<double>(report.folds);
    return report;
}

}  // namespace ppm
