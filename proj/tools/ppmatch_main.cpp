// ppmatch: end-to-end phrase-similarity pipeline for patent anchor/target
// records. Subcommands: validate, split, fold, train, predict, evaluate,
// blend. All randomness is seeded explicitly; reruns with identical inputs
// produce byte-identical outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ppmatch/ppmatch.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

struct TrainSettings {
    ppm::TrainConfig train;
    ppm::EncoderConfig encoder;
    std::array<double, 3> split_ratios{0.75, 0.05, 0.20};
    std::uint64_t split_seed = 42;
    int vocab_cap = 30000;
    int folds = 4;
};

ppm::ContextTable load_titles_opt(const std::string& path) {
    if (path.empty()) return ppm::ContextTable{};
    return ppm::load_context_table(path);
}

TrainSettings parse_train_config(const std::string& path) {
    TrainSettings s;
    s.encoder.embed_dim = 64;
    s.encoder.num_heads = 2;
    s.encoder.num_layers = 2;
    s.encoder.ffn_dim = 128;
    s.encoder.dropout = 0.0;

    if (path.empty()) return s;
    std::ifstream in(path);
    if (!in) throw ppm::ConfigError("cannot open config file: " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw ppm::ConfigError(path + ": invalid JSON: " + e.what());
    }

    try {
        if (cfg.contains("variant")) s.train.variant = ppm::parse_variant(cfg["variant"].get<std::string>());
        if (cfg.contains("max_len")) s.train.max_len = cfg["max_len"].get<int>();
        if (cfg.contains("lr")) s.train.optim.lr = cfg["lr"].get<double>();
        if (cfg.contains("eps")) s.train.optim.eps = cfg["eps"].get<double>();
        if (cfg.contains("clip_norm")) s.train.optim.clip_norm = cfg["clip_norm"].get<double>();
        if (cfg.contains("awp_lr")) s.train.awp.awp_lr = cfg["awp_lr"].get<double>();
        if (cfg.contains("awp_eps")) s.train.awp.awp_eps = cfg["awp_eps"].get<double>();
        if (cfg.contains("awp_enabled")) s.train.awp.enabled = cfg["awp_enabled"].get<bool>();
        if (cfg.contains("awp_start_epoch")) s.train.awp.start_epoch = cfg["awp_start_epoch"].get<int>();
        if (cfg.contains("batch_size")) s.train.batch_size = cfg["batch_size"].get<int>();
        if (cfg.contains("epochs")) s.train.epochs = cfg["epochs"].get<int>();
        if (cfg.contains("seed")) s.train.seed = cfg["seed"].get<std::uint64_t>();
        if (cfg.contains("folds")) s.folds = cfg["folds"].get<int>();
        if (cfg.contains("bce_norm")) {
            s.train.bce_norm = ppm::bce_norm_from_name(cfg["bce_norm"].get<std::string>());
        }
        if (cfg.contains("vocab_cap")) s.vocab_cap = cfg["vocab_cap"].get<int>();
        if (cfg.contains("split")) {
            const auto& sp = cfg["split"];
            if (sp.contains("train")) s.split_ratios[0] = sp["train"].get<double>();
            if (sp.contains("val")) s.split_ratios[1] = sp["val"].get<double>();
            if (sp.contains("test")) s.split_ratios[2] = sp["test"].get<double>();
            if (sp.contains("seed")) s.split_seed = sp["seed"].get<std::uint64_t>();
        }
        if (cfg.contains("encoder")) {
            const auto& enc = cfg["encoder"];
            if (enc.contains("embed_dim")) s.encoder.embed_dim = enc["embed_dim"].get<int>();
            if (enc.contains("num_heads")) s.encoder.num_heads = enc["num_heads"].get<int>();
            if (enc.contains("num_layers")) s.encoder.num_layers = enc["num_layers"].get<int>();
            if (enc.contains("ffn_dim")) s.encoder.ffn_dim = enc["ffn_dim"].get<int>();
            if (enc.contains("dropout")) s.encoder.dropout = enc["dropout"].get<double>();
        }
    } catch (const json::exception& e) {
        throw ppm::ConfigError(path + ": bad config value: " + e.what());
    }
    return s;
}

void ensure_parent_dir(const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string out_path(const std::string& explicit_out, const std::string& out_dir,
                     const std::string& sub, const std::string& name) {
    std::string path = explicit_out.empty() ? (fs::path(out_dir) / sub / name).string() : explicit_out;
    ensure_parent_dir(path);
    return path;
}

void print_census(const std::string& label, const std::vector<ppm::PhraseRecord>& records) {
    auto s = ppm::summarize(records);
    std::cout << label << ": " << s.records << " records, " << s.anchors << " anchors, " << s.contexts
              << " contexts, scores {";
    bool first = true;
    for (const auto& [bin, count] : s.score_histogram) {
        if (!first) std::cout << ", ";
        first = false;
        std::cout << static_cast<double>(bin) / 100.0 << ": " << count;
    }
    std::cout << "}\n";
}

std::vector<ppm::PhraseRecord> select_partition(const std::vector<ppm::PhraseRecord>& records,
                                                const ppm::SplitAssignment& split,
                                                ppm::Partition which) {
    std::vector<ppm::PhraseRecord> out;
    for (const auto& r : records) {
        auto it = split.partition.find(r.id);
        if (it == split.partition.end()) {
            throw ppm::ValidationError("split file does not cover record id " + r.id);
        }
        if (it->second == which) out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& data, const std::string& titles) {
    auto records = ppm::load_records(data);
    load_titles_opt(titles);
    auto s = ppm::summarize(records);
    std::cout << s.records << " records, " << s.anchors << " anchors, " << s.contexts << " contexts\n";
    std::cout << "score histogram:\n";
    for (const auto& [bin, count] : s.score_histogram) {
        std::cout << "  " << static_cast<double>(bin) / 100.0 << ": " << count << "\n";
    }
    return kExitOk;
}

int cmd_split(const std::string& data, double train_ratio, double val_ratio, double test_ratio,
              std::uint64_t seed, const std::string& out, const std::string& out_dir) {
    auto records = ppm::load_records(data);
    auto split = ppm::holdout_split(records, {train_ratio, val_ratio, test_ratio}, seed);
    for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";

    const std::string path = out_path(out, out_dir, "splits", "holdout.csv");
    ppm::write_text_file(path, ppm::serialize_split(split));

    auto counts = split.counts();
    const double n = static_cast<double>(records.size());
    for (int p = 0; p < 3; ++p) {
        auto part = select_partition(records, split, static_cast<ppm::Partition>(p));
        std::cout << ppm::partition_name(static_cast<ppm::Partition>(p)) << ": " << counts[p]
                  << " records (" << (static_cast<double>(counts[p]) / n) << ")\n";
        if (!part.empty()) print_census(std::string("  census ") + ppm::partition_name(static_cast<ppm::Partition>(p)), part);
    }
    std::cout << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_fold(const std::string& data, int k, std::uint64_t seed, const std::string& split_file,
             const std::string& partition, const std::string& out, const std::string& out_dir) {
    auto records = ppm::load_records(data);
    std::vector<ppm::PhraseRecord> pool = records;
    if (!split_file.empty()) {
        auto split = ppm::parse_split(ppm::csv::read_file(split_file), split_file);
        pool = select_partition(records, split, ppm::partition_from_name(partition));
        std::cout << "folding partition '" << partition << "' (" << pool.size() << " of "
                  << records.size() << " records)\n";
    }
    auto folds = ppm::stratified_kfold(pool, k, seed);

    const std::string path = out_path(out, out_dir, "splits", "folds.csv");
    ppm::write_text_file(path, ppm::serialize_folds(folds));

    std::map<int, std::vector<ppm::PhraseRecord>> by_fold;
    for (const auto& r : pool) by_fold[folds.fold.at(r.id)].push_back(r);
    for (const auto& [f, recs] : by_fold) print_census("fold " + std::to_string(f), recs);
    std::cout << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_train(const std::string& data, const std::string& titles, const std::string& config_path,
              const std::string& variant_flag, int epochs_flag, long long seed_flag,
              const std::string& split_file, const std::string& out_dir) {
    TrainSettings s = parse_train_config(config_path);
    if (!variant_flag.empty()) s.train.variant = ppm::parse_variant(variant_flag);
    if (epochs_flag >= 0) s.train.epochs = epochs_flag;
    if (seed_flag >= 0) s.train.seed = static_cast<std::uint64_t>(seed_flag);

    auto records = ppm::load_records(data);
    auto ctx = load_titles_opt(titles);

    ppm::SplitAssignment split;
    if (!split_file.empty()) {
        split = ppm::parse_split(ppm::csv::read_file(split_file), split_file);
    } else {
        split = ppm::holdout_split(records, s.split_ratios, s.split_seed);
        for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
    }
    auto train_recs = select_partition(records, split, ppm::Partition::train);
    auto val_recs = select_partition(records, split, ppm::Partition::validation);

    auto vocab = ppm::build_vocab(train_recs, s.vocab_cap, ctx);
    auto result = ppm::train(train_recs, val_recs, vocab, ctx, s.encoder, s.train);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

    for (const auto& e : result.history) {
        std::cout << "epoch " << e.epoch << " train_loss " << e.train_loss << " val_pearson "
                  << e.val_pearson << "\n";
    }

    const std::string name = ppm::variant_name(s.train.variant);
    const std::string ckpt_path = out_path("", out_dir, "checkpoints", name + ".ckpt");
    const std::string vocab_path = out_path("", out_dir, "checkpoints", name + ".vocab.txt");
    const std::string hist_path = out_path("", out_dir, "reports", "history.csv");
    ppm::save_checkpoint(ckpt_path, result.best_params, s.train.variant, vocab.fingerprint());
    ppm::save_vocab(vocab, vocab_path);
    ppm::write_text_file(hist_path, ppm::serialize_history(result.history));

    std::cout << "best epoch " << result.best_epoch << " val_pearson " << result.best_val_pearson << "\n";
    std::cout << "wrote " << ckpt_path << "\n";
    std::cout << "wrote " << vocab_path << "\n";
    std::cout << "wrote " << hist_path << "\n";
    if (result.diverged) {
        std::cerr << "training diverged; checkpoint holds the last good parameters\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& vocab_path, const std::string& data,
                const std::string& titles, const std::string& variant_flag, const std::string& out,
                const std::string& out_dir) {
    auto ckpt = ppm::load_checkpoint(checkpoint);
    auto vocab = ppm::load_vocab(vocab_path);
    if (vocab.fingerprint() != ckpt.vocab_hash) {
        throw ppm::ConfigError("vocabulary file does not match the checkpoint's vocab hash");
    }
    if (vocab.size() != ckpt.params.config.vocab_size) {
        throw ppm::ConfigError("vocabulary size does not match the checkpoint config");
    }
    ppm::Variant variant = ckpt.variant;
    if (!variant_flag.empty()) {
        variant = ppm::parse_variant(variant_flag);
        if (variant != ckpt.variant) {
            throw ppm::ConfigError(std::string("requested variant ") + ppm::variant_name(variant) +
                                   " but the checkpoint was trained with " +
                                   ppm::variant_name(ckpt.variant));
        }
    }

    auto records = ppm::load_records(data);
    auto ctx = load_titles_opt(titles);
    auto preds = ppm::predict_records(ckpt.params, records, variant, vocab, ctx,
                                      ckpt.params.config.max_len);

    std::string name = fs::path(checkpoint).stem().string() + ".preds.csv";
    const std::string path = out_path(out, out_dir, "preds", name);
    ppm::save_predictions(preds, path);
    std::cout << preds.size() << " predictions\n";
    std::cout << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& preds_path, const std::string& golds_path,
                 const std::string& folds_path, const std::string& out, const std::string& out_dir) {
    auto preds = ppm::load_scores(preds_path);
    auto golds = ppm::load_scores(golds_path);

    std::string report;
    if (folds_path.empty()) {
        const double r = ppm::evaluate(preds, golds);
        report = ppm::render_metrics_report(r, golds.size());
    } else {
        auto folds = ppm::parse_folds(ppm::csv::read_file(folds_path), folds_path);
        std::vector<ppm::ScoreVector> fold_preds(static_cast<std::size_t>(folds.k));
        std::vector<ppm::ScoreVector> fold_golds(static_cast<std::size_t>(folds.k));
        for (const auto& [id, f] : folds.fold) {
            fold_preds[static_cast<std::size_t>(f)].set(id, preds.at(id));
            fold_golds[static_cast<std::size_t>(f)].set(id, golds.at(id));
        }
        report = ppm::render_cv_report(ppm::cv_report(fold_preds, fold_golds), golds.size());
    }

    const std::string path = out_path(out, out_dir, "reports", "metrics.json");
    ppm::write_text_file(path, report);
    std::cout << report;
    std::cout << "wrote " << path << "\n";
    return kExitOk;
}

int cmd_blend(const std::vector<std::string>& pred_paths, const std::string& golds_path, double step,
              const std::string& out_dir) {
    if (pred_paths.size() < 2) throw ppm::ConfigError("blend needs at least 2 prediction files");
    std::vector<ppm::ScoreVector> preds;
    std::vector<std::string> names;
    for (const auto& p : pred_paths) {
        preds.push_back(ppm::load_scores(p));
        names.push_back(fs::path(p).stem().string());
    }
    auto golds = ppm::load_scores(golds_path);

    auto result = ppm::optimize_weights(preds, golds, step);
    auto blended = ppm::blend(preds, result.weights);

    const std::string weights_path = out_path("", out_dir, "reports", "weights.csv");
    const std::string blend_path = out_path("", out_dir, "preds", "blend.csv");
    ppm::write_text_file(weights_path, ppm::serialize_weights(names, result.weights));
    ppm::save_predictions(blended, blend_path);

    std::cout << "weights:";
    for (std::size_t i = 0; i < names.size(); ++i) std::cout << " " << names[i] << "=" << result.weights.w[i];
    std::cout << "\nvalidation pearson " << result.r << "\n";
    std::cout << "wrote " << weights_path << "\n";
    std::cout << "wrote " << blend_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patent phrase-similarity pipeline"};
    app.require_subcommand(1);

    std::string data, titles, out, out_dir = "out", config_path, split_file, partition = "train";
    std::string checkpoint, vocab_path, variant_flag, preds_path, golds_path, folds_path;
    std::vector<std::string> pred_paths;
    double train_ratio = 0.75, val_ratio = 0.05, test_ratio = 0.20, step = 0.05;
    std::uint64_t seed = 42;
    int k = 4;
    int epochs_flag = -1;
    long long seed_flag = -1;

    auto* validate = app.add_subcommand("validate", "parse and validate a dataset");
    validate->add_option("--data", data, "dataset CSV (id,anchor,target,context,score)")->required();
    validate->add_option("--titles", titles, "optional context-title CSV (code,title)");

    auto* split = app.add_subcommand("split", "anchor-grouped train/validation/test split");
    split->add_option("--data", data)->required();
    split->add_option("--train", train_ratio, "train ratio");
    split->add_option("--val", val_ratio, "validation ratio");
    split->add_option("--test", test_ratio, "test ratio");
    split->add_option("--seed", seed, "shuffle seed");
    split->add_option("--out", out, "output assignment file");
    split->add_option("--out-dir", out_dir, "output directory (default ./out)");

    auto* fold = app.add_subcommand("fold", "anchor-grouped stratified k-fold assignment");
    fold->add_option("--data", data)->required();
    fold->add_option("--k", k, "fold count");
    fold->add_option("--seed", seed, "shuffle seed");
    fold->add_option("--split", split_file, "holdout assignment file; folds one partition of it");
    fold->add_option("--partition", partition, "partition to fold when --split is given");
    fold->add_option("--out", out, "output assignment file");
    fold->add_option("--out-dir", out_dir);

    auto* train = app.add_subcommand("train", "train an encoder per config");
    train->add_option("--data", data)->required();
    train->add_option("--titles", titles);
    train->add_option("--config", config_path, "JSON training config");
    train->add_option("--variant", variant_flag, "v1, v2 or v3 (overrides config)");
    train->add_option("--epochs", epochs_flag, "overrides config");
    train->add_option("--seed", seed_flag, "overrides config");
    train->add_option("--split", split_file, "existing holdout assignment file");
    train->add_option("--out-dir", out_dir);

    auto* predict = app.add_subcommand("predict", "score a dataset with a checkpoint");
    predict->add_option("--checkpoint", checkpoint)->required();
    predict->add_option("--vocab", vocab_path)->required();
    predict->add_option("--data", data)->required();
    predict->add_option("--titles", titles);
    predict->add_option("--variant", variant_flag, "must match the checkpoint");
    predict->add_option("--out", out);
    predict->add_option("--out-dir", out_dir);

    auto* evaluate = app.add_subcommand("evaluate", "Pearson metrics for a prediction file");
    evaluate->add_option("--preds", preds_path)->required();
    evaluate->add_option("--golds", golds_path, "gold scores (prediction file or dataset CSV)")->required();
    evaluate->add_option("--folds", folds_path, "fold assignment for a CV report");
    evaluate->add_option("--out", out);
    evaluate->add_option("--out-dir", out_dir);

    auto* blend = app.add_subcommand("blend", "optimize and apply ensemble weights");
    blend->add_option("--preds", pred_paths, "prediction files (repeatable)")->required()->expected(-2);
    blend->add_option("--golds", golds_path)->required();
    blend->add_option("--step", step, "simplex grid spacing");
    blend->add_option("--out-dir", out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (validate->parsed()) return cmd_validate(data, titles);
        if (split->parsed()) return cmd_split(data, train_ratio, val_ratio, test_ratio, seed, out, out_dir);
        if (fold->parsed()) return cmd_fold(data, k, seed, split_file, partition, out, out_dir);
        if (train->parsed()) {
            return cmd_train(data, titles, config_path, variant_flag, epochs_flag, seed_flag,
                             split_file, out_dir);
        }
        if (predict->parsed()) {
            return cmd_predict(checkpoint, vocab_path, data, titles, variant_flag, out, out_dir);
        }
        if (evaluate->parsed()) return cmd_evaluate(preds_path, golds_path, folds_path, out, out_dir);
        if (blend->parsed()) return cmd_blend(pred_paths, golds_path, step, out_dir);
    } catch (const ppm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ppm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ppm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
