#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ppmatch/encoder.hpp"

namespace ppm {

struct Checkpoint {
    EncoderParams params;
    Variant variant = Variant::v3;
    std::uint64_t vocab_hash = 0;
};

namespace detail {

// Hexfloat round-trips doubles exactly and is byte-stable.
inline std::string hex_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& path) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ValidationError(path + ": bad numeric literal '" + s + "'");
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const EncoderParams& params, Variant variant,
                            std::uint64_t vocab_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    const EncoderConfig& c = params.config;
    out << "ppmatch.checkpoint.v1\n";
    out << "variant " << variant_name(variant) << "\n";
    char hash_buf[24];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx", static_cast<unsigned long long>(vocab_hash));
    out << "vocab_hash " << hash_buf << "\n";
    out << "config " << c.vocab_size << " " << c.embed_dim << " " << c.num_heads << " "
        << c.num_layers << " " << c.ffn_dim << " " << c.max_len << " "
        << detail::hex_double(c.dropout) << " " << c.seed << "\n";
    params.visit([&](const std::string& name, const Mat& m) {
        out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                if (col) out << " ";
                out << detail::hex_double(m(r, col));
            }
            out << "\n";
        }
    });
    out << "end\n";
    if (!out) throw ConfigError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);

    std::string line;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) throw ValidationError(path + ": truncated checkpoint");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != "ppmatch.checkpoint.v1") {
        throw ValidationError(path + ": not a ppmatch.checkpoint.v1 file");
    }

    Checkpoint ckpt;
    {
        std::istringstream hdr(next_line());
        std::string key, value;
        hdr >> key >> value;
        if (key != "variant") throw ValidationError(path + ": expected variant line");
        ckpt.variant = parse_variant(value);
    }
    {
        std::istringstream hdr(next_line());
        std::string key, value;
        hdr >> key >> value;
        if (key != "vocab_hash") throw ValidationError(path + ": expected vocab_hash line");
        ckpt.vocab_hash = std::stoull(value, nullptr, 16);
    }
    EncoderConfig cfg;
    {
        std::istringstream hdr(next_line());
        std::string key, dropout_hex;
        hdr >> key >> cfg.vocab_size >> cfg.embed_dim >> cfg.num_heads >> cfg.num_layers >>
            cfg.ffn_dim >> cfg.max_len >> dropout_hex >> cfg.seed;
        if (key != "config" || !hdr) throw ValidationError(path + ": malformed config line");
        cfg.dropout = detail::parse_double(dropout_hex, path);
    }
    cfg.validate();
    ckpt.params = init_params(cfg);  // allocates the right shapes

    std::size_t tensors_read = 0;
    while (true) {
        std::string header = next_line();
        if (header == "end") break;
        std::istringstream hdr(header);
        std::string key, name;
        Eigen::Index rows = 0, cols = 0;
        hdr >> key >> name >> rows >> cols;
        if (key != "tensor" || !hdr) throw ValidationError(path + ": malformed tensor header: " + header);

        Mat* target = nullptr;
        ckpt.params.visit([&](const std::string& n, Mat& m) {
            if (n == name) target = &m;
        });
        if (target == nullptr) throw ValidationError(path + ": unknown tensor " + name);
        if (target->rows() != rows || target->cols() != cols) {
            throw ValidationError(path + ": tensor " + name + " has shape " + std::to_string(rows) +
                                  "x" + std::to_string(cols) + ", expected " +
                                  std::to_string(target->rows()) + "x" + std::to_string(target->cols()));
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            std::istringstream row(next_line());
            std::string cell;
            for (Eigen::Index col = 0; col < cols; ++col) {
                if (!(row >> cell)) throw ValidationError(path + ": tensor " + name + " row " +
                                                          std::to_string(r) + " is short");
                (*target)(r, col) = detail::parse_double(cell, path);
            }
        }
        ++tensors_read;
    }
    if (tensors_read != 2 + 12 * static_cast<std::size_t>(cfg.num_layers) + 2) {
        throw ValidationError(path + ": checkpoint is missing tensors");
    }
    return ckpt;
}

}  // namespace ppm
