#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppmatch/errors.hpp"

namespace ppm::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line number of the row's first line
};

// RFC-4180 style reader: quoted fields may contain commas, doubled quotes
// and embedded newlines. Accepts both \n and \r\n terminators.
inline std::vector<Row> parse(const std::string& text) {
    std::vector<Row> rows;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    auto end_field = [&] {
        fields.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(Row{fields, row_line});
        fields.clear();
        row_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (!row_started) {
            row_started = true;
            row_line = line;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
        } else if (c == '"') {
            if (!field.empty()) throw ValidationError("line " + std::to_string(line) + ": stray quote inside unquoted field");
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallowed; the \n that follows ends the row
        } else if (c == '\n') {
            end_row();
            ++line;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw ValidationError("line " + std::to_string(row_line) + ": unterminated quoted field");
    if (row_started || !field.empty()) end_row();
    return rows;
}

inline std::vector<Row> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

inline std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += quote_field(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace ppm::csv
