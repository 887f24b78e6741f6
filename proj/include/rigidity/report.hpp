#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rigidity/errors.hpp"

namespace rigidity {

/// Shortest round-trippable decimal rendering; used for every real number
/// we emit so that reruns are byte-comparable.
[[nodiscard]] inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[nodiscard]] inline std::string fmt_int(long v) { return std::to_string(v); }

/// Ordered KEY=VALUE block. Keys are declared up front so a pipeline that
/// never ran still shows up, as KEY=SKIPPED.
class Verdict {
  public:
    void declare(const std::string& key) {
        if (vals_.count(key) != 0) throw std::invalid_argument("verdict key redeclared: " + key);
        order_.push_back(key);
        vals_[key] = "SKIPPED";
    }

    void set(const std::string& key, const std::string& value) {
        const auto it = vals_.find(key);
        if (it == vals_.end()) throw std::invalid_argument("verdict key not declared: " + key);
        it->second = value;
    }

    void set_real(const std::string& key, double v) { set(key, fmt_real(v)); }
    void set_int(const std::string& key, long v) { set(key, fmt_int(v)); }
    void set_flag(const std::string& key, bool v) { set(key, v ? "yes" : "no"); }

    [[nodiscard]] const std::string& value(const std::string& key) const {
        const auto it = vals_.find(key);
        if (it == vals_.end()) throw std::invalid_argument("verdict key not declared: " + key);
        return it->second;
    }

    [[nodiscard]] std::string render() const {
        std::string out;
        for (const std::string& key : order_) {
            out += key;
            out += '=';
            out += vals_.at(key);
            out += '\n';
        }
        return out;
    }

  private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> vals_;
};

/// Comma-separated table with a fixed header; every row must match its
/// width. Plain '\n' line endings keep the bytes platform-stable.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), width_(header.size()) {
        if (!out_) throw ConfigError("cannot write output file '" + path.string() + "'");
        write_row(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_)
            throw std::invalid_argument("csv row width " + std::to_string(cells.size()) +
                                        " != header width " + std::to_string(width_));
        write_row(cells);
    }

  private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i != 0) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t width_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
    out << content;
}

} // namespace rigidity
