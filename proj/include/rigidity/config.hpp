#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rigidity/circle_map.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/toral_map.hpp"

namespace rigidity {

namespace detail {

[[nodiscard]] inline std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])) != 0) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])) != 0) --b;
    return s.substr(a, b - a);
}

[[nodiscard]] inline bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (std::islower(static_cast<unsigned char>(c)) != 0) ||
               (std::isdigit(static_cast<unsigned char>(c)) != 0) || c == '_';
    });
}

/// Every key an experiment file may contain. Flat by design: the value
/// grammar is either a scalar or a '|'-separated list of number blocks.
[[nodiscard]] inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"map", {"kind", "degree", "term", "conjugated", "conj_term", "matrix", "eps", "field_term"}},
        {"periodic", {"max_period", "budget", "tol_constant", "tol_conservative"}},
        {"density", {"bins", "iters", "residual_tol"}},
        {"conjugacy",
         {"level", "budget", "distortion_n", "grid", "iters", "solve_tol", "residual_grid",
          "holder_samples"}},
        {"entropy",
         {"seeds", "horizon", "transient", "profile_grid", "profile_horizons", "settle"}},
    };
    return schema;
}

} // namespace detail

/// Parsed experiment description: `[section]` headers over `key = value`
/// lines, `#` comments, repeated keys kept in file order (term lists).
/// Unknown sections or keys are rejected at parse time.
class ExperimentConfig {
  public:
    static ExperimentConfig parse(std::istream& in, const std::string& origin = "<config>") {
        ExperimentConfig cfg;
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const std::string where = origin + ":" + std::to_string(lineno);
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(where + ": unterminated section header '" + line + "'");
                section = detail::trim(line.substr(1, line.size() - 2));
                if (!detail::valid_name(section))
                    throw ConfigError(where + ": bad section name '" + section + "'");
                if (detail::config_schema().count(section) == 0)
                    throw ConfigError(where + ": unknown section [" + section + "]");
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (!detail::valid_name(key)) throw ConfigError(where + ": bad key name '" + key + "'");
            if (section.empty())
                throw ConfigError(where + ": key '" + key + "' appears before any [section]");
            const auto& allowed = detail::config_schema().at(section);
            if (allowed.count(key) == 0)
                throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
            if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
            cfg.entries_.push_back({section, key, value});
        }
        return cfg;
    }

    static ExperimentConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file '" + path + "'");
        return parse(in, path);
    }

    [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
        return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) {
            return e.section == section && e.key == key;
        });
    }

    /// All values of a repeated key, in file order.
    [[nodiscard]] std::vector<std::string> values(const std::string& section,
                                                  const std::string& key) const {
        std::vector<std::string> out;
        for (const Entry& e : entries_)
            if (e.section == section && e.key == key) out.push_back(e.value);
        return out;
    }

    [[nodiscard]] std::string get(const std::string& section, const std::string& key) const {
        const auto v = values(section, key);
        if (v.empty()) throw ConfigError("missing required key '" + section + "." + key + "'");
        if (v.size() > 1) throw ConfigError("key '" + section + "." + key + "' given more than once");
        return v.front();
    }

    [[nodiscard]] std::string get_or(const std::string& section, const std::string& key,
                                     const std::string& fallback) const {
        return has(section, key) ? get(section, key) : fallback;
    }

    [[nodiscard]] long get_int(const std::string& section, const std::string& key, long fallback,
                               long lo, long hi) const {
        if (!has(section, key)) return check_range(section, key, fallback, lo, hi);
        const std::string raw = get(section, key);
        try {
            std::size_t used = 0;
            const long v = std::stol(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return check_range(section, key, v, lo, hi);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("key '" + section + "." + key + "': '" + raw + "' is not an integer");
        }
    }

    [[nodiscard]] double get_real(const std::string& section, const std::string& key,
                                  double fallback, double lo, double hi) const {
        if (!has(section, key)) return check_range(section, key, fallback, lo, hi);
        const std::string raw = get(section, key);
        try {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return check_range(section, key, v, lo, hi);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("key '" + section + "." + key + "': '" + raw + "' is not a number");
        }
    }

    [[nodiscard]] bool get_bool(const std::string& section, const std::string& key,
                                bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string raw = get(section, key);
        if (raw == "true" || raw == "yes" || raw == "1") return true;
        if (raw == "false" || raw == "no" || raw == "0") return false;
        throw ConfigError("key '" + section + "." + key + "': '" + raw + "' is not a boolean");
    }

  private:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
    };

    template <class T>
    static T check_range(const std::string& section, const std::string& key, T v, T lo, T hi) {
        if (v < lo || v > hi)
            throw ConfigError("key '" + section + "." + key + "' = " + std::to_string(v) +
                              " outside allowed range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        return v;
    }

    std::vector<Entry> entries_;
};

namespace detail {

/// Splits "1 0.5 | 0 0" into whitespace-trimmed blocks at '|'.
[[nodiscard]] inline std::vector<std::string> split_blocks(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '|') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

[[nodiscard]] inline std::vector<double> parse_numbers(const std::string& block,
                                                       const std::string& what) {
    std::istringstream in(block);
    std::vector<double> out;
    double v = 0;
    while (in >> v) out.push_back(v);
    std::string rest;
    if (in >> rest || out.empty())
        throw ConfigError(what + ": expected whitespace-separated numbers, got '" + block + "'");
    return out;
}

[[nodiscard]] inline TrigTerm parse_circle_term(const std::string& raw, const std::string& what) {
    const auto blocks = split_blocks(raw);
    if (blocks.size() < 2 || blocks.size() > 3)
        throw ConfigError(what + ": expected 'k | a' or 'k | a | b', got '" + raw + "'");
    const auto kv = parse_numbers(blocks[0], what);
    const auto av = parse_numbers(blocks[1], what);
    if (kv.size() != 1 || av.size() != 1 || kv[0] != std::floor(kv[0]) || kv[0] < 1)
        throw ConfigError(what + ": frequency must be a single positive integer in '" + raw + "'");
    TrigTerm t{static_cast<int>(kv[0]), av[0], 0.0};
    if (blocks.size() == 3) {
        const auto bv = parse_numbers(blocks[2], what);
        if (bv.size() != 1) throw ConfigError(what + ": cosine block must be one number");
        t.b = bv[0];
    }
    return t;
}

[[nodiscard]] inline TrigFieldTerm parse_field_term(const std::string& raw, int d,
                                                    const std::string& what) {
    const auto blocks = split_blocks(raw);
    if (blocks.size() < 2 || blocks.size() > 3)
        throw ConfigError(what + ": expected 'k.. | a..' or 'k.. | a.. | b..', got '" + raw + "'");
    const auto kv = parse_numbers(blocks[0], what);
    const auto av = parse_numbers(blocks[1], what);
    if (static_cast<int>(kv.size()) != d || static_cast<int>(av.size()) != d)
        throw ConfigError(what + ": frequency and amplitude blocks must each have " +
                          std::to_string(d) + " entries");
    TrigFieldTerm t;
    t.k.resize(d);
    t.a = Vec::Zero(d);
    t.b = Vec::Zero(d);
    for (int c = 0; c < d; ++c) {
        if (kv[static_cast<std::size_t>(c)] != std::floor(kv[static_cast<std::size_t>(c)]))
            throw ConfigError(what + ": frequencies must be integers in '" + raw + "'");
        t.k[c] = static_cast<int>(kv[static_cast<std::size_t>(c)]);
        t.a[c] = av[static_cast<std::size_t>(c)];
    }
    if (blocks.size() == 3) {
        const auto bv = parse_numbers(blocks[2], what);
        if (static_cast<int>(bv.size()) != d)
            throw ConfigError(what + ": cosine block must have " + std::to_string(d) + " entries");
        for (int c = 0; c < d; ++c) t.b[c] = bv[static_cast<std::size_t>(c)];
    }
    return t;
}

} // namespace detail

/// Map kind declared in [map]; decides which pipelines apply.
enum class MapKind { circle, toral };

[[nodiscard]] inline MapKind map_kind(const ExperimentConfig& cfg) {
    const std::string kind = cfg.get("map", "kind");
    if (kind == "circle") return MapKind::circle;
    if (kind == "toral") return MapKind::toral;
    throw ConfigError("map.kind must be 'circle' or 'toral', got '" + kind + "'");
}

/// Builds the circle map described by [map] and passes it to `fn`, so the
/// two concrete map types share one templated pipeline body.
template <class Fn>
auto with_circle_map(const ExperimentConfig& cfg, Fn&& fn) {
    if (map_kind(cfg) != MapKind::circle) throw ConfigError("[map] does not describe a circle map");
    for (const char* key : {"matrix", "eps", "field_term"})
        if (cfg.has("map", key))
            throw ConfigError(std::string("map.") + key + " is only valid for toral maps");
    if (!cfg.has("map", "degree")) throw ConfigError("missing required key 'map.degree'");
    const int degree = static_cast<int>(cfg.get_int("map", "degree", 2, 2, 64));
    std::vector<TrigTerm> terms;
    for (const std::string& raw : cfg.values("map", "term"))
        terms.push_back(detail::parse_circle_term(raw, "map.term"));
    const bool conjugated = cfg.get_bool("map", "conjugated", false);
    if (!conjugated && cfg.has("map", "conj_term"))
        throw ConfigError("map.conj_term requires map.conjugated = true");
    if (!conjugated) return fn(TrigLift(degree, std::move(terms)));
    std::vector<TrigTerm> conj;
    for (const std::string& raw : cfg.values("map", "conj_term"))
        conj.push_back(detail::parse_circle_term(raw, "map.conj_term"));
    if (conj.empty()) throw ConfigError("map.conjugated = true needs at least one map.conj_term");
    return fn(ConjugatedLift(TrigLift(degree, std::move(terms)), TrigDiffeo(std::move(conj))));
}

/// Toral analog of with_circle_map. The matrix is given row-major; its
/// length fixes the dimension. For conjugated maps the field is the
/// displacement of h itself and map.eps is rejected.
template <class Fn>
auto with_toral_map(const ExperimentConfig& cfg, Fn&& fn) {
    if (map_kind(cfg) != MapKind::toral) throw ConfigError("[map] does not describe a toral map");
    for (const char* key : {"degree", "term", "conj_term"})
        if (cfg.has("map", key))
            throw ConfigError(std::string("map.") + key + " is only valid for circle maps");
    const auto raw = detail::parse_numbers(cfg.get("map", "matrix"), "map.matrix");
    int d = 0;
    while (static_cast<std::size_t>(d) * static_cast<std::size_t>(d) < raw.size()) ++d;
    if (static_cast<std::size_t>(d) * static_cast<std::size_t>(d) != raw.size() || d < 2 || d > 3)
        throw ConfigError("map.matrix must hold d*d integers, d in {2, 3}");
    MatI A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double v = raw[static_cast<std::size_t>(i * d + j)];
            if (v != std::floor(v)) throw ConfigError("map.matrix entries must be integers");
            A(i, j) = static_cast<int>(v);
        }
    std::vector<TrigFieldTerm> terms;
    for (const std::string& t : cfg.values("map", "field_term"))
        terms.push_back(detail::parse_field_term(t, d, "map.field_term"));
    const bool conjugated = cfg.get_bool("map", "conjugated", false);
    if (conjugated) {
        if (cfg.has("map", "eps"))
            throw ConfigError("map.eps is not used when map.conjugated = true; "
                              "scale the field_term amplitudes instead");
        if (terms.empty())
            throw ConfigError("map.conjugated = true needs at least one map.field_term");
        return fn(ConjugatedToralMap(IntAutomorphism(A), TrigField(d, std::move(terms))));
    }
    const double eps = cfg.get_real("map", "eps", 0.0, 0.0, 1.0);
    if (eps > 0.0 && terms.empty())
        throw ConfigError("map.eps > 0 needs at least one map.field_term");
    return fn(ToralMap(IntAutomorphism(A), eps, TrigField(d, std::move(terms))));
}

} // namespace rigidity
