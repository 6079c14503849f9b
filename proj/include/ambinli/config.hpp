#pragma once

// Key-value run configuration.
//
//   # comment
//   section.key = value
//
// Later assignments override earlier ones; `--set key=value` overrides use
// the same syntax. dump() is sorted by key, so equal configs dump to equal
// bytes regardless of assignment order.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace ambinli {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace detail

class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& is) {
        KeyValueConfig cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto body = detail::trim(std::string_view(line).substr(0, line.find('#')));
            if (body.empty()) continue;
            try {
                cfg.assign(body);
            } catch (const Error& e) {
                throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return cfg;
    }

    static KeyValueConfig parse(std::string_view text) {
        std::istringstream is{std::string(text)};
        return parse(is);
    }

    /// Applies one "key = value" assignment.
    void assign(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::InvalidConfig, "expected key = value, got '" + std::string(assignment) + "'");
        const auto key = detail::trim(assignment.substr(0, eq));
        if (key.empty()) throw Error(ErrorKind::InvalidConfig, "empty key");
        values_[std::string(key)] = std::string(detail::trim(assignment.substr(eq + 1)));
    }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    bool has(const std::string& key) const { return values_.contains(key); }

    std::optional<std::string> find(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) return std::nullopt;
        return it->second;
    }

    std::string require(const std::string& key) const {
        if (auto v = find(key)) return *v;
        throw Error(ErrorKind::InvalidConfig, "missing required key '" + key + "'");
    }

    std::string get(const std::string& key, std::string fallback) const { return find(key).value_or(std::move(fallback)); }

    double get_double(const std::string& key, double fallback) const {
        const auto v = find(key);
        if (!v) return fallback;
        return to_number<double>(key, *v);
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
        const auto v = find(key);
        if (!v) return fallback;
        return to_number<std::uint64_t>(key, *v);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto v = find(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw Error(ErrorKind::InvalidConfig, "key '" + key + "' expects a boolean, got '" + *v + "'");
    }

    /// Comma-separated list; empty entries are dropped.
    std::vector<std::string> get_list(const std::string& key, std::vector<std::string> fallback = {}) const {
        const auto v = find(key);
        if (!v) return fallback;
        std::vector<std::string> out;
        std::string_view rest = *v;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = detail::trim(rest.substr(0, comma));
            if (!item.empty()) out.emplace_back(item);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
        if (!find(key)) return fallback;
        std::vector<double> out;
        for (const auto& item : get_list(key)) out.push_back(to_number<double>(key, item));
        return out;
    }

    /// Rejects keys outside `known` (catches typos before a long run).
    void check_known(const std::set<std::string>& known, const std::vector<std::string>& known_prefixes = {}) const {
        for (const auto& [k, v] : values_) {
            if (known.contains(k)) continue;
            bool prefixed = false;
            for (const auto& p : known_prefixes) prefixed = prefixed || k.starts_with(p);
            if (!prefixed) throw Error(ErrorKind::InvalidConfig, "unknown config key '" + k + "'");
        }
    }

    std::string dump() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    template <typename T>
    static T to_number(const std::string& key, const std::string& text) {
        T value{};
        const auto* end = text.data() + text.size();
        const auto res = std::from_chars(text.data(), end, value);
        if (res.ec != std::errc{} || res.ptr != end)
            throw Error(ErrorKind::InvalidConfig, "key '" + key + "' expects a number, got '" + text + "'");
        return value;
    }

    std::map<std::string, std::string> values_;
};

} // namespace ambinli
