#pragma once

// Annotated examples, corpora and the canonical JSONL corpus format.
//
// Canonical line layout (keys in this order, doubles with 17 significant
// digits so values round-trip exactly):
//   {"uid":..,"premise":..,"hypothesis":..,"source":"snli|mnli|unli|chaos",
//    "counts":[e,n,c] | "p":x, "gold":"entailment|neutral|contradiction|-",
//    "dist":[e,n,c]}
// counts/p, gold and dist are omitted when absent.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dist.hpp"
#include "error.hpp"

namespace ambinli {

enum class Source : std::uint8_t { SnliOriginal, MnliOriginal, Unli, Chaos };

constexpr std::string_view to_string(Source s) noexcept {
    switch (s) {
    case Source::SnliOriginal: return "snli";
    case Source::MnliOriginal: return "mnli";
    case Source::Unli: return "unli";
    case Source::Chaos: return "chaos";
    }
    return "?";
}

inline std::optional<Source> parse_source(std::string_view s) {
    if (s == "snli") return Source::SnliOriginal;
    if (s == "mnli") return Source::MnliOriginal;
    if (s == "unli") return Source::Unli;
    if (s == "chaos") return Source::Chaos;
    return std::nullopt;
}

struct AnnotatedExample {
    std::string uid;
    std::string premise;
    std::string hypothesis;
    Source source = Source::SnliOriginal;
    std::optional<LabelCounts> annotator_counts;
    std::optional<double> regression_p;
    std::optional<GoldLabel> gold;
    std::optional<LabelDistribution> target;

    friend bool operator==(const AnnotatedExample&, const AnnotatedExample&) = default;
};

struct ProvenanceEntry {
    std::string path;
    std::size_t records = 0;

    friend bool operator==(const ProvenanceEntry&, const ProvenanceEntry&) = default;
};

/// Ordered examples with unique uids plus per-source provenance.
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::string name) : name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    const std::vector<AnnotatedExample>& examples() const noexcept { return examples_; }
    std::size_t size() const noexcept { return examples_.size(); }
    bool empty() const noexcept { return examples_.empty(); }
    const AnnotatedExample& operator[](std::size_t i) const { return examples_[i]; }
    auto begin() const noexcept { return examples_.begin(); }
    auto end() const noexcept { return examples_.end(); }

    bool contains(std::string_view uid) const { return uids_.contains(std::string(uid)); }

    /// Appends an example, rejecting empty or duplicate uids. Provenance
    /// record counts follow the examples contributed per source.
    void add(AnnotatedExample ex) {
        if (ex.uid.empty()) throw Error(ErrorKind::MalformedLine, "empty uid");
        if (!uids_.insert(ex.uid).second)
            throw Error(ErrorKind::MalformedLine, "duplicate uid '" + ex.uid + "'");
        ++provenance_[ex.source].records;
        examples_.push_back(std::move(ex));
    }

    void set_source_path(Source s, std::string path) { provenance_[s].path = std::move(path); }

    const std::map<Source, ProvenanceEntry>& provenance() const noexcept { return provenance_; }

    /// Copies name and source paths but no examples.
    Corpus empty_like() const {
        Corpus out(name_);
        for (const auto& [s, p] : provenance_) out.provenance_[s].path = p.path;
        return out;
    }

    friend bool operator==(const Corpus& a, const Corpus& b) {
        return a.name_ == b.name_ && a.examples_ == b.examples_ && a.provenance_ == b.provenance_;
    }

private:
    std::string name_;
    std::vector<AnnotatedExample> examples_;
    std::unordered_set<std::string> uids_;
    std::map<Source, ProvenanceEntry> provenance_;
};

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

inline void append_triple(std::string& out, double a, double b, double c) {
    out.push_back('[');
    append_double(out, a);
    out.push_back(',');
    append_double(out, b);
    out.push_back(',');
    append_double(out, c);
    out.push_back(']');
}

} // namespace detail

inline std::string to_canonical_line(const AnnotatedExample& ex) {
    using nlohmann::json;
    std::string line = "{\"uid\":" + json(ex.uid).dump() + ",\"premise\":" + json(ex.premise).dump() +
                       ",\"hypothesis\":" + json(ex.hypothesis).dump() + ",\"source\":\"" +
                       std::string(to_string(ex.source)) + "\"";
    if (ex.annotator_counts) {
        const auto& c = *ex.annotator_counts;
        line += ",\"counts\":[" + std::to_string(c.e) + "," + std::to_string(c.n) + "," +
                std::to_string(c.c) + "]";
    }
    if (ex.regression_p) {
        line += ",\"p\":";
        detail::append_double(line, *ex.regression_p);
    }
    if (ex.gold) line += ",\"gold\":\"" + std::string(to_string(*ex.gold)) + "\"";
    if (ex.target) {
        line += ",\"dist\":";
        detail::append_triple(line, ex.target->e(), ex.target->n(), ex.target->c());
    }
    line += "}";
    return line;
}

inline void write_canonical(std::ostream& os, const Corpus& corpus) {
    for (const auto& ex : corpus) os << to_canonical_line(ex) << '\n';
}

inline AnnotatedExample from_canonical_line(std::string_view line) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedLine, e.what());
    }
    try {
        AnnotatedExample ex;
        ex.uid = j.at("uid").get<std::string>();
        ex.premise = j.at("premise").get<std::string>();
        ex.hypothesis = j.at("hypothesis").get<std::string>();
        const auto src = parse_source(j.at("source").get<std::string>());
        if (!src) throw Error(ErrorKind::MalformedLine, "unknown source");
        ex.source = *src;
        if (j.contains("counts")) {
            const auto& c = j.at("counts");
            if (!c.is_array() || c.size() != 3) throw Error(ErrorKind::MalformedLine, "counts must have 3 entries");
            ex.annotator_counts = LabelCounts{c[0].get<std::uint64_t>(), c[1].get<std::uint64_t>(),
                                              c[2].get<std::uint64_t>()};
        }
        if (j.contains("p")) ex.regression_p = j.at("p").get<double>();
        if (j.contains("gold")) {
            const auto g = parse_gold(j.at("gold").get<std::string>());
            if (!g) throw Error(ErrorKind::MalformedLine, "unknown gold label");
            ex.gold = *g;
        }
        if (j.contains("dist")) {
            const auto& d = j.at("dist");
            if (!d.is_array() || d.size() != 3) throw Error(ErrorKind::MalformedLine, "dist must have 3 entries");
            ex.target = LabelDistribution(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
        }
        return ex;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedLine, e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::MalformedLine) throw;
        throw Error(ErrorKind::MalformedLine, e.what());
    }
}

/// Reads a canonical corpus; any bad line is fatal (canonical files are
/// produced by this library, so damage is not expected).
inline Corpus read_canonical(std::istream& is, std::string name = "corpus") {
    Corpus corpus(std::move(name));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            corpus.add(from_canonical_line(line));
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return corpus;
}

} // namespace ambinli
