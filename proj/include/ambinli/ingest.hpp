#pragma once

// Parsers for the three source formats and holdout deduplication.
//
//   multi-annotator NLI JSONL (SNLI/MNLI style: annotator label list + gold)
//   100-annotation JSONL (ChaosNLI style: label counter + majority label)
//   regression CSV (UNLI style: one real-valued score in [0,1] per pair)
//
// Field names are configurable; nested JSON fields use dotted paths such as
// "example.premise". Bad lines are collected, not dropped: for every parse,
// corpus.size() + errors.size() == lines.

#include <cmath>
#include <cstdlib>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "corpus.hpp"
#include "dist.hpp"
#include "error.hpp"

namespace ambinli {

struct MultilabelFields {
    std::string uid = "pairID";
    std::string premise = "sentence1";
    std::string hypothesis = "sentence2";
    std::string annotator_labels = "annotator_labels";
    std::string gold = "gold_label";
};

struct ChaosFields {
    std::string uid = "uid";
    std::string counter = "label_counter";
    std::string majority = "majority_label";
    std::string premise = "example.premise";
    std::string hypothesis = "example.hypothesis";
    std::uint64_t expected_total = 100;
};

struct UnliColumns {
    std::string id = "id";
    std::string premise = "pre";
    std::string hypothesis = "hyp";
    std::string score = "unli";
};

struct LineError {
    std::size_t line = 0;
    ErrorKind kind = ErrorKind::MalformedLine;
    std::string cause;
};

struct ParseResult {
    Corpus corpus;
    std::vector<LineError> errors;
    std::size_t lines = 0;

    double error_rate() const noexcept {
        return lines == 0 ? 0.0 : static_cast<double>(errors.size()) / static_cast<double>(lines);
    }
};

inline constexpr double kMaxMalformedRate = 0.001;

/// Aborts a parse whose failure rate exceeds the budget. Below the budget
/// the errors stay in the result for reporting.
inline void enforce_error_budget(const ParseResult& r, double max_rate = kMaxMalformedRate) {
    if (r.errors.empty() || r.error_rate() <= max_rate) return;
    const auto& first = r.errors.front();
    throw Error(ErrorKind::MalformedLine,
                std::to_string(r.errors.size()) + " of " + std::to_string(r.lines) +
                    " lines failed (first: line " + std::to_string(first.line) + ", " +
                    std::string(to_string(first.kind)) + ": " + first.cause + ")");
}

namespace detail {

inline bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

inline const nlohmann::json& json_path(const nlohmann::json& root, std::string_view path) {
    const nlohmann::json* node = &root;
    while (true) {
        const auto dot = path.find('.');
        const std::string key(path.substr(0, dot));
        if (!node->is_object() || !node->contains(key))
            throw Error(ErrorKind::MalformedLine, "missing field '" + key + "'");
        node = &node->at(key);
        if (dot == std::string_view::npos) return *node;
        path.remove_prefix(dot + 1);
    }
}

inline std::string json_string(const nlohmann::json& root, std::string_view path) {
    const auto& v = json_path(root, path);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw Error(ErrorKind::MalformedLine, "field '" + std::string(path) + "' is not a string");
}

template <typename ParseLine>
ParseResult parse_lines(std::istream& is, std::string name, ParseLine&& parse_line) {
    ParseResult result{Corpus(std::move(name)), {}, 0};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        ++result.lines;
        try {
            result.corpus.add(parse_line(line));
        } catch (const Error& e) {
            result.errors.push_back({lineno, e.kind(), e.what()});
        } catch (const nlohmann::json::exception& e) {
            result.errors.push_back({lineno, ErrorKind::MalformedLine, e.what()});
        }
    }
    if (result.lines == 0) throw Error(ErrorKind::EmptyInput, "no records in input");
    return result;
}

inline nlohmann::json parse_json_line(const std::string& line) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedLine, e.what());
    }
}

} // namespace detail

inline ParseResult parse_multilabel_jsonl(std::istream& is, Source source,
                                          const MultilabelFields& fields = {}) {
    return detail::parse_lines(is, std::string(to_string(source)), [&](const std::string& line) {
        const auto j = detail::parse_json_line(line);
        AnnotatedExample ex;
        ex.source = source;
        ex.uid = detail::json_string(j, fields.uid);
        ex.premise = detail::json_string(j, fields.premise);
        ex.hypothesis = detail::json_string(j, fields.hypothesis);
        const auto& labels = detail::json_path(j, fields.annotator_labels);
        if (!labels.is_array() || labels.empty())
            throw Error(ErrorKind::MalformedLine, "annotator labels must be a non-empty list");
        LabelCounts counts;
        for (const auto& l : labels) {
            const auto g = l.is_string() ? parse_gold(l.get<std::string>()) : std::nullopt;
            const auto label = g ? to_label(*g) : std::nullopt;
            if (!label) throw Error(ErrorKind::MalformedLine, "bad annotator label " + l.dump());
            counts.add(*label);
        }
        ex.annotator_counts = counts;
        const auto gold = parse_gold(detail::json_string(j, fields.gold));
        if (!gold) throw Error(ErrorKind::MalformedLine, "bad gold label");
        ex.gold = *gold;
        return ex;
    });
}

inline ParseResult parse_chaos_jsonl(std::istream& is, const ChaosFields& fields = {}) {
    return detail::parse_lines(is, "chaos", [&](const std::string& line) {
        const auto j = detail::parse_json_line(line);
        AnnotatedExample ex;
        ex.source = Source::Chaos;
        ex.uid = detail::json_string(j, fields.uid);
        ex.premise = detail::json_string(j, fields.premise);
        ex.hypothesis = detail::json_string(j, fields.hypothesis);
        const auto& counter = detail::json_path(j, fields.counter);
        if (!counter.is_object()) throw Error(ErrorKind::MalformedLine, "label counter must be an object");
        LabelCounts counts;
        for (const auto& [key, value] : counter.items()) {
            const auto g = parse_gold(key);
            const auto label = g ? to_label(*g) : std::nullopt;
            if (!label || !value.is_number_integer() || value.get<long long>() < 0)
                throw Error(ErrorKind::MalformedLine, "bad counter entry '" + key + "'");
            const auto n = value.get<std::uint64_t>();
            switch (*label) {
            case Label::Entailment: counts.e += n; break;
            case Label::Neutral: counts.n += n; break;
            case Label::Contradiction: counts.c += n; break;
            }
        }
        if (counts.total() != fields.expected_total)
            throw Error(ErrorKind::CountMismatch, "counts sum to " + std::to_string(counts.total()) +
                                                      ", expected " + std::to_string(fields.expected_total));
        const auto stated = parse_gold(detail::json_string(j, fields.majority));
        if (!stated) throw Error(ErrorKind::MalformedLine, "bad majority label");
        const auto computed = majority_label(counts);
        if (computed != GoldLabel::NoMajority && *stated != computed)
            throw Error(ErrorKind::MalformedLine, "majority label '" + std::string(to_string(*stated)) +
                                                      "' disagrees with counts");
        if (computed == GoldLabel::NoMajority) {
            // a tie may be broken either way by the source, but only among the tied labels
            const auto top = std::max({counts.e, counts.n, counts.c});
            const auto lbl = to_label(*stated);
            if (lbl && counts[*lbl] != top)
                throw Error(ErrorKind::MalformedLine, "majority label is not among the tied top labels");
        }
        ex.annotator_counts = counts;
        ex.gold = computed;
        return ex;
    });
}

namespace detail {

/// RFC 4180 record splitter. Quoted fields may contain separators, doubled
/// quotes and newlines; `line` receives the physical line the record began on.
inline bool read_csv_record(std::istream& is, std::vector<std::string>& fields, std::size_t& physical_line,
                            std::size_t& record_line) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    record_line = physical_line + 1;
    int ch;
    while ((ch = is.get()) != EOF) {
        any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field.push_back('"');
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++physical_line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++physical_line;
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

} // namespace detail

inline ParseResult parse_unli_csv(std::istream& is, const UnliColumns& columns = {}) {
    ParseResult result{Corpus("unli"), {}, 0};
    std::vector<std::string> row;
    std::size_t physical = 0;
    std::size_t record_line = 0;
    if (!detail::read_csv_record(is, row, physical, record_line))
        throw Error(ErrorKind::EmptyInput, "missing header row");

    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < row.size(); ++i)
            if (row[i] == name) return i;
        throw Error(ErrorKind::MissingColumn, "header has no column '" + name + "'");
    };
    const std::size_t id_col = column(columns.id);
    const std::size_t pre_col = column(columns.premise);
    const std::size_t hyp_col = column(columns.hypothesis);
    const std::size_t score_col = column(columns.score);
    const std::size_t width = row.size();

    while (detail::read_csv_record(is, row, physical, record_line)) {
        if (row.size() == 1 && detail::is_blank(row[0])) continue;
        ++result.lines;
        try {
            if (row.size() != width)
                throw Error(ErrorKind::MalformedLine, "expected " + std::to_string(width) + " fields, got " +
                                                          std::to_string(row.size()));
            AnnotatedExample ex;
            ex.source = Source::Unli;
            ex.uid = row[id_col];
            ex.premise = row[pre_col];
            ex.hypothesis = row[hyp_col];
            const std::string& raw = row[score_col];
            char* end = nullptr;
            const double p = std::strtod(raw.c_str(), &end);
            if (raw.empty() || end != raw.c_str() + raw.size() || !std::isfinite(p))
                throw Error(ErrorKind::MalformedLine, "score '" + raw + "' is not a number");
            if (p < 0.0 || p > 1.0)
                throw Error(ErrorKind::OutOfRangeScore, "score " + raw + " outside [0,1]");
            ex.regression_p = p;
            result.corpus.add(std::move(ex));
        } catch (const Error& e) {
            result.errors.push_back({record_line, e.kind(), e.what()});
        }
    }
    if (result.lines == 0) throw Error(ErrorKind::EmptyInput, "no data rows");
    return result;
}

enum class DedupKey { Uid, PremiseHypothesisText };

/// NFC-normalized text with leading and trailing whitespace removed.
inline std::string normalized_text(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\v\f");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\v\f");
    s = s.substr(first, last - first + 1);
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(ErrorKind::Io, "ICU NFC normalizer unavailable");
    const auto in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    const icu::UnicodeString out = nfc->normalize(in, status);
    if (U_FAILURE(status)) throw Error(ErrorKind::Io, "NFC normalization failed");
    std::string result;
    out.toUTF8String(result);
    return result;
}

inline std::string dedup_key(const AnnotatedExample& ex, DedupKey key) {
    if (key == DedupKey::Uid) return ex.uid;
    return normalized_text(ex.premise) + '\x1f' + normalized_text(ex.hypothesis);
}

struct FilterResult {
    Corpus corpus;
    std::size_t removed = 0;
};

/// Drops every example whose key appears in the holdout; survivors keep their order.
inline FilterResult dedup_against(const Corpus& corpus, const Corpus& holdout, DedupKey key = DedupKey::Uid) {
    std::unordered_set<std::string> held;
    held.reserve(holdout.size());
    for (const auto& ex : holdout) held.insert(dedup_key(ex, key));
    FilterResult out{corpus.empty_like(), 0};
    for (const auto& ex : corpus) {
        if (held.contains(dedup_key(ex, key)))
            ++out.removed;
        else
            out.corpus.add(ex);
    }
    return out;
}

} // namespace ambinli
