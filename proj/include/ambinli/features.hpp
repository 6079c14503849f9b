#pragma once

// Tokenizer and hashed bag-of-n-grams featurizer for premise/hypothesis pairs.
//
// Three hashed buckets share one index space of size hash_dim: premise
// n-grams, hypothesis n-grams, and unigrams present in both texts. The
// bucket tag is mixed into the hash, so the same word lands on different
// indices per bucket. Hashing is FNV-1a over UTF-8 bytes; results do not
// depend on the platform or process.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace ambinli {

namespace detail {

inline std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> std::uint32_t {
        return i + k < s.size() ? (static_cast<unsigned char>(s[i + k]) & 0x3Fu) : 0u;
    };
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0) {
        const std::uint32_t cp = ((b0 & 0x1Fu) << 6) | cont(1);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0) {
        const std::uint32_t cp = ((b0 & 0x0Fu) << 12) | (cont(1) << 6) | cont(2);
        i += 3;
        return cp;
    }
    const std::uint32_t cp = ((b0 & 0x07u) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
    i += 4;
    return cp;
}

inline bool is_separator(std::uint32_t cp) {
    if (cp < 0x80) {
        const auto ch = static_cast<unsigned char>(cp);
        return std::isspace(ch) || std::ispunct(ch);
    }
    switch (cp) {
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
    case 0x00AB: case 0x00BB: case 0x2018: case 0x2019: case 0x201C: case 0x201D:
    case 0x2013: case 0x2014: case 0x2026: case 0x00BF: case 0x00A1:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

} // namespace detail

/// Lowercases ASCII and splits on whitespace and punctuation.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = detail::decode_utf8(text, i);
        i = std::min(i, text.size());
        if (detail::is_separator(cp)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
            continue;
        }
        if (cp < 0x80)
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
        else
            current.append(text.substr(start, i - start));
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

enum class Bucket : std::uint8_t { Premise = 1, Hypothesis = 2, Overlap = 3 };

struct FeatureConfig {
    std::uint64_t hash_dim = std::uint64_t{1} << 15;
    bool unigrams = true;
    bool bigrams = true;
    std::uint64_t hash_seed = 0x5eed;

    void validate() const {
        if (hash_dim < 1024 || (hash_dim & (hash_dim - 1)) != 0)
            throw Error(ErrorKind::InvalidConfig, "hash_dim must be a power of two >= 1024");
        if (!unigrams && !bigrams) throw Error(ErrorKind::InvalidConfig, "no n-gram orders enabled");
    }

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

inline std::uint32_t feature_index(Bucket bucket, std::string_view gram, const FeatureConfig& cfg) {
    const std::uint64_t h = fnv1a64(gram, splitmix64(cfg.hash_seed + static_cast<std::uint64_t>(bucket)));
    return static_cast<std::uint32_t>(splitmix64(h) & (cfg.hash_dim - 1));
}

/// Sorted, merged (index, value) pairs.
struct SparseVector {
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    std::size_t nnz() const noexcept { return index.size(); }

    double at(std::uint32_t i) const {
        const auto it = std::lower_bound(index.begin(), index.end(), i);
        if (it == index.end() || *it != i) return 0.0;
        return value[static_cast<std::size_t>(it - index.begin())];
    }

    friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

namespace detail {

inline void add_ngrams(std::vector<std::uint32_t>& hits, Bucket bucket, const std::vector<std::string>& tokens,
                       const FeatureConfig& cfg) {
    if (cfg.unigrams)
        for (const auto& t : tokens) hits.push_back(feature_index(bucket, t, cfg));
    if (cfg.bigrams)
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
            hits.push_back(feature_index(bucket, tokens[i] + ' ' + tokens[i + 1], cfg));
}

} // namespace detail

/// Count features for a pair. Throws EmptyText when either side has no tokens.
inline SparseVector featurize(std::string_view premise, std::string_view hypothesis, const FeatureConfig& cfg) {
    const auto p = tokenize(premise);
    const auto h = tokenize(hypothesis);
    if (p.empty() || h.empty()) throw Error(ErrorKind::EmptyText, "premise or hypothesis has no tokens");

    std::vector<std::uint32_t> hits;
    hits.reserve(2 * (p.size() + h.size()));
    detail::add_ngrams(hits, Bucket::Premise, p, cfg);
    detail::add_ngrams(hits, Bucket::Hypothesis, h, cfg);
    const std::set<std::string> in_premise(p.begin(), p.end());
    const std::set<std::string> in_hypothesis(h.begin(), h.end());
    for (const auto& t : in_premise)
        if (in_hypothesis.contains(t)) hits.push_back(feature_index(Bucket::Overlap, t, cfg));

    std::sort(hits.begin(), hits.end());
    SparseVector out;
    for (std::uint32_t i : hits) {
        if (!out.index.empty() && out.index.back() == i) {
            out.value.back() += 1.0;
        } else {
            out.index.push_back(i);
            out.value.push_back(1.0);
        }
    }
    return out;
}

} // namespace ambinli
