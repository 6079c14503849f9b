#pragma once

// Target construction: annotation counts and UNLI regression scores become
// ambiguity distributions, gold labels become one-hot targets, and the
// pieces are assembled into a single training corpus.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "corpus.hpp"
#include "dist.hpp"
#include "error.hpp"
#include "ingest.hpp"

namespace ambinli {

enum class TargetMode { Ambiguity, GoldOneHot };

constexpr std::string_view to_string(TargetMode m) noexcept {
    return m == TargetMode::Ambiguity ? "ambiguity" : "gold";
}

struct ConversionConfig {
    double unli_low_cut = 0.05;
    double unli_high_cut = 0.97;
    bool filter_unli = false;
    std::set<Source> include_sources{Source::SnliOriginal, Source::MnliOriginal, Source::Unli};
    TargetMode target_mode = TargetMode::Ambiguity;
    DedupKey dedup_key = DedupKey::Uid;

    void validate() const {
        if (!(0.0 <= unli_low_cut && unli_low_cut < unli_high_cut && unli_high_cut <= 1.0))
            throw Error(ErrorKind::InvalidConfig, "need 0 <= unli_low_cut < unli_high_cut <= 1");
    }
};

/// Piecewise-linear map from an entailment probability to an NLI distribution:
/// p < 0.5 -> (0, 2p, 1-2p); p >= 0.5 -> (2p-1, 2-2p, 0).
inline LabelDistribution unli_to_distribution(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::OutOfRange, "UNLI score " + std::to_string(p));
    if (p < 0.5) return LabelDistribution(0.0, 2.0 * p, 1.0 - 2.0 * p);
    return LabelDistribution(2.0 * p - 1.0, 2.0 - 2.0 * p, 0.0);
}

/// Gold label of a UNLI score: argmax of its converted distribution (ties E > N > C).
inline GoldLabel unli_gold(double p) { return to_gold(argmax(unli_to_distribution(p))); }

inline AnnotatedExample counts_to_distribution(AnnotatedExample ex) {
    if (!ex.annotator_counts) throw Error(ErrorKind::MissingCounts, "example '" + ex.uid + "' has no counts");
    ex.target = normalize(*ex.annotator_counts);
    return ex;
}

/// The ambiguity distribution implied by an example's annotations.
inline LabelDistribution implied_distribution(const AnnotatedExample& ex) {
    if (ex.annotator_counts) return normalize(*ex.annotator_counts);
    if (ex.regression_p) return unli_to_distribution(*ex.regression_p);
    throw Error(ErrorKind::MissingCounts, "example '" + ex.uid + "' has neither counts nor a score");
}

/// Gold label from the explicit field, else majority of counts, else the UNLI argmax.
inline std::optional<GoldLabel> effective_gold(const AnnotatedExample& ex) {
    if (ex.gold) return ex.gold;
    if (ex.annotator_counts && ex.annotator_counts->total() > 0) return majority_label(*ex.annotator_counts);
    if (ex.regression_p) return unli_gold(*ex.regression_p);
    return std::nullopt;
}

inline AnnotatedExample gold_to_onehot(AnnotatedExample ex) {
    const auto gold = effective_gold(ex);
    const auto label = gold ? to_label(*gold) : std::nullopt;
    if (!label)
        throw Error(ErrorKind::NoMajorityGold, "example '" + ex.uid + "' has no usable gold label");
    ex.gold = *gold;
    ex.target = LabelDistribution::one_hot(*label);
    return ex;
}

/// Removes UNLI examples with p < low or p > high; cut values themselves are kept.
inline FilterResult filter_extreme_unli(const Corpus& corpus, const ConversionConfig& cfg) {
    cfg.validate();
    FilterResult out{corpus.empty_like(), 0};
    for (const auto& ex : corpus) {
        if (ex.source == Source::Unli && ex.regression_p &&
            (*ex.regression_p < cfg.unli_low_cut || *ex.regression_p > cfg.unli_high_cut)) {
            ++out.removed;
            continue;
        }
        out.corpus.add(ex);
    }
    return out;
}

struct SourceBuildStats {
    std::size_t input = 0;
    std::size_t dedup_removed = 0;
    std::size_t filter_removed = 0;
    std::size_t excluded_source = 0;
    std::size_t no_majority_dropped = 0;
    std::size_t output = 0;
};

struct BuildResult {
    Corpus corpus;
    std::vector<std::pair<std::string, SourceBuildStats>> per_input;
};

/// Dedups each source against every holdout, optionally filters UNLI
/// extremes, converts targets per cfg.target_mode and concatenates in input
/// order. In gold mode NoMajority examples are dropped and counted.
inline BuildResult build_ambinli(const std::vector<Corpus>& sources, const std::vector<Corpus>& holdouts,
                                 const ConversionConfig& cfg, std::string name = "ambinli") {
    cfg.validate();
    BuildResult result{Corpus(std::move(name)), {}};
    for (const auto& src : sources) {
        SourceBuildStats stats;
        stats.input = src.size();
        Corpus current = src;
        for (const auto& h : holdouts) {
            auto d = dedup_against(current, h, cfg.dedup_key);
            stats.dedup_removed += d.removed;
            current = std::move(d.corpus);
        }
        if (cfg.filter_unli) {
            auto f = filter_extreme_unli(current, cfg);
            stats.filter_removed = f.removed;
            current = std::move(f.corpus);
        }
        for (const auto& ex : current) {
            if (!cfg.include_sources.contains(ex.source)) {
                ++stats.excluded_source;
                continue;
            }
            if (cfg.target_mode == TargetMode::Ambiguity) {
                AnnotatedExample out = ex;
                out.target = implied_distribution(ex);
                result.corpus.add(std::move(out));
            } else {
                const auto g = effective_gold(ex);
                if (!g || *g == GoldLabel::NoMajority) {
                    ++stats.no_majority_dropped;
                    continue;
                }
                result.corpus.add(gold_to_onehot(ex));
            }
            ++stats.output;
        }
        for (const auto& [s, p] : src.provenance())
            if (!p.path.empty()) result.corpus.set_source_path(s, p.path);
        result.per_input.emplace_back(src.name(), stats);
    }
    return result;
}

} // namespace ambinli
