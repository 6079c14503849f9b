#pragma once

// Planted generator: synthetic NLI pairs whose true label distributions are
// known. Each pair carries a few "cue" words; the true distribution is the
// softmax of the summed cue weights plus a neutral bias, so ambiguous pairs
// lean neutral. Gold labels are the true argmax, replaced by the runner-up
// label on a fraction of high-entropy pairs.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "convert.hpp"
#include "corpus.hpp"
#include "dist.hpp"
#include "model.hpp"
#include "random.hpp"
#include "transfer.hpp"

namespace ambinli {

struct PlantedConfig {
    std::size_t cue_words = 40;
    std::size_t cues_per_side = 2;
    std::size_t noise_words = 200;
    std::size_t noise_per_side = 4;
    double cue_scale = 1.5;
    double neutral_bias = 0.5;
    double ambiguous_entropy = 1.0; // bits
    double flip_rate = 0.2;
    std::uint64_t annotators = 100;
};

/// Fixed cue-word weights shared by every split drawn from one world.
struct PlantedWorld {
    PlantedConfig cfg;
    std::vector<std::array<double, 3>> cue_weights;
};

inline PlantedWorld make_world(const PlantedConfig& cfg, std::uint64_t seed) {
    PlantedWorld w{cfg, {}};
    Rng rng(derive_seed(seed, "planted-world"));
    w.cue_weights.resize(cfg.cue_words);
    for (auto& cw : w.cue_weights)
        for (double& v : cw) v = cfg.cue_scale * rng.normal();
    return w;
}

/// Largest-remainder rounding of a distribution to integer counts.
inline LabelCounts round_to_counts(const LabelDistribution& d, std::uint64_t total) {
    std::array<std::uint64_t, 3> c{};
    std::array<double, 3> rem{};
    std::uint64_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double x = d[k] * static_cast<double>(total);
        c[k] = static_cast<std::uint64_t>(std::floor(x));
        rem[k] = x - std::floor(x);
        assigned += c[k];
    }
    while (assigned < total) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k)
            if (rem[k] > rem[best]) best = k;
        ++c[best];
        rem[best] = -1.0;
        ++assigned;
    }
    return {c[0], c[1], c[2]};
}

/// Entailment probability whose converted UNLI distribution matches d on
/// the conversion's image: 0.5 + (p_e - p_c) / 2.
inline double unli_score(const LabelDistribution& d) { return std::clamp(0.5 + 0.5 * (d.e() - d.c()), 0.0, 1.0); }

struct PlantedSet {
    Corpus corpus;
    std::vector<LabelDistribution> truth; // exact generator distributions, corpus order
};

/// Draws n examples. Targets are the annotator counts normalized; gold is
/// the (possibly corrupted) argmax. Chaos-source sets carry no gold field,
/// so their reference label is the majority of the counts.
inline PlantedSet generate_planted(const PlantedWorld& world, std::size_t n, std::uint64_t seed, Source source,
                                   const std::string& uid_prefix) {
    const auto& cfg = world.cfg;
    Rng rng(derive_seed(seed, "planted/" + uid_prefix));
    PlantedSet out{Corpus(uid_prefix), {}};
    auto side = [&](std::array<double, 3>& logits) {
        std::vector<std::string> words;
        for (std::size_t i = 0; i < cfg.cues_per_side; ++i) {
            const auto cue = rng.below(cfg.cue_words);
            for (std::size_t k = 0; k < 3; ++k) logits[k] += world.cue_weights[cue][k];
            words.push_back("cue" + std::to_string(cue));
        }
        for (std::size_t i = 0; i < cfg.noise_per_side; ++i) words.push_back("w" + std::to_string(rng.below(cfg.noise_words)));
        rng.shuffle(std::span<std::string>(words));
        std::string text;
        for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
        return text + ".";
    };
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 3> logits{0.0, cfg.neutral_bias, 0.0};
        AnnotatedExample ex;
        ex.uid = uid_prefix + "-" + std::to_string(i);
        ex.source = source;
        ex.premise = side(logits);
        ex.hypothesis = side(logits);
        const LabelDistribution truth(softmax(logits));
        const auto counts = round_to_counts(truth, cfg.annotators);
        ex.annotator_counts = counts;
        ex.target = normalize(counts);

        Label gold = argmax(truth);
        const bool flip = entropy(truth) > cfg.ambiguous_entropy && rng.uniform() < cfg.flip_rate;
        if (flip) {
            Label runner_up = gold == Label::Entailment ? Label::Neutral : Label::Entailment;
            for (Label l : kLabels)
                if (l != gold && truth[l] > truth[runner_up]) runner_up = l;
            gold = runner_up;
        }
        if (source != Source::Chaos) ex.gold = to_gold(gold);
        out.corpus.add(std::move(ex));
        out.truth.push_back(truth);
    }
    return out;
}

/// Downstream regression task from the same world: label is unli_score of the truth.
inline std::vector<TaskExample> planted_regression_task(const PlantedSet& set) {
    std::vector<TaskExample> out;
    for (std::size_t i = 0; i < set.corpus.size(); ++i) {
        const auto& ex = set.corpus[i];
        out.push_back({ex.uid, ex.premise, ex.hypothesis, unli_score(set.truth[i])});
    }
    return out;
}

/// Downstream binary task: 1 when entailment outweighs contradiction.
inline std::vector<TaskExample> planted_binary_task(const PlantedSet& set) {
    std::vector<TaskExample> out;
    for (std::size_t i = 0; i < set.corpus.size(); ++i) {
        const auto& ex = set.corpus[i];
        out.push_back({ex.uid, ex.premise, ex.hypothesis, set.truth[i].e() > set.truth[i].c() ? 1.0 : 0.0});
    }
    return out;
}

} // namespace ambinli
