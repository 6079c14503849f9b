#pragma once

// Evaluation against human label distributions: mean JSD/KL, accuracy
// against recomputed majority labels, entropy-range breakdown, k-fold
// cross-validation and the two-model prediction comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "convert.hpp"
#include "corpus.hpp"
#include "dist.hpp"
#include "error.hpp"
#include "model.hpp"
#include "random.hpp"

namespace ambinli {

struct ExampleRecord {
    std::string uid;
    LabelDistribution target;
    LabelDistribution predicted;
    GoldLabel reference = GoldLabel::NoMajority; // recomputed majority label
    GoldLabel predicted_label = GoldLabel::Entailment;
    bool correct = false;
    double entropy = 0.0; // of the target, in bits
    double jsd = 0.0;
    double kl = 0.0;
};

struct BinMetrics {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    std::size_t accuracy_count = 0; // examples with a definite reference label
    double mean_jsd = 0.0;
    double accuracy = 0.0;
};

struct BinReport {
    std::vector<double> edges;
    std::vector<BinMetrics> bins;
    BinMetrics below; // entropy < edges.front()
    BinMetrics above; // entropy > edges.back()
};

struct EvalReport {
    std::string dataset;
    std::size_t n_examples = 0;
    std::size_t n_accuracy = 0;
    std::size_t n_no_majority = 0;
    double mean_jsd = 0.0;
    double mean_kl = 0.0;
    double accuracy = 0.0;
    std::vector<ExampleRecord> per_example;
    std::optional<BinReport> entropy_bins;
};

/// Reference distribution: stored target, else the implied annotation distribution.
inline LabelDistribution reference_distribution(const AnnotatedExample& ex) {
    if (ex.target) return *ex.target;
    return implied_distribution(ex);
}

/// Reference label: majority of the counts when present (the recomputed
/// gold), else the effective gold, else argmax of the reference distribution.
inline GoldLabel reference_label(const AnnotatedExample& ex) {
    if (ex.annotator_counts && ex.annotator_counts->total() > 0) return majority_label(*ex.annotator_counts);
    if (auto g = effective_gold(ex)) return *g;
    return to_gold(argmax(reference_distribution(ex)));
}

namespace detail {

inline BinMetrics summarize(const std::vector<const ExampleRecord*>& records, double lo, double hi) {
    BinMetrics m{lo, hi, records.size(), 0, 0.0, 0.0};
    std::size_t correct = 0;
    for (const auto* r : records) {
        m.mean_jsd += r->jsd;
        if (r->reference != GoldLabel::NoMajority) {
            ++m.accuracy_count;
            if (r->correct) ++correct;
        }
    }
    if (m.count > 0) m.mean_jsd /= static_cast<double>(m.count);
    if (m.accuracy_count > 0) m.accuracy = static_cast<double>(correct) / static_cast<double>(m.accuracy_count);
    return m;
}

} // namespace detail

inline constexpr std::array<double, 4> kDefaultBinEdges{0.08, 0.58, 1.08, 1.58};

/// Bins records by target entropy. Bin i holds edges[i] <= h < edges[i+1];
/// the last bin is closed above. Records outside [front, back] go to the
/// below/above buckets, so bins plus buckets partition the input.
inline BinReport entropy_bins(const std::vector<ExampleRecord>& records,
                              const std::vector<double>& edges = {kDefaultBinEdges.begin(), kDefaultBinEdges.end()}) {
    if (edges.size() < 2) throw Error(ErrorKind::BadEdges, "need at least two edges");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i] < edges[i + 1])) throw Error(ErrorKind::BadEdges, "edges must be strictly increasing");

    const std::size_t nbins = edges.size() - 1;
    std::vector<std::vector<const ExampleRecord*>> members(nbins);
    std::vector<const ExampleRecord*> below, above;
    for (const auto& r : records) {
        const double h = r.entropy;
        if (h < edges.front()) {
            below.push_back(&r);
        } else if (h > edges.back()) {
            above.push_back(&r);
        } else if (h == edges.back()) {
            members.back().push_back(&r);
        } else {
            const auto it = std::upper_bound(edges.begin(), edges.end(), h);
            members[static_cast<std::size_t>(it - edges.begin()) - 1].push_back(&r);
        }
    }
    BinReport out;
    out.edges = edges;
    for (std::size_t i = 0; i < nbins; ++i) out.bins.push_back(detail::summarize(members[i], edges[i], edges[i + 1]));
    out.below = detail::summarize(below, 0.0, edges.front());
    out.above = detail::summarize(above, edges.back(), std::log2(3.0));
    return out;
}

/// Compares predictions with targets. Prediction uids must cover the target
/// uids exactly. NoMajority references count toward JSD but not accuracy.
inline EvalReport evaluate(const std::vector<Prediction>& predictions, const Corpus& targets,
                           std::string dataset = {}) {
    std::unordered_map<std::string, const Prediction*> by_uid;
    by_uid.reserve(predictions.size());
    for (const auto& p : predictions)
        if (!by_uid.emplace(p.uid, &p).second)
            throw Error(ErrorKind::UidMismatch, "duplicate prediction uid '" + p.uid + "'");
    if (predictions.size() != targets.size())
        throw Error(ErrorKind::UidMismatch, std::to_string(predictions.size()) + " predictions for " +
                                                std::to_string(targets.size()) + " targets");

    EvalReport report;
    report.dataset = dataset.empty() ? targets.name() : std::move(dataset);
    report.n_examples = targets.size();
    std::size_t correct = 0;
    for (const auto& ex : targets) {
        const auto it = by_uid.find(ex.uid);
        if (it == by_uid.end()) throw Error(ErrorKind::UidMismatch, "no prediction for uid '" + ex.uid + "'");
        const Prediction& p = *it->second;
        ExampleRecord r;
        r.uid = ex.uid;
        r.target = reference_distribution(ex);
        r.predicted = p.dist;
        r.reference = reference_label(ex);
        r.predicted_label = to_gold(argmax(p.dist));
        r.correct = r.reference != GoldLabel::NoMajority && r.reference == r.predicted_label;
        r.entropy = entropy(r.target);
        r.jsd = jsd(r.target, r.predicted);
        r.kl = kl(r.target, r.predicted);
        report.mean_jsd += r.jsd;
        report.mean_kl += r.kl;
        if (r.reference == GoldLabel::NoMajority) {
            ++report.n_no_majority;
        } else {
            ++report.n_accuracy;
            if (r.correct) ++correct;
        }
        report.per_example.push_back(std::move(r));
    }
    if (report.n_examples > 0) {
        report.mean_jsd /= static_cast<double>(report.n_examples);
        report.mean_kl /= static_cast<double>(report.n_examples);
    }
    if (report.n_accuracy > 0) report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n_accuracy);
    return report;
}

struct FoldSplit {
    std::size_t k = 3;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold_of;          // by corpus position
    std::map<std::string, std::size_t> assignments; // uid -> fold

    std::vector<std::size_t> fold_sizes() const {
        std::vector<std::size_t> sizes(k, 0);
        for (auto f : fold_of) ++sizes[f];
        return sizes;
    }
};

/// Seeded shuffle, then round-robin assignment: fold sizes differ by at most one.
inline FoldSplit kfold_split(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorKind::InvalidConfig, "k must be at least 2");
    if (corpus.size() < k)
        throw Error(ErrorKind::TooSmall, std::to_string(corpus.size()) + " examples for " + std::to_string(k) + " folds");
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(std::span<std::size_t>(order));
    FoldSplit split{k, seed, std::vector<std::size_t>(corpus.size()), {}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        split.fold_of[order[i]] = i % k;
        split.assignments[corpus[order[i]].uid] = i % k;
    }
    return split;
}

struct FoldOutcome {
    std::size_t fold = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    double accuracy = 0.0;
    double mean_jsd = 0.0;
    std::uint64_t run_fingerprint = 0; // identical across target modes by construction
};

struct CrossvalArm {
    TargetMode mode = TargetMode::Ambiguity;
    std::vector<FoldOutcome> folds;
    double mean_accuracy = 0.0;
    double mean_jsd = 0.0;
};

struct CrossvalReport {
    std::size_t k = 3;
    std::uint64_t seed = 0;
    std::vector<CrossvalArm> arms;
};

inline Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& positions, std::string name) {
    Corpus out = corpus.empty_like();
    out.set_name(std::move(name));
    for (auto i : positions) out.add(corpus[i]);
    return out;
}

/// k-fold cross-validation. Every arm shares fold assignment, per-fold
/// initial weights (or `base`) and seeds; only the target mode differs.
inline CrossvalReport crossval(const Corpus& corpus, const TrainConfig& cfg, std::size_t k,
                               const std::vector<TargetMode>& modes, const ClassifierModel* base = nullptr) {
    const auto split = kfold_split(corpus, k, cfg.seed);
    CrossvalReport report{k, cfg.seed, {}};
    for (TargetMode mode : modes) {
        CrossvalArm arm{mode, {}, 0.0, 0.0};
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<std::size_t> train_pos, test_pos;
            for (std::size_t i = 0; i < corpus.size(); ++i)
                (split.fold_of[i] == f ? test_pos : train_pos).push_back(i);
            const Corpus train_set = subset(corpus, train_pos, "fold-train");
            const Corpus test_set = subset(corpus, test_pos, "fold-test");

            TrainConfig fold_cfg = cfg;
            fold_cfg.target_mode = mode;
            fold_cfg.seed = derive_seed(cfg.seed, "fold/" + std::to_string(f));
            std::uint64_t fp = fnv1a64(std::to_string(fold_cfg.seed));
            for (auto i : train_pos) fp = fnv1a64(corpus[i].uid, fp);

            const auto trained = train(fold_cfg, train_set, nullptr, base);
            const auto rep = evaluate(predict(trained.model, test_set), test_set, "fold");
            arm.folds.push_back({f, train_set.size(), test_set.size(), rep.accuracy, rep.mean_jsd, fp});
            arm.mean_accuracy += rep.accuracy / static_cast<double>(k);
            arm.mean_jsd += rep.mean_jsd / static_cast<double>(k);
        }
        report.arms.push_back(std::move(arm));
    }
    return report;
}

using LabelHistogram = std::array<std::size_t, 3>; // E, N, C

struct DiffReport {
    LabelHistogram only_a_correct{};
    LabelHistogram only_b_correct{};
    LabelHistogram whole{};
    std::size_t whole_no_majority = 0;
    double mean_neutral_a = 0.0;
    double mean_neutral_b = 0.0;
    std::vector<ExampleRecord> only_a; // records from model A, entropy descending
    std::vector<ExampleRecord> only_b; // records from model B, entropy descending
};

/// Which examples exactly one of two models gets right, per reference label.
inline DiffReport prediction_diff_report(const std::vector<Prediction>& preds_a, const std::vector<Prediction>& preds_b,
                                         const Corpus& targets) {
    const auto ra = evaluate(preds_a, targets);
    const auto rb = evaluate(preds_b, targets);
    DiffReport out;
    for (std::size_t i = 0; i < ra.per_example.size(); ++i) {
        const auto& a = ra.per_example[i];
        const auto& b = rb.per_example[i];
        out.mean_neutral_a += a.predicted.n();
        out.mean_neutral_b += b.predicted.n();
        const auto ref = to_label(a.reference);
        if (!ref) {
            ++out.whole_no_majority;
            continue;
        }
        ++out.whole[index_of(*ref)];
        if (a.correct && !b.correct) {
            ++out.only_a_correct[index_of(*ref)];
            out.only_a.push_back(a);
        } else if (b.correct && !a.correct) {
            ++out.only_b_correct[index_of(*ref)];
            out.only_b.push_back(b);
        }
    }
    if (!ra.per_example.empty()) {
        out.mean_neutral_a /= static_cast<double>(ra.per_example.size());
        out.mean_neutral_b /= static_cast<double>(ra.per_example.size());
    }
    auto by_entropy = [](const ExampleRecord& x, const ExampleRecord& y) {
        if (x.entropy != y.entropy) return x.entropy > y.entropy;
        return x.uid < y.uid;
    };
    std::sort(out.only_a.begin(), out.only_a.end(), by_entropy);
    std::sort(out.only_b.begin(), out.only_b.end(), by_entropy);
    return out;
}

} // namespace ambinli
