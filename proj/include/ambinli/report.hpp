#pragma once

// JSON, CSV and text renderings of build, evaluation, cross-validation,
// comparison and transfer results. Field names are documented in
// docs/reports.md.

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "convert.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "transfer.hpp"

namespace ambinli {

using nlohmann::ordered_json;

inline ordered_json dist_json(const LabelDistribution& d) { return ordered_json::array({d.e(), d.n(), d.c()}); }

inline std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline ordered_json to_json(const BuildResult& r) {
    ordered_json inputs = ordered_json::array();
    for (const auto& [name, s] : r.per_input)
        inputs.push_back({{"name", name},
                          {"input", s.input},
                          {"dedup_removed", s.dedup_removed},
                          {"filter_removed", s.filter_removed},
                          {"excluded_source", s.excluded_source},
                          {"no_majority_dropped", s.no_majority_dropped},
                          {"output", s.output}});
    return {{"corpus", r.corpus.name()}, {"total", r.corpus.size()}, {"inputs", inputs}};
}

inline std::string to_text(const BuildResult& r) {
    std::string out = "corpus " + r.corpus.name() + ": " + std::to_string(r.corpus.size()) + " examples\n";
    for (const auto& [name, s] : r.per_input)
        out += "  " + name + ": in " + std::to_string(s.input) + ", dedup -" + std::to_string(s.dedup_removed) +
               ", filter -" + std::to_string(s.filter_removed) + ", excluded -" + std::to_string(s.excluded_source) +
               ", no-majority -" + std::to_string(s.no_majority_dropped) + ", out " + std::to_string(s.output) + "\n";
    return out;
}

inline ordered_json to_json(const BinMetrics& b) {
    return {{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"accuracy_count", b.accuracy_count},
            {"mean_jsd", b.mean_jsd}, {"accuracy", b.accuracy}};
}

inline ordered_json to_json(const BinReport& r) {
    ordered_json bins = ordered_json::array();
    for (const auto& b : r.bins) bins.push_back(to_json(b));
    return {{"edges", r.edges}, {"bins", bins}, {"below", to_json(r.below)}, {"above", to_json(r.above)}};
}

inline ordered_json to_json(const ExampleRecord& r) {
    return {{"uid", r.uid},
            {"target", dist_json(r.target)},
            {"predicted", dist_json(r.predicted)},
            {"reference", std::string(to_string(r.reference))},
            {"predicted_label", std::string(to_string(r.predicted_label))},
            {"correct", r.correct},
            {"entropy", r.entropy},
            {"jsd", r.jsd}};
}

inline ordered_json to_json(const EvalReport& r, bool with_examples = true) {
    ordered_json j{{"dataset", r.dataset},
                   {"n_examples", r.n_examples},
                   {"n_accuracy", r.n_accuracy},
                   {"n_no_majority", r.n_no_majority},
                   {"mean_jsd", r.mean_jsd},
                   {"mean_kl", r.mean_kl},
                   {"accuracy", r.accuracy}};
    if (r.entropy_bins) j["entropy_bins"] = to_json(*r.entropy_bins);
    if (with_examples) {
        ordered_json ex = ordered_json::array();
        for (const auto& e : r.per_example) ex.push_back(to_json(e));
        j["per_example"] = ex;
    }
    return j;
}

inline std::string to_text(const EvalReport& r) {
    std::string out = "dataset " + r.dataset + ": " + std::to_string(r.n_examples) + " examples (" +
                      std::to_string(r.n_no_majority) + " without majority)\n";
    out += "  JSD " + fixed(r.mean_jsd) + "  KL " + fixed(r.mean_kl) + "  Acc. " + fixed(r.accuracy) + "\n";
    return out;
}

inline std::string to_text(const BinReport& r, const EvalReport* full = nullptr) {
    std::string out = "Entropy Range        JSD      Accuracy  Count\n";
    if (full) out += "Full Range           " + fixed(full->mean_jsd) + "   " + fixed(full->accuracy) + "    " +
                     std::to_string(full->n_examples) + "\n";
    auto row = [&](const std::string& label, const BinMetrics& b) {
        std::string l = label;
        l.resize(21, ' ');
        out += l + fixed(b.mean_jsd) + "   " + fixed(b.accuracy) + "    " + std::to_string(b.count) + "\n";
    };
    for (const auto& b : r.bins) row("[" + fixed(b.lo, 2) + " - " + fixed(b.hi, 2) + "]", b);
    row("below " + fixed(r.edges.front(), 2), r.below);
    row("above " + fixed(r.edges.back(), 2), r.above);
    return out;
}

inline ordered_json to_json(const CrossvalReport& r) {
    ordered_json arms = ordered_json::array();
    for (const auto& a : r.arms) {
        ordered_json folds = ordered_json::array();
        for (const auto& f : a.folds)
            folds.push_back({{"fold", f.fold},
                             {"train_size", f.train_size},
                             {"test_size", f.test_size},
                             {"accuracy", f.accuracy},
                             {"mean_jsd", f.mean_jsd},
                             {"run_fingerprint", f.run_fingerprint}});
        arms.push_back({{"target_mode", std::string(to_string(a.mode))},
                        {"folds", folds},
                        {"mean_accuracy", a.mean_accuracy},
                        {"mean_jsd", a.mean_jsd}});
    }
    return {{"k", r.k}, {"seed", r.seed}, {"arms", arms}};
}

inline std::string to_text(const CrossvalReport& r) {
    std::string out = "Folds";
    for (const auto& a : r.arms) out += "   " + std::string(to_string(a.mode));
    out += "\n";
    for (std::size_t f = 0; f < r.k; ++f) {
        out += std::to_string(f);
        for (const auto& a : r.arms) out += "       " + fixed(a.folds[f].accuracy);
        out += "\n";
    }
    out += "Average";
    for (const auto& a : r.arms) out += "   " + fixed(a.mean_accuracy);
    out += "\n";
    return out;
}

inline ordered_json histogram_json(const LabelHistogram& h) {
    return {{"entailment", h[0]}, {"neutral", h[1]}, {"contradiction", h[2]}};
}

inline ordered_json to_json(const DiffReport& r) {
    ordered_json a = ordered_json::array(), b = ordered_json::array();
    for (const auto& e : r.only_a) a.push_back(to_json(e));
    for (const auto& e : r.only_b) b.push_back(to_json(e));
    return {{"only_a_correct", histogram_json(r.only_a_correct)},
            {"only_b_correct", histogram_json(r.only_b_correct)},
            {"whole", histogram_json(r.whole)},
            {"whole_no_majority", r.whole_no_majority},
            {"mean_neutral_a", r.mean_neutral_a},
            {"mean_neutral_b", r.mean_neutral_b},
            {"only_a", a},
            {"only_b", b}};
}

/// label,count rows (the plotting input for a label count plot).
inline void write_histogram_csv(std::ostream& os, const LabelHistogram& h) {
    os << "label,count\n";
    for (Label l : kLabels) os << to_string(l) << ',' << h[index_of(l)] << '\n';
}

inline ordered_json to_json(const TransferTable& t) {
    const bool reg = t.task == TransferTask::Regression01;
    ordered_json rows = ordered_json::array();
    for (const auto& r : t.rows) {
        ordered_json trials = ordered_json::array();
        for (const auto& m : r.trials) trials.push_back(ordered_json::array({m.primary, m.secondary}));
        rows.push_back({{"encoder", r.encoder},
                        {"head_layers", r.head_layers},
                        {reg ? "pearson_mean" : "accuracy_mean", r.primary_mean},
                        {reg ? "pearson_std" : "accuracy_std", r.primary_std},
                        {reg ? "mse_mean" : "ce_loss_mean", r.secondary_mean},
                        {reg ? "mse_std" : "ce_loss_std", r.secondary_std},
                        {"std_undefined", r.std_undefined},
                        {"trials", trials}});
    }
    return {{"task", reg ? "regression" : "binary"}, {"rows", rows}};
}

inline void write_transfer_csv(std::ostream& os, const TransferTable& t) {
    const bool reg = t.task == TransferTask::Regression01;
    os << (reg ? "head_layers,encoder,pearson_mean,pearson_std,mse_mean,mse_std\n"
               : "head_layers,encoder,ce_loss_mean,ce_loss_std,accuracy_mean,accuracy_std\n");
    char buf[256];
    for (const auto& r : t.rows) {
        if (reg)
            std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g\n", r.head_layers, r.encoder.c_str(),
                          r.primary_mean, r.primary_std, r.secondary_mean, r.secondary_std);
        else
            std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g\n", r.head_layers, r.encoder.c_str(),
                          r.secondary_mean, r.secondary_std, r.primary_mean, r.primary_std);
        os << buf;
    }
}

inline std::string to_text(const TransferTable& t) {
    const bool reg = t.task == TransferTask::Regression01;
    std::string out = reg ? "Model              Pearson            MSE\n" : "Model              CE Loss            Acc.\n";
    std::size_t depth = 0;
    for (const auto& r : t.rows) {
        if (r.head_layers != depth) {
            depth = r.head_layers;
            out += std::to_string(depth) + (depth == 1 ? " Layer\n" : " Layers\n");
        }
        std::string name = r.encoder;
        name.resize(19, ' ');
        auto cell = [](double m, double s) {
            std::string c = fixed(m) + " (" + fixed(s) + ")";
            c.resize(19, ' ');
            return c;
        };
        if (reg)
            out += name + cell(r.primary_mean, r.primary_std) + cell(r.secondary_mean, r.secondary_std);
        else
            out += name + cell(r.secondary_mean, r.secondary_std) + cell(r.primary_mean, r.primary_std);
        if (r.std_undefined) out += "(single trial: std not defined)";
        while (out.back() == ' ') out.pop_back();
        out += "\n";
    }
    return out;
}

inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
    os << "epoch,split,loss,accuracy\n";
    char buf[128];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g\n", h.epoch, h.split.c_str(), h.loss, h.accuracy);
        os << buf;
    }
}

} // namespace ambinli
