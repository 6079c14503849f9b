#pragma once

// Resolution of a KeyValueConfig into the typed module configurations.
// All randomness derives from the single `seed` key via derive_seed with a
// fixed purpose string per consumer ("train", "crossval", "transfer",
// "synth").

#include <set>
#include <string>
#include <vector>

#include "config.hpp"
#include "convert.hpp"
#include "ingest.hpp"
#include "model.hpp"
#include "synthetic.hpp"
#include "transfer.hpp"

namespace ambinli {

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys{
        "seed", "output_dir",
        "input.snli", "input.mnli", "input.unli",
        "ingest.max_error_rate",
        "convert.unli_low_cut", "convert.unli_high_cut", "convert.filter_unli", "convert.target_mode",
        "convert.include_sources", "convert.dedup_key",
        "fields.multilabel.uid", "fields.multilabel.premise", "fields.multilabel.hypothesis",
        "fields.multilabel.annotator_labels", "fields.multilabel.gold",
        "fields.chaos.uid", "fields.chaos.counter", "fields.chaos.majority", "fields.chaos.premise",
        "fields.chaos.hypothesis", "fields.chaos.expected_total",
        "fields.unli.id", "fields.unli.premise", "fields.unli.hypothesis", "fields.unli.score",
        "fields.task.id", "fields.task.premise", "fields.task.hypothesis", "fields.task.text", "fields.task.label",
        "build.output",
        "model.hash_dim", "model.hidden", "model.ngrams", "model.hash_seed",
        "train.corpus", "train.pretrain_corpus", "train.init_model", "train.model_out", "train.epochs",
        "train.pretrain_epochs", "train.batch_size", "train.learning_rate", "train.optimizer", "train.target_mode",
        "eval.model", "eval.predictions", "eval.corpus", "eval.format", "eval.name", "eval.compare_model",
        "eval.compare_predictions", "eval.bin_edges",
        "crossval.corpus", "crossval.format", "crossval.k", "crossval.modes", "crossval.base_model",
        "transfer.task", "transfer.soft_model", "transfer.gold_model", "transfer.data", "transfer.train",
        "transfer.dev", "transfer.test", "transfer.split", "transfer.head_layers", "transfer.head_hidden",
        "transfer.patience", "transfer.max_epochs", "transfer.trials", "transfer.learning_rate",
        "transfer.batch_size",
        "synth.n_train", "synth.n_eval", "synth.n_unli", "synth.n_task", "synth.cue_words", "synth.noise_words",
        "synth.flip_rate", "synth.neutral_bias", "synth.cue_scale", "synth.annotators",
    };
    return keys;
}

/// Keys whose names are free-form (one holdout file per key).
inline const std::vector<std::string>& known_config_prefixes() {
    static const std::vector<std::string> prefixes{"holdout."};
    return prefixes;
}

inline std::uint64_t global_seed(const KeyValueConfig& cfg) { return cfg.get_uint("seed", 0); }

inline TargetMode parse_target_mode(const std::string& s) {
    if (s == "ambiguity" || s == "soft") return TargetMode::Ambiguity;
    if (s == "gold" || s == "onehot") return TargetMode::GoldOneHot;
    throw Error(ErrorKind::InvalidConfig, "unknown target mode '" + s + "'");
}

inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "momentum") return OptimizerKind::SgdMomentum;
    if (s == "adam") return OptimizerKind::Adam;
    throw Error(ErrorKind::InvalidConfig, "unknown optimizer '" + s + "'");
}

inline FeatureConfig feature_config(const KeyValueConfig& cfg) {
    FeatureConfig f;
    f.hash_dim = cfg.get_uint("model.hash_dim", f.hash_dim);
    f.hash_seed = cfg.get_uint("model.hash_seed", f.hash_seed);
    const auto ngrams = cfg.get_list("model.ngrams", {"1", "2"});
    f.unigrams = f.bigrams = false;
    for (const auto& n : ngrams) {
        if (n == "1") f.unigrams = true;
        else if (n == "2") f.bigrams = true;
        else throw Error(ErrorKind::InvalidConfig, "model.ngrams accepts 1 and 2");
    }
    f.validate();
    return f;
}

inline TrainConfig train_config(const KeyValueConfig& cfg) {
    TrainConfig t;
    t.features = feature_config(cfg);
    t.hidden = cfg.get_uint("model.hidden", t.hidden);
    t.batch_size = cfg.get_uint("train.batch_size", t.batch_size);
    t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
    t.epochs = cfg.get_uint("train.epochs", t.epochs);
    t.pretrain_epochs = cfg.get_uint("train.pretrain_epochs", t.pretrain_epochs);
    t.optimizer = parse_optimizer(cfg.get("train.optimizer", "adam"));
    t.target_mode = parse_target_mode(cfg.get("train.target_mode", "ambiguity"));
    t.seed = derive_seed(global_seed(cfg), "train");
    t.validate();
    return t;
}

inline ConversionConfig conversion_config(const KeyValueConfig& cfg) {
    ConversionConfig c;
    c.unli_low_cut = cfg.get_double("convert.unli_low_cut", c.unli_low_cut);
    c.unli_high_cut = cfg.get_double("convert.unli_high_cut", c.unli_high_cut);
    c.filter_unli = cfg.get_bool("convert.filter_unli", c.filter_unli);
    c.target_mode = parse_target_mode(cfg.get("convert.target_mode", "ambiguity"));
    if (cfg.has("convert.include_sources")) {
        c.include_sources.clear();
        for (const auto& s : cfg.get_list("convert.include_sources")) {
            const auto src = parse_source(s);
            if (!src) throw Error(ErrorKind::InvalidConfig, "unknown source '" + s + "'");
            c.include_sources.insert(*src);
        }
    }
    const auto key = cfg.get("convert.dedup_key", "uid");
    if (key == "uid") c.dedup_key = DedupKey::Uid;
    else if (key == "text") c.dedup_key = DedupKey::PremiseHypothesisText;
    else throw Error(ErrorKind::InvalidConfig, "convert.dedup_key must be uid or text");
    c.validate();
    return c;
}

inline MultilabelFields multilabel_fields(const KeyValueConfig& cfg) {
    MultilabelFields f;
    f.uid = cfg.get("fields.multilabel.uid", f.uid);
    f.premise = cfg.get("fields.multilabel.premise", f.premise);
    f.hypothesis = cfg.get("fields.multilabel.hypothesis", f.hypothesis);
    f.annotator_labels = cfg.get("fields.multilabel.annotator_labels", f.annotator_labels);
    f.gold = cfg.get("fields.multilabel.gold", f.gold);
    return f;
}

inline ChaosFields chaos_fields(const KeyValueConfig& cfg) {
    ChaosFields f;
    f.uid = cfg.get("fields.chaos.uid", f.uid);
    f.counter = cfg.get("fields.chaos.counter", f.counter);
    f.majority = cfg.get("fields.chaos.majority", f.majority);
    f.premise = cfg.get("fields.chaos.premise", f.premise);
    f.hypothesis = cfg.get("fields.chaos.hypothesis", f.hypothesis);
    f.expected_total = cfg.get_uint("fields.chaos.expected_total", f.expected_total);
    return f;
}

inline UnliColumns unli_columns(const KeyValueConfig& cfg) {
    UnliColumns c;
    c.id = cfg.get("fields.unli.id", c.id);
    c.premise = cfg.get("fields.unli.premise", c.premise);
    c.hypothesis = cfg.get("fields.unli.hypothesis", c.hypothesis);
    c.score = cfg.get("fields.unli.score", c.score);
    return c;
}

inline TransferConfig transfer_config(const KeyValueConfig& cfg) {
    TransferConfig t;
    const auto task = cfg.get("transfer.task", "regression");
    if (task == "regression") t.task = TransferTask::Regression01;
    else if (task == "binary") t.task = TransferTask::BinaryClassification;
    else throw Error(ErrorKind::InvalidConfig, "transfer.task must be regression or binary");
    t.head_layers.clear();
    for (const auto& l : cfg.get_list("transfer.head_layers", {"1", "2"})) {
        if (l != "1" && l != "2") throw Error(ErrorKind::InvalidConfig, "transfer.head_layers accepts 1 and 2");
        t.head_layers.push_back(l == "1" ? 1 : 2);
    }
    t.head_hidden = cfg.get_uint("transfer.head_hidden", t.head_hidden);
    const auto split = cfg.get_doubles("transfer.split", {0.8, 0.1, 0.1});
    if (split.size() != 3) throw Error(ErrorKind::InvalidConfig, "transfer.split needs three fractions");
    t.split = {split[0], split[1], split[2]};
    t.patience = cfg.get_uint("transfer.patience", t.patience);
    t.max_epochs = cfg.get_uint("transfer.max_epochs", t.max_epochs);
    t.trials = cfg.get_uint("transfer.trials", t.trials);
    t.learning_rate = cfg.get_double("transfer.learning_rate", t.learning_rate);
    t.batch_size = cfg.get_uint("transfer.batch_size", t.batch_size);
    t.base_seed = derive_seed(global_seed(cfg), "transfer");
    t.validate();
    return t;
}

inline PlantedConfig planted_config(const KeyValueConfig& cfg) {
    PlantedConfig p;
    p.cue_words = cfg.get_uint("synth.cue_words", p.cue_words);
    p.noise_words = cfg.get_uint("synth.noise_words", p.noise_words);
    p.flip_rate = cfg.get_double("synth.flip_rate", p.flip_rate);
    p.neutral_bias = cfg.get_double("synth.neutral_bias", p.neutral_bias);
    p.cue_scale = cfg.get_double("synth.cue_scale", p.cue_scale);
    p.annotators = cfg.get_uint("synth.annotators", p.annotators);
    return p;
}

} // namespace ambinli
