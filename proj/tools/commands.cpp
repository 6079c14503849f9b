#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <ambinli/ambinli.hpp>

namespace fs = std::filesystem;

namespace ambinli::cli {
namespace {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open input file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Tracks inputs and outputs of one command and writes its manifest.
class Run {
public:
    /// `tag` distinguishes repeated runs of one command in the same output_dir.
    Run(std::string command, const KeyValueConfig& cfg, std::string tag = {})
        : command_(std::move(command)), tag_(std::move(tag)), cfg_(cfg), start_(std::chrono::steady_clock::now()) {
        out_dir_ = cfg.require("output_dir");
        std::error_code ec;
        fs::create_directories(out_dir_, ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + out_dir_.string() + "'");
    }

    /// Reads an input file and records its content hash.
    std::string input(const std::string& path) {
        auto bytes = read_file(path);
        inputs_[path] = sha256_hex(bytes);
        return bytes;
    }

    std::istringstream input_stream(const std::string& path) { return std::istringstream(input(path)); }

    void output(const std::string& name, const std::string& bytes) {
        const auto path = out_dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
            throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
        outputs_[name] = sha256_hex(bytes);
    }

    void output_json(const std::string& name, const ordered_json& j) { output(name, j.dump(2) + "\n"); }

    void finish() {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        ordered_json config = ordered_json::object();
        for (const auto& [k, v] : cfg_.values()) config[k] = v;
        ordered_json manifest{{"command", command_},
                              {"config_hash", sha256_hex(cfg_.dump())},
                              {"config", config},
                              {"seed", global_seed(cfg_)},
                              {"inputs", inputs_},
                              {"outputs", outputs_},
                              {"wall_time_seconds", seconds}};
        const auto path = out_dir_ / (command_ + (tag_.empty() ? "" : "_" + tag_) + "_manifest.json");
        std::ofstream out(path, std::ios::trunc);
        if (!(out << manifest.dump(2) << '\n')) throw Error(ErrorKind::Io, "cannot write manifest");
    }

private:
    std::string command_;
    std::string tag_;
    const KeyValueConfig& cfg_;
    fs::path out_dir_;
    std::chrono::steady_clock::time_point start_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

std::string corpus_bytes(const Corpus& corpus) {
    std::ostringstream os;
    write_canonical(os, corpus);
    return os.str();
}

ordered_json parse_errors_json(const std::string& file, const ParseResult& r) {
    ordered_json errs = ordered_json::array();
    for (std::size_t i = 0; i < r.errors.size() && i < 100; ++i)
        errs.push_back({{"file", file},
                        {"line", r.errors[i].line},
                        {"kind", std::string(to_string(r.errors[i].kind))},
                        {"cause", r.errors[i].cause}});
    return errs;
}

void warn_parse_errors(const std::string& file, const ParseResult& r) {
    if (!r.errors.empty())
        std::cerr << "warning: " << file << ": " << r.errors.size() << " of " << r.lines << " records rejected\n";
}

ClassifierModel load_model_file(Run& run, const std::string& path) {
    std::istringstream in(run.input(path));
    return load_model(in);
}

/// Evaluation targets: ChaosNLI-style JSONL (default) or a canonical corpus.
Corpus load_targets(Run& run, const KeyValueConfig& cfg, const std::string& path_key, const std::string& format_key) {
    const auto path = cfg.require(path_key);
    auto in = run.input_stream(path);
    const auto format = cfg.get(format_key, "chaos");
    if (format == "canonical") return read_canonical(in, fs::path(path).stem().string());
    if (format != "chaos") throw Error(ErrorKind::InvalidConfig, format_key + " must be chaos or canonical");
    auto parsed = parse_chaos_jsonl(in, chaos_fields(cfg));
    enforce_error_budget(parsed, cfg.get_double("ingest.max_error_rate", kMaxMalformedRate));
    warn_parse_errors(path, parsed);
    parsed.corpus.set_name(fs::path(path).stem().string());
    return std::move(parsed.corpus);
}

std::string predictions_bytes(const std::vector<Prediction>& preds) {
    std::string out;
    for (const auto& p : preds) {
        out += "{\"uid\":" + nlohmann::json(p.uid).dump() + ",\"dist\":";
        detail::append_triple(out, p.dist.e(), p.dist.n(), p.dist.c());
        out += ",\"label\":\"" + std::string(to_string(p.label)) + "\"}\n";
    }
    return out;
}

std::vector<Prediction> read_predictions(Run& run, const std::string& path) {
    auto in = run.input_stream(path);
    std::vector<Prediction> preds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_blank(line)) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto& d = j.at("dist");
            LabelDistribution dist(d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>());
            preds.push_back({j.at("uid").get<std::string>(), dist, to_gold(argmax(dist))});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::MalformedLine, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return preds;
}

std::vector<Prediction> primary_predictions(Run& run, const KeyValueConfig& cfg, const Corpus& targets) {
    if (auto p = cfg.find("eval.predictions")) return read_predictions(run, *p);
    return predict(load_model_file(run, cfg.require("eval.model")), targets);
}

std::vector<TaskExample> read_task_csv(Run& run, const KeyValueConfig& cfg, const std::string& path, TransferTask task) {
    auto in = run.input_stream(path);
    std::vector<std::string> row;
    std::size_t physical = 0, record_line = 0;
    if (!detail::read_csv_record(in, row, physical, record_line))
        throw Error(ErrorKind::EmptyInput, "'" + path + "' has no header");
    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < row.size(); ++i)
            if (row[i] == name) return i;
        return std::nullopt;
    };
    auto need = [&](const std::string& name) {
        if (auto c = find_col(name)) return *c;
        throw Error(ErrorKind::MissingColumn, "'" + path + "' has no column '" + name + "'");
    };
    const auto id = need(cfg.get("fields.task.id", "id"));
    const auto label =
        need(cfg.get("fields.task.label", task == TransferTask::Regression01 ? "score" : "label"));
    auto premise = find_col(cfg.get("fields.task.premise", "premise"));
    auto hypothesis = find_col(cfg.get("fields.task.hypothesis", "hypothesis"));
    if (!premise || !hypothesis) {
        // single-text task: the text fills both sides of the pair encoder
        premise = hypothesis = need(cfg.get("fields.task.text", "text"));
    }
    const auto width = row.size();
    std::vector<TaskExample> out;
    while (detail::read_csv_record(in, row, physical, record_line)) {
        if (row.size() == 1 && detail::is_blank(row[0])) continue;
        if (row.size() != width)
            throw Error(ErrorKind::MalformedLine, path + ":" + std::to_string(record_line) + ": wrong field count");
        char* end = nullptr;
        const double y = std::strtod(row[label].c_str(), &end);
        if (row[label].empty() || end != row[label].c_str() + row[label].size())
            throw Error(ErrorKind::LabelTypeMismatch, path + ":" + std::to_string(record_line) + ": bad label");
        out.push_back({row[id], row[*premise], row[*hypothesis], y});
    }
    return out;
}

std::string bin_text(const EvalReport& report) {
    return to_text(*report.entropy_bins, &report);
}

} // namespace

void cmd_build(const KeyValueConfig& cfg) {
    Run run("build", cfg);
    const auto conv = conversion_config(cfg);
    const double max_rate = cfg.get_double("ingest.max_error_rate", kMaxMalformedRate);
    ordered_json errors = ordered_json::array();

    std::vector<Corpus> sources;
    const std::vector<std::pair<std::string, Source>> multilabel{{"input.snli", Source::SnliOriginal},
                                                                 {"input.mnli", Source::MnliOriginal}};
    for (const auto& [key, source] : multilabel) {
        const auto path = cfg.find(key);
        if (!path) continue;
        auto in = run.input_stream(*path);
        auto parsed = parse_multilabel_jsonl(in, source, multilabel_fields(cfg));
        enforce_error_budget(parsed, max_rate);
        warn_parse_errors(*path, parsed);
        for (auto& e : parse_errors_json(*path, parsed)) errors.push_back(e);
        parsed.corpus.set_source_path(source, *path);
        sources.push_back(std::move(parsed.corpus));
    }
    if (const auto path = cfg.find("input.unli")) {
        auto in = run.input_stream(*path);
        auto parsed = parse_unli_csv(in, unli_columns(cfg));
        enforce_error_budget(parsed, max_rate);
        warn_parse_errors(*path, parsed);
        for (auto& e : parse_errors_json(*path, parsed)) errors.push_back(e);
        parsed.corpus.set_source_path(Source::Unli, *path);
        sources.push_back(std::move(parsed.corpus));
    }
    if (sources.empty()) throw Error(ErrorKind::InvalidConfig, "no input.snli, input.mnli or input.unli given");

    std::vector<Corpus> holdouts;
    for (const auto& [key, path] : cfg.values()) {
        if (!key.starts_with("holdout.") || path.empty()) continue;
        auto in = run.input_stream(path);
        auto parsed = parse_chaos_jsonl(in, chaos_fields(cfg));
        enforce_error_budget(parsed, max_rate);
        warn_parse_errors(path, parsed);
        for (auto& e : parse_errors_json(path, parsed)) errors.push_back(e);
        holdouts.push_back(std::move(parsed.corpus));
    }

    const auto result = build_ambinli(sources, holdouts, conv);
    run.output(cfg.get("build.output", "corpus.jsonl"), corpus_bytes(result.corpus));
    auto report = to_json(result);
    report["target_mode"] = std::string(to_string(conv.target_mode));
    report["filter_unli"] = conv.filter_unli;
    report["parse_errors"] = errors;
    run.output_json("build_report.json", report);
    run.output("build_report.txt", to_text(result));
    std::cout << to_text(result);
    run.finish();
}

void cmd_train(const KeyValueConfig& cfg) {
    const auto model_out = cfg.get("train.model_out", "model.bin");
    const auto stem = fs::path(model_out).stem().string();
    Run run("train", cfg, stem);
    const auto tcfg = train_config(cfg);
    auto corpus_in = run.input_stream(cfg.require("train.corpus"));
    const auto corpus = read_canonical(corpus_in, "train");
    std::optional<Corpus> pretrain;
    if (auto p = cfg.find("train.pretrain_corpus")) {
        auto in = run.input_stream(*p);
        pretrain = read_canonical(in, "pretrain");
    }
    std::optional<ClassifierModel> init;
    if (auto p = cfg.find("train.init_model")) init = load_model_file(run, *p);

    const auto result = train(tcfg, corpus, pretrain ? &*pretrain : nullptr, init ? &*init : nullptr);

    std::ostringstream model_bytes;
    save_model(model_bytes, result.model);
    run.output(model_out, model_bytes.str());
    std::ostringstream history;
    write_history_csv(history, result.history);
    run.output(stem + "_loss_history.csv", history.str());
    ordered_json report{{"examples", corpus.size()},
                        {"target_mode", std::string(to_string(tcfg.target_mode))},
                        {"skipped_no_majority", result.skipped_no_majority},
                        {"epochs", tcfg.epochs},
                        {"pretrain_epochs", pretrain ? tcfg.pretrain_epochs : 0}};
    if (!result.history.empty())
        report["final"] = {{"loss", result.history.back().loss}, {"accuracy", result.history.back().accuracy}};
    run.output_json(stem + "_train_report.json", report);
    if (!result.history.empty())
        std::cout << "trained " << result.history.size() << " epochs, final loss "
                  << fixed(result.history.back().loss) << "\n";
    run.finish();
}

void cmd_eval(const KeyValueConfig& cfg) {
    Run run("eval", cfg, cfg.get("eval.name", "eval"));
    const auto targets = load_targets(run, cfg, "eval.corpus", "eval.format");
    const auto preds = primary_predictions(run, cfg, targets);
    auto report = evaluate(preds, targets, cfg.get("eval.name", targets.name()));
    report.entropy_bins = entropy_bins(report.per_example,
                                       cfg.get_doubles("eval.bin_edges", {kDefaultBinEdges.begin(), kDefaultBinEdges.end()}));
    const auto name = cfg.get("eval.name", "eval");
    run.output_json(name + "_report.json", to_json(report));
    run.output(name + "_report.txt", to_text(report));
    run.output(name + "_predictions.jsonl", predictions_bytes(preds));
    std::cout << to_text(report);

    std::optional<std::vector<Prediction>> other;
    if (auto p = cfg.find("eval.compare_predictions")) other = read_predictions(run, *p);
    else if (auto m = cfg.find("eval.compare_model")) other = predict(load_model_file(run, *m), targets);
    if (other) {
        const auto diff = prediction_diff_report(preds, *other, targets);
        run.output_json(name + "_diff_report.json", to_json(diff));
        std::ostringstream a, b, whole;
        write_histogram_csv(a, diff.only_a_correct);
        write_histogram_csv(b, diff.only_b_correct);
        write_histogram_csv(whole, diff.whole);
        run.output(name + "_only_a_correct.csv", a.str());
        run.output(name + "_only_b_correct.csv", b.str());
        run.output(name + "_whole_labels.csv", whole.str());
    }
    run.finish();
}

void cmd_bins(const KeyValueConfig& cfg) {
    Run run("bins", cfg, cfg.get("eval.name", "eval"));
    const auto targets = load_targets(run, cfg, "eval.corpus", "eval.format");
    const auto preds = primary_predictions(run, cfg, targets);
    auto report = evaluate(preds, targets, cfg.get("eval.name", targets.name()));
    report.entropy_bins = entropy_bins(report.per_example,
                                       cfg.get_doubles("eval.bin_edges", {kDefaultBinEdges.begin(), kDefaultBinEdges.end()}));
    const auto name = cfg.get("eval.name", "eval");
    ordered_json j = to_json(*report.entropy_bins);
    j["full_range"] = {{"count", report.n_examples}, {"mean_jsd", report.mean_jsd}, {"accuracy", report.accuracy}};
    run.output_json(name + "_bins.json", j);
    run.output(name + "_bins.txt", bin_text(report));
    std::cout << bin_text(report);
    run.finish();
}

void cmd_crossval(const KeyValueConfig& cfg) {
    Run run("crossval", cfg);
    auto tcfg = train_config(cfg);
    tcfg.seed = derive_seed(global_seed(cfg), "crossval");
    const auto corpus = load_targets(run, cfg, "crossval.corpus", "crossval.format");
    std::vector<TargetMode> modes;
    for (const auto& m : cfg.get_list("crossval.modes", {"ambiguity", "gold"})) modes.push_back(parse_target_mode(m));
    std::optional<ClassifierModel> base;
    if (auto p = cfg.find("crossval.base_model")) base = load_model_file(run, *p);
    const auto report = crossval(corpus, tcfg, cfg.get_uint("crossval.k", 3), modes, base ? &*base : nullptr);
    run.output_json("crossval_report.json", to_json(report));
    run.output("crossval_report.txt", to_text(report));
    std::cout << to_text(report);
    run.finish();
}

void cmd_transfer(const KeyValueConfig& cfg) {
    Run run("transfer", cfg);
    const auto tcfg = transfer_config(cfg);
    const auto soft = load_model_file(run, cfg.require("transfer.soft_model"));
    const auto gold = load_model_file(run, cfg.require("transfer.gold_model"));
    TaskData data;
    if (auto p = cfg.find("transfer.data")) {
        data = split_task(read_task_csv(run, cfg, *p, tcfg.task), tcfg.split, tcfg.base_seed);
    } else {
        data.train = read_task_csv(run, cfg, cfg.require("transfer.train"), tcfg.task);
        data.dev = read_task_csv(run, cfg, cfg.require("transfer.dev"), tcfg.task);
        data.test = read_task_csv(run, cfg, cfg.require("transfer.test"), tcfg.task);
    }
    const auto table = run_trials(tcfg, data, {{"ambiguity", &soft}, {"gold", &gold}});
    std::ostringstream csv;
    write_transfer_csv(csv, table);
    run.output("transfer_table.csv", csv.str());
    run.output("transfer_table.txt", to_text(table));
    run.output_json("transfer_report.json", to_json(table));
    std::cout << to_text(table);
    run.finish();
}

void cmd_synth(const KeyValueConfig& cfg) {
    Run run("synth", cfg);
    const auto pcfg = planted_config(cfg);
    const auto seed = derive_seed(global_seed(cfg), "synth");
    const auto world = make_world(pcfg, seed);
    const auto snli = generate_planted(world, cfg.get_uint("synth.n_train", 600), seed, Source::SnliOriginal, "snli");
    const auto mnli = generate_planted(world, cfg.get_uint("synth.n_train", 600), seed, Source::MnliOriginal, "mnli");
    const auto chaos = generate_planted(world, cfg.get_uint("synth.n_eval", 300), seed, Source::Chaos, "chaos");
    const auto unli = generate_planted(world, cfg.get_uint("synth.n_unli", 300), seed, Source::Unli, "unli");
    const auto task = generate_planted(world, cfg.get_uint("synth.n_task", 400), seed, Source::SnliOriginal, "task");

    auto multilabel_line = [](const AnnotatedExample& ex, GoldLabel gold) {
        ordered_json labels = ordered_json::array();
        for (Label l : kLabels)
            for (std::uint64_t i = 0; i < (*ex.annotator_counts)[l]; ++i) labels.push_back(std::string(to_string(l)));
        return ordered_json{{"pairID", ex.uid},
                            {"sentence1", ex.premise},
                            {"sentence2", ex.hypothesis},
                            {"annotator_labels", labels},
                            {"gold_label", std::string(to_string(gold))}}
                   .dump() +
               "\n";
    };
    auto multilabel_file = [&](const PlantedSet& set) {
        std::string out;
        for (const auto& ex : set.corpus) out += multilabel_line(ex, *ex.gold);
        return out;
    };
    // the evaluation pairs also appear in the SNLI-style file so build has something to dedup
    std::string snli_bytes = multilabel_file(snli);
    for (const auto& ex : chaos.corpus) snli_bytes += multilabel_line(ex, majority_label(*ex.annotator_counts));
    run.output("synth_snli.jsonl", snli_bytes);
    run.output("synth_mnli.jsonl", multilabel_file(mnli));

    std::string chaos_bytes;
    for (const auto& ex : chaos.corpus) {
        const auto& c = *ex.annotator_counts;
        const auto majority = majority_label(c);
        const Label stated = to_label(majority).value_or(argmax(normalize(c)));
        chaos_bytes += ordered_json{{"uid", ex.uid},
                                    {"label_counter", {{"e", c.e}, {"n", c.n}, {"c", c.c}}},
                                    {"majority_label", std::string(1, to_string(stated)[0])},
                                    {"example", {{"uid", ex.uid}, {"premise", ex.premise}, {"hypothesis", ex.hypothesis}}}}
                           .dump() +
                       "\n";
    }
    run.output("synth_chaos.jsonl", chaos_bytes);

    std::string unli_bytes = "id,pre,hyp,unli\n";
    for (std::size_t i = 0; i < unli.corpus.size(); ++i) {
        const auto& ex = unli.corpus[i];
        std::string score;
        detail::append_double(score, unli_score(unli.truth[i]));
        unli_bytes += ex.uid + "," + ex.premise + "," + ex.hypothesis + "," + score + "\n";
    }
    run.output("synth_unli.csv", unli_bytes);

    std::string reg = "id,premise,hypothesis,score\n";
    for (const auto& t : planted_regression_task(task)) {
        std::string score;
        detail::append_double(score, t.label);
        reg += t.id + "," + t.premise + "," + t.hypothesis + "," + score + "\n";
    }
    run.output("synth_task_regression.csv", reg);
    std::string bin = "id,text,label\n";
    for (const auto& t : planted_binary_task(task))
        bin += t.id + "," + t.premise + " " + t.hypothesis + "," + (t.label > 0.5 ? "1" : "0") + "\n";
    run.output("synth_task_binary.csv", bin);
    std::cout << "wrote synthetic data to " << cfg.require("output_dir") << "\n";
    run.finish();
}

} // namespace ambinli::cli
