#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <ambinli/error.hpp>
#include <ambinli/run_config.hpp>

#include "commands.hpp"

namespace {

int exit_code_for(ambinli::ErrorKind kind) {
    using ambinli::ErrorKind;
    switch (kind) {
    case ErrorKind::InvalidConfig: return ambinli::cli::kExitUsage;
    case ErrorKind::Io: return ambinli::cli::kExitIo;
    default: return ambinli::cli::kExitData;
    }
}

} // namespace

int main(int argc, char** argv) {
    using namespace ambinli;
    CLI::App app{"Ambiguity-distribution NLI toolkit: build corpora, train, evaluate, transfer"};
    app.require_subcommand(1);

    struct Options {
        std::string config_path;
        std::vector<std::string> overrides;
    };
    std::map<std::string, Options> options;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"build", "Build a training corpus from source files"},
        {"train", "Train a classifier (optional gold pretraining, then soft or gold targets)"},
        {"eval", "Score predictions against human label distributions"},
        {"bins", "Break evaluation down by target-entropy range"},
        {"crossval", "k-fold cross-validation comparing target modes"},
        {"transfer", "Frozen-encoder transfer probe with fresh heads"},
        {"synth", "Write planted synthetic data in every input format"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        auto& opt = options[name];
        sub->add_option("--config", opt.config_path, "Key-value config file")->required();
        sub->add_option("--set", opt.overrides, "Override a config entry: key=value")->take_all();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const auto& opt = options[name];
    try {
        std::ifstream in(opt.config_path);
        if (!in) throw Error(ErrorKind::Io, "cannot open config file '" + opt.config_path + "'");
        auto cfg = KeyValueConfig::parse(in);
        for (const auto& o : opt.overrides) cfg.assign(o);
        cfg.check_known(known_config_keys(), known_config_prefixes());

        static const std::map<std::string, std::function<void(const KeyValueConfig&)>> dispatch{
            {"build", cli::cmd_build},       {"train", cli::cmd_train},         {"eval", cli::cmd_eval},
            {"bins", cli::cmd_bins},         {"crossval", cli::cmd_crossval},   {"transfer", cli::cmd_transfer},
            {"synth", cli::cmd_synth},
        };
        dispatch.at(name)(cfg);
    } catch (const Error& e) {
        std::cerr << "ambinli " << name << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "ambinli " << name << ": " << e.what() << '\n';
        return cli::kExitData;
    }
    return cli::kExitOk;
}
