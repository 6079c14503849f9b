// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <ambinli/ambinli.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace ambinli;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and thresholds.
constexpr int kRandomCases = 1000;
constexpr double kMathSeconds = 10.0;
constexpr double kContinuityGap = 1e-12;
constexpr std::size_t kGradConfigs = 10;
constexpr double kGradRelError = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 30.0;
constexpr int kDirectionalSeeds = 10;
constexpr int kJsdWinsNeeded = 9;
constexpr double kJsdSeconds = 120.0;
constexpr int kCvWinsNeeded = 8;
constexpr int kTransferWinsNeeded = 8;
constexpr double kAffineTolerance = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s  %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), s);
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Random point on the simplex; about a third have one or two exact zeros.
LabelDistribution random_dist(Rng& rng) {
    std::array<double, 3> w{};
    for (double& x : w) x = -std::log(1.0 - rng.uniform());
    const auto zeros = rng.below(3);
    for (std::uint64_t z = 0; z < zeros && z < 2; ++z) w[rng.below(3)] = 0.0;
    if (w[0] + w[1] + w[2] == 0.0) w[rng.below(3)] = 1.0;
    const double s = w[0] + w[1] + w[2];
    return LabelDistribution(w[0] / s, w[1] / s, w[2] / s);
}

Outcome math_invariants() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240101);
    const double log3 = std::log2(3.0);
    int bad = 0;
    std::string first;
    auto fail = [&](const char* what) {
        if (bad++ == 0) first = what;
    };
    for (int i = 0; i < kRandomCases; ++i) {
        const auto p = random_dist(rng);
        const auto q = random_dist(rng);
        double sum = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            if (p[k] < 0.0) fail("simplex: negative");
            sum += p[k];
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance) fail("simplex: sum");
        const double j = jsd(p, q);
        if (j != jsd(q, p)) fail("jsd symmetry");
        if (!(j >= 0.0 && j <= 1.0)) fail("jsd bounds");
        if (jsd(p, p) != 0.0) fail("jsd identity");
        const double h = entropy(p);
        if (!(h >= 0.0 && h <= log3 + 1e-12)) fail("entropy bounds");
        // Gibbs: cross-entropy H(p, q) >= H(p), i.e. KL(p||q) >= 0
        const double d = kl(p, q);
        if (!(d >= 0.0)) fail("gibbs");
        if (kl(p, p) != 0.0) fail("kl identity");
        // KL edge cases: unsupported target mass gives +inf, zero target mass is ignored
        bool unsupported = false;
        for (std::size_t k = 0; k < 3; ++k) unsupported = unsupported || (p[k] > 0.0 && q[k] == 0.0);
        if (unsupported != std::isinf(d)) fail("kl support");
    }
    if (kl(LabelDistribution(1, 0, 0), LabelDistribution(0.5, 0.5, 0)) != 1.0) fail("kl one-hot");
    if (std::abs(entropy(LabelDistribution::uniform()) - log3) > 1e-15) fail("entropy uniform");
    const double s = seconds_since(t0);
    if (s >= kMathSeconds) fail("runtime");
    return {bad == 0, std::to_string(kRandomCases) + " cases x 9 properties" + (bad ? ", first failure: " + first : "")};
}

Outcome conversion_exactness() {
    const std::array<std::pair<double, LabelDistribution>, 5> exact{{{0.0, {0, 0, 1}},
                                                                     {0.25, {0, 0.5, 0.5}},
                                                                     {0.5, {0, 1, 0}},
                                                                     {0.75, {0.5, 0.5, 0}},
                                                                     {1.0, {1, 0, 0}}}};
    for (const auto& [p, d] : exact)
        if (!(unli_to_distribution(p) == d)) return {false, "mismatch at p=" + std::to_string(p)};
    const auto lo = unli_to_distribution(std::nextafter(0.5, 0.0));
    const auto hi = unli_to_distribution(0.5);
    double gap = 0.0;
    for (std::size_t k = 0; k < 3; ++k) gap = std::max(gap, std::abs(lo[k] - hi[k]));
    if (gap >= kContinuityGap) return {false, "discontinuous at 0.5"};

    // 1000-sample sweep: grid points including both cut points exactly
    Corpus sweep("sweep");
    std::size_t expected_removed = 0;
    for (int i = 0; i < 1000; ++i) {
        const double p = i / 999.0;
        sweep.add({"u" + std::to_string(i), "p", "h", Source::Unli, {}, p, {}, {}});
        if (p < 0.05 || p > 0.97) ++expected_removed;
    }
    sweep.add({"cut-lo", "p", "h", Source::Unli, {}, 0.05, {}, {}});
    sweep.add({"cut-hi", "p", "h", Source::Unli, {}, 0.97, {}, {}});
    const auto r = filter_extreme_unli(sweep, ConversionConfig{});
    bool exact_set = r.removed == expected_removed && r.corpus.contains("cut-lo") && r.corpus.contains("cut-hi");
    for (const auto& ex : r.corpus) exact_set = exact_set && *ex.regression_p >= 0.05 && *ex.regression_p <= 0.97;
    char buf[160];
    std::snprintf(buf, sizeof buf, "5 anchor points exact, gap at 0.5 %.1e, sweep removed %zu/%zu", gap, r.removed,
                  sweep.size());
    return {exact_set, buf};
}

Outcome gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    const char* texts[][2] = {{"a dog runs", "an animal moves"}, {"two men play chess", "people play"},
                              {"the sky is blue", "it rains"}, {"a cat sleeps on a mat", "a cat is awake"}};
    double worst = 0.0;
    std::size_t configs = 0;
    for (std::uint64_t seed = 0; configs < kGradConfigs + 2; ++seed, ++configs) {
        FeatureConfig f;
        f.hash_dim = 1024;
        auto m = init_model(f, 2 + seed % 6, 1000 + seed);
        Rng rng(seed);
        for (double& b : m.params.b1) b = rng.uniform(-0.5, 0.5);
        for (double& b : m.params.b2) b = rng.uniform(-0.5, 0.5);
        std::vector<Sample> batch;
        for (std::size_t i = 0; i < 1 + seed % 4; ++i) {
            const auto& t = texts[rng.below(4)];
            batch.push_back({featurize(t[0], t[1], f), random_dist(rng)});
        }
        Parameters grad, scratch;
        loss_and_grad(m, std::span<const Sample>(batch), grad);
        auto params = m.params.blocks();
        auto grads = grad.blocks();
        for (std::size_t b = 0; b < 4; ++b) {
            for (std::size_t i = 0; i < params[b].size(); ++i) {
                if (b == 0) {
                    const auto row = static_cast<std::uint32_t>(i / m.params.hidden);
                    bool used = false;
                    for (const auto& s : batch) used = used || s.x.at(row) != 0.0;
                    if (!used) continue;
                }
                const double saved = params[b][i];
                params[b][i] = saved + kGradStep;
                const double up = loss_and_grad(m, std::span<const Sample>(batch), scratch);
                params[b][i] = saved - kGradStep;
                const double down = loss_and_grad(m, std::span<const Sample>(batch), scratch);
                params[b][i] = saved;
                const double numeric = (up - down) / (2.0 * kGradStep);
                worst = std::max(worst, std::abs(numeric - grads[b][i]) /
                                            std::max(std::abs(numeric) + std::abs(grads[b][i]), 1e-6));
            }
        }
    }
    const double s = seconds_since(t0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu configs, max rel. error %.2e (< %.0e)", configs, worst, kGradRelError);
    return {worst < kGradRelError && configs >= kGradConfigs && s < kGradSeconds, buf};
}

TrainConfig planted_train_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.features.hash_dim = 4096;
    cfg.hidden = 32;
    cfg.batch_size = 32;
    cfg.learning_rate = 0.01;
    cfg.epochs = 10;
    cfg.seed = seed;
    return cfg;
}

struct SeedWorld {
    PlantedWorld world;
    PlantedSet train;
    PlantedSet test;
};

SeedWorld planted(std::uint64_t seed) {
    auto world = make_world(PlantedConfig{}, seed);
    auto train_set = generate_planted(world, 1500, seed, Source::SnliOriginal, "train");
    auto test_set = generate_planted(world, 500, seed, Source::Chaos, "test");
    return {std::move(world), std::move(train_set), std::move(test_set)};
}

std::string wins_detail(int wins, const std::string& what) {
    return std::to_string(wins) + "/" + std::to_string(kDirectionalSeeds) + " seeds " + what;
}

Outcome jsd_directional() {
    const auto t0 = std::chrono::steady_clock::now();
    int wins = 0;
    for (int s = 0; s < kDirectionalSeeds; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const auto w = planted(seed);
        std::array<double, 2> mean_jsd{};
        for (int m = 0; m < 2; ++m) {
            auto cfg = planted_train_config(seed);
            cfg.target_mode = m == 0 ? TargetMode::Ambiguity : TargetMode::GoldOneHot;
            const auto preds = predict(train(cfg, w.train.corpus).model, w.test.corpus);
            for (std::size_t i = 0; i < preds.size(); ++i) mean_jsd[m] += jsd(w.test.truth[i], preds[i].dist);
        }
        if (mean_jsd[0] < mean_jsd[1]) ++wins;
    }
    const double secs = seconds_since(t0);
    return {wins >= kJsdWinsNeeded && secs < kJsdSeconds, wins_detail(wins, "soft JSD < gold JSD")};
}

Outcome cv_directional() {
    int wins = 0;
    for (int s = 0; s < kDirectionalSeeds; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const auto w = planted(seed);
        const auto r = crossval(w.train.corpus, planted_train_config(seed), 3, {TargetMode::Ambiguity, TargetMode::GoldOneHot});
        if (r.arms[0].mean_accuracy - r.arms[1].mean_accuracy > 0.0) ++wins;
    }
    return {wins >= kCvWinsNeeded, wins_detail(wins, "soft 3-fold CV accuracy > gold")};
}

Outcome entropy_binning() {
    Rng rng(31);
    const std::vector<double> edges{kDefaultBinEdges.begin(), kDefaultBinEdges.end()};
    for (int t = 0; t < kRandomCases; ++t) {
        std::vector<ExampleRecord> records(rng.below(40));
        for (auto& r : records) r.entropy = entropy(random_dist(rng));
        const auto b = entropy_bins(records);
        std::size_t total = b.below.count + b.above.count;
        for (const auto& bin : b.bins) total += bin.count;
        if (total != records.size()) return {false, "partition broken"};
    }
    std::vector<ExampleRecord> at_edges;
    for (double h : {0.08, 0.58, 1.08, 1.58}) {
        ExampleRecord r;
        r.entropy = h;
        at_edges.push_back(r);
    }
    const auto b = entropy_bins(at_edges);
    const bool conv = b.bins.size() == 3 && b.bins[0].count == 1 && b.bins[1].count == 1 && b.bins[2].count == 2 &&
                      b.below.count == 0 && b.above.count == 0 && b.edges == edges;
    return {conv, "partition on " + std::to_string(kRandomCases) + " sets; edges [0.08, 0.58, 1.08, 1.58] half-open"};
}

std::string model_bytes(const ClassifierModel& m) {
    std::ostringstream os;
    save_model(os, m);
    return os.str();
}

Outcome transfer_contracts() {
    // freeze contract
    FeatureConfig f;
    f.hash_dim = 1024;
    const auto enc = init_model(f, 16, 3);
    const auto before = fnv1a64(model_bytes(enc));
    const auto world = make_world(PlantedConfig{}, 3);
    const auto task_set = generate_planted(world, 200, 3, Source::SnliOriginal, "task");
    TransferConfig tc;
    tc.trials = 2;
    tc.head_hidden = 16;
    tc.max_epochs = 5;
    const auto data = split_task(planted_regression_task(task_set), tc.split, 3);
    run_trials(tc, data, {{"enc", &enc}});
    const bool frozen = fnv1a64(model_bytes(enc)) == before;

    // early stop after exactly patience + 1 flat epochs
    const auto zero = zero_model(f, 8);
    std::vector<double> ytr, ydev;
    for (const auto& t : data.train) ytr.push_back(t.label);
    for (const auto& t : data.dev) ydev.push_back(t.label);
    TransferConfig flat = tc;
    flat.max_epochs = 100;
    flat.learning_rate = 1e-300; // updates underflow against the loss, so every dev epoch is flat
    const auto fit = train_head(encode(zero, data.train), ytr, encode(zero, data.dev), ydev, flat, 1, 0);
    const bool stops = fit.epochs_run == flat.patience + 1;

    // Pearson affine invariance
    Rng rng(5);
    double worst = 0.0;
    for (int t = 0; t < kRandomCases; ++t) {
        const auto n = 3 + rng.below(40);
        std::vector<double> x(n), y(n), z(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = 0.5 * x[i] + rng.normal();
        }
        const double a = rng.uniform(0.01, 100.0), b = rng.uniform(-100.0, 100.0);
        for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b;
        worst = std::max(worst, std::abs(pearson(z, y) - pearson(x, y)));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "frozen=%s, flat-loss stop after %zu epochs, affine drift %.1e", frozen ? "yes" : "no",
                  fit.epochs_run, worst);
    return {frozen && stops && worst < kAffineTolerance, buf};
}

Outcome transfer_directional() {
    int wins = 0;
    for (int s = 0; s < kDirectionalSeeds; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const auto w = planted(seed);
        const auto task_set = generate_planted(w.world, 1000, seed, Source::SnliOriginal, "task");
        std::vector<ClassifierModel> enc;
        for (auto mode : {TargetMode::Ambiguity, TargetMode::GoldOneHot}) {
            auto cfg = planted_train_config(seed);
            cfg.target_mode = mode;
            enc.push_back(train(cfg, w.train.corpus).model);
        }
        TransferConfig tc;
        tc.trials = 3;
        tc.head_hidden = 32;
        tc.batch_size = 32;
        tc.learning_rate = 0.01;
        tc.base_seed = seed;
        const auto data = split_task(planted_regression_task(task_set), tc.split, seed);
        const auto table = run_trials(tc, data, {{"soft", &enc[0]}, {"gold", &enc[1]}});
        double soft = 0.0, gold = 0.0;
        for (const auto& r : table.rows) (r.encoder == "soft" ? soft : gold) += r.primary_mean;
        if (soft >= gold) ++wins;
    }
    return {wins >= kTransferWinsNeeded, wins_detail(wins, "soft encoder mean Pearson >= gold")};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(AMBINLI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Content hash of every file in dir; manifests are hashed without wall time.
std::map<std::string, std::uint64_t> snapshot(const fs::path& dir) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string bytes = ss.str();
        const auto name = e.path().filename().string();
        if (name.ends_with("_manifest.json")) {
            auto j = nlohmann::ordered_json::parse(bytes);
            j.erase("wall_time_seconds");
            bytes = j.dump();
        }
        out[name] = fnv1a64(bytes);
    }
    return out;
}

Outcome determinism() {
    const auto dir = fs::temp_directory_path() / "ambinli_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto d = (dir / "out").string();
    {
        std::ofstream conf(dir / "run.conf");
        conf << "seed = 21\noutput_dir = " << d << "\n"
             << "synth.n_train = 200\nsynth.n_eval = 90\nsynth.n_unli = 90\nsynth.n_task = 200\n"
             << "input.snli = " << d << "/synth_snli.jsonl\ninput.mnli = " << d << "/synth_mnli.jsonl\n"
             << "input.unli = " << d << "/synth_unli.csv\nholdout.chaos = " << d << "/synth_chaos.jsonl\n"
             << "convert.filter_unli = true\n"
             << "model.hash_dim = 1024\nmodel.hidden = 16\ntrain.epochs = 3\ntrain.batch_size = 16\n"
             << "train.learning_rate = 0.01\ntrain.corpus = " << d << "/corpus.jsonl\n"
             << "eval.corpus = " << d << "/synth_chaos.jsonl\neval.model = " << d << "/model.bin\n"
             << "eval.compare_model = " << d << "/gold.bin\n"
             << "crossval.corpus = " << d << "/corpus.jsonl\ncrossval.format = canonical\n"
             << "transfer.data = " << d << "/synth_task_regression.csv\ntransfer.soft_model = " << d << "/model.bin\n"
             << "transfer.gold_model = " << d << "/gold.bin\ntransfer.trials = 2\ntransfer.head_hidden = 16\n";
    }
    const std::string conf = " --config " + (dir / "run.conf").string();
    const std::vector<std::string> steps{"synth" + conf,
                                         "build" + conf,
                                         "train" + conf,
                                         "train" + conf + " --set train.target_mode=gold --set train.model_out=gold.bin",
                                         "eval" + conf,
                                         "bins" + conf,
                                         "crossval" + conf,
                                         "transfer" + conf};
    std::vector<std::map<std::string, std::uint64_t>> snaps;
    for (int round = 0; round < 2; ++round) {
        for (const auto& s : steps)
            if (const int rc = run_cli(s); rc != 0) return {false, "'" + s.substr(0, s.find(' ')) + "' exited " + std::to_string(rc)};
        snaps.push_back(snapshot(d));
    }
    fs::remove_all(dir);
    std::size_t differing = 0;
    for (const auto& [name, h] : snaps[0])
        if (!snaps[1].contains(name) || snaps[1].at(name) != h) ++differing;
    return {differing == 0 && snaps[0].size() == snaps[1].size(),
            std::to_string(steps.size()) + " invocations x 2 runs, " + std::to_string(snaps[0].size()) + " files, " +
                std::to_string(differing) + " differ"};
}

Outcome real_data() {
    const char* dir = std::getenv("AMBINLI_DATA_DIR");
    if (!dir) return {true, "SKIP (AMBINLI_DATA_DIR not set)"};
    std::ifstream s(fs::path(dir) / "chaosNLI_snli.jsonl");
    std::ifstream m(fs::path(dir) / "chaosNLI_mnli_m.jsonl");
    if (!s || !m) return {true, "SKIP (ChaosNLI files not found)"};
    const auto ns = parse_chaos_jsonl(s).corpus.size();
    const auto nm = parse_chaos_jsonl(m).corpus.size();
    return {ns == 1514 && nm == 1599, "ChaosNLI counts snli " + std::to_string(ns) + ", mnli " + std::to_string(nm)};
}

} // namespace

int main() {
    report("math invariants", math_invariants);
    report("conversion exactness", conversion_exactness);
    report("gradient correctness", gradient_check);
    report("soft training lowers JSD", jsd_directional);
    report("soft training CV accuracy", cv_directional);
    report("entropy binning", entropy_binning);
    report("transfer contracts", transfer_contracts);
    report("transfer directional", transfer_directional);
    report("determinism", determinism);
    report("real data counts", real_data);
    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
