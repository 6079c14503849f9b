#include <catch2/catch_amalgamated.hpp>

#include <ambinli/synthetic.hpp>
#include <ambinli/transfer.hpp>

#include <sstream>

using namespace ambinli;
using Catch::Approx;

namespace {

FeatureConfig small_features() {
    FeatureConfig f;
    f.hash_dim = 1024;
    return f;
}

std::string model_bytes(const ClassifierModel& m) {
    std::ostringstream os;
    save_model(os, m);
    return os.str();
}

std::vector<TaskExample> text_task(std::size_t n, std::uint64_t seed, bool binary) {
    Rng rng(seed);
    std::vector<TaskExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = rng.below(10), b = rng.below(10);
        const double y = binary ? (a > b ? 1.0 : 0.0) : (static_cast<double>(a) + 1.0) / 11.0;
        out.push_back({"t" + std::to_string(i), "word" + std::to_string(a) + " x", "word" + std::to_string(b) + " y", y});
    }
    return out;
}

} // namespace

TEST_CASE("encoder output", "[transfer]") {
    const auto zero = zero_model(small_features(), 128);
    const auto reps = encode(zero, text_task(5, 1, false));
    REQUIRE(reps.size() == 5);
    for (const auto& r : reps) {
        CHECK(r.size() == 128);
        for (double v : r) CHECK(v == 0.0);
    }
}

TEST_CASE("statistics", "[transfer]") {
    const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
    CHECK(pearson(x, y) == Approx(0.9819805060619656).epsilon(1e-14));
    CHECK(pearson(x, x) == 1.0);
    const std::vector<double> neg{3, 2, 1};
    CHECK(pearson(x, neg) == -1.0);
    CHECK(std::abs(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, -1, -1, 1})) < 1e-15);
    CHECK_THROWS_MATCHES(pearson(x, std::vector<double>{2, 2, 2}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::DegenerateVariance; }));

    CHECK(mse(x, x) == 0.0);
    CHECK(mse(x, y) == Approx(1.0 / 3.0));
    CHECK(sample_std(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) == Approx(2.138089935299395).epsilon(1e-14));
    CHECK(sample_std(std::vector<double>{0.7}) == 0.0);
}

TEST_CASE("pearson is invariant to positive affine maps", "[transfer][property]") {
    Rng rng(77);
    for (int t = 0; t < 1000; ++t) {
        const auto n = 3 + rng.below(30);
        std::vector<double> x(n), y(n), z(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = x[i] + rng.normal();
        }
        const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0);
        for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i] + b;
        REQUIRE(std::abs(pearson(z, y) - pearson(x, y)) < 1e-12);
    }
}

TEST_CASE("mse properties", "[transfer][property]") {
    Rng rng(78);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(10), b(10);
        for (std::size_t i = 0; i < 10; ++i) {
            a[i] = rng.uniform();
            b[i] = rng.uniform();
        }
        REQUIRE(mse(a, b) >= 0.0);
        REQUIRE(mse(a, b) == mse(b, a));
        REQUIRE(mse(a, a) == 0.0);
    }
}

TEST_CASE("early stopping", "[transfer]") {
    EarlyStopping flat(2, 1e-6);
    std::size_t epochs = 0;
    while (!flat.should_stop()) {
        flat.update(0.5);
        ++epochs;
    }
    CHECK(epochs == 3);

    EarlyStopping tiny(2, 1e-6);
    tiny.update(1.0);
    tiny.update(1.0 - 5e-7); // below min_improvement: not progress
    tiny.update(1.0 - 9e-7);
    CHECK(tiny.should_stop());
    CHECK(tiny.best_epoch() == 1);

    EarlyStopping dec(2, 1e-6);
    for (int i = 0; i < 50; ++i) {
        CHECK(dec.update(1.0 / (i + 1)));
        CHECK(!dec.should_stop());
    }
}

TEST_CASE("head training stops on a flat dev loss", "[transfer]") {
    const auto zero = zero_model(small_features(), 16);
    auto task = split_task(text_task(100, 2, false), {0.8, 0.1, 0.1}, 3);
    std::vector<double> ytr, ydev;
    for (const auto& t : task.train) ytr.push_back(t.label);
    for (const auto& t : task.dev) ydev.push_back(t.label);
    TransferConfig cfg;
    cfg.learning_rate = 1e-300; // updates underflow, so the dev loss never moves
    const auto fit = train_head(encode(zero, task.train), ytr, encode(zero, task.dev), ydev, cfg, 1, 0);
    CHECK(fit.epochs_run == cfg.patience + 1);
    CHECK(fit.best_epoch == 1);
}

TEST_CASE("head fits a learnable target and keeps the best checkpoint", "[transfer]") {
    // Frozen random encoder; the label depends only on the premise word, so a head can recover it.
    const auto enc = init_model(small_features(), 64, 5);
    auto data = split_task(text_task(600, 4, false), {0.8, 0.1, 0.1}, 4);
    std::vector<double> ytr, ydev, yte;
    for (const auto& t : data.train) ytr.push_back(t.label);
    for (const auto& t : data.dev) ydev.push_back(t.label);
    for (const auto& t : data.test) yte.push_back(t.label);
    TransferConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 16;
    cfg.max_epochs = 50;
    const auto xtr = encode(enc, data.train), xdev = encode(enc, data.dev), xte = encode(enc, data.test);
    for (std::size_t depth : {1u, 2u}) {
        const auto fit = train_head(xtr, ytr, xdev, ydev, cfg, depth, 7);
        const auto m = score_head(fit.head, xte, yte);
        INFO("depth " << depth);
        CHECK(m.secondary < 0.01);
        CHECK(m.primary > 0.9);
        const auto best = std::min_element(fit.dev_losses.begin(), fit.dev_losses.end());
        CHECK(static_cast<std::size_t>(best - fit.dev_losses.begin()) + 1 == fit.best_epoch);
        CHECK(head_loss(fit.head, xdev, ydev) == Approx(*best).epsilon(1e-12));
        CHECK(fit.epochs_run <= cfg.max_epochs);
    }
}

TEST_CASE("label type checks", "[transfer]") {
    const auto zero = zero_model(small_features(), 8);
    const auto reps = encode(zero, text_task(4, 1, false));
    TransferConfig cfg;
    cfg.task = TransferTask::BinaryClassification;
    CHECK_THROWS_MATCHES(train_head(reps, {0.0, 0.5, 1.0, 1.0}, reps, {0.0, 1.0, 1.0, 0.0}, cfg, 1, 0), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::LabelTypeMismatch; }));
    cfg.task = TransferTask::Regression01;
    CHECK_THROWS_AS(train_head(reps, {0.0, 1.5, 1.0, 1.0}, reps, {0.0, 1.0, 1.0, 0.0}, cfg, 1, 0), Error);
}

TEST_CASE("trial table", "[transfer]") {
    const auto a = init_model(small_features(), 16, 1);
    const auto b = a;
    const auto before = model_bytes(a);
    const auto data = split_task(text_task(200, 9, true), {0.8, 0.1, 0.1}, 9);
    TransferConfig cfg;
    cfg.task = TransferTask::BinaryClassification;
    cfg.trials = 3;
    cfg.head_hidden = 16;
    cfg.max_epochs = 5;
    const auto table = run_trials(cfg, data, {{"a", &a}, {"b", &b}});
    CHECK(model_bytes(a) == before); // encoders stay frozen
    REQUIRE(table.rows.size() == 4);
    CHECK(table.rows[0].head_layers == 1);
    CHECK(table.rows[2].head_layers == 2);
    for (std::size_t r = 0; r < 4; r += 2) {
        CHECK(table.rows[r].primary_mean == table.rows[r + 1].primary_mean);
        CHECK(table.rows[r].secondary_mean == table.rows[r + 1].secondary_mean);
        CHECK(table.rows[r].trials.size() == 3);
        CHECK(!table.rows[r].std_undefined);
    }

    cfg.trials = 1;
    const auto single = run_trials(cfg, data, {{"a", &a}});
    CHECK(single.rows[0].primary_std == 0.0);
    CHECK(single.rows[0].std_undefined);

    const auto again = run_trials(cfg, data, {{"a", &a}});
    CHECK(again.rows[0].primary_mean == single.rows[0].primary_mean);
}

TEST_CASE("task splits", "[transfer]") {
    const auto d = split_task(text_task(100, 1, false), {0.8, 0.1, 0.1}, 5);
    CHECK(d.train.size() == 80);
    CHECK(d.dev.size() == 10);
    CHECK(d.test.size() == 10);
    const auto e = split_task(text_task(100, 1, false), {0.8, 0.1, 0.1}, 5);
    CHECK(d.train.front().id == e.train.front().id);
    TransferConfig bad;
    bad.split = {0.5, 0.1, 0.1};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = TransferConfig{};
    bad.head_layers = {3};
    CHECK_THROWS_AS(bad.validate(), Error);
}
