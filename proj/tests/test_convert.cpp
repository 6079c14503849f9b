#include <catch2/catch_amalgamated.hpp>

#include <ambinli/convert.hpp>
#include <ambinli/random.hpp>

#include <sstream>

using namespace ambinli;
using Catch::Approx;

namespace {

AnnotatedExample multilabel(const std::string& uid, LabelCounts counts, GoldLabel gold, Source src = Source::SnliOriginal) {
    return {uid, "p " + uid, "h " + uid, src, counts, {}, gold, {}};
}

AnnotatedExample unli(const std::string& uid, double p) {
    return {uid, "p " + uid, "h " + uid, Source::Unli, {}, p, {}, {}};
}

} // namespace

TEST_CASE("counts become distributions", "[convert]") {
    CHECK(counts_to_distribution(multilabel("a", {4, 1, 0}, GoldLabel::Entailment)).target == LabelDistribution(0.8, 0.2, 0.0));
    CHECK(counts_to_distribution(multilabel("b", {2, 2, 1}, GoldLabel::NoMajority)).target == LabelDistribution(0.4, 0.4, 0.2));
    const auto t = *counts_to_distribution(multilabel("c", {47, 40, 13}, GoldLabel::Entailment)).target;
    CHECK(t.e() == Approx(0.47).margin(1e-15));
    CHECK(t.n() == Approx(0.40).margin(1e-15));
    CHECK(t.c() == Approx(0.13).margin(1e-15));
    CHECK_THROWS_MATCHES(counts_to_distribution(unli("u", 0.3)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::MissingCounts; }));
}

TEST_CASE("UNLI conversion matches the piecewise-linear map", "[convert]") {
    CHECK(unli_to_distribution(0.0) == LabelDistribution(0, 0, 1));
    CHECK(unli_to_distribution(0.25) == LabelDistribution(0, 0.5, 0.5));
    CHECK(unli_to_distribution(0.5) == LabelDistribution(0, 1, 0));
    CHECK(unli_to_distribution(0.75) == LabelDistribution(0.5, 0.5, 0));
    CHECK(unli_to_distribution(1.0) == LabelDistribution(1, 0, 0));
    CHECK_THROWS_AS(unli_to_distribution(-0.01), Error);
    CHECK_THROWS_AS(unli_to_distribution(1.01), Error);
}

TEST_CASE("UNLI conversion structure", "[convert][property]") {
    const double below = std::nextafter(0.5, 0.0);
    const auto lo = unli_to_distribution(below);
    const auto hi = unli_to_distribution(0.5);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(lo[k] - hi[k]) < 1e-12);

    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        const double p = rng.uniform();
        const auto d = unli_to_distribution(p);
        REQUIRE(std::abs(d.e() + d.n() + d.c() - 1.0) <= 1e-9);
        if (p >= 0.5) REQUIRE(d.c() == 0.0);
        else REQUIRE(d.e() == 0.0);
        const Label expected = p < 0.25 ? Label::Contradiction : (p < 0.75 ? Label::Neutral : Label::Entailment);
        REQUIRE(argmax(d) == expected);
    }
    CHECK(unli_gold(0.25) == GoldLabel::Neutral);
    CHECK(unli_gold(0.5) == GoldLabel::Neutral);
    CHECK(unli_gold(0.75) == GoldLabel::Entailment);
}

TEST_CASE("extreme UNLI filter keeps the cut points", "[convert]") {
    Corpus c("mix");
    c.add(unli("a", 0.03));
    c.add(unli("b", 0.5));
    c.add(unli("c", 0.98));
    c.add(unli("d", 0.05));
    c.add(unli("e", 0.97));
    c.add(multilabel("f", {5, 0, 0}, GoldLabel::Entailment));
    const auto r = filter_extreme_unli(c, ConversionConfig{});
    CHECK(r.removed == 2);
    REQUIRE(r.corpus.size() == 4);
    CHECK(r.corpus[0].uid == "b");
    CHECK(r.corpus[1].uid == "d");
    CHECK(r.corpus[2].uid == "e");
    CHECK(r.corpus[3].uid == "f");

    ConversionConfig bad;
    bad.unli_low_cut = 0.9;
    bad.unli_high_cut = 0.1;
    CHECK_THROWS_AS(filter_extreme_unli(c, bad), Error);
}

TEST_CASE("gold labels become one-hot targets", "[convert]") {
    CHECK(gold_to_onehot(multilabel("a", {3, 1, 1}, GoldLabel::Entailment)).target == LabelDistribution(1, 0, 0));
    CHECK_THROWS_MATCHES(gold_to_onehot(multilabel("b", {2, 2, 1}, GoldLabel::NoMajority)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::NoMajorityGold; }));
    const auto u = gold_to_onehot(unli("u", 0.9));
    CHECK(u.gold == GoldLabel::Entailment);
    CHECK(u.target == LabelDistribution(1, 0, 0));
}

TEST_CASE("build_ambinli", "[convert]") {
    ConversionConfig cfg;
    CHECK(build_ambinli({}, {}, cfg).corpus.empty());

    Corpus snli("snli");
    snli.add(multilabel("s1", {4, 1, 0}, GoldLabel::Entailment));
    snli.add(multilabel("s2", {2, 2, 1}, GoldLabel::NoMajority));
    Corpus u("unli");
    u.add(unli("u1", 0.2));
    u.add(unli("u2", 0.99));
    u.add(unli("u3", 0.6));
    cfg.filter_unli = true;
    const auto r = build_ambinli({snli, u}, {}, cfg);
    REQUIRE(r.corpus.size() == 4);
    CHECK(r.corpus[0].uid == "s1");
    CHECK(r.corpus[2].uid == "u1");
    CHECK(r.corpus[3].uid == "u3");
    for (const auto& ex : r.corpus) CHECK(ex.target.has_value());
    CHECK(r.per_input[1].second.filter_removed == 1);

    Corpus holdout("chaos");
    holdout.add(multilabel("s1", {100, 0, 0}, GoldLabel::Entailment, Source::Chaos));
    cfg.target_mode = TargetMode::GoldOneHot;
    const auto g = build_ambinli({snli, u}, {holdout}, cfg);
    CHECK(g.per_input[0].second.dedup_removed == 1);
    CHECK(g.per_input[0].second.no_majority_dropped == 1);
    REQUIRE(g.corpus.size() == 2);
    CHECK(g.corpus[0].target == LabelDistribution(0, 0, 1)); // u1: p=0.2 -> contradiction
    CHECK(g.corpus[1].target == LabelDistribution(0, 1, 0)); // u3: p=0.6 -> neutral
}

TEST_CASE("build output is deterministic", "[convert][property]") {
    Corpus snli("snli");
    Rng rng(3);
    for (int i = 0; i < 50; ++i)
        snli.add(multilabel("s" + std::to_string(i), {rng.below(3), rng.below(3), rng.below(3) + 1}, GoldLabel::NoMajority));
    Corpus u("unli");
    for (int i = 0; i < 50; ++i) u.add(unli("u" + std::to_string(i), rng.uniform()));
    ConversionConfig cfg;
    cfg.filter_unli = true;
    std::ostringstream a, b;
    write_canonical(a, build_ambinli({snli, u}, {}, cfg).corpus);
    write_canonical(b, build_ambinli({snli, u}, {}, cfg).corpus);
    CHECK(a.str() == b.str());
}
