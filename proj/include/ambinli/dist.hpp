#pragma once

// Label distributions over the NLI simplex and the divergence, entropy and
// loss functions built on them. Label order is (entailment, neutral,
// contradiction) everywhere. Metrics use base-2 logarithms; the training
// loss uses natural logarithms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "error.hpp"

namespace ambinli {

enum class Label : std::uint8_t { Entailment = 0, Neutral = 1, Contradiction = 2 };

inline constexpr std::array<Label, 3> kLabels{Label::Entailment, Label::Neutral,
                                              Label::Contradiction};

/// A single assigned label; NoMajority is the source datasets' "-1"/"-" marker.
enum class GoldLabel : std::uint8_t { Entailment = 0, Neutral = 1, Contradiction = 2, NoMajority = 3 };

constexpr GoldLabel to_gold(Label l) noexcept { return static_cast<GoldLabel>(l); }

constexpr std::optional<Label> to_label(GoldLabel g) noexcept {
    if (g == GoldLabel::NoMajority) return std::nullopt;
    return static_cast<Label>(g);
}

constexpr std::size_t index_of(Label l) noexcept { return static_cast<std::size_t>(l); }

constexpr std::string_view to_string(Label l) noexcept {
    switch (l) {
    case Label::Entailment: return "entailment";
    case Label::Neutral: return "neutral";
    case Label::Contradiction: return "contradiction";
    }
    return "?";
}

constexpr std::string_view to_string(GoldLabel g) noexcept {
    if (auto l = to_label(g)) return to_string(*l);
    return "-";
}

/// Accepts full names, single letters and the "-"/"-1" no-majority markers.
inline std::optional<GoldLabel> parse_gold(std::string_view s) {
    std::string t;
    t.reserve(s.size());
    for (char ch : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (t == "entailment" || t == "e") return GoldLabel::Entailment;
    if (t == "neutral" || t == "n") return GoldLabel::Neutral;
    if (t == "contradiction" || t == "c") return GoldLabel::Contradiction;
    if (t == "-" || t == "-1" || t.empty()) return GoldLabel::NoMajority;
    return std::nullopt;
}

struct LabelCounts {
    std::uint64_t e = 0;
    std::uint64_t n = 0;
    std::uint64_t c = 0;

    constexpr std::uint64_t total() const noexcept { return e + n + c; }

    constexpr std::uint64_t operator[](Label l) const noexcept {
        switch (l) {
        case Label::Entailment: return e;
        case Label::Neutral: return n;
        case Label::Contradiction: return c;
        }
        return 0;
    }

    constexpr void add(Label l) noexcept {
        switch (l) {
        case Label::Entailment: ++e; break;
        case Label::Neutral: ++n; break;
        case Label::Contradiction: ++c; break;
        }
    }

    friend constexpr bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kReprojectTolerance = 1e-6;

/// Probability triple on the 3-label simplex. Construction validates the
/// simplex invariant; sums off by at most 1e-6 are re-projected.
class LabelDistribution {
public:
    /// Uniform distribution.
    constexpr LabelDistribution() noexcept : p_{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0} {}

    LabelDistribution(double e, double n, double c) : p_{e, n, c} { validate(); }

    explicit LabelDistribution(const std::array<double, 3>& p) : p_(p) { validate(); }

    static LabelDistribution one_hot(Label l) {
        std::array<double, 3> p{0.0, 0.0, 0.0};
        p[index_of(l)] = 1.0;
        return LabelDistribution(p);
    }

    static constexpr LabelDistribution uniform() noexcept { return LabelDistribution(); }

    constexpr double e() const noexcept { return p_[0]; }
    constexpr double n() const noexcept { return p_[1]; }
    constexpr double c() const noexcept { return p_[2]; }
    constexpr double operator[](std::size_t i) const noexcept { return p_[i]; }
    constexpr double operator[](Label l) const noexcept { return p_[index_of(l)]; }
    constexpr const std::array<double, 3>& values() const noexcept { return p_; }

    friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

private:
    void validate() {
        for (double v : p_) {
            if (!std::isfinite(v) || v < -kReprojectTolerance)
                throw Error(ErrorKind::NotSimplex, "component outside [0,1]: " + std::to_string(v));
        }
        const double sum = p_[0] + p_[1] + p_[2];
        if (std::abs(sum - 1.0) > kReprojectTolerance)
            throw Error(ErrorKind::NotSimplex, "components sum to " + std::to_string(sum));
        const bool negative = std::any_of(p_.begin(), p_.end(), [](double v) { return v < 0.0; });
        if (negative || std::abs(sum - 1.0) > kSimplexTolerance) {
            double clamped = 0.0;
            for (double& v : p_) {
                v = std::max(v, 0.0);
                clamped += v;
            }
            for (double& v : p_) v /= clamped;
        }
    }

    std::array<double, 3> p_;
};

inline LabelDistribution normalize(const LabelCounts& counts) {
    const auto total = counts.total();
    if (total == 0) throw Error(ErrorKind::ZeroCounts, "cannot normalize all-zero label counts");
    const double t = static_cast<double>(total);
    return LabelDistribution(static_cast<double>(counts.e) / t, static_cast<double>(counts.n) / t,
                             static_cast<double>(counts.c) / t);
}

namespace detail {
inline double xlogy_base(double x, double y, double log_base) {
    // 0 * log(anything) := 0
    if (x == 0.0) return 0.0;
    return x * std::log(y) / log_base;
}
} // namespace detail

/// Shannon entropy in bits; in [0, log2 3].
inline double entropy(const LabelDistribution& d) {
    double h = 0.0;
    for (double p : d.values()) h -= detail::xlogy_base(p, p, std::numbers::ln2);
    return std::max(h, 0.0);
}

/// Shannon entropy in nats (the scale of soft_cross_entropy).
inline double entropy_nats(const LabelDistribution& d) {
    double h = 0.0;
    for (double p : d.values()) h -= detail::xlogy_base(p, p, 1.0);
    return std::max(h, 0.0);
}

/// KL(a || b) in bits; +infinity when a puts mass where b has none.
inline double kl(const LabelDistribution& a, const LabelDistribution& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (a[i] <= 0.0) continue;
        if (b[i] <= 0.0) return std::numeric_limits<double>::infinity();
        sum += a[i] * std::log2(a[i] / b[i]);
    }
    return std::max(sum, 0.0);
}

/// Jensen-Shannon divergence in bits; symmetric and bounded by 1.
inline double jsd(const LabelDistribution& a, const LabelDistribution& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double m = 0.5 * (a[i] + b[i]);
        const double ta = a[i] > 0.0 ? a[i] * std::log2(a[i] / m) : 0.0;
        const double tb = b[i] > 0.0 ? b[i] * std::log2(b[i] / m) : 0.0;
        sum += 0.5 * (ta + tb); // commutative per term, so jsd(a,b) == jsd(b,a) exactly
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Label with the strictly greatest count; NoMajority on a tied top count.
inline GoldLabel majority_label(const LabelCounts& counts) {
    if (counts.total() == 0) throw Error(ErrorKind::ZeroCounts, "no annotations to vote over");
    const std::uint64_t top = std::max({counts.e, counts.n, counts.c});
    int winners = 0;
    GoldLabel winner = GoldLabel::NoMajority;
    for (Label l : kLabels) {
        if (counts[l] == top) {
            ++winners;
            winner = to_gold(l);
        }
    }
    return winners == 1 ? winner : GoldLabel::NoMajority;
}

/// Most probable label; ties resolve in the fixed order E > N > C.
inline Label argmax(const LabelDistribution& d) noexcept {
    Label best = Label::Entailment;
    for (Label l : kLabels)
        if (d[l] > d[best]) best = l;
    return best;
}

/// -sum t_i ln q_i (natural log). Reduces to ordinary cross-entropy for one-hot t.
inline double soft_cross_entropy(const LabelDistribution& target, const LabelDistribution& predicted) {
    double loss = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(predicted[i] > 0.0))
            throw Error(ErrorKind::NonpositivePrediction,
                        "predicted probability " + std::to_string(predicted[i]) + " at index " +
                            std::to_string(i));
        loss -= target[i] * std::log(predicted[i]);
    }
    return loss;
}

} // namespace ambinli
