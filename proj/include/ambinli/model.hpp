#pragma once

// Desk-scale NLI classifier: hashed bag-of-n-grams input, one ELU hidden
// layer, softmax head. Trained with soft-target cross-entropy; the gold
// arm uses the same code path with one-hot targets.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "convert.hpp"
#include "corpus.hpp"
#include "dist.hpp"
#include "error.hpp"
#include "features.hpp"
#include "random.hpp"

namespace ambinli {

inline constexpr std::size_t kNumLabels = 3;

/// Dense parameter blocks. w1 is row-major by input feature so a sparse
/// input touches contiguous rows.
struct Parameters {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::vector<double> w1; // input_dim x hidden
    std::vector<double> b1; // hidden
    std::vector<double> w2; // hidden x 3
    std::vector<double> b2; // 3

    static Parameters zeros(std::size_t input_dim, std::size_t hidden) {
        return Parameters{input_dim,
                          hidden,
                          std::vector<double>(input_dim * hidden, 0.0),
                          std::vector<double>(hidden, 0.0),
                          std::vector<double>(hidden * kNumLabels, 0.0),
                          std::vector<double>(kNumLabels, 0.0)};
    }

    std::array<std::span<double>, 4> blocks() { return {w1, b1, w2, b2}; }
    std::array<std::span<const double>, 4> blocks() const { return {w1, b1, w2, b2}; }

    void set_zero() {
        for (auto b : blocks()) std::fill(b.begin(), b.end(), 0.0);
    }

    std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct ClassifierModel {
    FeatureConfig features;
    std::uint64_t rng_seed = 0;
    Parameters params;

    std::size_t hidden() const noexcept { return params.hidden; }

    friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

/// All-zero weights and biases.
inline ClassifierModel zero_model(const FeatureConfig& features, std::size_t hidden, std::uint64_t seed = 0) {
    features.validate();
    return ClassifierModel{features, seed, Parameters::zeros(features.hash_dim, hidden)};
}

/// Glorot-uniform weights, zero biases.
inline ClassifierModel init_model(const FeatureConfig& features, std::size_t hidden, std::uint64_t seed) {
    if (hidden == 0) throw Error(ErrorKind::InvalidConfig, "hidden size must be positive");
    auto model = zero_model(features, hidden, seed);
    Rng rng(derive_seed(seed, "init"));
    const double a1 = std::sqrt(6.0 / static_cast<double>(features.hash_dim + hidden));
    for (double& w : model.params.w1) w = rng.uniform(-a1, a1);
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + kNumLabels));
    for (double& w : model.params.w2) w = rng.uniform(-a2, a2);
    return model;
}

inline double elu(double x) noexcept { return x > 0.0 ? x : std::expm1(x); }
inline double elu_derivative(double x) noexcept { return x > 0.0 ? 1.0 : std::exp(x); }

/// Max-subtracted softmax; stays on the simplex for any finite logits.
inline std::array<double, 3> softmax(const std::array<double, 3>& logits) {
    const double m = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> out;
    double z = 0.0;
    for (std::size_t k = 0; k < 3; ++k) z += (out[k] = std::exp(logits[k] - m));
    for (double& v : out) v /= z;
    return out;
}

inline std::array<double, 3> log_softmax(const std::array<double, 3>& logits) {
    const double m = std::max({logits[0], logits[1], logits[2]});
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    const double lse = m + std::log(z);
    return {logits[0] - lse, logits[1] - lse, logits[2] - lse};
}

struct Activations {
    std::vector<double> pre;  // W1 x + b1
    std::vector<double> post; // elu(pre)
    std::array<double, 3> logits{};
};

inline void check_dims(const ClassifierModel& model, const SparseVector& x) {
    if (!x.index.empty() && x.index.back() >= model.params.input_dim)
        throw Error(ErrorKind::DimensionMismatch, "feature index " + std::to_string(x.index.back()) +
                                                      " outside input dimension " +
                                                      std::to_string(model.params.input_dim));
}

inline Activations activations(const ClassifierModel& model, const SparseVector& x) {
    check_dims(model, x);
    const auto& p = model.params;
    const std::size_t h = p.hidden;
    Activations a;
    a.pre = p.b1;
    for (std::size_t j = 0; j < x.nnz(); ++j) {
        const double v = x.value[j];
        const double* row = p.w1.data() + static_cast<std::size_t>(x.index[j]) * h;
        for (std::size_t u = 0; u < h; ++u) a.pre[u] += v * row[u];
    }
    a.post.resize(h);
    for (std::size_t u = 0; u < h; ++u) a.post[u] = elu(a.pre[u]);
    for (std::size_t k = 0; k < kNumLabels; ++k) a.logits[k] = p.b2[k];
    for (std::size_t u = 0; u < h; ++u)
        for (std::size_t k = 0; k < kNumLabels; ++k) a.logits[k] += a.post[u] * p.w2[u * kNumLabels + k];
    return a;
}

inline LabelDistribution forward(const ClassifierModel& model, const SparseVector& x) {
    return LabelDistribution(softmax(activations(model, x).logits));
}

/// Post-ELU hidden layer: the frozen representation used by transfer heads.
inline std::vector<double> hidden_representation(const ClassifierModel& model, const SparseVector& x) {
    return activations(model, x).post;
}

struct Sample {
    SparseVector x;
    LabelDistribution target;
};

/// Mean soft cross-entropy (nats) over the batch; writes d(loss)/d(params)
/// into grad, which is resized and cleared here.
inline double loss_and_grad(const ClassifierModel& model, std::span<const Sample* const> batch, Parameters& grad) {
    if (batch.empty()) throw Error(ErrorKind::EmptyData, "empty batch");
    const auto& p = model.params;
    const std::size_t h = p.hidden;
    if (grad.input_dim != p.input_dim || grad.hidden != h)
        grad = Parameters::zeros(p.input_dim, h);
    else
        grad.set_zero();

    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> dpre(h);
    for (const Sample* s : batch) {
        const auto a = activations(model, s->x);
        const auto logq = log_softmax(a.logits);
        std::array<double, 3> dlogits;
        for (std::size_t k = 0; k < kNumLabels; ++k) {
            const double t = s->target[k];
            if (t > 0.0) loss -= t * logq[k];
            dlogits[k] = (std::exp(logq[k]) - t) * scale;
            grad.b2[k] += dlogits[k];
        }
        for (std::size_t u = 0; u < h; ++u) {
            double dpost = 0.0;
            for (std::size_t k = 0; k < kNumLabels; ++k) {
                grad.w2[u * kNumLabels + k] += a.post[u] * dlogits[k];
                dpost += p.w2[u * kNumLabels + k] * dlogits[k];
            }
            dpre[u] = dpost * elu_derivative(a.pre[u]);
            grad.b1[u] += dpre[u];
        }
        for (std::size_t j = 0; j < s->x.nnz(); ++j) {
            const double v = s->x.value[j];
            double* row = grad.w1.data() + static_cast<std::size_t>(s->x.index[j]) * h;
            for (std::size_t u = 0; u < h; ++u) row[u] += v * dpre[u];
        }
    }
    return loss * scale;
}

inline double loss_and_grad(const ClassifierModel& model, std::span<const Sample> batch, Parameters& grad) {
    std::vector<const Sample*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& s : batch) ptrs.push_back(&s);
    return loss_and_grad(model, std::span<const Sample* const>(ptrs), grad);
}

enum class OptimizerKind { Sgd, SgdMomentum, Adam };

/// First-order optimizers over a fixed list of parameter blocks.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, std::vector<std::size_t> block_sizes)
        : kind_(kind), lr_(learning_rate) {
        if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate must be positive");
        for (auto n : block_sizes) {
            if (kind_ != OptimizerKind::Sgd) m_.emplace_back(n, 0.0);
            if (kind_ == OptimizerKind::Adam) v_.emplace_back(n, 0.0);
        }
    }

    Optimizer(OptimizerKind kind, double learning_rate, const Parameters& shape)
        : Optimizer(kind, learning_rate, {shape.w1.size(), shape.b1.size(), shape.w2.size(), shape.b2.size()}) {}

    void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t b = 0; b < params.size(); ++b) {
            const auto p = params[b];
            const auto g = grads[b];
            switch (kind_) {
            case OptimizerKind::Sgd:
                for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
                break;
            case OptimizerKind::SgdMomentum: {
                auto& m = m_[b];
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m[i] = momentum_ * m[i] + g[i];
                    p[i] -= lr_ * m[i];
                }
                break;
            }
            case OptimizerKind::Adam: {
                auto& m = m_[b];
                auto& v = v_[b];
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                    p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
                }
                break;
            }
            }
        }
    }

    void step(Parameters& params, const Parameters& grad) {
        const auto pb = params.blocks();
        const auto gb = grad.blocks();
        step(std::span<const std::span<double>>(pb), std::span<const std::span<const double>>(gb));
    }

private:
    OptimizerKind kind_;
    double lr_;
    double momentum_ = 0.9;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct TrainConfig {
    FeatureConfig features;
    std::size_t hidden = 128;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::size_t epochs = 5;
    std::size_t pretrain_epochs = 3;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;
    TargetMode target_mode = TargetMode::Ambiguity;

    void validate() const {
        features.validate();
        if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be > 0");
        if (hidden < 1) throw Error(ErrorKind::InvalidConfig, "hidden must be >= 1");
    }
};

struct SampleSet {
    std::vector<Sample> samples;
    std::vector<std::size_t> source_index; // position of each sample in the corpus
    std::size_t skipped_no_majority = 0;
};

/// Featurizes a corpus with targets for the given mode. This is the only
/// place where the two training arms differ.
inline SampleSet make_samples(const Corpus& corpus, TargetMode mode, const FeatureConfig& features) {
    SampleSet out;
    out.samples.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& ex = corpus[i];
        std::optional<LabelDistribution> target;
        if (mode == TargetMode::Ambiguity) {
            const bool annotated = ex.annotator_counts.has_value() || ex.regression_p.has_value();
            if (ex.target) {
                if (annotated) {
                    const auto implied = implied_distribution(ex);
                    for (std::size_t k = 0; k < 3; ++k)
                        if (std::abs(implied[k] - (*ex.target)[k]) > kSimplexTolerance)
                            throw Error(ErrorKind::TargetModeMismatch,
                                        "example '" + ex.uid + "' target disagrees with its annotations");
                }
                target = ex.target;
            } else if (annotated) {
                target = implied_distribution(ex);
            } else {
                throw Error(ErrorKind::TargetModeMismatch, "example '" + ex.uid + "' has no ambiguity target");
            }
        } else {
            const auto gold = effective_gold(ex);
            if (!gold) throw Error(ErrorKind::TargetModeMismatch, "example '" + ex.uid + "' has no gold label");
            const auto label = to_label(*gold);
            if (!label) {
                ++out.skipped_no_majority;
                continue;
            }
            target = LabelDistribution::one_hot(*label);
        }
        out.samples.push_back({featurize(ex.premise, ex.hypothesis, features), *target});
        out.source_index.push_back(i);
    }
    return out;
}

struct EpochRecord {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    ClassifierModel model;
    std::vector<EpochRecord> history;
    std::size_t skipped_no_majority = 0;
};

/// Mini-batch training of an existing model on prepared samples. Shuffle
/// order comes from (seed, stream) only, so both target modes see the same
/// batches when they share samples.
inline void fit(ClassifierModel& model, const std::vector<Sample>& samples, std::size_t epochs,
                std::size_t batch_size, double learning_rate, OptimizerKind optimizer, std::uint64_t seed,
                const std::string& split, std::vector<EpochRecord>& history) {
    if (epochs == 0) return;
    if (samples.empty()) throw Error(ErrorKind::EmptyCorpus, "no trainable examples");
    Optimizer opt(optimizer, learning_rate, model.params);
    Rng rng(derive_seed(seed, "shuffle/" + split));
    std::vector<std::size_t> order(samples.size());
    Parameters grad;
    std::vector<const Sample*> batch;
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                const Sample* s = &samples[order[i]];
                batch.push_back(s);
                if (argmax(forward(model, s->x)) == argmax(s->target)) ++correct;
            }
            loss_sum += loss_and_grad(model, batch, grad) * static_cast<double>(batch.size());
            opt.step(model.params, grad);
        }
        const double n = static_cast<double>(samples.size());
        history.push_back({epoch, split, loss_sum / n, static_cast<double>(correct) / n});
    }
}

/// Optional gold-label pretraining followed by training in cfg.target_mode.
/// `init` continues from an existing model instead of a fresh initialization.
inline TrainResult train(const TrainConfig& cfg, const Corpus& corpus, const Corpus* pretrain = nullptr,
                         const ClassifierModel* init = nullptr) {
    cfg.validate();
    TrainResult result;
    if (init) {
        if (!(init->features == cfg.features) || init->hidden() != cfg.hidden)
            throw Error(ErrorKind::DimensionMismatch, "initial model shape differs from the train config");
        result.model = *init;
    } else {
        result.model = init_model(cfg.features, cfg.hidden, cfg.seed);
    }
    if (pretrain && cfg.pretrain_epochs > 0) {
        auto pre = make_samples(*pretrain, TargetMode::GoldOneHot, cfg.features);
        fit(result.model, pre.samples, cfg.pretrain_epochs, cfg.batch_size, cfg.learning_rate, cfg.optimizer,
            cfg.seed, "pretrain", result.history);
    }
    if (cfg.epochs == 0) return result;
    if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "training corpus is empty");
    auto set = make_samples(corpus, cfg.target_mode, cfg.features);
    result.skipped_no_majority = set.skipped_no_majority;
    fit(result.model, set.samples, cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.optimizer, cfg.seed, "train",
        result.history);
    return result;
}

struct Prediction {
    std::string uid;
    LabelDistribution dist;
    GoldLabel label = GoldLabel::Entailment;
};

inline std::vector<Prediction> predict(const ClassifierModel& model, const Corpus& corpus) {
    std::vector<Prediction> out;
    out.reserve(corpus.size());
    for (const auto& ex : corpus) {
        const auto d = forward(model, featurize(ex.premise, ex.hypothesis, model.features));
        out.push_back({ex.uid, d, to_gold(argmax(d))});
    }
    return out;
}

// Model file layout (all integers and doubles little-endian):
//   8 bytes  magic "AMBIMDL\0"
//   u32      format version (1)
//   u64      hash_dim
//   u8       unigrams, u8 bigrams
//   u64      hash_seed
//   u64      hidden
//   u64      rng_seed
//   f64[]    w1 (hash_dim x hidden, row-major), b1, w2 (hidden x 3), b2
inline constexpr char kModelMagic[8] = {'A', 'M', 'B', 'I', 'M', 'D', 'L', '\0'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v, int bytes = 8) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(buf, bytes);
}

inline std::uint64_t get_u64(std::istream& is, int bytes = 8) {
    unsigned char buf[8] = {};
    if (!is.read(reinterpret_cast<char*>(buf), bytes)) throw Error(ErrorKind::BadModelFile, "truncated model file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

} // namespace detail

inline void save_model(std::ostream& os, const ClassifierModel& model) {
    os.write(kModelMagic, sizeof kModelMagic);
    detail::put_u64(os, kModelVersion, 4);
    detail::put_u64(os, model.features.hash_dim);
    detail::put_u64(os, model.features.unigrams ? 1 : 0, 1);
    detail::put_u64(os, model.features.bigrams ? 1 : 0, 1);
    detail::put_u64(os, model.features.hash_seed);
    detail::put_u64(os, model.params.hidden);
    detail::put_u64(os, model.rng_seed);
    for (auto block : model.params.blocks())
        for (double v : block) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw Error(ErrorKind::Io, "failed writing model");
}

inline ClassifierModel load_model(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
        throw Error(ErrorKind::BadModelFile, "bad magic bytes");
    if (detail::get_u64(is, 4) != kModelVersion) throw Error(ErrorKind::BadModelFile, "unsupported version");
    FeatureConfig f;
    f.hash_dim = detail::get_u64(is);
    f.unigrams = detail::get_u64(is, 1) != 0;
    f.bigrams = detail::get_u64(is, 1) != 0;
    f.hash_seed = detail::get_u64(is);
    const std::uint64_t hidden = detail::get_u64(is);
    const std::uint64_t seed = detail::get_u64(is);
    try {
        f.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::BadModelFile, e.what());
    }
    if (hidden == 0 || hidden > (std::uint64_t{1} << 20)) throw Error(ErrorKind::BadModelFile, "bad hidden size");
    auto model = zero_model(f, hidden, seed);
    for (auto block : model.params.blocks())
        for (double& v : block) v = std::bit_cast<double>(detail::get_u64(is));
    return model;
}

} // namespace ambinli
