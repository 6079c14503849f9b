#pragma once

// Frozen-encoder transfer probe. A trained classifier's hidden layer is the
// representation; only a fresh 1- or 2-layer head is trained on the
// downstream task, with dev-loss early stopping and multi-seed aggregation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "features.hpp"
#include "model.hpp"
#include "random.hpp"

namespace ambinli {

enum class TransferTask { Regression01, BinaryClassification };

struct TaskExample {
    std::string id;
    std::string premise;
    std::string hypothesis;
    double label = 0.0;
};

struct TaskData {
    std::vector<TaskExample> train;
    std::vector<TaskExample> dev;
    std::vector<TaskExample> test;
};

struct TransferConfig {
    TransferTask task = TransferTask::Regression01;
    std::vector<std::size_t> head_layers{1, 2};
    std::size_t head_hidden = 128;
    std::array<double, 3> split{0.8, 0.1, 0.1};
    std::size_t patience = 2;
    std::size_t max_epochs = 100;
    std::size_t trials = 5;
    std::uint64_t base_seed = 0;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    double min_improvement = 1e-6;

    void validate() const {
        if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9 || split[0] < 0 || split[1] < 0 || split[2] < 0)
            throw Error(ErrorKind::InvalidConfig, "split fractions must be non-negative and sum to 1");
        if (trials < 1) throw Error(ErrorKind::InvalidConfig, "trials must be >= 1");
        for (auto l : head_layers)
            if (l != 1 && l != 2) throw Error(ErrorKind::InvalidConfig, "head layers must be 1 or 2");
        if (head_hidden < 1 || batch_size < 1 || !(learning_rate > 0.0))
            throw Error(ErrorKind::InvalidConfig, "bad head hyperparameters");
    }
};

/// Seeded shuffle, then train/dev/test slices by fraction (remainder to test).
inline TaskData split_task(std::vector<TaskExample> data, const std::array<double, 3>& fractions, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "task-split"));
    rng.shuffle(std::span<TaskExample>(data));
    const auto n = data.size();
    const auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n)));
    const auto n_dev = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n)));
    TaskData out;
    out.train.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.dev.assign(data.begin() + static_cast<std::ptrdiff_t>(n_train),
                   data.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
    out.test.assign(data.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), data.end());
    return out;
}

using Representation = std::vector<double>;

/// Hidden-layer activations of the frozen encoder, one per example.
inline std::vector<Representation> encode(const ClassifierModel& model, const std::vector<TaskExample>& examples) {
    std::vector<Representation> reps;
    reps.reserve(examples.size());
    for (const auto& ex : examples)
        reps.push_back(hidden_representation(model, featurize(ex.premise, ex.hypothesis, model.features)));
    return reps;
}

inline std::vector<Representation> encode(const ClassifierModel& model, const Corpus& corpus) {
    std::vector<Representation> reps;
    reps.reserve(corpus.size());
    for (const auto& ex : corpus)
        reps.push_back(hidden_representation(model, featurize(ex.premise, ex.hypothesis, model.features)));
    return reps;
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1); 0 for fewer than two values.
inline double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Sample Pearson correlation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::DimensionMismatch, "pearson inputs differ in length");
    if (xs.size() < 2) throw Error(ErrorKind::DegenerateVariance, "need at least two points");
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorKind::DegenerateVariance, "zero variance input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double mse(std::span<const double> predicted, std::span<const double> labels) {
    if (predicted.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "mse inputs differ in length");
    if (predicted.empty()) throw Error(ErrorKind::EmptyData, "mse of nothing");
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) s += (predicted[i] - labels[i]) * (predicted[i] - labels[i]);
    return s / static_cast<double>(predicted.size());
}

/// Patience rule: stop once `patience` consecutive epochs fail to lower the
/// best loss by more than min_improvement.
class EarlyStopping {
public:
    EarlyStopping(std::size_t patience, double min_improvement) : patience_(patience), min_improvement_(min_improvement) {}

    /// Records one epoch's loss; returns true if it is a new best.
    bool update(double loss) {
        ++epochs_;
        if (loss < best_ - min_improvement_) {
            best_ = loss;
            best_epoch_ = epochs_;
            since_best_ = 0;
            return true;
        }
        ++since_best_;
        return false;
    }

    bool should_stop() const noexcept { return since_best_ >= patience_; }
    double best() const noexcept { return best_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }

private:
    std::size_t patience_;
    double min_improvement_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
    std::size_t epochs_ = 0;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w; // in x out
    std::vector<double> b;
};

/// Small MLP head: linear, or linear-ELU-linear. Regression heads end in a
/// sigmoid (labels in [0,1]); classification heads in a 2-way softmax.
struct Head {
    TransferTask task = TransferTask::Regression01;
    std::vector<DenseLayer> layers;

    std::size_t outputs() const { return layers.back().out; }
};

inline Head init_head(std::size_t input_dim, std::size_t depth, std::size_t hidden, TransferTask task, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "head-init"));
    const std::size_t outputs = task == TransferTask::Regression01 ? 1 : 2;
    std::vector<std::size_t> dims{input_dim};
    if (depth == 2) dims.push_back(hidden);
    dims.push_back(outputs);
    Head head{task, {}};
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer{dims[l], dims[l + 1], std::vector<double>(dims[l] * dims[l + 1]), std::vector<double>(dims[l + 1], 0.0)};
        const double a = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double& w : layer.w) w = rng.uniform(-a, a);
        head.layers.push_back(std::move(layer));
    }
    return head;
}

namespace detail {

struct HeadTrace {
    std::vector<std::vector<double>> inputs; // input to each layer
    std::vector<std::vector<double>> pre;    // pre-activation of each layer
    std::vector<double> output;              // sigmoid value or softmax probabilities
};

inline HeadTrace head_forward(const Head& head, const Representation& x) {
    HeadTrace t;
    std::vector<double> cur = x;
    for (std::size_t l = 0; l < head.layers.size(); ++l) {
        const auto& L = head.layers[l];
        if (cur.size() != L.in) throw Error(ErrorKind::DimensionMismatch, "representation size mismatch");
        std::vector<double> z = L.b;
        for (std::size_t i = 0; i < L.in; ++i) {
            const double v = cur[i];
            if (v == 0.0) continue;
            const double* row = L.w.data() + i * L.out;
            for (std::size_t o = 0; o < L.out; ++o) z[o] += v * row[o];
        }
        t.inputs.push_back(std::move(cur));
        t.pre.push_back(z);
        if (l + 1 < head.layers.size()) {
            for (double& v : z) v = elu(v);
            cur = std::move(z);
        }
    }
    const auto& logits = t.pre.back();
    if (head.task == TransferTask::Regression01) {
        t.output = {1.0 / (1.0 + std::exp(-logits[0]))};
    } else {
        const double m = std::max(logits[0], logits[1]);
        const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
        t.output = {e0 / (e0 + e1), e1 / (e0 + e1)};
    }
    return t;
}

inline double example_loss(const Head& head, const std::vector<double>& output, double label) {
    if (head.task == TransferTask::Regression01) return (output[0] - label) * (output[0] - label);
    const double p = output[label > 0.5 ? 1 : 0];
    return -std::log(std::max(p, std::numeric_limits<double>::min()));
}

} // namespace detail

/// Head output per example: sigmoid value (regression) or P(label = 1).
inline std::vector<double> head_predict(const Head& head, const std::vector<Representation>& reps) {
    std::vector<double> out;
    out.reserve(reps.size());
    for (const auto& r : reps) {
        const auto t = detail::head_forward(head, r);
        out.push_back(head.task == TransferTask::Regression01 ? t.output[0] : t.output[1]);
    }
    return out;
}

/// Mean loss: MSE for regression, cross-entropy (nats) for classification.
inline double head_loss(const Head& head, const std::vector<Representation>& reps, const std::vector<double>& labels) {
    if (reps.empty()) throw Error(ErrorKind::EmptyData, "no examples");
    double s = 0.0;
    for (std::size_t i = 0; i < reps.size(); ++i)
        s += detail::example_loss(head, detail::head_forward(head, reps[i]).output, labels[i]);
    return s / static_cast<double>(reps.size());
}

struct HeadFit {
    Head head;                     // best-dev checkpoint
    std::vector<double> dev_losses; // one per completed epoch
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

inline void check_labels(const std::vector<double>& labels, TransferTask task) {
    for (double y : labels) {
        const bool ok = task == TransferTask::Regression01 ? (y >= 0.0 && y <= 1.0) : (y == 0.0 || y == 1.0);
        if (!ok) throw Error(ErrorKind::LabelTypeMismatch, "label " + std::to_string(y) + " invalid for task");
    }
}

inline HeadFit train_head(const std::vector<Representation>& train_x, const std::vector<double>& train_y,
                          const std::vector<Representation>& dev_x, const std::vector<double>& dev_y,
                          const TransferConfig& cfg, std::size_t depth, std::uint64_t seed) {
    cfg.validate();
    if (train_x.empty() || dev_x.empty()) throw Error(ErrorKind::EmptyData, "head needs train and dev examples");
    if (train_x.size() != train_y.size() || dev_x.size() != dev_y.size())
        throw Error(ErrorKind::DimensionMismatch, "representation/label counts differ");
    check_labels(train_y, cfg.task);
    check_labels(dev_y, cfg.task);

    Head head = init_head(train_x.front().size(), depth, cfg.head_hidden, cfg.task, seed);
    std::vector<std::size_t> sizes;
    for (const auto& L : head.layers) {
        sizes.push_back(L.w.size());
        sizes.push_back(L.b.size());
    }
    Optimizer opt(OptimizerKind::Adam, cfg.learning_rate, sizes);
    std::vector<std::vector<double>> grads;
    for (auto n : sizes) grads.emplace_back(n, 0.0);

    Rng rng(derive_seed(seed, "head-shuffle"));
    std::vector<std::size_t> order(train_x.size());
    EarlyStopping stopper(cfg.patience, cfg.min_improvement);
    HeadFit fit{head, {}, 0, 0};

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s) {
                const auto i = order[s];
                const auto t = detail::head_forward(head, train_x[i]);
                std::vector<double> delta(head.outputs());
                if (cfg.task == TransferTask::Regression01) {
                    const double y = t.output[0];
                    delta[0] = 2.0 * (y - train_y[i]) * y * (1.0 - y) * scale;
                } else {
                    const std::size_t k = train_y[i] > 0.5 ? 1 : 0;
                    for (std::size_t o = 0; o < 2; ++o) delta[o] = (t.output[o] - (o == k ? 1.0 : 0.0)) * scale;
                }
                for (std::size_t l = head.layers.size(); l-- > 0;) {
                    const auto& L = head.layers[l];
                    auto& gw = grads[2 * l];
                    auto& gb = grads[2 * l + 1];
                    const auto& in = t.inputs[l];
                    for (std::size_t o = 0; o < L.out; ++o) gb[o] += delta[o];
                    std::vector<double> back(L.in, 0.0);
                    for (std::size_t j = 0; j < L.in; ++j) {
                        const double* row = L.w.data() + j * L.out;
                        double* grow = gw.data() + j * L.out;
                        for (std::size_t o = 0; o < L.out; ++o) {
                            grow[o] += in[j] * delta[o];
                            back[j] += row[o] * delta[o];
                        }
                    }
                    if (l > 0) {
                        const auto& pre = t.pre[l - 1];
                        for (std::size_t j = 0; j < L.in; ++j) back[j] *= elu_derivative(pre[j]);
                    }
                    delta = std::move(back);
                }
            }
            std::vector<std::span<double>> pspans;
            std::vector<std::span<const double>> gspans;
            for (std::size_t l = 0; l < head.layers.size(); ++l) {
                pspans.emplace_back(head.layers[l].w);
                pspans.emplace_back(head.layers[l].b);
                gspans.emplace_back(grads[2 * l]);
                gspans.emplace_back(grads[2 * l + 1]);
            }
            opt.step(pspans, gspans);
        }
        const double dev_loss = head_loss(head, dev_x, dev_y);
        fit.dev_losses.push_back(dev_loss);
        fit.epochs_run = epoch;
        if (stopper.update(dev_loss)) {
            fit.head = head;
            fit.best_epoch = epoch;
        }
        if (stopper.should_stop()) break;
    }
    return fit;
}

struct HeadMetrics {
    double primary = 0.0;   // Pearson (regression) or accuracy (classification)
    double secondary = 0.0; // MSE (regression) or CE loss (classification)
};

inline HeadMetrics score_head(const Head& head, const std::vector<Representation>& x, const std::vector<double>& y) {
    const auto pred = head_predict(head, x);
    if (head.task == TransferTask::Regression01) return {pearson(pred, y), mse(pred, y)};
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if ((pred[i] > 0.5 ? 1.0 : 0.0) == y[i]) ++correct;
    return {static_cast<double>(correct) / static_cast<double>(pred.size()), head_loss(head, x, y)};
}

struct TransferRow {
    std::string encoder;
    std::size_t head_layers = 1;
    std::vector<HeadMetrics> trials;
    double primary_mean = 0.0;
    double primary_std = 0.0;
    double secondary_mean = 0.0;
    double secondary_std = 0.0;
    bool std_undefined = false; // single trial: std reported as 0
};

struct TransferTable {
    TransferTask task = TransferTask::Regression01;
    std::vector<TransferRow> rows; // head depth major, encoder minor
};

struct NamedEncoder {
    std::string name;
    const ClassifierModel* model = nullptr;
};

/// Trains cfg.trials heads (seeds base_seed + trial) per encoder and head
/// depth, scoring each on the test split.
inline TransferTable run_trials(const TransferConfig& cfg, const TaskData& data, const std::vector<NamedEncoder>& encoders) {
    cfg.validate();
    auto labels = [](const std::vector<TaskExample>& xs) {
        std::vector<double> y;
        y.reserve(xs.size());
        for (const auto& x : xs) y.push_back(x.label);
        return y;
    };
    const auto ytr = labels(data.train), ydev = labels(data.dev), yte = labels(data.test);
    if (data.test.empty()) throw Error(ErrorKind::EmptyData, "no test examples");

    struct Encoded {
        std::vector<Representation> train, dev, test;
    };
    std::vector<Encoded> encoded;
    for (const auto& e : encoders)
        encoded.push_back({encode(*e.model, data.train), encode(*e.model, data.dev), encode(*e.model, data.test)});

    TransferTable table{cfg.task, {}};
    for (std::size_t depth : cfg.head_layers) {
        for (std::size_t e = 0; e < encoders.size(); ++e) {
            TransferRow row{encoders[e].name, depth, {}, 0, 0, 0, 0, cfg.trials < 2};
            std::vector<double> prim, sec;
            for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
                const auto fit = train_head(encoded[e].train, ytr, encoded[e].dev, ydev, cfg, depth, cfg.base_seed + trial);
                const auto m = score_head(fit.head, encoded[e].test, yte);
                row.trials.push_back(m);
                prim.push_back(m.primary);
                sec.push_back(m.secondary);
            }
            row.primary_mean = mean(prim);
            row.primary_std = sample_std(prim);
            row.secondary_mean = mean(sec);
            row.secondary_std = sample_std(sec);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

} // namespace ambinli
