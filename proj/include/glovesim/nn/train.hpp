#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "glovesim/nn/tensor.hpp"

namespace glovesim::nn {

// Named parameter set with per-tensor Adam state. The moment buffers live
// beside the values so an optimizer step is one pass over the entries.
template <typename T>
struct BasicModelParams {
    struct Entry {
        std::string name;
        BasicTensor<T> tensor;
        std::vector<T> m, v;  // first/second moment running averages
    };
    std::vector<Entry> entries;
    std::int64_t step = 0;  // shared Adam timestep across all tensors

    BasicTensor<T>& add(std::string name, BasicTensor<T> t) {
        for (const auto& e : entries) {
            if (e.name == name) throw param_error("duplicate parameter name: " + name);
        }
        t.set_requires_grad(true);
        Entry e;
        e.name = std::move(name);
        e.tensor = std::move(t);
        e.m.assign(e.tensor.size(), T(0));
        e.v.assign(e.tensor.size(), T(0));
        entries.push_back(std::move(e));
        return entries.back().tensor;
    }

    BasicTensor<T>& find(std::string_view name) {
        for (auto& e : entries) {
            if (e.name == name) return e.tensor;
        }
        throw lookup_error("no parameter named " + std::string(name));
    }
    const BasicTensor<T>& find(std::string_view name) const {
        for (const auto& e : entries) {
            if (e.name == name) return e.tensor;
        }
        throw lookup_error("no parameter named " + std::string(name));
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.tensor.size();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries) e.tensor.zero_grad();
    }

    // Flat copy of all values, in entry order: cheap best-checkpoint storage.
    std::vector<T> snapshot() const {
        std::vector<T> out;
        out.reserve(parameter_count());
        for (const auto& e : entries) {
            out.insert(out.end(), e.tensor.values().begin(), e.tensor.values().end());
        }
        return out;
    }
    void restore(const std::vector<T>& snap) {
        if (snap.size() != parameter_count()) throw shape_error("snapshot size mismatch");
        std::size_t at = 0;
        for (auto& e : entries) {
            std::copy(snap.begin() + long(at), snap.begin() + long(at + e.tensor.size()),
                      e.tensor.values().begin());
            at += e.tensor.size();
        }
    }
};

using ModelParams = BasicModelParams<float>;

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter tensor. Arithmetic
// runs in double regardless of the stored scalar type; the shared timestep
// advances once per call.
template <typename T>
void adam_step(BasicModelParams<T>& params, const AdamConfig& cfg) {
    if (cfg.learning_rate < 0.0) throw param_error("adam: learning rate must not be negative");
    params.step += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(params.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(params.step));
    for (auto& e : params.entries) {
        const auto& g = e.tensor.grad();
        auto& val = e.tensor.values();
        const bool has_grad = g.size() == val.size();
        for (std::size_t i = 0; i < val.size(); ++i) {
            const double gi = has_grad ? double(g[i]) : 0.0;
            const double m = cfg.beta1 * double(e.m[i]) + (1.0 - cfg.beta1) * gi;
            const double v = cfg.beta2 * double(e.v[i]) + (1.0 - cfg.beta2) * gi * gi;
            e.m[i] = T(m);
            e.v[i] = T(v);
            const double mhat = m / c1;
            const double vhat = v / c2;
            val[i] = T(double(val[i]) - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

struct TrainConfig {
    double learning_rate = 1e-4;
    int max_epochs = 2000;
    int patience = 100;
    int batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const {
        if (learning_rate < 0.0) throw param_error("learning_rate must not be negative");
        if (max_epochs <= 0) throw param_error("max_epochs must be positive");
        if (patience <= 0) throw param_error("patience must be positive");
        if (batch_size <= 0) throw param_error("batch_size must be positive");
    }
};

// What a model must expose to be driven by train_loop. batch_loss builds the
// graph for the given training rows (dropout active, drawing from the given
// stream); eval_loss scores the validation split in evaluation mode.
template <typename T>
struct BasicTrainable {
    virtual ~BasicTrainable() = default;
    virtual BasicModelParams<T>& params() = 0;
    virtual int train_count() const = 0;
    virtual BasicTensor<T> batch_loss(const std::vector<int>& rows, bool training, Rng& dropout_rng) = 0;
    virtual double eval_loss() = 0;
};

using Trainable = BasicTrainable<float>;

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double best_val_loss = 0.0;
    int best_epoch = 0;     // 1-based epoch whose parameters were kept
    int stopped_epoch = 0;  // last epoch that actually ran
};

// Epoch loop with early stopping: shuffled mini-batches, one Adam step per
// batch, validation after each epoch. Training halts once validation loss
// has not improved for `patience` consecutive epochs (or at max_epochs), and
// the parameters that scored the best validation loss are restored.
template <typename T>
TrainResult train_loop(BasicTrainable<T>& model, const TrainConfig& cfg) {
    cfg.validate();
    const int n = model.train_count();
    if (n <= 0) throw param_error("train_loop: empty training set");

    Rng shuffle_rng(cfg.seed);
    // Distinct stream so changing the batch size cannot alias dropout draws.
    Rng dropout_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<T> best = model.params().snapshot();
    int stale = 0;

    const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(start + cfg.batch_size, n);
            std::vector<int> rows(order.begin() + start, order.begin() + stop);
            auto loss = model.batch_loss(rows, true, dropout_rng);
            model.params().zero_grads();
            loss.backward();
            adam_step(model.params(), adam);
            loss_sum += double(loss.item());
            ++batches;
        }
        const double val = model.eval_loss();
        if (!std::isfinite(val)) throw numeric_error("validation loss is not finite");
        result.history.push_back(EpochStats{loss_sum / batches, val});
        result.stopped_epoch = epoch;
        if (val < result.best_val_loss) {
            result.best_val_loss = val;
            result.best_epoch = epoch;
            best = model.params().snapshot();
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    model.params().restore(best);
    return result;
}

}  // namespace glovesim::nn
