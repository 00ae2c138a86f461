#include "glovesim/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glovesim/nn/weights.hpp"

namespace glovesim {

MovingAverage::MovingAverage(int channels, int window) : channels_(channels), window_(window) {
    if (channels <= 0) throw param_error("filter needs at least one channel");
    if (window <= 0) throw param_error("filter window must be positive");
    ring_.assign(std::size_t(window) * std::size_t(channels), 0.0f);
}

void MovingAverage::reset() {
    count_ = 0;
    newest_ = -1;
}

void MovingAverage::push(std::span<const float> in, std::span<float> out) {
    if (int(in.size()) != channels_ || int(out.size()) != channels_) {
        throw shape_error("filter frame size does not match channel count");
    }
    newest_ = (newest_ + 1) % window_;
    count_ = std::min(count_ + 1, window_);
    std::copy(in.begin(), in.end(), ring_.begin() + std::size_t(newest_) * std::size_t(channels_));
    // fixed newest-to-oldest summation order keeps results bit-reproducible
    for (int c = 0; c < channels_; ++c) {
        double sum = 0.0;
        for (int k = 0; k < count_; ++k) {
            const int slot = (newest_ + window_ - k) % window_;
            sum += double(ring_[std::size_t(slot) * std::size_t(channels_) + std::size_t(c)]);
        }
        out[std::size_t(c)] = float(sum / count_);
    }
}

void PreprocessState::validate() const {
    if (window <= 0) throw param_error("window must be positive");
    if (ch_min.empty() || ch_min.size() != ch_max.size()) {
        throw shape_error("channel statistics missing or inconsistent");
    }
    for (std::size_t c = 0; c < ch_min.size(); ++c) {
        if (ch_min[c] > ch_max[c]) throw param_error("channel min exceeds max");
    }
    if (target_mean.size() != target_std.size()) throw shape_error("target statistics inconsistent");
}

void PreprocessState::normalize(std::span<const float> in, std::span<float> out) const {
    if (in.size() != ch_min.size() || out.size() != ch_min.size()) {
        throw shape_error("frame size does not match fitted channel count");
    }
    for (std::size_t c = 0; c < ch_min.size(); ++c) {
        const float range = ch_max[c] - ch_min[c];
        out[c] = range > 0.0f ? 2.0f * (in[c] - ch_min[c]) / range - 1.0f : 0.0f;
    }
}

void PreprocessState::normalize_target(std::span<const float> in, std::span<float> out) const {
    if (!has_target_stats()) throw param_error("no target statistics were fitted");
    if (in.size() != target_mean.size() || out.size() != target_mean.size()) {
        throw shape_error("target size does not match fitted statistics");
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = target_std[i] > 0.0f ? (in[i] - target_mean[i]) / target_std[i] : 0.0f;
    }
}

void PreprocessState::denormalize_target(std::span<const float> in, std::span<float> out) const {
    if (!has_target_stats()) throw param_error("no target statistics were fitted");
    if (in.size() != target_mean.size() || out.size() != target_mean.size()) {
        throw shape_error("target size does not match fitted statistics");
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = in[i] * target_std[i] + target_mean[i];
    }
}

void PreprocessState::save(const std::string& path) const {
    validate();
    using nn::Tensor;
    std::vector<std::pair<std::string, Tensor>> tensors;
    tensors.emplace_back("pp.window", Tensor::from({float(window)}, {1}));
    tensors.emplace_back("pp.ch_min",
                         Tensor::from(std::vector<float>(ch_min), {int(ch_min.size())}));
    tensors.emplace_back("pp.ch_max",
                         Tensor::from(std::vector<float>(ch_max), {int(ch_max.size())}));
    if (has_target_stats()) {
        tensors.emplace_back("pp.target_mean",
                             Tensor::from(std::vector<float>(target_mean), {int(target_mean.size())}));
        tensors.emplace_back("pp.target_std",
                             Tensor::from(std::vector<float>(target_std), {int(target_std.size())}));
    }
    nn::save_weights(path, nn::ModelKind::preprocess_state, tensors);
}

PreprocessState PreprocessState::load(const std::string& path) {
    const auto file = nn::load_weights(path);
    if (file.kind != nn::ModelKind::preprocess_state) {
        throw io_error("file does not hold preprocessing statistics: " + path);
    }
    PreprocessState s;
    s.window = int(std::lround(file.find("pp.window").values()[0]));
    s.ch_min = file.find("pp.ch_min").values();
    s.ch_max = file.find("pp.ch_max").values();
    if (file.contains("pp.target_mean")) {
        s.target_mean = file.find("pp.target_mean").values();
        s.target_std = file.find("pp.target_std").values();
    }
    s.validate();
    return s;
}

std::vector<std::vector<float>> filter_channels(const Dataset& ds, int window) {
    ds.validate();
    const int channels = ds.channel_count();
    std::vector<std::vector<float>> out(ds.frames.size());
    MovingAverage filter(channels, window);
    for (std::size_t s = 0; s < ds.segment_count(); ++s) {
        const auto [start, end] = ds.segment(s);
        filter.reset();
        for (std::size_t i = start; i < end; ++i) {
            out[i].resize(std::size_t(channels));
            filter.push(ds.frames[i].channels, out[i]);
        }
    }
    return out;
}

PreprocessState fit_preprocess(const Dataset& ds, std::span<const std::size_t> train_rows, int window) {
    if (train_rows.empty()) throw param_error("cannot fit preprocessing on an empty training set");
    const auto filtered = filter_channels(ds, window);
    const std::size_t channels = std::size_t(ds.channel_count());

    PreprocessState s;
    s.window = window;
    s.ch_min.assign(channels, std::numeric_limits<float>::infinity());
    s.ch_max.assign(channels, -std::numeric_limits<float>::infinity());
    bool any_target = false;
    std::vector<double> t_sum(45, 0.0), t_sq(45, 0.0);
    std::size_t t_count = 0;

    for (const std::size_t row : train_rows) {
        if (row >= ds.frames.size()) throw param_error("training row out of range");
        for (std::size_t c = 0; c < channels; ++c) {
            s.ch_min[c] = std::min(s.ch_min[c], filtered[row][c]);
            s.ch_max[c] = std::max(s.ch_max[c], filtered[row][c]);
        }
        const Frame& f = ds.frames[row];
        if (f.has_target) {
            any_target = true;
            ++t_count;
            for (std::size_t i = 0; i < f.target.size(); ++i) {
                t_sum[i] += double(f.target[i]);
                t_sq[i] += double(f.target[i]) * double(f.target[i]);
            }
        }
    }
    if (any_target) {
        s.target_mean.resize(45);
        s.target_std.resize(45);
        for (std::size_t i = 0; i < 45; ++i) {
            const double mean = t_sum[i] / double(t_count);
            const double var = std::max(0.0, t_sq[i] / double(t_count) - mean * mean);
            s.target_mean[i] = float(mean);
            s.target_std[i] = float(std::sqrt(var));
        }
    }
    s.validate();
    return s;
}

PreprocessedData apply_preprocess(const PreprocessState& state, const Dataset& ds) {
    state.validate();
    if (state.channel_count() != ds.channel_count()) {
        throw shape_error("dataset channel count does not match fitted statistics");
    }
    PreprocessedData out;
    out.x = filter_channels(ds, state.window);
    for (auto& row : out.x) state.normalize(row, row);
    out.target.resize(ds.frames.size());
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        const Frame& f = ds.frames[i];
        if (f.has_target) {
            if (!state.has_target_stats()) {
                throw param_error("dataset has targets but statistics were fit without them");
            }
            out.target[i].resize(45);
            state.normalize_target(f.target, out.target[i]);
        }
    }
    return out;
}

OnlinePreprocessor::OnlinePreprocessor(PreprocessState state)
    : state_(std::move(state)),
      filter_(state_.channel_count(), state_.window),
      filtered_(std::size_t(state_.channel_count())) {
    state_.validate();
}

void OnlinePreprocessor::reset() { filter_.reset(); }

std::vector<float> OnlinePreprocessor::process(std::span<const float> raw_channels) {
    filter_.push(raw_channels, filtered_);
    std::vector<float> out(filtered_.size());
    state_.normalize(filtered_, out);
    return out;
}

}  // namespace glovesim
