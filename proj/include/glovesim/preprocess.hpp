#pragma once

#include <span>
#include <string>
#include <vector>

#include "glovesim/dataset.hpp"

namespace glovesim {

// Causal moving average over a channel stream. The first window-1 frames
// average the growing prefix (an impulse at t=0 decays 1, 1/2, 1/3, ...).
// Both the batch and the streaming paths run through this one kernel, so
// their outputs are bit-identical by construction.
class MovingAverage {
public:
    MovingAverage(int channels, int window);
    void reset();
    // Filters one frame; in and out must hold `channels` values each.
    void push(std::span<const float> in, std::span<float> out);

    int channels() const { return channels_; }
    int window() const { return window_; }

private:
    int channels_;
    int window_;
    int count_ = 0;   // frames currently in the ring (saturates at window_)
    int newest_ = -1; // ring slot of the most recent frame
    std::vector<float> ring_;  // window_ x channels_
};

// Fitted normalization: per-channel min-max to [-1, 1] plus per-coordinate
// target z-scores, both computed from training rows only.
struct PreprocessState {
    int window = 5;
    std::vector<float> ch_min, ch_max;
    std::vector<float> target_mean, target_std;  // empty when fit without targets

    int channel_count() const { return static_cast<int>(ch_min.size()); }
    bool has_target_stats() const { return !target_mean.empty(); }
    void validate() const;

    // y = 2(x - min)/(max - min) - 1; a zero-range channel maps to 0.
    void normalize(std::span<const float> in, std::span<float> out) const;
    // z = (t - mean)/std; a zero-spread coordinate maps to 0.
    void normalize_target(std::span<const float> in, std::span<float> out) const;
    void denormalize_target(std::span<const float> in, std::span<float> out) const;

    // Persisted in the weight-file container under pp.* tensor names.
    void save(const std::string& path) const;
    static PreprocessState load(const std::string& path);
};

// Filters every segment of the dataset through the shared kernel and
// returns one filtered channel vector per frame.
std::vector<std::vector<float>> filter_channels(const Dataset& ds, int window);

// Fits normalization statistics on the filtered values of the given
// training rows (and on their targets, when present).
PreprocessState fit_preprocess(const Dataset& ds, std::span<const std::size_t> train_rows,
                               int window = 5);

struct PreprocessedData {
    std::vector<std::vector<float>> x;        // filtered + normalized channels per frame
    std::vector<std::vector<float>> target;   // z-scored targets (empty rows when absent)
};

// Batch application over every frame; filtering restarts at each segment.
PreprocessedData apply_preprocess(const PreprocessState& state, const Dataset& ds);

// Streaming transform: one frame in, one preprocessed frame out, through
// the same kernel the batch path uses.
class OnlinePreprocessor {
public:
    explicit OnlinePreprocessor(PreprocessState state);
    void reset();
    std::vector<float> process(std::span<const float> raw_channels);
    const PreprocessState& state() const { return state_; }

private:
    PreprocessState state_;
    MovingAverage filter_;
    std::vector<float> filtered_;
};

}  // namespace glovesim
