#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glovesim/nn/ops.hpp"
#include "glovesim/nn/train.hpp"
#include "glovesim/rng.hpp"

namespace glovesim {

// Gesture classifier: a 1-D convolution slides over the 14 intra-digit
// channels of a single frame, the feature map feeds a two-layer head.
class GestureClassifier {
public:
    static constexpr int kInputChannels = 14;
    static constexpr int kClasses = 30;
    static constexpr int kFilters = 64;
    static constexpr int kKernel = 2;
    static constexpr int kHidden = 128;
    static constexpr int kFlat = kFilters * (kInputChannels - kKernel + 1);
    static constexpr float kDropout = 0.2f;

    explicit GestureClassifier(Rng& rng);

    // x: (batch, 14) normalized channels -> (batch, 30) logits
    nn::Tensor forward(const nn::Tensor& x, bool training, Rng& dropout_rng);

    nn::ModelParams& params() { return params_; }
    const nn::ModelParams& params() const { return params_; }

private:
    nn::ModelParams params_;
    nn::Tensor conv_w_, conv_b_, fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

// Pose reconstructor: a small encoder over a short temporal window of the
// full 28-channel readout, mean-pooled into a keypoint regression head.
class PoseReconstructor {
public:
    static constexpr int kWindow = 3;
    static constexpr int kInputChannels = 28;
    static constexpr int kModelDim = 64;
    static constexpr int kHeads = 2;
    static constexpr int kLayers = 3;
    static constexpr int kFeedForward = 64;
    static constexpr int kOutputs = 45;
    static constexpr float kDropout = 0.1f;

    explicit PoseReconstructor(Rng& rng);

    // x: (batch, 3, 28) normalized window -> (batch, 45) z-scored keypoints
    nn::Tensor forward(const nn::Tensor& x, bool training, Rng& dropout_rng);

    nn::ModelParams& params() { return params_; }
    const nn::ModelParams& params() const { return params_; }

private:
    struct Layer {
        nn::AttentionWeights<float> attn;
        nn::Tensor ln1_g, ln1_b;
        nn::Tensor ff1_w, ff1_b, ff2_w, ff2_b;
        nn::Tensor ln2_g, ln2_b;
    };

    nn::ModelParams params_;
    nn::Tensor proj_w_, proj_b_, pos_embed_;
    std::vector<Layer> layers_;
    nn::Tensor head_w_, head_b_;
};

// One window per frame: the `window` most recent frames of its segment,
// flattened time-major; before enough history exists the first frame of
// the segment is replicated.
std::vector<std::vector<float>> make_windows(const std::vector<std::vector<float>>& rows,
                                             const std::vector<std::size_t>& segment_starts,
                                             int window = PoseReconstructor::kWindow);

// Batched no-grad inference helpers.
std::vector<int> classify(GestureClassifier& model, const std::vector<std::vector<float>>& x,
                          std::span<const std::size_t> rows, int batch_size = 512);
std::vector<std::vector<float>> reconstruct(PoseReconstructor& model,
                                            const std::vector<std::vector<float>>& windows,
                                            std::span<const std::size_t> rows,
                                            int batch_size = 1024);

// Adapters that feed preprocessed rows into the generic training loop.
class ClassifierTrainable final : public nn::Trainable {
public:
    ClassifierTrainable(GestureClassifier& model, const std::vector<std::vector<float>>& x,
                        const std::vector<int>& labels, std::vector<std::size_t> train_rows,
                        std::vector<std::size_t> val_rows);

    nn::ModelParams& params() override { return model_->params(); }
    int train_count() const override { return static_cast<int>(train_rows_.size()); }
    nn::Tensor batch_loss(const std::vector<int>& rows, bool training, Rng& dropout_rng) override;
    double eval_loss() override;

private:
    GestureClassifier* model_;
    const std::vector<std::vector<float>>* x_;
    const std::vector<int>* labels_;
    std::vector<std::size_t> train_rows_, val_rows_;
};

class ReconstructorTrainable final : public nn::Trainable {
public:
    ReconstructorTrainable(PoseReconstructor& model, const std::vector<std::vector<float>>& windows,
                           const std::vector<std::vector<float>>& targets,
                           std::vector<std::size_t> train_rows, std::vector<std::size_t> val_rows);

    nn::ModelParams& params() override { return model_->params(); }
    int train_count() const override { return static_cast<int>(train_rows_.size()); }
    nn::Tensor batch_loss(const std::vector<int>& rows, bool training, Rng& dropout_rng) override;
    double eval_loss() override;

private:
    PoseReconstructor* model_;
    const std::vector<std::vector<float>>* windows_;
    const std::vector<std::vector<float>>* targets_;
    std::vector<std::size_t> train_rows_, val_rows_;
};

}  // namespace glovesim
