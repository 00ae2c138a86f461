#include "glovesim/models.hpp"

#include <cmath>

#include "glovesim/error.hpp"

namespace glovesim {

namespace {

// fan-based uniform init keeps activation scale stable through the stack
nn::Tensor glorot(Rng& rng, std::initializer_list<int> dims, int fan_in, int fan_out) {
    const float limit = std::sqrt(6.0f / float(fan_in + fan_out));
    return nn::Tensor::uniform(rng, -limit, limit, dims);
}

nn::Tensor gather_rows(const std::vector<std::vector<float>>& x,
                       const std::vector<std::size_t>& subset, int cols,
                       std::initializer_list<int> dims) {
    std::vector<float> flat;
    flat.reserve(subset.size() * std::size_t(cols));
    for (const std::size_t r : subset) {
        if (r >= x.size()) throw param_error("row index out of range");
        if (int(x[r].size()) != cols) throw shape_error("row width does not match model input");
        flat.insert(flat.end(), x[r].begin(), x[r].end());
    }
    return nn::Tensor::from(std::move(flat), dims);
}

}  // namespace

GestureClassifier::GestureClassifier(Rng& rng) {
    conv_w_ = glorot(rng, {kFilters, 1, kKernel}, kKernel, kFilters * kKernel);
    conv_b_ = nn::Tensor::zeros({kFilters});
    fc1_w_ = glorot(rng, {kFlat, kHidden}, kFlat, kHidden);
    fc1_b_ = nn::Tensor::zeros({kHidden});
    fc2_w_ = glorot(rng, {kHidden, kClasses}, kHidden, kClasses);
    fc2_b_ = nn::Tensor::zeros({kClasses});

    params_.add("conv1.weight", conv_w_);
    params_.add("conv1.bias", conv_b_);
    params_.add("fc1.weight", fc1_w_);
    params_.add("fc1.bias", fc1_b_);
    params_.add("fc2.weight", fc2_w_);
    params_.add("fc2.bias", fc2_b_);
}

nn::Tensor GestureClassifier::forward(const nn::Tensor& x, bool training, Rng& dropout_rng) {
    if (x.rank() != 2 || x.dim(1) != kInputChannels) {
        throw shape_error("classifier expects (batch, 14) input");
    }
    const int b = x.dim(0);
    auto h = nn::reshape(x, {b, 1, kInputChannels});
    h = nn::relu(nn::conv1d(h, conv_w_, conv_b_));
    h = nn::reshape(h, {b, kFlat});
    h = nn::relu(nn::linear(h, fc1_w_, fc1_b_));
    h = nn::dropout(h, kDropout, training, dropout_rng);
    return nn::linear(h, fc2_w_, fc2_b_);
}

PoseReconstructor::PoseReconstructor(Rng& rng) {
    proj_w_ = glorot(rng, {kInputChannels, kModelDim}, kInputChannels, kModelDim);
    proj_b_ = nn::Tensor::zeros({kModelDim});
    pos_embed_ = nn::Tensor::uniform(rng, -0.1f, 0.1f, {1, kWindow, kModelDim});
    params_.add("proj.weight", proj_w_);
    params_.add("proj.bias", proj_b_);
    params_.add("pos_embed", pos_embed_);

    layers_.resize(kLayers);
    for (int i = 0; i < kLayers; ++i) {
        Layer& l = layers_[std::size_t(i)];
        auto attn_mat = [&] { return glorot(rng, {kModelDim, kModelDim}, kModelDim, kModelDim); };
        l.attn.wq = attn_mat();
        l.attn.bq = nn::Tensor::zeros({kModelDim});
        l.attn.wk = attn_mat();
        l.attn.bk = nn::Tensor::zeros({kModelDim});
        l.attn.wv = attn_mat();
        l.attn.bv = nn::Tensor::zeros({kModelDim});
        l.attn.wo = attn_mat();
        l.attn.bo = nn::Tensor::zeros({kModelDim});
        l.ln1_g = nn::Tensor::filled({kModelDim}, 1.0f);
        l.ln1_b = nn::Tensor::zeros({kModelDim});
        l.ff1_w = glorot(rng, {kModelDim, kFeedForward}, kModelDim, kFeedForward);
        l.ff1_b = nn::Tensor::zeros({kFeedForward});
        l.ff2_w = glorot(rng, {kFeedForward, kModelDim}, kFeedForward, kModelDim);
        l.ff2_b = nn::Tensor::zeros({kModelDim});
        l.ln2_g = nn::Tensor::filled({kModelDim}, 1.0f);
        l.ln2_b = nn::Tensor::zeros({kModelDim});

        const std::string p = "enc" + std::to_string(i) + ".";
        params_.add(p + "attn.wq", l.attn.wq);
        params_.add(p + "attn.bq", l.attn.bq);
        params_.add(p + "attn.wk", l.attn.wk);
        params_.add(p + "attn.bk", l.attn.bk);
        params_.add(p + "attn.wv", l.attn.wv);
        params_.add(p + "attn.bv", l.attn.bv);
        params_.add(p + "attn.wo", l.attn.wo);
        params_.add(p + "attn.bo", l.attn.bo);
        params_.add(p + "ln1.gamma", l.ln1_g);
        params_.add(p + "ln1.beta", l.ln1_b);
        params_.add(p + "ff1.weight", l.ff1_w);
        params_.add(p + "ff1.bias", l.ff1_b);
        params_.add(p + "ff2.weight", l.ff2_w);
        params_.add(p + "ff2.bias", l.ff2_b);
        params_.add(p + "ln2.gamma", l.ln2_g);
        params_.add(p + "ln2.beta", l.ln2_b);
    }

    head_w_ = glorot(rng, {kModelDim, kOutputs}, kModelDim, kOutputs);
    head_b_ = nn::Tensor::zeros({kOutputs});
    params_.add("head.weight", head_w_);
    params_.add("head.bias", head_b_);
}

nn::Tensor PoseReconstructor::forward(const nn::Tensor& x, bool training, Rng& dropout_rng) {
    if (x.rank() != 3 || x.dim(1) != kWindow || x.dim(2) != kInputChannels) {
        throw shape_error("reconstructor expects (batch, 3, 28) input");
    }
    auto h = nn::linear(x, proj_w_, proj_b_);
    h = nn::add(h, pos_embed_);
    for (auto& l : layers_) {
        auto a = nn::multi_head_attention(h, l.attn, kHeads);
        a = nn::dropout(a, kDropout, training, dropout_rng);
        h = nn::layer_norm(nn::add(h, a), l.ln1_g, l.ln1_b);
        auto f = nn::linear(nn::relu(nn::linear(h, l.ff1_w, l.ff1_b)), l.ff2_w, l.ff2_b);
        f = nn::dropout(f, kDropout, training, dropout_rng);
        h = nn::layer_norm(nn::add(h, f), l.ln2_g, l.ln2_b);
    }
    auto pooled = nn::mean_over_dim1(h);
    return nn::linear(pooled, head_w_, head_b_);
}

std::vector<std::vector<float>> make_windows(const std::vector<std::vector<float>>& rows,
                                             const std::vector<std::size_t>& segment_starts,
                                             int window) {
    if (window <= 0) throw param_error("window must be positive");
    if (rows.empty()) return {};
    if (segment_starts.empty() || segment_starts.front() != 0) {
        throw param_error("segment starts must begin at frame 0");
    }
    const std::size_t cols = rows.front().size();
    std::vector<std::vector<float>> out(rows.size());
    for (std::size_t seg = 0; seg < segment_starts.size(); ++seg) {
        const std::size_t lo = segment_starts[seg];
        const std::size_t hi =
            seg + 1 < segment_starts.size() ? segment_starts[seg + 1] : rows.size();
        for (std::size_t t = lo; t < hi; ++t) {
            std::vector<float>& w = out[t];
            w.reserve(std::size_t(window) * cols);
            for (int k = window - 1; k >= 0; --k) {
                const std::size_t src = t >= lo + std::size_t(k) ? t - std::size_t(k) : lo;
                if (rows[src].size() != cols) throw shape_error("ragged rows cannot be windowed");
                w.insert(w.end(), rows[src].begin(), rows[src].end());
            }
        }
    }
    return out;
}

std::vector<int> classify(GestureClassifier& model, const std::vector<std::vector<float>>& x,
                          std::span<const std::size_t> rows, int batch_size) {
    if (batch_size <= 0) throw param_error("batch size must be positive");
    nn::NoGradGuard guard;
    Rng unused(0);
    std::vector<int> out;
    out.reserve(rows.size());
    std::vector<std::size_t> chunk;
    for (std::size_t start = 0; start < rows.size(); start += std::size_t(batch_size)) {
        const std::size_t stop = std::min(rows.size(), start + std::size_t(batch_size));
        chunk.assign(rows.begin() + long(start), rows.begin() + long(stop));
        auto logits = model.forward(
            gather_rows(x, chunk, GestureClassifier::kInputChannels,
                        {int(chunk.size()), GestureClassifier::kInputChannels}),
            false, unused);
        const float* v = logits.data();
        for (std::size_t r = 0; r < chunk.size(); ++r) {
            int best = 0;
            for (int c = 1; c < GestureClassifier::kClasses; ++c) {
                if (v[r * GestureClassifier::kClasses + std::size_t(c)] >
                    v[r * GestureClassifier::kClasses + std::size_t(best)]) {
                    best = c;
                }
            }
            out.push_back(best);
        }
    }
    return out;
}

std::vector<std::vector<float>> reconstruct(PoseReconstructor& model,
                                            const std::vector<std::vector<float>>& windows,
                                            std::span<const std::size_t> rows, int batch_size) {
    if (batch_size <= 0) throw param_error("batch size must be positive");
    nn::NoGradGuard guard;
    Rng unused(0);
    constexpr int kIn = PoseReconstructor::kWindow * PoseReconstructor::kInputChannels;
    std::vector<std::vector<float>> out;
    out.reserve(rows.size());
    std::vector<std::size_t> chunk;
    for (std::size_t start = 0; start < rows.size(); start += std::size_t(batch_size)) {
        const std::size_t stop = std::min(rows.size(), start + std::size_t(batch_size));
        chunk.assign(rows.begin() + long(start), rows.begin() + long(stop));
        auto pred = model.forward(
            gather_rows(windows, chunk, kIn,
                        {int(chunk.size()), PoseReconstructor::kWindow,
                         PoseReconstructor::kInputChannels}),
            false, unused);
        const float* v = pred.data();
        for (std::size_t r = 0; r < chunk.size(); ++r) {
            out.emplace_back(v + r * PoseReconstructor::kOutputs,
                             v + (r + 1) * PoseReconstructor::kOutputs);
        }
    }
    return out;
}

ClassifierTrainable::ClassifierTrainable(GestureClassifier& model,
                                         const std::vector<std::vector<float>>& x,
                                         const std::vector<int>& labels,
                                         std::vector<std::size_t> train_rows,
                                         std::vector<std::size_t> val_rows)
    : model_(&model),
      x_(&x),
      labels_(&labels),
      train_rows_(std::move(train_rows)),
      val_rows_(std::move(val_rows)) {
    if (x.size() != labels.size()) throw shape_error("one label per row is required");
    if (train_rows_.empty() || val_rows_.empty()) {
        throw param_error("training and validation sets must be non-empty");
    }
}

nn::Tensor ClassifierTrainable::batch_loss(const std::vector<int>& rows, bool training,
                                           Rng& dropout_rng) {
    std::vector<std::size_t> subset;
    subset.reserve(rows.size());
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (const int r : rows) {
        subset.push_back(train_rows_[std::size_t(r)]);
        labels.push_back((*labels_)[train_rows_[std::size_t(r)]]);
    }
    auto logits = model_->forward(
        gather_rows(*x_, subset, GestureClassifier::kInputChannels,
                    {int(subset.size()), GestureClassifier::kInputChannels}),
        training, dropout_rng);
    return nn::cross_entropy(logits, labels);
}

double ClassifierTrainable::eval_loss() {
    nn::NoGradGuard guard;
    Rng unused(0);
    double total = 0.0;
    constexpr std::size_t kChunk = 2048;
    std::vector<std::size_t> chunk;
    for (std::size_t start = 0; start < val_rows_.size(); start += kChunk) {
        const std::size_t stop = std::min(val_rows_.size(), start + kChunk);
        chunk.assign(val_rows_.begin() + long(start), val_rows_.begin() + long(stop));
        std::vector<int> labels;
        labels.reserve(chunk.size());
        for (const std::size_t r : chunk) labels.push_back((*labels_)[r]);
        auto logits = model_->forward(
            gather_rows(*x_, chunk, GestureClassifier::kInputChannels,
                        {int(chunk.size()), GestureClassifier::kInputChannels}),
            false, unused);
        total += double(nn::cross_entropy(logits, labels).item()) * double(chunk.size());
    }
    return total / double(val_rows_.size());
}

ReconstructorTrainable::ReconstructorTrainable(PoseReconstructor& model,
                                               const std::vector<std::vector<float>>& windows,
                                               const std::vector<std::vector<float>>& targets,
                                               std::vector<std::size_t> train_rows,
                                               std::vector<std::size_t> val_rows)
    : model_(&model),
      windows_(&windows),
      targets_(&targets),
      train_rows_(std::move(train_rows)),
      val_rows_(std::move(val_rows)) {
    if (windows.size() != targets.size()) throw shape_error("one target per window is required");
    if (train_rows_.empty() || val_rows_.empty()) {
        throw param_error("training and validation sets must be non-empty");
    }
}

nn::Tensor ReconstructorTrainable::batch_loss(const std::vector<int>& rows, bool training,
                                              Rng& dropout_rng) {
    std::vector<std::size_t> subset;
    subset.reserve(rows.size());
    for (const int r : rows) subset.push_back(train_rows_[std::size_t(r)]);
    constexpr int kIn = PoseReconstructor::kWindow * PoseReconstructor::kInputChannels;
    auto pred = model_->forward(
        gather_rows(*windows_, subset, kIn,
                    {int(subset.size()), PoseReconstructor::kWindow,
                     PoseReconstructor::kInputChannels}),
        training, dropout_rng);
    auto truth = gather_rows(*targets_, subset, PoseReconstructor::kOutputs,
                             {int(subset.size()), PoseReconstructor::kOutputs});
    return nn::mse(pred, truth);
}

double ReconstructorTrainable::eval_loss() {
    nn::NoGradGuard guard;
    Rng unused(0);
    double total = 0.0;
    constexpr std::size_t kChunk = 2048;
    constexpr int kIn = PoseReconstructor::kWindow * PoseReconstructor::kInputChannels;
    std::vector<std::size_t> chunk;
    for (std::size_t start = 0; start < val_rows_.size(); start += kChunk) {
        const std::size_t stop = std::min(val_rows_.size(), start + kChunk);
        chunk.assign(val_rows_.begin() + long(start), val_rows_.begin() + long(stop));
        auto pred = model_->forward(
            gather_rows(*windows_, chunk, kIn,
                        {int(chunk.size()), PoseReconstructor::kWindow,
                         PoseReconstructor::kInputChannels}),
            false, unused);
        auto truth = gather_rows(*targets_, chunk, PoseReconstructor::kOutputs,
                                 {int(chunk.size()), PoseReconstructor::kOutputs});
        total += double(nn::mse(pred, truth).item()) * double(chunk.size());
    }
    return total / double(val_rows_.size());
}

}  // namespace glovesim
