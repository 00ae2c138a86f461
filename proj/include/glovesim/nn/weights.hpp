#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "glovesim/nn/tensor.hpp"
#include "glovesim/nn/train.hpp"

namespace glovesim::nn {

// Tag byte stored in the weight file so a load can refuse the wrong model.
enum class ModelKind : std::uint8_t {
    gesture_classifier = 1,
    pose_reconstructor = 2,
    preprocess_state = 3,
};

struct WeightFile {
    ModelKind kind = ModelKind::gesture_classifier;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& find(const std::string& name) const;
    bool contains(const std::string& name) const;
};

// Binary container: magic "CGWT", version, model kind, then each tensor as
// (name, rank, dims, float32 data), all little-endian.
void save_weights(const std::string& path, ModelKind kind,
                  const std::vector<std::pair<std::string, Tensor>>& tensors);
void save_params(const std::string& path, ModelKind kind, const ModelParams& params);
WeightFile load_weights(const std::string& path);

// Copies file tensors into an existing parameter set; every parameter must
// be present with a matching shape.
void load_into_params(const WeightFile& file, ModelParams& params);

}  // namespace glovesim::nn
