#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace glovesim {

// Row = true class, column = predicted class.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<long long> counts;

    long long at(int truth, int pred) const {
        return counts[std::size_t(truth) * std::size_t(classes) + std::size_t(pred)];
    }
    long long total() const;
    double accuracy() const;
    std::string to_csv() const;
};

ConfusionMatrix make_confusion(std::span<const int> truth, std::span<const int> predicted,
                               int classes);

// Euclidean distance statistics between predicted and true keypoint clouds,
// both given as rows of 45 values (15 keypoints, xyz-major). Accumulated in
// double; `stddev` is the population deviation over all frame x keypoint
// distances.
struct DistanceStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::array<double, 15> per_keypoint{};
};

DistanceStats average_distance(const std::vector<std::vector<float>>& predicted,
                               const std::vector<std::vector<float>>& truth);

// Column-wise mean of the selected rows (double accumulation).
std::vector<float> mean_rows(const std::vector<std::vector<float>>& rows,
                             std::span<const std::size_t> subset);

// Ridge-regularized least-squares readout with a bias term, solved by
// normal equations in double. A reference point for the learned models.
class LinearReadout {
public:
    static LinearReadout fit(const std::vector<std::vector<float>>& x,
                             const std::vector<std::vector<float>>& y,
                             std::span<const std::size_t> rows, double ridge = 1e-8);

    std::vector<float> predict(std::span<const float> x) const;
    int inputs() const { return in_; }
    int outputs() const { return out_; }

private:
    int in_ = 0, out_ = 0;
    std::vector<double> w_;  // (in_ + 1) x out_, bias in the last row
};

// Plain-text evaluation reports; all numbers carry fixed precision so a
// rerun writes byte-identical files.
struct GestureReport {
    std::size_t train_frames = 0, val_frames = 0, test_frames = 0;
    ConfusionMatrix confusion;
    std::string to_text() const;
};

struct ReconReport {
    std::size_t train_frames = 0, val_frames = 0, test_frames = 0;
    DistanceStats model;
    DistanceStats mean_baseline;
    DistanceStats linear_baseline;
    std::string to_text() const;
};

}  // namespace glovesim
