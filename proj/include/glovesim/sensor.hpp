#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "glovesim/channels.hpp"
#include "glovesim/geometry.hpp"
#include "glovesim/rng.hpp"

namespace glovesim {

// Measurement noise model. snr_db is defined against the full-flexion
// reference signal 0.135; quantization acts on absolute capacitance in fF.
// An infinite snr_db with step 0 is the exact noiseless measurement.
struct NoiseConfig {
    double snr_db = 60.0;
    double quantization_step_ff = 3.0;
    std::uint64_t seed = 0;

    void validate() const;  // snr_db > 0, step >= 0
};

enum class ChannelMode : std::uint8_t { intra_only = 14, full = 28 };

inline int channel_count(ChannelMode m) { return static_cast<int>(m); }

// One timestamped sample of relative-capacitance channels, optionally
// labeled (gesture id) and/or paired with a keypoint target. `saturated`
// records the inter-distance collision clamp; it is in-memory state and is
// not persisted by the dataset format.
struct Frame {
    static constexpr std::uint16_t kNoLabel = 0xFFFF;

    std::uint64_t timestamp_ns = 0;
    std::vector<float> channels;
    std::uint16_t label = kNoLabel;
    bool has_target = false;
    std::array<float, 45> target{};  // 15 keypoints, xyz-major
    bool saturated = false;

    bool has_label() const { return label != kNoLabel; }
};

std::array<float, 45> flatten_cloud(const PointCloud15& cloud);
PointCloud15 unflatten_cloud(const std::array<float, 45>& flat);

// Parallel-plate law C = eps*A/d. d <= 0 is the plates-touching singularity
// (numeric_error); bad eps/area are parameter errors.
double parallel_plate_capacitance(double epsilon, double area, double distance);

// (c - c0)/c0; c0 <= 0 is a parameter error.
double relative_capacitance(double c, double c0);

// Gauge law: 0.45 * strain, valid on the calibrated strain range [0, 0.30].
double strain_to_relcap(double strain);

// Bend law: strain = (0.30 / (pi/2)) * theta, so a full right-angle flexion
// reaches the 0.30 calibration ceiling; clamped there.
double joint_to_strain(double theta);

// Total strain of one trace: bend contributions of every joint it crosses,
// summed and clamped at 0.30.
double electrode_strain(const HandPose& pose, const ElectrodeSpec& spec);

// The shipped channel layout for a given hand, with inter-channel baselines
// calibrated from the flat pose.
ChannelMap standard_channel_map(const HandGeometry& geom);

// Noiseless channel banks in map order.
std::array<double, ChannelMap::kIntraCount> intra_channels(const HandPose& pose,
                                                           const HandGeometry& geom,
                                                           const ChannelMap& map);
// saturated (optional out) reports the 1 mm collision clamp.
std::array<double, ChannelMap::kInterCount> inter_channels(const HandPose& pose,
                                                           const HandGeometry& geom,
                                                           const ChannelMap& map,
                                                           bool* saturated = nullptr);

// Full measurement: noiseless channels + Gaussian noise + quantization
// through absolute capacitance. Deterministic given the generator state and
// call sequence (one normal draw per channel when noise is finite).
Frame measure_frame(const HandPose& pose, const HandGeometry& geom, const ChannelMap& map,
                    const NoiseConfig& noise, ChannelMode mode, Rng& rng,
                    std::uint64_t timestamp_ns,
                    std::optional<std::uint16_t> label = std::nullopt);

}  // namespace glovesim
