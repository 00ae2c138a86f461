#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glovesim/geometry.hpp"
#include "glovesim/gestures.hpp"
#include "glovesim/sensor.hpp"

namespace glovesim {

// One simulated wearer. hand_length scales the whole geometry; the seed
// drives that subject's measurement noise.
struct SubjectProfile {
    int subject_id = 0;
    double hand_length_mm = 175.0;  // must stay within [160, 190]
    enum class Sex : std::uint8_t { female = 0, male = 1 };
    Sex sex = Sex::female;  // metadata only, never used by the simulation
    std::uint64_t seed = 0;

    void validate() const;
};

// Deterministic roster: unique ids 1..count, hand lengths spread across the
// supported range, alternating sex tag, per-subject noise seeds.
std::vector<SubjectProfile> make_subjects(int count, std::uint64_t seed);

// A frame collection plus the structure the raw frames cannot carry:
// which contiguous recording each frame belongs to and (for gesture data)
// which subject produced it.
struct Dataset {
    ChannelMode mode = ChannelMode::intra_only;
    std::vector<Frame> frames;
    std::vector<int> subject_of;              // per-frame subject_id; empty if single-source
    std::vector<std::size_t> segment_starts;  // ascending, first element 0

    int channel_count() const { return glovesim::channel_count(mode); }
    std::size_t segment_count() const { return segment_starts.size(); }
    // Half-open [start, end) frame range of one segment.
    std::pair<std::size_t, std::size_t> segment(std::size_t i) const;
    void validate() const;
};

// Gesture-classification corpus: every subject holds every gesture for
// frames_per_gesture frames (first half static, second half oscillating
// 0.05 rad at 0.5 Hz on every DOF), measured on the 14 intra channels with
// the subject's own noise stream. Frames are labeled with the gesture index.
Dataset generate_gesture_dataset(const std::vector<SubjectProfile>& subjects, const GestureLibrary& lib,
                                 int frames_per_gesture, double fps, const NoiseConfig& noise);

// Hand-reconstruction corpus: one subject, one continuous random movement
// cut into three contiguous segments (train/val/test). Poses follow a
// smoothed random walk in which neighboring digits' flexion pulls on
// abduction, so fingers bend and approach together. Every frame carries all
// 28 channels and the 45-coordinate keypoint target. pose_trace, when given,
// receives the exact pose behind each frame.
Dataset generate_reconstruction_dataset(const SubjectProfile& subject,
                                        const std::array<std::size_t, 3>& segment_lengths, double fps,
                                        const NoiseConfig& noise, std::uint64_t seed,
                                        std::vector<HandPose>* pose_trace = nullptr);

// Row-index view of a train/validation/test partition.
struct DatasetSplit {
    std::vector<std::size_t> train, val, test;
    void validate(std::size_t frame_count) const;  // disjoint and in range
};

// Subject-level holdout: every frame of a holdout subject goes to test; the
// rest split 8:2 into train/val stratified per gesture label (seeded, so
// reproducible). Holding out every subject is an error.
DatasetSplit split_gesture_dataset(const Dataset& ds, const std::vector<int>& holdout_subjects,
                                   std::uint64_t seed);

// Reconstruction data is already partitioned by its contiguous segments.
DatasetSplit split_by_segments(const Dataset& ds);

// Binary dataset container IO. Segment boundaries of multi-recording files
// are recovered from timestamp restarts on load; continuous single-recording
// streams load as one segment (pass the segment lengths to resegment).
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);
void resegment(Dataset& ds, std::span<const std::size_t> segment_lengths);

// Reattaches per-frame subject ids to a gesture dataset laid out
// subject-major (the generator's order).
void attach_subjects(Dataset& ds, const std::vector<SubjectProfile>& subjects, int frames_per_subject);

// Mirror of the binary columns for inspection.
void export_csv(const std::string& path, const Dataset& ds);

constexpr std::size_t gesture_frame_count(int subjects, int gestures, int frames_per_gesture) {
    return std::size_t(subjects) * std::size_t(gestures) * std::size_t(frames_per_gesture);
}
constexpr double segment_duration_s(std::size_t frames, double fps) {
    return double(frames) / fps;
}

}  // namespace glovesim
