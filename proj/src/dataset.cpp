#include "glovesim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "glovesim/binio.hpp"
#include "glovesim/rng.hpp"

namespace glovesim {

namespace {
constexpr char kMagic[5] = "CGDS";
constexpr std::uint16_t kVersion = 1;
constexpr double kOscAmplitudeRad = 0.05;
constexpr double kOscFrequencyHz = 0.5;
// Random-walk latent dynamics: retention 0.99 with step scale 0.113 gives a
// stationary spread of about 0.8 per DOF before the tanh squash.
constexpr double kLatentRetention = 0.99;
constexpr double kLatentStep = 0.113;
constexpr double kNeighborCoupling = 0.4;

std::uint64_t frame_timestamp(std::size_t i, double fps) {
    return static_cast<std::uint64_t>(std::llround(double(i) * 1e9 / fps));
}
}  // namespace

void SubjectProfile::validate() const {
    if (hand_length_mm < 160.0 || hand_length_mm > 190.0) {
        throw param_error("subject hand length must lie in [160, 190] mm");
    }
}

std::vector<SubjectProfile> make_subjects(int count, std::uint64_t seed) {
    if (count <= 0) throw param_error("subject count must be positive");
    Rng rng(seed);
    std::vector<SubjectProfile> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        SubjectProfile s;
        s.subject_id = i + 1;
        s.hand_length_mm = rng.uniform(160.0, 190.0);
        s.sex = (i % 2 == 0) ? SubjectProfile::Sex::female : SubjectProfile::Sex::male;
        s.seed = rng.next_u64();
        s.validate();
        out.push_back(s);
    }
    return out;
}

std::pair<std::size_t, std::size_t> Dataset::segment(std::size_t i) const {
    if (i >= segment_starts.size()) throw lookup_error("segment index out of range");
    const std::size_t start = segment_starts[i];
    const std::size_t end = i + 1 < segment_starts.size() ? segment_starts[i + 1] : frames.size();
    return {start, end};
}

void Dataset::validate() const {
    const auto channels = static_cast<std::size_t>(channel_count());
    for (const auto& f : frames) {
        if (f.channels.size() != channels) throw shape_error("frame channel count does not match mode");
    }
    if (!subject_of.empty() && subject_of.size() != frames.size()) {
        throw shape_error("per-frame subject list does not match frame count");
    }
    if (frames.empty()) {
        if (!segment_starts.empty()) throw param_error("segments declared on an empty dataset");
        return;
    }
    if (segment_starts.empty() || segment_starts.front() != 0) {
        throw param_error("first segment must start at frame 0");
    }
    for (std::size_t i = 1; i < segment_starts.size(); ++i) {
        if (segment_starts[i] <= segment_starts[i - 1] || segment_starts[i] >= frames.size()) {
            throw param_error("segment starts must be strictly ascending and in range");
        }
    }
}

Dataset generate_gesture_dataset(const std::vector<SubjectProfile>& subjects, const GestureLibrary& lib,
                                 int frames_per_gesture, double fps, const NoiseConfig& noise) {
    if (subjects.empty()) throw param_error("at least one subject is required");
    if (frames_per_gesture <= 0 || frames_per_gesture % 2 != 0) {
        throw param_error("frames_per_gesture must be positive and even");
    }
    if (fps <= 0.0) throw param_error("fps must be positive");
    noise.validate();
    {
        std::set<int> ids;
        for (const auto& s : subjects) {
            s.validate();
            if (!ids.insert(s.subject_id).second) throw param_error("subject ids must be unique");
        }
    }

    Dataset ds;
    ds.mode = ChannelMode::intra_only;
    const std::size_t total =
        gesture_frame_count(int(subjects.size()), GestureLibrary::kGestureCount, frames_per_gesture);
    ds.frames.reserve(total);
    ds.subject_of.reserve(total);

    const int half = frames_per_gesture / 2;
    for (const auto& subject : subjects) {
        const HandGeometry geom = HandGeometry::from_hand_length(subject.hand_length_mm);
        const ChannelMap map = standard_channel_map(geom);
        Rng rng(subject.seed);
        for (int g = 0; g < lib.kGestureCount; ++g) {
            const HandPose& base = lib.entry(g).pose;
            ds.segment_starts.push_back(ds.frames.size());
            for (int i = 0; i < frames_per_gesture; ++i) {
                HandPose pose = base;
                if (i >= half) {
                    // gentle oscillation around the held pose, phase 0 at onset
                    const double tau = double(i - half) / fps;
                    const double delta =
                        kOscAmplitudeRad * std::sin(2.0 * std::numbers::pi * kOscFrequencyHz * tau);
                    for (int d = 0; d < HandPose::kDofCount; ++d) {
                        pose.set_angle(d, std::clamp(base.angle(d) + delta, HandPose::dof_min(d),
                                                     HandPose::dof_max(d)));
                    }
                }
                ds.frames.push_back(measure_frame(pose, geom, map, noise, ChannelMode::intra_only, rng,
                                                  frame_timestamp(std::size_t(i), fps),
                                                  std::uint16_t(g)));
                ds.subject_of.push_back(subject.subject_id);
            }
        }
    }
    ds.validate();
    return ds;
}

Dataset generate_reconstruction_dataset(const SubjectProfile& subject,
                                        const std::array<std::size_t, 3>& segment_lengths, double fps,
                                        const NoiseConfig& noise, std::uint64_t seed,
                                        std::vector<HandPose>* pose_trace) {
    subject.validate();
    noise.validate();
    if (fps <= 0.0) throw param_error("fps must be positive");
    for (const std::size_t len : segment_lengths) {
        if (len == 0) throw param_error("segment lengths must be positive");
    }

    const HandGeometry geom = HandGeometry::from_hand_length(subject.hand_length_mm);
    const ChannelMap map = standard_channel_map(geom);
    Rng rng(seed);

    Dataset ds;
    ds.mode = ChannelMode::full;
    const std::size_t total = segment_lengths[0] + segment_lengths[1] + segment_lengths[2];
    ds.frames.reserve(total);
    ds.segment_starts = {0, segment_lengths[0], segment_lengths[0] + segment_lengths[1]};
    if (pose_trace) {
        pose_trace->clear();
        pose_trace->reserve(total);
    }

    // One smoothed random-walk latent per DOF; neighbor digits' knuckle
    // latents bleed into each digit's abduction so bending and approaching
    // happen together.
    std::array<double, HandPose::kDofCount> z{};
    int knuckle_dof[kDigitCount];
    for (int digit = 0; digit < int(kDigitCount); ++digit) {
        const Digit dg = Digit(digit);
        knuckle_dof[digit] = HandPose::flexion_dof(dg, dg == Digit::thumb ? 1 : 0);
    }
    for (std::size_t i = 0; i < total; ++i) {
        for (auto& zi : z) zi = kLatentRetention * zi + kLatentStep * rng.normal();

        HandPose pose;
        for (int digit = 0; digit < int(kDigitCount); ++digit) {
            const Digit dg = Digit(digit);
            for (int j = 0; j < HandPose::flexion_count(dg); ++j) {
                const int dof = HandPose::flexion_dof(dg, j);
                pose.set_angle(dof, std::numbers::pi / 4.0 * (std::tanh(z[std::size_t(dof)]) + 1.0));
            }
            const int dof = HandPose::abduction_dof(dg);
            double coupled = 0.0;
            int neighbors = 0;
            if (digit > 0) {
                coupled += z[std::size_t(knuckle_dof[digit - 1])];
                ++neighbors;
            }
            if (digit + 1 < int(kDigitCount)) {
                coupled += z[std::size_t(knuckle_dof[digit + 1])];
                ++neighbors;
            }
            const double u = z[std::size_t(dof)] + kNeighborCoupling * coupled / neighbors;
            if (dg == Digit::thumb) {
                pose.set_angle(dof, 0.6 * (std::tanh(u) + 1.0));
            } else {
                pose.set_angle(dof, 0.35 * std::tanh(u));
            }
        }

        Frame f = measure_frame(pose, geom, map, noise, ChannelMode::full, rng, frame_timestamp(i, fps),
                                std::nullopt);
        f.has_target = true;
        f.target = flatten_cloud(forward_kinematics(pose, geom));
        ds.frames.push_back(std::move(f));
        if (pose_trace) pose_trace->push_back(pose);
    }
    ds.validate();
    return ds;
}

void DatasetSplit::validate(std::size_t frame_count) const {
    std::vector<char> seen(frame_count, 0);
    for (const auto* part : {&train, &val, &test}) {
        for (const std::size_t i : *part) {
            if (i >= frame_count) throw param_error("split row out of range");
            if (seen[i]) throw param_error("split rows overlap");
            seen[i] = 1;
        }
    }
}

DatasetSplit split_gesture_dataset(const Dataset& ds, const std::vector<int>& holdout_subjects,
                                   std::uint64_t seed) {
    if (ds.subject_of.size() != ds.frames.size() || ds.frames.empty()) {
        throw param_error("dataset lacks per-frame subject annotations");
    }
    const std::set<int> present(ds.subject_of.begin(), ds.subject_of.end());
    const std::set<int> holdout(holdout_subjects.begin(), holdout_subjects.end());
    for (const int id : holdout) {
        if (!present.count(id)) throw param_error("holdout subject not present in dataset");
    }
    if (holdout.size() >= present.size()) throw param_error("cannot hold out every subject");

    DatasetSplit split;
    std::map<int, std::vector<std::size_t>> strata;  // gesture label -> rows
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        if (holdout.count(ds.subject_of[i])) {
            split.test.push_back(i);
        } else {
            if (!ds.frames[i].has_label()) throw param_error("gesture split requires labeled frames");
            strata[int(ds.frames[i].label)].push_back(i);
        }
    }

    // 8:2 within each gesture label, order randomized by the shared seed
    Rng rng(seed);
    for (auto& [label, rows] : strata) {
        rng.shuffle(rows);
        const std::size_t n_train = rows.size() * 4 / 5;
        split.train.insert(split.train.end(), rows.begin(), rows.begin() + long(n_train));
        split.val.insert(split.val.end(), rows.begin() + long(n_train), rows.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    split.validate(ds.frames.size());
    return split;
}

DatasetSplit split_by_segments(const Dataset& ds) {
    if (ds.segment_count() != 3) throw param_error("segment split requires exactly three segments");
    DatasetSplit split;
    for (std::size_t s = 0; s < 3; ++s) {
        auto [start, end] = ds.segment(s);
        auto& part = s == 0 ? split.train : s == 1 ? split.val : split.test;
        part.resize(end - start);
        std::iota(part.begin(), part.end(), start);
    }
    split.validate(ds.frames.size());
    return split;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    ds.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + path);
    binio::put_magic(os, kMagic);
    binio::put_u16(os, kVersion);
    binio::put_u8(os, static_cast<std::uint8_t>(ds.channel_count()));
    binio::put_u64(os, ds.frames.size());
    for (const auto& f : ds.frames) {
        binio::put_u64(os, f.timestamp_ns);
        for (const float c : f.channels) binio::put_f32(os, c);
        binio::put_u16(os, f.label);
        binio::put_u8(os, f.has_target ? 1 : 0);
        if (f.has_target) {
            for (const float t : f.target) binio::put_f32(os, t);
        }
    }
    if (!os) throw io_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open: " + path);
    binio::expect_magic(is, kMagic, "dataset");
    if (binio::get_u16(is) != kVersion) throw io_error("unsupported dataset file version");
    const int mode_byte = binio::get_u8(is);
    Dataset ds;
    if (mode_byte == 14) {
        ds.mode = ChannelMode::intra_only;
    } else if (mode_byte == 28) {
        ds.mode = ChannelMode::full;
    } else {
        throw io_error("dataset mode must be 14 or 28 channels");
    }
    const std::uint64_t count = binio::get_u64(is);
    ds.frames.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Frame f;
        f.timestamp_ns = binio::get_u64(is);
        f.channels.resize(std::size_t(mode_byte));
        for (auto& c : f.channels) c = binio::get_f32(is);
        f.label = binio::get_u16(is);
        const std::uint8_t flag = binio::get_u8(is);
        if (flag > 1) throw io_error("corrupt target flag in dataset record");
        f.has_target = flag == 1;
        if (f.has_target) {
            for (auto& t : f.target) t = binio::get_f32(is);
        }
        ds.frames.push_back(std::move(f));
    }
    // recordings restart their clock at zero; a non-increasing timestamp
    // marks a new segment
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        if (i == 0 || ds.frames[i].timestamp_ns <= ds.frames[i - 1].timestamp_ns) {
            ds.segment_starts.push_back(i);
        }
    }
    ds.validate();
    return ds;
}

void resegment(Dataset& ds, std::span<const std::size_t> segment_lengths) {
    std::size_t total = 0;
    std::vector<std::size_t> starts;
    for (const std::size_t len : segment_lengths) {
        if (len == 0) throw param_error("segment lengths must be positive");
        starts.push_back(total);
        total += len;
    }
    if (total != ds.frames.size()) throw param_error("segment lengths do not sum to the frame count");
    ds.segment_starts = std::move(starts);
    ds.validate();
}

void attach_subjects(Dataset& ds, const std::vector<SubjectProfile>& subjects, int frames_per_subject) {
    if (subjects.empty() || frames_per_subject <= 0) throw param_error("bad subject layout");
    if (ds.frames.size() != subjects.size() * std::size_t(frames_per_subject)) {
        throw param_error("frame count does not match the subject-major layout");
    }
    ds.subject_of.resize(ds.frames.size());
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        ds.subject_of[i] = subjects[i / std::size_t(frames_per_subject)].subject_id;
    }
    ds.validate();
}

void export_csv(const std::string& path, const Dataset& ds) {
    ds.validate();
    std::ofstream os(path);
    if (!os) throw io_error("cannot open for writing: " + path);
    const int channels = ds.channel_count();
    bool any_target = false;
    for (const auto& f : ds.frames) any_target = any_target || f.has_target;

    os << "timestamp_ns";
    for (int c = 0; c < channels; ++c) os << ",c" << c;
    os << ",label";
    if (any_target) {
        for (int t = 0; t < 45; ++t) os << ",t" << t;
    }
    os << "\n";

    char buf[32];
    for (const auto& f : ds.frames) {
        os << f.timestamp_ns;
        for (const float c : f.channels) {
            std::snprintf(buf, sizeof buf, ",%.9g", double(c));
            os << buf;
        }
        if (f.has_label()) {
            os << "," << f.label;
        } else {
            os << ",";
        }
        if (any_target) {
            for (const float t : f.target) {
                if (f.has_target) {
                    std::snprintf(buf, sizeof buf, ",%.9g", double(t));
                    os << buf;
                } else {
                    os << ",";
                }
            }
        }
        os << "\n";
    }
    if (!os) throw io_error("write failed: " + path);
}

}  // namespace glovesim
