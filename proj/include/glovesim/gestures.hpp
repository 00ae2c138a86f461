#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "glovesim/geometry.hpp"

namespace glovesim {

struct GestureEntry {
    std::string id;
    HandPose pose;
};

// 30 named pose presets (G1..G30). Any library must hold exactly 30 entries
// with unique ids and pairwise pose distance >= 0.15 rad so the presets are
// geometrically distinct.
class GestureLibrary {
public:
    static constexpr int kGestureCount = 30;
    static constexpr double kMinPairwiseDistance = 0.15;

    // Compiled-in default presets; identical to the shipped config file.
    static GestureLibrary builtin();
    // Config text: one record per gesture, `id, 19 angles (radians)`,
    // '#' starts a comment line. Throws config_error on malformed content
    // or violated invariants.
    static GestureLibrary parse(std::string_view text);
    static GestureLibrary load(const std::string& path);  // io_error on open failure

    std::string to_text() const;  // round-trips through parse()
    void save(const std::string& path) const;

    const HandPose& pose(std::string_view id) const;  // lookup_error on unknown id
    int index_of(std::string_view id) const;          // lookup_error on unknown id
    const GestureEntry& entry(int index) const;       // lookup_error out of range
    const std::vector<GestureEntry>& entries() const { return entries_; }

private:
    std::vector<GestureEntry> entries_;
    void validate() const;
};

// Preset lookup, returned unchanged.
HandPose gesture_pose(std::string_view id, const GestureLibrary& lib);

}  // namespace glovesim
