#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "glovesim/geometry.hpp"

namespace glovesim {

// One liquid-metal trace on a digit's sensor module. Traces run from the
// module connector at the digit base toward the tip; longer traces cross
// more joints.
struct ElectrodeSpec {
    Digit module = Digit::thumb;
    int electrode = 0;         // index within the module, 0 = longest trace
    double rest_length = 0.0;  // mm, unstrained
    unsigned span = 0;         // bitmask: bit j set if the trace crosses flexion joint j
};

enum class ChannelKind : std::uint8_t { intra = 0, inter = 1 };

struct Channel {
    int id = 0;
    ChannelKind kind = ChannelKind::intra;
    ElectrodeSpec a, b;
    // intra: the flexion joint this channel reads
    Digit joint_digit = Digit::thumb;
    int joint_index = 0;
    // inter: the adjacent digit pair
    Digit pair_a = Digit::thumb, pair_b = Digit::index;
    double c0_pf = 0.0;  // baseline capacitance at the flat pose
};

// Graduated trace lengths: fingers carry four, the thumb three.
int electrode_count(Digit d);
double electrode_rest_length(const HandGeometry& geom, Digit d, int electrode);
ElectrodeSpec make_electrode(const HandGeometry& geom, Digit d, int electrode);

// The fixed 28-channel table: channels 0..13 intra (digit-major: thumb cmc,
// thumb mcp, then mcp/pip/dip for index..little), channels 14..27 inter
// (pair-major: thumb-index x2, index-middle x4, middle-ring x4, ring-little
// x4; within a 4-pair block the electrode pairings are long-long,
// long-short, short-long, short-short).
class ChannelMap {
public:
    static constexpr int kIntraCount = 14;
    static constexpr int kInterCount = 14;
    static constexpr int kTotalCount = 28;

    const Channel& channel(int id) const;  // lookup_error out of range
    const std::vector<Channel>& channels() const { return channels_; }

    // Table text: one line per channel,
    // `channel_id, kind, module_a, electrode_a, module_b, electrode_b,
    //  joint_or_pair, C0_pF`; '#' starts a comment.
    std::string to_text() const;
    static ChannelMap parse(std::string_view text, const HandGeometry& geom);
    static ChannelMap load(const std::string& path, const HandGeometry& geom);
    void save(const std::string& path) const;

    // Internal: build from a complete channel list (validated).
    static ChannelMap from_channels(std::vector<Channel> channels);

private:
    std::vector<Channel> channels_;
    void validate() const;
};

}  // namespace glovesim
