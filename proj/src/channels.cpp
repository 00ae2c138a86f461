#include "glovesim/channels.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glovesim/error.hpp"

namespace glovesim {

namespace {

// Trace lengths as fractions of the digit length, longest first.
constexpr double kFingerFractions[4] = {0.90, 0.70, 0.45, 0.25};
constexpr double kThumbFractions[3] = {0.85, 0.60, 0.35};

const char* joint_name(Digit d, int j) {
    static const char* kThumbJoints[2] = {"cmc", "mcp"};
    static const char* kFingerJoints[3] = {"mcp", "pip", "dip"};
    return d == Digit::thumb ? kThumbJoints[j] : kFingerJoints[j];
}

int joint_from_name(Digit d, std::string_view name) {
    const int n = HandPose::flexion_count(d);
    for (int j = 0; j < n; ++j) {
        if (name == joint_name(d, j)) return j;
    }
    throw config_error("unknown joint '" + std::string(name) + "' on " +
                       kDigitNames[int(d)]);
}

Digit digit_from_name(std::string_view name) {
    for (int d = 0; d < kDigitCount; ++d) {
        if (name == kDigitNames[d]) return static_cast<Digit>(d);
    }
    throw config_error("unknown module '" + std::string(name) + "'");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

int electrode_count(Digit d) { return d == Digit::thumb ? 3 : 4; }

double electrode_rest_length(const HandGeometry& geom, Digit d, int electrode) {
    if (electrode < 0 || electrode >= electrode_count(d)) {
        throw param_error("electrode index out of range for " +
                          std::string(kDigitNames[int(d)]));
    }
    const double frac = d == Digit::thumb ? kThumbFractions[electrode]
                                          : kFingerFractions[electrode];
    return frac * geom.digit_length(d);
}

ElectrodeSpec make_electrode(const HandGeometry& geom, Digit d, int electrode) {
    ElectrodeSpec e;
    e.module = d;
    e.electrode = electrode;
    e.rest_length = electrode_rest_length(geom, d, electrode);
    // joint stations along the chain: proximal joint sits at arclength 0
    double station = 0.0;
    e.span = 0;
    for (int j = 0; j < HandPose::flexion_count(d); ++j) {
        if (station < e.rest_length) e.span |= 1u << j;
        station += geom.phalanx[int(d)][j];
    }
    return e;
}

const Channel& ChannelMap::channel(int id) const {
    if (id < 0 || id >= static_cast<int>(channels_.size())) {
        throw lookup_error("channel id out of range: " + std::to_string(id));
    }
    return channels_[static_cast<std::size_t>(id)];
}

ChannelMap ChannelMap::from_channels(std::vector<Channel> channels) {
    ChannelMap m;
    m.channels_ = std::move(channels);
    m.validate();
    return m;
}

void ChannelMap::validate() const {
    if (static_cast<int>(channels_.size()) != kTotalCount) {
        throw config_error("channel map must hold exactly " + std::to_string(kTotalCount) +
                           " channels, got " + std::to_string(channels_.size()));
    }
    for (int i = 0; i < kTotalCount; ++i) {
        const auto& c = channels_[static_cast<std::size_t>(i)];
        if (c.id != i) throw config_error("channel ids must be 0..27 in order");
        const bool should_be_intra = i < kIntraCount;
        if ((c.kind == ChannelKind::intra) != should_be_intra) {
            throw config_error("channel " + std::to_string(i) +
                               " has the wrong kind for its position");
        }
        if (!(c.c0_pf > 0.0)) {
            throw config_error("channel " + std::to_string(i) + " has non-positive C0");
        }
        if (!(c.a.rest_length > 0.0) || !(c.b.rest_length > 0.0)) {
            throw config_error("channel " + std::to_string(i) +
                               " has a non-positive electrode length");
        }
        if (c.kind == ChannelKind::intra) {
            if (c.a.module != c.joint_digit || c.b.module != c.joint_digit) {
                throw config_error("intra channel " + std::to_string(i) +
                                   " pairs electrodes across modules");
            }
        } else if (c.a.module != c.pair_a || c.b.module != c.pair_b) {
            throw config_error("inter channel " + std::to_string(i) +
                               " electrodes disagree with its digit pair");
        }
        // graduated lengths within one module: no two electrodes equal
        if (c.a.module == c.b.module && c.a.rest_length == c.b.rest_length) {
            throw config_error("channel " + std::to_string(i) +
                               " pairs two equal-length electrodes");
        }
    }
}

std::string ChannelMap::to_text() const {
    std::string out =
        "# channel_id, kind, module_a, electrode_a, module_b, electrode_b, "
        "joint_or_pair, C0_pF\n";
    char buf[160];
    for (const auto& c : channels_) {
        std::string jp;
        if (c.kind == ChannelKind::intra) {
            jp = std::string(kDigitNames[int(c.joint_digit)]) + "." +
                 joint_name(c.joint_digit, c.joint_index);
        } else {
            jp = std::string(kDigitNames[int(c.pair_a)]) + "-" + kDigitNames[int(c.pair_b)];
        }
        std::snprintf(buf, sizeof buf, "%d, %s, %s, %d, %s, %d, %s, %.17g\n", c.id,
                      c.kind == ChannelKind::intra ? "intra" : "inter",
                      kDigitNames[int(c.a.module)], c.a.electrode,
                      kDigitNames[int(c.b.module)], c.b.electrode, jp.c_str(), c.c0_pf);
        out += buf;
    }
    return out;
}

ChannelMap ChannelMap::parse(std::string_view text, const HandGeometry& geom) {
    std::vector<Channel> channels;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                              : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> f;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            f.push_back(trim(line.substr(start, comma == std::string_view::npos
                                                    ? line.size() - start
                                                    : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (f.size() != 8) {
            throw config_error("channel map line " + std::to_string(line_no) +
                               ": expected 8 fields, got " + std::to_string(f.size()));
        }
        auto parse_int = [&](std::string_view tok) {
            int v = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size()) {
                throw config_error("channel map line " + std::to_string(line_no) +
                                   ": bad integer '" + std::string(tok) + "'");
            }
            return v;
        };
        auto parse_dbl = [&](std::string_view tok) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size()) {
                throw config_error("channel map line " + std::to_string(line_no) +
                                   ": bad number '" + std::string(tok) + "'");
            }
            return v;
        };

        Channel c;
        c.id = parse_int(f[0]);
        if (f[1] == "intra") {
            c.kind = ChannelKind::intra;
        } else if (f[1] == "inter") {
            c.kind = ChannelKind::inter;
        } else {
            throw config_error("channel map line " + std::to_string(line_no) +
                               ": kind must be intra or inter");
        }
        const Digit ma = digit_from_name(f[2]);
        const Digit mb = digit_from_name(f[4]);
        c.a = make_electrode(geom, ma, parse_int(f[3]));
        c.b = make_electrode(geom, mb, parse_int(f[5]));
        if (c.kind == ChannelKind::intra) {
            const auto dot = f[6].find('.');
            if (dot == std::string_view::npos) {
                throw config_error("channel map line " + std::to_string(line_no) +
                                   ": intra joint must be module.joint");
            }
            c.joint_digit = digit_from_name(f[6].substr(0, dot));
            c.joint_index = joint_from_name(c.joint_digit, f[6].substr(dot + 1));
        } else {
            const auto dash = f[6].find('-');
            if (dash == std::string_view::npos) {
                throw config_error("channel map line " + std::to_string(line_no) +
                                   ": inter pair must be module-module");
            }
            c.pair_a = digit_from_name(f[6].substr(0, dash));
            c.pair_b = digit_from_name(f[6].substr(dash + 1));
        }
        c.c0_pf = parse_dbl(f[7]);
        channels.push_back(c);
    }
    return from_channels(std::move(channels));
}

ChannelMap ChannelMap::load(const std::string& path, const HandGeometry& geom) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open channel map: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), geom);
}

void ChannelMap::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write channel map: " + path);
    out << to_text();
    if (!out) throw io_error("short write to channel map: " + path);
}

}  // namespace glovesim
