#include "glovesim/gestures.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glovesim/error.hpp"

namespace glovesim {

namespace {

constexpr std::string_view kBuiltinText =
#include "gestures_builtin.inc"
    ;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view tok, int line_no) {
    tok = trim(tok);
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc{} || p != end) {
        throw config_error("gesture file line " + std::to_string(line_no) +
                           ": bad number '" + std::string(tok) + "'");
    }
    return v;
}

}  // namespace

GestureLibrary GestureLibrary::builtin() { return parse(kBuiltinText); }

GestureLibrary GestureLibrary::parse(std::string_view text) {
    GestureLibrary lib;
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

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos
                                                    ? line.size() - start
                                                    : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 1 + HandPose::kDofCount) {
            throw config_error("gesture file line " + std::to_string(line_no) + ": expected id + " +
                               std::to_string(HandPose::kDofCount) + " angles, got " +
                               std::to_string(fields.size()) + " fields");
        }
        GestureEntry e;
        e.id = std::string(trim(fields[0]));
        if (e.id.empty()) {
            throw config_error("gesture file line " + std::to_string(line_no) + ": empty id");
        }
        double angles[HandPose::kDofCount];
        for (int i = 0; i < HandPose::kDofCount; ++i) {
            angles[i] = parse_double(fields[static_cast<std::size_t>(i) + 1], line_no);
        }
        try {
            e.pose = HandPose::from_angles(angles);
        } catch (const param_error& ex) {
            throw config_error("gesture file line " + std::to_string(line_no) + ": " + ex.what());
        }
        lib.entries_.push_back(std::move(e));
    }
    lib.validate();
    return lib;
}

GestureLibrary GestureLibrary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open gesture file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string GestureLibrary::to_text() const {
    std::string out = "# gesture presets: id, 19 joint angles in radians\n";
    char num[32];
    for (const auto& e : entries_) {
        out += e.id;
        for (int i = 0; i < HandPose::kDofCount; ++i) {
            std::snprintf(num, sizeof num, ", %.10g", e.pose.angle(i));
            out += num;
        }
        out += '\n';
    }
    return out;
}

void GestureLibrary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write gesture file: " + path);
    out << to_text();
    if (!out) throw io_error("short write to gesture file: " + path);
}

void GestureLibrary::validate() const {
    if (entries_.size() != kGestureCount) {
        throw config_error("gesture library must hold exactly " +
                           std::to_string(kGestureCount) + " entries, got " +
                           std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        for (std::size_t j = i + 1; j < entries_.size(); ++j) {
            if (entries_[i].id == entries_[j].id) {
                throw config_error("duplicate gesture id: " + entries_[i].id);
            }
            const double d = pose_distance(entries_[i].pose, entries_[j].pose);
            if (d < kMinPairwiseDistance) {
                throw config_error("gestures " + entries_[i].id + " and " + entries_[j].id +
                                   " are only " + std::to_string(d) +
                                   " rad apart (minimum " +
                                   std::to_string(kMinPairwiseDistance) + ")");
            }
        }
    }
}

const HandPose& GestureLibrary::pose(std::string_view id) const {
    return entries_[static_cast<std::size_t>(index_of(id))].pose;
}

int GestureLibrary::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].id == id) return static_cast<int>(i);
    }
    throw lookup_error("unknown gesture id: " + std::string(id));
}

const GestureEntry& GestureLibrary::entry(int index) const {
    if (index < 0 || index >= static_cast<int>(entries_.size())) {
        throw lookup_error("gesture index out of range: " + std::to_string(index));
    }
    return entries_[static_cast<std::size_t>(index)];
}

HandPose gesture_pose(std::string_view id, const GestureLibrary& lib) { return lib.pose(id); }

}  // namespace glovesim
