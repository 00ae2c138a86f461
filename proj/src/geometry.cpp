#include "glovesim/geometry.hpp"

#include <cmath>
#include <string>

#include "glovesim/error.hpp"

namespace glovesim {

namespace {

// Canonical hand proportions as fractions of hand_length. The middle finger
// chain sums to exactly 1.0 so the zero-pose middle fingertip sits at
// (0, hand_length, 0).
struct DigitProportions {
    double bx, by;
    double seg[3];
    double rest_yaw;
};

constexpr DigitProportions kProportions[kDigitCount] = {
    // thumb: CMC base near the wrist, two segments, strong radial splay
    {0.160, 0.130, {0.180, 0.155, 0.0}, 0.35},
    // index
    {0.120, 0.520, {0.200, 0.125, 0.085}, 0.15},
    // middle
    {0.000, 0.560, {0.215, 0.135, 0.090}, 0.0},
    // ring
    {-0.115, 0.530, {0.200, 0.130, 0.088}, -0.10},
    // little
    {-0.220, 0.470, {0.150, 0.100, 0.070}, -0.20},
};

// Abduction sign: positive abduction moves index and thumb toward +x and
// the ulnar digits toward -x, so equal positive abduction spreads fingers.
constexpr double abduction_sign(Digit d) {
    switch (d) {
        case Digit::thumb:
        case Digit::index:
            return 1.0;
        default:
            return -1.0;
    }
}

constexpr double kPi = 3.14159265358979323846;

struct DofSpec {
    const char* name;
    double lo;
    double hi;
};

constexpr DofSpec kDofs[HandPose::kDofCount] = {
    {"thumb.cmc_flex", 0.0, kPi / 2}, {"thumb.mcp_flex", 0.0, kPi / 2},
    {"thumb.abduct", 0.0, 1.2},       {"index.mcp_flex", 0.0, kPi / 2},
    {"index.pip_flex", 0.0, kPi / 2}, {"index.dip_flex", 0.0, kPi / 2},
    {"index.abduct", -0.35, 0.35},    {"middle.mcp_flex", 0.0, kPi / 2},
    {"middle.pip_flex", 0.0, kPi / 2},{"middle.dip_flex", 0.0, kPi / 2},
    {"middle.abduct", -0.35, 0.35},   {"ring.mcp_flex", 0.0, kPi / 2},
    {"ring.pip_flex", 0.0, kPi / 2},  {"ring.dip_flex", 0.0, kPi / 2},
    {"ring.abduct", -0.35, 0.35},     {"little.mcp_flex", 0.0, kPi / 2},
    {"little.pip_flex", 0.0, kPi / 2},{"little.dip_flex", 0.0, kPi / 2},
    {"little.abduct", -0.35, 0.35},
};

// Segment direction for cumulative flexion theta within the sagittal plane
// spanned by the abducted pointing direction u and the palm normal. Flexion
// curls toward -z (palmar side).
Vec3 segment_direction(double yaw, double cumulative_flexion) {
    const double uy = std::cos(yaw);
    const double ux = std::sin(yaw);
    const double c = std::cos(cumulative_flexion);
    const double s = std::sin(cumulative_flexion);
    return {c * ux, c * uy, -s};
}

}  // namespace

double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

HandGeometry HandGeometry::from_hand_length(double hand_length_mm) {
    if (!(hand_length_mm >= 160.0 && hand_length_mm <= 190.0)) {
        throw param_error("hand_length " + std::to_string(hand_length_mm) +
                          " mm outside [160, 190]");
    }
    HandGeometry g;
    g.hand_length = hand_length_mm;
    for (int d = 0; d < kDigitCount; ++d) {
        const auto& p = kProportions[d];
        g.base[static_cast<std::size_t>(d)] = {p.bx * hand_length_mm, p.by * hand_length_mm};
        g.rest_yaw[static_cast<std::size_t>(d)] = p.rest_yaw;
        for (int s = 0; s < 3; ++s) {
            g.phalanx[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)] =
                p.seg[s] * hand_length_mm;
        }
    }
    g.module_thickness = 3.0;
    return g;
}

double HandGeometry::digit_length(Digit d) const {
    const auto& seg = phalanx[static_cast<std::size_t>(d)];
    double total = 0.0;
    for (int s = 0; s < segment_count(d); ++s) total += seg[static_cast<std::size_t>(s)];
    return total;
}

void HandGeometry::validate() const {
    for (int d = 0; d < kDigitCount; ++d) {
        const auto dig = static_cast<Digit>(d);
        for (int s = 0; s < segment_count(dig); ++s) {
            if (!(phalanx[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)] > 0.0)) {
                throw param_error(std::string("non-positive phalanx length on ") +
                                  kDigitNames[d]);
            }
        }
        if (!(std::abs(rest_yaw[static_cast<std::size_t>(d)]) < kPi / 2)) {
            throw param_error(std::string("rest splay on ") + kDigitNames[d] +
                              " outside (-pi/2, pi/2)");
        }
    }
}

HandPose HandPose::from_angles(std::span<const double> angles19) {
    if (angles19.size() != kDofCount) {
        throw param_error("HandPose requires 19 angles, got " +
                          std::to_string(angles19.size()));
    }
    HandPose p;
    for (int i = 0; i < kDofCount; ++i) p.set_angle(i, angles19[static_cast<std::size_t>(i)]);
    return p;
}

void HandPose::set_angle(int dof, double value) {
    if (dof < 0 || dof >= kDofCount) throw param_error("dof index out of range");
    const auto& spec = kDofs[dof];
    if (!(value >= spec.lo && value <= spec.hi)) {
        throw param_error(std::string(spec.name) + " = " + std::to_string(value) +
                          " outside [" + std::to_string(spec.lo) + ", " +
                          std::to_string(spec.hi) + "]");
    }
    a_[static_cast<std::size_t>(dof)] = value;
}

int HandPose::flexion_dof(Digit d, int joint) {
    const int n = flexion_count(d);
    if (joint < 0 || joint >= n) throw param_error("flexion joint index out of range");
    if (d == Digit::thumb) return joint;  // 0 = cmc, 1 = mcp
    return 3 + (static_cast<int>(d) - 1) * 4 + joint;
}

int HandPose::abduction_dof(Digit d) {
    if (d == Digit::thumb) return 2;
    return 3 + (static_cast<int>(d) - 1) * 4 + 3;
}

double HandPose::flexion(Digit d, int joint) const { return angle(flexion_dof(d, joint)); }
double HandPose::abduction(Digit d) const { return angle(abduction_dof(d)); }
void HandPose::set_flexion(Digit d, int joint, double v) { set_angle(flexion_dof(d, joint), v); }
void HandPose::set_abduction(Digit d, double v) { set_angle(abduction_dof(d), v); }

namespace {
const DofSpec& dof_spec(int dof) {
    if (dof < 0 || dof >= HandPose::kDofCount) throw param_error("dof index out of range");
    return kDofs[dof];
}
}  // namespace

double HandPose::dof_min(int dof) { return dof_spec(dof).lo; }
double HandPose::dof_max(int dof) { return dof_spec(dof).hi; }
std::string_view HandPose::dof_name(int dof) { return dof_spec(dof).name; }

namespace {

// Chain positions after each segment of one digit.
void digit_chain(const HandPose& pose, const HandGeometry& geom, Digit d,
                 Vec3 out_joints[3]) {
    const auto di = static_cast<std::size_t>(d);
    const double yaw = geom.rest_yaw[di] + abduction_sign(d) * pose.abduction(d);
    Vec3 p{geom.base[di][0], geom.base[di][1], 0.0};
    double cum = 0.0;
    const int n = geom.segment_count(d);
    for (int s = 0; s < n; ++s) {
        cum += pose.flexion(d, s);
        p = p + segment_direction(yaw, cum) * geom.phalanx[di][static_cast<std::size_t>(s)];
        out_joints[s] = p;
    }
}

}  // namespace

PointCloud15 forward_kinematics(const HandPose& pose, const HandGeometry& geom) {
    PointCloud15 cloud;
    for (int d = 0; d < kDigitCount; ++d) {
        const auto dig = static_cast<Digit>(d);
        Vec3 joints[3];
        digit_chain(pose, geom, dig, joints);
        const int base_idx = d * 3;
        if (dig == Digit::thumb) {
            // proximal joint = CMC base, distal joint = MCP, then tip
            const auto di = static_cast<std::size_t>(d);
            cloud.points[static_cast<std::size_t>(base_idx)] =
                Vec3{geom.base[di][0], geom.base[di][1], 0.0};
            cloud.points[static_cast<std::size_t>(base_idx + 1)] = joints[0];
            cloud.points[static_cast<std::size_t>(base_idx + 2)] = joints[1];
        } else {
            // proximal joint = PIP, distal joint = DIP, then tip
            cloud.points[static_cast<std::size_t>(base_idx)] = joints[0];
            cloud.points[static_cast<std::size_t>(base_idx + 1)] = joints[1];
            cloud.points[static_cast<std::size_t>(base_idx + 2)] = joints[2];
        }
    }
    return cloud;
}

Vec3 point_on_digit(const HandPose& pose, const HandGeometry& geom, Digit d,
                    double arclength_mm) {
    if (arclength_mm < 0.0) throw param_error("negative arclength");
    const auto di = static_cast<std::size_t>(d);
    const double yaw = geom.rest_yaw[di] + abduction_sign(d) * pose.abduction(d);
    Vec3 p{geom.base[di][0], geom.base[di][1], 0.0};
    double cum = 0.0;
    double remaining = arclength_mm;
    const int n = geom.segment_count(d);
    for (int s = 0; s < n; ++s) {
        cum += pose.flexion(d, s);
        const double len = geom.phalanx[di][static_cast<std::size_t>(s)];
        const Vec3 dir = segment_direction(yaw, cum);
        if (remaining <= len || s == n - 1) {
            return p + dir * std::min(remaining, len);
        }
        p = p + dir * len;
        remaining -= len;
    }
    return p;
}

HandPose interpolate_poses(const HandPose& a, const HandPose& b, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw param_error("interpolation t outside [0, 1]");
    HandPose out;
    for (int i = 0; i < HandPose::kDofCount; ++i) {
        // std::lerp is exact at the endpoints and stays within [a, b]
        out.set_angle(i, std::lerp(a.angle(i), b.angle(i), t));
    }
    return out;
}

double pose_distance(const HandPose& a, const HandPose& b) {
    double m = 0.0;
    for (int i = 0; i < HandPose::kDofCount; ++i) {
        m = std::max(m, std::abs(a.angle(i) - b.angle(i)));
    }
    return m;
}

}  // namespace glovesim
