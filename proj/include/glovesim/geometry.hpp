#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace glovesim {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

double norm(const Vec3& v);
double distance(const Vec3& a, const Vec3& b);

enum class Digit : int { thumb = 0, index = 1, middle = 2, ring = 3, little = 4 };

inline constexpr int kDigitCount = 5;
inline constexpr const char* kDigitNames[kDigitCount] = {"thumb", "index", "middle",
                                                         "ring", "little"};

// Hand skeleton dimensions, all in millimetres. The wrist is the origin; the
// palm lies in the x-y plane with fingers pointing along +y and the thumb on
// the +x side. Fill directly for custom rigs or use from_hand_length() for a
// proportionally scaled hand.
struct HandGeometry {
    double hand_length = 175.0;  // wrist crease to middle fingertip
    // Per digit: segment lengths along the kinematic chain. The thumb uses
    // two segments; its third entry stays zero.
    std::array<std::array<double, 3>, kDigitCount> phalanx{};
    // Planar MCP/CMC base positions relative to the wrist.
    std::array<std::array<double, 2>, kDigitCount> base{};
    // Rest splay per digit: yaw of the straightened digit away from +y,
    // positive toward the thumb side. Abduction adds on top of this.
    std::array<double, kDigitCount> rest_yaw{};
    double module_thickness = 3.0;  // sensor stack height

    // Proportional model. hand_length_mm must lie in [160, 190], the range
    // used for generated subjects.
    static HandGeometry from_hand_length(double hand_length_mm);

    int segment_count(Digit d) const { return d == Digit::thumb ? 2 : 3; }
    double digit_length(Digit d) const;
    void validate() const;  // throws param_error on non-positive lengths
};

// 19 joint angles in radians. Layout (flat index order):
//   0 thumb.cmc_flex   1 thumb.mcp_flex   2 thumb.abduct
//   then per finger (index, middle, ring, little):
//   mcp_flex, pip_flex, dip_flex, mcp_abduct
// Flexions live in [0, pi/2], finger abduction in [-0.35, 0.35], thumb
// abduction in [0, 1.2]. Construction and mutation reject out-of-range
// values.
class HandPose {
public:
    static constexpr int kDofCount = 19;

    HandPose() = default;  // all zeros, valid

    static HandPose from_angles(std::span<const double> angles19);

    double angle(int dof) const { return a_[static_cast<std::size_t>(dof)]; }
    void set_angle(int dof, double value);  // throws param_error out of range

    // Per-digit accessors. joint: 0 = most proximal flexion.
    double flexion(Digit d, int joint) const;
    double abduction(Digit d) const;
    void set_flexion(Digit d, int joint, double value);
    void set_abduction(Digit d, double value);

    std::span<const double, kDofCount> angles() const { return a_; }

    static int flexion_dof(Digit d, int joint);
    static int abduction_dof(Digit d);
    static int flexion_count(Digit d) { return d == Digit::thumb ? 2 : 3; }
    static double dof_min(int dof);
    static double dof_max(int dof);
    static std::string_view dof_name(int dof);

    bool operator==(const HandPose& o) const { return a_ == o.a_; }

private:
    std::array<double, kDofCount> a_{};
};

// 15 keypoints in mm, wrist-relative. Digit-major (thumb, index, middle,
// ring, little), keypoint-minor (proximal joint, distal joint, tip). The
// wrist itself is the reference origin and is not one of the points.
struct PointCloud15 {
    static constexpr int kPointCount = 15;
    std::array<Vec3, kPointCount> points{};

    static int point_index(Digit d, int k) { return static_cast<int>(d) * 3 + k; }
    const Vec3& point(Digit d, int k) const {
        return points[static_cast<std::size_t>(point_index(d, k))];
    }
};

// Forward kinematics. Deterministic; flexion is a chained planar rotation in
// each digit's sagittal plane, abduction a rotation about the palm normal at
// the digit base. At the zero pose every digit is a straight line along +y
// rotated by its rest splay.
PointCloud15 forward_kinematics(const HandPose& pose, const HandGeometry& geom);

// Position at a given arclength along a digit's chain (base -> tip), used by
// the inter-module sensor model for electrode midpoints.
Vec3 point_on_digit(const HandPose& pose, const HandGeometry& geom, Digit d,
                    double arclength_mm);

// Per-angle linear interpolation; t in [0, 1] (param_error otherwise).
HandPose interpolate_poses(const HandPose& a, const HandPose& b, double t);

// Max absolute per-angle difference, the pose distance used for gesture
// library distinctness.
double pose_distance(const HandPose& a, const HandPose& b);

}  // namespace glovesim
