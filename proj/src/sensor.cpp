#include "glovesim/sensor.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "glovesim/error.hpp"

namespace glovesim {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGauge = 0.45;           // relative capacitance per unit strain
constexpr double kStrainCeiling = 0.30;   // calibrated strain range upper end
constexpr double kBendPerRad = kStrainCeiling / (kPi / 2);
constexpr double kTraceWidthMm = 2.0;     // effective trace width for overlap area
constexpr double kInterPermittivity = 0.2;  // pF/mm, tuned for ~1 pF baselines
constexpr double kIntraBaselinePf = 1.0;
constexpr double kMinInterDistanceMm = 1.0;  // collision guard
constexpr double kNoiseReference = 0.135;    // full-flexion channel value

// Midpoint of a trace on the current digit polyline.
Vec3 electrode_midpoint(const HandPose& pose, const HandGeometry& geom,
                        const ElectrodeSpec& e) {
    return point_on_digit(pose, geom, e.module, e.rest_length / 2.0);
}

double overlap_area(const ElectrodeSpec& a, const ElectrodeSpec& b) {
    return std::min(a.rest_length, b.rest_length) * kTraceWidthMm;
}

// Raw inter-electrode capacitance at a pose; shared by measurement and
// baseline calibration so the flat-pose null is exact.
double inter_capacitance(const HandPose& pose, const HandGeometry& geom, const Channel& c,
                         bool* clamped) {
    const Vec3 pa = electrode_midpoint(pose, geom, c.a);
    const Vec3 pb = electrode_midpoint(pose, geom, c.b);
    double d = distance(pa, pb);
    if (d < kMinInterDistanceMm) {
        d = kMinInterDistanceMm;
        if (clamped) *clamped = true;
    }
    return parallel_plate_capacitance(kInterPermittivity, overlap_area(c.a, c.b), d);
}

}  // namespace

void NoiseConfig::validate() const {
    if (!(snr_db > 0.0)) throw param_error("snr_db must be positive");
    if (!(quantization_step_ff >= 0.0)) throw param_error("quantization step must be >= 0");
}

std::array<float, 45> flatten_cloud(const PointCloud15& cloud) {
    std::array<float, 45> out;
    for (int i = 0; i < PointCloud15::kPointCount; ++i) {
        out[std::size_t(3 * i) + 0] = float(cloud.points[std::size_t(i)].x);
        out[std::size_t(3 * i) + 1] = float(cloud.points[std::size_t(i)].y);
        out[std::size_t(3 * i) + 2] = float(cloud.points[std::size_t(i)].z);
    }
    return out;
}

PointCloud15 unflatten_cloud(const std::array<float, 45>& flat) {
    PointCloud15 cloud;
    for (int i = 0; i < PointCloud15::kPointCount; ++i) {
        cloud.points[std::size_t(i)] = {flat[std::size_t(3 * i) + 0],
                                        flat[std::size_t(3 * i) + 1],
                                        flat[std::size_t(3 * i) + 2]};
    }
    return cloud;
}

double parallel_plate_capacitance(double epsilon, double area, double distance) {
    if (!(epsilon > 0.0)) throw param_error("permittivity must be positive");
    if (!(area >= 0.0)) throw param_error("overlap area must be non-negative");
    if (!(distance > 0.0)) throw numeric_error("plate distance <= 0 (plates touching)");
    return epsilon * area / distance;
}

double relative_capacitance(double c, double c0) {
    if (!(c0 > 0.0)) throw param_error("baseline capacitance must be positive");
    return (c - c0) / c0;
}

double strain_to_relcap(double strain) {
    if (!(strain >= 0.0 && strain <= kStrainCeiling)) {
        throw param_error("strain " + std::to_string(strain) +
                          " outside the calibrated range [0, 0.30]");
    }
    return kGauge * strain;
}

double joint_to_strain(double theta) {
    if (!(theta >= 0.0)) throw param_error("flexion angle must be non-negative");
    return std::min(kBendPerRad * theta, kStrainCeiling);
}

double electrode_strain(const HandPose& pose, const ElectrodeSpec& spec) {
    double total = 0.0;
    for (int j = 0; j < HandPose::flexion_count(spec.module); ++j) {
        if (spec.span & (1u << j)) total += joint_to_strain(pose.flexion(spec.module, j));
    }
    return std::min(total, kStrainCeiling);
}

ChannelMap standard_channel_map(const HandGeometry& geom) {
    std::vector<Channel> channels;
    channels.reserve(ChannelMap::kTotalCount);
    int id = 0;

    // intra: digit-major, proximal joint first; the joint for electrode pair
    // (e_i, e_{i+1}) is the most distal joint their spans differ by, which
    // puts the shortest pair on the base joint
    for (int d = 0; d < kDigitCount; ++d) {
        const auto dig = static_cast<Digit>(d);
        const int joints = HandPose::flexion_count(dig);
        for (int j = 0; j < joints; ++j) {
            Channel c;
            c.id = id++;
            c.kind = ChannelKind::intra;
            c.joint_digit = dig;
            c.joint_index = j;
            const int top = joints - 1 - j;  // pair (e_top, e_top+1)
            c.a = make_electrode(geom, dig, top);
            c.b = make_electrode(geom, dig, top + 1);
            c.c0_pf = kIntraBaselinePf;
            channels.push_back(c);
        }
    }

    // inter: pair-major over adjacent digits; electrode pairings long-long,
    // long-short, short-long, short-short (thumb-index carries only the
    // first and last)
    const HandPose flat;
    for (int d = 0; d + 1 < kDigitCount; ++d) {
        const auto da = static_cast<Digit>(d);
        const auto db = static_cast<Digit>(d + 1);
        const int la = electrode_count(da) - 1;  // shortest index
        const int lb = electrode_count(db) - 1;
        const int pairings[4][2] = {{0, 0}, {0, lb}, {la, 0}, {la, lb}};
        const bool thumb_pair = da == Digit::thumb;
        for (int p = 0; p < 4; ++p) {
            if (thumb_pair && p != 0 && p != 3) continue;
            Channel c;
            c.id = id++;
            c.kind = ChannelKind::inter;
            c.pair_a = da;
            c.pair_b = db;
            c.a = make_electrode(geom, da, pairings[p][0]);
            c.b = make_electrode(geom, db, pairings[p][1]);
            c.c0_pf = inter_capacitance(flat, geom, c, nullptr);
            channels.push_back(c);
        }
    }
    return ChannelMap::from_channels(std::move(channels));
}

std::array<double, ChannelMap::kIntraCount> intra_channels(const HandPose& pose,
                                                           const HandGeometry& geom,
                                                           const ChannelMap& map) {
    (void)geom;
    std::array<double, ChannelMap::kIntraCount> out{};
    for (int i = 0; i < ChannelMap::kIntraCount; ++i) {
        const auto& c = map.channel(i);
        const double theta = pose.flexion(c.joint_digit, c.joint_index);
        out[std::size_t(i)] = strain_to_relcap(joint_to_strain(theta));
    }
    return out;
}

std::array<double, ChannelMap::kInterCount> inter_channels(const HandPose& pose,
                                                           const HandGeometry& geom,
                                                           const ChannelMap& map,
                                                           bool* saturated) {
    std::array<double, ChannelMap::kInterCount> out{};
    bool clamped = false;
    for (int i = 0; i < ChannelMap::kInterCount; ++i) {
        const auto& c = map.channel(ChannelMap::kIntraCount + i);
        const double cap = inter_capacitance(pose, geom, c, &clamped);
        out[std::size_t(i)] = relative_capacitance(cap, c.c0_pf);
    }
    if (saturated) *saturated = clamped;
    return out;
}

Frame measure_frame(const HandPose& pose, const HandGeometry& geom, const ChannelMap& map,
                    const NoiseConfig& noise, ChannelMode mode, Rng& rng,
                    std::uint64_t timestamp_ns, std::optional<std::uint16_t> label) {
    noise.validate();
    Frame f;
    f.timestamp_ns = timestamp_ns;
    if (label) f.label = *label;

    const int n = channel_count(mode);
    std::vector<double> rel(static_cast<std::size_t>(n));
    const auto intra = intra_channels(pose, geom, map);
    for (int i = 0; i < ChannelMap::kIntraCount; ++i) rel[std::size_t(i)] = intra[std::size_t(i)];
    if (mode == ChannelMode::full) {
        const auto inter = inter_channels(pose, geom, map, &f.saturated);
        for (int i = 0; i < ChannelMap::kInterCount; ++i) {
            rel[std::size_t(ChannelMap::kIntraCount + i)] = inter[std::size_t(i)];
        }
    }

    const double sigma = std::isinf(noise.snr_db)
                             ? 0.0
                             : kNoiseReference * std::pow(10.0, -noise.snr_db / 20.0);
    const double q_pf = noise.quantization_step_ff * 1e-3;
    for (int i = 0; i < n; ++i) {
        double v = rel[std::size_t(i)];
        if (sigma > 0.0) v += sigma * rng.normal();
        if (q_pf > 0.0) {
            const double c0 = map.channel(i).c0_pf;
            const double c_abs = c0 * (1.0 + v);
            const double c_q = std::round(c_abs / q_pf) * q_pf;
            v = (c_q - c0) / c0;
        }
        rel[std::size_t(i)] = v;
    }

    f.channels.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) f.channels[std::size_t(i)] = float(rel[std::size_t(i)]);
    return f;
}

}  // namespace glovesim
