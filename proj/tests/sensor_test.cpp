#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "glovesim/error.hpp"
#include "glovesim/sensor.hpp"

using namespace glovesim;

namespace {
constexpr double kPi = 3.14159265358979323846;
const HandGeometry kGeom = HandGeometry::from_hand_length(175.0);
const NoiseConfig kNoNoise{std::numeric_limits<double>::infinity(), 0.0, 0};
}  // namespace

TEST_CASE("plate capacitance follows eps*A/d") {
    CHECK(parallel_plate_capacitance(1.0, 2.0, 4.0) == 0.5);
    CHECK(parallel_plate_capacitance(0.7, 3.0, 5.0) ==
          parallel_plate_capacitance(0.7, 6.0, 10.0));
    CHECK_THROWS_AS(parallel_plate_capacitance(1.0, 1.0, 0.0), numeric_error);
    CHECK_THROWS_AS(parallel_plate_capacitance(1.0, 1.0, -2.0), numeric_error);
    CHECK_THROWS_AS(parallel_plate_capacitance(0.0, 1.0, 1.0), param_error);
    CHECK_THROWS_AS(parallel_plate_capacitance(1.0, -1.0, 1.0), param_error);
}

TEST_CASE("relative capacitance is the fractional change from baseline") {
    CHECK(relative_capacitance(1.0045, 1.0) == doctest::Approx(0.0045).epsilon(1e-10));
    CHECK(relative_capacitance(2.5, 2.5) == 0.0);
    CHECK(relative_capacitance(0.5, 1.0) == -0.5);
    CHECK_THROWS_AS(relative_capacitance(1.0, 0.0), param_error);
    CHECK_THROWS_AS(relative_capacitance(1.0, -1.0), param_error);
}

TEST_CASE("gauge law: one percent strain reads 0.45 percent") {
    CHECK(std::abs(strain_to_relcap(0.01) - 0.0045) < 1e-12);
    CHECK(strain_to_relcap(0.0) == 0.0);
    CHECK(std::abs(strain_to_relcap(0.30) - 0.135) < 1e-12);
    CHECK_THROWS_AS(strain_to_relcap(-0.001), param_error);
    CHECK_THROWS_AS(strain_to_relcap(0.301), param_error);

    // linear response: least-squares slope through the origin, residuals ~ 0
    double sxy = 0.0, sxx = 0.0;
    std::vector<double> s, v;
    for (int i = 0; i <= 300; ++i) {
        s.push_back(i * 0.001);
        v.push_back(strain_to_relcap(s.back()));
        sxy += s.back() * v.back();
        sxx += s.back() * s.back();
    }
    const double slope = sxy / sxx;
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(v[i] - slope * s[i]) < 1e-9);
    }
}

TEST_CASE("bend law maps a right angle to the strain ceiling") {
    CHECK(joint_to_strain(0.0) == 0.0);
    CHECK(std::abs(joint_to_strain(kPi / 2) - 0.30) < 1e-12);
    CHECK(std::abs(joint_to_strain(kPi / 4) - 0.15) < 1e-12);
    // strain(theta)/theta constant below the ceiling
    const double r = joint_to_strain(0.2) / 0.2;
    for (double t : {0.05, 0.4, 0.9, 1.3}) {
        CHECK(joint_to_strain(t) / t == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("trace strain sums the joints it crosses, clamped at the ceiling") {
    const auto e0 = make_electrode(kGeom, Digit::index, 0);  // crosses mcp, pip, dip
    const auto e3 = make_electrode(kGeom, Digit::index, 3);  // crosses mcp only
    CHECK(e0.span == 0b111u);
    CHECK(e3.span == 0b001u);

    HandPose p;
    p.set_flexion(Digit::index, 0, 0.2);
    p.set_flexion(Digit::index, 1, 0.3);
    p.set_flexion(Digit::index, 2, 0.1);
    CHECK(electrode_strain(p, e0) ==
          doctest::Approx(joint_to_strain(0.2) + joint_to_strain(0.3) + joint_to_strain(0.1))
              .epsilon(1e-12));
    CHECK(electrode_strain(p, e3) == doctest::Approx(joint_to_strain(0.2)).epsilon(1e-12));

    HandPose fist;
    for (int j = 0; j < 3; ++j) fist.set_flexion(Digit::index, j, kPi / 4);
    CHECK(electrode_strain(fist, e0) == 0.30);  // 3 x 0.15 clamped
}

TEST_CASE("standard map: 14 intra + 14 inter in the fixed order") {
    const auto map = standard_channel_map(kGeom);
    REQUIRE(int(map.channels().size()) == ChannelMap::kTotalCount);

    int expected = 0;
    for (int d = 0; d < kDigitCount; ++d) {
        const auto dig = static_cast<Digit>(d);
        for (int j = 0; j < HandPose::flexion_count(dig); ++j) {
            const auto& c = map.channel(expected);
            CHECK(c.id == expected);
            CHECK(c.kind == ChannelKind::intra);
            CHECK(c.joint_digit == dig);
            CHECK(c.joint_index == j);
            CHECK(c.a.module == dig);
            CHECK(c.b.module == dig);
            CHECK(c.a.rest_length != c.b.rest_length);
            CHECK(c.c0_pf > 0.0);
            ++expected;
        }
    }
    CHECK(expected == ChannelMap::kIntraCount);

    const Digit pairs[4][2] = {{Digit::thumb, Digit::index},
                               {Digit::index, Digit::middle},
                               {Digit::middle, Digit::ring},
                               {Digit::ring, Digit::little}};
    int counts[4] = {0, 0, 0, 0};
    for (int i = ChannelMap::kIntraCount; i < ChannelMap::kTotalCount; ++i) {
        const auto& c = map.channel(i);
        CHECK(c.kind == ChannelKind::inter);
        CHECK(c.c0_pf > 0.0);
        for (int p = 0; p < 4; ++p) {
            if (c.pair_a == pairs[p][0] && c.pair_b == pairs[p][1]) ++counts[p];
        }
    }
    CHECK(counts[0] == 2);  // thumb-index
    CHECK(counts[1] == 4);
    CHECK(counts[2] == 4);
    CHECK(counts[3] == 4);

    // within each module the trace lengths are strictly graduated
    for (int d = 0; d < kDigitCount; ++d) {
        const auto dig = static_cast<Digit>(d);
        for (int e = 0; e + 1 < electrode_count(dig); ++e) {
            CHECK(electrode_rest_length(kGeom, dig, e) >
                  electrode_rest_length(kGeom, dig, e + 1));
        }
    }
}

TEST_CASE("channel table serializes and parses back unchanged") {
    const auto map = standard_channel_map(kGeom);
    const auto again = ChannelMap::parse(map.to_text(), kGeom);
    for (int i = 0; i < ChannelMap::kTotalCount; ++i) {
        const auto& a = map.channel(i);
        const auto& b = again.channel(i);
        CHECK(a.kind == b.kind);
        CHECK(a.a.module == b.a.module);
        CHECK(a.a.electrode == b.a.electrode);
        CHECK(a.a.rest_length == b.a.rest_length);
        CHECK(a.a.span == b.a.span);
        CHECK(a.b.module == b.b.module);
        CHECK(a.b.electrode == b.b.electrode);
        CHECK(a.joint_digit == b.joint_digit);
        CHECK(a.joint_index == b.joint_index);
        CHECK(a.pair_a == b.pair_a);
        CHECK(a.pair_b == b.pair_b);
        CHECK(a.c0_pf == b.c0_pf);  // %.17g round-trips doubles exactly
    }
    CHECK_THROWS_AS(ChannelMap::parse("0, intra, index, 0, index, 1, index.mcp, 1.0\n", kGeom),
                    config_error);  // not 28 channels
    CHECK_THROWS_AS(ChannelMap::load("/nonexistent/map.csv", kGeom), io_error);
}

TEST_CASE("flat pose reads zero on every channel") {
    const auto map = standard_channel_map(kGeom);
    const HandPose flat;

    const auto intra = intra_channels(flat, kGeom, map);
    for (double v : intra) CHECK(v == 0.0);

    bool saturated = false;
    const auto inter = inter_channels(flat, kGeom, map, &saturated);
    for (double v : inter) CHECK(v == 0.0);
    CHECK_FALSE(saturated);  // flat-pose electrode gaps all exceed the clamp
}

TEST_CASE("a single bent joint drives exactly its own channel") {
    const auto map = standard_channel_map(kGeom);
    HandPose p;
    p.set_flexion(Digit::index, 1, kPi / 2);  // index pip
    const auto intra = intra_channels(p, kGeom, map);
    for (int i = 0; i < ChannelMap::kIntraCount; ++i) {
        if (i == 3) {  // thumb cmc, thumb mcp, index mcp, index pip
            CHECK(std::abs(intra[std::size_t(i)] - 0.135) < 1e-12);
        } else {
            CHECK(intra[std::size_t(i)] == 0.0);
        }
    }
}

TEST_CASE("fist pose saturates every finger channel at 0.135") {
    const auto map = standard_channel_map(kGeom);
    HandPose fist;
    for (int d = 1; d < kDigitCount; ++d) {
        for (int j = 0; j < 3; ++j) fist.set_flexion(static_cast<Digit>(d), j, kPi / 2);
    }
    fist.set_flexion(Digit::thumb, 0, 0.7);
    fist.set_flexion(Digit::thumb, 1, 0.9);
    const auto intra = intra_channels(fist, kGeom, map);
    CHECK(std::abs(intra[0] - strain_to_relcap(joint_to_strain(0.7))) < 1e-12);
    CHECK(std::abs(intra[1] - strain_to_relcap(joint_to_strain(0.9))) < 1e-12);
    for (int i = 2; i < ChannelMap::kIntraCount; ++i) {
        CHECK(std::abs(intra[std::size_t(i)] - 0.135) < 1e-12);
    }
}

TEST_CASE("intra channel value never drops as its joint bends further") {
    const auto map = standard_channel_map(kGeom);
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        HandPose p;
        p.set_flexion(Digit::ring, 2, (kPi / 2) * i / 100.0);
        const auto intra = intra_channels(p, kGeom, map);
        const double v = intra[10];  // ring dip: 2 thumb + 3 index + 3 middle + (mcp,pip,dip)
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("moving fingers apart drives the pair channels negative") {
    const auto map = standard_channel_map(kGeom);
    HandPose p;
    p.set_abduction(Digit::index, 0.2);
    p.set_abduction(Digit::middle, 0.2);
    const auto inter = inter_channels(p, kGeom, map);
    // index-middle block sits at channels 16..19 -> inter bank indices 2..5
    for (int k = 2; k <= 5; ++k) CHECK(inter[std::size_t(k)] < 0.0);
}

TEST_CASE("halving the gap doubles the capacitance, reading +1") {
    const double c0 = parallel_plate_capacitance(0.2, 80.0, 12.0);
    const double c = parallel_plate_capacitance(0.2, 80.0, 6.0);
    CHECK(relative_capacitance(c, c0) == doctest::Approx(1.0).epsilon(1e-12));

    // strictly decreasing in distance
    double prev = std::numeric_limits<double>::infinity();
    for (double d = 1.0; d <= 40.0; d += 0.5) {
        const double v = relative_capacitance(parallel_plate_capacitance(0.2, 80.0, d), c0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("measurement is deterministic for a fixed seed") {
    const auto map = standard_channel_map(kGeom);
    HandPose p;
    p.set_flexion(Digit::middle, 0, 0.8);
    const NoiseConfig noise{60.0, 3.0, 0};
    Rng r1(1234), r2(1234);
    const auto f1 = measure_frame(p, kGeom, map, noise, ChannelMode::full, r1, 42);
    const auto f2 = measure_frame(p, kGeom, map, noise, ChannelMode::full, r2, 42);
    REQUIRE(f1.channels.size() == f2.channels.size());
    CHECK(std::memcmp(f1.channels.data(), f2.channels.data(),
                      f1.channels.size() * sizeof(float)) == 0);
    CHECK(f1.timestamp_ns == 42);
    CHECK_FALSE(f1.has_label());
}

TEST_CASE("degenerate noise settings reproduce the noiseless channels") {
    const auto map = standard_channel_map(kGeom);
    HandPose p;
    p.set_flexion(Digit::little, 1, 1.1);
    p.set_abduction(Digit::index, -0.2);
    Rng rng(7);
    const auto f = measure_frame(p, kGeom, map, kNoNoise, ChannelMode::full, rng, 0, 5);
    REQUIRE(int(f.channels.size()) == 28);
    CHECK(f.label == 5);
    const auto intra = intra_channels(p, kGeom, map);
    const auto inter = inter_channels(p, kGeom, map);
    for (int i = 0; i < 14; ++i) {
        CHECK(f.channels[std::size_t(i)] == float(intra[std::size_t(i)]));
        CHECK(f.channels[std::size_t(14 + i)] == float(inter[std::size_t(i)]));
    }

    Rng rng2(7);
    const auto f14 = measure_frame(p, kGeom, map, kNoNoise, ChannelMode::intra_only, rng2, 0);
    CHECK(int(f14.channels.size()) == 14);
}

TEST_CASE("configured noise floor shows up in a long flat recording") {
    const auto map = standard_channel_map(kGeom);
    const HandPose flat;
    const NoiseConfig noise{60.0, 0.0, 0};
    Rng rng(2718);
    const int n = 10000;
    std::vector<double> sum(28, 0.0), sumsq(28, 0.0);
    for (int t = 0; t < n; ++t) {
        const auto f = measure_frame(flat, kGeom, map, noise, ChannelMode::full, rng, 0);
        for (int i = 0; i < 28; ++i) {
            sum[std::size_t(i)] += f.channels[std::size_t(i)];
            sumsq[std::size_t(i)] += double(f.channels[std::size_t(i)]) * f.channels[std::size_t(i)];
        }
    }
    const double expect = 0.135 * std::pow(10.0, -60.0 / 20.0);
    for (int i = 0; i < 28; ++i) {
        const double mean = sum[std::size_t(i)] / n;
        const double sd = std::sqrt(sumsq[std::size_t(i)] / n - mean * mean);
        CHECK(sd > 0.9 * expect);
        CHECK(sd < 1.1 * expect);
    }
}

TEST_CASE("quantization moves absolute capacitance by at most half a step") {
    const auto map = standard_channel_map(kGeom);
    Rng pose_rng(11);
    const double q_pf = 3.0 * 1e-3;
    for (int trial = 0; trial < 20; ++trial) {
        HandPose p;
        for (int i = 0; i < HandPose::kDofCount; ++i) {
            p.set_angle(i, pose_rng.uniform(HandPose::dof_min(i), HandPose::dof_max(i)));
        }
        Rng ra(900 + trial), rb(900 + trial);
        const auto fq = measure_frame(p, kGeom, map, NoiseConfig{60.0, 3.0, 0},
                                      ChannelMode::full, ra, 0);
        const auto fr = measure_frame(p, kGeom, map, NoiseConfig{60.0, 0.0, 0},
                                      ChannelMode::full, rb, 0);
        for (int i = 0; i < 28; ++i) {
            const double c0 = map.channel(i).c0_pf;
            const double dq = c0 * double(fq.channels[std::size_t(i)]);
            const double dr = c0 * double(fr.channels[std::size_t(i)]);
            CHECK(std::abs(dq - dr) <= q_pf / 2 + 1e-7);
        }
    }
}

TEST_CASE("noise config rejects bad values") {
    CHECK_THROWS_AS((NoiseConfig{0.0, 3.0, 0}).validate(), param_error);
    CHECK_THROWS_AS((NoiseConfig{-5.0, 3.0, 0}).validate(), param_error);
    CHECK_THROWS_AS((NoiseConfig{60.0, -0.1, 0}).validate(), param_error);
    NoiseConfig ok;
    ok.validate();
    CHECK(ok.snr_db == 60.0);
    CHECK(ok.quantization_step_ff == 3.0);
}

TEST_CASE("keypoint clouds flatten to 45 floats and back") {
    const auto cloud = forward_kinematics(HandPose{}, kGeom);
    const auto flat = flatten_cloud(cloud);
    const auto back = unflatten_cloud(flat);
    for (int i = 0; i < 15; ++i) {
        CHECK(float(cloud.points[std::size_t(i)].x) == float(back.points[std::size_t(i)].x));
        CHECK(float(cloud.points[std::size_t(i)].y) == float(back.points[std::size_t(i)].y));
        CHECK(float(cloud.points[std::size_t(i)].z) == float(back.points[std::size_t(i)].z));
    }
}
