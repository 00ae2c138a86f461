#include <atomic>
#include <chrono>
#include <cstring>
#include <thread>
#include <vector>

#include <doctest.h>

#include "glovesim/dataset.hpp"
#include "glovesim/error.hpp"
#include "glovesim/stream.hpp"

using namespace glovesim;

namespace {

Frame sample_frame(int channels, bool with_target) {
    Frame f;
    f.timestamp_ns = 123'456'789;
    f.channels.resize(std::size_t(channels));
    for (int i = 0; i < channels; ++i) f.channels[std::size_t(i)] = 0.25f * float(i) - 1.0f;
    f.label = with_target ? Frame::kNoLabel : std::uint16_t(7);
    f.has_target = with_target;
    if (with_target) {
        for (std::size_t i = 0; i < f.target.size(); ++i) f.target[i] = float(i) * 0.5f;
    }
    return f;
}

bool same_payload(const Frame& a, const Frame& b) {
    if (a.timestamp_ns != b.timestamp_ns || a.label != b.label ||
        a.has_target != b.has_target || a.channels.size() != b.channels.size()) {
        return false;
    }
    if (std::memcmp(a.channels.data(), b.channels.data(),
                    a.channels.size() * sizeof(float)) != 0) {
        return false;
    }
    return !a.has_target ||
           std::memcmp(a.target.data(), b.target.data(), sizeof a.target) == 0;
}

Dataset tiny_dataset(std::size_t frames) {
    const auto subjects = make_subjects(1, 11);
    Dataset ds = generate_reconstruction_dataset(subjects[0], {frames, 1, 1}, 120.0,
                                                 NoiseConfig{}, 42);
    return ds;
}

}  // namespace

TEST_CASE("a frame survives the wire format unchanged") {
    for (const bool with_target : {false, true}) {
        const Frame f = sample_frame(with_target ? 28 : 14, with_target);
        const auto bytes = serialize_stream_frame(f);
        const std::size_t body = 8 + 4 * f.channels.size() + 2 + 1 +
                                 (with_target ? 4 * f.target.size() : 0);
        CHECK(bytes.size() == body + 4);
        const Frame back = parse_stream_frame(bytes.data(), bytes.size(),
                                              int(f.channels.size()));
        CHECK(same_payload(f, back));
    }
}

TEST_CASE("the length prefix is little-endian") {
    const Frame f = sample_frame(14, false);
    const auto bytes = serialize_stream_frame(f);
    const std::size_t body = bytes.size() - 4;
    CHECK(bytes[0] == std::uint8_t(body & 0xFF));
    CHECK(bytes[1] == std::uint8_t(body >> 8));
    CHECK(bytes[2] == 0);
    CHECK(bytes[3] == 0);
}

TEST_CASE("malformed packets are rejected as protocol violations") {
    const Frame f = sample_frame(14, false);
    auto bytes = serialize_stream_frame(f);

    SUBCASE("truncated before the prefix ends") {
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), 3, 14), protocol_error);
    }
    SUBCASE("truncated body") {
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size() - 5, 14),
                        protocol_error);
    }
    SUBCASE("trailing garbage") {
        bytes.push_back(0);
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size(), 14), protocol_error);
    }
    SUBCASE("length prefix inflated") {
        bytes[0] = std::uint8_t(bytes[0] + 1);
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size(), 14), protocol_error);
    }
    SUBCASE("channel-count mismatch") {
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size(), 28), protocol_error);
    }
    SUBCASE("target flag outside 0/1") {
        bytes[bytes.size() - 1] = 7;  // flag is the last byte of a targetless record
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size(), 14), protocol_error);
    }
    SUBCASE("target flag set but no target payload") {
        bytes[bytes.size() - 1] = 1;
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size(), 14), protocol_error);
    }
    SUBCASE("nonpositive channel count is a usage error") {
        CHECK_THROWS_AS(parse_stream_frame(bytes.data(), bytes.size(), 0), param_error);
    }
}

TEST_CASE("a full pipe blocks its producer until a packet is drained") {
    FramePipe pipe(2);
    std::atomic<int> pushed{0};
    std::thread producer([&] {
        for (int i = 0; i < 3; ++i) {
            pipe.push(std::vector<std::uint8_t>{std::uint8_t(i)});
            pushed.fetch_add(1);
        }
    });
    // Give the producer ample time to fill the pipe and hit the wall.
    while (pushed.load() < 2) std::this_thread::yield();
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(pushed.load() == 2);

    std::vector<std::uint8_t> bytes;
    std::chrono::steady_clock::time_point available;
    REQUIRE(pipe.pop(bytes, available));
    CHECK(bytes == std::vector<std::uint8_t>{0});
    producer.join();
    CHECK(pushed.load() == 3);

    REQUIRE(pipe.pop(bytes, available));
    CHECK(bytes == std::vector<std::uint8_t>{1});
    REQUIRE(pipe.pop(bytes, available));
    CHECK(bytes == std::vector<std::uint8_t>{2});
}

TEST_CASE("closing the pipe releases a blocked producer") {
    FramePipe pipe(1);
    REQUIRE(pipe.push({1}));
    std::atomic<bool> accepted{true};
    std::thread producer([&] { accepted.store(pipe.push({2})); });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    pipe.close();
    producer.join();
    CHECK_FALSE(accepted.load());

    // Closure still drains what was queued, then reports exhaustion.
    std::vector<std::uint8_t> bytes;
    std::chrono::steady_clock::time_point available;
    CHECK(pipe.pop(bytes, available));
    CHECK(bytes == std::vector<std::uint8_t>{1});
    CHECK_FALSE(pipe.pop(bytes, available));
}

TEST_CASE("pop on a closed empty pipe returns immediately") {
    FramePipe pipe;
    pipe.close();
    std::vector<std::uint8_t> bytes;
    std::chrono::steady_clock::time_point available;
    CHECK_FALSE(pipe.pop(bytes, available));
    CHECK_FALSE(pipe.push({9}));
}

TEST_CASE("a zero-capacity pipe is rejected") {
    CHECK_THROWS_AS(FramePipe(0), param_error);
}

TEST_CASE("replay delivers every frame, in order, byte-exact") {
    const Dataset ds = tiny_dataset(40);
    std::vector<Frame> seen;
    const StreamStats stats = run_stream(ds, 120.0, /*pace=*/false,
                                         [&](const Frame& f, std::size_t idx) {
                                             CHECK(idx == seen.size());
                                             seen.push_back(f);
                                         });
    REQUIRE(seen.size() == ds.frames.size());
    for (std::size_t i = 0; i < seen.size(); ++i) {
        CHECK(same_payload(seen[i], ds.frames[i]));
    }
    CHECK(stats.frames == ds.frames.size());
    CHECK(stats.mean_ms > 0.0);
    CHECK(stats.max_ms >= stats.p99_ms);
    CHECK(stats.p99_ms >= stats.p95_ms);
    CHECK(stats.duration_s > 0.0);
}

TEST_CASE("paced replay takes the scheduled wall-clock time") {
    const Dataset ds = tiny_dataset(58);  // 60 frames total at 600 fps: 0.1 s
    REQUIRE(ds.frames.size() == 60);
    const StreamStats stats =
        run_stream(ds, 600.0, /*pace=*/true, [](const Frame&, std::size_t) {});
    // The final frame is not due before (n-1)/fps; allow generous slack above.
    CHECK(stats.duration_s >= 59.0 / 600.0);
    CHECK(stats.duration_s < 59.0 / 600.0 + 0.5);
}

TEST_CASE("a throwing consumer aborts the replay cleanly") {
    const Dataset ds = tiny_dataset(30);
    std::size_t calls = 0;
    CHECK_THROWS_AS(run_stream(ds, 120.0, false,
                               [&](const Frame&, std::size_t) {
                                   if (++calls == 5) throw protocol_error("boom");
                               }),
                    protocol_error);
    CHECK(calls == 5);
}

TEST_CASE("replay rejects unusable arguments") {
    const Dataset empty;
    CHECK_THROWS_AS(run_stream(empty, 120.0, false, [](const Frame&, std::size_t) {}),
                    param_error);
    const Dataset ds = tiny_dataset(3);
    CHECK_THROWS_AS(run_stream(ds, 0.0, false, [](const Frame&, std::size_t) {}),
                    param_error);
    CHECK_THROWS_AS(run_stream(ds, 120.0, false, nullptr), param_error);
}

TEST_CASE("stream statistics render as stable text") {
    StreamStats s;
    s.frames = 1200;
    s.mean_ms = 0.5;
    s.p95_ms = 1.25;
    s.p99_ms = 2.0;
    s.max_ms = 3.5;
    s.deadline_misses = 2;
    s.duration_s = 10.0;
    const std::string text = s.to_text();
    CHECK(text.find("frames = 1200\n") != std::string::npos);
    CHECK(text.find("latency.mean_ms = 0.500000\n") != std::string::npos);
    CHECK(text.find("latency.p95_ms = 1.250000\n") != std::string::npos);
    CHECK(text.find("latency.p99_ms = 2.000000\n") != std::string::npos);
    CHECK(text.find("latency.max_ms = 3.500000\n") != std::string::npos);
    CHECK(text.find("deadline_misses = 2\n") != std::string::npos);
    CHECK(text.find("duration_s = 10.000000\n") != std::string::npos);
}
