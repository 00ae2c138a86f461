#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <vector>

#include "glovesim/dataset.hpp"

namespace glovesim {

// Wire form of one frame: a little-endian u32 byte length followed by one
// dataset record (timestamp, channels, label, target flag [+ target]).
std::vector<std::uint8_t> serialize_stream_frame(const Frame& frame);
// Parses a length-prefixed packet; protocol_error on any inconsistency.
Frame parse_stream_frame(const std::uint8_t* data, std::size_t size, int channels);

struct StreamStats {
    std::size_t frames = 0;
    double mean_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
    std::size_t deadline_misses = 0;  // latency above the 1/fps budget
    double duration_s = 0.0;

    std::string to_text() const;  // fixed-precision key = value lines
};

// Bounded lossless hand-off between the replay producer and the inference
// consumer. Capacity is counted in packets; push blocks while full.
class FramePipe {
public:
    explicit FramePipe(std::size_t capacity = 16);

    // Blocks until space is available; returns false if the pipe was closed.
    bool push(std::vector<std::uint8_t> bytes);
    // Blocks until a packet or closure; false once closed and drained.
    bool pop(std::vector<std::uint8_t>& bytes,
             std::chrono::steady_clock::time_point& available);
    void close();

private:
    struct Packet {
        std::vector<std::uint8_t> bytes;
        std::chrono::steady_clock::time_point available;
    };
    std::mutex mu_;
    std::condition_variable room_, data_;
    std::deque<Packet> queue_;
    std::size_t capacity_;
    bool closed_ = false;
};

// Replays every frame of `ds` through a FramePipe — paced at `fps` wall
// clock when `pace` is set, as fast as possible otherwise — and calls
// `predict` on each parsed frame in order. Per-frame latency runs from the
// moment a packet is available to the return of `predict`.
StreamStats run_stream(const Dataset& ds, double fps, bool pace,
                       const std::function<void(const Frame&, std::size_t)>& predict);

}  // namespace glovesim
