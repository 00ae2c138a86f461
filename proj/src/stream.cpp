#include "glovesim/stream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <thread>

#include "glovesim/binio.hpp"
#include "glovesim/error.hpp"

namespace glovesim {

namespace {

double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * double(sorted.size())));
    if (rank == 0) rank = 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}

}  // namespace

std::vector<std::uint8_t> serialize_stream_frame(const Frame& frame) {
    std::ostringstream os(std::ios::binary);
    const std::size_t body = 8 + 4 * frame.channels.size() + 2 + 1 +
                             (frame.has_target ? 4 * frame.target.size() : 0);
    binio::put_u32(os, static_cast<std::uint32_t>(body));
    binio::put_u64(os, frame.timestamp_ns);
    for (const float c : frame.channels) binio::put_f32(os, c);
    binio::put_u16(os, frame.label);
    binio::put_u8(os, frame.has_target ? 1 : 0);
    if (frame.has_target) {
        for (const float t : frame.target) binio::put_f32(os, t);
    }
    const std::string s = os.str();
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

Frame parse_stream_frame(const std::uint8_t* data, std::size_t size, int channels) {
    if (channels <= 0) throw param_error("parse_stream_frame: channel count must be positive");
    if (size < 4) throw protocol_error("stream packet shorter than its length prefix");
    std::istringstream is(std::string(reinterpret_cast<const char*>(data), size),
                          std::ios::binary);
    const std::uint32_t declared = binio::get_u32(is);
    if (std::size_t(declared) + 4 != size) {
        throw protocol_error("stream packet length prefix disagrees with packet size");
    }
    Frame f;
    const std::size_t base = 8 + 4 * std::size_t(channels) + 2 + 1;
    const std::size_t with_target = base + 4 * f.target.size();
    if (declared != base && declared != with_target) {
        throw protocol_error("stream packet body has the wrong size for its channel count");
    }
    f.timestamp_ns = binio::get_u64(is);
    f.channels.resize(std::size_t(channels));
    for (auto& c : f.channels) c = binio::get_f32(is);
    f.label = binio::get_u16(is);
    const std::uint8_t flag = binio::get_u8(is);
    if (flag > 1) throw protocol_error("stream packet target flag is neither 0 nor 1");
    f.has_target = flag == 1;
    if (f.has_target != (declared == with_target)) {
        throw protocol_error("stream packet target flag disagrees with packet size");
    }
    if (f.has_target) {
        for (auto& t : f.target) t = binio::get_f32(is);
    }
    return f;
}

std::string StreamStats::to_text() const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "frames = %zu\n"
                  "latency.mean_ms = %.6f\n"
                  "latency.p95_ms = %.6f\n"
                  "latency.p99_ms = %.6f\n"
                  "latency.max_ms = %.6f\n"
                  "deadline_misses = %zu\n"
                  "duration_s = %.6f\n",
                  frames, mean_ms, p95_ms, p99_ms, max_ms, deadline_misses, duration_s);
    return std::string(buf);
}

FramePipe::FramePipe(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw param_error("frame pipe capacity must be positive");
}

bool FramePipe::push(std::vector<std::uint8_t> bytes) {
    std::unique_lock<std::mutex> lock(mu_);
    room_.wait(lock, [&] { return queue_.size() < capacity_ || closed_; });
    if (closed_) return false;
    queue_.push_back(Packet{std::move(bytes), std::chrono::steady_clock::now()});
    data_.notify_one();
    return true;
}

bool FramePipe::pop(std::vector<std::uint8_t>& bytes,
                    std::chrono::steady_clock::time_point& available) {
    std::unique_lock<std::mutex> lock(mu_);
    data_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return false;
    bytes = std::move(queue_.front().bytes);
    available = queue_.front().available;
    queue_.pop_front();
    room_.notify_one();
    return true;
}

void FramePipe::close() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        closed_ = true;
    }
    room_.notify_all();
    data_.notify_all();
}

StreamStats run_stream(const Dataset& ds, double fps, bool pace,
                       const std::function<void(const Frame&, std::size_t)>& predict) {
    if (ds.frames.empty()) throw param_error("stream replay needs at least one frame");
    if (!(fps > 0.0)) throw param_error("stream replay fps must be positive");
    if (!predict) throw param_error("stream replay needs a prediction callback");

    const int channels = ds.channel_count();
    FramePipe pipe;
    std::exception_ptr producer_error;
    const auto t0 = std::chrono::steady_clock::now();

    std::thread producer([&] {
        try {
            for (std::size_t i = 0; i < ds.frames.size(); ++i) {
                auto bytes = serialize_stream_frame(ds.frames[i]);
                if (pace) {
                    const auto due =
                        t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>(double(i) / fps));
                    std::this_thread::sleep_until(due);
                }
                if (!pipe.push(std::move(bytes))) return;  // consumer side aborted
            }
        } catch (...) {
            producer_error = std::current_exception();
        }
        pipe.close();
    });

    std::vector<double> latencies;
    latencies.reserve(ds.frames.size());
    std::vector<std::uint8_t> bytes;
    std::chrono::steady_clock::time_point available{};
    std::size_t index = 0;
    try {
        while (pipe.pop(bytes, available)) {
            const Frame frame = parse_stream_frame(bytes.data(), bytes.size(), channels);
            predict(frame, index);
            const auto done = std::chrono::steady_clock::now();
            latencies.push_back(
                std::chrono::duration<double, std::milli>(done - available).count());
            ++index;
        }
    } catch (...) {
        pipe.close();
        producer.join();
        throw;
    }
    const auto t_end = std::chrono::steady_clock::now();
    producer.join();
    if (producer_error) std::rethrow_exception(producer_error);

    StreamStats stats;
    stats.frames = latencies.size();
    stats.duration_s = std::chrono::duration<double>(t_end - t0).count();
    if (!latencies.empty()) {
        std::vector<double> sorted = latencies;
        std::sort(sorted.begin(), sorted.end());
        double sum = 0.0;
        for (const double v : latencies) sum += v;
        stats.mean_ms = sum / double(latencies.size());
        stats.p95_ms = percentile(sorted, 0.95);
        stats.p99_ms = percentile(sorted, 0.99);
        stats.max_ms = sorted.back();
        const double budget_ms = 1000.0 / fps;
        for (const double v : latencies) {
            if (v > budget_ms) ++stats.deadline_misses;
        }
    }
    return stats;
}

}  // namespace glovesim
