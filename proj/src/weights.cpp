#include "glovesim/nn/weights.hpp"

#include <fstream>

#include "glovesim/binio.hpp"

namespace glovesim::nn {

namespace {
constexpr char kMagic[5] = "CGWT";
constexpr std::uint16_t kVersion = 1;
}  // namespace

const Tensor& WeightFile::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return t;
    }
    throw lookup_error("weight file has no tensor named " + name);
}

bool WeightFile::contains(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return true;
    }
    return false;
}

void save_weights(const std::string& path, ModelKind kind,
                  const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + path);
    binio::put_magic(os, kMagic);
    binio::put_u16(os, kVersion);
    binio::put_u8(os, static_cast<std::uint8_t>(kind));
    binio::put_u64(os, tensors.size());
    for (const auto& [name, t] : tensors) {
        if (name.size() > 0xFFFF) throw param_error("tensor name too long: " + name);
        binio::put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        binio::put_u8(os, static_cast<std::uint8_t>(t.rank()));
        for (int i = 0; i < t.rank(); ++i) binio::put_i32(os, t.dim(i));
        for (const float v : t.values()) binio::put_f32(os, v);
    }
    if (!os) throw io_error("write failed: " + path);
}

void save_params(const std::string& path, ModelKind kind, const ModelParams& params) {
    std::vector<std::pair<std::string, Tensor>> tensors;
    tensors.reserve(params.entries.size());
    for (const auto& e : params.entries) tensors.emplace_back(e.name, e.tensor);
    save_weights(path, kind, tensors);
}

WeightFile load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open: " + path);
    binio::expect_magic(is, kMagic, "weight");
    const std::uint16_t version = binio::get_u16(is);
    if (version != kVersion) throw io_error("unsupported weight file version");
    WeightFile out;
    out.kind = static_cast<ModelKind>(binio::get_u8(is));
    const std::uint64_t count = binio::get_u64(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = binio::get_u16(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw io_error("unexpected end of file");
        const int rank = binio::get_u8(is);
        if (rank < 1 || rank > 3) throw io_error("weight tensor rank out of range");
        int dims[3] = {1, 1, 1};
        std::size_t size = 1;
        for (int d = 0; d < rank; ++d) {
            dims[d] = binio::get_i32(is);
            if (dims[d] <= 0) throw io_error("weight tensor dimension out of range");
            size *= static_cast<std::size_t>(dims[d]);
        }
        std::vector<float> values(size);
        for (auto& v : values) v = binio::get_f32(is);
        Tensor t = rank == 1   ? Tensor::from(std::move(values), {dims[0]})
                   : rank == 2 ? Tensor::from(std::move(values), {dims[0], dims[1]})
                               : Tensor::from(std::move(values), {dims[0], dims[1], dims[2]});
        out.tensors.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

void load_into_params(const WeightFile& file, ModelParams& params) {
    for (auto& e : params.entries) {
        const Tensor& src = e.tensor;
        const Tensor& loaded = file.find(e.name);
        if (loaded.rank() != src.rank() || loaded.size() != src.size()) {
            throw shape_error("shape mismatch for tensor " + e.name);
        }
        for (int i = 0; i < src.rank(); ++i) {
            if (loaded.dim(i) != src.dim(i)) throw shape_error("shape mismatch for tensor " + e.name);
        }
        e.tensor.values() = loaded.values();
    }
}

}  // namespace glovesim::nn
