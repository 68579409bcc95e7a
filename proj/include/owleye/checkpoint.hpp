#ifndef OWLEYE_CHECKPOINT_HPP
#define OWLEYE_CHECKPOINT_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/owlnet.hpp"

namespace owleye {

// Layout:
//   "OWLNET01"
//   u32 header length, header JSON (config, epoch, metrics)
//   u32 block count, then per block:
//     u32 name length, name bytes, u32 rank, u32 extents[rank],
//     float32 values (little-endian)
// Every integer is little-endian. Input standardization and batch norm
// running statistics are stored as ordinary blocks.

inline constexpr char kCheckpointMagic[8] = {'O', 'W', 'L', 'N', 'E', 'T', '0', '1'};

struct CheckpointInfo {
    int epoch = 0;
    nlohmann::json metrics = nlohmann::json::object();
};

inline nlohmann::json config_to_json(const NetworkConfig& cfg) {
    return {{"input_h", cfg.input_h},
            {"input_w", cfg.input_w},
            {"conv_channels", cfg.conv_channels},
            {"pool_after", std::vector<int>(cfg.pool_after.begin(), cfg.pool_after.end())},
            {"fc_sizes", cfg.fc_sizes},
            {"bn_momentum", cfg.bn_momentum},
            {"preset", std::string(to_string(cfg.preset))}};
}

inline NetworkConfig config_from_json(const nlohmann::json& j) {
    try {
        NetworkConfig cfg;
        cfg.input_h = j.at("input_h").get<int>();
        cfg.input_w = j.at("input_w").get<int>();
        cfg.conv_channels = j.at("conv_channels").get<std::vector<int>>();
        const auto pools = j.at("pool_after").get<std::vector<int>>();
        cfg.pool_after = std::set<int>(pools.begin(), pools.end());
        cfg.fc_sizes = j.at("fc_sizes").get<std::vector<int>>();
        cfg.bn_momentum = j.at("bn_momentum").get<double>();
        const auto preset = j.value("preset", std::string("custom"));
        cfg.preset = preset == "paper" ? ScalePreset::Paper : preset == "desk" ? ScalePreset::Desk : ScalePreset::Custom;
        validate(cfg);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, std::string("bad network config: ") + e.what());
    }
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() {
        const std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) fail(ErrorKind::Schema, "checkpoint is truncated");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

template <typename T>
void put_block(std::string& out, const std::string& name, const nn::Tensor<T>& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, static_cast<float>(t[i]));
}

}  // namespace detail

template <typename T>
std::string encode_checkpoint(Network<T>& net, const CheckpointInfo& info = {}) {
    std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
    const nlohmann::json header = {{"config", config_to_json(net.config())}, {"epoch", info.epoch}, {"metrics", info.metrics}};
    const std::string h = header.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(h.size()));
    out += h;

    const auto params = net.params();
    const auto buffers = net.buffers();
    detail::put_u32(out, static_cast<std::uint32_t>(params.size() + buffers.size() + 2));
    const auto& s = net.input_stats();
    detail::put_block(out, "input.mean", nn::Tensor<float>({3}, std::vector<float>(s.mean.begin(), s.mean.end())));
    detail::put_block(out, "input.std", nn::Tensor<float>({3}, std::vector<float>(s.stddev.begin(), s.stddev.end())));
    for (auto* p : params) detail::put_block(out, p->name, p->value);
    for (auto* b : buffers) detail::put_block(out, b->name, b->value);
    return out;
}

struct LoadedCheckpoint {
    Network<float> net;
    CheckpointInfo info;
};

inline LoadedCheckpoint decode_checkpoint(std::string bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
        fail(ErrorKind::Schema, "not an OWLNET01 checkpoint");
    }
    detail::Reader rd(bytes.substr(8));
    const std::uint32_t hlen = rd.u32();
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(rd.bytes(hlen));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.byte, std::string("checkpoint header: ") + e.what());
    }
    LoadedCheckpoint ck{Network<float>(config_from_json(header.at("config"))), {}};
    ck.info.epoch = header.value("epoch", 0);
    if (header.contains("metrics")) ck.info.metrics = header["metrics"];

    std::map<std::string, nn::Tensor<float>> blocks;
    const std::uint32_t count = rd.u32();
    for (std::uint32_t b = 0; b < count; ++b) {
        std::string name = rd.bytes(rd.u32());
        const std::uint32_t rank = rd.u32();
        nn::Shape shape(rank);
        for (auto& d : shape) d = rd.u32();
        nn::Tensor<float> t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rd.f32();
        blocks.emplace(std::move(name), std::move(t));
    }
    if (!rd.done()) fail(ErrorKind::Schema, "trailing bytes after checkpoint blocks");

    auto take = [&](const std::string& name, const nn::Shape& expected) -> nn::Tensor<float>& {
        auto it = blocks.find(name);
        if (it == blocks.end()) fail(ErrorKind::Schema, "checkpoint is missing block '" + name + "'");
        if (it->second.shape() != expected) {
            fail(ErrorKind::Schema, "block '" + name + "' has shape " + nn::to_string(it->second.shape()) + ", expected " +
                                        nn::to_string(expected));
        }
        return it->second;
    };
    const auto& mean = take("input.mean", {3});
    const auto& sd = take("input.std", {3});
    for (std::size_t c = 0; c < 3; ++c) {
        ck.net.input_stats().mean[c] = mean[c];
        ck.net.input_stats().stddev[c] = sd[c];
    }
    for (auto* p : ck.net.params()) p->value = take(p->name, p->value.shape());
    for (auto* b : ck.net.buffers()) b->value = take(b->name, b->value.shape());
    return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, Network<T>& net, const CheckpointInfo& info = {}) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    const std::string bytes = encode_checkpoint(net, info);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(std::move(bytes));
}

}  // namespace owleye

#endif
